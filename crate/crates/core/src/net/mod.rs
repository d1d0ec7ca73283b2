//! The two-branch classification network.
//!
//! An RGB branch extracts feature maps, a saliency branch maps the same image
//! to a single-channel map, and the modulation layer combines them before a
//! small shared head produces class probabilities. Training happens in two
//! phases: the RGB branch and head are pretrained with the saliency branch
//! disabled, then frozen while only the saliency branch trains on the same
//! classification loss. The saliency map is never supervised directly.

mod checkpoint;
mod modulation;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use modulation::{modulate, modulate_grads, modulate_op};

use std::collections::HashSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, DatasetManifest, PopoutDataset};
use crate::map::{MapError, SaliencyMap};
use crate::tensor::{
    bilinear_upsample, conv2d, maxpool2d, relu, sgd_step, softmax, Parameter, Tape, Tensor,
    TensorError, Var,
};

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid network config: {detail}")]
    Config { detail: String },
    #[error("train_selective requires pretrain_rgb to have run first")]
    NotPretrained,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss in {phase} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        phase: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error("bad checkpoint: {detail}")]
    Checkpoint { detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Geometry and sizes of the two-branch network.
///
/// The convolution/pool stack is fixed; the config chooses channel widths,
/// the square input size (divisible by 8), and the class count. The RGB
/// branch ends at `input/4` spatial resolution, the saliency branch at
/// `input/8` before its map is upsampled to the modulation resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_size: usize,
    pub rgb_channels_per_layer: Vec<usize>,
    /// Three conv stages plus the final 1x1 stage; the last entry must be 1.
    pub saliency_channels_per_layer: Vec<usize>,
    pub head_channels: usize,
    pub num_classes: usize,
    pub modulation_resolution: (usize, usize),
    pub seed: u64,
}

impl NetworkConfig {
    /// Desk-scale defaults: 64x64 input, 16/32/32 RGB, 16/32/48/1 saliency.
    pub fn toy(num_classes: usize, seed: u64) -> Self {
        Self::with_input_size(64, num_classes, seed)
    }

    pub fn with_input_size(input_size: usize, num_classes: usize, seed: u64) -> Self {
        Self {
            input_size,
            rgb_channels_per_layer: vec![16, 32, 32],
            saliency_channels_per_layer: vec![16, 32, 48, 1],
            head_channels: 32,
            num_classes,
            modulation_resolution: (input_size / 4, input_size / 4),
            seed,
        }
    }

    /// Small-channel variant for gradient checks.
    pub fn tiny(input_size: usize, num_classes: usize, seed: u64) -> Self {
        Self {
            input_size,
            rgb_channels_per_layer: vec![4, 6, 6],
            saliency_channels_per_layer: vec![4, 6, 8, 1],
            head_channels: 6,
            num_classes,
            modulation_resolution: (input_size / 4, input_size / 4),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let fail = |detail: String| Err(NetError::Config { detail });
        if self.input_size < 16 || !self.input_size.is_multiple_of(8) {
            return fail(format!(
                "input_size {} must be >= 16 and divisible by 8",
                self.input_size
            ));
        }
        if self.rgb_channels_per_layer.len() != 3 {
            return fail("rgb branch needs exactly 3 conv stages".into());
        }
        if self.saliency_channels_per_layer.len() != 4 {
            return fail("saliency branch needs 3 conv stages plus the 1x1 stage".into());
        }
        if *self.saliency_channels_per_layer.last().unwrap() != 1 {
            return fail("saliency branch must end in exactly one output channel".into());
        }
        if self.rgb_channels_per_layer.contains(&0)
            || self.saliency_channels_per_layer.contains(&0)
            || self.head_channels == 0
        {
            return fail("channel counts must be positive".into());
        }
        if self.num_classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.num_classes));
        }
        let expected = (self.input_size / 4, self.input_size / 4);
        if self.modulation_resolution != expected {
            return fail(format!(
                "modulation_resolution {:?} must equal {:?} for input {}",
                self.modulation_resolution, expected, self.input_size
            ));
        }
        Ok(())
    }

    /// Saliency-branch output resolution before upsampling.
    pub fn saliency_native_resolution(&self) -> (usize, usize) {
        (self.input_size / 8, self.input_size / 8)
    }
}

/// Draws Xavier-uniform weights (`+-sqrt(6/(fan_in+fan_out))`) and zero
/// biases, deterministically under `seed`. Rank-1 tensors are treated as
/// biases; rank-4 as conv kernels; rank-2 as linear weights.
pub fn init_xavier(params: &mut [Parameter], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in params.iter_mut() {
        let shape = p.value.shape().to_vec();
        match shape.len() {
            1 => p.value.data_mut().fill(0.0),
            2 => {
                let (fan_in, fan_out) = (shape[1], shape[0]);
                fill_xavier(&mut p.value, fan_in, fan_out, &mut rng);
            }
            4 => {
                let receptive = shape[2] * shape[3];
                fill_xavier(&mut p.value, shape[1] * receptive, shape[0] * receptive, &mut rng);
            }
            _ => unreachable!("no rank-{} parameters in this network", shape.len()),
        }
        p.zero_grad();
    }
}

fn fill_xavier(value: &mut Tensor, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in value.data_mut() {
        *v = rng.gen_range(-a..a);
    }
}

/// In-memory classification dataset: images of identical shape plus labels.
#[derive(Debug, Clone, Default)]
pub struct ClassificationSet {
    pub images: Vec<Tensor>,
    pub labels: Vec<usize>,
}

impl ClassificationSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn from_popout(dataset: &PopoutDataset) -> Self {
        Self {
            images: dataset.items.iter().map(|i| i.image.clone()).collect(),
            labels: dataset.items.iter().map(|i| i.label).collect(),
        }
    }

    /// Loads images and labels from a manifest; every entry needs a label.
    pub fn from_manifest(manifest: &DatasetManifest) -> Result<Self, NetError> {
        let mut set = Self::default();
        for entry in &manifest.entries {
            let label = entry.label.ok_or_else(|| {
                NetError::Data(DataError::Manifest {
                    path: manifest.root().join("manifest.json"),
                    detail: format!("entry `{}` has no label; cannot train on it", entry.id),
                })
            })?;
            set.images
                .push(crate::data::load_image(&manifest.resolve(&entry.image))?);
            set.labels.push(label as usize);
        }
        Ok(set)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn stack(&self, indices: &[usize]) -> Tensor {
        let shape = self.images[indices[0]].shape();
        let (c, h, w) = (shape[0], shape[1], shape[2]);
        let mut data = Vec::with_capacity(indices.len() * c * h * w);
        for &i in indices {
            data.extend_from_slice(self.images[i].data());
        }
        Tensor::new(&[indices.len(), c, h, w], data).expect("uniform image shapes")
    }
}

/// Hyperparameters for one training phase.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

/// Per-batch losses for one phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub losses: Vec<f64>,
    pub epochs: usize,
    pub batches_per_epoch: usize,
}

/// Per-image standardization (zero mean, unit variance over all channels).
/// Inputs arrive in [0,1]; training and inference share this preprocessing.
fn standardize_images(images: &Tensor) -> Tensor {
    let shape = images.shape();
    let (n, per) = (shape[0], shape[1] * shape[2] * shape[3]);
    let mut out = images.clone();
    for i in 0..n {
        let slice = &mut out.data_mut()[i * per..(i + 1) * per];
        let mean = slice.iter().sum::<f64>() / per as f64;
        let var = slice.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / per as f64;
        let inv = 1.0 / var.sqrt().max(1e-6);
        for v in slice.iter_mut() {
            *v = (*v - mean) * inv;
        }
    }
    out
}

mod pidx {
    pub const RGB1_W: usize = 0;
    pub const RGB1_B: usize = 1;
    pub const RGB2_W: usize = 2;
    pub const RGB2_B: usize = 3;
    pub const RGB3_W: usize = 4;
    pub const RGB3_B: usize = 5;
    pub const SAL1_W: usize = 6;
    pub const SAL1_B: usize = 7;
    pub const SAL2_W: usize = 8;
    pub const SAL2_B: usize = 9;
    pub const SAL3_W: usize = 10;
    pub const SAL3_B: usize = 11;
    pub const SAL4_W: usize = 12;
    pub const SAL4_B: usize = 13;
    pub const HEAD_CONV_W: usize = 14;
    pub const HEAD_CONV_B: usize = 15;
    pub const HEAD_FC_W: usize = 16;
    pub const HEAD_FC_B: usize = 17;
}

struct ForwardPass {
    tape: Tape,
    logits: Var,
    param_vars: Vec<(usize, Var)>,
}

/// The two-branch network: parameters, freeze state, and training phases.
pub struct TwoBranchNet {
    config: NetworkConfig,
    params: Vec<Parameter>,
    frozen: HashSet<String>,
    pretrained: bool,
}

impl TwoBranchNet {
    pub fn new(config: NetworkConfig) -> Result<Self, NetError> {
        config.validate()?;
        let r = &config.rgb_channels_per_layer;
        let s = &config.saliency_channels_per_layer;
        let hc = config.head_channels;
        let k = config.num_classes;
        let conv = |name: &str, cout: usize, cin: usize, ksize: usize| {
            [
                Parameter::new(
                    format!("{name}.weight"),
                    Tensor::zeros(&[cout, cin, ksize, ksize]),
                ),
                Parameter::new(format!("{name}.bias"), Tensor::zeros(&[cout])),
            ]
        };
        let mut params = Vec::with_capacity(18);
        params.extend(conv("rgb.conv1", r[0], 3, 5));
        params.extend(conv("rgb.conv2", r[1], r[0], 3));
        params.extend(conv("rgb.conv3", r[2], r[1], 3));
        params.extend(conv("sal.conv1", s[0], 3, 5));
        params.extend(conv("sal.conv2", s[1], s[0], 3));
        params.extend(conv("sal.conv3", s[2], s[1], 3));
        params.extend(conv("sal.conv4", s[3], s[2], 1));
        params.extend(conv("head.conv", hc, r[2], 3));
        params.push(Parameter::new(
            "head.fc.weight",
            Tensor::zeros(&[k, hc]),
        ));
        params.push(Parameter::new("head.fc.bias", Tensor::zeros(&[k])));
        init_xavier(&mut params, config.seed);
        Ok(Self {
            config,
            params,
            frozen: HashSet::new(),
            pretrained: false,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Parameter> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    pub fn frozen(&self) -> &HashSet<String> {
        &self.frozen
    }

    pub fn is_pretrained(&self) -> bool {
        self.pretrained
    }

    /// Marks the pretrain phase as done without training (for loading
    /// checkpoints produced elsewhere).
    pub fn mark_pretrained(&mut self) {
        self.pretrained = true;
    }

    fn check_batch(&self, images: &Tensor) -> Result<(), NetError> {
        let shape = images.shape();
        if shape.len() != 4 || shape[1] != 3 {
            return Err(NetError::Config {
                detail: format!("expected [N,3,H,W] images, got {shape:?}"),
            });
        }
        if shape[2] != self.config.input_size || shape[3] != self.config.input_size {
            return Err(NetError::Config {
                detail: format!(
                    "expected {0}x{0} input, got {1}x{2}",
                    self.config.input_size, shape[2], shape[3]
                ),
            });
        }
        Ok(())
    }

    fn build_forward(
        &self,
        images: &Tensor,
        with_saliency: bool,
        train: bool,
    ) -> Result<ForwardPass, NetError> {
        self.check_batch(images)?;
        let mut tape = Tape::new();
        let mut param_vars = Vec::new();
        let mut pv = |tape: &mut Tape, idx: usize| -> Var {
            let p = &self.params[idx];
            let var = tape.leaf(p.value.clone(), train && !self.frozen.contains(&p.name));
            param_vars.push((idx, var));
            var
        };
        let x = tape.constant(standardize_images(images));

        let w = pv(&mut tape, pidx::RGB1_W);
        let b = pv(&mut tape, pidx::RGB1_B);
        let r = tape.conv2d(x, w, b, 2, 2)?;
        let r = tape.relu(r);
        let w = pv(&mut tape, pidx::RGB2_W);
        let b = pv(&mut tape, pidx::RGB2_B);
        let r = tape.conv2d(r, w, b, 2, 1)?;
        let r = tape.relu(r);
        let w = pv(&mut tape, pidx::RGB3_W);
        let b = pv(&mut tape, pidx::RGB3_B);
        let r = tape.conv2d(r, w, b, 1, 1)?;
        let r = tape.relu(r);

        let features = if with_saliency {
            let w = pv(&mut tape, pidx::SAL1_W);
            let b = pv(&mut tape, pidx::SAL1_B);
            let s = tape.conv2d(x, w, b, 2, 2)?;
            let s = tape.relu(s);
            let s = tape.maxpool2d(s, 2, 2)?;
            let w = pv(&mut tape, pidx::SAL2_W);
            let b = pv(&mut tape, pidx::SAL2_B);
            let s = tape.conv2d(s, w, b, 1, 1)?;
            let s = tape.relu(s);
            let s = tape.maxpool2d(s, 2, 2)?;
            let w = pv(&mut tape, pidx::SAL3_W);
            let b = pv(&mut tape, pidx::SAL3_B);
            let s = tape.conv2d(s, w, b, 1, 1)?;
            let s = tape.relu(s);
            let w = pv(&mut tape, pidx::SAL4_W);
            let b = pv(&mut tape, pidx::SAL4_B);
            let s = tape.conv2d(s, w, b, 1, 0)?;
            let s = tape.relu(s);
            let (mh, mw) = self.config.modulation_resolution;
            let s_up = tape.bilinear_upsample(s, mh, mw)?;
            modulate_op(&mut tape, r, s_up)?
        } else {
            r
        };

        let w = pv(&mut tape, pidx::HEAD_CONV_W);
        let b = pv(&mut tape, pidx::HEAD_CONV_B);
        let h = tape.conv2d(features, w, b, 1, 1)?;
        let h = tape.relu(h);
        let g = tape.global_avg_pool(h)?;
        let w = pv(&mut tape, pidx::HEAD_FC_W);
        let b = pv(&mut tape, pidx::HEAD_FC_B);
        let logits = tape.linear(g, w, b)?;

        Ok(ForwardPass {
            tape,
            logits,
            param_vars,
        })
    }

    /// Class probabilities `p(y|I)` through the full two-branch network.
    pub fn forward(&self, images: &Tensor) -> Result<Tensor, NetError> {
        let pass = self.build_forward(images, true, false)?;
        Ok(softmax(pass.tape.value(pass.logits))?)
    }

    /// Class probabilities with the saliency branch disabled (`S = 0`).
    pub fn forward_rgb_only(&self, images: &Tensor) -> Result<Tensor, NetError> {
        let pass = self.build_forward(images, false, false)?;
        Ok(softmax(pass.tape.value(pass.logits))?)
    }

    /// Single-channel nonnegative map at the branch's native resolution.
    ///
    /// Works for any input size with both sides at least 8; the branch is
    /// fully convolutional.
    pub fn saliency_branch_forward(&self, images: &Tensor) -> Result<Tensor, NetError> {
        let shape = images.shape();
        if shape.len() != 4 || shape[1] != 3 {
            return Err(NetError::Config {
                detail: format!("expected [N,3,H,W] images, got {shape:?}"),
            });
        }
        if shape[2] < 8 || shape[3] < 8 {
            return Err(NetError::Config {
                detail: format!("saliency branch needs at least 8x8 input, got {shape:?}"),
            });
        }
        let p = |i: usize| &self.params[i].value;
        let images = standardize_images(images);
        let s = relu(&conv2d(&images, p(pidx::SAL1_W), p(pidx::SAL1_B), 2, 2)?);
        let s = maxpool2d(&s, 2, 2)?.0;
        let s = relu(&conv2d(&s, p(pidx::SAL2_W), p(pidx::SAL2_B), 1, 1)?);
        let s = maxpool2d(&s, 2, 2)?.0;
        let s = relu(&conv2d(&s, p(pidx::SAL3_W), p(pidx::SAL3_B), 1, 1)?);
        let s = relu(&conv2d(&s, p(pidx::SAL4_W), p(pidx::SAL4_B), 1, 0)?);
        Ok(s)
    }

    /// Saliency map for one `[3,H,W]` image, bilinearly upsampled to the
    /// image's own resolution.
    pub fn predict_saliency(&self, image: &Tensor) -> Result<SaliencyMap, NetError> {
        let shape = image.shape();
        if shape.len() != 3 || shape[0] != 3 {
            return Err(NetError::Config {
                detail: format!("expected a [3,H,W] image, got {shape:?}"),
            });
        }
        let (h, w) = (shape[1], shape[2]);
        let batch = image.reshape(&[1, 3, h, w])?;
        let native = self.saliency_branch_forward(&batch)?;
        let up = bilinear_upsample(&native, h, w)?;
        Ok(SaliencyMap::new(w, h, up.into_data())?)
    }

    /// One forward/backward pass: returns the batch loss and accumulates
    /// gradients into each reachable, unfrozen parameter's `grad`. Parameters
    /// the loss does not depend on keep their zero gradient.
    pub fn loss_and_param_grads(
        &mut self,
        images: &Tensor,
        labels: &[usize],
        with_saliency: bool,
    ) -> Result<f64, NetError> {
        let mut pass = self.build_forward(images, with_saliency, true)?;
        let loss_var = pass.tape.softmax_cross_entropy(pass.logits, labels)?;
        let loss = pass.tape.value(loss_var).item();
        pass.tape.backward(loss_var)?;
        for &(idx, var) in &pass.param_vars {
            if let Some(g) = pass.tape.grad(var) {
                self.params[idx].grad.add_assign(g);
            }
        }
        Ok(loss)
    }

    fn train_phase(
        &mut self,
        phase: &'static str,
        data: &ClassificationSet,
        with_saliency: bool,
        opts: TrainOptions,
    ) -> Result<TrainLog, NetError> {
        if data.is_empty() {
            return Err(NetError::EmptyDataset);
        }
        let batch_size = opts.batch_size.max(1);
        let batches_per_epoch = data.len().div_ceil(batch_size);
        let mut losses = Vec::with_capacity(opts.epochs * batches_per_epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let frozen_mask: Vec<bool> = self
            .params
            .iter()
            .map(|p| self.frozen.contains(&p.name))
            .collect();
        let mut order: Vec<usize> = (0..data.len()).collect();
        for epoch in 0..opts.epochs {
            order.shuffle(&mut rng);
            for (batch_idx, batch) in order.chunks(batch_size).enumerate() {
                let x = data.stack(batch);
                let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
                let mut pass = self.build_forward(&x, with_saliency, true)?;
                let loss_var = pass.tape.softmax_cross_entropy(pass.logits, &labels)?;
                let loss = pass.tape.value(loss_var).item();
                if !loss.is_finite() {
                    return Err(NetError::NonFiniteLoss {
                        phase,
                        epoch,
                        batch: batch_idx,
                    });
                }
                losses.push(loss);
                pass.tape.backward(loss_var)?;
                for &(idx, var) in &pass.param_vars {
                    if let Some(g) = pass.tape.grad(var) {
                        self.params[idx].grad.add_assign(g);
                    }
                }
                let mut trainable: Vec<&mut Parameter> = self
                    .params
                    .iter_mut()
                    .zip(&frozen_mask)
                    .filter(|(_, &frozen)| !frozen)
                    .map(|(p, _)| p)
                    .collect();
                sgd_step(&mut trainable, opts.lr);
            }
        }
        Ok(TrainLog {
            losses,
            epochs: opts.epochs,
            batches_per_epoch,
        })
    }

    /// Phase one: trains the RGB branch and head on the classification task
    /// with the saliency branch disabled.
    pub fn pretrain_rgb(
        &mut self,
        data: &ClassificationSet,
        opts: TrainOptions,
    ) -> Result<TrainLog, NetError> {
        let log = self.train_phase("pretrain", data, false, opts)?;
        self.pretrained = true;
        Ok(log)
    }

    /// Phase two: freezes the RGB branch and head, then trains only the
    /// saliency branch on the same classification loss.
    pub fn train_selective(
        &mut self,
        data: &ClassificationSet,
        opts: TrainOptions,
    ) -> Result<TrainLog, NetError> {
        if !self.pretrained {
            return Err(NetError::NotPretrained);
        }
        self.frozen = self
            .params
            .iter()
            .filter(|p| !p.name.starts_with("sal."))
            .map(|p| p.name.clone())
            .collect();
        self.train_phase("selective", data, true, opts)
    }

    /// Top-1 accuracy over the set.
    pub fn accuracy(&self, data: &ClassificationSet, with_saliency: bool) -> Result<f64, NetError> {
        if data.is_empty() {
            return Err(NetError::EmptyDataset);
        }
        let mut correct = 0usize;
        let indices: Vec<usize> = (0..data.len()).collect();
        for batch in indices.chunks(64) {
            let x = data.stack(batch);
            let probs = if with_saliency {
                self.forward(&x)?
            } else {
                self.forward_rgb_only(&x)?
            };
            let k = self.config.num_classes;
            for (row, &i) in batch.iter().enumerate() {
                let scores = &probs.data()[row * k..(row + 1) * k];
                let mut best = 0;
                for (j, &v) in scores.iter().enumerate() {
                    if v > scores[best] {
                        best = j;
                    }
                }
                if best == data.labels[i] {
                    correct += 1;
                }
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }

    /// Writes all parameters in the fixed binary checkpoint format.
    pub fn save(&self, path: &std::path::Path) -> Result<(), NetError> {
        save_checkpoint(path, &self.params)
    }

    /// Replaces parameter values from a checkpoint, validating names and shapes.
    pub fn load_params(&mut self, loaded: Vec<(String, Tensor)>) -> Result<(), NetError> {
        if loaded.len() != self.params.len() {
            return Err(NetError::Checkpoint {
                detail: format!(
                    "checkpoint has {} parameters, network needs {}",
                    loaded.len(),
                    self.params.len()
                ),
            });
        }
        for (name, value) in loaded {
            let p = self
                .params
                .iter_mut()
                .find(|p| p.name == name)
                .ok_or_else(|| NetError::Checkpoint {
                    detail: format!("unknown parameter `{name}`"),
                })?;
            if p.value.shape() != value.shape() {
                return Err(NetError::Checkpoint {
                    detail: format!(
                        "parameter `{name}`: checkpoint shape {:?} != expected {:?}",
                        value.shape(),
                        p.value.shape()
                    ),
                });
            }
            p.value = value;
            p.zero_grad();
        }
        Ok(())
    }
}
