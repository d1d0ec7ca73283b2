//! Two-branch network behavior: initialization, modulation identity, the
//! selective-training freeze contract, checkpoints, and prediction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saliency_core::data::{gen_popout_dataset, PopoutSpec};
use saliency_core::net::{
    init_xavier, load_checkpoint, modulate, save_checkpoint, ClassificationSet, NetworkConfig,
    TrainOptions, TwoBranchNet,
};
use saliency_core::tensor::{Parameter, Tensor};

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let data = (0..shape.iter().product::<usize>())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Tensor::new(shape, data).unwrap()
}

fn tiny_opts(epochs: usize, seed: u64) -> TrainOptions {
    TrainOptions {
        epochs,
        lr: 0.05,
        batch_size: 8,
        seed,
    }
}

/// Full-canvas single-color images: linearly separable from pooled features.
fn separable_set(n: usize, input: usize, classes: usize) -> ClassificationSet {
    let mut set = ClassificationSet::default();
    for i in 0..n {
        let label = i % classes;
        let mut img = Tensor::zeros(&[3, input, input]);
        let level = 0.2 + 0.6 * (label as f64 / classes as f64);
        for c in 0..3 {
            let v = if c == label % 3 { level } else { 0.05 };
            let plane = input * input;
            img.data_mut()[c * plane..(c + 1) * plane].fill(v);
        }
        set.images.push(img);
        set.labels.push(label);
    }
    set
}

#[test]
fn modulate_zero_saliency_is_bitwise_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(211);
    for _ in 0..100 {
        let r = rand_tensor(&mut rng, &[2, 3, 4, 4]);
        let s = Tensor::zeros(&[2, 1, 4, 4]);
        let out = modulate(&r, &s).unwrap();
        assert_eq!(out, r, "modulate(R, 0) must equal R exactly");
    }
}

#[test]
fn modulate_annihilator_and_hand_case() {
    let r = Tensor::zeros(&[1, 2, 3, 3]);
    let s = Tensor::full(&[1, 1, 3, 3], 0.7);
    assert!(modulate(&r, &s).unwrap().data().iter().all(|&v| v == 0.0));

    // R=[[1,2],[3,4]], S=[[0.5,0],[1,0.25]] -> [[1.5,2],[6,5]].
    let r = Tensor::new(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let s = Tensor::new(&[1, 1, 2, 2], vec![0.5, 0.0, 1.0, 0.25]).unwrap();
    let out = modulate(&r, &s).unwrap();
    assert_eq!(out.data(), &[1.5, 2.0, 6.0, 5.0]);
}

#[test]
fn modulate_rejects_spatial_mismatch() {
    let r = Tensor::zeros(&[1, 2, 4, 4]);
    let s = Tensor::zeros(&[1, 1, 2, 4]);
    let err = modulate(&r, &s).unwrap_err();
    assert!(err.to_string().contains("height"), "{err}");
}

#[test]
fn xavier_statistics_bias_and_determinism() {
    // 1000-element layer: empirical variance within 20% of 2/(fan_in+fan_out).
    let mut params = vec![
        Parameter::new("w", Tensor::zeros(&[25, 40])),
        Parameter::new("b", Tensor::zeros(&[25])),
    ];
    init_xavier(&mut params, 123);
    let data = params[0].value.data();
    let mean: f64 = data.iter().sum::<f64>() / data.len() as f64;
    let var: f64 = data.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / data.len() as f64;
    let expect = 2.0 / (40.0 + 25.0);
    assert!(
        (var - expect).abs() / expect < 0.2,
        "variance {var} vs expected {expect}"
    );
    assert!(params[1].value.data().iter().all(|&b| b == 0.0));

    let mut again = vec![
        Parameter::new("w", Tensor::zeros(&[25, 40])),
        Parameter::new("b", Tensor::zeros(&[25])),
    ];
    init_xavier(&mut again, 123);
    assert_eq!(again[0].value, params[0].value);
}

#[test]
fn network_construction_validates_config() {
    let mut config = NetworkConfig::toy(8, 1);
    config.saliency_channels_per_layer = vec![16, 32, 48, 2];
    assert!(TwoBranchNet::new(config).is_err());

    let mut config = NetworkConfig::toy(8, 1);
    config.modulation_resolution = (10, 10);
    assert!(TwoBranchNet::new(config).is_err());

    let config = NetworkConfig::toy(8, 1);
    let net = TwoBranchNet::new(config).unwrap();
    assert_eq!(net.params().len(), 18);
}

#[test]
fn saliency_branch_output_contract() {
    let config = NetworkConfig::tiny(16, 3, 5);
    let net = TwoBranchNet::new(config).unwrap();

    // Zero weights: zero map.
    let mut zeroed = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 5)).unwrap();
    for name in ["sal.conv4.weight", "sal.conv4.bias"] {
        let p = zeroed.param_mut(name).unwrap();
        p.value.data_mut().fill(0.0);
    }
    let x = Tensor::full(&[2, 3, 16, 16], 0.3);
    let map = zeroed.saliency_branch_forward(&x).unwrap();
    assert!(map.data().iter().all(|&v| v == 0.0));

    // Exactly one channel, nonnegative, native resolution input/8.
    let out = net.saliency_branch_forward(&x).unwrap();
    assert_eq!(out.shape(), &[2, 1, 2, 2]);
    assert!(out.data().iter().all(|&v| v >= 0.0));

    // Deterministic replay under the same config seed.
    let net2 = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 5)).unwrap();
    assert_eq!(net2.saliency_branch_forward(&x).unwrap(), out);
}

#[test]
fn forward_probabilities_are_valid_and_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(223);
    let net = TwoBranchNet::new(NetworkConfig::tiny(16, 4, 9)).unwrap();
    let one = rand_tensor(&mut rng, &[1, 3, 16, 16]).map(|v| v.abs());
    let mut two = Tensor::zeros(&[2, 3, 16, 16]);
    two.data_mut()[..one.len()].copy_from_slice(one.data());
    two.data_mut()[one.len()..].copy_from_slice(one.data());

    let probs = net.forward(&two).unwrap();
    for row in 0..2 {
        let sum: f64 = probs.data()[row * 4..(row + 1) * 4].iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
        assert!(probs.data()[row * 4..(row + 1) * 4].iter().all(|&p| p >= 0.0));
    }
    // Identical inputs give identical rows.
    assert_eq!(probs.data()[..4], probs.data()[4..]);
}

#[test]
fn zeroed_saliency_branch_equals_rgb_only_classifier() {
    let mut rng = ChaCha8Rng::seed_from_u64(227);
    let mut net = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 31)).unwrap();
    for name in ["sal.conv4.weight", "sal.conv4.bias"] {
        net.param_mut(name).unwrap().value.data_mut().fill(0.0);
    }
    let x = rand_tensor(&mut rng, &[3, 3, 16, 16]).map(|v| v.abs());
    let full = net.forward(&x).unwrap();
    let rgb_only = net.forward_rgb_only(&x).unwrap();
    assert_eq!(full, rgb_only, "S = 0 must reduce to the plain classifier");
}

#[test]
fn pretrain_zero_epochs_keeps_weights_and_loss_decreases_when_training() {
    let data = separable_set(24, 16, 3);
    let mut net = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 77)).unwrap();
    let before: Vec<Tensor> = net.params().iter().map(|p| p.value.clone()).collect();
    net.pretrain_rgb(&data, tiny_opts(0, 1)).unwrap();
    for (p, b) in net.params().iter().zip(&before) {
        assert_eq!(&p.value, b, "0 epochs must not touch {}", p.name);
    }

    let log = net.pretrain_rgb(&data, tiny_opts(12, 1)).unwrap();
    assert_eq!(log.losses.len(), 12 * log.batches_per_epoch);
    let first_epoch: f64 =
        log.losses[..log.batches_per_epoch].iter().sum::<f64>() / log.batches_per_epoch as f64;
    let last_epoch: f64 = log.losses[log.losses.len() - log.batches_per_epoch..]
        .iter()
        .sum::<f64>()
        / log.batches_per_epoch as f64;
    assert!(
        last_epoch <= first_epoch,
        "loss should not increase on a separable set: {first_epoch} -> {last_epoch}"
    );

    // Seeded rerun reproduces weights bit-exactly.
    let mut net2 = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 77)).unwrap();
    net2.pretrain_rgb(&data, tiny_opts(0, 1)).unwrap();
    net2.pretrain_rgb(&data, tiny_opts(12, 1)).unwrap();
    for (a, b) in net.params().iter().zip(net2.params()) {
        assert_eq!(a.value, b.value, "{} not reproducible", a.name);
    }
}

#[test]
fn selective_training_requires_pretrain_and_freezes_everything_else() {
    let spec = PopoutSpec::new(32, 4, 40, 3);
    let popout = gen_popout_dataset(&spec).unwrap();
    let data = ClassificationSet::from_popout(&popout);
    let mut net = TwoBranchNet::new(NetworkConfig::with_input_size(32, 4, 15)).unwrap();

    assert!(net.train_selective(&data, tiny_opts(1, 2)).is_err());

    net.pretrain_rgb(&data, tiny_opts(4, 2)).unwrap();
    let frozen_before: Vec<(String, Tensor)> = net
        .params()
        .iter()
        .filter(|p| !p.name.starts_with("sal."))
        .map(|p| (p.name.clone(), p.value.clone()))
        .collect();
    let sal_before: Vec<Tensor> = net
        .params()
        .iter()
        .filter(|p| p.name.starts_with("sal."))
        .map(|p| p.value.clone())
        .collect();

    let log = net.train_selective(&data, tiny_opts(4, 2)).unwrap();
    assert_eq!(
        net.frozen().len(),
        10,
        "all rgb and head parameters must be frozen"
    );
    for (name, before) in &frozen_before {
        let after = &net.param(name).unwrap().value;
        assert_eq!(after, before, "{name} changed during selective training");
    }
    let sal_after: Vec<Tensor> = net
        .params()
        .iter()
        .filter(|p| p.name.starts_with("sal."))
        .map(|p| p.value.clone())
        .collect();
    assert!(
        sal_before
            .iter()
            .zip(&sal_after)
            .any(|(a, b)| a != b),
        "saliency parameters should have moved"
    );

    // Training losses trend downward on the pop-out task.
    let first = log.losses.first().copied().unwrap();
    let last_epoch_mean: f64 = log.losses[log.losses.len() - log.batches_per_epoch..]
        .iter()
        .sum::<f64>()
        / log.batches_per_epoch as f64;
    assert!(
        last_epoch_mean < first,
        "selective training loss {first} -> {last_epoch_mean}"
    );
}

#[test]
fn predict_saliency_dims_and_zero_branch() {
    let mut net = TwoBranchNet::new(NetworkConfig::toy(8, 3)).unwrap();
    let image = Tensor::full(&[3, 48, 40], 0.5);
    let map = net.predict_saliency(&image).unwrap();
    assert_eq!((map.width(), map.height()), (40, 48));
    assert!(map.values().iter().all(|&v| v >= 0.0));

    for name in ["sal.conv4.weight", "sal.conv4.bias"] {
        net.param_mut(name).unwrap().value.data_mut().fill(0.0);
    }
    let map = net.predict_saliency(&image).unwrap();
    assert!(map.values().iter().all(|&v| v == 0.0));
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut net = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 55)).unwrap();
    let data = separable_set(12, 16, 3);
    net.pretrain_rgb(&data, tiny_opts(2, 4)).unwrap();

    let path = dir.path().join("model.salf");
    net.save(&path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.len(), net.params().len());
    for ((name, tensor), p) in loaded.iter().zip(net.params()) {
        assert_eq!(name, &p.name);
        assert_eq!(tensor, &p.value, "{name} not bit-exact");
    }

    // Loading into a fresh net reproduces predictions exactly.
    let mut other = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 991)).unwrap();
    other.load_params(loaded).unwrap();
    let x = Tensor::full(&[1, 3, 16, 16], 0.4);
    assert_eq!(net.forward(&x).unwrap(), other.forward(&x).unwrap());

    // Second save produces identical bytes.
    let path2 = dir.path().join("model2.salf");
    save_checkpoint(&path2, net.params()).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&path2).unwrap()
    );
}

#[test]
fn checkpoint_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let net = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 5)).unwrap();
    let path = dir.path().join("model.salf");
    net.save(&path).unwrap();

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    let bad = dir.path().join("bad.salf");
    std::fs::write(&bad, &bytes).unwrap();
    assert!(load_checkpoint(&bad).is_err());

    let mut truncated = std::fs::read(&path).unwrap();
    truncated.truncate(truncated.len() - 3);
    let trunc = dir.path().join("trunc.salf");
    std::fs::write(&trunc, &truncated).unwrap();
    assert!(load_checkpoint(&trunc).is_err());
}

#[test]
fn empty_dataset_is_an_error() {
    let mut net = TwoBranchNet::new(NetworkConfig::tiny(16, 3, 5)).unwrap();
    let empty = ClassificationSet::default();
    assert!(net.pretrain_rgb(&empty, tiny_opts(1, 1)).is_err());
}
