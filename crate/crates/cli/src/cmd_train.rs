use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use saliency_core::data::{split_indices, DatasetManifest};
use saliency_core::net::{
    ClassificationSet, NetworkConfig, TrainLog, TrainOptions, TwoBranchNet,
};

use crate::util::{derive_seed, ensure_dir, write_json, RunReport};
use crate::Common;

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset manifest with labeled entries.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for checkpoints, the loss log, and the report.
    #[arg(long)]
    out: PathBuf,
    /// Epochs for the RGB/head pretraining phase.
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    /// Epochs for the selective saliency-branch phase.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Fraction of the data held out for the accuracy check.
    #[arg(long)]
    holdout: Option<f64>,
}

#[derive(Serialize)]
struct ResolvedTrain {
    manifest: String,
    out: String,
    pretrain_epochs: usize,
    epochs: usize,
    lr: f64,
    batch: usize,
    holdout: f64,
    network: NetworkConfig,
}

#[derive(Serialize)]
struct LossLog<'a> {
    pretrain: &'a TrainLog,
    selective: &'a TrainLog,
    pretrain_holdout_accuracy: f64,
    phase_boundary_batch: usize,
}

pub fn run(common: &Common, args: TrainArgs) -> Result<()> {
    let fc = &common.file_config;
    let pretrain_epochs = fc.resolve(args.pretrain_epochs, "pretrain_epochs", 6);
    let epochs = fc.resolve(args.epochs, "epochs", 6);
    let lr = fc.resolve(args.lr, "lr", 0.05);
    let batch = fc.resolve(args.batch, "batch", 32);
    let holdout = fc.resolve(args.holdout, "holdout", 0.1);

    let manifest = DatasetManifest::load(&args.manifest).context("loading manifest")?;
    let full = ClassificationSet::from_manifest(&manifest).context("loading training images")?;
    if full.is_empty() {
        bail!("manifest {} has no entries", args.manifest.display());
    }
    let shape = full.images[0].shape().to_vec();
    let input_size = shape[1];
    if shape[1] != shape[2] {
        bail!("training images must be square, got {}x{}", shape[1], shape[2]);
    }
    let num_classes = full.labels.iter().copied().max().unwrap_or(0) + 1;
    if num_classes < 2 {
        bail!("need at least 2 classes, found {num_classes}");
    }

    // Hold out a slice for the post-pretrain accuracy record.
    let (train_idx, holdout_idx) = split_indices(
        full.len(),
        1.0 - holdout,
        derive_seed(common.seed, "train", "holdout"),
    );
    let train_set = full.subset(&train_idx);
    let holdout_set = if holdout_idx.is_empty() {
        full.subset(&train_idx)
    } else {
        full.subset(&holdout_idx)
    };

    let network = NetworkConfig::with_input_size(
        input_size,
        num_classes,
        derive_seed(common.seed, "train", "init"),
    );
    let resolved = ResolvedTrain {
        manifest: args.manifest.display().to_string(),
        out: args.out.display().to_string(),
        pretrain_epochs,
        epochs,
        lr,
        batch,
        holdout,
        network: network.clone(),
    };

    ensure_dir(&args.out)?;
    let mut net = TwoBranchNet::new(network.clone()).context("building network")?;

    common.say(format!(
        "pretraining rgb+head: {} images, {} classes, {} epochs",
        train_set.len(),
        num_classes,
        pretrain_epochs
    ));
    let pretrain_log = net
        .pretrain_rgb(
            &train_set,
            TrainOptions {
                epochs: pretrain_epochs,
                lr,
                batch_size: batch,
                seed: derive_seed(common.seed, "train", "pretrain"),
            },
        )
        .context("pretraining phase")?;
    let accuracy = net
        .accuracy(&holdout_set, false)
        .context("holdout accuracy")?;
    common.say(format!("pretrain holdout accuracy: {accuracy:.3}"));

    let pretrain_ckpt = args.out.join("model_pretrain.salf");
    net.save(&pretrain_ckpt).context("saving pretrain checkpoint")?;

    common.say(format!("selective saliency training: {epochs} epochs"));
    let selective_log = net
        .train_selective(
            &train_set,
            TrainOptions {
                epochs,
                lr,
                batch_size: batch,
                seed: derive_seed(common.seed, "train", "selective"),
            },
        )
        .context("selective phase")?;

    let ckpt = args.out.join("model.salf");
    net.save(&ckpt).context("saving checkpoint")?;
    let config_path = args.out.join("model.config.json");
    write_json(&config_path, &network)?;

    let loss_log_path = args.out.join("loss_log.json");
    write_json(
        &loss_log_path,
        &LossLog {
            pretrain: &pretrain_log,
            selective: &selective_log,
            pretrain_holdout_accuracy: accuracy,
            phase_boundary_batch: pretrain_log.losses.len(),
        },
    )?;

    let mut report = RunReport::new("train", common.seed, resolved);
    report.record_input("manifest", &args.manifest)?;
    for p in [&pretrain_ckpt, &ckpt, &config_path, &loss_log_path] {
        report.record_output(p);
    }
    report.write(&args.out.join("train_report.json"))?;
    common.say(format!("checkpoint: {}", ckpt.display()));
    Ok(())
}
