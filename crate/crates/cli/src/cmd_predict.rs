use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use saliency_core::data::{gaussian_blur_map, load_image, write_pgm16, DatasetManifest};
use saliency_core::net::{load_checkpoint, NetworkConfig, TwoBranchNet};
use saliency_core::priors::{normalize_map, Normalization};

use crate::util::{ensure_dir, RunReport};
use crate::Common;

#[derive(Args)]
pub struct PredictArgs {
    /// Model checkpoint (expects `<stem>.config.json` alongside unless
    /// --net-config is given).
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for one 16-bit PGM per entry.
    #[arg(long)]
    out: PathBuf,
    /// Network config JSON; defaults to the checkpoint's sidecar file.
    #[arg(long)]
    net_config: Option<PathBuf>,
    /// Optional Gaussian blur sigma (pixels) applied to each map; 0 is a no-op.
    #[arg(long)]
    blur: Option<f64>,
}

#[derive(Serialize)]
struct ResolvedPredict {
    checkpoint: String,
    manifest: String,
    out: String,
    blur: f64,
}

pub fn run(common: &Common, args: PredictArgs) -> Result<()> {
    let blur = common.file_config.resolve(args.blur, "blur", 0.0);
    let config_path = args.net_config.clone().unwrap_or_else(|| {
        let mut p = args.checkpoint.clone();
        p.set_extension("config.json");
        p
    });
    let config_text = std::fs::read_to_string(&config_path)
        .with_context(|| format!("reading network config {}", config_path.display()))?;
    let network: NetworkConfig =
        serde_json::from_str(&config_text).context("parsing network config")?;
    let mut net = TwoBranchNet::new(network).context("building network")?;
    net.load_params(load_checkpoint(&args.checkpoint).context("loading checkpoint")?)
        .context("applying checkpoint")?;

    let manifest = DatasetManifest::load(&args.manifest).context("loading manifest")?;
    ensure_dir(&args.out)?;

    let outputs: Vec<PathBuf> = manifest
        .entries
        .par_iter()
        .map(|entry| -> Result<PathBuf> {
            let image = load_image(&manifest.resolve(&entry.image))
                .with_context(|| format!("entry `{}`", entry.id))?;
            let map = net
                .predict_saliency(&image)
                .with_context(|| format!("entry `{}`", entry.id))?;
            let map = if blur > 0.0 {
                gaussian_blur_map(&map, blur)
            } else {
                map
            };
            // Min-max normalize for 16-bit storage; rank order is what the
            // location metrics consume downstream.
            let stored = normalize_map(&map, Normalization::MinMax);
            let path = args.out.join(format!("{}.pgm", entry.id));
            write_pgm16(&path, &stored).with_context(|| format!("entry `{}`", entry.id))?;
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;

    common.say(format!(
        "wrote {} saliency maps to {}",
        outputs.len(),
        args.out.display()
    ));

    let mut report = RunReport::new(
        "predict",
        common.seed,
        ResolvedPredict {
            checkpoint: args.checkpoint.display().to_string(),
            manifest: args.manifest.display().to_string(),
            out: args.out.display().to_string(),
            blur,
        },
    );
    report.record_input("checkpoint", &args.checkpoint)?;
    report.record_input("manifest", &args.manifest)?;
    for p in &outputs {
        report.record_output(p);
    }
    report.write(&args.out.join("predict_report.json"))?;
    Ok(())
}
