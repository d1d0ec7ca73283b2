use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use saliency_core::data::{gen_popout_dataset, Placement, PopoutFeature, PopoutSpec};

use crate::util::{derive_seed, ensure_dir, RunReport};
use crate::Common;

#[derive(Args)]
pub struct GenArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of images.
    #[arg(long)]
    n: Option<usize>,
    /// Number of shape-by-color target classes.
    #[arg(long)]
    classes: Option<usize>,
    /// Square canvas side in pixels.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    distractors: Option<usize>,
    /// Pop-out feature dimension: color, orientation, or size.
    #[arg(long, value_parser = parse_feature)]
    feature: Option<PopoutFeature>,
    /// Target placement: uniform or center.
    #[arg(long, value_parser = parse_placement)]
    placement: Option<Placement>,
    /// Synthetic fixations per image.
    #[arg(long)]
    fixations: Option<usize>,
    /// Fraction of fixations replaced by center-Gaussian noise.
    #[arg(long)]
    center_noise: Option<f64>,
    /// Pixels per degree assumed for the synthetic display.
    #[arg(long)]
    pxva: Option<f64>,
    /// Dataset name recorded in the manifest.
    #[arg(long)]
    name: Option<String>,
}

fn parse_feature(s: &str) -> Result<PopoutFeature, String> {
    match s {
        "color" => Ok(PopoutFeature::Color),
        "orientation" => Ok(PopoutFeature::Orientation),
        "size" => Ok(PopoutFeature::Size),
        _ => Err(format!("unknown feature `{s}` (color|orientation|size)")),
    }
}

fn parse_placement(s: &str) -> Result<Placement, String> {
    match s {
        "uniform" => Ok(Placement::Uniform),
        "center" => Ok(Placement::CenterBiased),
        _ => Err(format!("unknown placement `{s}` (uniform|center)")),
    }
}

#[derive(Serialize)]
struct ResolvedGen {
    spec: PopoutSpec,
    name: String,
    out: String,
}

pub fn run(common: &Common, args: GenArgs) -> Result<()> {
    let fc = &common.file_config;
    let mut spec = PopoutSpec::new(
        fc.resolve(args.size, "size", 64),
        fc.resolve(args.classes, "classes", 8),
        fc.resolve(args.n, "n", 256),
        derive_seed(common.seed, "gen", "dataset"),
    );
    spec.distractors = fc.resolve(args.distractors, "distractors", 6);
    spec.feature = fc.resolve(args.feature, "feature", PopoutFeature::Color);
    spec.placement = fc.resolve(args.placement, "placement", Placement::Uniform);
    spec.fixations_per_image = fc.resolve(args.fixations, "fixations", 10);
    spec.center_noise_rate = fc.resolve(args.center_noise, "center_noise", 0.0);
    spec.pxva = fc.resolve(args.pxva, "pxva", 4.0);
    let name = fc.resolve(args.name, "name", "popout".to_string());

    ensure_dir(&args.out)?;
    let dataset = gen_popout_dataset(&spec).context("generating pop-out dataset")?;
    let manifest_path = dataset
        .write_to_dir(&args.out, &name)
        .context("writing dataset")?;
    common.say(format!(
        "wrote {} images to {}",
        dataset.items.len(),
        args.out.display()
    ));

    let mut report = RunReport::new(
        "gen",
        common.seed,
        ResolvedGen {
            spec,
            name,
            out: args.out.display().to_string(),
        },
    );
    report.record_input("manifest", &manifest_path)?;
    report.record_output(&manifest_path);
    report.write(&args.out.join("gen_report.json"))?;
    Ok(())
}
