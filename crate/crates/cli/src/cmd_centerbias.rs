use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use saliency_core::data::{
    fixations_to_density, load_fixations, load_image, read_pgm, write_pgm16, DatasetManifest,
};
use saliency_core::map::{DensityMap, SaliencyMap};
use saliency_core::priors::{
    make_gaussian_cb, make_supervised_cb, CbShape, CenterBiasSpec, SplitHalf,
};

use crate::util::{derive_seed, ensure_dir, write_json, RunReport};
use crate::Common;

#[derive(Args)]
pub struct CenterbiasArgs {
    /// Output: a .pgm path (unsupervised) or a directory (supervised).
    #[arg(long)]
    out: PathBuf,
    /// Build the supervised split-based center bias from this manifest.
    #[arg(long)]
    supervised: Option<PathBuf>,
    /// DVA factor (typically 2, 5, or 14).
    #[arg(long)]
    dva: Option<f64>,
    /// Pixels per degree of visual angle.
    #[arg(long)]
    pxva: Option<f64>,
    /// circular or ellipsoid.
    #[arg(long, value_parser = parse_shape)]
    shape: Option<CbShape>,
    /// Horizontal sigma multiplier for the ellipsoid shape.
    #[arg(long)]
    stretch: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
}

fn parse_shape(s: &str) -> Result<CbShape, String> {
    match s {
        "circular" => Ok(CbShape::Circular),
        "ellipsoid" => Ok(CbShape::Ellipsoid),
        _ => Err(format!("unknown shape `{s}` (circular|ellipsoid)")),
    }
}

/// On-disk description of a supervised center-bias pair.
#[derive(Debug, Serialize, Deserialize)]
pub struct SupervisedCbFiles {
    pub cb_a: String,
    pub cb_b: String,
    /// Which half each entry belongs to; evaluate it with the opposite map.
    pub assignment: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct ResolvedCb {
    mode: &'static str,
    spec: Option<CenterBiasSpec>,
    manifest: Option<String>,
    out: String,
}

/// Loads each entry's density map, falling back to smoothing its fixations.
pub fn entry_densities(manifest: &DatasetManifest) -> Result<Vec<DensityMap>> {
    manifest
        .entries
        .iter()
        .map(|entry| -> Result<DensityMap> {
            if let Some(rel) = &entry.density {
                let map = read_pgm(&manifest.resolve(rel))
                    .with_context(|| format!("entry `{}`", entry.id))?;
                return DensityMap::from_values(map)
                    .with_context(|| format!("entry `{}`", entry.id));
            }
            let image = load_image(&manifest.resolve(&entry.image))
                .with_context(|| format!("entry `{}`", entry.id))?;
            let (h, w) = (image.shape()[1], image.shape()[2]);
            let fix = load_fixations(&manifest.resolve(&entry.fixations), w, h)
                .with_context(|| format!("entry `{}`", entry.id))?;
            fixations_to_density(&fix, manifest.pxva, 1.0)
                .with_context(|| format!("entry `{}`", entry.id))
        })
        .collect()
}

/// Builds the supervised pair for a manifest, resizing densities to the
/// first entry's grid when sizes differ.
pub fn build_supervised(
    manifest: &DatasetManifest,
    seed: u64,
) -> Result<(SaliencyMap, SaliencyMap, Vec<SplitHalf>)> {
    let densities = entry_densities(manifest)?;
    if densities.len() < 2 {
        bail!("supervised center bias needs at least 2 entries");
    }
    let (w, h) = (densities[0].width(), densities[0].height());
    let common_size: Vec<DensityMap> = densities
        .into_iter()
        .map(|d| {
            if (d.width(), d.height()) == (w, h) {
                Ok(d)
            } else {
                DensityMap::from_values(d.map().resize_bilinear(w, h))
                    .context("renormalizing resized density")
            }
        })
        .collect::<Result<_>>()?;
    let scb = make_supervised_cb(&common_size, seed)?;
    Ok((scb.cb_a, scb.cb_b, scb.assignment))
}

pub fn run(common: &Common, args: CenterbiasArgs) -> Result<()> {
    let fc = &common.file_config;
    if let Some(manifest_path) = &args.supervised {
        let manifest = DatasetManifest::load(manifest_path).context("loading manifest")?;
        let seed = derive_seed(common.seed, "centerbias", "split");
        let (cb_a, cb_b, assignment) = build_supervised(&manifest, seed)?;
        ensure_dir(&args.out)?;
        let a_path = args.out.join("cb_a.pgm");
        let b_path = args.out.join("cb_b.pgm");
        write_pgm16(&a_path, &cb_a)?;
        write_pgm16(&b_path, &cb_b)?;
        let files = SupervisedCbFiles {
            cb_a: "cb_a.pgm".into(),
            cb_b: "cb_b.pgm".into(),
            assignment: manifest
                .entries
                .iter()
                .zip(&assignment)
                .map(|(e, half)| {
                    let tag = match half {
                        SplitHalf::A => "a",
                        SplitHalf::B => "b",
                    };
                    (e.id.clone(), tag.to_string())
                })
                .collect(),
        };
        let assignment_path = args.out.join("assignment.json");
        write_json(&assignment_path, &files)?;
        common.say(format!("supervised center bias in {}", args.out.display()));

        let mut report = RunReport::new(
            "centerbias",
            common.seed,
            ResolvedCb {
                mode: "supervised",
                spec: None,
                manifest: Some(manifest_path.display().to_string()),
                out: args.out.display().to_string(),
            },
        );
        report.record_input("manifest", manifest_path)?;
        for p in [&a_path, &b_path, &assignment_path] {
            report.record_output(p);
        }
        report.write(&args.out.join("centerbias_report.json"))?;
        return Ok(());
    }

    let shape = fc.resolve(args.shape, "shape", CbShape::Circular);
    let spec = CenterBiasSpec {
        dva_factor: fc.resolve(args.dva, "dva", 2.0),
        pxva: fc.resolve(args.pxva, "pxva", 36.0),
        shape,
        horizontal_stretch: match shape {
            CbShape::Circular => 1.0,
            CbShape::Ellipsoid => fc.resolve(args.stretch, "stretch", 1.5),
        },
        width: fc.resolve(args.width, "width", 512),
        height: fc.resolve(args.height, "height", 384),
    };
    let map = make_gaussian_cb(&spec).context("building center-bias map")?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_pgm16(&args.out, &map)?;
    common.say(format!("center-bias map: {}", args.out.display()));

    let mut report = RunReport::new(
        "centerbias",
        common.seed,
        ResolvedCb {
            mode: "unsupervised",
            spec: Some(spec),
            manifest: None,
            out: args.out.display().to_string(),
        },
    );
    report.record_output(&args.out);
    let report_path = args.out.with_extension("report.json");
    report.write(&report_path)?;
    Ok(())
}
