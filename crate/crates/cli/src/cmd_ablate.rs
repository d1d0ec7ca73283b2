use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use saliency_core::data::DatasetManifest;
use saliency_core::metrics::auc_judd;
use saliency_core::priors::{
    make_gaussian_cb, CbShape, CenterBiasSpec, FusionMode, SplitHalf, DEFAULT_DVA_FACTORS,
};

use crate::cmd_centerbias::build_supervised;
use crate::evalcore::{fuse_prediction, load_entries, CbSource, LoadedEntry};
use crate::util::{derive_seed, ensure_dir, RunReport};
use crate::Common;

#[derive(Args)]
pub struct AblateArgs {
    /// Manifest(s), one per dataset column (repeat with matching --pred).
    #[arg(long = "manifest", required = true)]
    manifests: Vec<PathBuf>,
    /// Prediction directories, paired with --manifest by position.
    #[arg(long = "pred", required = true)]
    preds: Vec<PathBuf>,
    /// Output directory for ablation.csv and the run report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ResolvedAblate {
    manifests: Vec<String>,
    preds: Vec<String>,
    out: String,
    dva_factors: Vec<f64>,
}

#[derive(Serialize, Clone)]
struct AblationRow {
    shape: String,
    dva: String,
    fusion: String,
    /// Mean AUC-Judd per dataset, in column order.
    scores: Vec<f64>,
}

fn fusion_name(mode: FusionMode) -> &'static str {
    match mode {
        FusionMode::Sum => "sum",
        FusionMode::Mult => "mult",
    }
}

/// Mean AUC-Judd of predictions fused with `cb_for` over all entries.
fn mean_fused_auc(
    entries: &[LoadedEntry],
    cb_for: &(dyn Fn(usize, &LoadedEntry) -> Result<saliency_core::map::SaliencyMap> + Sync),
    fusion: FusionMode,
) -> Result<f64> {
    let total: f64 = entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| -> Result<f64> {
            let cb = cb_for(i, entry)?;
            let fused = fuse_prediction(&entry.prediction, &cb, fusion)
                .with_context(|| format!("entry `{}`", entry.id))?;
            let fused = fused.resize_bilinear(entry.width, entry.height);
            Ok(auc_judd(&fused, &entry.fixations)
                .with_context(|| format!("entry `{}`", entry.id))?
                .value)
        })
        .sum::<Result<f64>>()?;
    Ok(total / entries.len() as f64)
}

pub fn run(common: &Common, args: AblateArgs) -> Result<()> {
    if args.manifests.len() != args.preds.len() {
        bail!(
            "{} manifests but {} prediction directories; pass matching pairs",
            args.manifests.len(),
            args.preds.len()
        );
    }
    ensure_dir(&args.out)?;

    let mut dataset_names = Vec::new();
    let mut datasets: Vec<(DatasetManifest, Vec<LoadedEntry>)> = Vec::new();
    for (manifest_path, pred) in args.manifests.iter().zip(&args.preds) {
        let manifest = DatasetManifest::load(manifest_path)
            .with_context(|| format!("loading {}", manifest_path.display()))?;
        let entries = load_entries(&manifest, pred)?;
        if entries.is_empty() {
            bail!("manifest {} has no entries", manifest_path.display());
        }
        dataset_names.push(manifest.name.clone());
        datasets.push((manifest, entries));
    }

    // 12 unsupervised rows (shape x dva x fusion) + 2 supervised rows.
    let mut rows: Vec<AblationRow> = Vec::with_capacity(14);
    for shape in [CbShape::Circular, CbShape::Ellipsoid] {
        for &dva in &DEFAULT_DVA_FACTORS {
            for fusion in [FusionMode::Mult, FusionMode::Sum] {
                let mut scores = Vec::with_capacity(datasets.len());
                for (manifest, entries) in &datasets {
                    // One Gaussian per distinct image size.
                    let mut cache: HashMap<(usize, usize), saliency_core::map::SaliencyMap> =
                        HashMap::new();
                    for e in entries {
                        if let std::collections::hash_map::Entry::Vacant(slot) =
                            cache.entry((e.width, e.height))
                        {
                            let spec = match shape {
                                CbShape::Circular => {
                                    CenterBiasSpec::circular(dva, manifest.pxva, e.width, e.height)
                                }
                                CbShape::Ellipsoid => {
                                    CenterBiasSpec::ellipsoid(dva, manifest.pxva, e.width, e.height)
                                }
                            };
                            slot.insert(make_gaussian_cb(&spec)?);
                        }
                    }
                    let score = mean_fused_auc(
                        entries,
                        &|_, e| Ok(cache[&(e.width, e.height)].clone()),
                        fusion,
                    )?;
                    scores.push(score);
                }
                rows.push(AblationRow {
                    shape: match shape {
                        CbShape::Circular => "circular".into(),
                        CbShape::Ellipsoid => "ellipsoid".into(),
                    },
                    dva: format!("{dva}"),
                    fusion: fusion_name(fusion).into(),
                    scores,
                });
            }
        }
    }

    for fusion in [FusionMode::Mult, FusionMode::Sum] {
        let mut scores = Vec::with_capacity(datasets.len());
        for (manifest, entries) in &datasets {
            let seed = derive_seed(common.seed, "ablate", &format!("scb:{}", manifest.name));
            let (cb_a, cb_b, assignment) = build_supervised(manifest, seed)?;
            let source = CbSource::Supervised {
                cb_a,
                cb_b,
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
            let score = mean_fused_auc(
                entries,
                &|_, e| Ok(source.map_for(&e.id)?.clone()),
                fusion,
            )?;
            scores.push(score);
        }
        rows.push(AblationRow {
            shape: "scb".into(),
            dva: "-".into(),
            fusion: fusion_name(fusion).into(),
            scores,
        });
    }

    let mut csv = String::from("shape,dva,fusion");
    for name in &dataset_names {
        write!(csv, ",{name}").unwrap();
    }
    csv.push('\n');
    for row in &rows {
        write!(csv, "{},{},{}", row.shape, row.dva, row.fusion).unwrap();
        for s in &row.scores {
            write!(csv, ",{s:.6}").unwrap();
        }
        csv.push('\n');
    }
    let csv_path = args.out.join("ablation.csv");
    std::fs::write(&csv_path, &csv).context("writing ablation.csv")?;
    common.say(format!("ablation grid ({} rows): {}", rows.len(), csv_path.display()));

    #[derive(Serialize)]
    struct AblationReport {
        datasets: Vec<String>,
        rows: Vec<AblationRow>,
    }
    let mut report = RunReport::new(
        "ablate",
        common.seed,
        ResolvedAblate {
            manifests: args.manifests.iter().map(|p| p.display().to_string()).collect(),
            preds: args.preds.iter().map(|p| p.display().to_string()).collect(),
            out: args.out.display().to_string(),
            dva_factors: DEFAULT_DVA_FACTORS.to_vec(),
        },
    );
    for (i, m) in args.manifests.iter().enumerate() {
        report.record_input(&format!("manifest_{i}"), m)?;
    }
    report.record_output(&csv_path);
    report.write(&args.out.join("ablate_report.json"))?;
    crate::util::write_json(
        &args.out.join("ablation.json"),
        &AblationReport {
            datasets: dataset_names,
            rows,
        },
    )?;
    Ok(())
}
