use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use saliency_core::data::{write_pgm16, DatasetManifest};
use saliency_core::metrics::{evaluate_all, sauc_pool, EvalConfig, MetricReport};
use saliency_core::priors::FusionMode;

use crate::evalcore::{fuse_prediction, load_entries, parse_fusion, CbSource};
use crate::util::{derive_seed, ensure_dir, RunReport};
use crate::Common;

#[derive(Args)]
pub struct EvalArgs {
    /// Directory of per-entry prediction maps (`<id>.pgm`).
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for report.json / report.csv.
    #[arg(long)]
    out: PathBuf,
    /// Center-bias prior: a .pgm map, or a supervised-pair directory.
    #[arg(long)]
    cb: Option<PathBuf>,
    /// Fusion regime when --cb is given.
    #[arg(long, value_parser = parse_fusion)]
    fusion: Option<FusionMode>,
    /// Random splits for AUC-Borji and shuffled AUC.
    #[arg(long)]
    splits: Option<usize>,
    /// Also write the fused maps for visual inspection.
    #[arg(long)]
    emit_fused: bool,
}

#[derive(Serialize)]
struct ResolvedEval {
    pred: String,
    manifest: String,
    out: String,
    cb: Option<String>,
    fusion: Option<FusionMode>,
    splits: usize,
    emit_fused: bool,
}

pub fn run(common: &Common, args: EvalArgs) -> Result<()> {
    let splits = common.file_config.resolve(args.splits, "splits", 100);
    let fusion = args
        .fusion
        .unwrap_or(FusionMode::Sum);

    let manifest = DatasetManifest::load(&args.manifest).context("loading manifest")?;
    let entries = load_entries(&manifest, &args.pred)?;
    let cb = args.cb.as_deref().map(CbSource::load).transpose()?;
    ensure_dir(&args.out)?;

    let all_fixations: Vec<_> = entries.iter().map(|e| e.fixations.clone()).collect();
    let metric_seed = derive_seed(common.seed, "eval", "metrics");

    let rows = entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let fail = |what: &str| format!("entry `{}`: {what}", entry.id);
            let prediction = match &cb {
                Some(source) => {
                    let map = source.map_for(&entry.id).with_context(|| fail("prior"))?;
                    let fused = fuse_prediction(&entry.prediction, map, fusion)
                        .with_context(|| fail("fusion"))?;
                    if args.emit_fused {
                        let p = args.out.join(format!("fused_{}.pgm", entry.id));
                        write_pgm16(&p, &fused).with_context(|| fail("writing fused map"))?;
                    }
                    fused
                }
                None => entry.prediction.clone(),
            };
            let pool = sauc_pool(&all_fixations, i, entry.width, entry.height)
                .with_context(|| fail("building shuffled-AUC pool"))?;
            let config = EvalConfig {
                n_splits: splits,
                seed: derive_seed(metric_seed, "image", &entry.id),
            };
            evaluate_all(
                &entry.id,
                &prediction,
                &entry.fixations,
                &entry.density,
                &pool,
                config,
            )
            .with_context(|| fail("metrics"))
        })
        .collect::<Result<Vec<_>>>()?;

    let report = MetricReport::from_rows(
        rows,
        EvalConfig {
            n_splits: splits,
            seed: metric_seed,
        },
    );
    let json_path = args.out.join("report.json");
    std::fs::write(&json_path, report.to_json()).context("writing report.json")?;
    let csv_path = args.out.join("report.csv");
    std::fs::write(&csv_path, report.to_csv()).context("writing report.csv")?;

    common.say(format!(
        "evaluated {} entries: auc_judd {:.4}, nss {:.4}, cc {:.4}",
        report.count, report.means.auc_judd, report.means.nss, report.means.cc
    ));

    let mut run_report = RunReport::new(
        "eval",
        common.seed,
        ResolvedEval {
            pred: args.pred.display().to_string(),
            manifest: args.manifest.display().to_string(),
            out: args.out.display().to_string(),
            cb: args.cb.as_ref().map(|p| p.display().to_string()),
            fusion: args.cb.is_some().then_some(fusion),
            splits,
            emit_fused: args.emit_fused,
        },
    );
    run_report.record_input("manifest", &args.manifest)?;
    if let Some(cb_path) = &args.cb {
        if cb_path.is_file() {
            run_report.record_input("cb", cb_path)?;
        } else {
            run_report.record_input("cb_assignment", &cb_path.join("assignment.json"))?;
        }
    }
    run_report.record_output(&json_path);
    run_report.record_output(&csv_path);
    run_report.write(&args.out.join("eval_report.json"))?;
    Ok(())
}
