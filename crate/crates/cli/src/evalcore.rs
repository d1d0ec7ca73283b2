//! Shared loading/fusion plumbing for `eval` and `ablate`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use saliency_core::data::{
    fixations_to_density, load_fixations, load_image, read_pgm, DatasetManifest,
};
use saliency_core::map::{DensityMap, SaliencyMap};
use saliency_core::metrics::FixationSet;
use saliency_core::priors::{fuse, FusionMode, FusionSpec};

use crate::cmd_centerbias::SupervisedCbFiles;

pub struct LoadedEntry {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub fixations: FixationSet,
    pub density: DensityMap,
    pub prediction: SaliencyMap,
}

/// Loads every manifest entry plus its prediction map from `pred_dir`.
pub fn load_entries(manifest: &DatasetManifest, pred_dir: &Path) -> Result<Vec<LoadedEntry>> {
    manifest
        .entries
        .par_iter()
        .map(|entry| -> Result<LoadedEntry> {
            let fail = |what: &str| format!("entry `{}`: {what}", entry.id);
            let image =
                load_image(&manifest.resolve(&entry.image)).with_context(|| fail("image"))?;
            let (h, w) = (image.shape()[1], image.shape()[2]);
            let fixations = load_fixations(&manifest.resolve(&entry.fixations), w, h)
                .with_context(|| fail("fixations"))?;
            let density = match &entry.density {
                Some(rel) => {
                    let map =
                        read_pgm(&manifest.resolve(rel)).with_context(|| fail("density"))?;
                    DensityMap::from_values(map).with_context(|| fail("density"))?
                }
                None => fixations_to_density(&fixations, manifest.pxva, 1.0)
                    .with_context(|| fail("density smoothing"))?,
            };
            let pred_path = pred_dir.join(format!("{}.pgm", entry.id));
            let prediction = read_pgm(&pred_path).with_context(|| fail("prediction"))?;
            Ok(LoadedEntry {
                id: entry.id.clone(),
                width: w,
                height: h,
                fixations,
                density,
                prediction,
            })
        })
        .collect()
}

/// A prior to fuse with: one fixed map, or the supervised pair where each
/// image uses the opposite split's map.
pub enum CbSource {
    Fixed(SaliencyMap),
    Supervised {
        cb_a: SaliencyMap,
        cb_b: SaliencyMap,
        assignment: BTreeMap<String, String>,
    },
}

impl CbSource {
    /// Loads from a `.pgm` file or a supervised-pair directory.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            let meta_path = path.join("assignment.json");
            let text = std::fs::read_to_string(&meta_path)
                .with_context(|| format!("reading {}", meta_path.display()))?;
            let files: SupervisedCbFiles =
                serde_json::from_str(&text).context("parsing assignment.json")?;
            let cb_a = read_pgm(&path.join(&files.cb_a)).context("loading cb_a")?;
            let cb_b = read_pgm(&path.join(&files.cb_b)).context("loading cb_b")?;
            Ok(CbSource::Supervised {
                cb_a,
                cb_b,
                assignment: files.assignment,
            })
        } else {
            Ok(CbSource::Fixed(read_pgm(path).context("loading center-bias map")?))
        }
    }

    /// The map to fuse with for `id` (the opposite split for supervised).
    pub fn map_for(&self, id: &str) -> Result<&SaliencyMap> {
        match self {
            CbSource::Fixed(map) => Ok(map),
            CbSource::Supervised {
                cb_a,
                cb_b,
                assignment,
            } => match assignment.get(id).map(String::as_str) {
                Some("a") => Ok(cb_b),
                Some("b") => Ok(cb_a),
                Some(other) => bail!("entry `{id}`: bad split tag `{other}`"),
                None => bail!("entry `{id}` missing from the supervised-split assignment"),
            },
        }
    }
}

/// Fuses a prediction with a prior at the prediction's resolution.
pub fn fuse_prediction(
    prediction: &SaliencyMap,
    cb: &SaliencyMap,
    mode: FusionMode,
) -> Result<SaliencyMap> {
    let cb = cb.resize_bilinear(prediction.width(), prediction.height());
    Ok(fuse(prediction, &cb, FusionSpec::new(mode))?)
}

pub fn parse_fusion(s: &str) -> Result<FusionMode, String> {
    match s {
        "sum" => Ok(FusionMode::Sum),
        "mult" => Ok(FusionMode::Mult),
        _ => Err(format!("unknown fusion `{s}` (sum|mult)")),
    }
}
