//! Dataset ingestion and generation.
//!
//! A dataset is a JSON manifest plus per-image files (image, fixation CSV,
//! optional density map and target mask), with paths relative to the
//! manifest's directory.

mod density;
mod fixations;
mod pnm;
mod popout;

pub use density::{fixations_to_density, gaussian_blur_map};
pub use fixations::{load_fixations, write_fixations, FIXATION_CSV_HEADER};
pub use pnm::{read_pgm, read_ppm, write_pgm16, write_ppm};
pub use popout::{
    class_identity, gen_popout_dataset, Placement, PopoutDataset, PopoutFeature, PopoutItem,
    PopoutSpec, SHAPE_NAMES,
};

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: unsupported format: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("{path}: file truncated")]
    Truncated { path: PathBuf },
    #[error("{path}: {detail}")]
    Csv { path: PathBuf, detail: String },
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("{path}:{line}: fixation ({x}, {y}) outside {width}x{height} image")]
    FixationOutOfBounds {
        path: PathBuf,
        line: usize,
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("manifest entry `{id}`: missing file {path}")]
    MissingFile { id: String, path: PathBuf },
    #[error("{path}: invalid manifest: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error("fixation set is empty")]
    EmptyFixations,
    #[error("{detail}")]
    InvalidValue { detail: String },
    #[error("{requested} classes requested but only {max} shape/color combinations exist")]
    TooManyClasses { requested: usize, max: usize },
    #[error("could not place all distractors for image {image}")]
    Placement { image: usize },
}

/// Per-dataset pixels-per-degree defaults for the eye-tracking corpora this
/// harness knows about.
pub fn default_pxva(dataset: &str) -> Option<f64> {
    match dataset.to_ascii_uppercase().as_str() {
        "TORONTO" => Some(32.0),
        "MIT1003" => Some(35.0),
        "KTH" => Some(34.0),
        "CAT2000" => Some(38.0),
        "SID4VAM" => Some(40.0),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image: String,
    pub fixations: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    /// Classification label, present for generated training datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    /// Pixels per degree of visual angle for this dataset's display.
    pub pxva: f64,
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    root: PathBuf,
}

impl DatasetManifest {
    pub fn new(name: &str, pxva: f64, entries: Vec<ManifestEntry>) -> Self {
        Self {
            name: name.to_string(),
            pxva,
            entries,
            root: PathBuf::new(),
        }
    }

    /// Parses a manifest and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| DataError::Manifest {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
        manifest.root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        if manifest.pxva.is_nan() || manifest.pxva <= 0.0 {
            return Err(DataError::Manifest {
                path: path.to_path_buf(),
                detail: format!("pxva must be positive, got {}", manifest.pxva),
            });
        }
        for entry in &manifest.entries {
            let mut files = vec![&entry.image, &entry.fixations];
            files.extend(entry.density.iter());
            files.extend(entry.mask.iter());
            for rel in files {
                let p = manifest.root.join(rel);
                if !p.is_file() {
                    return Err(DataError::MissingFile {
                        id: entry.id.clone(),
                        path: p,
                    });
                }
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| DataError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.root.join(relative)
    }
}

const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Loads a PPM (P6) or PNG image as `[3,H,W]` with values in `[0,1]`.
pub fn load_image(path: &Path) -> Result<Tensor, DataError> {
    let bytes = std::fs::read(path).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if bytes.starts_with(b"P6") {
        return pnm::read_ppm_bytes(&bytes, path);
    }
    if bytes.starts_with(&PNG_MAGIC) {
        let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .map_err(|e| DataError::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?
            .to_rgb8();
        let (w, h) = (decoded.width() as usize, decoded.height() as usize);
        let mut data = vec![0.0; 3 * w * h];
        for (x, y, pixel) in decoded.enumerate_pixels() {
            for c in 0..3 {
                data[(c * h + y as usize) * w + x as usize] = pixel.0[c] as f64 / 255.0;
            }
        }
        return Tensor::new(&[3, h, w], data).map_err(|_| DataError::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "inconsistent dimensions".into(),
        });
    }
    Err(DataError::UnsupportedFormat {
        path: path.to_path_buf(),
        detail: "expected PPM (P6) or PNG".into(),
    })
}

/// Seeded shuffle split into train/test index lists.
///
/// `train_fraction` of the items (rounded) go to train; the split is a pure
/// function of `(n, train_fraction, seed)`.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let k = ((n as f64) * train_fraction + 0.5).floor().clamp(0.0, n as f64) as usize;
    let test = order.split_off(k);
    (order, test)
}
