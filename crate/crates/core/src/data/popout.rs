//! Synthetic pop-out stimuli: one target among distractors, differing in
//! exactly one feature dimension (color, orientation, or size).
//!
//! The class label encodes the target's shape/color identity, so classifying
//! an image means locating and identifying the odd item out. Synthetic
//! fixations are sampled inside the target mask, optionally mixed with
//! center-biased noise fixations to mimic eye-tracking center bias.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::density::fixations_to_density;
use super::fixations::write_fixations;
use super::pnm::{write_pgm16, write_ppm};
use super::{DataError, DatasetManifest, ManifestEntry};
use crate::map::SaliencyMap;
use crate::metrics::FixationSet;
use crate::tensor::Tensor;

pub const SHAPE_NAMES: [&str; 4] = ["circle", "square", "triangle", "diamond"];

const PALETTE: [[f64; 3]; 6] = [
    [0.90, 0.15, 0.15], // red
    [0.15, 0.85, 0.20], // green
    [0.20, 0.35, 0.95], // blue
    [0.95, 0.85, 0.20], // yellow
    [0.85, 0.25, 0.85], // magenta
    [0.20, 0.85, 0.85], // cyan
];

const BACKGROUND: f64 = 0.12;
/// Distractor fill for the color pop-out mode: neutral, outside the class
/// palette, so only the target carries class color.
const DISTRACTOR_GRAY: [f64; 3] = [0.55, 0.55, 0.55];
const ELONG_LONG: f64 = 1.35;
const ELONG_SHORT: f64 = 0.55;
const SIZE_POP_FACTOR: f64 = 1.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopoutFeature {
    Color,
    Orientation,
    Size,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Uniform,
    CenterBiased,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopoutSpec {
    /// Square canvas side in pixels.
    pub canvas: usize,
    /// Number of shape-by-color target identities.
    pub classes: usize,
    pub n_images: usize,
    pub distractors: usize,
    pub feature: PopoutFeature,
    pub placement: Placement,
    pub fixations_per_image: usize,
    /// Fraction of fixations replaced by center-Gaussian noise samples.
    pub center_noise_rate: f64,
    /// Pixels per degree assumed for the synthetic display.
    pub pxva: f64,
    pub seed: u64,
}

impl PopoutSpec {
    pub fn new(canvas: usize, classes: usize, n_images: usize, seed: u64) -> Self {
        Self {
            canvas,
            classes,
            n_images,
            distractors: 6,
            feature: PopoutFeature::Color,
            placement: Placement::Uniform,
            fixations_per_image: 10,
            center_noise_rate: 0.0,
            pxva: 4.0,
            seed,
        }
    }

    pub fn item_radius(&self) -> f64 {
        ((self.canvas as f64) * 0.095).round().max(3.0)
    }

    /// Minimum distance between any item center and the canvas border.
    pub fn placement_margin(&self) -> f64 {
        (self.item_radius() * 1.6).ceil() + 1.0
    }

    fn validate(&self) -> Result<(), DataError> {
        let max = SHAPE_NAMES.len() * PALETTE.len();
        if self.classes == 0 || self.classes > max {
            return Err(DataError::TooManyClasses {
                requested: self.classes,
                max,
            });
        }
        if self.canvas < 16 {
            return Err(DataError::InvalidValue {
                detail: format!("canvas {} too small", self.canvas),
            });
        }
        if self.pxva.is_nan() || self.pxva <= 0.0 {
            return Err(DataError::InvalidValue {
                detail: format!("pxva {} must be positive", self.pxva),
            });
        }
        Ok(())
    }
}

/// Class identity: shapes cycle fastest so small class counts stay balanced.
pub fn class_identity(class: usize) -> (usize, usize) {
    (class % SHAPE_NAMES.len(), class / SHAPE_NAMES.len())
}

#[derive(Debug, Clone, Copy)]
struct Item {
    shape: usize,
    rgb: [f64; 3],
    cx: f64,
    cy: f64,
    radius: f64,
    angle: f64,
    elongated: bool,
}

impl Item {
    fn half_extent(&self) -> f64 {
        if self.elongated {
            self.radius * ELONG_LONG
        } else {
            self.radius
        }
    }

    fn coverage(&self, px: f64, py: f64) -> f64 {
        let mut hits = 0u32;
        for sy in [0.25, 0.75] {
            for sx in [0.25, 0.75] {
                let dx = px + sx - self.cx;
                let dy = py + sy - self.cy;
                let (sin, cos) = self.angle.sin_cos();
                let mut x = (cos * dx + sin * dy) / self.radius;
                let mut y = (-sin * dx + cos * dy) / self.radius;
                if self.elongated {
                    x /= ELONG_LONG;
                    y /= ELONG_SHORT;
                }
                if unit_shape_contains(self.shape, x, y) {
                    hits += 1;
                }
            }
        }
        hits as f64 / 4.0
    }
}

fn unit_shape_contains(shape: usize, x: f64, y: f64) -> bool {
    match shape {
        0 => x * x + y * y <= 1.0,
        1 => x.abs() <= 0.85 && y.abs() <= 0.85,
        2 => {
            // Upward triangle.
            let (ax, ay) = (0.0, -1.1);
            let (bx, by) = (1.0, 0.85);
            let (cx, cy) = (-1.0, 0.85);
            let sign = |x1: f64, y1: f64, x2: f64, y2: f64| (x - x1) * (y2 - y1) - (y - y1) * (x2 - x1);
            let d1 = sign(ax, ay, bx, by);
            let d2 = sign(bx, by, cx, cy);
            let d3 = sign(cx, cy, ax, ay);
            (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0) || (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0)
        }
        _ => x.abs() + y.abs() <= 1.2,
    }
}

/// One generated stimulus with its supervision signals.
#[derive(Debug, Clone)]
pub struct PopoutItem {
    pub id: String,
    pub image: Tensor,
    pub label: usize,
    pub mask: SaliencyMap,
    pub fixations: FixationSet,
    pub target_center: (f64, f64),
    /// Inclusive pixel bounds `(x0, y0, x1, y1)` of the target mask.
    pub target_bbox: (usize, usize, usize, usize),
}

#[derive(Debug, Clone)]
pub struct PopoutDataset {
    pub spec: PopoutSpec,
    pub items: Vec<PopoutItem>,
}

pub fn gen_popout_dataset(spec: &PopoutSpec) -> Result<PopoutDataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut items = Vec::with_capacity(spec.n_images);
    for i in 0..spec.n_images {
        let label = i % spec.classes;
        items.push(render_stimulus(spec, label, i, &mut rng)?);
    }
    Ok(PopoutDataset {
        spec: spec.clone(),
        items,
    })
}

fn sample_center(
    spec: &PopoutSpec,
    rng: &mut ChaCha8Rng,
    placement: Placement,
) -> (f64, f64) {
    let margin = spec.placement_margin();
    let lo = margin;
    let hi = spec.canvas as f64 - margin;
    match placement {
        Placement::Uniform => (rng.gen_range(lo..hi), rng.gen_range(lo..hi)),
        Placement::CenterBiased => {
            let c = spec.canvas as f64 / 2.0;
            let sigma = spec.canvas as f64 / 8.0;
            let (zx, zy) = gauss_pair(rng);
            (
                (c + sigma * zx).clamp(lo, hi - f64::EPSILON),
                (c + sigma * zy).clamp(lo, hi - f64::EPSILON),
            )
        }
    }
}

/// Box-Muller standard-normal pair.
fn gauss_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

fn render_stimulus(
    spec: &PopoutSpec,
    label: usize,
    image_index: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PopoutItem, DataError> {
    let (shape, color) = class_identity(label);
    let r = spec.item_radius();
    let elongated = spec.feature == PopoutFeature::Orientation;
    let base_angle = if elongated {
        rng.gen_range(0.0..std::f64::consts::PI)
    } else {
        0.0
    };

    let d_rgb = match spec.feature {
        PopoutFeature::Color => DISTRACTOR_GRAY,
        _ => PALETTE[color],
    };

    // Lay out the whole stimulus; restart from scratch when the sequential
    // rejection sampler paints itself into a corner.
    let mut layout: Option<(Vec<Item>, (f64, f64))> = None;
    'restart: for _restart in 0..100 {
        let target_center = sample_center(spec, rng, spec.placement);
        let target = Item {
            shape,
            rgb: PALETTE[color],
            cx: target_center.0,
            cy: target_center.1,
            radius: match spec.feature {
                PopoutFeature::Size => r * SIZE_POP_FACTOR,
                _ => r,
            },
            angle: match spec.feature {
                PopoutFeature::Orientation => base_angle + std::f64::consts::FRAC_PI_4,
                _ => 0.0,
            },
            elongated,
        };
        let mut placed = vec![target];
        for _ in 0..spec.distractors {
            let mut found = false;
            for _attempt in 0..300 {
                let (cx, cy) = sample_center(spec, rng, Placement::Uniform);
                let candidate = Item {
                    shape,
                    rgb: d_rgb,
                    cx,
                    cy,
                    radius: r,
                    angle: base_angle,
                    elongated,
                };
                let clear = placed.iter().all(|p| {
                    let dx = p.cx - cx;
                    let dy = p.cy - cy;
                    let min_d = 1.02 * (p.half_extent() + candidate.half_extent()) + 1.0;
                    dx * dx + dy * dy >= min_d * min_d
                });
                if clear {
                    placed.push(candidate);
                    found = true;
                    break;
                }
            }
            if !found {
                continue 'restart;
            }
        }
        layout = Some((placed, target_center));
        break;
    }
    let Some((placed, target_center)) = layout else {
        return Err(DataError::Placement { image: image_index });
    };
    let target = placed[0];

    // Rasterize: distractors first, target last (never overlaps anyway).
    let n = spec.canvas;
    let mut data = vec![BACKGROUND; 3 * n * n];
    for item in placed.iter().rev() {
        let ext = item.half_extent() + 1.0;
        let x0 = (item.cx - ext).floor().max(0.0) as usize;
        let x1 = ((item.cx + ext).ceil() as usize).min(n - 1);
        let y0 = (item.cy - ext).floor().max(0.0) as usize;
        let y1 = ((item.cy + ext).ceil() as usize).min(n - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let cov = item.coverage(x as f64, y as f64);
                if cov > 0.0 {
                    for c in 0..3 {
                        let idx = (c * n + y) * n + x;
                        data[idx] = data[idx] * (1.0 - cov) + item.rgb[c] * cov;
                    }
                }
            }
        }
    }
    let image = Tensor::new(&[3, n, n], data).expect("dims consistent");

    // Target mask and bounding box.
    let mut mask = SaliencyMap::zeros(n, n);
    let mut bbox = (usize::MAX, usize::MAX, 0usize, 0usize);
    let mut mask_pixels: Vec<(usize, usize)> = Vec::new();
    let ext = target.half_extent() + 1.0;
    let x0 = (target.cx - ext).floor().max(0.0) as usize;
    let x1 = ((target.cx + ext).ceil() as usize).min(n - 1);
    let y0 = (target.cy - ext).floor().max(0.0) as usize;
    let y1 = ((target.cy + ext).ceil() as usize).min(n - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if target.coverage(x as f64, y as f64) >= 0.5 {
                mask.values_mut()[y * n + x] = 1.0;
                mask_pixels.push((x, y));
                bbox = (bbox.0.min(x), bbox.1.min(y), bbox.2.max(x), bbox.3.max(y));
            }
        }
    }
    debug_assert!(!mask_pixels.is_empty(), "target mask must not be empty");

    // Synthetic fixations: mask samples mixed with center-Gaussian noise.
    let mut points = Vec::with_capacity(spec.fixations_per_image);
    let c = n as f64 / 2.0;
    let noise_sigma = n as f64 / 6.0;
    for _ in 0..spec.fixations_per_image {
        if spec.center_noise_rate > 0.0 && rng.gen_range(0.0..1.0) < spec.center_noise_rate {
            let (zx, zy) = gauss_pair(rng);
            let x = (c + noise_sigma * zx).round().clamp(0.0, (n - 1) as f64) as usize;
            let y = (c + noise_sigma * zy).round().clamp(0.0, (n - 1) as f64) as usize;
            points.push((x, y));
        } else {
            points.push(mask_pixels[rng.gen_range(0..mask_pixels.len())]);
        }
    }
    let fixations = FixationSet::new(n, n, points).expect("clamped to bounds");

    Ok(PopoutItem {
        id: format!("img_{image_index:05}"),
        image,
        label,
        mask,
        fixations,
        target_center,
        target_bbox: bbox,
    })
}

impl PopoutDataset {
    /// Writes images, fixation CSVs, masks, density maps, and a manifest.
    /// Returns the manifest path. Output bytes are a pure function of the spec.
    pub fn write_to_dir(&self, dir: &Path, name: &str) -> Result<PathBuf, DataError> {
        let mkdir = |p: &Path| {
            std::fs::create_dir_all(p).map_err(|e| DataError::Io {
                path: p.to_path_buf(),
                source: e,
            })
        };
        mkdir(dir)?;
        for sub in ["images", "fixations", "masks", "density"] {
            mkdir(&dir.join(sub))?;
        }
        let mut entries = Vec::with_capacity(self.items.len());
        for item in &self.items {
            let image_rel = format!("images/{}.ppm", item.id);
            let fix_rel = format!("fixations/{}.csv", item.id);
            let mask_rel = format!("masks/{}.pgm", item.id);
            let density_rel = format!("density/{}.pgm", item.id);
            write_ppm(&dir.join(&image_rel), &item.image)?;
            write_fixations(&dir.join(&fix_rel), &item.id, &item.fixations)?;
            write_pgm16(&dir.join(&mask_rel), &item.mask)?;
            let density = fixations_to_density(&item.fixations, self.spec.pxva, 1.0)?;
            let peak = density.values().iter().cloned().fold(0.0, f64::max);
            let stored = SaliencyMap::new(
                density.width(),
                density.height(),
                density.values().iter().map(|&v| v / peak).collect(),
            )
            .expect("density is a valid map");
            write_pgm16(&dir.join(&density_rel), &stored)?;
            entries.push(ManifestEntry {
                id: item.id.clone(),
                image: image_rel,
                fixations: fix_rel,
                density: Some(density_rel),
                mask: Some(mask_rel),
                label: Some(item.label as u32),
            });
        }
        let manifest = DatasetManifest::new(name, self.spec.pxva, entries);
        let path = dir.join("manifest.json");
        manifest.save(&path)?;
        Ok(path)
    }
}
