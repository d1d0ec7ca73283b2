//! Center-bias priors and fusion of saliency maps with priors.
//!
//! The unsupervised center bias is a centered 2-D Gaussian whose sigma comes
//! from a degrees-of-visual-angle factor: `sigma = dva * pxva / (2*sqrt(2 ln 2))`
//! (DVA interpreted as full width at half maximum). The ellipsoid variant
//! stretches sigma horizontally while keeping the vertical DVA. The
//! supervised center bias averages empirical fixation-density maps over a
//! random half/half split and evaluates each image against the opposite half.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{DensityMap, SaliencyMap};

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("horizontal stretch must be >= 1, got {0}")]
    StretchTooSmall(f64),
    #[error("supervised center bias needs at least 2 density maps, got {0}")]
    TooFewMaps(usize),
    #[error("map {index} is {got:?}, expected {expected:?}; resize to a common size first")]
    SizeMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("cannot fuse {sal:?} saliency with {cb:?} prior")]
    FuseDims {
        sal: (usize, usize),
        cb: (usize, usize),
    },
}

/// Converts a DVA factor to a Gaussian sigma in pixels:
/// `sigma = (dva * pxva) / (2 * sqrt(2 * ln 2))`.
pub fn dva_to_sigma(dva_factor: f64, pxva: f64) -> Result<f64, PriorError> {
    // NaN fails both checks on purpose.
    if dva_factor.is_nan() || dva_factor <= 0.0 {
        return Err(PriorError::NonPositive {
            name: "dva_factor",
            value: dva_factor,
        });
    }
    if pxva.is_nan() || pxva <= 0.0 {
        return Err(PriorError::NonPositive {
            name: "pxva",
            value: pxva,
        });
    }
    Ok(dva_factor * pxva / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CbShape {
    Circular,
    Ellipsoid,
}

/// Fully determines an unsupervised center-bias map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterBiasSpec {
    pub dva_factor: f64,
    /// Pixels per degree of visual angle for the display the map targets.
    pub pxva: f64,
    pub shape: CbShape,
    /// Horizontal sigma multiplier for the ellipsoid shape (ignored for circular).
    pub horizontal_stretch: f64,
    pub width: usize,
    pub height: usize,
}

impl CenterBiasSpec {
    pub fn circular(dva_factor: f64, pxva: f64, width: usize, height: usize) -> Self {
        Self {
            dva_factor,
            pxva,
            shape: CbShape::Circular,
            horizontal_stretch: 1.0,
            width,
            height,
        }
    }

    /// Ellipsoid variant with the default +50% horizontal stretch.
    pub fn ellipsoid(dva_factor: f64, pxva: f64, width: usize, height: usize) -> Self {
        Self {
            dva_factor,
            pxva,
            shape: CbShape::Ellipsoid,
            horizontal_stretch: 1.5,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), PriorError> {
        dva_to_sigma(self.dva_factor, self.pxva)?;
        if self.horizontal_stretch < 1.0 {
            return Err(PriorError::StretchTooSmall(self.horizontal_stretch));
        }
        Ok(())
    }

    /// `(sigma_x, sigma_y)` in pixels.
    pub fn sigmas(&self) -> Result<(f64, f64), PriorError> {
        let sigma_y = dva_to_sigma(self.dva_factor, self.pxva)?;
        let sigma_x = match self.shape {
            CbShape::Circular => sigma_y,
            CbShape::Ellipsoid => sigma_y * self.horizontal_stretch,
        };
        Ok((sigma_x, sigma_y))
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }

    /// Continuous (unnormalized) Gaussian value at a point; peak is 1 at the center.
    pub fn value_at(&self, x: f64, y: f64) -> Result<f64, PriorError> {
        let (sx, sy) = self.sigmas()?;
        let (cx, cy) = self.center();
        let dx = x - cx;
        let dy = y - cy;
        Ok((-(dx * dx / (2.0 * sx * sx) + dy * dy / (2.0 * sy * sy))).exp())
    }
}

/// Samples the spec's Gaussian on the pixel grid and peak-normalizes to max 1.
pub fn make_gaussian_cb(spec: &CenterBiasSpec) -> Result<SaliencyMap, PriorError> {
    spec.validate()?;
    let (sx, sy) = spec.sigmas()?;
    let (cx, cy) = spec.center();
    let mut map = SaliencyMap::from_fn(spec.width, spec.height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        (-(dx * dx / (2.0 * sx * sx) + dy * dy / (2.0 * sy * sy))).exp()
    });
    let max = map.max();
    if max > 0.0 {
        for v in map.values_mut() {
            *v /= max;
        }
    }
    Ok(map)
}

/// Which split half an image was assigned to by [`make_supervised_cb`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitHalf {
    A,
    B,
}

/// Empirical center bias built from a seeded half/half split.
#[derive(Debug, Clone)]
pub struct SupervisedCb {
    pub cb_a: SaliencyMap,
    pub cb_b: SaliencyMap,
    /// Half each input map belongs to; evaluate it with the opposite map.
    pub assignment: Vec<SplitHalf>,
}

impl SupervisedCb {
    /// The map image `index` must be evaluated with: the opposite split's mean.
    pub fn cb_for(&self, index: usize) -> &SaliencyMap {
        match self.assignment[index] {
            SplitHalf::A => &self.cb_b,
            SplitHalf::B => &self.cb_a,
        }
    }
}

pub fn make_supervised_cb(
    density_maps: &[DensityMap],
    split_seed: u64,
) -> Result<SupervisedCb, PriorError> {
    if density_maps.len() < 2 {
        return Err(PriorError::TooFewMaps(density_maps.len()));
    }
    let (w, h) = (density_maps[0].width(), density_maps[0].height());
    for (index, m) in density_maps.iter().enumerate() {
        if (m.width(), m.height()) != (w, h) {
            return Err(PriorError::SizeMismatch {
                index,
                expected: (w, h),
                got: (m.width(), m.height()),
            });
        }
    }
    let mut order: Vec<usize> = (0..density_maps.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    order.shuffle(&mut rng);
    let half = density_maps.len() / 2;
    let mut assignment = vec![SplitHalf::B; density_maps.len()];
    for &i in &order[..half] {
        assignment[i] = SplitHalf::A;
    }

    let mean_of = |half: SplitHalf| -> SaliencyMap {
        let mut acc = vec![0.0; w * h];
        let mut count = 0usize;
        for (m, &a) in density_maps.iter().zip(&assignment) {
            if a == half {
                for (s, &v) in acc.iter_mut().zip(m.values()) {
                    *s += v;
                }
                count += 1;
            }
        }
        let inv = 1.0 / count as f64;
        for v in &mut acc {
            *v *= inv;
        }
        let mut map = SaliencyMap::new(w, h, acc).expect("mean of valid maps");
        let max = map.max();
        if max > 0.0 {
            for v in map.values_mut() {
                *v /= max;
            }
        }
        map
    };

    Ok(SupervisedCb {
        cb_a: mean_of(SplitHalf::A),
        cb_b: mean_of(SplitHalf::B),
        assignment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    MinMax,
}

/// Min-max normalization to `[0, 1]`; a constant map becomes all zeros.
pub fn normalize_map(map: &SaliencyMap, _method: Normalization) -> SaliencyMap {
    let min = map.min();
    let max = map.max();
    if max - min <= 0.0 {
        return SaliencyMap::zeros(map.width(), map.height());
    }
    // True division so the extremes land exactly on 0 and 1.
    let range = max - min;
    let values = map.values().iter().map(|&v| (v - min) / range).collect();
    SaliencyMap::new(map.width(), map.height(), values).expect("same len")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    Sum,
    Mult,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FusionSpec {
    pub mode: FusionMode,
    #[serde(default)]
    pub normalization: Normalization,
}

impl FusionSpec {
    pub fn new(mode: FusionMode) -> Self {
        Self {
            mode,
            normalization: Normalization::MinMax,
        }
    }
}

// A constant operand carries no ranking information; normalizing it to zeros
// would annihilate the other operand under Mult, so constants pass through
// unnormalized and only the fused result is subject to the degenerate rule.
fn normalize_operand(map: &SaliencyMap, method: Normalization) -> SaliencyMap {
    if map.max() - map.min() <= 0.0 {
        map.clone()
    } else {
        normalize_map(map, method)
    }
}

/// Fuses a saliency map with a prior: both operands are min-max normalized,
/// combined as `(s + c) / 2` or `s * c`, and the result normalized again.
pub fn fuse(sal: &SaliencyMap, cb: &SaliencyMap, spec: FusionSpec) -> Result<SaliencyMap, PriorError> {
    if (sal.width(), sal.height()) != (cb.width(), cb.height()) {
        return Err(PriorError::FuseDims {
            sal: (sal.width(), sal.height()),
            cb: (cb.width(), cb.height()),
        });
    }
    let s = normalize_operand(sal, spec.normalization);
    let c = normalize_operand(cb, spec.normalization);
    let fused: Vec<f64> = s
        .values()
        .iter()
        .zip(c.values())
        .map(|(&a, &b)| match spec.mode {
            FusionMode::Sum => (a + b) / 2.0,
            FusionMode::Mult => a * b,
        })
        .collect();
    let fused = SaliencyMap::new(sal.width(), sal.height(), fused).expect("same len");
    Ok(normalize_map(&fused, spec.normalization))
}

/// The DVA factors used throughout the ablation grid.
pub const DEFAULT_DVA_FACTORS: [f64; 3] = [2.0, 5.0, 14.0];
