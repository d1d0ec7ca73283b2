//! Fixation-to-density smoothing.
//!
//! Binary fixation impulses are convolved with a circular Gaussian whose
//! sigma corresponds to one degree of visual angle by default (interpreted
//! as FWHM, matching the center-bias construction), truncated at three sigma
//! per side, and normalized to a distribution.

use super::DataError;
use crate::map::{DensityMap, SaliencyMap};
use crate::metrics::FixationSet;
use crate::priors::dva_to_sigma;

/// Symmetric 1-D Gaussian kernel truncated at `3*sigma`, normalized to sum 1.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push((-d * d * inv).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }
    kernel
}

fn convolve_separable(values: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = kernel.len() / 2;
    let mut rows = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            let v = values[y * width + x];
            if v == 0.0 {
                continue;
            }
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(width - 1);
            for xx in lo..=hi {
                rows[y * width + xx] += v * kernel[xx + radius - x];
            }
        }
    }
    let mut out = vec![0.0; values.len()];
    for x in 0..width {
        for y in 0..height {
            let v = rows[y * width + x];
            if v == 0.0 {
                continue;
            }
            let lo = y.saturating_sub(radius);
            let hi = (y + radius).min(height - 1);
            for yy in lo..=hi {
                out[yy * width + x] += v * kernel[yy + radius - y];
            }
        }
    }
    out
}

/// Smooths a map with a circular Gaussian of `sigma` pixels (3-sigma window).
pub fn gaussian_blur_map(map: &SaliencyMap, sigma: f64) -> SaliencyMap {
    if sigma <= 0.0 {
        return map.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let values = convolve_separable(map.values(), map.width(), map.height(), &kernel);
    SaliencyMap::new(map.width(), map.height(), values).expect("blur preserves shape")
}

/// Builds the continuous fixation ground truth for one image.
///
/// `sigma_dva` degrees of visual angle are converted to pixels through
/// `pxva`; the result sums to one.
pub fn fixations_to_density(
    fix: &FixationSet,
    pxva: f64,
    sigma_dva: f64,
) -> Result<DensityMap, DataError> {
    if fix.is_empty() {
        return Err(DataError::EmptyFixations);
    }
    let sigma = dva_to_sigma(sigma_dva, pxva).map_err(|e| DataError::InvalidValue {
        detail: e.to_string(),
    })?;
    let mut impulses = SaliencyMap::zeros(fix.width(), fix.height());
    for &(x, y) in fix.points() {
        impulses.values_mut()[y * fix.width() + x] += 1.0;
    }
    let smoothed = gaussian_blur_map(&impulses, sigma);
    DensityMap::from_values(smoothed).map_err(|e| DataError::InvalidValue {
        detail: e.to_string(),
    })
}
