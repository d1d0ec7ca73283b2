//! Single-channel maps tied to an image's pixel grid.

use thiserror::Error;

use crate::tensor::{bilinear_upsample, Tensor};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("value count {got} does not match {width}x{height}")]
    DataLength {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("map contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("map contains a negative value at index {index}")]
    Negative { index: usize },
    #[error("map dimensions {got:?} do not match {expected:?}")]
    DimMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("density values sum to {sum}, expected 1")]
    NotADistribution { sum: f64 },
}

/// Nonnegative single-channel map, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, MapError> {
        if values.len() != width * height {
            return Err(MapError::DataLength {
                width,
                height,
                got: values.len(),
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(MapError::NonFinite { index });
            }
            if v < 0.0 {
                return Err(MapError::Negative { index });
            }
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Position of the maximum value; ties resolve to the first in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }

    /// Bilinear resize (up or down) with the half-pixel-center convention.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> SaliencyMap {
        if width == self.width && height == self.height {
            return self.clone();
        }
        if width >= self.width && height >= self.height {
            // Same path the network upsampling uses.
            let t = Tensor::new(&[1, 1, self.height, self.width], self.values.clone())
                .expect("consistent dims");
            let up = bilinear_upsample(&t, height, width).expect("upsample dims checked");
            return SaliencyMap {
                width,
                height,
                values: up.into_data(),
            };
        }
        let sy = self.height as f64 / height as f64;
        let sx = self.width as f64 / width as f64;
        SaliencyMap::from_fn(width, height, |x, y| {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
            let y0 = fy.floor() as usize;
            let x0 = fx.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let x1 = (x0 + 1).min(self.width - 1);
            let dy = fy - y0 as f64;
            let dx = fx - x0 as f64;
            self.get(x0, y0) * (1.0 - dy) * (1.0 - dx)
                + self.get(x1, y0) * (1.0 - dy) * dx
                + self.get(x0, y1) * dy * (1.0 - dx)
                + self.get(x1, y1) * dy * dx
        })
    }
}

/// Which normalization a [`DensityMap`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityForm {
    /// Values sum to one.
    Distribution,
    /// Maximum value is one.
    PeakNormalized,
}

/// Continuous fixation ground truth: smoothed fixations in either
/// distribution or peak-normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    map: SaliencyMap,
    form: DensityForm,
}

impl DensityMap {
    pub fn new(map: SaliencyMap, form: DensityForm) -> Result<Self, MapError> {
        if form == DensityForm::Distribution {
            let sum = map.sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(MapError::NotADistribution { sum });
            }
        }
        Ok(Self { map, form })
    }

    /// Wraps arbitrary nonnegative values, rescaling them to sum to one.
    pub fn from_values(map: SaliencyMap) -> Result<Self, MapError> {
        let sum = map.sum();
        let map = if sum > 0.0 {
            let mut m = map;
            for v in m.values_mut() {
                *v /= sum;
            }
            m
        } else {
            map
        };
        Self::new(map, DensityForm::Distribution)
    }

    pub fn map(&self) -> &SaliencyMap {
        &self.map
    }

    pub fn form(&self) -> DensityForm {
        self.form
    }

    pub fn width(&self) -> usize {
        self.map.width()
    }

    pub fn height(&self) -> usize {
        self.map.height()
    }

    pub fn values(&self) -> &[f64] {
        self.map.values()
    }
}
