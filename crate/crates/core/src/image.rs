//! Real-valued 2-D rasters and restoration-quality metrics.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// A row-major raster of `f64` samples.
///
/// Used for the original signal, the observed counts, the stabilized
/// observation and every intermediate blurred estimate.
#[derive(Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Wraps `data` as a `width`×`height` image, rejecting empty sizes,
    /// length mismatches and non-finite samples.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let n = width.checked_mul(height).ok_or(Error::InvalidDimensions { width, height })?;
        if data.len() != n {
            return Err(Error::mismatch(n, data.len()));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Image::new(width, height, vec![value; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Image::filled(width, height, 0.0)
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Image::new(width, height, data)
    }

    /// Builds an image without validating finiteness. Internal operators use
    /// this on outputs that are finite by construction.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Image { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel count.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::mismatch(Shape(width, height), Shape(self.width, self.height)));
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// Elementwise map, keeping the shape. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Result<Image> {
        Image::new(self.width, self.height, self.data.iter().copied().map(f).collect())
    }

    pub fn scaled(&self, s: f64) -> Result<Image> {
        self.map(|v| v * s)
    }
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("min", &self.min())
            .field("max", &self.max())
            .finish()
    }
}

pub(crate) struct Shape(pub usize, pub usize);

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

/// Linearly rescales a nonnegative image so that its maximum equals `peak`.
pub fn rescale_peak(img: &Image, peak: f64) -> Result<Image> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::param("peak", "must be positive and finite"));
    }
    if let Some(index) = img.data.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeValue { index, value: img.data[index] });
    }
    let max = img.max();
    if max <= 0.0 {
        return Err(Error::ZeroImage);
    }
    if max == peak {
        return Ok(img.clone());
    }
    img.map(|v| v * peak / max)
}

/// Per-pixel error summary between a reference and an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Mean absolute error.
    pub mae: f64,
    /// Mean squared error.
    pub mse: f64,
    /// Maximum of the reference image.
    pub peak_intensity: f64,
}

impl MetricReport {
    /// MAE divided by the reference peak intensity.
    pub fn normalized_mae(&self) -> f64 {
        self.mae / self.peak_intensity
    }
}

pub fn metrics(reference: &Image, estimate: &Image) -> Result<MetricReport> {
    estimate.check_shape(reference.width, reference.height)?;
    let n = reference.len() as f64;
    let (abs, sq) = reference
        .data
        .iter()
        .zip(&estimate.data)
        .fold((0.0, 0.0), |(a, s), (r, e)| {
            let d = r - e;
            (a + d.abs(), s + d * d)
        });
    Ok(MetricReport { mae: abs / n, mse: sq / n, peak_intensity: reference.max() })
}
