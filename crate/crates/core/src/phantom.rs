//! Synthetic test images.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::Image;
use crate::{Error, Result};

/// An isolated single-pixel source. Coordinates are fractions of the image
/// height (`row`) and width (`col`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub row: f64,
    pub col: f64,
    pub amplitude: f64,
}

/// An isotropic Gaussian blob, truncated to zero beyond three standard
/// deviations so the background stays exactly zero. `sigma` is a fraction of
/// the smaller image side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBlob {
    pub row: f64,
    pub col: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

/// A straight segment of constant intensity; `thickness` is in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub thickness: f64,
    pub amplitude: f64,
}

/// Geometry of the point/blob/line phantom. Overlapping features add up.
#[derive(Debug, Clone, PartialEq)]
pub struct LinesGaussiansParams {
    pub points: Vec<PointSource>,
    pub blobs: Vec<GaussianBlob>,
    pub lines: Vec<LineSegment>,
}

impl Default for LinesGaussiansParams {
    /// Point sources in the upper-left corner, three blobs of different
    /// widths and two line segments, all with unit-order amplitudes.
    fn default() -> Self {
        LinesGaussiansParams {
            points: vec![
                PointSource { row: 0.10, col: 0.10, amplitude: 1.0 },
                PointSource { row: 0.10, col: 0.22, amplitude: 0.8 },
                PointSource { row: 0.22, col: 0.10, amplitude: 0.6 },
            ],
            blobs: vec![
                GaussianBlob { row: 0.38, col: 0.40, sigma: 0.05, amplitude: 0.7 },
                GaussianBlob { row: 0.66, col: 0.30, sigma: 0.035, amplitude: 1.0 },
                GaussianBlob { row: 0.70, col: 0.78, sigma: 0.07, amplitude: 0.5 },
            ],
            lines: vec![
                LineSegment { from: (0.10, 0.55), to: (0.42, 0.90), thickness: 1.0, amplitude: 0.6 },
                LineSegment { from: (0.90, 0.10), to: (0.90, 0.60), thickness: 1.0, amplitude: 0.8 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhantomKind {
    LinesGaussians(LinesGaussiansParams),
    /// Single pixels of value `amplitude` at `spacing/2 + k·spacing` along both axes.
    PointGrid { spacing: usize, amplitude: f64 },
    /// Constant image.
    Flat(f64),
}

pub const MIN_LINES_GAUSSIANS_SIDE: usize = 16;

pub fn phantom(kind: PhantomKind, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    match kind {
        PhantomKind::Flat(v) => {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param("flat value", "must be finite and nonnegative"));
            }
            Image::filled(width, height, v)
        }
        PhantomKind::PointGrid { spacing, amplitude } => {
            if spacing == 0 {
                return Err(Error::param("spacing", "must be positive"));
            }
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(Error::param("amplitude", "must be finite and nonnegative"));
            }
            let on_grid = |i: usize| i % spacing == spacing / 2;
            Image::from_fn(width, height, |r, c| if on_grid(r) && on_grid(c) { amplitude } else { 0.0 })
        }
        PhantomKind::LinesGaussians(params) => lines_gaussians(&params, width, height),
    }
}

fn lines_gaussians(p: &LinesGaussiansParams, width: usize, height: usize) -> Result<Image> {
    if width < MIN_LINES_GAUSSIANS_SIDE || height < MIN_LINES_GAUSSIANS_SIDE {
        return Err(Error::UnsupportedSize { width, height, reason: "lines_gaussians needs both sides >= 16" });
    }
    let amplitudes = p
        .points
        .iter()
        .map(|s| s.amplitude)
        .chain(p.blobs.iter().map(|b| b.amplitude))
        .chain(p.lines.iter().map(|l| l.amplitude));
    for a in amplitudes {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::param("amplitude", "must be finite and nonnegative"));
        }
    }

    let (w, h) = (width as f64, height as f64);
    let side = w.min(h);
    let mut data = vec![0.0; width * height];

    for b in &p.blobs {
        let (cr, cc) = (b.row * h, b.col * w);
        let s = (b.sigma * side).max(0.5);
        for r in 0..height {
            for c in 0..width {
                let (dr, dc) = (r as f64 + 0.5 - cr, c as f64 + 0.5 - cc);
                let d2 = dr * dr + dc * dc;
                if d2 <= 9.0 * s * s {
                    data[r * width + c] += b.amplitude * libm::exp(-d2 / (2.0 * s * s));
                }
            }
        }
    }

    for l in &p.lines {
        let (r0, c0) = (l.from.0 * h, l.from.1 * w);
        let (r1, c1) = (l.to.0 * h, l.to.1 * w);
        let half = 0.5 * l.thickness.max(0.0);
        for r in 0..height {
            for c in 0..width {
                let d = segment_distance((r as f64 + 0.5, c as f64 + 0.5), (r0, c0), (r1, c1));
                if d <= half {
                    data[r * width + c] += l.amplitude;
                }
            }
        }
    }

    for s in &p.points {
        let r = ((s.row * h) as usize).min(height - 1);
        let c = ((s.col * w) as usize).min(width - 1);
        data[r * width + c] += s.amplitude;
    }

    Image::new(width, height, data)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vr, vc) = (b.0 - a.0, b.1 - a.1);
    let (wr, wc) = (p.0 - a.0, p.1 - a.1);
    let len2 = vr * vr + vc * vc;
    let t = if len2 > 0.0 { ((wr * vr + wc * vc) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (dr, dc) = (wr - t * vr, wc - t * vc);
    libm::sqrt(dr * dr + dc * dc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_lg(w: usize, h: usize) -> Image {
        phantom(PhantomKind::LinesGaussians(LinesGaussiansParams::default()), w, h).unwrap()
    }

    #[test]
    fn flat_is_constant() {
        let img = phantom(PhantomKind::Flat(7.0), 4, 4).unwrap();
        assert!(img.data().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn point_grid_count() {
        let img = phantom(PhantomKind::PointGrid { spacing: 8, amplitude: 30.0 }, 32, 32).unwrap();
        let nz: alloc::vec::Vec<f64> = img.data().iter().copied().filter(|&v| v != 0.0).collect();
        assert_eq!(nz.len(), 16);
        assert!(nz.iter().all(|&v| v == 30.0));
    }

    #[test]
    fn lines_gaussians_content() {
        for &size in &[16usize, 32, 64, 128] {
            let img = default_lg(size, size);
            assert!(img.min() >= 0.0);
            assert!(img.max() > 0.0);

            // The upper-left point source has an all-zero 8-neighbourhood.
            let p = LinesGaussiansParams::default().points[0];
            let (r, c) = ((p.row * size as f64) as usize, (p.col * size as f64) as usize);
            assert!(img.get(r, c) > 0.0);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr != 0 || dc != 0 {
                        assert_eq!(img.get((r as i64 + dr) as usize, (c as i64 + dc) as usize), 0.0, "size {size}");
                    }
                }
            }
        }
        let p = LinesGaussiansParams::default();
        assert!(p.blobs.len() >= 2 && p.lines.len() >= 2);
    }

    #[test]
    fn lines_gaussians_background_is_zero() {
        let img = default_lg(128, 128);
        let zeros = img.data().iter().filter(|&&v| v == 0.0).count();
        assert!(zeros > img.len() / 2);
    }

    #[test]
    fn errors() {
        assert!(matches!(phantom(PhantomKind::Flat(1.0), 0, 4), Err(Error::InvalidDimensions { .. })));
        assert!(matches!(
            phantom(PhantomKind::LinesGaussians(LinesGaussiansParams::default()), 8, 8),
            Err(Error::UnsupportedSize { .. })
        ));
        assert!(phantom(PhantomKind::Flat(-1.0), 4, 4).is_err());
    }
}
