//! Point-spread functions and the circular convolution operator `H`.

use alloc::vec;
use alloc::vec::Vec;

use crate::fft::{Complex, Fft2d};
use crate::image::Image;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsfKind {
    /// `k × k` box average, `k` odd.
    MovingAverage(usize),
    /// Sampled isotropic Gaussian on a `(2⌈4σ⌉+1)²` support.
    Gaussian(f64),
    /// Single unit tap; the convolution becomes the identity.
    Delta,
}

/// A blur kernel with odd dimensions, stored with its origin at the centre tap.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    kernel: Image,
}

impl Psf {
    pub fn new(kind: PsfKind, normalize: bool) -> Result<Psf> {
        let kernel = match kind {
            PsfKind::MovingAverage(k) => {
                if k == 0 || k % 2 == 0 {
                    return Err(Error::param("moving_average", "kernel size must be odd and >= 1"));
                }
                Image::filled(k, k, 1.0 / (k * k) as f64)?
            }
            PsfKind::Gaussian(sigma) => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::param("gaussian", "sigma must be positive"));
                }
                let half = libm::ceil(4.0 * sigma) as usize;
                let k = 2 * half + 1;
                let c = half as f64;
                Image::from_fn(k, k, |r, col| {
                    let (dr, dc) = (r as f64 - c, col as f64 - c);
                    libm::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma))
                })?
            }
            PsfKind::Delta => Image::filled(1, 1, 1.0)?,
        };
        Psf::from_kernel(kernel, normalize)
    }

    /// Uses an arbitrary kernel image. Both sides must be odd so the centre
    /// tap is well defined.
    pub fn from_kernel(kernel: Image, normalize: bool) -> Result<Psf> {
        if kernel.width() % 2 == 0 || kernel.height() % 2 == 0 {
            return Err(Error::param("psf", "kernel dimensions must be odd"));
        }
        if !normalize {
            return Ok(Psf { kernel });
        }
        let sum = kernel.sum();
        if sum == 0.0 {
            return Err(Error::param("psf", "kernel sums to zero and cannot be normalized"));
        }
        Ok(Psf { kernel: kernel.scaled(1.0 / sum)? })
    }

    pub fn kernel(&self) -> &Image {
        &self.kernel
    }

    /// `(row, col)` of the centre tap.
    pub fn origin(&self) -> (usize, usize) {
        (self.kernel.height() / 2, self.kernel.width() / 2)
    }
}

/// Circular (periodic-boundary) convolution by a fixed PSF on images of a
/// fixed size. The transfer function is computed once at construction.
#[derive(Debug, Clone)]
pub struct ConvOperator {
    psf: Psf,
    width: usize,
    height: usize,
    transfer: Vec<Complex>,
    fft: Fft2d,
    /// Unit tap at the origin; filtering is skipped so the result is exact.
    identity: bool,
}

impl ConvOperator {
    pub fn new(psf: Psf, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let fft = Fft2d::new(width, height);
        let mut transfer = vec![Complex::ZERO; width * height];
        let (cr, cc) = psf.origin();
        let k = psf.kernel();
        // Kernels larger than the image wrap around and accumulate.
        for kr in 0..k.height() {
            let r = (kr as isize - cr as isize).rem_euclid(height as isize) as usize;
            for kc in 0..k.width() {
                let c = (kc as isize - cc as isize).rem_euclid(width as isize) as usize;
                transfer[r * width + c].re += k.get(kr, kc);
            }
        }
        let identity = transfer.iter().enumerate().all(|(i, t)| t.re == if i == 0 { 1.0 } else { 0.0 });
        fft.forward(&mut transfer);
        Ok(ConvOperator { psf, width, height, transfer, fft, identity })
    }

    pub fn psf(&self) -> &Psf {
        &self.psf
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `h ⊛ x`
    pub fn apply(&self, x: &Image) -> Result<Image> {
        self.filter(x, false)
    }

    /// Convolution with the flipped kernel, the exact adjoint of [`apply`](Self::apply).
    pub fn apply_adjoint(&self, y: &Image) -> Result<Image> {
        self.filter(y, true)
    }

    fn filter(&self, x: &Image, adjoint: bool) -> Result<Image> {
        x.check_shape(self.width, self.height)?;
        if self.identity {
            return Ok(x.clone());
        }
        let mut buf: Vec<Complex> = x.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (b, t) in buf.iter_mut().zip(&self.transfer) {
            *b = *b * if adjoint { t.conj() } else { *t };
        }
        self.fft.inverse(&mut buf);
        Ok(Image::from_raw(self.width, self.height, buf.into_iter().map(|c| c.re).collect()))
    }

    /// `‖H‖₂`, the largest modulus of the transfer function. Exact for
    /// circular convolution, whose eigenvectors are the Fourier modes.
    pub fn spectral_norm(&self) -> f64 {
        self.transfer.iter().map(|t| t.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Image {
        Image::from_fn(w, h, |_, _| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5).unwrap()
    }

    /// Direct O(n·k²) periodic convolution.
    fn spatial_conv(psf: &Psf, x: &Image) -> Image {
        let (w, h) = (x.width() as isize, x.height() as isize);
        let k = psf.kernel();
        let (cr, cc) = psf.origin();
        Image::from_fn(x.width(), x.height(), |r, c| {
            let mut acc = 0.0;
            for kr in 0..k.height() {
                for kc in 0..k.width() {
                    let sr = (r as isize - (kr as isize - cr as isize)).rem_euclid(h) as usize;
                    let sc = (c as isize - (kc as isize - cc as isize)).rem_euclid(w) as usize;
                    acc += k.get(kr, kc) * x.get(sr, sc);
                }
            }
            acc
        })
        .unwrap()
    }

    fn dot(a: &Image, b: &Image) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn moving_average_taps() {
        let psf = Psf::new(PsfKind::MovingAverage(7), true).unwrap();
        assert_eq!(psf.kernel().len(), 49);
        assert!(psf.kernel().data().iter().all(|&v| (v - 1.0 / 49.0).abs() < 1e-15));
        assert!(Psf::new(PsfKind::MovingAverage(4), true).is_err());
        assert!(Psf::new(PsfKind::MovingAverage(0), true).is_err());
    }

    #[test]
    fn gaussian_normalized() {
        let psf = Psf::new(PsfKind::Gaussian(1.0), true).unwrap();
        assert_eq!((psf.kernel().width(), psf.kernel().height()), (9, 9));
        assert!((psf.kernel().sum() - 1.0).abs() < 1e-12);
        assert!(Psf::new(PsfKind::Gaussian(0.0), true).is_err());
    }

    #[test]
    fn delta_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_image(12, 10, &mut rng);
        let op = ConvOperator::new(Psf::new(PsfKind::Delta, true).unwrap(), 12, 10).unwrap();
        assert_eq!(op.apply(&x).unwrap().data(), x.data());
        assert_eq!(op.apply_adjoint(&x).unwrap().data(), x.data());
        assert!((op.spectral_norm() - 1.0).abs() < 1e-12);
        // A shifted tap still goes through the transform.
        let shifted = Psf::from_kernel(Image::new(3, 1, vec![0.0, 0.0, 1.0]).unwrap(), false).unwrap();
        let op = ConvOperator::new(shifted, 12, 10).unwrap();
        assert_ne!(op.apply(&x).unwrap().data(), x.data());
    }

    #[test]
    fn flat_image_preserved_by_unit_sum_psf() {
        let op = ConvOperator::new(Psf::new(PsfKind::MovingAverage(5), true).unwrap(), 16, 16).unwrap();
        let y = op.apply(&Image::filled(16, 16, 3.5).unwrap()).unwrap();
        assert!(y.data().iter().all(|v| (v - 3.5).abs() < 1e-12));
    }

    #[test]
    fn impulse_wraps_around_corner() {
        let op = ConvOperator::new(Psf::new(PsfKind::MovingAverage(3), true).unwrap(), 8, 8).unwrap();
        let x = Image::from_fn(8, 8, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 }).unwrap();
        let y = op.apply(&x).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let inside = [7, 0, 1].contains(&r) && [7, 0, 1].contains(&c);
                let expect = if inside { 1.0 / 9.0 } else { 0.0 };
                assert!((y.get(r, c) - expect).abs() < 1e-14, "({r},{c})");
            }
        }
    }

    #[test]
    fn frequency_domain_matches_spatial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let asym = Image::from_fn(5, 3, |r, c| (r * 5 + c) as f64 + 1.0).unwrap();
        let psfs = [
            Psf::new(PsfKind::MovingAverage(3), true).unwrap(),
            Psf::new(PsfKind::Gaussian(0.8), true).unwrap(),
            Psf::from_kernel(asym, true).unwrap(),
        ];
        for psf in psfs {
            for &(w, h) in &[(16usize, 16usize), (9, 12), (5, 7)] {
                let x = random_image(w, h, &mut rng);
                let op = ConvOperator::new(psf.clone(), w, h).unwrap();
                let fast = op.apply(&x).unwrap();
                let slow = spatial_conv(&psf, &x);
                for (a, b) in fast.data().iter().zip(slow.data()) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn adjoint_identity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let asym = Image::from_fn(3, 5, |r, c| ((r + 2 * c) % 4) as f64).unwrap();
        let op = ConvOperator::new(Psf::from_kernel(asym, true).unwrap(), 16, 16).unwrap();
        for _ in 0..25 {
            let x = random_image(16, 16, &mut rng);
            let y = random_image(16, 16, &mut rng);
            let lhs = dot(&op.apply(&x).unwrap(), &y);
            let rhs = dot(&x, &op.apply_adjoint(&y).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));
        }
    }

    #[test]
    fn symmetric_psf_is_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = ConvOperator::new(Psf::new(PsfKind::MovingAverage(7), true).unwrap(), 16, 16).unwrap();
        let x = random_image(16, 16, &mut rng);
        let a = op.apply(&x).unwrap();
        let b = op.apply_adjoint(&x).unwrap();
        let diff = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn spectral_norm_unit_sum_and_homogeneity() {
        let psf = Psf::new(PsfKind::MovingAverage(7), true).unwrap();
        let op = ConvOperator::new(psf.clone(), 32, 32).unwrap();
        assert!((op.spectral_norm() - 1.0).abs() < 1e-12);

        let doubled = Psf::from_kernel(psf.kernel().scaled(2.0).unwrap(), false).unwrap();
        let op2 = ConvOperator::new(doubled, 32, 32).unwrap();
        assert!((op2.spectral_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_power_method() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let asym = Image::from_fn(3, 3, |r, c| if r == 0 && c == 2 { 3.0 } else { 1.0 }).unwrap();
        for psf in [Psf::new(PsfKind::Gaussian(1.5), true).unwrap(), Psf::from_kernel(asym, false).unwrap()] {
            let op = ConvOperator::new(psf, 16, 16).unwrap();
            let mut v = random_image(16, 16, &mut rng);
            let mut est = 0.0;
            for _ in 0..5000 {
                let w = op.apply_adjoint(&op.apply(&v).unwrap()).unwrap();
                let norm = libm::sqrt(dot(&w, &w));
                est = libm::sqrt(norm / libm::sqrt(dot(&v, &v)));
                v = w.scaled(1.0 / norm).unwrap();
            }
            assert!((est - op.spectral_norm()).abs() < 1e-6, "{est} vs {}", op.spectral_norm());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let op = ConvOperator::new(Psf::new(PsfKind::Delta, true).unwrap(), 8, 8).unwrap();
        assert!(matches!(op.apply(&Image::zeros(4, 8).unwrap()), Err(Error::DimensionMismatch { .. })));
        assert!(Psf::from_kernel(Image::zeros(2, 3).unwrap(), false).is_err());
    }
}
