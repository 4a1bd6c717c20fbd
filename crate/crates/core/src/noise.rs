//! Seeded Poisson degradation.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::Image;
use crate::{Error, Result};

/// Means below this use sequential-search inversion; above, PTRS rejection.
const INVERSION_LIMIT: f64 = 30.0;

const ROUNDOFF: f64 = 1e-9;

/// Replaces each pixel by an independent Poisson draw whose mean is the pixel
/// value. Pixels are visited in row-major order from a ChaCha8 stream seeded
/// with `seed`, so the output is a pure function of `(img, seed)`.
///
/// Negative means down to `−1e-9·max(1, ‖img‖∞)` are read as zero, since a
/// frequency-domain blur of a nonnegative image leaves round-off of that size.
pub fn poissonize(img: &Image, seed: u64) -> Result<Image> {
    let floor = -ROUNDOFF * img.data().iter().fold(1.0, |m, v| f64::max(m, v.abs()));
    if let Some(index) = img.data().iter().position(|&v| v < floor) {
        return Err(Error::NegativeValue { index, value: img.data()[index] });
    }
    let mut sampler = PoissonSampler::new(seed);
    let data = img.data().iter().map(|&m| sampler.sample(m.max(0.0)) as f64).collect();
    Image::new(img.width(), img.height(), data)
}

/// Poisson variate generator over a seeded ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct PoissonSampler {
    rng: ChaCha8Rng,
}

impl PoissonSampler {
    pub fn new(seed: u64) -> Self {
        PoissonSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Uniform on [0, 1) with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Draws one variate. `mean` must be finite and nonnegative.
    pub fn sample(&mut self, mean: f64) -> u64 {
        debug_assert!(mean >= 0.0 && mean.is_finite());
        if mean <= 0.0 {
            0
        } else if mean < INVERSION_LIMIT {
            self.inversion(mean)
        } else {
            self.ptrs(mean)
        }
    }

    fn inversion(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = libm::exp(-mean);
        let mut cdf = p;
        // The tail mass beyond ~mean + 40·sqrt(mean) is below f64 resolution.
        let cap = (mean + 40.0 * libm::sqrt(mean) + 40.0) as u64;
        while u > cdf && k < cap {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    /// Transformed rejection with squeeze (Hörmann's PTRS).
    fn ptrs(&mut self, mean: f64) -> u64 {
        let slam = libm::sqrt(mean);
        let loglam = libm::log(mean);
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = libm::floor((2.0 * a / us + b) * u + mean + 0.43);
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = libm::log(v) + libm::log(inv_alpha) - libm::log(a / (us * us) + b);
            let rhs = -mean + k * loglam - libm::lgamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}
