//! Minimal complex FFT: iterative radix-2 for powers of two, Bluestein's
//! chirp-z for every other length.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    #[inline]
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Complex { re: self.re, im: -self.im }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Complex { re: self.re * s, im: self.im * s }
    }

    /// `e^{iθ}`
    #[inline]
    pub fn cis(theta: f64) -> Self {
        Complex { re: libm::cos(theta), im: libm::sin(theta) }
    }
}

impl Add for Complex {
    type Output = Complex;
    #[inline]
    fn add(self, o: Complex) -> Complex {
        Complex { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for Complex {
    type Output = Complex;
    #[inline]
    fn sub(self, o: Complex) -> Complex {
        Complex { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, o: Complex) -> Complex {
        Complex { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

#[derive(Debug, Clone)]
struct Radix2 {
    n: usize,
    /// `e^{-2πik/n}` for `k < n/2`.
    twiddles: Vec<Complex>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2).map(|k| Complex::cis(-2.0 * PI * k as f64 / n as f64)).collect();
        Radix2 { n, twiddles }
    }

    /// Unnormalized forward transform in place.
    fn forward(&self, buf: &mut [Complex]) {
        let n = self.n;
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + len / 2] * w;
                    buf[start + k] = a + b;
                    buf[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Radix2(Radix2),
    Bluestein {
        /// `e^{-iπk²/n}`
        chirp: Vec<Complex>,
        /// Forward transform of the conjugate chirp filter, length `inner.n`.
        filter: Vec<Complex>,
        inner: Radix2,
    },
}

/// One-dimensional DFT of fixed length.
#[derive(Debug, Clone)]
pub(crate) struct Fft {
    n: usize,
    plan: Plan,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        if n.is_power_of_two() {
            return Fft { n, plan: Plan::Radix2(Radix2::new(n)) };
        }
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the chirp angle small and exact.
        let chirp: Vec<Complex> = (0..n)
            .map(|k| {
                let q = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
                Complex::cis(-PI * q / n as f64)
            })
            .collect();
        let mut filter = vec![Complex::ZERO; m];
        filter[0] = chirp[0].conj();
        for k in 1..n {
            filter[k] = chirp[k].conj();
            filter[m - k] = chirp[k].conj();
        }
        inner.forward(&mut filter);
        Fft { n, plan: Plan::Bluestein { chirp, filter, inner } }
    }

    /// Unnormalized forward DFT: `X_k = Σ_j x_j e^{-2πijk/n}`.
    pub fn forward(&self, buf: &mut [Complex]) {
        debug_assert_eq!(buf.len(), self.n);
        match &self.plan {
            Plan::Radix2(r) => r.forward(buf),
            Plan::Bluestein { chirp, filter, inner } => {
                let m = inner.n;
                let mut work = vec![Complex::ZERO; m];
                for (w, (x, c)) in work.iter_mut().zip(buf.iter().zip(chirp)) {
                    *w = *x * *c;
                }
                inner.forward(&mut work);
                for (w, f) in work.iter_mut().zip(filter) {
                    *w = (*w * *f).conj();
                }
                // Inverse of length m through the conjugation identity.
                inner.forward(&mut work);
                let inv_m = 1.0 / m as f64;
                for (x, (w, c)) in buf.iter_mut().zip(work.iter().zip(chirp)) {
                    *x = w.conj().scale(inv_m) * *c;
                }
            }
        }
    }

    /// Normalized inverse DFT (`1/n` factor included).
    pub fn inverse(&self, buf: &mut [Complex]) {
        for x in buf.iter_mut() {
            *x = x.conj();
        }
        self.forward(buf);
        let s = 1.0 / self.n as f64;
        for x in buf.iter_mut() {
            *x = x.conj().scale(s);
        }
    }
}

/// Row-column 2-D DFT over a row-major `height × width` buffer.
#[derive(Debug, Clone)]
pub(crate) struct Fft2d {
    width: usize,
    height: usize,
    rows: Fft,
    cols: Fft,
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        Fft2d { width, height, rows: Fft::new(width), cols: Fft::new(height) }
    }

    pub fn forward(&self, data: &mut [Complex]) {
        self.apply(data, false)
    }

    pub fn inverse(&self, data: &mut [Complex]) {
        self.apply(data, true)
    }

    fn apply(&self, data: &mut [Complex], inverse: bool) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(data.len(), w * h);
        for row in data.chunks_exact_mut(w) {
            if inverse {
                self.rows.inverse(row)
            } else {
                self.rows.forward(row)
            }
        }
        let mut col = vec![Complex::ZERO; h];
        for c in 0..w {
            for r in 0..h {
                col[r] = data[r * w + c];
            }
            if inverse {
                self.cols.inverse(&mut col)
            } else {
                self.cols.forward(&mut col)
            }
            for r in 0..h {
                data[r * w + c] = col[r];
            }
        }
    }
}
