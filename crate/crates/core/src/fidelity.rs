//! Anscombe stabilization and the smooth data-fidelity term
//! `f₁(α) = F(HΦα)`, `F(η) = Σ ½(zᵢ − 2√(ηᵢ + b))²`.

use alloc::vec::Vec;

use crate::dictionary::{CoefVector, Dictionary};
use crate::image::{Image, Shape};
use crate::operators::ConvOperator;
use crate::{Error, Result};

/// The classical Anscombe offset `b = 3/8`.
pub const ANSCOMBE_OFFSET: f64 = 0.375;

/// Offset `b = 1/8`, which reduces the bias of the stabilized mean at the
/// price of a larger Lipschitz constant.
pub const BIAS_CORRECTED_OFFSET: f64 = 0.125;

/// `zᵢ = 2√(yᵢ + offset)`
pub fn anscombe(y: &Image, offset: f64) -> Result<Image> {
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(Error::param("offset", "must be positive"));
    }
    if let Some(index) = y.data().iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeValue { index, value: y.data()[index] });
    }
    y.map(|v| 2.0 * libm::sqrt(v + offset))
}

/// Per-pixel fidelity `f(η) = ½(z − 2√(η + b))²` on `η ≥ 0`.
///
/// For `η < 0` the square root leaves its domain (or, for `η ≥ −b`, the
/// function loses the curvature bound), so `f` is continued by its
/// second-order expansion at zero. The continuation is C¹, convex, and its
/// curvature `z/(2b^{3/2})` equals the supremum of `f''` on `η ≥ 0`.
#[derive(Debug, Clone, Copy)]
struct PixelTerm {
    z: f64,
    offset: f64,
    sqrt_offset: f64,
    /// `f''(0)`
    curvature0: f64,
}

impl PixelTerm {
    fn new(z: f64, offset: f64) -> Self {
        let sqrt_offset = libm::sqrt(offset);
        PixelTerm { z, offset, sqrt_offset, curvature0: z / (2.0 * offset * sqrt_offset) }
    }

    #[inline]
    fn value(&self, eta: f64) -> f64 {
        if eta >= 0.0 {
            let r = self.z - 2.0 * libm::sqrt(eta + self.offset);
            0.5 * r * r
        } else {
            let r0 = self.z - 2.0 * self.sqrt_offset;
            0.5 * r0 * r0 + self.slope0() * eta + 0.5 * self.curvature0 * eta * eta
        }
    }

    #[inline]
    fn slope0(&self) -> f64 {
        2.0 - self.z / self.sqrt_offset
    }

    #[inline]
    fn derivative(&self, eta: f64) -> f64 {
        if eta >= 0.0 {
            2.0 - self.z / libm::sqrt(eta + self.offset)
        } else {
            self.slope0() + self.curvature0 * eta
        }
    }
}

/// The stabilized observation together with the blur and dictionary it is
/// modelled through.
#[derive(Debug, Clone)]
pub struct FidelityModel<'a> {
    z: Image,
    conv: &'a ConvOperator,
    dict: &'a Dictionary,
    offset: f64,
    z_inf: f64,
    h_norm: f64,
    kappa_bound: f64,
}

impl<'a> FidelityModel<'a> {
    /// Stabilizes the raw counts `y` with `offset` and builds the model.
    pub fn new(y: &Image, conv: &'a ConvOperator, dict: &'a Dictionary, offset: f64) -> Result<Self> {
        let z = anscombe(y, offset)?;
        Self::from_stabilized(z, conv, dict, offset)
    }

    /// Uses an already stabilized observation `z`.
    pub fn from_stabilized(z: Image, conv: &'a ConvOperator, dict: &'a Dictionary, offset: f64) -> Result<Self> {
        if !(offset > 0.0 && offset.is_finite()) {
            return Err(Error::param("offset", "must be positive"));
        }
        z.check_shape(conv.width(), conv.height())?;
        if dict.width() != conv.width() || dict.height() != conv.height() {
            return Err(Error::mismatch(Shape(conv.width(), conv.height()), Shape(dict.width(), dict.height())));
        }
        let z_inf = z.data().iter().fold(0.0, |m, v| f64::max(m, v.abs()));
        let h_norm = conv.spectral_norm();
        let kappa_bound = dict.frame_constant() * h_norm * h_norm * z_inf / (2.0 * offset * libm::sqrt(offset));
        Ok(FidelityModel { z, conv, dict, offset, z_inf, h_norm, kappa_bound })
    }

    pub fn z(&self) -> &Image {
        &self.z
    }

    pub fn conv(&self) -> &'a ConvOperator {
        self.conv
    }

    pub fn dict(&self) -> &'a Dictionary {
        self.dict
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `‖z‖∞`
    pub fn z_inf(&self) -> f64 {
        self.z_inf
    }

    /// `‖H‖₂`
    pub fn conv_norm(&self) -> f64 {
        self.h_norm
    }

    /// Upper bound on the Lipschitz constant of `∇f₁`:
    /// `κ = c‖H‖₂²‖z‖∞ / (2 b^{3/2})`, i.e. `(2/3)^{3/2}·4·c‖H‖₂²‖z‖∞` for `b = 3/8`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.kappa_bound
    }

    /// Supremum of admissible constant forward-backward steps, `2/κ`.
    pub fn step_bound(&self) -> f64 {
        2.0 / self.kappa_bound
    }

    pub fn zero_coefs(&self) -> CoefVector {
        self.dict.zeros()
    }

    /// `η = HΦα`
    pub fn blurred_estimate(&self, a: &CoefVector) -> Result<Image> {
        let x = self.dict.synthesize(a)?;
        self.conv.apply(&x)
    }

    fn terms(&self) -> impl Iterator<Item = PixelTerm> + '_ {
        self.z.data().iter().map(|&z| PixelTerm::new(z, self.offset))
    }

    /// `F(η)` for a given blurred estimate.
    pub fn value_at(&self, eta: &Image) -> Result<f64> {
        eta.check_shape(self.z.width(), self.z.height())?;
        let v: f64 = self.terms().zip(eta.data()).map(|(t, &e)| t.value(e)).sum();
        if !v.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(v)
    }

    /// `∇F(η)`, elementwise `2 − zᵢ/√(ηᵢ + b)`.
    pub fn image_gradient(&self, eta: &Image) -> Result<Image> {
        eta.check_shape(self.z.width(), self.z.height())?;
        let data: Vec<f64> = self.terms().zip(eta.data()).map(|(t, &e)| t.derivative(e)).collect();
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Image::from_raw(eta.width(), eta.height(), data))
    }

    /// `f₁(α)`
    pub fn value(&self, a: &CoefVector) -> Result<f64> {
        self.value_at(&self.blurred_estimate(a)?)
    }

    /// `∇f₁(α) = Φᵀ Hᵀ ∇F(HΦα)`
    pub fn gradient(&self, a: &CoefVector) -> Result<CoefVector> {
        Ok(self.value_and_gradient(a)?.1)
    }

    /// Both quantities from a single blurred estimate.
    pub fn value_and_gradient(&self, a: &CoefVector) -> Result<(f64, CoefVector)> {
        let e = self.evaluate(a)?;
        Ok((e.value, e.gradient))
    }

    pub(crate) fn evaluate(&self, a: &CoefVector) -> Result<Evaluation> {
        let x = self.dict.synthesize(a)?;
        let eta = self.conv.apply(&x)?;
        let value = self.value_at(&eta)?;
        let back = self.conv.apply_adjoint(&self.image_gradient(&eta)?)?;
        let gradient = self.dict.analyze(&back)?;
        if let Some(index) = gradient.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Evaluation { x, value, gradient })
    }

    /// Residual `‖z − 2√(max(η, 0) + b)‖²` in the stabilized domain.
    pub fn residual_ss(&self, eta: &Image) -> Result<f64> {
        eta.check_shape(self.z.width(), self.z.height())?;
        Ok(self
            .z
            .data()
            .iter()
            .zip(eta.data())
            .map(|(&z, &e)| {
                let r = z - 2.0 * libm::sqrt(e.max(0.0) + self.offset);
                r * r
            })
            .sum())
    }
}

/// Everything computed along the way to `∇f₁(α)`.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    /// `Φα`
    pub x: Image,
    pub value: f64,
    pub gradient: CoefVector,
}
