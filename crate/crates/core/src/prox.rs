//! Proximity operators: coordinatewise thresholding for the sparsity
//! penalty, the projection onto `C′ = {α : Φα ≥ 0}`, and the prox of
//! `f₂ = ι_{C′} + λΨ` computed by Douglas-Rachford.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::dictionary::{CoefVector, Dictionary};
use crate::{Error, Result};

/// Round-off allowance of the feasibility test `Φα ≥ 0`.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// An even, convex, nondecreasing-on-`[0, ∞)` function `ψ` with `ψ(0) = 0`
/// and `ψ′₊(0) > 0`, applied coordinatewise as `Ψ(α) = Σ ψ(αᵢ)`.
pub trait Penalty: fmt::Debug + Send + Sync {
    /// `ψ(t)`
    fn value(&self, t: f64) -> f64;

    /// `ψ′(t)` for `t > 0`.
    fn derivative(&self, t: f64) -> f64;

    fn right_derivative_at_zero(&self) -> f64;

    /// `argmin_u δψ(u) + ½(u − g)²`. The default solves `u + δψ′(u) = |g|`
    /// by bisection.
    fn prox(&self, delta: f64, g: f64) -> f64 {
        prox_by_bisection(self, delta, g)
    }

    /// `Ψ(α)`
    fn total(&self, a: &[f64]) -> f64 {
        a.iter().map(|&t| self.value(t)).sum()
    }
}

const BISECTION_TOL: f64 = 1e-10;

fn prox_by_bisection<P: Penalty + ?Sized>(p: &P, delta: f64, g: f64) -> f64 {
    let m = g.abs();
    if m <= delta * p.right_derivative_at_zero() {
        return 0.0;
    }
    // u + δψ′(u) − |g| is increasing, negative at 0⁺ and nonnegative at |g|.
    let (mut lo, mut hi) = (0.0, m);
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid + delta * p.derivative(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    libm::copysign(0.5 * (lo + hi), g)
}

/// `ψ(t) = |t|`; its prox is soft-thresholding.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct L1;

impl Penalty for L1 {
    fn value(&self, t: f64) -> f64 {
        t.abs()
    }

    fn derivative(&self, _t: f64) -> f64 {
        1.0
    }

    fn right_derivative_at_zero(&self) -> f64 {
        1.0
    }

    #[inline]
    fn prox(&self, delta: f64, g: f64) -> f64 {
        soft_threshold(g, delta)
    }

    fn total(&self, a: &[f64]) -> f64 {
        a.iter().map(|t| t.abs()).sum()
    }
}

#[inline]
pub fn soft_threshold(g: f64, delta: f64) -> f64 {
    let m = g.abs() - delta;
    if m > 0.0 {
        libm::copysign(m, g)
    } else {
        0.0
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied `ψ`. The caller is responsible for the convexity,
/// evenness and monotonicity contract.
#[derive(Clone)]
pub struct CustomPenalty {
    value: ScalarFn,
    derivative: ScalarFn,
    derivative_at_zero: f64,
}

impl CustomPenalty {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        right_derivative_at_zero: f64,
    ) -> Result<Self> {
        if !(right_derivative_at_zero > 0.0 && right_derivative_at_zero.is_finite()) {
            return Err(Error::param("right_derivative_at_zero", "must be positive and finite"));
        }
        Ok(CustomPenalty {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            derivative_at_zero: right_derivative_at_zero,
        })
    }
}

impl fmt::Debug for CustomPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPenalty").field("right_derivative_at_zero", &self.derivative_at_zero).finish()
    }
}

impl Penalty for CustomPenalty {
    fn value(&self, t: f64) -> f64 {
        (self.value)(t.abs())
    }

    fn derivative(&self, t: f64) -> f64 {
        (self.derivative)(t)
    }

    fn right_derivative_at_zero(&self) -> f64 {
        self.derivative_at_zero
    }
}

/// `prox_{δΨ}(g)`, coordinatewise.
pub fn prox_penalty<P: Penalty + ?Sized>(p: &P, delta: f64, g: &CoefVector) -> CoefVector {
    g.map(|v| p.prox(delta, v))
}

/// `P_{C′}(α) = α − c⁻¹Φᵀ min(Φα, 0)`.
///
/// Because `ΦΦᵀ = cI`, `Φ P_{C′}(α) = max(Φα, 0)`, so this is the exact
/// projection onto `C′` for every tight frame, redundant or not.
pub fn project_positive_coefs(dict: &Dictionary, a: &CoefVector) -> Result<CoefVector> {
    let x = dict.synthesize(a)?;
    Ok(project_with_synthesis(dict, a, x.data()))
}

fn project_with_synthesis(dict: &Dictionary, a: &CoefVector, x: &[f64]) -> CoefVector {
    if x.iter().all(|&v| v >= 0.0) {
        return a.clone();
    }
    let neg: Vec<f64> = x.iter().map(|&v| v.min(0.0)).collect();
    let corr = dict.analyze_slice(&neg);
    let inv_c = 1.0 / dict.frame_constant();
    a.with_data(a.data().iter().zip(&corr).map(|(v, q)| v - inv_c * q).collect())
}

/// Starting point of the Douglas-Rachford sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DrInit {
    /// `γ⁰ = α`
    #[default]
    FromInput,
    /// `γ⁰ = 0`
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrConfig {
    pub n_iter: usize,
    /// `ν ∈ (0, 1)`
    pub relaxation: f64,
    pub init: DrInit,
}

impl Default for DrConfig {
    fn default() -> Self {
        DrConfig { n_iter: 1, relaxation: 0.5, init: DrInit::FromInput }
    }
}

impl DrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 {
            return Err(Error::param("dr.n_iter", "must be at least 1"));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 1.0) {
            return Err(Error::param("dr.relaxation", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// `prox_{f₂}(α)` with `f₂ = ι_{C′} + λΨ`.
///
/// When `prox_{λΨ}(α)` already lies in `C′` it is the answer and is returned
/// directly. Otherwise `γ ← γ + ν(rprox_A ∘ rprox_B − I)γ` is run for
/// `cfg.n_iter` steps with `B = ι_{C′}` and `A = λΨ + ½‖· − α‖²`, whose prox
/// is `prox_{(λ/2)Ψ}((α + γ)/2)`, and `P_{C′}(γ)` is returned.
pub fn prox_f2<P: Penalty + ?Sized>(
    dict: &Dictionary,
    p: &P,
    lambda: f64,
    a: &CoefVector,
    cfg: &DrConfig,
) -> Result<CoefVector> {
    Ok(prox_f2_traced(dict, p, lambda, a, cfg)?.0)
}

/// Like [`prox_f2`], also returning `‖γᵗ⁺¹ − γᵗ‖` for every Douglas-Rachford
/// step taken (empty when the shortcut applies).
pub fn prox_f2_traced<P: Penalty + ?Sized>(
    dict: &Dictionary,
    p: &P,
    lambda: f64,
    a: &CoefVector,
    cfg: &DrConfig,
) -> Result<(CoefVector, Vec<f64>)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and nonnegative"));
    }
    cfg.validate()?;
    if a.len() != dict.coef_len() {
        return Err(Error::mismatch(dict.coef_len(), a.len()));
    }

    let direct = prox_penalty(p, lambda, a);
    let x = dict.synthesize_slice(direct.data());
    if x.iter().all(|&v| v >= -FEASIBILITY_TOL) {
        return Ok((direct, Vec::new()));
    }

    let half = 0.5 * lambda;
    let nu = cfg.relaxation;
    let mut gamma = match cfg.init {
        DrInit::FromInput => a.clone(),
        DrInit::Zero => a.zeros_like(),
    };
    let mut steps = Vec::with_capacity(cfg.n_iter);
    for _ in 0..cfg.n_iter {
        let pb = project_positive_coefs(dict, &gamma)?;
        let mut next = gamma.clone();
        let mut sq = 0.0;
        for (((g, &b), &ai), out) in gamma.data().iter().zip(pb.data()).zip(a.data()).zip(next.data_mut()) {
            let rb = 2.0 * b - g;
            let ra = 2.0 * p.prox(half, 0.5 * (ai + rb)) - rb;
            let d = nu * (ra - g);
            *out = g + d;
            sq += d * d;
        }
        gamma = next;
        let step = libm::sqrt(sq);
        steps.push(step);
        if step == 0.0 {
            break;
        }
    }
    if let Some(index) = gamma.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok((project_positive_coefs(dict, &gamma)?, steps))
}
