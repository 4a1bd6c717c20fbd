//! Forward-backward splitting and Tseng's forward-backward-forward method
//! for `min_α f₁(α) + ι_{C′}(α) + λΨ(α)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dictionary::CoefVector;
use crate::fidelity::{Evaluation, FidelityModel};
use crate::image::Image;
use crate::prox::{project_positive_coefs, prox_f2, DrConfig, Penalty};
use crate::select::degrees_of_freedom;
use crate::{Error, Result};

/// Pixels below this are treated as a violation of `Φα ≥ 0` when the
/// objective is reported.
pub const OBJECTIVE_FEASIBILITY_TOL: f64 = 1e-9;

/// Fraction of the step bound `2/κ` used by [`StepSize::Auto`].
pub const AUTO_STEP_FACTOR: f64 = 0.9;

/// Most step reductions tried by the Armijo search in one iteration.
pub const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    ForwardBackward,
    Tseng,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ForwardBackward => "fb",
            Algorithm::Tseng => "tseng",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepSize {
    /// `0.9 · 2/κ`
    #[default]
    Auto,
    Fixed(f64),
}

/// Armijo search parameters: `μ_t` is the largest of `σ, τσ, τ²σ, …` with
/// `μ‖∇f₁(α_{t+½}) − ∇f₁(α_t)‖ ≤ θ‖α_{t+½} − α_t‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsengParams {
    pub tau: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl Default for TsengParams {
    fn default() -> Self {
        TsengParams { tau: 0.5, theta: 0.9, sigma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub algo: Algorithm,
    pub lambda: f64,
    /// Step of the forward-backward iteration. Tseng's method searches its
    /// own step and ignores this.
    pub mu: StepSize,
    /// Iteration budget.
    pub n_fb: usize,
    /// Relaxation `β ∈ (0, 1]` of the forward-backward update.
    pub beta: f64,
    pub dr: DrConfig,
    pub tseng: TsengParams,
    /// Stop once `‖α_{t+1} − α_t‖ ≤ tol·‖α_{t+1}‖`; zero disables.
    pub tol: f64,
    /// Keep per-iteration records in the report.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algo: Algorithm::ForwardBackward,
            lambda: 0.0,
            mu: StepSize::Auto,
            n_fb: 200,
            beta: 1.0,
            dr: DrConfig::default(),
            tseng: TsengParams::default(),
            tol: 0.0,
            record_history: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", "must be finite and nonnegative"));
        }
        if let StepSize::Fixed(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::param("mu", "must be positive"));
            }
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", "must lie in (0, 1]"));
        }
        let t = &self.tseng;
        if !(t.tau > 0.0 && t.tau < 1.0) {
            return Err(Error::param("tseng.tau", "must lie in (0, 1)"));
        }
        if !(t.theta > 0.0 && t.theta < 1.0) {
            return Err(Error::param("tseng.theta", "must lie in (0, 1)"));
        }
        if !(t.sigma > 0.0 && t.sigma.is_finite()) {
            return Err(Error::param("tseng.sigma", "must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::param("tol", "must be nonnegative"));
        }
        self.dr.validate()
    }

    /// The forward-backward step this configuration uses on `model`.
    pub fn resolve_mu(&self, model: &FidelityModel<'_>) -> f64 {
        match self.mu {
            StepSize::Auto => AUTO_STEP_FACTOR * model.step_bound(),
            StepSize::Fixed(mu) => mu,
        }
    }
}

/// `J(α)` split into its parts. `value` is the finite part
/// `f₁(α) + λΨ(α)`; the indicator is reported through `feasible`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub fidelity: f64,
    pub penalty: f64,
    pub feasible: bool,
}

impl Objective {
    /// `J(α)` including the indicator.
    pub fn total(&self) -> f64 {
        if self.feasible {
            self.value
        } else {
            f64::INFINITY
        }
    }
}

pub fn objective<P: Penalty + ?Sized>(
    model: &FidelityModel<'_>,
    p: &P,
    lambda: f64,
    a: &CoefVector,
) -> Result<Objective> {
    let x = model.dict().synthesize(a)?;
    let fidelity = model.value_at(&model.conv().apply(&x)?)?;
    Ok(objective_parts(p, lambda, a, &x, fidelity))
}

fn objective_parts<P: Penalty + ?Sized>(p: &P, lambda: f64, a: &CoefVector, x: &Image, fidelity: f64) -> Objective {
    let penalty = if lambda == 0.0 { 0.0 } else { lambda * p.total(a.data()) };
    Objective { value: fidelity + penalty, fidelity, penalty, feasible: x.min() >= -OBJECTIVE_FEASIBILITY_TOL }
}

/// One row of the iteration log, describing the iterate after the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub feasible: bool,
    pub support_size: usize,
    pub mu: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub algorithm: Algorithm,
    pub coefficients: CoefVector,
    /// `Φα*`
    pub restored: Image,
    /// `J(α_t)` for `t = 0, 1, …, iterations_run` (finite part); empty
    /// unless history recording is on.
    pub objective_history: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub final_objective: Objective,
    /// `#{i : |α*ᵢ| ≥ λμ}` with the last step used.
    pub support_size: usize,
    pub iterations_run: usize,
    /// Step of the last iteration (the fixed step for forward-backward).
    pub mu_used: f64,
    /// Accepted step per iteration.
    pub mu_history: Vec<f64>,
    pub converged: bool,
}

struct Trace {
    record: bool,
    objective_history: Vec<f64>,
    records: Vec<IterationRecord>,
    mu_history: Vec<f64>,
}

impl Trace {
    fn new(record: bool, capacity: usize) -> Self {
        Trace {
            record,
            objective_history: Vec::with_capacity(if record { capacity + 1 } else { 0 }),
            records: Vec::with_capacity(if record { capacity } else { 0 }),
            mu_history: Vec::with_capacity(capacity),
        }
    }
}

fn diverged(iteration: usize, what: &'static str) -> impl Fn(Error) -> Error {
    move |e| if e.is_numerical() { Error::Diverged { iteration, what } } else { e }
}

fn check_start(model: &FidelityModel<'_>, cfg: &SolverConfig, a0: &CoefVector) -> Result<()> {
    cfg.validate()?;
    if a0.len() != model.dict().coef_len() {
        return Err(Error::mismatch(model.dict().coef_len(), a0.len()));
    }
    if !a0.is_finite() {
        return Err(Error::NonFinite { index: a0.data().iter().position(|v| !v.is_finite()).unwrap_or(0) });
    }
    Ok(())
}

/// Runs `cfg.algo`.
pub fn solve<P: Penalty + ?Sized>(
    model: &FidelityModel<'_>,
    p: &P,
    cfg: &SolverConfig,
    a0: &CoefVector,
) -> Result<SolverReport> {
    match cfg.algo {
        Algorithm::ForwardBackward => solve_fb(model, p, cfg, a0),
        Algorithm::Tseng => solve_tseng(model, p, cfg, a0),
    }
}

/// `α ← α + β(prox_{μf₂}(α − μ∇f₁(α)) − α)`, with `prox_{μf₂}` evaluated by
/// [`prox_f2`] at threshold `λμ`.
pub fn solve_fb<P: Penalty + ?Sized>(
    model: &FidelityModel<'_>,
    p: &P,
    cfg: &SolverConfig,
    a0: &CoefVector,
) -> Result<SolverReport> {
    check_start(model, cfg, a0)?;
    let mu = cfg.resolve_mu(model);
    if mu >= model.step_bound() {
        log::warn!("step {mu} is not below the convergence bound {}", model.step_bound());
    }
    let dict = model.dict();
    let threshold = cfg.lambda * mu;

    let mut a = a0.clone();
    let mut eval = model.evaluate(&a).map_err(diverged(0, "fidelity"))?;
    let mut obj = objective_parts(p, cfg.lambda, &a, &eval.x, eval.value);
    let mut trace = Trace::new(cfg.record_history, cfg.n_fb);
    if trace.record {
        trace.objective_history.push(obj.value);
    }
    let mut iterations = 0;
    let mut converged = false;
    for t in 1..=cfg.n_fb {
        let forward = a.add_scaled(-mu, &eval.gradient);
        let prox = prox_f2(dict, p, threshold, &forward, &cfg.dr).map_err(diverged(t, "prox"))?;
        let next = if cfg.beta == 1.0 { prox } else { a.add_scaled(cfg.beta, &prox.sub(&a)) };
        let step = next.sub(&a).norm();
        a = next;
        eval = model.evaluate(&a).map_err(diverged(t, "fidelity"))?;
        obj = objective_parts(p, cfg.lambda, &a, &eval.x, eval.value);
        if !obj.value.is_finite() {
            return Err(Error::Diverged { iteration: t, what: "objective" });
        }
        iterations = t;
        push(&mut trace, t, &obj, &a, threshold, mu, step);
        if stop(cfg.tol, step, &a) {
            converged = true;
            break;
        }
    }
    Ok(finish(Algorithm::ForwardBackward, cfg, a, eval, obj, trace, iterations, mu, converged))
}

/// Tseng's iteration started from `P_{C′}(α₀)`:
///
/// ```text
/// α_{t+½} = prox_{μ_t f₂}(α_t − μ_t∇f₁(α_t))
/// α_{t+1} = P_{C′}(α_{t+½} − μ_t(∇f₁(α_{t+½}) − ∇f₁(α_t)))
/// ```
///
/// with `μ_t` from the Armijo rule in [`TsengParams`].
pub fn solve_tseng<P: Penalty + ?Sized>(
    model: &FidelityModel<'_>,
    p: &P,
    cfg: &SolverConfig,
    a0: &CoefVector,
) -> Result<SolverReport> {
    check_start(model, cfg, a0)?;
    let dict = model.dict();
    let TsengParams { tau, theta, sigma } = cfg.tseng;

    let mut a = project_positive_coefs(dict, a0)?;
    let mut eval = model.evaluate(&a).map_err(diverged(0, "fidelity"))?;
    let mut obj = objective_parts(p, cfg.lambda, &a, &eval.x, eval.value);
    let mut trace = Trace::new(cfg.record_history, cfg.n_fb);
    if trace.record {
        trace.objective_history.push(obj.value);
    }
    let mut mu = sigma;
    let mut iterations = 0;
    let mut converged = false;
    for t in 1..=cfg.n_fb {
        mu = sigma;
        let mut halvings = 0;
        let (half, half_grad) = loop {
            let forward = a.add_scaled(-mu, &eval.gradient);
            let half = prox_f2(dict, p, cfg.lambda * mu, &forward, &cfg.dr).map_err(diverged(t, "prox"))?;
            // Trial points far outside the domain can overflow; treat them as rejected.
            let trial = model.evaluate(&half).ok().map(|e| {
                let dg = e.gradient.sub(&eval.gradient);
                let accept = mu * dg.norm() <= theta * half.sub(&a).norm();
                (accept, dg)
            });
            if let Some((true, dg)) = trial {
                break (half, dg);
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::LineSearchExhausted { iteration: t, halvings: MAX_HALVINGS });
            }
            mu *= tau;
        };
        let next = project_positive_coefs(dict, &half.add_scaled(-mu, &half_grad))?;
        let step = next.sub(&a).norm();
        a = next;
        eval = model.evaluate(&a).map_err(diverged(t, "fidelity"))?;
        obj = objective_parts(p, cfg.lambda, &a, &eval.x, eval.value);
        if !obj.value.is_finite() {
            return Err(Error::Diverged { iteration: t, what: "objective" });
        }
        iterations = t;
        push(&mut trace, t, &obj, &a, cfg.lambda * mu, mu, step);
        if stop(cfg.tol, step, &a) {
            converged = true;
            break;
        }
    }
    Ok(finish(Algorithm::Tseng, cfg, a, eval, obj, trace, iterations, mu, converged))
}

fn push(trace: &mut Trace, t: usize, obj: &Objective, a: &CoefVector, threshold: f64, mu: f64, step: f64) {
    trace.mu_history.push(mu);
    if trace.record {
        trace.objective_history.push(obj.value);
        trace.records.push(IterationRecord {
            iteration: t,
            objective: obj.value,
            feasible: obj.feasible,
            support_size: degrees_of_freedom(a, threshold, 1.0),
            mu,
            step_norm: step,
        });
    }
}

fn stop(tol: f64, step: f64, a: &CoefVector) -> bool {
    tol > 0.0 && step <= tol * a.norm()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    algorithm: Algorithm,
    cfg: &SolverConfig,
    a: CoefVector,
    eval: Evaluation,
    obj: Objective,
    trace: Trace,
    iterations: usize,
    mu: f64,
    converged: bool,
) -> SolverReport {
    SolverReport {
        algorithm,
        support_size: degrees_of_freedom(&a, cfg.lambda, mu),
        coefficients: a,
        restored: eval.x,
        objective_history: trace.objective_history,
        records: trace.records,
        final_objective: obj,
        iterations_run: iterations,
        mu_used: mu,
        mu_history: if trace.mu_history.is_empty() { vec![mu] } else { trace.mu_history },
        converged,
    }
}

#[cfg(test)]
mod tests;
