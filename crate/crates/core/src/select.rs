//! Choice of `λ` by generalized cross validation.

use alloc::vec::Vec;

use crate::dictionary::CoefVector;
use crate::fidelity::FidelityModel;
use crate::image::{metrics, Image};
use crate::prox::Penalty;
use crate::solver::{solve_fb, Algorithm, SolverConfig, SolverReport};
use crate::{Error, Result};

/// Number of points in [`default_grid`].
pub const DEFAULT_GRID_LEN: usize = 12;

/// `#{i : |αᵢ| ≥ λμ}`
pub fn degrees_of_freedom(a: &CoefVector, lambda: f64, mu: f64) -> usize {
    let threshold = lambda * mu;
    a.data().iter().filter(|v| v.abs() >= threshold).count()
}

/// `residual_ss / (n − df)²`, or `+∞` when `df ≥ n`.
pub fn gcv_value(residual_ss: f64, n: usize, df: usize) -> f64 {
    if df >= n {
        return f64::INFINITY;
    }
    let d = (n - df) as f64;
    residual_ss / (d * d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcvPoint {
    pub lambda: f64,
    pub gcv: f64,
    pub df: usize,
    pub residual_ss: f64,
    pub mae_vs_ref: Option<f64>,
    pub mse_vs_ref: Option<f64>,
    /// Set when the solve at this `λ` failed; the point then has `gcv = +∞`.
    pub failure: Option<Error>,
}

/// GCV of a solution obtained at `lambda` with step `mu`.
pub fn gcv(model: &FidelityModel<'_>, report: &SolverReport, lambda: f64, mu: f64) -> Result<GcvPoint> {
    let eta = model.conv().apply(&report.restored)?;
    let residual_ss = model.residual_ss(&eta)?;
    let df = degrees_of_freedom(&report.coefficients, lambda, mu);
    Ok(GcvPoint {
        lambda,
        gcv: gcv_value(residual_ss, eta.len(), df),
        df,
        residual_ss,
        mae_vs_ref: None,
        mse_vs_ref: None,
        failure: None,
    })
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::param("grid", "bounds must satisfy 0 < lo <= hi"));
    }
    if count == 0 {
        return Err(Error::param("grid", "needs at least one point"));
    }
    if count == 1 {
        return Ok(alloc::vec![lo]);
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    let mut grid: Vec<f64> = (0..count).map(|k| libm::exp(a + (b - a) * k as f64 / (count - 1) as f64)).collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    Ok(grid)
}

/// `max |∇f₁(0)|`. A threshold `λμ` above `μ` times this value zeroes the
/// first forward-backward step from `α = 0`.
pub fn lambda_scale(model: &FidelityModel<'_>) -> Result<f64> {
    Ok(model.gradient(&model.zero_coefs())?.max_abs())
}

/// [`DEFAULT_GRID_LEN`] log-spaced values over `[1e-3, 1]·`[`lambda_scale`].
pub fn default_grid(model: &FidelityModel<'_>) -> Result<Vec<f64>> {
    relative_grid(model, 1e-3, 1.0, DEFAULT_GRID_LEN)
}

/// Log-spaced grid over `[lo, hi]·`[`lambda_scale`].
pub fn relative_grid(model: &FidelityModel<'_>, lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    let s = lambda_scale(model)?;
    if !(s > 0.0) {
        return Err(Error::param("grid", "gradient at zero vanishes, no data-driven scale"));
    }
    log_grid(lo * s, hi * s, count)
}

/// Outcome of [`sweep_lambda`]. Points follow the grid order.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub points: Vec<GcvPoint>,
    /// Index of the smallest finite GCV value (first one on ties).
    pub selected: Option<usize>,
    /// Solutions per point when kept, `None` for failed points.
    pub reports: Vec<Option<SolverReport>>,
}

impl Sweep {
    pub fn selected_lambda(&self) -> Option<f64> {
        self.selected.map(|i| self.points[i].lambda)
    }

    pub fn selected_point(&self) -> Option<&GcvPoint> {
        self.selected.map(|i| &self.points[i])
    }
}

/// Solves with forward-backward at every `λ` in `grid` and scores each
/// solution by GCV. A failed solve marks its point instead of aborting.
pub fn sweep_lambda<P: Penalty + ?Sized>(
    model: &FidelityModel<'_>,
    p: &P,
    base: &SolverConfig,
    grid: &[f64],
    reference: Option<&Image>,
) -> Result<Sweep> {
    check_grid(grid)?;
    if let Some(r) = reference {
        r.check_shape(model.z().width(), model.z().height())?;
    }
    let a0 = model.zero_coefs();
    let mut points = Vec::with_capacity(grid.len());
    let mut reports = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let cfg = SolverConfig { algo: Algorithm::ForwardBackward, lambda, record_history: false, ..*base };
        match solve_fb(model, p, &cfg, &a0).and_then(|rep| score(model, rep, lambda, reference)) {
            Ok((point, rep)) => {
                points.push(point);
                reports.push(Some(rep));
            }
            Err(e) if e.is_numerical() => {
                log::warn!("solve at lambda={lambda} failed: {e}");
                points.push(GcvPoint {
                    lambda,
                    gcv: f64::INFINITY,
                    df: 0,
                    residual_ss: f64::NAN,
                    mae_vs_ref: None,
                    mse_vs_ref: None,
                    failure: Some(e),
                });
                reports.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let selected = argmin_gcv(&points);
    Ok(Sweep { points, selected, reports })
}

fn score(
    model: &FidelityModel<'_>,
    rep: SolverReport,
    lambda: f64,
    reference: Option<&Image>,
) -> Result<(GcvPoint, SolverReport)> {
    let mut point = gcv(model, &rep, lambda, rep.mu_used)?;
    if let Some(r) = reference {
        let m = metrics(r, &rep.restored)?;
        point.mae_vs_ref = Some(m.mae);
        point.mse_vs_ref = Some(m.mse);
    }
    Ok((point, rep))
}

pub fn argmin_gcv(points: &[GcvPoint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if p.gcv.is_finite() && best.map_or(true, |b| p.gcv < points[b].gcv) {
            best = Some(i);
        }
    }
    best
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "must not be empty"));
    }
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::param("grid", "values must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "values must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{Dictionary, FilterFamily};
    use crate::fidelity::ANSCOMBE_OFFSET;
    use crate::noise::poissonize;
    use crate::operators::{ConvOperator, Psf, PsfKind};
    use crate::phantom::{phantom, PhantomKind};
    use crate::prox::L1;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn df_examples() {
        let d = Dictionary::identity(4, 1).unwrap();
        let a = d.coefs(vec![0.5, -2.0, 0.0, 3.0]);
        assert_eq!(degrees_of_freedom(&a, 1.0, 1.0), 2);
        assert_eq!(degrees_of_freedom(&a, 0.0, 0.4), 4);
        assert_eq!(degrees_of_freedom(&d.zeros(), 0.3, 2.0), 0);
    }

    #[test]
    fn gcv_examples() {
        assert_eq!(gcv_value(4.0, 100, 20), 4.0 / 6400.0);
        assert!((gcv_value(4.0, 100, 20) - 6.25e-4).abs() < 1e-18);
        assert_eq!(gcv_value(0.0, 100, 20), 0.0);
        assert_eq!(gcv_value(1.0, 100, 100), f64::INFINITY);
        assert_eq!(gcv_value(1.0, 100, 400), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn df_ignores_signs(v in proptest::collection::vec(-3.0f64..3.0, 10), flips in proptest::collection::vec(any::<bool>(), 10), t in 0.0f64..2.0) {
            let d = Dictionary::identity(10, 1).unwrap();
            let a = d.coefs(v.clone());
            let b = d.coefs(v.iter().zip(&flips).map(|(x, f)| if *f { -x } else { *x }).collect());
            prop_assert_eq!(degrees_of_freedom(&a, t, 1.0), degrees_of_freedom(&b, t, 1.0));
        }

        #[test]
        fn gcv_scales_with_residual(r in 0.0f64..1e3, s in 0.0f64..1e3, df in 0usize..99) {
            let scaled = gcv_value(s * r, 100, df);
            let expect = s * gcv_value(r, 100, df);
            prop_assert!((scaled - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn log_grid_shape() {
        let g = log_grid(1e-3, 1.0, 12).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[11], 1.0);
        let ratio = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
        assert_eq!(log_grid(0.5, 0.5, 1).unwrap(), vec![0.5]);
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert!(log_grid(1.0, 0.5, 3).is_err());
    }

    struct Fixture {
        truth: Image,
        counts: Image,
        conv: ConvOperator,
        dict: Dictionary,
    }

    fn fixture() -> Fixture {
        let truth = phantom(PhantomKind::PointGrid { spacing: 8, amplitude: 30.0 }, 32, 32).unwrap();
        let truth = truth.map(|v| v + 2.0).unwrap();
        let conv = ConvOperator::new(Psf::new(PsfKind::MovingAverage(3), true).unwrap(), 32, 32).unwrap();
        let counts = poissonize(&conv.apply(&truth).unwrap(), 11).unwrap();
        let dict = Dictionary::dwt(32, 32, 3, FilterFamily::Haar).unwrap();
        Fixture { truth, counts, conv, dict }
    }

    #[test]
    fn sweep_reports_every_point() {
        let f = fixture();
        let model = FidelityModel::new(&f.counts, &f.conv, &f.dict, ANSCOMBE_OFFSET).unwrap();
        let grid = log_grid(0.01, 1.0, 5).unwrap();
        let base = SolverConfig { n_fb: 60, ..SolverConfig::default() };
        let sweep = sweep_lambda(&model, &L1, &base, &grid, Some(&f.truth)).unwrap();
        assert_eq!(sweep.points.len(), 5);
        for (p, rep) in sweep.points.iter().zip(&sweep.reports) {
            let rep = rep.as_ref().unwrap();
            let m = metrics(&f.truth, &rep.restored).unwrap();
            assert_eq!(p.mae_vs_ref, Some(m.mae));
            assert_eq!(p.mse_vs_ref, Some(m.mse));
            assert!(p.df <= f.dict.coef_len());
        }
        // df shrinks as λ grows on this instance.
        for w in sweep.points.windows(2) {
            assert!(w[1].df <= w[0].df, "{:?}", sweep.points.iter().map(|p| p.df).collect::<Vec<_>>());
        }
        let best = sweep.selected.unwrap();
        assert!(sweep.points.iter().all(|p| p.gcv >= sweep.points[best].gcv));
    }

    #[test]
    fn singleton_grid_selects_its_value() {
        let f = fixture();
        let model = FidelityModel::new(&f.counts, &f.conv, &f.dict, ANSCOMBE_OFFSET).unwrap();
        let base = SolverConfig { n_fb: 10, ..SolverConfig::default() };
        let sweep = sweep_lambda(&model, &L1, &base, &[0.2], None).unwrap();
        assert_eq!(sweep.selected_lambda(), Some(0.2));
        assert_eq!(sweep.points[0].mae_vs_ref, None);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let f = fixture();
        let model = FidelityModel::new(&f.counts, &f.conv, &f.dict, ANSCOMBE_OFFSET).unwrap();
        let base = SolverConfig::default();
        assert!(sweep_lambda(&model, &L1, &base, &[], None).is_err());
        assert!(sweep_lambda(&model, &L1, &base, &[0.2, 0.1], None).is_err());
        assert!(sweep_lambda(&model, &L1, &base, &[-1.0], None).is_err());
    }

    #[test]
    fn top_of_default_grid_kills_the_first_step() {
        let f = fixture();
        let model = FidelityModel::new(&f.counts, &f.conv, &f.dict, ANSCOMBE_OFFSET).unwrap();
        let grid = default_grid(&model).unwrap();
        assert_eq!(grid.len(), DEFAULT_GRID_LEN);
        let cfg = SolverConfig { lambda: *grid.last().unwrap(), n_fb: 1, ..SolverConfig::default() };
        let rep = solve_fb(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
        assert_eq!(rep.coefficients.max_abs(), 0.0);
    }

    #[test]
    fn argmin_skips_failures() {
        let mk = |lambda, gcv| GcvPoint { lambda, gcv, df: 0, residual_ss: 0.0, mae_vs_ref: None, mse_vs_ref: None, failure: None };
        assert_eq!(argmin_gcv(&[mk(1.0, f64::INFINITY), mk(2.0, 3.0), mk(3.0, 2.0), mk(4.0, 2.0)]), Some(2));
        assert_eq!(argmin_gcv(&[mk(1.0, f64::INFINITY)]), None);
    }
}
