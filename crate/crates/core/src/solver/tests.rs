use super::*;
use crate::dictionary::{Dictionary, FilterFamily};
use crate::fidelity::ANSCOMBE_OFFSET;
use crate::noise::poissonize;
use crate::operators::{ConvOperator, Psf, PsfKind};
use crate::phantom::{phantom, LinesGaussiansParams, PhantomKind};
use crate::prox::{DrInit, L1};
use crate::select::degrees_of_freedom;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn delta_conv(w: usize, h: usize) -> ConvOperator {
    ConvOperator::new(Psf::new(PsfKind::Delta, true).unwrap(), w, h).unwrap()
}

struct Instance {
    counts: Image,
    conv: ConvOperator,
    dict: Dictionary,
}

fn blurred_instance(size: usize, dict: Dictionary, psf: usize, seed: u64) -> Instance {
    let truth = phantom(PhantomKind::LinesGaussians(LinesGaussiansParams::default()), size, size).unwrap();
    let truth = crate::image::rescale_peak(&truth, 30.0).unwrap();
    let conv = ConvOperator::new(Psf::new(PsfKind::MovingAverage(psf), true).unwrap(), size, size).unwrap();
    let counts = poissonize(&conv.apply(&truth).unwrap(), seed).unwrap();
    Instance { counts, conv, dict }
}

#[test]
fn step_bound_example() {
    let conv = delta_conv(3, 3);
    let dict = Dictionary::identity(3, 3).unwrap();
    let z = Image::filled(3, 3, 2.0).unwrap();
    let model = FidelityModel::from_stabilized(z, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    assert!((model.step_bound() - 0.459279).abs() < 1e-6, "{}", model.step_bound());
    let mu = SolverConfig::default().resolve_mu(&model);
    assert!((mu - 0.413351).abs() < 1e-6, "{mu}");
    let closed = 0.9 * libm::pow(1.5, 1.5) / (2.0 * 2.0);
    assert!((mu - closed).abs() < 1e-14);
}

#[test]
fn objective_examples() {
    let conv = delta_conv(4, 4);
    let dict = Dictionary::dwt(4, 4, 1, FilterFamily::Haar).unwrap();
    let model = FidelityModel::new(&Image::zeros(4, 4).unwrap(), &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    let j = objective(&model, &L1, 0.7, &model.zero_coefs()).unwrap();
    assert!(j.value.abs() < 1e-28 && j.feasible);

    let a = dict.analyze(&Image::filled(4, 4, 1.5).unwrap()).unwrap();
    let j = objective(&model, &L1, 0.0, &a).unwrap();
    assert_eq!(j.value, model.value(&a).unwrap());
    assert_eq!(j.penalty, 0.0);
    let j = objective(&model, &L1, 2.0, &a).unwrap();
    assert!((j.penalty - 2.0 * a.data().iter().map(|v| v.abs()).sum::<f64>()).abs() < 1e-12);

    let mut x = Image::filled(4, 4, 1.0).unwrap().into_data();
    x[5] = -0.5;
    let b = dict.analyze(&Image::new(4, 4, x).unwrap()).unwrap();
    let j = objective(&model, &L1, 1.0, &b).unwrap();
    assert!(!j.feasible);
    assert_eq!(j.total(), f64::INFINITY);
}

fn exact_fit_instance() -> (Image, ConvOperator, Dictionary) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Image::from_fn(8, 8, |_, _| 0.2 + 1.8 * uniform(&mut rng)).unwrap();
    (x, delta_conv(8, 8), Dictionary::identity(8, 8).unwrap())
}

#[test]
fn unpenalized_identity_problem_recovers_the_data() {
    let (x, conv, dict) = exact_fit_instance();
    let model = FidelityModel::new(&x, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    let cfg = SolverConfig { lambda: 0.0, n_fb: 500, ..SolverConfig::default() };
    let rep = solve_fb(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
    let err: f64 = rep.restored.data().iter().zip(x.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    let rel = libm::sqrt(err / x.data().iter().map(|v| v * v).sum::<f64>());
    assert!(rel < 1e-4, "{rel}");

    // One more step from the solution barely moves it.
    let more = SolverConfig { n_fb: 1, ..cfg };
    let again = solve_fb(&model, &L1, &more, &rep.coefficients).unwrap();
    assert!(again.coefficients.sub(&rep.coefficients).norm() < 1e-8);
    assert_eq!(rep.support_size, dict.coef_len());
}

#[test]
fn tolerance_stops_early() {
    let (x, conv, dict) = exact_fit_instance();
    let model = FidelityModel::new(&x, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    let cfg = SolverConfig { n_fb: 5000, tol: 1e-8, ..SolverConfig::default() };
    let rep = solve_fb(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations_run < 5000);
    assert_eq!(rep.objective_history.len(), rep.iterations_run + 1);
    assert_eq!(rep.records.len(), rep.iterations_run);
}

#[test]
fn history_can_be_switched_off() {
    let (x, conv, dict) = exact_fit_instance();
    let model = FidelityModel::new(&x, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    let cfg = SolverConfig { n_fb: 7, record_history: false, ..SolverConfig::default() };
    let rep = solve_fb(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
    assert!(rep.objective_history.is_empty() && rep.records.is_empty());
    assert_eq!(rep.mu_history.len(), 7);
}

fn assert_nonincreasing(history: &[f64]) {
    for (k, w) in history.windows(2).enumerate() {
        assert!(w[1] <= w[0] + 1e-9, "increase at step {k}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn exact_prox_forward_backward_descends() {
    let inst = blurred_instance(16, Dictionary::tidwt(16, 16, 2, FilterFamily::Sym4).unwrap(), 3, 3);
    let model = FidelityModel::new(&inst.counts, &inst.conv, &inst.dict, ANSCOMBE_OFFSET).unwrap();
    let dr = DrConfig { n_iter: 50, ..DrConfig::default() };
    let cfg = SolverConfig { lambda: 0.3, n_fb: 150, dr, ..SolverConfig::default() };
    let rep = solve_fb(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
    assert_nonincreasing(&rep.objective_history);
    assert!(rep.records.iter().all(|r| r.feasible));
}

#[test]
fn armijo_accepts_below_theta_over_kappa() {
    let inst = blurred_instance(16, Dictionary::tidwt(16, 16, 2, FilterFamily::Db2).unwrap(), 3, 9);
    let model = FidelityModel::new(&inst.counts, &inst.conv, &inst.dict, ANSCOMBE_OFFSET).unwrap();
    let theta = TsengParams::default().theta;
    let mu = theta / model.lipschitz_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let x = Image::from_fn(16, 16, |_, _| 40.0 * uniform(&mut rng)).unwrap();
        let a = inst.dict.analyze(&x).unwrap();
        let g = model.gradient(&a).unwrap();
        let half = prox_f2(&inst.dict, &L1, 0.5 * mu, &a.add_scaled(-mu, &g), &DrConfig::default()).unwrap();
        let dg = model.gradient(&half).unwrap().sub(&g);
        assert!(mu * dg.norm() <= theta * half.sub(&a).norm() * (1.0 + 1e-12));
    }
}

#[test]
fn tseng_keeps_a_stationary_point() {
    let inst = blurred_instance(16, Dictionary::dwt(16, 16, 2, FilterFamily::Haar).unwrap(), 3, 2);
    let model = FidelityModel::new(&inst.counts, &inst.conv, &inst.dict, ANSCOMBE_OFFSET).unwrap();
    // Thresholds far above the gradient keep α_{t+½} = α_t = 0.
    let cfg = SolverConfig { algo: Algorithm::Tseng, lambda: 1e6, n_fb: 3, ..SolverConfig::default() };
    let rep = solve(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
    assert_eq!(rep.coefficients.max_abs(), 0.0);
    assert_eq!(rep.algorithm, Algorithm::Tseng);
    assert_eq!(rep.mu_history, vec![1.0; 3]);
}

#[test]
fn tseng_projects_the_start() {
    let inst = blurred_instance(16, Dictionary::tidwt(16, 16, 2, FilterFamily::Haar).unwrap(), 3, 2);
    let model = FidelityModel::new(&inst.counts, &inst.conv, &inst.dict, ANSCOMBE_OFFSET).unwrap();
    let a0 = inst.dict.analyze(&Image::filled(16, 16, -3.0).unwrap()).unwrap();
    let cfg = SolverConfig { algo: Algorithm::Tseng, lambda: 0.1, n_fb: 0, ..SolverConfig::default() };
    let rep = solve(&model, &L1, &cfg, &a0).unwrap();
    assert!(rep.restored.min() >= -1e-12);
    assert!(rep.restored.max().abs() < 1e-12);
}

/// Tseng must do no worse than FB from zero, and FB restarted at Tseng's
/// point must not find a meaningfully lower objective.
fn cross_check(inst: &Instance, lambda: f64) {
    let model = FidelityModel::new(&inst.counts, &inst.conv, &inst.dict, ANSCOMBE_OFFSET).unwrap();
    let dr = DrConfig { n_iter: 50, ..DrConfig::default() };
    let fb = SolverConfig { lambda, n_fb: 600, dr, ..SolverConfig::default() };
    let ts = SolverConfig { algo: Algorithm::Tseng, n_fb: 10_000, ..fb };
    let a = solve(&model, &L1, &fb, &model.zero_coefs()).unwrap();
    let b = solve(&model, &L1, &ts, &model.zero_coefs()).unwrap();
    let (ja, jb) = (a.final_objective.value, b.final_objective.value);
    assert!(jb <= ja + 1e-4 * ja.abs(), "{} λ={lambda}: fb {ja} tseng {jb}", inst.dict);
    let restart = SolverConfig { n_fb: 300, ..fb };
    let c = solve(&model, &L1, &restart, &b.coefficients).unwrap();
    let jc = c.final_objective.value;
    assert!((jc - jb).abs() <= 1e-4 * jb.abs(), "{} λ={lambda}: restarted fb {jc} tseng {jb}", inst.dict);
    for rep in [&a, &b, &c] {
        assert!(rep.restored.min() >= -1e-6 * 30.0);
        assert_eq!(rep.support_size, degrees_of_freedom(&rep.coefficients, lambda, rep.mu_used));
    }
}

#[test]
fn fb_and_tseng_agree() {
    cross_check(&blurred_instance(16, Dictionary::dwt(16, 16, 2, FilterFamily::Sym4).unwrap(), 3, 1), 0.2);
    cross_check(&blurred_instance(16, Dictionary::tidwt(16, 16, 2, FilterFamily::Haar).unwrap(), 3, 2), 0.5);
    cross_check(&blurred_instance(16, Dictionary::identity(16, 16).unwrap(), 5, 3), 0.05);
}

#[test]
fn deterministic_reports() {
    let inst = blurred_instance(16, Dictionary::tidwt(16, 16, 2, FilterFamily::Sym4).unwrap(), 3, 4);
    let model = FidelityModel::new(&inst.counts, &inst.conv, &inst.dict, ANSCOMBE_OFFSET).unwrap();
    for algo in [Algorithm::ForwardBackward, Algorithm::Tseng] {
        let cfg = SolverConfig { algo, lambda: 0.2, n_fb: 20, ..SolverConfig::default() };
        let r1 = solve(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
        let r2 = solve(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
        assert_eq!(r1.coefficients.data(), r2.coefficients.data());
        assert_eq!(r1.objective_history, r2.objective_history);
        assert_eq!(r1.mu_history, r2.mu_history);
    }
}

#[test]
fn relaxation_and_zero_start_still_converge() {
    let (x, conv, dict) = exact_fit_instance();
    let model = FidelityModel::new(&x, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    let dr = DrConfig { n_iter: 3, relaxation: 0.7, init: DrInit::Zero };
    let cfg = SolverConfig { lambda: 0.0, n_fb: 800, beta: 0.8, dr, ..SolverConfig::default() };
    let rep = solve_fb(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
    let err = rep.restored.data().iter().zip(x.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let (x, conv, dict) = exact_fit_instance();
    let model = FidelityModel::new(&x, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    let a0 = model.zero_coefs();
    let base = SolverConfig::default();
    for cfg in [
        SolverConfig { lambda: -1.0, ..base },
        SolverConfig { mu: StepSize::Fixed(0.0), ..base },
        SolverConfig { beta: 0.0, ..base },
        SolverConfig { beta: 1.5, ..base },
        SolverConfig { tseng: TsengParams { tau: 1.0, ..TsengParams::default() }, ..base },
        SolverConfig { tseng: TsengParams { theta: 0.0, ..TsengParams::default() }, ..base },
        SolverConfig { tol: -1.0, ..base },
    ] {
        assert!(matches!(solve(&model, &L1, &cfg, &a0), Err(Error::InvalidParameter { .. })), "{cfg:?}");
    }
    let other = Dictionary::identity(4, 4).unwrap().zeros();
    assert!(solve(&model, &L1, &base, &other).is_err());
}

#[test]
fn oversized_fixed_step_is_allowed() {
    let (x, conv, dict) = exact_fit_instance();
    let model = FidelityModel::new(&x, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
    let cfg = SolverConfig { mu: StepSize::Fixed(1.5 * model.step_bound()), n_fb: 5, ..SolverConfig::default() };
    let rep = solve_fb(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
    assert_eq!(rep.mu_used, 1.5 * model.step_bound());
}
