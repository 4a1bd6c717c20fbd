//! The command implementations behind the CLI.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use vstdecon_core::dictionary::{CoefVector, Dictionary};
use vstdecon_core::fidelity::FidelityModel;
use vstdecon_core::image::{metrics, rescale_peak, Image, MetricReport};
use vstdecon_core::noise::poissonize;
use vstdecon_core::operators::ConvOperator;
use vstdecon_core::phantom::phantom;
use vstdecon_core::prox::L1;
use vstdecon_core::select::{gcv, sweep_lambda, GcvPoint, Sweep};
use vstdecon_core::solver::{solve, Objective, SolverReport};

use crate::config::{InitName, SolverSettings};
use crate::error::{Error, Result};
use crate::io::{read_image, write_image, ImageFormat};
use crate::manifest::{
    DeconvolveParams, Invocation, RunManifest, SimulateParams, SweepParams, TruthSource,
};
use crate::spec::{DictSpec, LambdaSpec, PsfSpec};

pub const OBJECTIVE_CSV: &str = "objective.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const GCV_CSV: &str = "gcv.csv";
pub const SELECTED_JSON: &str = "selected.json";

/// Runs one command, writing its outputs and manifest into `out`.
pub fn run(inv: &Invocation, out: &Path) -> Result<RunManifest> {
    fs::create_dir_all(out).map_err(Error::io(out))?;
    let outputs = match inv {
        Invocation::Simulate(p) => simulate(p, out)?,
        Invocation::Deconvolve(p) => deconvolve(p, out)?,
        Invocation::Sweep(p) => sweep(p, out)?,
    };
    let manifest = RunManifest::new(inv.clone(), outputs);
    let path = manifest.write(out)?;
    info!("wrote {}", path.display());
    Ok(manifest)
}

pub fn simulate(p: &SimulateParams, out: &Path) -> Result<Vec<PathBuf>> {
    if !(p.peak > 0.0 && p.peak.is_finite()) {
        return Err(Error::spec("peak", &p.peak.to_string(), "must be positive"));
    }
    let raw = match &p.truth {
        TruthSource::Phantom { phantom: spec, width, height } => phantom(spec.kind(), *width, *height)?,
        TruthSource::Image { path } => read_image(path, None)?,
    };
    let truth = rescale_peak(&raw, p.peak)?;
    let conv = ConvOperator::new(p.psf.build()?, truth.width(), truth.height())?;
    let blurred = conv.apply(&truth)?;
    let noisy = poissonize(&blurred, p.seed)?;
    let mut written = Vec::new();
    for (stem, img) in [("truth", &truth), ("blurred", &blurred), ("noisy", &noisy)] {
        written.push(save(img, out, stem, p.format)?);
    }
    Ok(written)
}

/// The pieces shared by `deconvolve` and `sweep`.
struct Problem {
    y: Image,
    conv: ConvOperator,
    dict: Dictionary,
}

impl Problem {
    fn load(input: &Path, psf: &PsfSpec, dict: &DictSpec) -> Result<Problem> {
        let y = read_image(input, None)?;
        let conv = ConvOperator::new(psf.build()?, y.width(), y.height())?;
        let dict = dict.build(y.width(), y.height())?;
        info!("{}x{} observation, dictionary {}, {} coefficients", y.width(), y.height(), dict, dict.coef_len());
        Ok(Problem { y, conv, dict })
    }

    fn model(&self, offset: f64) -> Result<FidelityModel<'_>> {
        Ok(FidelityModel::new(&self.y, &self.conv, &self.dict, offset)?)
    }
}

fn start(model: &FidelityModel<'_>, init: InitName) -> Result<CoefVector> {
    Ok(match init {
        InitName::Zero => model.zero_coefs(),
        InitName::Analysis => model.dict().analyze(model.z())?,
    })
}

fn run_sweep(model: &FidelityModel<'_>, settings: &SolverSettings, grid: &[f64], reference: Option<&Image>) -> Result<Sweep> {
    let base = settings.to_config(grid.first().copied().unwrap_or(0.0))?;
    let sweep = sweep_lambda(model, &L1, &base, grid, reference)?;
    if sweep.selected.is_none() {
        // Every grid point failed; surface the first failure.
        let first = sweep.points.iter().find_map(|pt| pt.failure.clone());
        return Err(first.map_or_else(|| Error::Usage("empty λ grid".into()), Error::Core));
    }
    Ok(sweep)
}

#[derive(Serialize)]
struct Summary {
    algorithm: &'static str,
    lambda: f64,
    lambda_source: &'static str,
    support_size: usize,
    iterations_run: usize,
    converged: bool,
    mu: f64,
    objective: ObjectiveSummary,
    gcv: GcvSummary,
}

#[derive(Serialize)]
struct ObjectiveSummary {
    value: f64,
    fidelity: f64,
    penalty: f64,
    feasible: bool,
}

impl From<Objective> for ObjectiveSummary {
    fn from(o: Objective) -> Self {
        ObjectiveSummary { value: o.value, fidelity: o.fidelity, penalty: o.penalty, feasible: o.feasible }
    }
}

#[derive(Serialize)]
struct GcvSummary {
    gcv: f64,
    df: usize,
    residual_ss: f64,
}

impl From<&GcvPoint> for GcvSummary {
    fn from(p: &GcvPoint) -> Self {
        GcvSummary { gcv: p.gcv, df: p.df, residual_ss: p.residual_ss }
    }
}

pub fn deconvolve(p: &DeconvolveParams, out: &Path) -> Result<Vec<PathBuf>> {
    let problem = Problem::load(&p.input, &p.psf, &p.dict)?;
    let model = problem.model(p.offset)?;
    let mut written = Vec::new();
    let (lambda, source) = match p.lambda {
        LambdaSpec::Value(v) => (v, "value"),
        LambdaSpec::Gcv => {
            let grid = p.grid.resolve(&model)?;
            let sweep = run_sweep(&model, &p.solver, &grid, None)?;
            written.push(write_gcv_csv(&sweep, out.join(GCV_CSV))?);
            let lambda = sweep.selected_lambda().expect("checked by run_sweep");
            info!("GCV selected lambda = {lambda:e}");
            (lambda, "gcv")
        }
    };
    let cfg = p.solver.to_config(lambda)?;
    let a0 = start(&model, p.solver.init)?;
    let report = solve(&model, &L1, &cfg, &a0)?;
    if !report.final_objective.feasible {
        warn!("solution violates positivity beyond tolerance");
    }
    info!(
        "{} finished after {} iterations, objective {:e}, support {}",
        report.algorithm.name(),
        report.iterations_run,
        report.final_objective.value,
        report.support_size
    );
    written.push(save(&report.restored, out, "restored", p.format)?);
    written.push(write_objective_csv(&report, out.join(OBJECTIVE_CSV))?);
    let point = gcv(&model, &report, lambda, report.mu_used)?;
    let summary = Summary {
        algorithm: report.algorithm.name(),
        lambda,
        lambda_source: source,
        support_size: report.support_size,
        iterations_run: report.iterations_run,
        converged: report.converged,
        mu: report.mu_used,
        objective: report.final_objective.into(),
        gcv: GcvSummary::from(&point),
    };
    written.push(write_json(&summary, out.join(SUMMARY_JSON))?);
    Ok(written)
}

#[derive(Serialize)]
struct Selected {
    lambda: f64,
    gcv: f64,
    df: usize,
}

pub fn sweep(p: &SweepParams, out: &Path) -> Result<Vec<PathBuf>> {
    let problem = Problem::load(&p.input, &p.psf, &p.dict)?;
    let model = problem.model(p.offset)?;
    let reference = p.reference.as_deref().map(|r| read_image(r, None)).transpose()?;
    let grid = p.grid.resolve(&model)?;
    let sweep = run_sweep(&model, &p.solver, &grid, reference.as_ref())?;
    let best = sweep.selected_point().expect("checked by run_sweep");
    info!("GCV selected lambda = {:e}", best.lambda);
    let selected = Selected { lambda: best.lambda, gcv: best.gcv, df: best.df };
    Ok(vec![write_gcv_csv(&sweep, out.join(GCV_CSV))?, write_json(&selected, out.join(SELECTED_JSON))?])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsOutput {
    pub mae: f64,
    pub mse: f64,
    pub normalized_mae: f64,
    pub peak_intensity: f64,
}

impl From<MetricReport> for MetricsOutput {
    fn from(m: MetricReport) -> Self {
        MetricsOutput { mae: m.mae, mse: m.mse, normalized_mae: m.normalized_mae(), peak_intensity: m.peak_intensity }
    }
}

pub fn compare(reference: &Path, estimate: &Path) -> Result<MetricsOutput> {
    let r = read_image(reference, None)?;
    let e = read_image(estimate, None)?;
    Ok(metrics(&r, &e)?.into())
}

/// Reruns the command recorded in `manifest_path` into `out`. With `check`,
/// every recorded output must be byte-identical to the replayed one.
pub fn replay(manifest_path: &Path, out: &Path, check: bool) -> Result<RunManifest> {
    let recorded = RunManifest::load(manifest_path)?;
    let origin = manifest_path.parent().unwrap_or(Path::new("."));
    if same_dir(origin, out) {
        return Err(Error::Usage("replay output directory must differ from the recorded one".into()));
    }
    let replayed = run(&recorded.invocation, out)?;
    if check {
        for name in &recorded.outputs {
            let (a, b) = (origin.join(name), out.join(name));
            let old = fs::read(&a).map_err(Error::io(&a))?;
            let new = fs::read(&b).map_err(Error::io(&b))?;
            if old != new {
                return Err(Error::ReplayMismatch { path: b });
            }
        }
        info!("{} outputs identical", recorded.outputs.len());
    }
    Ok(replayed)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Writes `<stem>.<ext>` and returns its file name.
fn save(img: &Image, out: &Path, stem: &str, format: ImageFormat) -> Result<PathBuf> {
    let name = PathBuf::from(format!("{stem}.{}", format.extension()));
    write_image(img, &out.join(&name), Some(format))?;
    Ok(name)
}

fn write_json<T: Serialize>(value: &T, path: PathBuf) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    fs::write(&path, text + "\n").map_err(Error::io(&path))?;
    Ok(file_name(&path))
}

fn file_name(path: &Path) -> PathBuf {
    PathBuf::from(path.file_name().expect("output paths name a file"))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_owned(), source },
        other => Error::Malformed { path: path.to_owned(), format: "csv", reason: format!("{other:?}") },
    }
}

fn write_objective_csv(report: &SolverReport, path: PathBuf) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    let err = csv_error(&path);
    w.write_record(["iteration", "objective", "feasible", "support_size", "mu", "step_norm"]).map_err(&err)?;
    if let Some(j0) = report.objective_history.first() {
        w.write_record(["0", &j0.to_string(), "", "", "", ""]).map_err(&err)?;
    }
    for r in &report.records {
        w.write_record([
            r.iteration.to_string(),
            r.objective.to_string(),
            r.feasible.to_string(),
            r.support_size.to_string(),
            r.mu.to_string(),
            r.step_norm.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(Error::io(&path))?;
    Ok(file_name(&path))
}

/// Columns `lambda, gcv, df, residual_ss[, mae, mse], selected`.
fn write_gcv_csv(sweep: &Sweep, path: PathBuf) -> Result<PathBuf> {
    let with_ref = sweep.points.iter().any(|p| p.mae_vs_ref.is_some());
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    let err = csv_error(&path);
    let mut header = vec!["lambda", "gcv", "df", "residual_ss"];
    if with_ref {
        header.extend(["mae", "mse"]);
    }
    header.push("selected");
    w.write_record(&header).map_err(&err)?;
    for (i, p) in sweep.points.iter().enumerate() {
        let mut row = vec![p.lambda.to_string(), p.gcv.to_string(), p.df.to_string(), p.residual_ss.to_string()];
        if with_ref {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            row.push(opt(p.mae_vs_ref));
            row.push(opt(p.mse_vs_ref));
        }
        row.push(u8::from(sweep.selected == Some(i)).to_string());
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(Error::io(&path))?;
    Ok(file_name(&path))
}
