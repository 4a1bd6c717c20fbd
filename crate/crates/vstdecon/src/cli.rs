//! Command-line parsing and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{
    resolve_offset, AlgoName, DrInitName, FileConfig, InitName, SolverFlags, StepSpec,
};
use crate::error::{Error, Result};
use crate::io::ImageFormat;
use crate::manifest::{DeconvolveParams, Invocation, SimulateParams, SweepParams, TruthSource};
use crate::spec::{DictSpec, GridSpec, LambdaSpec, PhantomSpec, PsfSpec};

/// Poisson image deconvolution with a variance-stabilized sparse prior.
#[derive(Debug, Parser)]
#[command(name = "vstdecon", version)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur and add Poisson noise to a phantom or image.
    Simulate(SimulateArgs),
    /// Restore an observed counts image.
    Deconvolve(DeconvolveArgs),
    /// Score a grid of λ values by GCV.
    Sweep(SweepArgs),
    /// Print MAE, MSE and normalized MAE between two images as JSON.
    Metrics(MetricsArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Synthetic ground truth.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub phantom: Option<PhantomSpec>,
    /// Ground-truth image instead of a phantom.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Phantom size, `N` or `WxH`.
    #[arg(long, default_value = "128", value_parser = parse_size)]
    pub size: (usize, usize),
    /// Maximum intensity of the ground truth.
    #[arg(long, default_value_t = 30.0)]
    pub peak: f64,
    #[arg(long)]
    pub psf: PsfSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "rawf32")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatArg {
    Pgm,
    Rawf32,
}

impl From<FormatArg> for ImageFormat {
    fn from(f: FormatArg) -> ImageFormat {
        match f {
            FormatArg::Pgm => ImageFormat::Pgm,
            FormatArg::Rawf32 => ImageFormat::Rawf32,
        }
    }
}

/// Options shared by `deconvolve` and `sweep`. Unset values fall back to
/// `--config`, then to the built-in defaults.
#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Observed counts (`.pgm` or `.f32` with a JSON sidecar).
    #[arg(long)]
    pub input: PathBuf,
    /// JSON file with defaults for the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `moving_average:K`, `gaussian:SIGMA`, `delta` or `file:PATH`.
    #[arg(long)]
    pub psf: Option<PsfSpec>,
    /// `identity`, `dwt:J=4`, `tidwt:J=4`, `union:tidwt:J=4+dwt:J=4`.
    #[arg(long)]
    pub dict: Option<DictSpec>,
    /// `auto`, `LO:HI:Nlog`, `rel:LO:HI:Nlog` or a comma list.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    /// Anscombe offset `b`.
    #[arg(long)]
    pub offset: Option<f64>,
    #[arg(long, value_enum)]
    pub algo: Option<AlgoName>,
    /// `auto` or a fixed step.
    #[arg(long)]
    pub mu: Option<StepSpec>,
    /// Outer iterations.
    #[arg(long)]
    pub n_fb: Option<usize>,
    /// Relaxation of the forward-backward update.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Inner Douglas-Rachford iterations.
    #[arg(long)]
    pub n_dr: Option<usize>,
    #[arg(long)]
    pub dr_relaxation: Option<f64>,
    #[arg(long, value_enum)]
    pub dr_init: Option<DrInitName>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Stop once `‖α_{t+1} − α_t‖ ≤ tol·‖α_{t+1}‖`; 0 runs all iterations.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Starting coefficients.
    #[arg(long, value_enum)]
    pub init: Option<InitName>,
    #[arg(long)]
    pub out: PathBuf,
}

impl ProblemArgs {
    fn flags(&self) -> SolverFlags {
        SolverFlags {
            algo: self.algo,
            mu: self.mu,
            n_fb: self.n_fb,
            beta: self.beta,
            n_dr: self.n_dr,
            dr_relaxation: self.dr_relaxation,
            dr_init: self.dr_init,
            tau: self.tau,
            theta: self.theta,
            sigma: self.sigma,
            tol: self.tol,
            init: self.init,
        }
    }

    fn psf(&self, file: &FileConfig) -> Result<PsfSpec> {
        let psf = self.psf.clone().or_else(|| file.psf.clone());
        let psf = psf.ok_or_else(|| Error::Usage("--psf is required (on the command line or in --config)".into()))?;
        Ok(match psf {
            PsfSpec::File(p) => PsfSpec::File(absolute(&p)?),
            other => other,
        })
    }
}

#[derive(Debug, Args)]
pub struct DeconvolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Regularization weight, or `gcv` to pick it from the grid.
    #[arg(long)]
    pub lambda: Option<LambdaSpec>,
    #[arg(long, value_enum, default_value = "rawf32")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Ground truth; adds `mae` and `mse` columns.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fail unless every recorded output is reproduced byte for byte.
    #[arg(long)]
    pub check: bool,
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let parse = |v: &str| v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| format!("bad size `{s}`"));
    match s.split_once('x') {
        Some((w, h)) => Ok((parse(w)?, parse(h)?)),
        None => parse(s).map(|n| (n, n)),
    }
}

/// Inputs are recorded as absolute paths so manifests replay from anywhere.
fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(Error::io(path))
}

impl Command {
    /// Turns parsed arguments into a fully resolved invocation, or runs the
    /// commands that have none.
    pub fn execute(self) -> Result<()> {
        let (inv, out) = match self {
            Command::Simulate(a) => {
                let truth = match (a.phantom, a.input) {
                    (Some(phantom), _) => TruthSource::Phantom { phantom, width: a.size.0, height: a.size.1 },
                    (None, Some(path)) => TruthSource::Image { path: absolute(&path)? },
                    (None, None) => return Err(Error::Usage("one of --phantom or --input is required".into())),
                };
                let psf = match a.psf {
                    PsfSpec::File(p) => PsfSpec::File(absolute(&p)?),
                    other => other,
                };
                let p = SimulateParams { truth, peak: a.peak, psf, seed: a.seed, format: a.format.into() };
                (Invocation::Simulate(p), a.out)
            }
            Command::Deconvolve(a) => {
                let pa = a.problem;
                let file = FileConfig::load_optional(pa.config.as_deref())?;
                let p = DeconvolveParams {
                    input: absolute(&pa.input)?,
                    psf: pa.psf(&file)?,
                    dict: pa.dict.clone().or_else(|| file.dict.clone()).unwrap_or_default(),
                    lambda: a.lambda.or(file.lambda).unwrap_or_default(),
                    grid: pa.grid.clone().or_else(|| file.grid.clone()).unwrap_or_default(),
                    offset: resolve_offset(pa.offset, &file)?,
                    solver: pa.flags().resolve(&file),
                    format: a.format.into(),
                };
                p.solver.to_config(0.0)?;
                (Invocation::Deconvolve(p), pa.out)
            }
            Command::Sweep(a) => {
                let pa = a.problem;
                let file = FileConfig::load_optional(pa.config.as_deref())?;
                let p = SweepParams {
                    input: absolute(&pa.input)?,
                    psf: pa.psf(&file)?,
                    dict: pa.dict.clone().or_else(|| file.dict.clone()).unwrap_or_default(),
                    grid: pa.grid.clone().or_else(|| file.grid.clone()).unwrap_or_default(),
                    offset: resolve_offset(pa.offset, &file)?,
                    solver: pa.flags().resolve(&file),
                    reference: a.reference.as_deref().map(absolute).transpose()?,
                };
                p.solver.to_config(0.0)?;
                (Invocation::Sweep(p), pa.out)
            }
            Command::Metrics(a) => {
                let m = commands::compare(&a.reference, &a.estimate)?;
                println!("{}", serde_json::to_string(&m).expect("metrics serialize"));
                return Ok(());
            }
            Command::Replay(a) => {
                commands::replay(&a.manifest, &a.out, a.check)?;
                return Ok(());
            }
        };
        commands::run(&inv, &out)?;
        Ok(())
    }
}
