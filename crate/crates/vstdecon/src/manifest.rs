//! Run manifests written next to every output set.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::SolverSettings;
use crate::error::{Error, Result};
use crate::io::ImageFormat;
use crate::spec::{DictSpec, GridSpec, LambdaSpec, PhantomSpec, PsfSpec};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Source of the ground truth for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthSource {
    Phantom { phantom: PhantomSpec, width: usize, height: usize },
    Image { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    pub truth: TruthSource,
    pub peak: f64,
    pub psf: PsfSpec,
    pub seed: u64,
    pub format: ImageFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeconvolveParams {
    pub input: PathBuf,
    pub psf: PsfSpec,
    pub dict: DictSpec,
    pub lambda: LambdaSpec,
    /// Only consulted when `lambda` is `gcv`.
    pub grid: GridSpec,
    pub offset: f64,
    pub solver: SolverSettings,
    pub format: ImageFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub input: PathBuf,
    pub psf: PsfSpec,
    pub dict: DictSpec,
    pub grid: GridSpec,
    pub offset: f64,
    pub solver: SolverSettings,
    pub reference: Option<PathBuf>,
}

/// Fully resolved parameters of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "lowercase")]
pub enum Invocation {
    Simulate(SimulateParams),
    Deconvolve(DeconvolveParams),
    Sweep(SweepParams),
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Simulate(_) => "simulate",
            Invocation::Deconvolve(_) => "deconvolve",
            Invocation::Sweep(_) => "sweep",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Invocation::Simulate(p) => Some(p.seed),
            _ => None,
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Invocation::Simulate(p) => match &p.truth {
                TruthSource::Image { path } => vec![path.clone()],
                TruthSource::Phantom { .. } => Vec::new(),
            },
            Invocation::Deconvolve(p) => vec![p.input.clone()],
            Invocation::Sweep(p) => std::iter::once(p.input.clone()).chain(p.reference.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub invocation: Invocation,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(invocation: Invocation, outputs: Vec<PathBuf>) -> RunManifest {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        RunManifest {
            seed: invocation.seed(),
            inputs: invocation.inputs(),
            invocation,
            outputs,
            timestamp,
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(Error::io(&path))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|e| Error::Config { path: path.to_owned(), reason: e.to_string() })
    }
}
