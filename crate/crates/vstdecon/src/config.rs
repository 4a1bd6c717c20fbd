//! Resolved run parameters and the optional JSON config file.
//!
//! Precedence is flag, then config file, then built-in default. The file
//! uses the solver's field names:
//!
//! ```json
//! { "algo": "tseng", "lambda": "gcv", "n_fb": 300,
//!   "dr": { "n_iter": 5 }, "tseng": { "theta": 0.8 },
//!   "psf": "moving_average:7", "dict": "tidwt:J=3" }
//! ```

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use vstdecon_core::fidelity::ANSCOMBE_OFFSET;
use vstdecon_core::prox::{DrConfig, DrInit};
use vstdecon_core::solver::{Algorithm, SolverConfig, StepSize, TsengParams};

use crate::error::{Error, Result};
use crate::spec::{DictSpec, GridSpec, LambdaSpec, PsfSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgoName {
    Fb,
    #[default]
    Tseng,
}

impl From<AlgoName> for Algorithm {
    fn from(a: AlgoName) -> Algorithm {
        match a {
            AlgoName::Fb => Algorithm::ForwardBackward,
            AlgoName::Tseng => Algorithm::Tseng,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DrInitName {
    #[default]
    Input,
    Zero,
}

impl From<DrInitName> for DrInit {
    fn from(d: DrInitName) -> DrInit {
        match d {
            DrInitName::Input => DrInit::FromInput,
            DrInitName::Zero => DrInit::Zero,
        }
    }
}

/// Starting coefficients for the outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitName {
    #[default]
    Zero,
    /// `Φᵀz`, the analysis coefficients of the stabilized observation.
    Analysis,
}

/// `auto` or a fixed positive step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepSpec {
    #[default]
    Auto,
    Fixed(f64),
}

impl From<StepSpec> for StepSize {
    fn from(s: StepSpec) -> StepSize {
        match s {
            StepSpec::Auto => StepSize::Auto,
            StepSpec::Fixed(v) => StepSize::Fixed(v),
        }
    }
}

impl FromStr for StepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(StepSpec::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(StepSpec::Fixed(v)),
            _ => Err(Error::spec("step size", s, "must be `auto` or a positive number")),
        }
    }
}

impl fmt::Display for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSpec::Auto => f.write_str("auto"),
            StepSpec::Fixed(v) => write!(f, "{v:e}"),
        }
    }
}

impl Serialize for StepSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepSpec::Auto => s.serialize_str("auto"),
            StepSpec::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for StepSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v > 0.0 && v.is_finite() => Ok(StepSpec::Fixed(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("step size {v} must be positive"))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrSettings {
    pub n_iter: usize,
    pub relaxation: f64,
    pub init: DrInitName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsengSettings {
    pub tau: f64,
    pub theta: f64,
    pub sigma: f64,
}

/// Every solver knob except `λ`, in serializable form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub algo: AlgoName,
    pub mu: StepSpec,
    pub n_fb: usize,
    pub beta: f64,
    pub dr: DrSettings,
    pub tseng: TsengSettings,
    pub tol: f64,
    pub init: InitName,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let base = SolverConfig::default();
        let tseng = TsengParams::default();
        SolverSettings {
            algo: AlgoName::default(),
            mu: StepSpec::Auto,
            n_fb: base.n_fb,
            beta: base.beta,
            dr: DrSettings { n_iter: base.dr.n_iter, relaxation: base.dr.relaxation, init: DrInitName::Input },
            tseng: TsengSettings { tau: tseng.tau, theta: tseng.theta, sigma: tseng.sigma },
            tol: base.tol,
            init: InitName::Zero,
        }
    }
}

impl SolverSettings {
    pub fn to_config(&self, lambda: f64) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            algo: self.algo.into(),
            lambda,
            mu: self.mu.into(),
            n_fb: self.n_fb,
            beta: self.beta,
            dr: DrConfig { n_iter: self.dr.n_iter, relaxation: self.dr.relaxation, init: self.dr.init.into() },
            tseng: TsengParams { tau: self.tseng.tau, theta: self.tseng.theta, sigma: self.tseng.sigma },
            tol: self.tol,
            record_history: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialDr {
    pub n_iter: Option<usize>,
    pub relaxation: Option<f64>,
    pub init: Option<DrInitName>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialTseng {
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub sigma: Option<f64>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub algo: Option<AlgoName>,
    pub lambda: Option<LambdaSpec>,
    pub mu: Option<StepSpec>,
    pub n_fb: Option<usize>,
    pub beta: Option<f64>,
    #[serde(default)]
    pub dr: PartialDr,
    #[serde(default)]
    pub tseng: PartialTseng,
    pub tol: Option<f64>,
    pub init: Option<InitName>,
    pub psf: Option<PsfSpec>,
    pub dict: Option<DictSpec>,
    pub grid: Option<GridSpec>,
    pub offset: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|e| Error::Config { path: path.to_owned(), reason: e.to_string() })
    }

    /// Loads `path` if given, otherwise an empty config.
    pub fn load_optional(path: Option<&Path>) -> Result<FileConfig> {
        path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }
}

/// Solver knobs given on the command line; `None` defers to the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverFlags {
    pub algo: Option<AlgoName>,
    pub mu: Option<StepSpec>,
    pub n_fb: Option<usize>,
    pub beta: Option<f64>,
    pub n_dr: Option<usize>,
    pub dr_relaxation: Option<f64>,
    pub dr_init: Option<DrInitName>,
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub sigma: Option<f64>,
    pub tol: Option<f64>,
    pub init: Option<InitName>,
}

impl SolverFlags {
    pub fn resolve(&self, file: &FileConfig) -> SolverSettings {
        let d = SolverSettings::default();
        SolverSettings {
            algo: self.algo.or(file.algo).unwrap_or(d.algo),
            mu: self.mu.or(file.mu).unwrap_or(d.mu),
            n_fb: self.n_fb.or(file.n_fb).unwrap_or(d.n_fb),
            beta: self.beta.or(file.beta).unwrap_or(d.beta),
            dr: DrSettings {
                n_iter: self.n_dr.or(file.dr.n_iter).unwrap_or(d.dr.n_iter),
                relaxation: self.dr_relaxation.or(file.dr.relaxation).unwrap_or(d.dr.relaxation),
                init: self.dr_init.or(file.dr.init).unwrap_or(d.dr.init),
            },
            tseng: TsengSettings {
                tau: self.tau.or(file.tseng.tau).unwrap_or(d.tseng.tau),
                theta: self.theta.or(file.tseng.theta).unwrap_or(d.tseng.theta),
                sigma: self.sigma.or(file.tseng.sigma).unwrap_or(d.tseng.sigma),
            },
            tol: self.tol.or(file.tol).unwrap_or(d.tol),
            init: self.init.or(file.init).unwrap_or(d.init),
        }
    }
}

pub fn resolve_offset(flag: Option<f64>, file: &FileConfig) -> Result<f64> {
    let b = flag.or(file.offset).unwrap_or(ANSCOMBE_OFFSET);
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::spec("offset", &b.to_string(), "must be positive"));
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_solver() {
        let s = SolverSettings::default();
        let cfg = s.to_config(0.1).unwrap();
        let base = SolverConfig { algo: Algorithm::Tseng, lambda: 0.1, ..SolverConfig::default() };
        assert_eq!(cfg, base);
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: FileConfig =
            serde_json::from_str(r#"{"algo":"fb","n_fb":50,"dr":{"n_iter":7},"tseng":{"theta":0.8},"mu":0.2}"#).unwrap();
        let flags = SolverFlags { n_fb: Some(9), theta: Some(0.7), ..SolverFlags::default() };
        let s = flags.resolve(&file);
        assert_eq!(s.algo, AlgoName::Fb);
        assert_eq!(s.n_fb, 9);
        assert_eq!(s.dr.n_iter, 7);
        assert_eq!(s.tseng.theta, 0.7);
        assert_eq!(s.tseng.tau, 0.5);
        assert_eq!(s.mu, StepSpec::Fixed(0.2));
        assert_eq!(s.beta, 1.0);
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"n_fbb":3}"#).is_err());
        assert!(serde_json::from_str::<FileConfig>(r#"{"dr":{"iters":3}}"#).is_err());
        assert!(serde_json::from_str::<FileConfig>(r#"{"mu":-1}"#).is_err());
        let f: FileConfig = serde_json::from_str(r#"{"lambda":"gcv","psf":"delta","dict":"identity"}"#).unwrap();
        assert_eq!(f.lambda, Some(LambdaSpec::Gcv));
        assert_eq!(f.psf, Some(PsfSpec::Delta));
    }

    #[test]
    fn settings_round_trip() {
        let s = SolverSettings { mu: StepSpec::Fixed(0.25), ..SolverSettings::default() };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SolverSettings>(&text).unwrap(), s);
    }
}
