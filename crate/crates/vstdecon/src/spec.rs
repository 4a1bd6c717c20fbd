//! Textual specifications used on the command line and in config files.
//!
//! ```text
//! psf      moving_average:K | gaussian:SIGMA | delta | file:PATH
//! dict     identity | dwt[:J=N][:filter=F] | tidwt[:J=N][:filter=F] | union:D+D[+D…]
//! grid     auto | LO:HI:Nlog | rel:LO:HI:Nlog | V[,V…]
//! lambda   gcv | VALUE
//! phantom  lines_gaussians | point_grid[:SPACING] | flat[:VALUE]
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use vstdecon_core::dictionary::{Dictionary, FilterFamily};
use vstdecon_core::fidelity::FidelityModel;
use vstdecon_core::operators::{Psf, PsfKind};
use vstdecon_core::phantom::{LinesGaussiansParams, PhantomKind};
use vstdecon_core::select::{log_grid, relative_grid, DEFAULT_GRID_LEN};

use crate::error::{Error, Result};
use crate::io::read_image;

/// Decomposition depth when a wavelet spec omits `J`.
pub const DEFAULT_LEVELS: usize = 4;

/// Implements `Serialize`/`Deserialize` through `Display`/`FromStr`.
macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fn parse_num<T: FromStr>(what: &'static str, input: &str, field: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::spec(what, input, format!("`{field}` is not a valid number")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsfSpec {
    MovingAverage(usize),
    Gaussian(f64),
    Delta,
    File(PathBuf),
}

impl PsfSpec {
    /// Builds the unit-sum kernel; file kernels are normalized on load.
    pub fn build(&self) -> Result<Psf> {
        let kind = match self {
            PsfSpec::MovingAverage(k) => PsfKind::MovingAverage(*k),
            PsfSpec::Gaussian(s) => PsfKind::Gaussian(*s),
            PsfSpec::Delta => PsfKind::Delta,
            PsfSpec::File(path) => return Ok(Psf::from_kernel(read_image(path, None)?, true)?),
        };
        Ok(Psf::new(kind, true)?)
    }
}

impl FromStr for PsfSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const WHAT: &str = "psf";
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("delta", None) => Ok(PsfSpec::Delta),
            ("moving_average", Some(a)) => {
                let k: usize = parse_num(WHAT, s, a)?;
                if k == 0 || k % 2 == 0 {
                    return Err(Error::spec(WHAT, s, "moving average size must be odd"));
                }
                Ok(PsfSpec::MovingAverage(k))
            }
            ("gaussian", Some(a)) => {
                let sigma: f64 = parse_num(WHAT, s, a)?;
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::spec(WHAT, s, "sigma must be positive"));
                }
                Ok(PsfSpec::Gaussian(sigma))
            }
            ("file", Some(p)) if !p.is_empty() => Ok(PsfSpec::File(PathBuf::from(p))),
            _ => Err(Error::spec(WHAT, s, "expected moving_average:K, gaussian:SIGMA, delta or file:PATH")),
        }
    }
}

impl fmt::Display for PsfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsfSpec::MovingAverage(k) => write!(f, "moving_average:{k}"),
            PsfSpec::Gaussian(s) => write!(f, "gaussian:{s}"),
            PsfSpec::Delta => f.write_str("delta"),
            PsfSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

string_serde!(PsfSpec);

#[derive(Debug, Clone, PartialEq)]
pub enum DictSpec {
    Identity,
    Dwt { levels: usize, family: FilterFamily },
    TiDwt { levels: usize, family: FilterFamily },
    Union(Vec<DictSpec>),
}

impl DictSpec {
    pub fn build(&self, width: usize, height: usize) -> Result<Dictionary> {
        Ok(match self {
            DictSpec::Identity => Dictionary::identity(width, height)?,
            DictSpec::Dwt { levels, family } => Dictionary::dwt(width, height, *levels, *family)?,
            DictSpec::TiDwt { levels, family } => Dictionary::tidwt(width, height, *levels, *family)?,
            DictSpec::Union(members) => {
                Dictionary::union(members.iter().map(|m| m.build(width, height)).collect::<Result<_>>()?)?
            }
        })
    }

    fn parse_member(s: &str, whole: &str) -> Result<DictSpec> {
        const WHAT: &str = "dictionary";
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        if head == "identity" {
            return match parts.next() {
                None => Ok(DictSpec::Identity),
                Some(_) => Err(Error::spec(WHAT, whole, "identity takes no options")),
            };
        }
        if head != "dwt" && head != "tidwt" {
            return Err(Error::spec(WHAT, whole, format!("unknown dictionary `{head}`")));
        }
        let mut levels = DEFAULT_LEVELS;
        let mut family = FilterFamily::default();
        for opt in parts {
            match opt.split_once('=') {
                Some(("J", v)) => levels = parse_num(WHAT, whole, v)?,
                Some(("filter", v)) => {
                    family = v.parse().map_err(|_| Error::spec(WHAT, whole, format!("unknown filter `{v}`")))?
                }
                _ => return Err(Error::spec(WHAT, whole, format!("unknown option `{opt}`"))),
            }
        }
        if levels == 0 {
            return Err(Error::spec(WHAT, whole, "J must be at least 1"));
        }
        Ok(if head == "dwt" { DictSpec::Dwt { levels, family } } else { DictSpec::TiDwt { levels, family } })
    }
}

/// The orthobasis: the support-size estimate of degrees of freedom behind
/// GCV assumes one, and on redundant frames it exceeds the pixel count for
/// all but the largest `λ`.
impl Default for DictSpec {
    fn default() -> Self {
        DictSpec::Dwt { levels: DEFAULT_LEVELS, family: FilterFamily::default() }
    }
}

impl FromStr for DictSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("union:") {
            Some(rest) => {
                let members: Vec<DictSpec> =
                    rest.split('+').map(|m| DictSpec::parse_member(m, s)).collect::<Result<_>>()?;
                if members.len() < 2 {
                    return Err(Error::spec("dictionary", s, "a union needs at least two members"));
                }
                Ok(DictSpec::Union(members))
            }
            None => DictSpec::parse_member(s, s),
        }
    }
}

impl fmt::Display for DictSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DictSpec::Identity => f.write_str("identity"),
            DictSpec::Dwt { levels, family } => write!(f, "dwt:J={levels}:filter={family}"),
            DictSpec::TiDwt { levels, family } => write!(f, "tidwt:J={levels}:filter={family}"),
            DictSpec::Union(members) => {
                f.write_str("union:")?;
                let parts: Vec<String> = members.iter().map(ToString::to_string).collect();
                f.write_str(&parts.join("+"))
            }
        }
    }
}

string_serde!(DictSpec);

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Twelve log-spaced points over `[1e-3, 1]` times the data-driven scale.
    Auto,
    Log { lo: f64, hi: f64, count: usize },
    /// Like `Log`, with bounds relative to the data-driven scale.
    RelativeLog { lo: f64, hi: f64, count: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn resolve(&self, model: &FidelityModel<'_>) -> Result<Vec<f64>> {
        Ok(match self {
            GridSpec::Auto => relative_grid(model, 1e-3, 1.0, DEFAULT_GRID_LEN)?,
            GridSpec::Log { lo, hi, count } => log_grid(*lo, *hi, *count)?,
            GridSpec::RelativeLog { lo, hi, count } => relative_grid(model, *lo, *hi, *count)?,
            GridSpec::List(v) => v.clone(),
        })
    }

    fn parse_log(s: &str, body: &str) -> Result<(f64, f64, usize)> {
        const WHAT: &str = "grid";
        let fields: Vec<&str> = body.split(':').collect();
        let [lo, hi, n] = fields[..] else {
            return Err(Error::spec(WHAT, s, "expected LO:HI:Nlog"));
        };
        let n = n.strip_suffix("log").ok_or_else(|| Error::spec(WHAT, s, "point count must end in `log`"))?;
        let (lo, hi, count): (f64, f64, usize) = (parse_num(WHAT, s, lo)?, parse_num(WHAT, s, hi)?, parse_num(WHAT, s, n)?);
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
            return Err(Error::spec(WHAT, s, "need 0 < LO <= HI and at least one point"));
        }
        Ok((lo, hi, count))
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(GridSpec::Auto);
        }
        if let Some(body) = s.strip_prefix("rel:") {
            let (lo, hi, count) = GridSpec::parse_log(s, body)?;
            return Ok(GridSpec::RelativeLog { lo, hi, count });
        }
        if s.contains(':') {
            let (lo, hi, count) = GridSpec::parse_log(s, s)?;
            return Ok(GridSpec::Log { lo, hi, count });
        }
        let values: Vec<f64> = s.split(',').map(|v| parse_num("grid", s, v)).collect::<Result<_>>()?;
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::spec("grid", s, "values must be positive and strictly increasing"));
        }
        Ok(GridSpec::List(values))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Auto => f.write_str("auto"),
            GridSpec::Log { lo, hi, count } => write!(f, "{lo:e}:{hi:e}:{count}log"),
            GridSpec::RelativeLog { lo, hi, count } => write!(f, "rel:{lo:e}:{hi:e}:{count}log"),
            GridSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

string_serde!(GridSpec);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaSpec {
    #[default]
    Gcv,
    Value(f64),
}

impl FromStr for LambdaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "gcv" {
            return Ok(LambdaSpec::Gcv);
        }
        let v: f64 = parse_num("lambda", s, s)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::spec("lambda", s, "must be `gcv` or a finite nonnegative number"));
        }
        Ok(LambdaSpec::Value(v))
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::Gcv => f.write_str("gcv"),
            LambdaSpec::Value(v) => write!(f, "{v:e}"),
        }
    }
}

impl Serialize for LambdaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaSpec::Gcv => s.serialize_str("gcv"),
            LambdaSpec::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => LambdaSpec::from_str(&v.to_string()).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSpec {
    LinesGaussians,
    PointGrid { spacing: usize },
    Flat(f64),
}

impl PhantomSpec {
    /// Amplitudes are nominal; the simulator rescales to the requested peak.
    pub fn kind(&self) -> PhantomKind {
        match self {
            PhantomSpec::LinesGaussians => PhantomKind::LinesGaussians(LinesGaussiansParams::default()),
            PhantomSpec::PointGrid { spacing } => PhantomKind::PointGrid { spacing: *spacing, amplitude: 1.0 },
            PhantomSpec::Flat(v) => PhantomKind::Flat(*v),
        }
    }
}

impl FromStr for PhantomSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const WHAT: &str = "phantom";
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("lines_gaussians", None) => Ok(PhantomSpec::LinesGaussians),
            ("point_grid", None) => Ok(PhantomSpec::PointGrid { spacing: 8 }),
            ("point_grid", Some(a)) => {
                let spacing: usize = parse_num(WHAT, s, a)?;
                if spacing == 0 {
                    return Err(Error::spec(WHAT, s, "spacing must be positive"));
                }
                Ok(PhantomSpec::PointGrid { spacing })
            }
            ("flat", None) => Ok(PhantomSpec::Flat(1.0)),
            ("flat", Some(a)) => {
                let v: f64 = parse_num(WHAT, s, a)?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::spec(WHAT, s, "value must be nonnegative"));
                }
                Ok(PhantomSpec::Flat(v))
            }
            _ => Err(Error::spec(WHAT, s, "expected lines_gaussians, point_grid[:SPACING] or flat[:VALUE]")),
        }
    }
}

impl fmt::Display for PhantomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhantomSpec::LinesGaussians => f.write_str("lines_gaussians"),
            PhantomSpec::PointGrid { spacing } => write!(f, "point_grid:{spacing}"),
            PhantomSpec::Flat(v) => write!(f, "flat:{v}"),
        }
    }
}

string_serde!(PhantomSpec);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psf_specs() {
        assert_eq!("moving_average:7".parse::<PsfSpec>().unwrap(), PsfSpec::MovingAverage(7));
        assert_eq!("gaussian:1.5".parse::<PsfSpec>().unwrap(), PsfSpec::Gaussian(1.5));
        assert_eq!("delta".parse::<PsfSpec>().unwrap(), PsfSpec::Delta);
        assert_eq!("file:k.pgm".parse::<PsfSpec>().unwrap(), PsfSpec::File("k.pgm".into()));
        for bad in ["moving_average:4", "moving_average", "gaussian:-1", "delta:3", "box:3", "file:"] {
            assert!(bad.parse::<PsfSpec>().is_err(), "{bad}");
        }
        let k = PsfSpec::MovingAverage(7).build().unwrap();
        assert_eq!(k.kernel().len(), 49);
    }

    #[test]
    fn dict_specs() {
        assert_eq!("identity".parse::<DictSpec>().unwrap(), DictSpec::Identity);
        assert_eq!(
            "dwt:J=4".parse::<DictSpec>().unwrap(),
            DictSpec::Dwt { levels: 4, family: FilterFamily::Sym4 }
        );
        assert_eq!(
            "tidwt:filter=haar:J=2".parse::<DictSpec>().unwrap(),
            DictSpec::TiDwt { levels: 2, family: FilterFamily::Haar }
        );
        let u: DictSpec = "union:tidwt:J=4+dwt:J=4".parse().unwrap();
        assert!(matches!(&u, DictSpec::Union(m) if m.len() == 2));
        assert_eq!(u.to_string().parse::<DictSpec>().unwrap(), u);
        assert_eq!(u.build(32, 32).unwrap().frame_constant(), 2.0);
        for bad in ["dwt:J=0", "dwt:K=3", "curvelet", "union:dwt", "identity:J=2", "dwt:filter=coif1"] {
            assert!(bad.parse::<DictSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_specs() {
        assert_eq!(
            "1e-3:1:12log".parse::<GridSpec>().unwrap(),
            GridSpec::Log { lo: 1e-3, hi: 1.0, count: 12 }
        );
        assert_eq!(
            "rel:1e-3:1:12log".parse::<GridSpec>().unwrap(),
            GridSpec::RelativeLog { lo: 1e-3, hi: 1.0, count: 12 }
        );
        assert_eq!("0.1,0.2".parse::<GridSpec>().unwrap(), GridSpec::List(vec![0.1, 0.2]));
        assert_eq!("auto".parse::<GridSpec>().unwrap(), GridSpec::Auto);
        for g in ["1e-3:1:12log", "rel:0.01:0.5:3log", "0.1,0.2,0.4", "auto"] {
            let parsed: GridSpec = g.parse().unwrap();
            assert_eq!(parsed.to_string().parse::<GridSpec>().unwrap(), parsed);
        }
        for bad in ["1:0.1:3log", "0:1:3log", "1e-3:1:12", "0.2,0.1", "a,b", "1:2"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn lambda_specs_and_serde() {
        assert_eq!("gcv".parse::<LambdaSpec>().unwrap(), LambdaSpec::Gcv);
        assert_eq!("0.25".parse::<LambdaSpec>().unwrap(), LambdaSpec::Value(0.25));
        assert!("-1".parse::<LambdaSpec>().is_err());
        let v: LambdaSpec = serde_json::from_str("0.5").unwrap();
        assert_eq!(v, LambdaSpec::Value(0.5));
        let g: LambdaSpec = serde_json::from_str("\"gcv\"").unwrap();
        assert_eq!(g, LambdaSpec::Gcv);
        assert_eq!(serde_json::to_string(&LambdaSpec::Value(0.5)).unwrap(), "0.5");
    }

    #[test]
    fn phantom_specs() {
        assert_eq!("point_grid:8".parse::<PhantomSpec>().unwrap(), PhantomSpec::PointGrid { spacing: 8 });
        assert_eq!("flat:7".parse::<PhantomSpec>().unwrap(), PhantomSpec::Flat(7.0));
        assert!("stars".parse::<PhantomSpec>().is_err());
        let s = serde_json::to_string(&PhantomSpec::LinesGaussians).unwrap();
        assert_eq!(serde_json::from_str::<PhantomSpec>(&s).unwrap(), PhantomSpec::LinesGaussians);
    }
}
