use core::fmt;
use core::str::FromStr;

/// Orthonormal two-channel filter banks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FilterFamily {
    /// 2 taps.
    Haar,
    /// Daubechies, 2 vanishing moments, 4 taps.
    Db2,
    /// Daubechies, 4 vanishing moments, 8 taps.
    Db4,
    /// Least-asymmetric Daubechies ("symlet"), 4 vanishing moments, 8 taps.
    #[default]
    Sym4,
}

const HAAR: [f64; 2] = [core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::FRAC_1_SQRT_2];

const DB2: [f64; 4] = [0.48296291314453416, 0.8365163037378079, 0.2241438680420134, -0.12940952255126037];

const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const SYM4: [f64; 8] = [
    0.032223100604051466,
    -0.012603967262031304,
    -0.09921954357663353,
    0.29785779560530606,
    0.8037387518051321,
    0.497618667632775,
    -0.029635527646002493,
    -0.07576571478950221,
];

impl FilterFamily {
    /// Scaling filter `h` (sums to √2, unit energy, orthogonal to its even shifts).
    pub fn lowpass(self) -> &'static [f64] {
        match self {
            FilterFamily::Haar => &HAAR,
            FilterFamily::Db2 => &DB2,
            FilterFamily::Db4 => &DB4,
            FilterFamily::Sym4 => &SYM4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterFamily::Haar => "haar",
            FilterFamily::Db2 => "db2",
            FilterFamily::Db4 => "db4",
            FilterFamily::Sym4 => "sym4",
        }
    }

    pub(crate) fn bank(self) -> FilterBank {
        let h = self.lowpass();
        let n = h.len();
        let mut lo = [0.0; 8];
        let mut hi = [0.0; 8];
        for i in 0..n {
            lo[i] = h[i];
            // Quadrature mirror: g[i] = (-1)^i h[n-1-i].
            hi[i] = if i % 2 == 0 { h[n - 1 - i] } else { -h[n - 1 - i] };
        }
        FilterBank { lo, hi, len: n }
    }
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterFamily {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "haar" | "db1" => Ok(FilterFamily::Haar),
            "db2" => Ok(FilterFamily::Db2),
            "db4" => Ok(FilterFamily::Db4),
            "sym4" => Ok(FilterFamily::Sym4),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FilterBank {
    lo: [f64; 8],
    hi: [f64; 8],
    len: usize,
}

impl FilterBank {
    #[inline]
    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.len]
    }

    #[inline]
    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.len]
    }
}
