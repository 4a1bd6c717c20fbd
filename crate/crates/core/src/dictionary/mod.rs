//! Analysis/synthesis operator pairs `(Φᵀ, Φ)`.
//!
//! A dictionary maps `L` coefficients to an `n`-pixel image (`Φ`, synthesis)
//! and back (`Φᵀ`, analysis). Every dictionary here is a tight frame,
//! `ΦΦᵀ = c·I`; orthobases are the special case `L = n`, `c = 1`.
//!
//! Built-in members: the identity, the orthogonal periodized DWT, the
//! Parseval-normalized undecimated (translation-invariant) DWT, unions of
//! those, and uniformly rescaled copies (`c = s²·c₀`).

mod filters;
mod wavelet;

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

pub use filters::FilterFamily;

use crate::image::{Image, Shape};
use crate::{Error, Result};

/// Which of the four separable filter combinations produced a band.
/// The first word is the filter applied along rows, the second along columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Pixels (identity dictionary) or the coarse approximation.
    LowLow,
    HighLow,
    LowHigh,
    HighHigh,
}

/// One contiguous block of a coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subband {
    /// Index of the owning member in a union dictionary (0 otherwise).
    pub member: usize,
    /// Decomposition level, 1 = finest. The approximation carries the
    /// deepest level; identity bands use 0.
    pub scale: usize,
    pub orientation: Orientation,
    pub width: usize,
    pub height: usize,
    pub offset: usize,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Coefficients `α` in a dictionary domain, with the band layout they follow.
#[derive(Clone, PartialEq)]
pub struct CoefVector {
    data: Vec<f64>,
    layout: Arc<[Subband]>,
}

impl CoefVector {
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn layout(&self) -> &[Subband] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn band(&self, b: &Subband) -> &[f64] {
        &self.data[b.range()]
    }

    /// Same layout, new values. Panics if the length differs.
    pub fn with_data(&self, data: Vec<f64>) -> CoefVector {
        assert_eq!(data.len(), self.data.len(), "coefficient length changed");
        CoefVector { data, layout: self.layout.clone() }
    }

    pub fn zeros_like(&self) -> CoefVector {
        self.with_data(vec![0.0; self.len()])
    }

    pub fn map(&self, f: impl FnMut(f64) -> f64) -> CoefVector {
        self.with_data(self.data.iter().copied().map(f).collect())
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &CoefVector) -> CoefVector {
        self.with_data(self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect())
    }

    pub fn sub(&self, other: &CoefVector) -> CoefVector {
        self.add_scaled(-1.0, other)
    }

    pub fn dot(&self, other: &CoefVector) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for CoefVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CoefVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl fmt::Debug for CoefVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefVector").field("len", &self.data.len()).field("bands", &self.layout.len()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryKind {
    Orthobasis,
    TightFrame,
}

#[derive(Debug, Clone)]
enum Transform {
    Identity,
    Dwt { levels: usize, family: FilterFamily },
    TiDwt { levels: usize, family: FilterFamily },
    Union(Vec<Dictionary>),
    Scaled { inner: Box<Dictionary>, factor: f64 },
}

/// A tight frame over `width × height` images.
#[derive(Debug, Clone)]
pub struct Dictionary {
    width: usize,
    height: usize,
    constant: f64,
    layout: Arc<[Subband]>,
    transform: Transform,
}

impl Dictionary {
    pub fn identity(width: usize, height: usize) -> Result<Dictionary> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let band = Subband { member: 0, scale: 0, orientation: Orientation::LowLow, width, height, offset: 0 };
        Ok(Dictionary { width, height, constant: 1.0, layout: Arc::from(vec![band]), transform: Transform::Identity })
    }

    /// Orthogonal periodized DWT with `levels` decompositions.
    pub fn dwt(width: usize, height: usize, levels: usize, family: FilterFamily) -> Result<Dictionary> {
        check_dyadic(width, height, levels)?;
        let mut layout = Vec::with_capacity(3 * levels + 1);
        let mut offset = 0;
        let mut push = |scale, orientation, w: usize, h: usize| {
            layout.push(Subband { member: 0, scale, orientation, width: w, height: h, offset });
            offset += w * h;
        };
        push(levels, Orientation::LowLow, width >> levels, height >> levels);
        for level in (1..=levels).rev() {
            for o in [Orientation::HighLow, Orientation::LowHigh, Orientation::HighHigh] {
                push(level, o, width >> level, height >> level);
            }
        }
        Ok(Dictionary {
            width,
            height,
            constant: 1.0,
            layout: Arc::from(layout),
            transform: Transform::Dwt { levels, family },
        })
    }

    /// Undecimated DWT scaled to a Parseval frame (`c = 1`), `L = (3J+1)·n`.
    pub fn tidwt(width: usize, height: usize, levels: usize, family: FilterFamily) -> Result<Dictionary> {
        check_dyadic(width, height, levels)?;
        let n = width * height;
        let mut layout = Vec::with_capacity(3 * levels + 1);
        layout.push(Subband { member: 0, scale: levels, orientation: Orientation::LowLow, width, height, offset: 0 });
        let mut offset = n;
        for level in (1..=levels).rev() {
            for o in [Orientation::HighLow, Orientation::LowHigh, Orientation::HighHigh] {
                layout.push(Subband { member: 0, scale: level, orientation: o, width, height, offset });
                offset += n;
            }
        }
        Ok(Dictionary {
            width,
            height,
            constant: 1.0,
            layout: Arc::from(layout),
            transform: Transform::TiDwt { levels, family },
        })
    }

    /// Concatenation `Φ = [Φ₁ … Φₖ]`: analysis stacks the member
    /// coefficient blocks, synthesis sums the member reconstructions, and
    /// `c = Σ cᵢ`. The pseudo-inverse `c⁻¹Φ` therefore averages the members'
    /// reconstructions when they share the same constant.
    pub fn union(members: Vec<Dictionary>) -> Result<Dictionary> {
        let first = members.first().ok_or_else(|| Error::param("union", "needs at least one member"))?;
        let (width, height) = (first.width, first.height);
        let mut layout = Vec::new();
        let mut offset = 0;
        for (i, m) in members.iter().enumerate() {
            if m.width != width || m.height != height {
                return Err(Error::mismatch(Shape(width, height), Shape(m.width, m.height)));
            }
            for b in m.layout.iter() {
                layout.push(Subband { member: i, offset: offset + b.offset, ..*b });
            }
            offset += m.coef_len();
        }
        let constant = members.iter().map(|m| m.constant).sum();
        Ok(Dictionary { width, height, constant, layout: Arc::from(layout), transform: Transform::Union(members) })
    }

    /// `s·Φ`, a tight frame with constant `s²·c`.
    pub fn scaled(self, factor: f64) -> Result<Dictionary> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::param("scale factor", "must be positive and finite"));
        }
        Ok(Dictionary {
            width: self.width,
            height: self.height,
            constant: self.constant * factor * factor,
            layout: self.layout.clone(),
            transform: Transform::Scaled { inner: Box::new(self), factor },
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `n`
    pub fn pixel_len(&self) -> usize {
        self.width * self.height
    }

    /// `L`
    pub fn coef_len(&self) -> usize {
        self.layout.iter().map(Subband::len).sum()
    }

    /// The tight-frame constant `c` in `ΦΦᵀ = c·I`.
    pub fn frame_constant(&self) -> f64 {
        self.constant
    }

    pub fn kind(&self) -> DictionaryKind {
        if self.coef_len() == self.pixel_len() && self.constant == 1.0 {
            DictionaryKind::Orthobasis
        } else {
            DictionaryKind::TightFrame
        }
    }

    pub fn is_orthobasis(&self) -> bool {
        self.kind() == DictionaryKind::Orthobasis
    }

    /// Decomposition depth, when the dictionary is a single wavelet transform.
    pub fn levels(&self) -> Option<usize> {
        match &self.transform {
            Transform::Dwt { levels, .. } | Transform::TiDwt { levels, .. } => Some(*levels),
            Transform::Scaled { inner, .. } => inner.levels(),
            _ => None,
        }
    }

    pub fn filter_family(&self) -> Option<FilterFamily> {
        match &self.transform {
            Transform::Dwt { family, .. } | Transform::TiDwt { family, .. } => Some(*family),
            Transform::Scaled { inner, .. } => inner.filter_family(),
            _ => None,
        }
    }

    pub fn layout(&self) -> &[Subband] {
        &self.layout
    }

    pub fn zeros(&self) -> CoefVector {
        self.coefs(vec![0.0; self.coef_len()])
    }

    /// Wraps raw values in this dictionary's layout.
    pub fn coefs(&self, data: Vec<f64>) -> CoefVector {
        assert_eq!(data.len(), self.coef_len(), "coefficient length does not match dictionary");
        CoefVector { data, layout: self.layout.clone() }
    }

    /// `Φᵀx`
    pub fn analyze(&self, x: &Image) -> Result<CoefVector> {
        x.check_shape(self.width, self.height)?;
        Ok(self.coefs(self.analyze_slice(x.data())))
    }

    /// `Φa`
    pub fn synthesize(&self, a: &CoefVector) -> Result<Image> {
        if a.len() != self.coef_len() {
            return Err(Error::mismatch(self.coef_len(), a.len()));
        }
        Ok(Image::from_raw(self.width, self.height, self.synthesize_slice(&a.data)))
    }

    pub(crate) fn analyze_slice(&self, x: &[f64]) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        match &self.transform {
            Transform::Identity => x.to_vec(),
            Transform::Dwt { levels, family } => wavelet::dwt2_forward(x, w, h, *levels, &family.bank()),
            Transform::TiDwt { levels, family } => wavelet::swt2_forward(x, w, h, *levels, &family.bank()),
            Transform::Union(members) => {
                let mut out = Vec::with_capacity(self.coef_len());
                for m in members {
                    out.extend(m.analyze_slice(x));
                }
                out
            }
            Transform::Scaled { inner, factor } => {
                let mut out = inner.analyze_slice(x);
                out.iter_mut().for_each(|v| *v *= factor);
                out
            }
        }
    }

    pub(crate) fn synthesize_slice(&self, a: &[f64]) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        match &self.transform {
            Transform::Identity => a.to_vec(),
            Transform::Dwt { levels, family } => wavelet::dwt2_inverse(a, w, h, *levels, &family.bank()),
            Transform::TiDwt { levels, family } => wavelet::swt2_adjoint(a, w, h, *levels, &family.bank()),
            Transform::Union(members) => {
                let mut out = vec![0.0; w * h];
                let mut offset = 0;
                for m in members {
                    let len = m.coef_len();
                    for (o, v) in out.iter_mut().zip(m.synthesize_slice(&a[offset..offset + len])) {
                        *o += v;
                    }
                    offset += len;
                }
                out
            }
            Transform::Scaled { inner, factor } => {
                let mut out = inner.synthesize_slice(a);
                out.iter_mut().for_each(|v| *v *= factor);
                out
            }
        }
    }
}

impl fmt::Display for Dictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.transform {
            Transform::Identity => f.write_str("identity"),
            Transform::Dwt { levels, family } => write!(f, "dwt:J={levels}:filter={family}"),
            Transform::TiDwt { levels, family } => write!(f, "tidwt:J={levels}:filter={family}"),
            Transform::Union(members) => {
                f.write_str("union:")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{m}")?;
                }
                Ok(())
            }
            Transform::Scaled { inner, factor } => write!(f, "{factor}*({inner})"),
        }
    }
}

/// Wavelet dictionaries need power-of-two sides and at least one sample per
/// side at the coarsest level.
fn check_dyadic(width: usize, height: usize, levels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    if !width.is_power_of_two() || !height.is_power_of_two() {
        return Err(Error::UnsupportedSize { width, height, reason: "wavelet dictionaries need power-of-two sides" });
    }
    if levels == 0 {
        return Err(Error::param("levels", "must be at least 1"));
    }
    if width >> levels == 0 || height >> levels == 0 {
        return Err(Error::UnsupportedSize { width, height, reason: "too many decomposition levels for this size" });
    }
    Ok(())
}
