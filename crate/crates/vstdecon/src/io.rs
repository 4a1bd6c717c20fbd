//! PGM (P2/P5) and raw little-endian `f32` images with a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vstdecon_core::image::Image;

use crate::error::{Error, Result};

/// Largest sample value written to PGM files.
pub const PGM_MAXVAL: u16 = 65535;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm,
    Rawf32,
}

impl ImageFormat {
    /// `.pgm` / `.pnm` → PGM; `.f32`, `.raw`, `.rawf32` → raw floats.
    pub fn from_path(path: &Path) -> Option<ImageFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" | "pnm" => Some(ImageFormat::Pgm),
            "f32" | "raw" | "rawf32" => Some(ImageFormat::Rawf32),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Rawf32 => "f32",
        }
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" => Ok(ImageFormat::Pgm),
            "rawf32" | "f32" => Ok(ImageFormat::Rawf32),
            _ => Err(Error::spec("image format", s, "expected `pgm` or `rawf32`")),
        }
    }
}

/// Contents of `<name>.json` next to a raw file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub width: usize,
    pub height: usize,
    pub dtype: String,
}

/// `noisy.f32` → `noisy.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Reads `path`, inferring the format from its extension when `format` is `None`.
pub fn read_image(path: &Path, format: Option<ImageFormat>) -> Result<Image> {
    let format = resolve_format(path, format)?;
    let bytes = fs::read(path).map_err(Error::io(path))?;
    match format {
        ImageFormat::Pgm => decode_pgm(&bytes).map_err(|e| e.at(path)),
        ImageFormat::Rawf32 => {
            let side = sidecar_path(path);
            let text = fs::read_to_string(&side).map_err(Error::io(&side))?;
            let meta: Sidecar =
                serde_json::from_str(&text).map_err(|e| Error::Sidecar { path: side.clone(), reason: e.to_string() })?;
            if meta.dtype != "f32" {
                return Err(Error::Sidecar { path: side, reason: format!("unsupported dtype `{}`", meta.dtype) });
            }
            decode_rawf32(&bytes, meta.width, meta.height).map_err(|e| e.at(path))
        }
    }
}

pub fn write_image(img: &Image, path: &Path, format: Option<ImageFormat>) -> Result<()> {
    let format = resolve_format(path, format)?;
    match format {
        ImageFormat::Pgm => fs::write(path, encode_pgm(img)).map_err(Error::io(path)),
        ImageFormat::Rawf32 => {
            fs::write(path, encode_rawf32(img)).map_err(Error::io(path))?;
            let meta = Sidecar { width: img.width(), height: img.height(), dtype: "f32".into() };
            let side = sidecar_path(path);
            let text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
            fs::write(&side, text + "\n").map_err(Error::io(&side))
        }
    }
}

fn resolve_format(path: &Path, format: Option<ImageFormat>) -> Result<ImageFormat> {
    format.or_else(|| ImageFormat::from_path(path)).ok_or_else(|| {
        Error::spec("image path", &path.display().to_string(), "cannot infer format; use .pgm or .f32")
    })
}

/// A decode failure not yet attached to a path.
#[derive(Debug)]
pub enum DecodeError {
    Malformed(&'static str, String),
    Size { expected: usize, found: usize },
    Core(vstdecon_core::Error),
}

impl DecodeError {
    fn at(self, path: &Path) -> Error {
        let path = path.to_path_buf();
        match self {
            DecodeError::Malformed(format, reason) => Error::Malformed { path, format, reason },
            DecodeError::Size { expected, found } => Error::SizeMismatch { path, expected, found },
            DecodeError::Core(e) => Error::Core(e),
        }
    }
}

fn malformed(reason: impl Into<String>) -> DecodeError {
    DecodeError::Malformed("PGM", reason.into())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<Option<u64>, DecodeError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.bytes.get(self.pos) {
                None => Ok(None),
                Some(_) => Err(malformed(format!("expected a number for {what}"))),
            };
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse().map(Some).map_err(|_| malformed(format!("{what} out of range")))
    }

    fn header_number(&mut self, what: &str) -> Result<u64, DecodeError> {
        self.number(what)?.ok_or_else(|| malformed(format!("missing {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image, DecodeError> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(malformed("missing P2/P5 magic number")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed(format!("invalid dimensions {width}x{height}")));
    }
    if !(1..=u64::from(PGM_MAXVAL)).contains(&maxval) {
        return Err(malformed(format!("maxval {maxval} outside 1..=65535")));
    }
    let n = width.checked_mul(height).ok_or_else(|| malformed("dimensions overflow"))?;

    let data: Vec<f64> = if binary {
        if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(malformed("missing whitespace after header"));
        }
        let body = &bytes[cur.pos + 1..];
        let wide = maxval > 255;
        let sample = if wide { 2 } else { 1 };
        if body.len() != n * sample {
            return Err(DecodeError::Size { expected: n, found: body.len() / sample });
        }
        if wide {
            body.chunks_exact(2).map(|c| f64::from(u16::from_be_bytes([c[0], c[1]]))).collect()
        } else {
            body.iter().map(|&b| f64::from(b)).collect()
        }
    } else {
        let mut values = Vec::with_capacity(n);
        while let Some(v) = cur.number("sample")? {
            values.push(v as f64);
        }
        if values.len() != n {
            return Err(DecodeError::Size { expected: n, found: values.len() });
        }
        values
    };
    if let Some(v) = data.iter().find(|&&v| v > maxval as f64) {
        return Err(malformed(format!("sample {v} exceeds maxval {maxval}")));
    }
    Image::new(width, height, data).map_err(DecodeError::Core)
}

/// Binary 16-bit PGM. Samples are rounded and clamped to `[0, 65535]`.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), PGM_MAXVAL).into_bytes();
    out.reserve(2 * img.len());
    for &v in img.data() {
        out.extend_from_slice(&quantize(v).to_be_bytes());
    }
    out
}

/// ASCII PGM with the same quantization as [`encode_pgm`].
pub fn encode_pgm_ascii(img: &Image) -> String {
    let mut out = format!("P2\n{} {}\n{}\n", img.width(), img.height(), PGM_MAXVAL);
    for row in img.data().chunks(img.width()) {
        let line: Vec<String> = row.iter().map(|&v| quantize(v).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn quantize(v: f64) -> u16 {
    v.round().clamp(0.0, f64::from(PGM_MAXVAL)) as u16
}

pub fn encode_rawf32(img: &Image) -> Vec<u8> {
    img.data().iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn decode_rawf32(bytes: &[u8], width: usize, height: usize) -> Result<Image, DecodeError> {
    let n = width * height;
    if bytes.len() % 4 != 0 {
        return Err(DecodeError::Malformed("rawf32", format!("length {} is not a multiple of 4", bytes.len())));
    }
    if bytes.len() / 4 != n {
        return Err(DecodeError::Size { expected: n, found: bytes.len() / 4 });
    }
    let data = bytes.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect();
    Image::new(width, height, data).map_err(DecodeError::Core)
}
