//! Grayscale image container, RMSE and PGM (P2/P5) file I/O.
//!
//! Pixels are kept as `f64` gray levels for the whole pipeline. Quantization
//! to 8 bits happens only in [`save_pgm`]: values are rounded half away from
//! zero, then clamped to `[0, 255]`.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};

/// Row-major grayscale raster with top-left origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "width and height must be at least 1",
            });
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "pixel count does not match width x height",
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels, N.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            })
        }
    }

    /// 8-bit representation written by [`save_pgm`].
    pub fn quantized(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| quantize(v)).collect()
    }
}

fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    // f64::round is half-away-from-zero
    v.round().clamp(0.0, 255.0) as u8
}

/// Root-mean-square pixel difference, no clamping.
pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    a.check_shape(b)?;
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// PGM parse failures. Offsets are byte positions in the file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("byte {offset}: bad magic number (expected P2 or P5)")]
    BadMagic { offset: usize },

    #[error("byte {offset}: malformed header field `{field}`")]
    BadHeader { offset: usize, field: &'static str },

    #[error("byte {offset}: unsupported maxval {maxval} (must be 1..=255)")]
    UnsupportedMaxval { offset: usize, maxval: u64 },

    #[error("byte {offset}: truncated payload, expected {expected} samples, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("byte {offset}: sample value {value} exceeds maxval {maxval}")]
    SampleOutOfRange {
        offset: usize,
        value: u64,
        maxval: u64,
    },

    #[error("byte {offset}: malformed ASCII sample")]
    BadSample { offset: usize },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PgmKind {
    Ascii,
    Binary,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let c = self.data[self.pos];
            if c == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Reads an unsigned decimal token; returns `None` if no digits are present
    /// or the token is not terminated by whitespace / a comment / EOF.
    fn read_uint(&mut self) -> Option<u64> {
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            value = value
                .checked_mul(10)?
                .checked_add(u64::from(self.data[self.pos] - b'0'))?;
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        match self.data.get(self.pos) {
            None => Some(value),
            Some(c) if c.is_ascii_whitespace() || *c == b'#' => Some(value),
            Some(_) => None,
        }
    }

    fn header_field(&mut self, field: &'static str) -> std::result::Result<u64, PgmError> {
        self.skip_whitespace_and_comments();
        let offset = self.pos;
        self.read_uint()
            .ok_or(PgmError::BadHeader { offset, field })
    }
}

/// Decodes a P2 or P5 graymap. Sample values are taken as gray levels
/// directly (no rescaling by maxval).
pub fn decode_pgm(data: &[u8]) -> std::result::Result<Image, PgmError> {
    let kind = match data.get(..2) {
        Some(b"P2") => PgmKind::Ascii,
        Some(b"P5") => PgmKind::Binary,
        _ => return Err(PgmError::BadMagic { offset: 0 }),
    };
    let mut cur = Cursor { data, pos: 2 };
    match data.get(2) {
        Some(c) if c.is_ascii_whitespace() || *c == b'#' => {}
        _ => return Err(PgmError::BadMagic { offset: 2 }),
    }

    let width_offset = {
        cur.skip_whitespace_and_comments();
        cur.pos
    };
    let width = cur.header_field("width")?;
    let height_offset = {
        cur.skip_whitespace_and_comments();
        cur.pos
    };
    let height = cur.header_field("height")?;
    if width == 0 {
        return Err(PgmError::BadHeader {
            offset: width_offset,
            field: "width",
        });
    }
    if height == 0 {
        return Err(PgmError::BadHeader {
            offset: height_offset,
            field: "height",
        });
    }
    cur.skip_whitespace_and_comments();
    let maxval_offset = cur.pos;
    let maxval = cur.header_field("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::UnsupportedMaxval {
            offset: maxval_offset,
            maxval,
        });
    }

    let count = usize::try_from(width.saturating_mul(height)).map_err(|_| PgmError::BadHeader {
        offset: width_offset,
        field: "width",
    })?;
    let width = width as usize;
    let height = height as usize;

    let pixels = match kind {
        PgmKind::Binary => {
            // exactly one whitespace byte separates maxval from the raster
            match data.get(cur.pos) {
                Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
                _ => {
                    return Err(PgmError::BadHeader {
                        offset: cur.pos,
                        field: "maxval",
                    })
                }
            }
            let payload = &data[cur.pos..];
            if payload.len() < count {
                return Err(PgmError::Truncated {
                    offset: data.len(),
                    expected: count,
                    found: payload.len(),
                });
            }
            let mut pixels = Vec::with_capacity(count);
            for (i, &b) in payload[..count].iter().enumerate() {
                if u64::from(b) > maxval {
                    return Err(PgmError::SampleOutOfRange {
                        offset: cur.pos + i,
                        value: u64::from(b),
                        maxval,
                    });
                }
                pixels.push(f64::from(b));
            }
            pixels
        }
        PgmKind::Ascii => {
            let mut pixels = Vec::with_capacity(count);
            for found in 0..count {
                cur.skip_whitespace_and_comments();
                if cur.pos >= data.len() {
                    return Err(PgmError::Truncated {
                        offset: cur.pos,
                        expected: count,
                        found,
                    });
                }
                let offset = cur.pos;
                let value = cur.read_uint().ok_or(PgmError::BadSample { offset })?;
                if value > maxval {
                    return Err(PgmError::SampleOutOfRange {
                        offset,
                        value,
                        maxval,
                    });
                }
                pixels.push(value as f64);
            }
            pixels
        }
    };

    Ok(Image {
        width,
        height,
        pixels,
    })
}

/// Encodes as binary P5 with maxval 255.
pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.quantized());
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&data).map_err(|source| Error::Pgm {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_pgm(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}
