//! Binary PPM (`P6`, maxval 255) reader and writer.
//!
//! The reader accepts any header whitespace and `#` comments; the writer
//! emits one canonical form, so `save_ppm(load_ppm(x)) == x` holds for bytes
//! the writer produced.

use alloc::vec::Vec;
use core::fmt;

use crate::image::{quantize_unit, ImagePlane, ImageRGB, ValueRange};

/// Parse or encode failure; `offset` is the byte the reader stopped at.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmError {
    pub offset: usize,
    pub kind: PpmErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PpmErrorKind {
    /// File does not start with `P6`.
    BadMagic,
    /// Header ended before the named field.
    MissingField(&'static str),
    /// A header field is not an unsigned decimal number.
    BadNumber,
    /// Width or height is zero.
    ZeroDimension,
    /// Header describes more samples than can be addressed.
    Oversized,
    /// Only maxval 255 is supported.
    UnsupportedMaxval(u64),
    /// Pixel payload is shorter than the header promises.
    Truncated { expected: usize, got: usize },
    /// `save_ppm` needs display-referred (unit range) input.
    LinearInput,
}

impl fmt::Display for PpmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PpmErrorKind::BadMagic => write!(f, "byte {}: not a P6 ppm file", self.offset),
            PpmErrorKind::MissingField(name) => {
                write!(f, "byte {}: header ended before {name}", self.offset)
            }
            PpmErrorKind::BadNumber => write!(f, "byte {}: malformed header number", self.offset),
            PpmErrorKind::ZeroDimension => {
                write!(f, "byte {}: zero width or height", self.offset)
            }
            PpmErrorKind::Oversized => {
                write!(f, "byte {}: image dimensions overflow", self.offset)
            }
            PpmErrorKind::UnsupportedMaxval(v) => {
                write!(f, "byte {}: maxval {v} unsupported, only 255", self.offset)
            }
            PpmErrorKind::Truncated { expected, got } => {
                write!(f, "byte {}: payload holds {got} of {expected} bytes", self.offset)
            }
            PpmErrorKind::LinearInput => {
                f.write_str("cannot write linear radiance as ppm, tone map first")
            }
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, kind: PpmErrorKind) -> PpmError {
        PpmError { offset: self.pos, kind }
    }

    /// Advances over whitespace and `#` comments (comment runs to newline).
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => return,
            }
        }
    }

    fn read_number(&mut self, field: &'static str) -> Result<u64, PpmError> {
        self.skip_space();
        if self.pos >= self.bytes.len() {
            return Err(self.err(PpmErrorKind::MissingField(field)));
        }
        if !self.bytes[self.pos].is_ascii_digit() {
            return Err(self.err(PpmErrorKind::BadNumber));
        }
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(self.bytes[self.pos] - b'0')))
                .ok_or_else(|| self.err(PpmErrorKind::Oversized))?;
            self.pos += 1;
        }
        Ok(value)
    }
}

/// Decodes `P6` bytes into a unit-range image, `value = code / 255`.
pub fn load_ppm(bytes: &[u8]) -> Result<ImageRGB, PpmError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[0..2] != b"P6" {
        return Err(cur.err(PpmErrorKind::BadMagic));
    }
    cur.pos = 2;
    let width = cur.read_number("width")?;
    let height = cur.read_number("height")?;
    let maxval = cur.read_number("maxval")?;
    if maxval != 255 {
        return Err(cur.err(PpmErrorKind::UnsupportedMaxval(maxval)));
    }
    if width == 0 || height == 0 {
        return Err(cur.err(PpmErrorKind::ZeroDimension));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if cur.pos >= bytes.len() {
        return Err(cur.err(PpmErrorKind::MissingField("pixel data")));
    }
    if !bytes[cur.pos].is_ascii_whitespace() {
        return Err(cur.err(PpmErrorKind::BadNumber));
    }
    cur.pos += 1;

    let (w, h) = (width as usize, height as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| cur.err(PpmErrorKind::Oversized))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PpmError {
            offset: bytes.len(),
            kind: PpmErrorKind::Truncated { expected, got: payload.len() },
        });
    }

    let mut channels = [Vec::with_capacity(w * h), Vec::new(), Vec::new()];
    channels[1].reserve(w * h);
    channels[2].reserve(w * h);
    for px in payload[..expected].chunks_exact(3) {
        for c in 0..3 {
            channels[c].push(f64::from(px[c]) / 255.0);
        }
    }
    let [r, g, b] = channels;
    let plane = |d| ImagePlane::new(w, h, d).expect("dimensions already checked");
    Ok(ImageRGB::new(plane(r), plane(g), plane(b), ValueRange::Unit)
        .expect("byte samples are always in range"))
}

/// Encodes a unit-range image as canonical `P6` bytes.
///
/// Samples are mapped with `round(value * 255)`, halves away from zero.
pub fn save_ppm(image: &ImageRGB) -> Result<Vec<u8>, PpmError> {
    if image.range() != ValueRange::Unit {
        return Err(PpmError { offset: 0, kind: PpmErrorKind::LinearInput });
    }
    let (w, h) = (image.width(), image.height());
    let mut out = Vec::with_capacity(32 + w * h * 3);
    out.extend_from_slice(alloc::format!("P6\n{w} {h}\n255\n").as_bytes());
    let [r, g, b] = image.planes();
    for i in 0..w * h {
        out.push(quantize_unit(r.data()[i]));
        out.push(quantize_unit(g.data()[i]));
        out.push(quantize_unit(b.data()[i]));
    }
    Ok(out)
}
