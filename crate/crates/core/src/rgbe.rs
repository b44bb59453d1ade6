//! Shared-exponent RGBE pixel codec and the Radiance `.hdr` container.
//!
//! Each pixel stores three 8-bit mantissas under one 8-bit exponent biased by
//! 128. Mantissas are rounded to the nearest code so that the plain decode
//! `byte * 2^(e-128) / 256` lands within half a quantization step, which keeps
//! the round-trip error of the largest channel at or below 1/256 of its value.
//!
//! The `.hdr` writer emits flat (uncompressed) scanlines so output is
//! byte-deterministic; the reader also accepts new-style run-length encoded
//! scanlines as produced by other tools.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::image::{ImagePlane, ImageRGB, RadianceMap, ValueRange};

/// A pixel component that cannot be encoded (negative, NaN or infinite).
#[derive(Debug, Clone, PartialEq)]
pub struct RgbeError {
    pub value: f64,
}

impl fmt::Display for RgbeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "component {} is not encodable as rgbe", self.value)
    }
}

/// Failure while reading or writing a `.hdr` byte stream.
#[derive(Debug, Clone, PartialEq)]
pub enum HdrError {
    /// File does not begin with `#?RADIANCE`.
    MissingSignature,
    /// Header ended without a FORMAT line.
    MissingFormat,
    /// FORMAT line names something other than 32-bit_rle_rgbe.
    UnsupportedFormat,
    /// Resolution line is not `-Y <h> +X <w>`, or a scanline disagrees with it.
    BadResolution,
    /// Byte stream ended inside the pixel payload.
    UnexpectedEof,
    /// Run-length codes do not tile the scanline exactly.
    BadRunLength,
}

impl fmt::Display for HdrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HdrError::MissingSignature => f.write_str("missing #?RADIANCE signature"),
            HdrError::MissingFormat => f.write_str("header has no FORMAT line"),
            HdrError::UnsupportedFormat => f.write_str("only FORMAT=32-bit_rle_rgbe is supported"),
            HdrError::BadResolution => f.write_str("bad or mismatched resolution"),
            HdrError::UnexpectedEof => f.write_str("truncated pixel data"),
            HdrError::BadRunLength => f.write_str("malformed run-length scanline"),
        }
    }
}

/// Packs a linear RGB triple into RGBE bytes.
///
/// Pixels with every channel below 1e-32 collapse to the all-zero code.
pub fn encode_rgbe(r: f64, g: f64, b: f64) -> Result<[u8; 4], RgbeError> {
    for value in [r, g, b] {
        if !value.is_finite() || value < 0.0 {
            return Err(RgbeError { value });
        }
    }
    let max = r.max(g).max(b);
    if max < 1e-32 {
        return Ok([0, 0, 0, 0]);
    }
    let (_, mut e) = libm::frexp(max);
    // The top channel sits in [128, 256); when it rounds up to 256 the whole
    // pixel renormalizes one exponent step up.
    if libm::round(libm::ldexp(max, 8 - e)) >= 256.0 {
        e += 1;
    }
    if e > 127 {
        e = 127; // saturate: values beyond 2^127 clip to the format ceiling
    }
    let mantissa = |c: f64| -> u8 {
        let m = libm::round(libm::ldexp(c, 8 - e));
        if m >= 255.0 {
            255
        } else {
            m as u8
        }
    };
    Ok([mantissa(r), mantissa(g), mantissa(b), (e + 128) as u8])
}

/// Unpacks RGBE bytes; total, never fails.
pub fn decode_rgbe(bytes: [u8; 4]) -> (f64, f64, f64) {
    if bytes == [0, 0, 0, 0] {
        return (0.0, 0.0, 0.0);
    }
    let e = i32::from(bytes[3]) - 128;
    let channel = |c: u8| libm::ldexp(f64::from(c), e - 8);
    (channel(bytes[0]), channel(bytes[1]), channel(bytes[2]))
}

/// Serializes a radiance map as a flat Radiance `.hdr` byte stream.
pub fn write_hdr(map: &RadianceMap) -> Vec<u8> {
    let rgb = map.rgb();
    let (w, h) = (rgb.width(), rgb.height());
    let mut out = Vec::with_capacity(64 + w * h * 4);
    out.extend_from_slice(b"#?RADIANCE\n");
    out.extend_from_slice(b"FORMAT=32-bit_rle_rgbe\n");
    out.extend_from_slice(b"\n");
    out.extend_from_slice(alloc::format!("-Y {h} +X {w}\n").as_bytes());
    let [r, g, b] = rgb.planes();
    for i in 0..w * h {
        let px = encode_rgbe(r.data()[i], g.data()[i], b.data()[i])
            .expect("radiance maps hold finite non-negative samples");
        out.extend_from_slice(&px);
    }
    out
}

fn read_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], HdrError> {
    let start = *pos;
    while *pos < bytes.len() {
        if bytes[*pos] == b'\n' {
            let line = &bytes[start..*pos];
            *pos += 1;
            return Ok(line);
        }
        *pos += 1;
    }
    Err(HdrError::UnexpectedEof)
}

fn parse_resolution(line: &[u8]) -> Result<(usize, usize), HdrError> {
    let text = core::str::from_utf8(line).map_err(|_| HdrError::BadResolution)?;
    let mut tokens = text.split_ascii_whitespace();
    if tokens.next() != Some("-Y") {
        return Err(HdrError::BadResolution);
    }
    let h: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(HdrError::BadResolution)?;
    if tokens.next() != Some("+X") {
        return Err(HdrError::BadResolution);
    }
    let w: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(HdrError::BadResolution)?;
    if w == 0 || h == 0 || tokens.next().is_some() {
        return Err(HdrError::BadResolution);
    }
    w.checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .ok_or(HdrError::BadResolution)?;
    Ok((w, h))
}

fn decode_rle_channel(bytes: &[u8], pos: &mut usize, out: &mut [u8]) -> Result<(), HdrError> {
    let mut filled = 0;
    while filled < out.len() {
        let code = *bytes.get(*pos).ok_or(HdrError::UnexpectedEof)?;
        *pos += 1;
        if code > 128 {
            let run = usize::from(code - 128);
            if run > out.len() - filled {
                return Err(HdrError::BadRunLength);
            }
            let value = *bytes.get(*pos).ok_or(HdrError::UnexpectedEof)?;
            *pos += 1;
            out[filled..filled + run].fill(value);
            filled += run;
        } else {
            let n = usize::from(code);
            if n == 0 || n > out.len() - filled {
                return Err(HdrError::BadRunLength);
            }
            let lit = bytes.get(*pos..*pos + n).ok_or(HdrError::UnexpectedEof)?;
            out[filled..filled + n].copy_from_slice(lit);
            *pos += n;
            filled += n;
        }
    }
    Ok(())
}

/// Parses a Radiance `.hdr` byte stream with flat or new-style RLE scanlines.
pub fn read_hdr(bytes: &[u8]) -> Result<RadianceMap, HdrError> {
    let mut pos = 0;
    let first = read_line(bytes, &mut pos)?;
    if !first.starts_with(b"#?RADIANCE") {
        return Err(HdrError::MissingSignature);
    }
    let mut format_seen = false;
    loop {
        let line = read_line(bytes, &mut pos)?;
        if line.is_empty() {
            break;
        }
        if line.starts_with(b"#") {
            continue;
        }
        if let Some(value) = line.strip_prefix(b"FORMAT=") {
            if value == b"32-bit_rle_rgbe" {
                format_seen = true;
            } else {
                return Err(HdrError::UnsupportedFormat);
            }
        }
        // other header variables (EXPOSURE=, etc.) carry no pixel data
    }
    if !format_seen {
        return Err(HdrError::MissingFormat);
    }
    let (w, h) = parse_resolution(read_line(bytes, &mut pos)?)?;

    let mut channels = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    let push_pixel = |px: [u8; 4], channels: &mut [Vec<f64>; 3]| {
        let (r, g, b) = decode_rgbe(px);
        channels[0].push(r);
        channels[1].push(g);
        channels[2].push(b);
    };
    let mut streams = vec![0u8; w * 4];
    for _row in 0..h {
        let head: [u8; 4] = bytes
            .get(pos..pos + 4)
            .ok_or(HdrError::UnexpectedEof)?
            .try_into()
            .expect("slice of length 4");
        if head[0] == 2 && head[1] == 2 && head[2] & 0x80 == 0 {
            // New-style scanline: length-checked header, then the four
            // component streams run-length coded one after another.
            if usize::from(head[2]) << 8 | usize::from(head[3]) != w {
                return Err(HdrError::BadResolution);
            }
            pos += 4;
            for c in 0..4 {
                decode_rle_channel(bytes, &mut pos, &mut streams[c * w..(c + 1) * w])?;
            }
            for i in 0..w {
                push_pixel(
                    [streams[i], streams[w + i], streams[2 * w + i], streams[3 * w + i]],
                    &mut channels,
                );
            }
        } else {
            let flat = bytes.get(pos..pos + 4 * w).ok_or(HdrError::UnexpectedEof)?;
            pos += 4 * w;
            for px in flat.chunks_exact(4) {
                push_pixel([px[0], px[1], px[2], px[3]], &mut channels);
            }
        }
    }

    let [r, g, b] = channels;
    let plane = |d| ImagePlane::new(w, h, d).expect("resolution already validated");
    let rgb = ImageRGB::new(plane(r), plane(g), plane(b), ValueRange::Linear)
        .expect("decoded samples are finite and non-negative");
    Ok(RadianceMap::new(rgb).expect("built with the linear tag"))
}
