//! Response curve text files: 256 lines of `z h_R h_G h_B`.
//!
//! Values are printed with Rust's shortest round-trip formatting, so a
//! saved curve reloads bit-identically (including `-inf` entries for codes
//! that map to zero irradiance).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hdrfuse_core::crf::ResponseCurve;

use crate::error::CliError;

pub fn format_curves(curves: &[ResponseCurve; 3]) -> String {
    let mut out = String::new();
    for z in 0..256 {
        writeln!(
            out,
            "{z} {} {} {}",
            curves[0].values()[z],
            curves[1].values()[z],
            curves[2].values()[z]
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn save_curves(path: &Path, curves: &[ResponseCurve; 3]) -> Result<(), CliError> {
    fs::write(path, format_curves(curves))
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn parse_curves(text: &str, origin: &Path) -> Result<[ResponseCurve; 3], CliError> {
    let bad = |lineno: usize, detail: String| CliError::Parse {
        path: origin.to_path_buf(),
        detail: format!("line {}: {detail}", lineno + 1),
    };
    let mut columns = [Vec::with_capacity(256), Vec::with_capacity(256), Vec::with_capacity(256)];
    let mut expected_z = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad(lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let z: usize = fields[0]
            .parse()
            .map_err(|_| bad(lineno, format!("bad code {:?}", fields[0])))?;
        if z != expected_z {
            return Err(bad(lineno, format!("expected code {expected_z}, found {z}")));
        }
        for (c, field) in fields[1..].iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| bad(lineno, format!("bad value {field:?}")))?;
            columns[c].push(v);
        }
        expected_z += 1;
    }
    if expected_z != 256 {
        return Err(CliError::Parse {
            path: origin.to_path_buf(),
            detail: format!("{expected_z} curve entries, expected 256"),
        });
    }
    let [r, g, b] = columns;
    let curve = |h: Vec<f64>| {
        ResponseCurve::new(h)
            .map_err(|e| CliError::Parse { path: origin.to_path_buf(), detail: e.to_string() })
    };
    Ok([curve(r)?, curve(g)?, curve(b)?])
}

pub fn load_curves(path: &Path) -> Result<[ResponseCurve; 3], CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_curves(&text, path)
}
