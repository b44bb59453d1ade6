//! Exposure stack manifests: one line per image, `<path> <seconds>`.
//!
//! Keeping the exposure time next to the path in a single file prevents the
//! classic foot-gun of image arguments and time arguments drifting out of
//! order. Relative paths resolve against the manifest's own directory.

use std::fs;
use std::path::{Path, PathBuf};

use hdrfuse_core::image::ExposureStack;
use hdrfuse_core::ppm::load_ppm;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct StackManifest {
    entries: Vec<(PathBuf, f64)>,
}

impl StackManifest {
    /// Parses manifest text. Blank lines and `#` comment lines are skipped;
    /// `origin` is the path reported in errors and the base for relative
    /// image paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let base = origin.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (path_part, time_part) =
                line.rsplit_once(char::is_whitespace).ok_or_else(|| CliError::Parse {
                    path: origin.to_path_buf(),
                    detail: format!("line {}: expected \"<path> <seconds>\"", lineno + 1),
                })?;
            let time: f64 = time_part.parse().map_err(|_| CliError::Parse {
                path: origin.to_path_buf(),
                detail: format!("line {}: bad exposure time {time_part:?}", lineno + 1),
            })?;
            if !(time.is_finite() && time > 0.0) {
                return Err(CliError::Parse {
                    path: origin.to_path_buf(),
                    detail: format!("line {}: exposure time must be positive", lineno + 1),
                });
            }
            entries.push((base.join(path_part.trim_end()), time));
        }
        if entries.is_empty() {
            return Err(CliError::Parse {
                path: origin.to_path_buf(),
                detail: "no exposures listed".into(),
            });
        }
        Ok(StackManifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    pub fn entries(&self) -> &[(PathBuf, f64)] {
        &self.entries
    }

    /// Reads every listed PPM and assembles the stack. Shape disagreements
    /// name the offending file and map to exit code 3.
    pub fn load_stack(&self) -> Result<ExposureStack, CliError> {
        let mut images = Vec::with_capacity(self.entries.len());
        let mut first_dims = None;
        for (path, _) in &self.entries {
            let bytes =
                fs::read(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let image = load_ppm(&bytes)
                .map_err(|e| CliError::Parse { path: path.clone(), detail: e.to_string() })?;
            let dims = (image.width(), image.height());
            match first_dims {
                None => first_dims = Some(dims),
                Some(want) if want != dims => {
                    return Err(CliError::Shape {
                        detail: format!(
                            "{}: {}x{} does not match the stack's {}x{}",
                            path.display(),
                            dims.0,
                            dims.1,
                            want.0,
                            want.1
                        ),
                    });
                }
                Some(_) => {}
            }
            images.push(image);
        }
        let times = self.entries.iter().map(|(_, t)| *t).collect();
        ExposureStack::new(images, times)
            .map_err(|e| CliError::Invalid { detail: e.to_string() })
    }
}
