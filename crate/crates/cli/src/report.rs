//! JSON run reports.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunReport<C: Serialize, R: Serialize> {
    pub schema: u32,
    pub command: String,
    pub config: C,
    pub result: R,
    /// Wall-clock seconds, present only with `--timing` so file outputs stay byte-deterministic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_secs: Option<f64>,
    pub outputs: Vec<String>,
}

impl<C: Serialize, R: Serialize> RunReport<C, R> {
    pub fn new(command: &str, config: C, result: R) -> Self {
        Self {
            schema: SCHEMA,
            command: command.into(),
            config,
            result,
            timing_secs: None,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// A finite value or `null`, with an explicit flag for `+∞`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Flagged {
    pub value: Option<f64>,
    pub infinite: bool,
}

impl From<f64> for Flagged {
    fn from(v: f64) -> Self {
        Self {
            value: v.is_finite().then_some(v),
            infinite: v == f64::INFINITY,
        }
    }
}

/// Writes `contents` under `dir`, creating it, and returns the path as a string.
pub fn write_output(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<String> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path: PathBuf = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.display().to_string())
}
