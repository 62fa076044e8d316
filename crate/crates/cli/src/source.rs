//! Parsing of `--omega` and `--points` arguments.

use anyhow::{bail, Context, Result};
use measquant::datasets::builtin;
use measquant::measure::{grid_from_image, read_points_csv};
use measquant::{Measure, ParticleMeasure};
use std::path::Path;

/// A loaded target plus whether an image fell back to the uniform density.
pub struct Target {
    pub measure: Measure,
    pub uniform_fallback: bool,
}

/// `builtin:<name>`, `points:<list>`, a `.pgm` image or a points `.csv` file.
pub fn load_target(src: &str) -> Result<Target> {
    if let Some(name) = src.strip_prefix("builtin:") {
        return Ok(Target {
            measure: builtin(name)?,
            uniform_fallback: false,
        });
    }
    if let Some(list) = src.strip_prefix("points:") {
        return Ok(Target {
            measure: Measure::Particles(parse_inline(list)?),
            uniform_fallback: false,
        });
    }
    let path = Path::new(src);
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
    {
        Some(ext) if ext == "pgm" => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {src}"))?;
            let img = grid_from_image(&bytes)?;
            Ok(Target {
                measure: Measure::Grid(img.density),
                uniform_fallback: img.uniform_fallback,
            })
        }
        Some(ext) if ext == "csv" => Ok(Target {
            measure: Measure::Particles(read_points_file(path)?),
            uniform_fallback: false,
        }),
        _ => bail!(
            "cannot tell the format of {src:?}; use builtin:<name>, points:<list>, .pgm or .csv"
        ),
    }
}

fn read_points_file(path: &Path) -> Result<ParticleMeasure> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(read_points_csv(&text)?)
}

/// Inline points: `0,0.5,1` is three 1D points, `0,0;1,1` two 2D points.
pub fn parse_inline(list: &str) -> Result<ParticleMeasure> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number {s:?} in point list"))
    };
    if list.contains(';') {
        let rows: Vec<Vec<f64>> = list
            .split(';')
            .filter(|r| !r.trim().is_empty())
            .map(|r| r.split(',').map(num).collect())
            .collect::<Result<_>>()?;
        let dim = rows.first().map_or(0, Vec::len);
        Ok(ParticleMeasure::from_points(dim, &rows)?)
    } else {
        let xs: Vec<f64> = list.split(',').map(num).collect::<Result<_>>()?;
        Ok(ParticleMeasure::from_1d(&xs)?)
    }
}

/// A points CSV path if the file exists, otherwise an inline list.
pub fn load_points(src: &str) -> Result<ParticleMeasure> {
    let path = Path::new(src);
    if path.is_file() {
        read_points_file(path)
    } else {
        parse_inline(src)
    }
}
