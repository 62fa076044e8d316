//! Built-in target measures.

use crate::measure::{GridDensity, GridGeometry, Measure, ParticleMeasure};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

pub const BUILTIN_NAMES: [&str; 7] = [
    "uniform1d",
    "uniform2d",
    "delta0",
    "spike",
    "block",
    "block-noise",
    "bump",
];

/// Uniform density on `[a, b]` with `cells` cells.
pub fn uniform_interval(a: f64, b: f64, cells: usize) -> Result<GridDensity> {
    Ok(GridDensity::uniform(GridGeometry::interval(a, b, cells)?))
}

/// Uniform density on `[0, 1]`, 1024 cells.
pub fn uniform1d() -> GridDensity {
    GridDensity::uniform(GridGeometry::interval(0.0, 1.0, 1024).unwrap())
}

/// Uniform density on `[0, 1]²`, 64 × 64 cells.
pub fn uniform2d() -> GridDensity {
    GridDensity::uniform(GridGeometry::rect([0.0, 0.0], [1.0, 1.0], [64, 64]).unwrap())
}

/// A single atom at the origin.
pub fn delta0() -> ParticleMeasure {
    ParticleMeasure::from_1d(&[0.0]).unwrap()
}

/// Exact cell averages of a step function given as `(a, b, height)` pieces on `[0, 1]`.
fn steps(cells: usize, pieces: &[(f64, f64, f64)]) -> Result<GridDensity> {
    let geo = GridGeometry::interval(0.0, 1.0, cells)?;
    let edges = geo.edges(0);
    let h = geo.cell_width(0);
    let values = edges
        .windows(2)
        .map(|e| {
            pieces
                .iter()
                .map(|&(a, b, v)| v * (e[1].min(b) - e[0].max(a)).max(0.0) / h)
                .sum()
        })
        .collect();
    GridDensity::normalized(geo, values)
}

/// `4 · 1[0.2, 0.4] + 40 · 1[0.6, 0.605]` on `[0, 1]`.
pub fn spike(cells: usize) -> Result<GridDensity> {
    steps(cells, &[(0.2, 0.4, 4.0), (0.6, 0.605, 40.0)])
}

/// `5 · 1[0.2, 0.4]` on `[0, 1]`.
pub fn block(cells: usize) -> Result<GridDensity> {
    steps(cells, &[(0.2, 0.4, 5.0)])
}

/// `(ω + η₊) / (1 + ‖η₊‖₁)` for the block `ω` and i.i.d. Gaussian cell noise `η` of standard
/// deviation `sigma`, with `‖·‖₁` the integral over `[0, 1]`.
pub fn block_noise(cells: usize, sigma: f64, seed: u64) -> Result<GridDensity> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise level {sigma} is negative"
        )));
    }
    let clean = block(cells)?;
    let h = clean.geometry().cell_width(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..cells)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (sigma * z).max(0.0)
        })
        .collect();
    let l1: f64 = noise.iter().sum::<f64>() * h;
    let values = clean
        .values()
        .iter()
        .zip(&noise)
        .map(|(w, e)| (w + e) / (1.0 + l1))
        .collect();
    GridDensity::normalized(clean.geometry().clone(), values)
}

/// `2 sin²(πx)` on `[0, 1]` as exact cell averages; its total variation is 4.
pub fn bump(cells: usize) -> Result<GridDensity> {
    let geo = GridGeometry::interval(0.0, 1.0, cells)?;
    let h = geo.cell_width(0);
    // antiderivative of 2 sin²(πx) = 1 - cos(2πx)
    let prim = |x: f64| x - (2.0 * PI * x).sin() / (2.0 * PI);
    let values = geo
        .edges(0)
        .windows(2)
        .map(|e| (prim(e[1]) - prim(e[0])) / h)
        .collect();
    GridDensity::normalized(geo, values)
}

/// Resolves `name` or `name(seed)` for `block-noise`; grids use 200 cells for the 1D data sets
/// and 4096 cells for the bump.
pub fn builtin(name: &str) -> Result<Measure> {
    let (base, arg) = match name.split_once('(') {
        Some((b, rest)) => (b, Some(rest.trim_end_matches(')'))),
        None => match name.split_once(':') {
            Some((b, a)) => (b, Some(a)),
            None => (name, None),
        },
    };
    let seed = || -> Result<u64> {
        arg.map_or(Ok(0), |a| {
            a.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad seed in {name:?}")))
        })
    };
    Ok(match base {
        "uniform1d" => Measure::Grid(uniform1d()),
        "uniform2d" => Measure::Grid(uniform2d()),
        "delta0" => Measure::Particles(delta0()),
        "spike" => Measure::Grid(spike(200)?),
        "block" => Measure::Grid(block(200)?),
        "block-noise" => Measure::Grid(block_noise(200, 1.0, seed()?)?),
        "bump" => Measure::Grid(bump(4096)?),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "unknown builtin {name:?}; expected one of {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tv::grid_tv;

    #[test]
    fn data_sets_have_unit_mass() {
        for name in BUILTIN_NAMES {
            if let Measure::Grid(g) = builtin(name).unwrap() {
                assert!((g.total_mass() - 1.0).abs() < 1e-9, "{name}");
            }
        }
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn spike_profile() {
        let s = spike(200).unwrap();
        let max = s.values().iter().cloned().fold(0.0, f64::max);
        assert!((max - 40.0).abs() < 1e-9);
        assert!((s.values()[50] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_block_is_seeded() {
        let a = block_noise(200, 1.0, 7).unwrap();
        assert_eq!(a, block_noise(200, 1.0, 7).unwrap());
        assert_ne!(a, block_noise(200, 1.0, 8).unwrap());
        assert_eq!(builtin("block-noise(7)").unwrap(), Measure::Grid(a));
    }

    #[test]
    fn bump_variation_is_four() {
        let b = bump(4096).unwrap();
        assert!((grid_tv(&b).value - 4.0).abs() < 1e-3);
    }
}
