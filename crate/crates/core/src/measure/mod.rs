//! Discrete and gridded probability measures.

mod csv;
mod grid;
mod particles;
mod pgm;
mod wasserstein;

pub use self::csv::{read_points_csv, write_points_csv};
pub use grid::{GridDensity, GridGeometry, MASS_TOL};
pub use particles::ParticleMeasure;
pub use pgm::{grid_from_image, parse_pgm, write_pgm, ImageDensity, PgmImage};
pub use wasserstein::wasserstein1_1d;

pub(crate) use grid::{cumulative, invert_piecewise_linear};

use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How a measure is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Particles,
    Grid,
}

/// Borrowed view of either measure representation.
#[derive(Debug, Clone, Copy)]
pub enum MeasureRef<'a> {
    Particles(&'a ParticleMeasure),
    Grid(&'a GridDensity),
}

impl<'a> From<&'a ParticleMeasure> for MeasureRef<'a> {
    fn from(m: &'a ParticleMeasure) -> Self {
        MeasureRef::Particles(m)
    }
}

impl<'a> From<&'a GridDensity> for MeasureRef<'a> {
    fn from(g: &'a GridDensity) -> Self {
        MeasureRef::Grid(g)
    }
}

impl<'a> From<&'a Measure> for MeasureRef<'a> {
    fn from(m: &'a Measure) -> Self {
        m.as_ref()
    }
}

impl MeasureRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            MeasureRef::Particles(p) => p.dim(),
            MeasureRef::Grid(g) => g.dim(),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            MeasureRef::Particles(_) => Representation::Particles,
            MeasureRef::Grid(_) => Representation::Grid,
        }
    }

    /// Weighted atoms: the particles themselves, or cell centers carrying cell masses.
    pub fn nodes(&self) -> Nodes {
        match self {
            MeasureRef::Particles(p) => Nodes {
                dim: p.dim(),
                coords: p.coords().to_vec(),
                weights: vec![p.weight(); p.len()],
            },
            MeasureRef::Grid(g) => Nodes {
                dim: g.dim(),
                coords: g.geometry().centers(),
                weights: g.masses(),
            },
        }
    }

    /// A length scale of the measure: box diameter for grids, spread of atoms for particles
    /// (at least 1).
    pub fn scale(&self) -> f64 {
        match self {
            MeasureRef::Grid(g) => g.geometry().diameter(),
            MeasureRef::Particles(p) => {
                let (lo, hi) = p.bounding_box();
                let d: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum();
                d.sqrt().max(1.0)
            }
        }
    }
}

/// Owned measure of either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Particles(ParticleMeasure),
    Grid(GridDensity),
}

impl Measure {
    pub fn as_ref(&self) -> MeasureRef<'_> {
        match self {
            Measure::Particles(p) => MeasureRef::Particles(p),
            Measure::Grid(g) => MeasureRef::Grid(g),
        }
    }

    pub fn dim(&self) -> usize {
        self.as_ref().dim()
    }
}

/// Weighted point set used by every quadrature in the crate.
#[derive(Debug, Clone)]
pub struct Nodes {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Nodes {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// `∫ |x|^r dμ`, with midpoint quadrature for grids.
pub fn moment<'a>(mu: impl Into<MeasureRef<'a>>, r: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::NegativeOrder(r));
    }
    let nodes = mu.into().nodes();
    Ok((0..nodes.len())
        .map(|i| nodes.weights[i] * norm(nodes.point(i)).powf(r))
        .sum())
}

/// Characteristic function `∫ exp(-i x·ξ) dμ(x)`.
pub fn char_function<'a>(mu: impl Into<MeasureRef<'a>>, xi: &[f64]) -> Result<Complex64> {
    let mu = mu.into();
    if xi.len() != mu.dim() {
        return Err(Error::DimMismatch {
            expected: mu.dim(),
            found: xi.len(),
        });
    }
    let nodes = mu.nodes();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..nodes.len() {
        let phase: f64 = nodes.point(i).iter().zip(xi).map(|(x, k)| x * k).sum();
        let (s, c) = phase.sin_cos();
        acc += nodes.weights[i] * Complex64::new(c, -s);
    }
    Ok(acc)
}

/// `N` i.i.d. draws from a grid density: pick a cell by mass, then a uniform point inside it.
///
/// In 1D this is inverse-CDF sampling of the piecewise-linear CDF. Deterministic in `seed`.
pub fn sample_empirical(omega: &GridDensity, n: usize, seed: u64) -> Result<ParticleMeasure> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let geo = omega.geometry();
    let cum = cumulative(&omega.masses());
    let total = *cum.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = omega.dim();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        // first cell whose cumulative mass exceeds u; never a massless cell
        let flat = cum[1..]
            .partition_point(|&c| c <= u)
            .min(geo.cell_count() - 1);
        let idx = geo.multi_index(flat);
        for (k, &i) in idx.iter().enumerate().take(d) {
            let h = geo.cell_width(k);
            let t: f64 = rng.random();
            coords.push(geo.lower()[k] + (i as f64 + t) * h);
        }
    }
    ParticleMeasure::new(d, coords)
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
