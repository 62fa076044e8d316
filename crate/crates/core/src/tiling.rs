//! Equal-mass axis-aligned tilings built from nested quantiles.
//!
//! With `ñ = ⌊N^{1/d}⌋`, write `N = ñ^{d-m} (ñ+1)^m + l`. The first `m` axes are split into
//! `ñ + 1` slices, the following ones into `ñ`, and along the last axis exactly `l` of the parent
//! slices get one extra tile. Each axis is cut at quantiles of the conditional distribution
//! inside the enclosing slice, so every tile carries mass `1/N`.

use crate::measure::{cumulative, invert_piecewise_linear, GridDensity, ParticleMeasure};
use crate::{Error, Result};
use serde::Serialize;
use std::fmt::Write;

/// Slice counts of a good tiling, independent of any geometry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountPlan {
    pub n: usize,
    pub dim: usize,
    pub n_tilde: usize,
    pub m: usize,
    pub l: usize,
}

fn pow(b: usize, e: usize) -> usize {
    b.checked_pow(e as u32).unwrap_or(usize::MAX)
}

/// `⌊N^{1/d}⌋` in integer arithmetic.
fn int_root(n: usize, d: usize) -> usize {
    let mut r = (n as f64).powf(1.0 / d as f64).round() as usize;
    while r > 0 && pow(r, d) > n {
        r -= 1;
    }
    while pow(r + 1, d) <= n {
        r += 1;
    }
    r
}

pub fn count_plan(n: usize, dim: usize) -> Result<CountPlan> {
    if n == 0 {
        return Err(Error::Empty);
    }
    if dim == 0 {
        return Err(Error::UnsupportedDim(0));
    }
    let nt = int_root(n, dim);
    let base = |m: usize| pow(nt, dim - m).saturating_mul(pow(nt + 1, m));
    let m = (0..dim).rev().find(|&m| base(m) <= n).unwrap_or(0);
    Ok(CountPlan {
        n,
        dim,
        n_tilde: nt,
        m,
        l: n - base(m),
    })
}

impl CountPlan {
    /// Slice count shared by every parent on axis `k < dim - 1`.
    pub fn inner_count(&self, k: usize) -> usize {
        if k < self.m {
            self.n_tilde + 1
        } else {
            self.n_tilde
        }
    }

    /// Number of slices along the last axis for every parent, parents in lexicographic order.
    pub fn last_counts(&self) -> Vec<usize> {
        let parents: usize = (0..self.dim - 1).map(|k| self.inner_count(k)).product();
        let nt = self.n_tilde;
        (0..parents)
            .map(|p| if p < self.l { nt + 1 } else { nt })
            .collect()
    }

    /// All multi-indices (0-based) in lexicographic order.
    pub fn index_set(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for k in 0..self.dim - 1 {
            let c = self.inner_count(k);
            out = out
                .into_iter()
                .flat_map(|p| (0..c).map(move |i| [p.as_slice(), &[i]].concat()))
                .collect();
        }
        let last = self.last_counts();
        out.into_iter()
            .zip(last)
            .flat_map(|(p, c)| (0..c).map(move |i| [p.as_slice(), &[i]].concat()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tile {
    pub index: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mass: f64,
    /// Mass centroid of the density inside the tile; `None` for a massless tile.
    pub centroid: Option<Vec<f64>>,
}

impl Tile {
    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tiling {
    pub dim: usize,
    pub plan: CountPlan,
    /// Tiles per column (slices along the last axis per parent), in parent order.
    pub counts: Vec<usize>,
    pub tiles: Vec<Tile>,
    /// Some cut fell on a zero-density plateau and was placed by the leftmost rule.
    pub degenerate: bool,
}

impl Tiling {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn mass_per_tile(&self) -> f64 {
        1.0 / self.plan.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointRule {
    Center,
    MassCentroid,
}

/// Cuts of a piecewise-linear CDF at `levels` (fractions of the total), clamped into `[lo, hi]`.
fn cuts(
    edges: &[f64],
    masses: &[f64],
    levels: &[f64],
    lo: f64,
    hi: f64,
    degenerate: &mut bool,
) -> Vec<f64> {
    let cum = cumulative(masses);
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(levels.len() + 2);
    out.push(lo);
    for &lv in levels {
        let (x, plateau) = invert_piecewise_linear(edges, &cum, lv * total);
        if plateau {
            *degenerate = true;
        }
        let prev = *out.last().unwrap();
        out.push(x.clamp(prev, hi));
    }
    out.push(hi);
    out
}

/// Equal-mass tiling of `omega` into `n` boxes covering its support box (`d ≤ 2`).
pub fn build_tiling(omega: &GridDensity, n: usize) -> Result<Tiling> {
    let d = omega.dim();
    if d > 2 {
        return Err(Error::UnsupportedDim(d));
    }
    let plan = count_plan(n, d)?;
    let geo = omega.geometry();
    let (lo, hi) = omega.support_box();
    let counts = plan.last_counts();
    let mut degenerate = false;
    let mut tiles = Vec::with_capacity(n);
    let mut push = |index: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>| {
        let (mass, centroid) = omega.box_mass_centroid(&lower, &upper);
        tiles.push(Tile {
            index,
            lower,
            upper,
            mass,
            centroid,
        });
    };

    if d == 1 {
        let levels: Vec<f64> = (1..n).map(|k| k as f64 / n as f64).collect();
        let ys = cuts(
            &geo.edges(0),
            &omega.masses(),
            &levels,
            lo[0],
            hi[0],
            &mut degenerate,
        );
        for i in 0..n {
            push(vec![i], vec![ys[i]], vec![ys[i + 1]]);
        }
    } else {
        let mut acc = 0usize;
        let levels: Vec<f64> = counts[..counts.len() - 1]
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / n as f64
            })
            .collect();
        let xs = cuts(
            &geo.edges(0),
            &omega.marginal_masses(0),
            &levels,
            lo[0],
            hi[0],
            &mut degenerate,
        );
        let y_edges = geo.edges(1);
        for (i1, &c) in counts.iter().enumerate() {
            let (xa, xb) = (xs[i1], xs[i1 + 1]);
            let rows = omega.strip_row_masses(xa, xb);
            let levels: Vec<f64> = (1..c).map(|k| k as f64 / c as f64).collect();
            let ys = cuts(&y_edges, &rows, &levels, lo[1], hi[1], &mut degenerate);
            for i2 in 0..c {
                push(vec![i1, i2], vec![xa, ys[i2]], vec![xb, ys[i2 + 1]]);
            }
        }
    }
    if degenerate {
        log::warn!("tiling cut on a zero-density plateau; leftmost cut used");
    }
    Ok(Tiling {
        dim: d,
        plan,
        counts,
        tiles,
        degenerate,
    })
}

/// One representative point per tile.
pub fn tiling_points(t: &Tiling, rule: PointRule) -> Result<ParticleMeasure> {
    let coords: Vec<f64> = t
        .tiles
        .iter()
        .flat_map(|tile| match (rule, &tile.centroid) {
            (PointRule::MassCentroid, Some(c)) => c.clone(),
            _ => tile.center(),
        })
        .collect();
    ParticleMeasure::new(t.dim, coords)
}

/// One tile per line: `index..., lower..., upper..., mass`.
pub fn tiling_csv(t: &Tiling) -> String {
    let axes = ["x", "y"];
    let mut out = format!("# dim={} n={} counts={:?}\n", t.dim, t.len(), t.counts);
    let mut header: Vec<String> = (1..=t.dim).map(|k| format!("i{k}")).collect();
    header.extend(axes[..t.dim].iter().map(|a| format!("{a}_lo")));
    header.extend(axes[..t.dim].iter().map(|a| format!("{a}_hi")));
    header.push("mass".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for tile in &t.tiles {
        let fields: Vec<String> = tile
            .index
            .iter()
            .map(|i| i.to_string())
            .chain(tile.lower.iter().chain(&tile.upper).map(|v| v.to_string()))
            .chain(std::iter::once(tile.mass.to_string()))
            .collect();
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GridGeometry;
    use proptest::prelude::*;

    fn uniform1d(cells: usize) -> GridDensity {
        GridDensity::uniform(GridGeometry::interval(0.0, 1.0, cells).unwrap())
    }

    fn uniform2d(cells: usize) -> GridDensity {
        GridDensity::uniform(GridGeometry::rect([0.0, 0.0], [1.0, 1.0], [cells, cells]).unwrap())
    }

    #[test]
    fn plan_for_five_in_the_plane() {
        let p = count_plan(5, 2).unwrap();
        assert_eq!((p.n_tilde, p.m, p.l), (2, 0, 1));
        assert_eq!(p.last_counts(), vec![3, 2]);
        let t = build_tiling(&uniform2d(64), 5).unwrap();
        assert_eq!(t.counts, vec![3, 2]);
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn plan_examples_in_higher_dimension() {
        // 30 = 3·3·3 + 3: ñ = 3, m = 0, three of nine parents get a fourth slice
        let p = count_plan(30, 3).unwrap();
        assert_eq!((p.n_tilde, p.m, p.l), (3, 0, 3));
        assert_eq!(p.last_counts(), vec![4, 4, 4, 3, 3, 3, 3, 3, 3]);
        // 40 = 3·4·3 + 4 = 36 + 4: m = 1
        let p = count_plan(40, 3).unwrap();
        assert_eq!((p.n_tilde, p.m, p.l), (3, 1, 4));
        assert_eq!(p.index_set().len(), 40);
        assert_eq!(count_plan(7, 1).unwrap().last_counts(), vec![7]);
        assert!(count_plan(0, 2).is_err());
    }

    #[test]
    fn four_uniform_squares() {
        let t = build_tiling(&uniform2d(64), 4).unwrap();
        let pts = tiling_points(&t, PointRule::Center).unwrap();
        let expect = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]];
        for (p, e) in pts.points().zip(expect) {
            assert!(
                (p[0] - e[0]).abs() < 1e-12 && (p[1] - e[1]).abs() < 1e-12,
                "{p:?}"
            );
        }
        for tile in &t.tiles {
            assert!((tile.mass - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_quantiles_in_one_dimension() {
        let t = build_tiling(&uniform1d(1024), 7).unwrap();
        for (k, tile) in t.tiles.iter().enumerate() {
            assert!((tile.lower[0] - k as f64 / 7.0).abs() < 1e-12);
        }
        let one =
            tiling_points(&build_tiling(&uniform1d(16), 1).unwrap(), PointRule::Center).unwrap();
        assert_eq!(one.coords(), &[0.5]);
    }

    #[test]
    fn plateau_uses_leftmost_cut() {
        let geo = GridGeometry::interval(0.0, 4.0, 4).unwrap();
        let w = GridDensity::normalized(geo, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let t = build_tiling(&w, 2).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.tiles[0].upper[0], 1.0);
    }

    #[test]
    fn csv_lists_every_tile() {
        let t = build_tiling(&uniform2d(8), 5).unwrap();
        let csv = tiling_csv(&t);
        assert!(csv.starts_with("# dim=2 n=5 counts=[3, 2]\ni1,i2,x_lo,y_lo,x_hi,y_hi,mass\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    proptest! {
        #[test]
        fn count_shape(n in 1usize..5000, d in 1usize..5) {
            let p = count_plan(n, d).unwrap();
            let nt = p.n_tilde;
            let last = p.last_counts();
            prop_assert_eq!(last.iter().sum::<usize>(), n);
            prop_assert!(last.iter().all(|&c| c == nt || c == nt + 1));
            prop_assert!((0..d - 1).all(|k| p.inner_count(k) == nt || p.inner_count(k) == nt + 1));
        }

        #[test]
        fn tiles_have_equal_mass(n in 1usize..80, seed in 0u64..1000) {
            let geo = GridGeometry::rect([0.0, 0.0], [1.0, 2.0], [9, 7]).unwrap();
            let values: Vec<f64> = (0..63).map(|i| ((i as u64 * 2654435761 + seed) % 97) as f64 + 1.0).collect();
            let w = GridDensity::normalized(geo, values).unwrap();
            let t = build_tiling(&w, n).unwrap();
            prop_assert_eq!(t.len(), n);
            let total: f64 = t.tiles.iter().map(|x| x.mass).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for tile in &t.tiles {
                prop_assert!((tile.mass - 1.0 / n as f64).abs() < 1e-6, "{}", tile.mass);
            }
        }
    }
}
