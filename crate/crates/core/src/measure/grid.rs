use crate::{Error, Result};

/// Tolerance on the total mass of a [`GridDensity`].
pub const MASS_TOL: f64 = 1e-9;

/// A regular box grid in dimension 1 or 2. Cell `(i0, i1)` has flat index `i0 + n0 * i1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cells: Vec<usize>,
}

impl GridGeometry {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let dim = cells.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDim(dim));
        }
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: lower.len().min(upper.len()),
            });
        }
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: bounds [{}, {}] are not an interval",
                    lower[k], upper[k]
                )));
            }
            if cells[k] == 0 {
                return Err(Error::InvalidGrid(format!("axis {k} has no cells")));
            }
        }
        Ok(Self {
            lower,
            upper,
            cells,
        })
    }

    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::new(vec![a], vec![b], vec![cells])
    }

    pub fn rect(lower: [f64; 2], upper: [f64; 2], cells: [usize; 2]) -> Result<Self> {
        Self::new(lower.to_vec(), upper.to_vec(), cells.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.cell_width(k)).product()
    }

    /// Cell edges along `axis`, `cells[axis] + 1` values.
    pub fn edges(&self, axis: usize) -> Vec<f64> {
        let n = self.cells[axis];
        let h = self.cell_width(axis);
        (0..=n)
            .map(|i| {
                if i == n {
                    self.upper[axis]
                } else {
                    self.lower[axis] + i as f64 * h
                }
            })
            .collect()
    }

    pub fn center_coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + (i as f64 + 0.5) * self.cell_width(axis)
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        let n0 = self.cells[0];
        [flat % n0, flat / n0]
    }

    /// Cell centers, flat row-major with `dim` coordinates per cell.
    pub fn centers(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.cell_count() * d);
        for flat in 0..self.cell_count() {
            let idx = self.multi_index(flat);
            for (k, &i) in idx.iter().enumerate().take(d) {
                out.push(self.center_coord(k, i));
            }
        }
        out
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|k| (self.upper[k] - self.lower[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Index range of cells along `axis` that intersect `[a, b]`, and the overlap length with cell `i`.
    fn overlapping(
        &self,
        axis: usize,
        a: f64,
        b: f64,
    ) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        let h = self.cell_width(axis);
        let lo = self.lower[axis];
        let n = self.cells[axis];
        let first = (((a - lo) / h).floor().max(0.0) as usize).min(n - 1);
        let last = (((b - lo) / h).ceil().max(0.0) as usize).min(n);
        (first..last).filter_map(move |i| {
            let c0 = lo + i as f64 * h;
            let c1 = if i + 1 == n { self.upper[axis] } else { c0 + h };
            let s = a.max(c0);
            let e = b.min(c1);
            (e > s).then_some((i, e - s, s, e))
        })
    }
}

/// A nonnegative piecewise-constant probability density on a [`GridGeometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl GridDensity {
    /// Wraps density values that already integrate to one (within [`MASS_TOL`]).
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        check_values(&geometry, &values)?;
        let mass: f64 = values.iter().sum::<f64>() * geometry.cell_volume();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidGrid(format!("total mass {mass} is not 1")));
        }
        Ok(Self { geometry, values })
    }

    /// Rescales nonnegative values to unit mass.
    pub fn normalized(geometry: GridGeometry, mut values: Vec<f64>) -> Result<Self> {
        check_values(&geometry, &values)?;
        let mass: f64 = values.iter().sum::<f64>() * geometry.cell_volume();
        if mass <= 0.0 {
            return Err(Error::InvalidGrid("density has zero mass".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self { geometry, values })
    }

    pub fn uniform(geometry: GridGeometry) -> Self {
        let v = 1.0 / (geometry.cell_volume() * geometry.cell_count() as f64);
        let values = vec![v; geometry.cell_count()];
        Self { geometry, values }
    }

    /// Samples `f` at cell centers and normalizes.
    pub fn from_fn(geometry: GridGeometry, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = geometry.dim();
        let values = geometry.centers().chunks_exact(d).map(f).collect();
        Self::normalized(geometry, values)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cell masses `value * cell volume`.
    pub fn masses(&self) -> Vec<f64> {
        let vol = self.geometry.cell_volume();
        self.values.iter().map(|v| v * vol).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geometry.cell_volume()
    }

    /// Mass of the marginal along `axis`, per cell of that axis.
    pub fn marginal_masses(&self, axis: usize) -> Vec<f64> {
        let masses = self.masses();
        let mut out = vec![0.0; self.geometry.cells[axis]];
        for (flat, m) in masses.iter().enumerate() {
            let idx = self.geometry.multi_index(flat);
            out[idx[axis]] += m;
        }
        out
    }

    /// Tight bounding box of the cells carrying positive mass.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = self.geometry.upper.clone();
        let mut hi = self.geometry.lower.clone();
        for (flat, &v) in self.values.iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            let idx = self.geometry.multi_index(flat);
            for k in 0..d {
                let h = self.geometry.cell_width(k);
                let a = self.geometry.lower[k] + idx[k] as f64 * h;
                lo[k] = lo[k].min(a);
                hi[k] = hi[k].max(if idx[k] + 1 == self.geometry.cells[k] {
                    self.geometry.upper[k]
                } else {
                    a + h
                });
            }
        }
        (lo, hi)
    }

    /// Mass and mass centroid of the density restricted to the box `[lower, upper]`.
    ///
    /// Exact for the piecewise-constant density. The centroid is `None` for a massless box.
    pub fn box_mass_centroid(&self, lower: &[f64], upper: &[f64]) -> (f64, Option<Vec<f64>>) {
        let g = &self.geometry;
        match g.dim() {
            1 => {
                let (mut mass, mut first) = (0.0, 0.0);
                for (i, len, s, e) in g.overlapping(0, lower[0], upper[0]) {
                    let m = self.values[i] * len;
                    mass += m;
                    first += m * 0.5 * (s + e);
                }
                (mass, (mass > 0.0).then(|| vec![first / mass]))
            }
            _ => {
                let (mut mass, mut fx, mut fy) = (0.0, 0.0, 0.0);
                let xs: Vec<_> = g.overlapping(0, lower[0], upper[0]).collect();
                for (j, ly, sy, ey) in g.overlapping(1, lower[1], upper[1]) {
                    for &(i, lx, sx, ex) in &xs {
                        let m = self.values[i + g.cells[0] * j] * lx * ly;
                        mass += m;
                        fx += m * 0.5 * (sx + ex);
                        fy += m * 0.5 * (sy + ey);
                    }
                }
                (mass, (mass > 0.0).then(|| vec![fx / mass, fy / mass]))
            }
        }
    }

    /// Mass of each row (axis-1 cell) inside the vertical strip `a <= x0 <= b`.
    pub(crate) fn strip_row_masses(&self, a: f64, b: f64) -> Vec<f64> {
        let g = &self.geometry;
        let hy = g.cell_width(1);
        let xs: Vec<_> = g.overlapping(0, a, b).collect();
        (0..g.cells[1])
            .map(|j| {
                xs.iter()
                    .map(|&(i, lx, _, _)| self.values[i + g.cells[0] * j] * lx * hy)
                    .sum()
            })
            .collect()
    }

    /// CDF of a 1D density (piecewise linear).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.require_1d()?;
        let edges = self.geometry.edges(0);
        let cum = cumulative(&self.masses());
        Ok(eval_piecewise_linear(&edges, &cum, x))
    }

    /// Leftmost `x` with `F(x) >= level` for a 1D density; `level = 0` maps to the support start.
    pub fn quantile(&self, level: f64) -> Result<f64> {
        self.require_1d()?;
        let edges = self.geometry.edges(0);
        let cum = cumulative(&self.masses());
        Ok(invert_piecewise_linear(&edges, &cum, level).0)
    }

    fn require_1d(&self) -> Result<()> {
        if self.dim() != 1 {
            return Err(Error::DimMismatch {
                expected: 1,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

fn check_values(geometry: &GridGeometry, values: &[f64]) -> Result<()> {
    if values.len() != geometry.cell_count() {
        return Err(Error::InvalidGrid(format!(
            "{} values for {} cells",
            values.len(),
            geometry.cell_count()
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidGrid(
            "values must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Prefix sums with a leading zero.
pub(crate) fn cumulative(masses: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(masses.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for m in masses {
        acc += m;
        cum.push(acc);
    }
    cum
}

pub(crate) fn eval_piecewise_linear(edges: &[f64], cum: &[f64], x: f64) -> f64 {
    let n = edges.len() - 1;
    if x <= edges[0] {
        return 0.0;
    }
    if x >= edges[n] {
        return cum[n];
    }
    let j = edges.partition_point(|&e| e <= x) - 1;
    let t = (x - edges[j]) / (edges[j + 1] - edges[j]);
    cum[j] + t * (cum[j + 1] - cum[j])
}

/// Leftmost generalized inverse of a piecewise-linear CDF given by `cum` at `edges`.
///
/// Returns the cut and whether the level sits on a zero-mass plateau (so the cut is not unique).
pub(crate) fn invert_piecewise_linear(edges: &[f64], cum: &[f64], level: f64) -> (f64, bool) {
    let n = edges.len() - 1;
    let total = cum[n];
    if level <= 0.0 {
        // support start: first cell with positive mass
        let j = (0..n).find(|&j| cum[j + 1] > cum[j]).unwrap_or(0);
        return (edges[j], false);
    }
    let level = level.min(total);
    let j = cum[1..].partition_point(|&c| c < level).min(n - 1);
    let dm = cum[j + 1] - cum[j];
    let x = if dm > 0.0 {
        let t = ((level - cum[j]) / dm).clamp(0.0, 1.0);
        edges[j] + t * (edges[j + 1] - edges[j])
    } else {
        edges[j]
    };
    // a plateau follows when the level is reached exactly at a cell end and the next cell is empty
    let plateau = level < total
        && (cum[j + 1] - level).abs() <= 1e-14 * total.max(1.0)
        && j + 2 <= n
        && cum[j + 2] - cum[j + 1] <= 0.0;
    (x, plateau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(cells: usize) -> GridDensity {
        GridDensity::uniform(GridGeometry::interval(0.0, 1.0, cells).unwrap())
    }

    #[test]
    fn uniform_has_unit_mass() {
        let g = unit(1024);
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        let g2 = GridDensity::uniform(GridGeometry::rect([0.0, 0.0], [2.0, 1.0], [7, 3]).unwrap());
        assert!((g2.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_and_negative() {
        let geo = GridGeometry::interval(0.0, 1.0, 2).unwrap();
        assert!(GridDensity::new(geo.clone(), vec![1.0, 2.0]).is_err());
        assert!(GridDensity::normalized(geo.clone(), vec![-1.0, 2.0]).is_err());
        assert!(GridDensity::normalized(geo.clone(), vec![0.0, 0.0]).is_err());
        let g = GridDensity::normalized(geo, vec![1.0, 3.0]).unwrap();
        assert_eq!(g.values(), &[0.5, 1.5]);
    }

    #[test]
    fn cdf_and_quantile_uniform() {
        let g = unit(10);
        assert!((g.cdf(0.35).unwrap() - 0.35).abs() < 1e-12);
        for k in 1..7 {
            let q = g.quantile(k as f64 / 7.0).unwrap();
            assert!((q - k as f64 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_takes_leftmost_cut_on_plateau() {
        let geo = GridGeometry::interval(0.0, 4.0, 4).unwrap();
        let g = GridDensity::normalized(geo, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(g.quantile(0.5).unwrap(), 1.0);
        let edges = g.geometry().edges(0);
        let cum = cumulative(&g.masses());
        assert!(invert_piecewise_linear(&edges, &cum, 0.5).1);
        assert!(!invert_piecewise_linear(&edges, &cum, 0.25).1);
        assert_eq!(g.quantile(0.0).unwrap(), 0.0);
    }

    #[test]
    fn box_mass_is_exact_for_partial_cells() {
        let g = GridDensity::uniform(GridGeometry::rect([0.0, 0.0], [1.0, 1.0], [4, 4]).unwrap());
        let (m, c) = g.box_mass_centroid(&[0.1, 0.3], &[0.6, 0.5]);
        assert!((m - 0.5 * 0.2).abs() < 1e-14);
        let c = c.unwrap();
        assert!((c[0] - 0.35).abs() < 1e-12 && (c[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn support_box_is_tight() {
        let geo = GridGeometry::interval(0.0, 1.0, 10).unwrap();
        let mut v = vec![0.0; 10];
        v[3] = 1.0;
        v[6] = 1.0;
        let g = GridDensity::normalized(geo, v).unwrap();
        let (lo, hi) = g.support_box();
        assert!((lo[0] - 0.3).abs() < 1e-12 && (hi[0] - 0.7).abs() < 1e-12);
    }
}
