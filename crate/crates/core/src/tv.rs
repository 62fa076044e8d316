//! Discrete total variation of particle and grid measures.
//!
//! Particles enter either through a kernel density estimate `Q_h = K_h * μ_N` or, in 1D,
//! through the piecewise-constant density with mass `1/N` between consecutive points.

use crate::kernels::EstimationKernel;
use crate::measure::{GridDensity, ParticleMeasure};
use crate::{Error, Result};
use serde::Serialize;

/// Sorted points closer than this make the point-difference TV infinite.
pub const COINCIDENCE_TOL: f64 = 1e-14;

/// Fine-grid samples per bandwidth for sampled kernel estimates.
pub const SAMPLES_PER_BANDWIDTH: usize = 8;

const MAX_FINE_CELLS_1D: usize = 1 << 22;
const MAX_FINE_CELLS_2D: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvMethod {
    KernelEstimate,
    PointDifference,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TVEstimate {
    /// `f64::INFINITY` when the functional is infinite.
    pub value: f64,
    pub method: TvMethod,
    pub bandwidth: Option<f64>,
}

impl TVEstimate {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// `h(N) = N^{-1/(2d+1)}`, so that `h → 0` and `h^{2d} N → ∞`.
pub fn bandwidth_schedule(n: usize, d: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Empty);
    }
    if d == 0 {
        return Err(Error::UnsupportedDim(0));
    }
    Ok((n as f64).powf(-1.0 / (2 * d + 1) as f64))
}

/// `|D Q_h|` of the kernel estimate with bandwidth `h`.
///
/// In 1D with the triangular kernel `Q_h` is piecewise linear and the value is exact. Otherwise
/// `Q_h` is sampled on a fine grid with [`SAMPLES_PER_BANDWIDTH`] nodes per `h` and the
/// variation summed over forward differences (isotropic in 2D, with a tensor-product kernel).
pub fn kernel_tv(x: &ParticleMeasure, h: f64, kernel: EstimationKernel) -> Result<TVEstimate> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::NonpositiveBandwidth(h));
    }
    if x.dim() > 2 {
        return Err(Error::UnsupportedDim(x.dim()));
    }
    let value = if x.dim() == 1 && kernel == EstimationKernel::Triangular {
        triangular_tv_1d(x.coords(), h, 0.0, None)
    } else {
        let (lo, hi) = x.bounding_box();
        let grid = FineGrid::covering(&lo, &hi, h, kernel, h / SAMPLES_PER_BANDWIDTH as f64);
        let q = grid.estimate(x.coords(), h, kernel);
        grid.variation(&q, 0.0, None)
    };
    Ok(TVEstimate {
        value,
        method: TvMethod::KernelEstimate,
        bandwidth: Some(h),
    })
}

/// Variation of the 1D density `1/(N (x_{i+1} - x_i))` between sorted points, including the
/// jumps from and back to zero at the two ends.
pub fn pointdiff_tv_1d(x: &ParticleMeasure) -> Result<TVEstimate> {
    if x.dim() != 1 {
        return Err(Error::DimMismatch {
            expected: 1,
            found: x.dim(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints(x.len()));
    }
    let sorted = x.sorted();
    Ok(TVEstimate {
        value: pointdiff_value(sorted.coords(), 0.0, None),
        method: TvMethod::PointDifference,
        bandwidth: None,
    })
}

/// `Σ|u_{i+1} - u_i|` in 1D; anisotropic `Σ |Δ_x u| h_y + |Δ_y u| h_x` in 2D.
pub fn grid_tv(u: &GridDensity) -> TVEstimate {
    let g = u.geometry();
    let v = u.values();
    let value = match g.dim() {
        1 => v.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
        _ => {
            let [nx, ny] = [g.cells()[0], g.cells()[1]];
            let (hx, hy) = (g.cell_width(0), g.cell_width(1));
            let mut s = 0.0;
            for j in 0..ny {
                for i in 0..nx {
                    let c = v[i + nx * j];
                    if i + 1 < nx {
                        s += (v[i + 1 + nx * j] - c).abs() * hy;
                    }
                    if j + 1 < ny {
                        s += (v[i + nx * (j + 1)] - c).abs() * hx;
                    }
                }
            }
            s
        }
    };
    TVEstimate {
        value,
        method: TvMethod::Grid,
        bandwidth: None,
    }
}

/// `√(s² + ε²)` and its derivative; plain `|s|` with subgradient 0 at 0 when `ε = 0`.
#[inline]
fn smooth_abs(s: f64, eps: f64) -> (f64, f64) {
    if eps == 0.0 {
        (s.abs(), if s == 0.0 { 0.0 } else { s.signum() })
    } else {
        let r = (s * s + eps * eps).sqrt();
        (r, s / r)
    }
}

/// Exact (smoothed) variation of the triangular kernel estimate in 1D.
///
/// `Q_h` changes slope by `+1/(N h²)` at `x_i ± h` and by `-2/(N h²)` at `x_i`. The value is
/// `Σ φ(s_k) (t_{k+1} - t_k)` over the sorted breakpoints; moving a breakpoint changes it at
/// rate `φ(s_left) - φ(s_right)`.
pub(crate) fn triangular_tv_1d(coords: &[f64], h: f64, eps: f64, grad: Option<&mut [f64]>) -> f64 {
    let n = coords.len();
    let unit = 1.0 / (n as f64 * h * h);
    let mut events: Vec<(f64, f64, usize)> = Vec::with_capacity(3 * n);
    for (i, &x) in coords.iter().enumerate() {
        events.push((x - h, unit, i));
        events.push((x, -2.0 * unit, i));
        events.push((x + h, unit, i));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut slopes = Vec::with_capacity(events.len());
    let mut s = 0.0;
    let mut value = 0.0;
    for (k, e) in events.iter().enumerate() {
        s += e.1;
        // the slope is exactly 0 beyond the last breakpoint
        if k + 1 == events.len() {
            s = 0.0;
        }
        slopes.push(s);
        if k + 1 < events.len() {
            value += smooth_abs(s, eps).0 * (events[k + 1].0 - e.0);
        }
    }
    if let Some(g) = grad {
        g.iter_mut().for_each(|v| *v = 0.0);
        for (k, e) in events.iter().enumerate() {
            // the regions outside the outermost breakpoints do not count
            let fl = if k == 0 {
                0.0
            } else {
                smooth_abs(slopes[k - 1], eps).0
            };
            let fr = if k + 1 == events.len() {
                0.0
            } else {
                smooth_abs(slopes[k], eps).0
            };
            g[e.2] += fl - fr;
        }
    }
    value
}

/// Point-difference TV of sorted 1D points, smoothed by `ε` in the interior jumps.
///
/// With `grad`, also returns the derivative with respect to the sorted coordinates.
fn pointdiff_value(sorted: &[f64], eps: f64, grad: Option<&mut [f64]>) -> f64 {
    let n = sorted.len();
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.iter().any(|&g| g < COINCIDENCE_TOL) {
        return f64::INFINITY;
    }
    let r: Vec<f64> = gaps.iter().map(|g| 1.0 / g).collect();
    let m = r.len();
    let inv_n = 1.0 / n as f64;
    let mut value = r[0] + r[m - 1];
    let mut dr = vec![0.0; m];
    dr[0] += 1.0;
    dr[m - 1] += 1.0;
    for k in 0..m.saturating_sub(1) {
        let (v, d) = smooth_abs(r[k + 1] - r[k], eps);
        value += v;
        dr[k + 1] += d;
        dr[k] -= d;
    }
    if let Some(g) = grad {
        g.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..m {
            // r = 1/gap, gap = x_{k+1} - x_k
            let dgap = -dr[k] * r[k] * r[k] * inv_n;
            g[k + 1] += dgap;
            g[k] -= dgap;
        }
    }
    value * inv_n
}

/// Regular sampling grid for kernel estimates in dimension 1 or 2.
#[derive(Debug, Clone)]
pub(crate) struct FineGrid {
    dim: usize,
    lower: [f64; 2],
    step: f64,
    cells: [usize; 2],
}

impl FineGrid {
    /// Grid with spacing at most `step` covering `[lo, hi]` padded by the kernel support.
    pub(crate) fn covering(
        lo: &[f64],
        hi: &[f64],
        h: f64,
        kernel: EstimationKernel,
        step: f64,
    ) -> Self {
        let dim = lo.len();
        let pad = kernel.support_radius() * h + step;
        let mut lower = [0.0; 2];
        let mut extent = [0.0f64; 2];
        for k in 0..dim {
            lower[k] = lo[k] - pad;
            extent[k] = hi[k] - lo[k] + 2.0 * pad;
        }
        let cap = if dim == 1 {
            MAX_FINE_CELLS_1D
        } else {
            MAX_FINE_CELLS_2D
        };
        let mut step = step;
        let count = |s: f64| -> usize {
            (0..dim)
                .map(|k| (extent[k] / s).ceil() as usize + 1)
                .product()
        };
        if count(step) > cap {
            let widest = extent[..dim].iter().cloned().fold(0.0, f64::max);
            step = widest / ((cap as f64).powf(1.0 / dim as f64) - 1.0);
            log::warn!("kernel estimate grid capped at {cap} nodes; spacing {step:.3e} for bandwidth {h:.3e}");
        }
        let mut cells = [1usize; 2];
        for k in 0..dim {
            cells[k] = (extent[k] / step).ceil() as usize + 1;
        }
        Self {
            dim,
            lower,
            step,
            cells,
        }
    }

    fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    fn node(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.step
    }

    /// Index range of nodes within `r` of `x` along `axis`.
    fn span(&self, axis: usize, x: f64, r: f64) -> std::ops::Range<usize> {
        let a = ((x - r - self.lower[axis]) / self.step).ceil().max(0.0) as usize;
        let b = (((x + r - self.lower[axis]) / self.step).floor() + 1.0).max(0.0) as usize;
        a.min(self.cells[axis])..b.min(self.cells[axis])
    }

    /// `Q_h` at every node.
    pub(crate) fn estimate(&self, coords: &[f64], h: f64, kernel: EstimationKernel) -> Vec<f64> {
        let n = coords.len() / self.dim;
        let r = kernel.support_radius() * h;
        let mut q = vec![0.0; self.len()];
        let scale = 1.0 / (n as f64 * h.powi(self.dim as i32));
        for p in coords.chunks_exact(self.dim) {
            if self.dim == 1 {
                for i in self.span(0, p[0], r) {
                    q[i] += scale * kernel.eval((self.node(0, i) - p[0]) / h).0;
                }
            } else {
                let ys: Vec<(usize, f64)> = self
                    .span(1, p[1], r)
                    .map(|j| (j, kernel.eval((self.node(1, j) - p[1]) / h).0))
                    .collect();
                for i in self.span(0, p[0], r) {
                    let kx = scale * kernel.eval((self.node(0, i) - p[0]) / h).0;
                    if kx == 0.0 {
                        continue;
                    }
                    for &(j, ky) in &ys {
                        q[i + self.cells[0] * j] += kx * ky;
                    }
                }
            }
        }
        q
    }

    /// Forward-difference variation of sampled values, with the adjoint `∂TV/∂q` on request.
    pub(crate) fn variation(&self, q: &[f64], eps: f64, adjoint: Option<&mut [f64]>) -> f64 {
        let mut adj = adjoint;
        if let Some(a) = adj.as_deref_mut() {
            a.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut total = 0.0;
        if self.dim == 1 {
            for i in 0..self.cells[0] - 1 {
                let (v, d) = smooth_abs(q[i + 1] - q[i], eps);
                total += v;
                if let Some(a) = adj.as_deref_mut() {
                    a[i + 1] += d;
                    a[i] -= d;
                }
            }
            return total;
        }
        let [nx, ny] = self.cells;
        let dx = self.step;
        for j in 0..ny {
            for i in 0..nx {
                let c = i + nx * j;
                let gx = if i + 1 < nx { q[c + 1] - q[c] } else { -q[c] };
                let gy = if j + 1 < ny { q[c + nx] - q[c] } else { -q[c] };
                // |∇Q| · cell area with ∇Q ≈ (gx, gy)/dx
                let r = (gx * gx + gy * gy + eps * eps).sqrt();
                total += r * dx;
                if let Some(a) = adj.as_deref_mut() {
                    if r > 0.0 {
                        let (ax, ay) = (gx / r * dx, gy / r * dx);
                        a[c] -= ax + ay;
                        if i + 1 < nx {
                            a[c + 1] += ax;
                        }
                        if j + 1 < ny {
                            a[c + nx] += ay;
                        }
                    }
                }
            }
        }
        total
    }

    /// Chain rule from node values back to point coordinates.
    pub(crate) fn pull_back(
        &self,
        coords: &[f64],
        h: f64,
        kernel: EstimationKernel,
        adj: &[f64],
        grad: &mut [f64],
    ) {
        let d = self.dim;
        let n = coords.len() / d;
        let r = kernel.support_radius() * h;
        // ∂Q(g)/∂x = -(1/(N h^{d+1})) ∇K((g - x)/h)
        let scale = -1.0 / (n as f64 * h.powi(d as i32 + 1));
        for (p, g) in coords.chunks_exact(d).zip(grad.chunks_exact_mut(d)) {
            if d == 1 {
                let mut acc = 0.0;
                for i in self.span(0, p[0], r) {
                    acc += adj[i] * kernel.eval((self.node(0, i) - p[0]) / h).1;
                }
                g[0] = scale * acc;
            } else {
                let ys: Vec<(usize, (f64, f64))> = self
                    .span(1, p[1], r)
                    .map(|j| (j, kernel.eval((self.node(1, j) - p[1]) / h)))
                    .collect();
                let (mut ax, mut ay) = (0.0, 0.0);
                for i in self.span(0, p[0], r) {
                    let (kx, dkx) = kernel.eval((self.node(0, i) - p[0]) / h);
                    for &(j, (ky, dky)) in &ys {
                        let a = adj[i + self.cells[0] * j];
                        ax += a * dkx * ky;
                        ay += a * kx * dky;
                    }
                }
                g[0] = scale * ax;
                g[1] = scale * ay;
            }
        }
    }
}

/// A TV penalty prepared for repeated evaluation inside the particle solver.
#[derive(Debug, Clone)]
pub(crate) enum TvPenalty {
    PointDifference,
    TriangularExact {
        h: f64,
    },
    Sampled {
        grid: FineGrid,
        h: f64,
        kernel: EstimationKernel,
    },
}

impl TvPenalty {
    pub(crate) fn method(&self) -> TvMethod {
        match self {
            TvPenalty::PointDifference => TvMethod::PointDifference,
            _ => TvMethod::KernelEstimate,
        }
    }

    /// Smoothed value; the gradient with respect to `coords` is written to `grad` if given.
    pub(crate) fn value_grad(
        &self,
        coords: &[f64],
        dim: usize,
        eps: f64,
        grad: Option<&mut [f64]>,
    ) -> f64 {
        match self {
            TvPenalty::PointDifference => {
                let mut order: Vec<usize> = (0..coords.len()).collect();
                order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
                let sorted: Vec<f64> = order.iter().map(|&i| coords[i]).collect();
                match grad {
                    None => pointdiff_value(&sorted, eps, None),
                    Some(g) => {
                        let mut gs = vec![0.0; sorted.len()];
                        let v = pointdiff_value(&sorted, eps, Some(&mut gs));
                        for (k, &i) in order.iter().enumerate() {
                            g[i] = gs[k];
                        }
                        v
                    }
                }
            }
            TvPenalty::TriangularExact { h } => triangular_tv_1d(coords, *h, eps, grad),
            TvPenalty::Sampled { grid, h, kernel } => {
                debug_assert_eq!(grid.dim, dim);
                let q = grid.estimate(coords, *h, *kernel);
                match grad {
                    None => grid.variation(&q, eps, None),
                    Some(g) => {
                        let mut adj = vec![0.0; q.len()];
                        let v = grid.variation(&q, eps, Some(&mut adj));
                        grid.pull_back(coords, *h, *kernel, &adj, g);
                        v
                    }
                }
            }
        }
    }
}
