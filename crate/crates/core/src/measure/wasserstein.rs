use super::{cumulative, MeasureRef};
use crate::{Error, Result};

/// CDF of a 1D measure: a right-continuous step function for atoms, piecewise linear for grids.
enum Cdf {
    Step { xs: Vec<f64>, cum: Vec<f64> },
    Linear { edges: Vec<f64>, cum: Vec<f64> },
}

impl Cdf {
    fn of(m: MeasureRef<'_>) -> Self {
        match m {
            MeasureRef::Particles(p) => {
                let mut xs = p.coords().to_vec();
                xs.sort_by(f64::total_cmp);
                let w = p.weight();
                let cum = (1..=xs.len()).map(|k| k as f64 * w).collect();
                Cdf::Step { xs, cum }
            }
            MeasureRef::Grid(g) => Cdf::Linear {
                edges: g.geometry().edges(0),
                cum: cumulative(&g.masses()),
            },
        }
    }

    fn breakpoints(&self) -> &[f64] {
        match self {
            Cdf::Step { xs, .. } => xs,
            Cdf::Linear { edges, .. } => edges,
        }
    }

    /// Values at `a+` and `b-` for an interval containing no breakpoint in its interior.
    fn on_interval(&self, a: f64, b: f64) -> (f64, f64) {
        match self {
            Cdf::Step { xs, cum } => {
                let k = xs.partition_point(|&x| x <= a);
                let v = if k == 0 { 0.0 } else { cum[k - 1] };
                (v, v)
            }
            Cdf::Linear { edges, cum } => (
                super::grid::eval_piecewise_linear(edges, cum, a),
                super::grid::eval_piecewise_linear(edges, cum, b),
            ),
        }
    }
}

/// `∫ |F_μ(x) - F_ν(x)| dx`, exact for step and piecewise-linear CDFs.
pub fn wasserstein1_1d<'a, 'b>(
    mu: impl Into<MeasureRef<'a>>,
    nu: impl Into<MeasureRef<'b>>,
) -> Result<f64> {
    let (mu, nu) = (mu.into(), nu.into());
    for m in [mu, nu] {
        if m.dim() != 1 {
            return Err(Error::DimMismatch {
                expected: 1,
                found: m.dim(),
            });
        }
    }
    let (f, g) = (Cdf::of(mu), Cdf::of(nu));
    let mut pts: Vec<f64> = f
        .breakpoints()
        .iter()
        .chain(g.breakpoints())
        .copied()
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = f.on_interval(a, b);
        let (ga, gb) = g.on_interval(a, b);
        total += abs_linear_integral(fa - ga, fb - gb, b - a);
    }
    Ok(total)
}

/// `∫_0^len |l(t)| dt` for the linear function with end values `u` and `v`.
fn abs_linear_integral(u: f64, v: f64, len: f64) -> f64 {
    if u * v >= 0.0 {
        0.5 * (u.abs() + v.abs()) * len
    } else {
        0.5 * (u * u + v * v) / (u.abs() + v.abs()) * len
    }
}
