use super::{Direction, Init, SolverConfig, SolverTrace, Termination, TraceRecord};
use crate::energy::energy_terms;
use crate::kernels::{EstimationKernel, PowerKernel};
use crate::measure::{sample_empirical, MeasureRef, Nodes, ParticleMeasure};
use crate::tiling::{build_tiling, tiling_points, PointRule};
use crate::tv::{bandwidth_schedule, FineGrid, TvMethod, TvPenalty, SAMPLES_PER_BANDWIDTH};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

const MAX_BACKTRACKS: usize = 60;

/// The starting points selected by `cfg.init`.
pub fn initial_points<'a>(
    omega: impl Into<MeasureRef<'a>>,
    n: usize,
    init: &Init,
) -> Result<ParticleMeasure> {
    let omega = omega.into();
    if n == 0 {
        return Err(Error::InvalidConfig("n must be ≥ 1".into()));
    }
    let d = omega.dim();
    let uniform_in_box = |p: &ParticleMeasure, seed: u64| {
        let (lo, hi) = p.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<f64> = (0..n * d)
            .map(|c| {
                let k = c % d;
                let pad = 0.05 * (hi[k] - lo[k]).max(1e-3);
                rng.random_range(lo[k] - pad..hi[k] + pad)
            })
            .collect();
        ParticleMeasure::new(d, coords)
    };
    match (init, omega) {
        (Init::Tiling, MeasureRef::Grid(g)) => {
            tiling_points(&build_tiling(g, n)?, PointRule::MassCentroid)
        }
        (Init::Tiling, MeasureRef::Particles(p)) => uniform_in_box(p, 0),
        (Init::Random { seed }, MeasureRef::Grid(g)) => sample_empirical(g, n, *seed),
        (Init::Random { seed }, MeasureRef::Particles(p)) => uniform_in_box(p, *seed),
        (Init::Points(p), _) => {
            if p.dim() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    found: p.dim(),
                });
            }
            if p.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "{} initial points given for n = {n}",
                    p.len()
                )));
            }
            Ok(p.clone())
        }
    }
}

struct Objective<'a> {
    target: Nodes,
    dim: usize,
    kernel: &'a PowerKernel,
    lambda: f64,
    eps: f64,
    tv: Option<TvPenalty>,
}

impl Objective<'_> {
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match grad {
            None => {
                let (v, w) = energy_terms(x, self.dim, &self.target, self.kernel, None);
                let mut f = v + w;
                if let Some(tv) = &self.tv {
                    f += self.lambda * tv.value_grad(x, self.dim, self.eps, None);
                }
                f
            }
            Some(g) => {
                let (v, w) = energy_terms(x, self.dim, &self.target, self.kernel, Some(g));
                let mut f = v + w;
                if let Some(tv) = &self.tv {
                    let mut gt = vec![0.0; x.len()];
                    f += self.lambda * tv.value_grad(x, self.dim, self.eps, Some(&mut gt));
                    for (a, b) in g.iter_mut().zip(&gt) {
                        *a += self.lambda * b;
                    }
                }
                f
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: `-H g` for the stored pairs `(s, y, 1/(yᵀs))`.
fn lbfgs_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Local minimizer of `E_N + λ · TV` over `N` equal-weight points.
///
/// Descent is L-BFGS (or plain gradient descent) with Armijo backtracking. Every accepted step
/// satisfies `f(x + s p) ≤ f(x) + c s ∇f·p`, so the traced objective never increases.
pub fn minimize_particles<'a>(
    omega: impl Into<MeasureRef<'a>>,
    n: usize,
    kernel: &PowerKernel,
    cfg: &SolverConfig,
) -> Result<(ParticleMeasure, SolverTrace)> {
    let omega = omega.into();
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("n must be ≥ 1".into()));
    }
    let d = omega.dim();
    if kernel.dim != d {
        return Err(Error::DimMismatch {
            expected: d,
            found: kernel.dim,
        });
    }
    let x0 = initial_points(omega, n, &cfg.init)?;
    let scale = omega.scale();

    let tv = match (cfg.lambda > 0.0, cfg.tv_method) {
        (false, _) | (true, None) => None,
        (true, Some(TvMethod::PointDifference)) => {
            if d != 1 {
                return Err(Error::InvalidConfig(
                    "point-difference TV needs d = 1".into(),
                ));
            }
            if n < 2 {
                return Err(Error::TooFewPoints(n));
            }
            Some(TvPenalty::PointDifference)
        }
        (true, Some(TvMethod::KernelEstimate)) => {
            if d > 2 {
                return Err(Error::UnsupportedDim(d));
            }
            let h = match cfg.tv_bandwidth {
                Some(h) => h,
                None => bandwidth_schedule(n, d)?,
            };
            if d == 1 && cfg.tv_kernel == EstimationKernel::Triangular {
                Some(TvPenalty::TriangularExact { h })
            } else {
                let (lo, hi) = target_box(&omega, &x0);
                let mut step = h / SAMPLES_PER_BANDWIDTH as f64;
                if let MeasureRef::Grid(g) = omega {
                    for k in 0..d {
                        step = step.min(0.5 * g.geometry().cell_width(k));
                    }
                }
                let pad: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.25 * (b - a)).collect();
                let lo: Vec<f64> = lo.iter().zip(&pad).map(|(a, p)| a - p).collect();
                let hi: Vec<f64> = hi.iter().zip(&pad).map(|(b, p)| b + p).collect();
                Some(TvPenalty::Sampled {
                    grid: FineGrid::covering(&lo, &hi, h, cfg.tv_kernel, step),
                    h,
                    kernel: cfg.tv_kernel,
                })
            }
        }
        (true, Some(TvMethod::Grid)) => {
            return Err(Error::InvalidConfig(
                "grid TV applies to grid densities, not particles".into(),
            ));
        }
    };
    if let Some(t) = &tv {
        log::debug!("particle TV penalty: {:?}", t.method());
    }

    let obj = Objective {
        target: omega.nodes(),
        dim: d,
        kernel,
        lambda: cfg.lambda,
        eps: cfg.tv_smoothing.unwrap_or(1e-6 * scale),
        tv,
    };
    let max_iters = cfg.max_iters.unwrap_or(2000);
    let grad_tol = cfg.grad_tol.unwrap_or(1e-8 * n as f64);

    let mut x = x0.into_coords();
    let mut g = vec![0.0; x.len()];
    let mut f = obj.eval(&x, Some(&mut g));
    let mut gnorm = dot(&g, &g).sqrt();
    let mut records = vec![TraceRecord {
        iter: 0,
        energy: f,
        residual: gnorm,
        step: 0.0,
    }];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut termination = Termination::MaxIterations;
    let mut x_new = vec![0.0; x.len()];
    let mut g_new = vec![0.0; x.len()];

    for iter in 1..=max_iters {
        if gnorm <= grad_tol {
            termination = Termination::Converged;
            break;
        }
        let mut accepted = None;
        // try the quasi-Newton direction first, then fall back to steepest descent
        for attempt in 0..2 {
            let p = match cfg.direction {
                Direction::Lbfgs { .. } if attempt == 0 && !memory.is_empty() => {
                    lbfgs_direction(&g, &memory)
                }
                _ => g.iter().map(|v| -v).collect(),
            };
            let slope = dot(&g, &p);
            if !(slope < 0.0) {
                continue;
            }
            let mut s = cfg.step_init;
            if attempt == 1 || memory.is_empty() {
                // scale the first steepest-descent step to a displacement comparable to the target
                let pn = dot(&p, &p).sqrt();
                s = s.min(0.1 * scale / pn);
            }
            for _ in 0..MAX_BACKTRACKS {
                for ((xn, xi), pi) in x_new.iter_mut().zip(&x).zip(&p) {
                    *xn = xi + s * pi;
                }
                let fn_ = obj.eval(&x_new, None);
                if fn_ <= f + cfg.armijo_c * s * slope {
                    accepted = Some((s, fn_));
                    break;
                }
                s *= cfg.armijo_shrink;
            }
            if accepted.is_some() {
                break;
            }
            memory.clear();
        }
        let Some((s, _)) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };
        let f_new = obj.eval(&x_new, Some(&mut g_new));
        if let Direction::Lbfgs { memory: m } = cfg.direction {
            let sv: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&sv, &yv);
            if sy > 1e-12 * dot(&sv, &sv).sqrt() * dot(&yv, &yv).sqrt() && sy > 0.0 {
                if memory.len() == m {
                    memory.pop_front();
                }
                memory.push_back((sv, yv, 1.0 / sy));
            }
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        gnorm = dot(&g, &g).sqrt();
        records.push(TraceRecord {
            iter,
            energy: f,
            residual: gnorm,
            step: s,
        });
    }
    if termination == Termination::MaxIterations && gnorm <= grad_tol {
        termination = Termination::Converged;
    }
    Ok((
        ParticleMeasure::new(d, x)?,
        SolverTrace {
            records,
            termination,
        },
    ))
}

fn target_box(omega: &MeasureRef<'_>, x0: &ParticleMeasure) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi) = x0.bounding_box();
    let (tlo, thi) = match omega {
        MeasureRef::Grid(g) => (g.geometry().lower().to_vec(), g.geometry().upper().to_vec()),
        MeasureRef::Particles(p) => p.bounding_box(),
    };
    for k in 0..lo.len() {
        lo[k] = lo[k].min(tlo[k]);
        hi[k] = hi[k].max(thi[k]);
    }
    (lo, hi)
}
