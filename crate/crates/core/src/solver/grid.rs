use super::prox::{simplex_projection, tv1d_denoise};
use super::{SolverConfig, SolverTrace, Termination, TraceRecord};
use crate::energy::{grid_quadratic_matrix, SymmetricMatrix};
use crate::measure::GridDensity;
use crate::{Error, Result};

const POWER_ITERATIONS: usize = 500;

/// `(u - w)ᵀ A (u - w) + λ Σ |u_{i+1} - u_i|` for density vectors on the grid of `w`.
pub fn grid_objective(u: &GridDensity, w: &GridDensity, q: f64, lambda: f64) -> Result<f64> {
    if u.geometry() != w.geometry() {
        return Err(Error::InvalidGrid("u and w live on different grids".into()));
    }
    let a = grid_quadratic_matrix(w.geometry(), q)?;
    Ok(objective(&a, u.values(), w.values(), lambda, 0.0))
}

fn objective(a: &SymmetricMatrix, u: &[f64], w: &[f64], lambda: f64, eps: f64) -> f64 {
    let diff: Vec<f64> = u.iter().zip(w).map(|(x, y)| x - y).collect();
    let tv: f64 = u
        .windows(2)
        .map(|p| {
            let s = p[1] - p[0];
            if eps > 0.0 {
                (s * s + eps * eps).sqrt()
            } else {
                s.abs()
            }
        })
        .sum();
    a.quad_form(&diff) + lambda * tv
}

fn project_mean_free(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Largest eigenvalue of `A` restricted to zero-sum vectors, by power iteration.
fn restricted_spectral_radius(a: &SymmetricMatrix) -> f64 {
    let n = a.size();
    if n < 2 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.754_877_666).fract() - 0.5)
        .collect();
    project_mean_free(&mut v);
    let mut lam = 0.0;
    let mut av = vec![0.0; n];
    for _ in 0..POWER_ITERATIONS {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        a.mul_into(&v, &mut av);
        project_mean_free(&mut av);
        lam = av.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        std::mem::swap(&mut v, &mut av);
    }
    lam.abs()
}

/// Minimizes `(u - w)ᵀ A (u - w) + λ Σ|u_{i+1} - u_i|` over `u ≥ 0`, `Σ u_i h = 1` on a 1D grid.
///
/// Accelerated proximal gradient with adaptive restart, started at `u = w`. With zero TV
/// smoothing the proximal map is exact: the 1D TV denoiser followed by the projection onto the
/// constraint set (the TV map commutes with constant shifts, and clipping at zero preserves its
/// optimality). With smoothing `ε > 0` the TV term joins the smooth part. If the residual floor is
/// not reached, the best iterate is returned with [`Termination::NotConverged`].
pub fn minimize_grid(
    w: &GridDensity,
    q: f64,
    cfg: &SolverConfig,
) -> Result<(GridDensity, SolverTrace)> {
    cfg.validate()?;
    if w.dim() != 1 {
        return Err(Error::UnsupportedDim(w.dim()));
    }
    let geo = w.geometry().clone();
    let a = grid_quadratic_matrix(&geo, q)?;
    let h = geo.cell_width(0);
    let total = 1.0 / h;
    let lambda = cfg.lambda;
    let eps = cfg.tv_smoothing.unwrap_or(0.0);
    let lip = match cfg.fista_lipschitz {
        Some(l) => l,
        None => {
            let mut l = 2.0 * 1.01 * restricted_spectral_radius(&a);
            if eps > 0.0 {
                l += 4.0 * lambda / eps;
            }
            l.max(f64::MIN_POSITIVE)
        }
    };
    let wv = w.values();
    let n = wv.len();
    let max_iters = cfg.max_iters.unwrap_or(20_000);
    let floor = cfg.residual_tol * wv.iter().cloned().fold(1.0, f64::max);

    let mut x = wv.to_vec();
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut best = (objective(&a, &x, wv, lambda, 0.0), x.clone());
    let mut records = vec![TraceRecord {
        iter: 0,
        energy: best.0,
        residual: f64::NAN,
        step: 1.0 / lip,
    }];
    let mut grad = vec![0.0; n];
    let mut termination = Termination::NotConverged;

    for iter in 1..=max_iters {
        let diff: Vec<f64> = y.iter().zip(wv).map(|(a, b)| a - b).collect();
        a.mul_into(&diff, &mut grad);
        grad.iter_mut().for_each(|g| *g *= 2.0);
        if eps > 0.0 && lambda > 0.0 {
            for i in 0..n - 1 {
                let s = y[i + 1] - y[i];
                let d = lambda * s / (s * s + eps * eps).sqrt();
                grad[i + 1] += d;
                grad[i] -= d;
            }
        }
        let v: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - g / lip).collect();
        let x_new = if eps == 0.0 && lambda > 0.0 {
            simplex_projection(&tv1d_denoise(&v, lambda / lip), total)
        } else {
            simplex_projection(&v, total)
        };

        let residual = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // restart when the momentum points against the proximal step
        let restart: f64 = y
            .iter()
            .zip(&x_new)
            .zip(&x)
            .map(|((yi, xn), xo)| (yi - xn) * (xn - xo))
            .sum();
        let t_new = if restart > 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let beta = if restart > 0.0 {
            0.0
        } else {
            (t - 1.0) / t_new
        };
        y = x_new
            .iter()
            .zip(&x)
            .map(|(xn, xo)| xn + beta * (xn - xo))
            .collect();
        t = t_new;
        x = x_new;

        let f = objective(&a, &x, wv, lambda, 0.0);
        if f < best.0 || iter == 1 {
            best = (f, x.clone());
        }
        records.push(TraceRecord {
            iter,
            energy: f,
            residual,
            step: 1.0 / lip,
        });
        if residual <= floor {
            termination = Termination::Converged;
            best = (f, x.clone());
            break;
        }
    }
    if termination == Termination::NotConverged {
        log::warn!("grid solver stopped after {max_iters} iterations above the residual floor");
    }
    let u = GridDensity::new(geo, best.1)?;
    Ok((
        u,
        SolverTrace {
            records,
            termination,
        },
    ))
}
