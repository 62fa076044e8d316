//! Minimizers for the particle energy (with optional TV penalty) and the 1D grid problem.

mod grid;
mod particles;
pub mod prox;

pub use grid::{grid_objective, minimize_grid};
pub use particles::{initial_points, minimize_particles};

use crate::kernels::EstimationKernel;
use crate::measure::ParticleMeasure;
use crate::tv::TvMethod;
use crate::{Error, Result};
use serde::Serialize;

/// Starting configuration of the particle solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Mass centroids of an equal-mass tiling of a grid target; seeded uniform points in the
    /// padded bounding box of a particle target.
    Tiling,
    /// i.i.d. samples of a grid target, or uniform points in the box of a particle target.
    Random {
        seed: u64,
    },
    Points(ParticleMeasure),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    GradientDescent,
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Defaults to 2000 for particles and 20000 for the grid solver.
    pub max_iters: Option<usize>,
    /// Gradient-norm tolerance for particles; defaults to `1e-8 · N`.
    pub grad_tol: Option<f64>,
    pub step_init: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub lambda: f64,
    pub tv_method: Option<TvMethod>,
    pub tv_kernel: EstimationKernel,
    /// Kernel bandwidth; defaults to the `N^{-1/(2d+1)}` schedule.
    pub tv_bandwidth: Option<f64>,
    /// `ε` in `√(s² + ε²)`. Particles default to `1e-6 · scale`; the grid solver defaults to 0,
    /// which selects the exact TV proximal map.
    pub tv_smoothing: Option<f64>,
    pub init: Init,
    pub fista_lipschitz: Option<f64>,
    pub direction: Direction,
    /// Grid solver stops once `max |u_{k+1} - u_k| ≤ residual_tol · max(1, max w)`.
    pub residual_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: None,
            grad_tol: None,
            step_init: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            lambda: 0.0,
            tv_method: None,
            tv_kernel: EstimationKernel::Triangular,
            tv_bandwidth: None,
            tv_smoothing: None,
            init: Init::Tiling,
            fista_lipschitz: None,
            direction: Direction::Lbfgs { memory: 10 },
            residual_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.max_iters == Some(0) {
            return bad("max_iters must be positive");
        }
        if let Some(t) = self.grad_tol {
            if !(t > 0.0) {
                return bad("grad_tol must be positive");
            }
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return bad("step_init must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be nonnegative");
        }
        if let Some(h) = self.tv_bandwidth {
            if !(h > 0.0) {
                return Err(Error::NonpositiveBandwidth(h));
            }
        }
        if let Some(e) = self.tv_smoothing {
            if !(e >= 0.0) {
                return bad("tv_smoothing must be nonnegative");
            }
        }
        if let Some(l) = self.fista_lipschitz {
            if !(l > 0.0) {
                return bad("fista_lipschitz must be positive");
            }
        }
        if let Direction::Lbfgs { memory: 0 } = self.direction {
            return bad("L-BFGS memory must be positive");
        }
        if !(self.residual_tol > 0.0) {
            return bad("residual_tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step satisfied the Armijo condition; the last accepted iterate is returned.
    LineSearchFailed,
    /// The grid residual did not reach its floor; the best iterate is returned.
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Objective value (energy plus penalty).
    pub energy: f64,
    /// Gradient norm for particles, iterate change for the grid solver.
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
}

impl SolverTrace {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.energy)
    }

    /// Iterations taken (records after the initial one).
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    /// One line per record: `iter,energy,residual,step`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,energy,residual,step\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iter, r.energy, r.residual, r.step
            ));
        }
        out
    }
}
