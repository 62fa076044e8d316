//! Power interaction kernels `|x|^q`, their generalized Fourier transform, and
//! density-estimation kernels for the total-variation functionals.

use crate::measure::norm;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Attraction exponent `q_a` and repulsion exponent `q_r` in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerKernel {
    pub dim: usize,
    pub q_a: f64,
    pub q_r: f64,
}

impl PowerKernel {
    pub fn new(dim: usize, q_a: f64, q_r: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDim(0));
        }
        for (name, q) in [("q_a", q_a), ("q_r", q_r)] {
            if !(1.0..=2.0).contains(&q) {
                return Err(Error::Domain(format!("{name} = {q} not in [1, 2]")));
            }
        }
        Ok(Self { dim, q_a, q_r })
    }

    /// Same exponent for attraction and repulsion.
    pub fn symmetric(dim: usize, q: f64) -> Result<Self> {
        Self::new(dim, q, q)
    }

    /// The common exponent `q`, provided `q_a = q_r < 2` as the Fourier representation requires.
    pub fn fourier_exponent(&self) -> Result<f64> {
        if self.q_a != self.q_r {
            return Err(Error::Domain(format!(
                "Fourier representation needs q_a = q_r, got {} and {}",
                self.q_a, self.q_r
            )));
        }
        if self.q_a >= 2.0 {
            return Err(Error::Domain("Fourier representation needs q < 2".into()));
        }
        Ok(self.q_a)
    }
}

/// `|x|^q` with the Euclidean norm.
pub fn power_eval(q: f64, x: &[f64]) -> f64 {
    norm(x).powf(q)
}

/// The positive constant `D_q` linking the Fourier and spatial forms of the energy.
pub fn dq_constant(d: usize, q: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::UnsupportedDim(0));
    }
    if !(q > 0.0 && q < 2.0) {
        return Err(Error::Domain(format!("q = {q} not in (0, 2)")));
    }
    let d = d as f64;
    Ok(
        -(2.0 * PI).powf(-d / 2.0) * 2f64.powf(q + d / 2.0) * gamma((d + q) / 2.0)
            / (2.0 * gamma(-q / 2.0)),
    )
}

/// Generalized Fourier transform of `|x|^q`: `-2 (2π)^d D_q |ξ|^{-d-q}`, negative off the origin.
pub fn generalized_ft(d: usize, q: f64, xi: &[f64]) -> Result<f64> {
    let dq = dq_constant(d, q)?;
    if xi.len() != d {
        return Err(Error::DimMismatch {
            expected: d,
            found: xi.len(),
        });
    }
    let r = norm(xi);
    if r == 0.0 {
        return Err(Error::SingularAtZero);
    }
    Ok(-2.0 * (2.0 * PI).powi(d as i32) * dq * r.powf(-(d as f64) - q))
}

/// Unit-mass 1D density-estimation kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimationKernel {
    /// `(1 - |x|)` on `[-1, 1]`.
    Triangular,
    /// Standard normal density.
    Gaussian,
}

impl EstimationKernel {
    /// `(K(x), K'(x))`; the triangular derivative is taken as 0 at its kinks `-1, 0, 1`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            EstimationKernel::Triangular => {
                let a = x.abs();
                if a >= 1.0 {
                    (0.0, 0.0)
                } else if x == 0.0 {
                    (1.0, 0.0)
                } else {
                    (1.0 - a, -x.signum())
                }
            }
            EstimationKernel::Gaussian => {
                let v = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
                (v, -x * v)
            }
        }
    }

    /// Half-width of the (effective) support; the Gaussian is cut at 8 standard deviations.
    pub fn support_radius(&self) -> f64 {
        match self {
            EstimationKernel::Triangular => 1.0,
            EstimationKernel::Gaussian => 8.0,
        }
    }

    /// `∫ |K'|`, the total variation of the kernel.
    pub fn derivative_l1(&self) -> f64 {
        match self {
            EstimationKernel::Triangular => 2.0,
            EstimationKernel::Gaussian => (2.0 / PI).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_examples() {
        assert_eq!(power_eval(1.3, &[0.0, 0.0]), 0.0);
        assert!((power_eval(1.0, &[3.0, 4.0]) - 5.0).abs() < 1e-15);
        assert!((power_eval(1.5, &[4.0]) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn dq_closed_forms() {
        assert!((dq_constant(1, 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-13);
        assert!((dq_constant(2, 1.0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-13);
        assert!(dq_constant(1, 2.0).is_err());
        assert!(dq_constant(1, 0.0).is_err());
        for d in 1..=3 {
            for q in [0.2, 1.0, 1.5, 1.99] {
                assert!(dq_constant(d, q).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn dq_is_continuous_in_q() {
        for d in 1..=2 {
            let mut q = 1.0;
            while q <= 1.9 {
                let a = dq_constant(d, q).unwrap();
                let b = dq_constant(d, q + 1e-6).unwrap();
                assert!(((a - b) / a).abs() < 1e-4);
                q += 0.05;
            }
        }
    }

    #[test]
    fn generalized_ft_examples() {
        assert!((generalized_ft(1, 1.0, &[1.0]).unwrap() + 2.0).abs() < 1e-12);
        assert!((generalized_ft(1, 1.0, &[2.0]).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(generalized_ft(1, 1.0, &[0.0]), Err(Error::SingularAtZero));
        assert!(generalized_ft(2, 1.5, &[0.3, -0.2]).unwrap() < 0.0);
    }

    #[test]
    fn triangular_kernel_values() {
        let k = EstimationKernel::Triangular;
        assert_eq!(k.eval(0.0), (1.0, 0.0));
        assert_eq!(k.eval(0.5), (0.5, -1.0));
        assert_eq!(k.eval(-0.5), (0.5, 1.0));
        assert_eq!(k.eval(2.0), (0.0, 0.0));
        assert_eq!(k.eval(1.0), (0.0, 0.0));
    }

    #[test]
    fn kernels_have_unit_mass_and_known_variation() {
        for k in [EstimationKernel::Triangular, EstimationKernel::Gaussian] {
            let r = k.support_radius();
            let n = 400_000;
            let h = 2.0 * r / n as f64;
            let (mut mass, mut var) = (0.0, 0.0);
            for i in 0..n {
                let x = -r + (i as f64 + 0.5) * h;
                let (v, dv) = k.eval(x);
                mass += v * h;
                var += dv.abs() * h;
            }
            assert!((mass - 1.0).abs() < 1e-6, "{k:?} mass {mass}");
            assert!((var - k.derivative_l1()).abs() < 1e-6, "{k:?} tv {var}");
        }
    }

    fn distinct_points() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, f64)> {
        (1usize..=3, 2usize..=6).prop_flat_map(|(d, n)| {
            (
                Just(d),
                prop::collection::vec(-3.0f64..3.0, n * d),
                prop::collection::vec(-1.0f64..1.0, n),
                1.0f64..1.99,
            )
        })
    }

    proptest! {
        #[test]
        fn conditionally_positive_definite((d, xs, mut alpha, q) in distinct_points()) {
            let n = alpha.len();
            let mean = alpha.iter().sum::<f64>() / n as f64;
            alpha.iter_mut().for_each(|a| *a -= mean);
            let mut form = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let diff: Vec<f64> = (0..d).map(|c| xs[j * d + c] - xs[k * d + c]).collect();
                    form -= alpha[j] * alpha[k] * power_eval(q, &diff);
                }
            }
            prop_assert!(form >= -1e-10, "form {}", form);
        }

        #[test]
        fn ft_homogeneity(x in 0.01f64..10.0, y in -10.0f64..10.0, t in 0.1f64..10.0, q in 1.0f64..1.99) {
            let a = generalized_ft(2, q, &[t * x, t * y]).unwrap();
            let b = t.powf(-2.0 - q) * generalized_ft(2, q, &[x, y]).unwrap();
            prop_assert!(((a - b) / b).abs() < 1e-12);
        }
    }
}
