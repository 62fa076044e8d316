use crate::kernels::{dq_constant, PowerKernel};
use crate::measure::{MeasureRef, Nodes};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierRule {
    /// Trapezoid in `ln|ξ|` on the half line, doubled by symmetry.
    LogTrapezoid1d,
    /// Trapezoid in `ln|ξ|` times a uniform angular trapezoid.
    PolarLog2d,
}

/// Truncation and resolution of the frequency integral.
///
/// The radial range `[xi_min, xi_max]` is split into decades. Each decade gets at least
/// `nodes_per_decade` log-spaced nodes, refined to `points_per_period` nodes per oscillation
/// of the integrand (whose frequency is set by the diameter of the two supports), up to
/// `max_nodes_per_decade`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierQuadrature {
    pub xi_min: f64,
    pub xi_max: f64,
    pub nodes_per_decade: usize,
    pub points_per_period: usize,
    pub max_nodes_per_decade: usize,
    pub angular_nodes: usize,
}

impl Default for FourierQuadrature {
    fn default() -> Self {
        Self {
            xi_min: 1e-6,
            xi_max: 1e6,
            nodes_per_decade: 32,
            points_per_period: 16,
            max_nodes_per_decade: 20_000,
            angular_nodes: 64,
        }
    }
}

impl FourierQuadrature {
    pub fn rule_for(dim: usize) -> Result<FourierRule> {
        match dim {
            1 => Ok(FourierRule::LogTrapezoid1d),
            2 => Ok(FourierRule::PolarLog2d),
            d => Err(Error::UnsupportedDim(d)),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.xi_min > 0.0 && self.xi_min < self.xi_max && self.xi_max.is_finite()) {
            return Err(Error::Domain(format!(
                "frequency range [{}, {}] invalid",
                self.xi_min, self.xi_max
            )));
        }
        if self.nodes_per_decade < 8 {
            return Err(Error::Domain("nodes_per_decade must be at least 8".into()));
        }
        if self.angular_nodes == 0 || self.points_per_period == 0 {
            return Err(Error::Domain("node counts must be positive".into()));
        }
        Ok(())
    }

    /// Log-radial panels `(ln a, ln b, intervals)` for oscillation length scale `diam`.
    fn panels(&self, diam: f64) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        let mut a = self.xi_min;
        while a < self.xi_max {
            let b = (a * 10.0).min(self.xi_max);
            let frac = (b / a).log10();
            let base = (self.nodes_per_decade as f64 * frac).ceil() as usize;
            let osc = (self.points_per_period as f64 * (b - a) * diam / (2.0 * PI)).ceil() as usize;
            let n = base.max(osc.min(self.max_nodes_per_decade)).max(2);
            out.push((a.ln(), b.ln(), n));
            a = b;
        }
        out
    }
}

/// Merges atoms at identical positions so cancelling weights vanish exactly.
fn merge_atoms(nodes: &Nodes) -> Nodes {
    let d = nodes.dim;
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (nodes.point(i), nodes.point(j));
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut coords: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for i in order {
        let p = nodes.point(i);
        let same = !weights.is_empty() && &coords[coords.len() - d..] == p;
        if same {
            *weights.last_mut().unwrap() += nodes.weights[i];
        } else {
            coords.extend_from_slice(p);
            weights.push(nodes.weights[i]);
        }
    }
    let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
    Nodes {
        dim: d,
        coords: keep
            .iter()
            .flat_map(|&i| coords[i * d..(i + 1) * d].iter().copied())
            .collect(),
        weights: keep.iter().map(|&i| weights[i]).collect(),
    }
}

/// `|Σ α_j exp(-i z_j·ξ)|²`.
fn spectrum(nodes: &Nodes, xi: &[f64]) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for j in 0..nodes.len() {
        let phase: f64 = nodes.point(j).iter().zip(xi).map(|(z, k)| z * k).sum();
        let (s, c) = phase.sin_cos();
        re += nodes.weights[j] * c;
        im -= nodes.weights[j] * s;
    }
    re * re + im * im
}

/// `Ê = D_q ∫ |μ̂(ξ) - ω̂(ξ)|² |ξ|^{-d-q} dξ` by log-radial quadrature, `d ≤ 2`.
///
/// Grid measures enter through their midpoint-rule characteristic functions. The part of the
/// integral below `xi_min` is added in closed form from the `|ξ|²` behaviour of the integrand
/// at the origin; the part above `xi_max` is dropped.
pub fn fourier_energy<'a, 'b>(
    mu: impl Into<MeasureRef<'a>>,
    omega: impl Into<MeasureRef<'b>>,
    kernel: &PowerKernel,
    quad: &FourierQuadrature,
) -> Result<f64> {
    let (mu, omega) = (mu.into(), omega.into());
    let d = mu.dim();
    if omega.dim() != d {
        return Err(Error::DimMismatch {
            expected: d,
            found: omega.dim(),
        });
    }
    let rule = FourierQuadrature::rule_for(d)?;
    let q = kernel.fourier_exponent()?;
    quad.validate()?;
    let dq = dq_constant(d, q)?;

    let atoms = merge_atoms(&super::signed_nodes(&mu.nodes(), &omega.nodes()));
    if atoms.is_empty() {
        return Ok(0.0);
    }
    let diam = {
        let mut s = 0.0;
        for k in 0..d {
            let (lo, hi) = (0..atoms.len())
                .map(|j| atoms.point(j)[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(v), b.max(v))
                });
            s += (hi - lo).powi(2);
        }
        s.sqrt()
    };

    let directions: Vec<(f64, f64)> = match rule {
        FourierRule::LogTrapezoid1d => vec![(1.0, 0.0)],
        FourierRule::PolarLog2d => (0..quad.angular_nodes)
            .map(|k| (PI * k as f64 / quad.angular_nodes as f64).sin_cos())
            .map(|(s, c)| (c, s))
            .collect(),
    };
    // both half-lines in 1D; the half circle counted twice in 2D
    let angular_weight = match rule {
        FourierRule::LogTrapezoid1d => 2.0,
        FourierRule::PolarLog2d => 2.0 * PI / quad.angular_nodes as f64,
    };
    let mut xi = vec![0.0; d];
    let mut radial = |r: f64| -> f64 {
        let mut s = 0.0;
        for &(c, sn) in &directions {
            xi[0] = r * c;
            if d == 2 {
                xi[1] = r * sn;
            }
            s += spectrum(&atoms, &xi);
        }
        angular_weight * s * r.powf(-q)
    };

    let mut integral = 0.0;
    for (ta, tb, n) in quad.panels(diam) {
        let h = (tb - ta) / n as f64;
        let mut panel = 0.5 * (radial(ta.exp()) + radial(tb.exp()));
        for j in 1..n {
            panel += radial((ta + j as f64 * h).exp());
        }
        integral += panel * h;
    }
    // below xi_min the spectrum grows like |ξ|², so ∫_{-∞}^{ln xi_min} f dt = f(xi_min) / (2 - q)
    integral += radial(quad.xi_min) / (2.0 - q);
    Ok(dq * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::symmetrized_energy;
    use crate::measure::ParticleMeasure;

    fn pm(xs: &[f64]) -> ParticleMeasure {
        ParticleMeasure::from_1d(xs).unwrap()
    }

    #[test]
    fn identical_measures_have_zero_energy() {
        let x = pm(&[0.2, -0.4, 1.0]);
        let k = PowerKernel::symmetric(1, 1.5).unwrap();
        assert_eq!(
            fourier_energy(&x, &x, &k, &FourierQuadrature::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn two_diracs_unit_energy() {
        let k = PowerKernel::symmetric(1, 1.0).unwrap();
        let e =
            fourier_energy(&pm(&[0.0]), &pm(&[1.0]), &k, &FourierQuadrature::default()).unwrap();
        assert!((e - 1.0).abs() < 1e-3, "{e}");
        let e = fourier_energy(
            &pm(&[0.0, 1.0]),
            &pm(&[0.0]),
            &k,
            &FourierQuadrature::default(),
        )
        .unwrap();
        assert!((e - 0.25).abs() < 1e-3, "{e}");
    }

    #[test]
    fn two_dimensional_rule_tracks_spatial_form() {
        let mu = ParticleMeasure::from_points(2, &[[0.0, 0.0], [0.6, 0.3]]).unwrap();
        let omega = ParticleMeasure::from_points(2, &[[0.2, 0.1], [0.5, 0.7], [0.1, 0.4]]).unwrap();
        for q in [1.0, 1.5] {
            let k = PowerKernel::symmetric(2, q).unwrap();
            let quad = FourierQuadrature {
                max_nodes_per_decade: 4000,
                ..Default::default()
            };
            let f = fourier_energy(&mu, &omega, &k, &quad).unwrap();
            let s = symmetrized_energy(&mu, &omega, q).unwrap();
            assert!((f - s).abs() < 2e-2 * s, "q={q}: {f} vs {s}");
        }
    }

    #[test]
    fn rejects_unsupported_inputs() {
        let x3 = ParticleMeasure::from_points(3, &[[0.0, 0.0, 0.0]]).unwrap();
        let k3 = PowerKernel::symmetric(3, 1.0).unwrap();
        assert_eq!(
            fourier_energy(&x3, &x3, &k3, &FourierQuadrature::default()),
            Err(Error::UnsupportedDim(3))
        );
        let k = PowerKernel::new(1, 1.0, 1.5).unwrap();
        assert!(
            fourier_energy(&pm(&[0.0]), &pm(&[1.0]), &k, &FourierQuadrature::default()).is_err()
        );
        let bad = FourierQuadrature {
            nodes_per_decade: 4,
            ..Default::default()
        };
        let k = PowerKernel::symmetric(1, 1.0).unwrap();
        assert!(fourier_energy(&pm(&[0.0]), &pm(&[1.0]), &k, &bad).is_err());
    }
}
