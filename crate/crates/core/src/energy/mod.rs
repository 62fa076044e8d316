//! Attraction-repulsion energies of particle and grid measures.
//!
//! For a quantizer `x` and a target `ω`:
//!
//! ```text
//! V = (1/N) Σ_i ∫ |x_i - y|^qa dω(y)
//! W = -(1/2N²) Σ_{i,j} |x_i - x_j|^qr
//! E = V + W
//! ```
//!
//! With `qa = qr = q`, `E` differs from the symmetrized form
//! `Ẽ = -½ ∬ |x - y|^q d[μ-ω](x) d[μ-ω](y)` by the constant `½ ∬ |x - y|^q dω dω`, and `Ẽ`
//! equals the Fourier-side energy computed in [`fourier`].

mod fourier;

pub use fourier::{fourier_energy, FourierQuadrature, FourierRule};

use crate::kernels::PowerKernel;
use crate::measure::{GridGeometry, MeasureRef, Nodes, ParticleMeasure};
use crate::tv::TvMethod;
use crate::{Error, Result};
use serde::Serialize;

/// Pairs closer than this contribute a zero subgradient.
pub const EPS_SING: f64 = 1e-12;

/// Energy components of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub attraction: f64,
    pub repulsion: f64,
    pub total: f64,
    pub symmetrized: Option<f64>,
    pub fourier: Option<f64>,
    pub tv: Option<f64>,
    pub tv_method: Option<TvMethod>,
}

/// `|x|^q` evaluated from the squared norm, with fast paths for common exponents.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Power(f64);

impl Power {
    #[inline]
    pub(crate) fn value(self, r2: f64) -> f64 {
        match self.0 {
            q if q == 1.0 => r2.sqrt(),
            q if q == 2.0 => r2,
            q if q == 1.5 => {
                let r = r2.sqrt();
                r * r.sqrt()
            }
            q => r2.powf(0.5 * q),
        }
    }

    /// `q |x|^{q-2}`, the factor multiplying `x` in the gradient of `|x|^q`.
    #[inline]
    pub(crate) fn grad_factor(self, r2: f64) -> f64 {
        match self.0 {
            q if q == 1.0 => 1.0 / r2.sqrt(),
            q if q == 2.0 => 2.0,
            q if q == 1.5 => 1.5 / r2.sqrt().sqrt(),
            q => q * r2.powf(0.5 * q - 1.0),
        }
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimMismatch { expected, found });
    }
    Ok(())
}

/// Energy value and, on request, its gradient for a flat coordinate buffer.
///
/// This is the kernel behind [`particle_energy`], [`particle_gradient`] and the particle solver.
pub(crate) fn energy_terms(
    coords: &[f64],
    dim: usize,
    target: &Nodes,
    kernel: &PowerKernel,
    mut grad: Option<&mut [f64]>,
) -> (f64, f64) {
    let n = coords.len() / dim;
    let inv_n = 1.0 / n as f64;
    let (pa, pr) = (Power(kernel.q_a), Power(kernel.q_r));
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let eps2 = EPS_SING * EPS_SING;

    let mut attraction = 0.0;
    for i in 0..n {
        let xi = &coords[i * dim..(i + 1) * dim];
        let mut acc = 0.0;
        for k in 0..target.len() {
            let yk = target.point(k);
            let w = target.weights[k];
            let r2 = dist2(xi, yk);
            acc += w * pa.value(r2);
            if let Some(g) = grad.as_deref_mut() {
                if r2 > eps2 {
                    let f = w * pa.grad_factor(r2) * inv_n;
                    for c in 0..dim {
                        g[i * dim + c] += f * (xi[c] - yk[c]);
                    }
                }
            }
        }
        attraction += acc;
    }
    attraction *= inv_n;

    let mut pair_sum = 0.0;
    let rep_scale = inv_n * inv_n;
    for i in 0..n {
        let xi = &coords[i * dim..(i + 1) * dim];
        for j in (i + 1)..n {
            let xj = &coords[j * dim..(j + 1) * dim];
            let r2 = dist2(xi, xj);
            pair_sum += pr.value(r2);
            if let Some(g) = grad.as_deref_mut() {
                if r2 > eps2 {
                    let f = pr.grad_factor(r2) * rep_scale;
                    for c in 0..dim {
                        let d = f * (xi[c] - xj[c]);
                        g[i * dim + c] -= d;
                        g[j * dim + c] += d;
                    }
                }
            }
        }
    }
    // each unordered pair appears twice in the full double sum
    let repulsion = -pair_sum * rep_scale;
    (attraction, repulsion)
}

/// `V`, `W` and `E = V + W` of the quantizer `x` against the target `omega`.
pub fn particle_energy<'a>(
    x: &ParticleMeasure,
    omega: impl Into<MeasureRef<'a>>,
    kernel: &PowerKernel,
) -> Result<EnergyReport> {
    let omega = omega.into();
    check_dims(x.dim(), omega.dim())?;
    check_dims(kernel.dim, x.dim())?;
    let (attraction, repulsion) = energy_terms(x.coords(), x.dim(), &omega.nodes(), kernel, None);
    Ok(EnergyReport {
        attraction,
        repulsion,
        total: attraction + repulsion,
        symmetrized: None,
        fourier: None,
        tv: None,
        tv_method: None,
    })
}

/// `∂E/∂x_i` for every particle, flattened row-major.
pub fn particle_gradient<'a>(
    x: &ParticleMeasure,
    omega: impl Into<MeasureRef<'a>>,
    kernel: &PowerKernel,
) -> Result<Vec<f64>> {
    let omega = omega.into();
    check_dims(x.dim(), omega.dim())?;
    check_dims(kernel.dim, x.dim())?;
    let mut g = vec![0.0; x.coords().len()];
    energy_terms(x.coords(), x.dim(), &omega.nodes(), kernel, Some(&mut g));
    Ok(g)
}

/// Signed atoms of `μ - ω`.
pub(crate) fn signed_nodes(mu: &Nodes, omega: &Nodes) -> Nodes {
    let mut coords = mu.coords.clone();
    coords.extend_from_slice(&omega.coords);
    let mut weights = mu.weights.clone();
    weights.extend(omega.weights.iter().map(|w| -w));
    Nodes {
        dim: mu.dim,
        coords,
        weights,
    }
}

/// `-½ Σ_{j,k} α_j α_k |z_j - z_k|^q` over weighted nodes.
pub(crate) fn quadratic_form(nodes: &Nodes, q: f64) -> f64 {
    let p = Power(q);
    let mut acc = 0.0;
    for j in 0..nodes.len() {
        let zj = nodes.point(j);
        let mut row = 0.0;
        for k in (j + 1)..nodes.len() {
            row += nodes.weights[k] * p.value(dist2(zj, nodes.point(k)));
        }
        acc += nodes.weights[j] * row;
    }
    -acc
}

/// Symmetrized energy `Ẽ` of `μ` against `ω`; both must share a representation.
pub fn symmetrized_energy<'a, 'b>(
    mu: impl Into<MeasureRef<'a>>,
    omega: impl Into<MeasureRef<'b>>,
    q: f64,
) -> Result<f64> {
    let (mu, omega) = (mu.into(), omega.into());
    check_dims(mu.dim(), omega.dim())?;
    if mu.representation() != omega.representation() {
        return Err(Error::MixedRepresentation);
    }
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} not in [1, 2]")));
    }
    Ok(quadratic_form(
        &signed_nodes(&mu.nodes(), &omega.nodes()),
        q,
    ))
}

/// `C = ½ ∬ |x - y|^q dω dω`, the offset between `E` and `Ẽ`.
pub fn target_self_energy<'a>(omega: impl Into<MeasureRef<'a>>, q: f64) -> f64 {
    -quadratic_form(&omega.into().nodes(), q)
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mul_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_into(v, &mut out);
        out
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// `A_ij = -½ h² |c_i - c_j|^q` on a 1D grid with centers `c_i` and cell length `h`.
///
/// For density vectors `u`, `w`, `(u - w)ᵀ A (u - w)` is the midpoint discretization of `Ẽ`.
pub fn grid_quadratic_matrix(grid: &GridGeometry, q: f64) -> Result<SymmetricMatrix> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDim(grid.dim()));
    }
    let n = grid.cells()[0];
    let h = grid.cell_width(0);
    let p = Power(q);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = (i as f64 - j as f64) * h;
            data[i * n + j] = -0.5 * h * h * p.value(d * d);
        }
    }
    Ok(SymmetricMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{GridDensity, GridGeometry};
    use proptest::prelude::*;

    fn pm(xs: &[f64]) -> ParticleMeasure {
        ParticleMeasure::from_1d(xs).unwrap()
    }

    #[test]
    fn coincident_singleton_has_zero_energy() {
        let d0 = pm(&[0.0]);
        for q in [1.0, 1.5, 2.0] {
            let k = PowerKernel::symmetric(1, q).unwrap();
            let e = particle_energy(&d0, &d0, &k).unwrap();
            assert_eq!((e.attraction, e.repulsion, e.total), (0.0, 0.0, 0.0));
            assert_eq!(particle_gradient(&d0, &d0, &k).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn two_point_hand_sums() {
        let x = pm(&[0.0, 1.0]);
        let k = PowerKernel::symmetric(1, 1.0).unwrap();
        let e = particle_energy(&x, &x, &k).unwrap();
        assert!((e.attraction - 0.5).abs() < 1e-15);
        assert!((e.repulsion + 0.25).abs() < 1e-15);
        assert!((e.total - 0.25).abs() < 1e-15);
    }

    #[test]
    fn quadratic_attraction_gradient() {
        let x = pm(&[0.3]);
        let k = PowerKernel::new(1, 2.0, 1.5).unwrap();
        let g = particle_gradient(&x, &pm(&[0.0]), &k).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let x = pm(&[0.0]);
        let y = ParticleMeasure::from_points(2, &[[0.0, 0.0]]).unwrap();
        let k = PowerKernel::symmetric(1, 1.0).unwrap();
        assert!(particle_energy(&x, &y, &k).is_err());
        assert!(particle_gradient(&x, &y, &k).is_err());
    }

    #[test]
    fn symmetrized_examples() {
        let d0 = pm(&[0.0]);
        let d1 = pm(&[1.0]);
        let two = pm(&[0.0, 1.0]);
        assert_eq!(symmetrized_energy(&two, &two, 1.0).unwrap(), 0.0);
        assert!((symmetrized_energy(&d0, &d1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((symmetrized_energy(&two, &d0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let g = GridDensity::uniform(GridGeometry::interval(0.0, 1.0, 8).unwrap());
        assert_eq!(
            symmetrized_energy(&two, &g, 1.0),
            Err(Error::MixedRepresentation)
        );
        assert!(symmetrized_energy(&g, &g, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn quadratic_matrix_examples() {
        let geo = GridGeometry::interval(-0.5, 1.5, 2).unwrap();
        let a = grid_quadratic_matrix(&geo, 1.0).unwrap();
        assert!((a.quad_form(&[1.0, -1.0]) - 1.0).abs() < 1e-15);
        assert!((a.quad_form(&[1.0, 1.0]) + 1.0).abs() < 1e-15);
        let geo2 = GridGeometry::rect([0.0, 0.0], [1.0, 1.0], [2, 2]).unwrap();
        assert_eq!(
            grid_quadratic_matrix(&geo2, 1.0),
            Err(Error::UnsupportedDim(2))
        );
    }

    #[test]
    fn quadratic_matrix_matches_grid_symmetrized_energy() {
        let geo = GridGeometry::interval(0.0, 1.0, 32).unwrap();
        let u = GridDensity::from_fn(geo.clone(), |x| 1.0 + x[0]).unwrap();
        let w = GridDensity::uniform(geo.clone());
        let a = grid_quadratic_matrix(&geo, 1.5).unwrap();
        let diff: Vec<f64> = u
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a - b)
            .collect();
        let s = symmetrized_energy(&u, &w, 1.5).unwrap();
        assert!((a.quad_form(&diff) - s).abs() < 1e-14);
    }

    fn central_fd(
        x: &ParticleMeasure,
        omega: MeasureRef<'_>,
        k: &PowerKernel,
        step: f64,
    ) -> Vec<f64> {
        let mut out = Vec::new();
        for c in 0..x.coords().len() {
            let mut plus = x.coords().to_vec();
            let mut minus = x.coords().to_vec();
            plus[c] += step;
            minus[c] -= step;
            let ep =
                particle_energy(&ParticleMeasure::new(x.dim(), plus).unwrap(), omega, k).unwrap();
            let em =
                particle_energy(&ParticleMeasure::new(x.dim(), minus).unwrap(), omega, k).unwrap();
            out.push((ep.total - em.total) / (2.0 * step));
        }
        out
    }

    #[test]
    fn gradient_matches_finite_differences_2d() {
        let x = ParticleMeasure::from_points(2, &[[0.1, 0.2], [0.7, 0.4], [0.35, 0.9]]).unwrap();
        let omega =
            ParticleMeasure::from_points(2, &[[0.0, 0.0], [1.0, 0.5], [0.2, 0.6], [0.5, 0.5]])
                .unwrap();
        let k = PowerKernel::new(2, 1.5, 1.2).unwrap();
        let g = particle_gradient(&x, &omega, &k).unwrap();
        let fd = central_fd(&x, (&omega).into(), &k, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1e-3), "{a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn decomposition_and_translation(
            xs in prop::collection::vec(-2.0f64..2.0, 1..7),
            ys in prop::collection::vec(-2.0f64..2.0, 1..7),
            q in 1.0f64..2.0,
            t in -5.0f64..5.0,
        ) {
            let (x, y) = (pm(&xs), pm(&ys));
            let k = PowerKernel::symmetric(1, q).unwrap();
            let e = particle_energy(&x, &y, &k).unwrap();
            prop_assert!(((e.attraction + e.repulsion) - e.total).abs() <= 1e-12 * e.total.abs().max(1.0));
            let s = symmetrized_energy(&x, &y, q).unwrap();
            let c = target_self_energy(&y, q);
            prop_assert!((e.total - s - c).abs() < 1e-9);
            prop_assert!(s >= -1e-10);
            let s_shift = symmetrized_energy(&x.translated(&[t]).unwrap(), &y.translated(&[t]).unwrap(), q).unwrap();
            prop_assert!((s - s_shift).abs() < 1e-10);
        }
    }
}
