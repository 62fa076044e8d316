use measquant::energy::{
    fourier_energy, grid_quadratic_matrix, particle_energy, particle_gradient, symmetrized_energy,
    target_self_energy, FourierQuadrature,
};
use measquant::kernels::PowerKernel;
use measquant::measure::{char_function, moment};
use measquant::solver::{minimize_grid, minimize_particles, Init, SolverConfig};
use measquant::{GridDensity, GridGeometry, ParticleMeasure};
use proptest::prelude::*;

fn points_1d(max: usize) -> impl Strategy<Value = ParticleMeasure> {
    prop::collection::vec(-3.0f64..3.0, 1..=max)
        .prop_map(|xs| ParticleMeasure::from_1d(&xs).unwrap())
}

fn points_2d(max: usize) -> impl Strategy<Value = ParticleMeasure> {
    prop::collection::vec(-3.0f64..3.0, 1..=max).prop_map(|xs| {
        ParticleMeasure::new(
            2,
            xs.iter().flat_map(|&x| [x, 0.37 * x * x - 1.0]).collect(),
        )
        .unwrap()
    })
}

fn grid_1d() -> impl Strategy<Value = GridDensity> {
    prop::collection::vec(0.0f64..5.0, 2..40).prop_filter_map("all-zero datum", |v| {
        let geo = GridGeometry::interval(-1.0, 2.0, v.len()).unwrap();
        GridDensity::normalized(geo, v).ok()
    })
}

fn min_gap(coords: &[f64], dim: usize) -> f64 {
    let n = coords.len() / dim;
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = (0..dim)
                .map(|k| (coords[i * dim + k] - coords[j * dim + k]).powi(2))
                .sum();
            gap = gap.min(d2.sqrt());
        }
    }
    gap
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn characteristic_function_is_bounded(mu in points_2d(12), w in grid_1d(), xi in -50.0f64..50.0, eta in -50.0f64..50.0) {
        prop_assert!(char_function(&mu, &[xi, eta]).unwrap().norm() <= 1.0 + 1e-12);
        prop_assert!(char_function(&w, &[xi]).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn zeroth_moment_is_one(mu in points_1d(20), w in grid_1d()) {
        prop_assert!((moment(&mu, 0.0).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((moment(&w, 0.0).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((w.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetrized_energy_is_nonnegative_and_shift_invariant(
        mu in points_2d(8),
        omega in points_2d(8),
        q in 1.0f64..2.0,
        t in prop::array::uniform2(-10.0f64..10.0),
    ) {
        let e = symmetrized_energy(&mu, &omega, q).unwrap();
        prop_assert!(e >= -1e-10);
        let shifted = symmetrized_energy(&mu.translated(&t).unwrap(), &omega.translated(&t).unwrap(), q).unwrap();
        prop_assert!((shifted - e).abs() <= 1e-10 * e.abs().max(1.0));
    }

    #[test]
    fn energy_splits_into_symmetrized_part_and_constant(mu in points_1d(8), omega in points_1d(8), q in 1.0f64..2.0) {
        let kernel = PowerKernel::symmetric(1, q).unwrap();
        let e = particle_energy(&mu, &omega, &kernel).unwrap().total;
        let s = symmetrized_energy(&mu, &omega, q).unwrap();
        prop_assert!((e - s - target_self_energy(&omega, q)).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences(mu in points_2d(6), omega in points_2d(6), qa in 1.0f64..2.0, qr in 1.0f64..2.0) {
        let all: Vec<f64> = mu.coords().iter().chain(omega.coords()).copied().collect();
        prop_assume!(mu.len() >= 2 && min_gap(&all, 2) > 1e-2);
        let kernel = PowerKernel::new(2, qa, qr).unwrap();
        let g = particle_gradient(&mu, &omega, &kernel).unwrap();
        let f = |c: Vec<f64>| particle_energy(&ParticleMeasure::new(2, c).unwrap(), &omega, &kernel).unwrap().total;
        let step = 1e-6;
        let (mut diff, mut norm) = (0.0, 0.0);
        for k in 0..g.len() {
            let mut p = mu.coords().to_vec();
            let mut m = p.clone();
            p[k] += step;
            m[k] -= step;
            let fd = (f(p) - f(m)) / (2.0 * step);
            diff += (fd - g[k]).powi(2);
            norm += g[k].powi(2);
        }
        prop_assert!(diff.sqrt() <= 1e-5 * norm.sqrt().max(1e-3), "{} vs {}", diff.sqrt(), norm.sqrt());
    }

    #[test]
    fn grid_solution_at_zero_lambda_is_stationary(w in grid_1d(), q in 1.0f64..1.9) {
        let (u, trace) = minimize_grid(&w, q, &SolverConfig::default()).unwrap();
        prop_assert!(trace.converged());
        let a = grid_quadratic_matrix(w.geometry(), q).unwrap();
        let diff: Vec<f64> = u.values().iter().zip(w.values()).map(|(x, y)| x - y).collect();
        let grad = a.mul(&diff);
        let scale = w.values().iter().cloned().fold(1.0, f64::max);
        prop_assert!(grad.iter().map(|g| 4.0 * g * g).sum::<f64>().sqrt() <= 1e-6 * scale);
    }

    #[test]
    fn seeded_particle_solves_are_reproducible(w in grid_1d(), n in 1usize..6, seed in any::<u64>()) {
        let kernel = PowerKernel::symmetric(1, 1.5).unwrap();
        let cfg = SolverConfig { init: Init::Random { seed }, max_iters: Some(200), ..Default::default() };
        let a = minimize_particles(&w, n, &kernel, &cfg).unwrap();
        let b = minimize_particles(&w, n, &kernel, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fourier_energy_is_nonnegative_and_matches_spatial_form(mu in points_1d(6), omega in points_1d(6), q in 1.0f64..1.8) {
        let kernel = PowerKernel::symmetric(1, q).unwrap();
        let f = fourier_energy(&mu, &omega, &kernel, &FourierQuadrature::default()).unwrap();
        let s = symmetrized_energy(&mu, &omega, q).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!((f - s).abs() <= 1e-3 * s.abs().max(1.0), "{} vs {}", f, s);
    }
}
