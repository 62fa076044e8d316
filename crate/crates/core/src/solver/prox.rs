//! Proximal maps used by the grid solver.

/// `argmin_x ½‖x - y‖² + λ Σ |x_{i+1} - x_i|`, by Condat's direct 1D algorithm (exact, `O(n)`
/// in practice).
pub fn tv1d_denoise(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    if lambda <= 0.0 {
        out.copy_from_slice(y);
        return out;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let (mut umin, mut umax) = (lambda, -lambda);
    let (mut vmin, mut vmax) = (y[0] - lambda, y[0] + lambda);
    let two_lambda = 2.0 * lambda;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                while k0 <= kminus {
                    out[k0] = vmin;
                    k0 += 1;
                }
                k = k0;
                kminus = k0;
                vmin = y[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                while k0 <= kplus {
                    out[k0] = vmax;
                    k0 += 1;
                }
                k = k0;
                kplus = k0;
                vmax = y[k0];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    out[k0] = vmin;
                    k0 += 1;
                }
                return out;
            }
        }
        umin += y[k + 1] - vmin;
        if umin < -lambda {
            while k0 <= kminus {
                out[k0] = vmin;
                k0 += 1;
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmin = y[k0];
            vmax = vmin + two_lambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        umax += y[k + 1] - vmax;
        if umax > lambda {
            while k0 <= kplus {
                out[k0] = vmax;
                k0 += 1;
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmax = y[k0];
            vmin = vmax - two_lambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= -lambda {
            kplus = k;
            vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
            umax = -lambda;
        }
    }
}

/// Euclidean projection onto `{u ≥ 0, Σ u = total}`.
///
/// Input that is already feasible (to `1e-12` relative in the sum) is returned unchanged.
pub fn simplex_projection(v: &[f64], total: f64) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if v.iter().all(|&x| x >= 0.0) && (sum - total).abs() <= 1e-12 * total {
        return v.to_vec();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - total) / (k + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Projected gradient on the dual `min ½‖y - Dᵀz‖², |z| ≤ λ`.
    fn tv_dual_oracle(y: &[f64], lambda: f64) -> Vec<f64> {
        let n = y.len();
        let mut z = vec![0.0; n.saturating_sub(1)];
        let primal = |z: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|j| {
                    let left = if j > 0 { z[j - 1] } else { 0.0 };
                    let right = if j + 1 < n { z[j] } else { 0.0 };
                    y[j] - (left - right)
                })
                .collect()
        };
        for _ in 0..200_000 {
            let x = primal(&z);
            for i in 0..z.len() {
                // ∂/∂z_i of ½‖y - Dᵀz‖² is -(D x)_i
                z[i] = (z[i] + 0.25 * (x[i + 1] - x[i])).clamp(-lambda, lambda);
            }
        }
        primal(&z)
    }

    #[test]
    fn tv_prox_small_cases() {
        assert_eq!(tv1d_denoise(&[3.0], 1.0), vec![3.0]);
        let x = tv1d_denoise(&[0.0, 10.0], 1.0);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 9.0).abs() < 1e-15);
        let x = tv1d_denoise(&[0.0, 1.0], 5.0);
        assert!(x.iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert_eq!(tv1d_denoise(&[1.0, -2.0, 4.0], 0.0), vec![1.0, -2.0, 4.0]);
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(simplex_projection(&[0.5, 0.5], 1.0), vec![0.5, 0.5]);
        assert_eq!(simplex_projection(&[2.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(simplex_projection(&[-1.0, -1.0], 1.0), vec![0.5, 0.5]);
        let p = simplex_projection(&[3.0, 1.0, -4.0], 2.0);
        assert_eq!(p, vec![2.0, 0.0, 0.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn tv_prox_matches_dual_oracle(y in prop::collection::vec(-5.0f64..5.0, 1..10), lambda in 0.01f64..3.0) {
            let x = tv1d_denoise(&y, lambda);
            let o = tv_dual_oracle(&y, lambda);
            for (a, b) in x.iter().zip(&o) {
                prop_assert!((a - b).abs() < 1e-7, "{:?} vs {:?}", x, o);
            }
        }

        #[test]
        fn tv_prox_preserves_mean(y in prop::collection::vec(-5.0f64..5.0, 1..40), lambda in 0.0f64..3.0) {
            let x = tv1d_denoise(&y, lambda);
            let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
            prop_assert!((sx - sy).abs() < 1e-10);
        }

        #[test]
        fn projection_of_feasible_point_is_identity(v in prop::collection::vec(0.0f64..10.0, 1..30), total in 0.1f64..100.0) {
            let s: f64 = v.iter().sum();
            prop_assume!(s > 0.0);
            let u: Vec<f64> = v.iter().map(|x| x * total / s).collect();
            let s2: f64 = u.iter().sum();
            prop_assume!((s2 - total).abs() <= 1e-12 * total);
            prop_assert_eq!(simplex_projection(&u, total), u);
        }

        #[test]
        fn projection_is_feasible_and_optimal(v in prop::collection::vec(-5.0f64..5.0, 1..20), total in 0.1f64..10.0) {
            let p = simplex_projection(&v, total);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - total).abs() < 1e-9 * total.max(1.0));
            // first-order optimality: v - p = τ on the support and ≤ τ off it
            let tau = v.iter().zip(&p).find(|(_, &b)| b > 0.0).map(|(a, b)| a - b).unwrap();
            for (a, b) in v.iter().zip(&p) {
                if *b > 0.0 {
                    prop_assert!((a - b - tau).abs() < 1e-9);
                } else {
                    prop_assert!(*a <= tau + 1e-9);
                }
            }
        }
    }
}
