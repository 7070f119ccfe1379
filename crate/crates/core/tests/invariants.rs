use ndarray::Array2;
use proptest::prelude::*;

use orthofact::datagen::{generate_instance, generate_orthonormal_factor, read_matrix, write_matrix, InstanceKind};
use orthofact::model::{
    frobenius_norm, grad_g, grad_h, infeas_bi, infeas_uni, penalized_objective, rse, FactorPair, NonNegMatrix,
    Orthogonality, ProblemSpec,
};
use orthofact::solver::ding::{ding_step_bi, ding_step_uni};
use orthofact::solver::mirzal::{guard_factor, mirzal_update_g, mirzal_update_h};
use orthofact::solver::pg::{project_nonneg, projected_gradient};

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

/// Non-negative `(R, G, H)` with shapes `m×n`, `m×p`, `p×n`.
fn triple(m: usize, n: usize, p: usize) -> impl Strategy<Value = (Array2<f64>, Array2<f64>, Array2<f64>)> {
    (matrix(m, n, 0.0, 2.0), matrix(m, p, 0.0, 1.5), matrix(p, n, 0.0, 1.5))
}

fn sparse(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..2.0f64], rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn spec(r: &Array2<f64>, p: usize, alpha: f64, beta: f64) -> ProblemSpec {
    ProblemSpec::new(NonNegMatrix::new(r.clone()).unwrap(), p, Orthogonality::Bi, alpha, beta).unwrap()
}

fn pair(g: &Array2<f64>, h: &Array2<f64>) -> FactorPair {
    FactorPair::new(NonNegMatrix::new(g.clone()).unwrap(), NonNegMatrix::new(h.clone()).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_nonnegative((r, g, h) in triple(5, 4, 2)) {
        prop_assert!(rse(&r, &g, &h).unwrap() >= 0.0);
        prop_assert!(infeas_uni(&g) >= 0.0);
        prop_assert!(infeas_bi(&g, &h).unwrap() >= infeas_uni(&g));
    }

    #[test]
    fn unpenalized_objective_is_half_squared_residual((r, g, h) in triple(5, 4, 2)) {
        let f = penalized_objective(&spec(&r, 2, 0.0, 0.0), &pair(&g, &h)).unwrap();
        let res = frobenius_norm(&(&r - &g.dot(&h)));
        prop_assert!((f - 0.5 * res * res).abs() <= 1e-12 * f.max(1.0));
    }

    #[test]
    fn gradients_match_central_differences(
        (r, g, h) in triple(5, 4, 2),
        alpha in prop_oneof![Just(0.0), Just(1.0), Just(10.0)],
        beta in prop_oneof![Just(0.0), Just(1.0), Just(10.0)],
    ) {
        let s = spec(&r, 2, alpha, beta);
        let step = 1e-6;
        // Shifted up so that perturbed points stay non-negative.
        let (g0, h0) = (&g + 2.0 * step, &h + 2.0 * step);
        let fp0 = pair(&g0, &h0);
        let (dg, dh) = (grad_g(&s, &fp0).unwrap(), grad_h(&s, &fp0).unwrap());
        let f = |g: &Array2<f64>, h: &Array2<f64>| penalized_objective(&s, &pair(g, h)).unwrap();
        for idx in ndarray::indices(g0.dim()) {
            let (mut p, mut m) = (g0.clone(), g0.clone());
            p[idx] += step;
            m[idx] -= step;
            let fd = (f(&p, &h0) - f(&m, &h0)) / (2.0 * step);
            if dg[idx].abs() > 1e-8 {
                prop_assert!((fd - dg[idx]).abs() / dg[idx].abs().max(1.0) < 1e-5, "G{idx:?}: {fd} vs {}", dg[idx]);
            }
        }
        for idx in ndarray::indices(h0.dim()) {
            let (mut p, mut m) = (h0.clone(), h0.clone());
            p[idx] += step;
            m[idx] -= step;
            let fd = (f(&g0, &p) - f(&g0, &m)) / (2.0 * step);
            if dh[idx].abs() > 1e-8 {
                prop_assert!((fd - dh[idx]).abs() / dh[idx].abs().max(1.0) < 1e-5, "H{idx:?}: {fd} vs {}", dh[idx]);
            }
        }
    }

    #[test]
    fn evaluation_is_pure((r, g, h) in triple(4, 4, 3), beta in 0.0..5.0f64) {
        let s = spec(&r, 3, beta, beta);
        let fp = pair(&g, &h);
        prop_assert_eq!(penalized_objective(&s, &fp).unwrap().to_bits(), penalized_objective(&s, &fp).unwrap().to_bits());
        prop_assert_eq!(grad_g(&s, &fp).unwrap(), grad_g(&s, &fp).unwrap());
    }

    #[test]
    fn projection_properties(x in sparse(3, 4), grad in matrix(3, 4, -2.0, 2.0)) {
        let pg = projected_gradient(&x, &grad);
        for ((&xi, &gi), &pi) in x.iter().zip(grad.iter()).zip(pg.iter()) {
            if xi > 0.0 {
                prop_assert_eq!(pi, gi);
            } else {
                prop_assert_eq!(pi, gi.min(0.0));
            }
        }
        let shifted = &x - &grad;
        let proj = project_nonneg(&shifted);
        prop_assert!(proj.iter().all(|&v| v >= 0.0));
        prop_assert_eq!(project_nonneg(&proj), proj);
    }

    #[test]
    fn guard_never_lowers_entries(m in sparse(4, 3), grad in matrix(4, 3, -1.0, 1.0)) {
        let out = guard_factor(&m, &grad, 1e-8);
        for ((&a, &b), &d) in m.iter().zip(out.iter()).zip(grad.iter()) {
            prop_assert!(b >= a);
            if d >= 0.0 {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn ding_keeps_sign_and_zero_pattern((r, _, _) in triple(6, 5, 2), g in sparse(6, 2), h in sparse(2, 5)) {
        for step in [ding_step_bi, ding_step_uni] {
            let (g2, h2) = step(&r, &g, &h, 1e-9).unwrap();
            prop_assert!(g2.iter().chain(h2.iter()).all(|&v| v >= 0.0 && v.is_finite()));
            prop_assert!(g.iter().zip(g2.iter()).all(|(&a, &b)| a != 0.0 || b == 0.0));
            prop_assert!(h.iter().zip(h2.iter()).all(|(&a, &b)| a != 0.0 || b == 0.0));
        }
    }

    #[test]
    fn mirzal_updates_stay_feasible_and_descend((r, g, h) in triple(5, 4, 2), beta in 0.0..20.0f64) {
        let s = spec(&r, 2, beta, beta);
        let before = penalized_objective(&s, &pair(&g, &h)).unwrap();
        let ug = mirzal_update_g(&r, &g, &h, beta, 1e-8, 1e-9, 10.0, 64);
        prop_assert!(ug.factor.iter().all(|&v| v >= 0.0));
        let mid = penalized_objective(&s, &pair(&ug.factor, &h)).unwrap();
        if ug.accepted {
            prop_assert!(mid <= before + 1e-10 * before.max(1.0));
        }
        let uh = mirzal_update_h(&r, &ug.factor, &h, beta, 1e-8, 1e-9, 10.0, 64);
        prop_assert!(uh.factor.iter().all(|&v| v >= 0.0));
        let after = penalized_objective(&s, &pair(&ug.factor, &uh.factor)).unwrap();
        if uh.accepted {
            prop_assert!(after <= mid + 1e-10 * mid.max(1.0));
        }
    }

    #[test]
    fn generated_factors_have_disjoint_unit_columns(rows in 2usize..40, frac in 0.05..1.0f64, seed: u64) {
        let cols = ((rows as f64 * frac) as usize).clamp(1, rows);
        let g = generate_orthonormal_factor(rows, cols, seed).unwrap();
        prop_assert!(g.as_array().iter().all(|&v| v >= 0.0));
        for row in g.as_array().rows() {
            prop_assert_eq!(row.iter().filter(|&&v| v != 0.0).count(), 1);
        }
        let gram = g.as_array().t().dot(g.as_array());
        prop_assert!(frobenius_norm(&(gram - Array2::<f64>::eye(cols))) < 1e-12);
        prop_assert_eq!(generate_orthonormal_factor(rows, cols, seed).unwrap(), g);
    }

    #[test]
    fn instances_are_exact_and_deterministic(k in 1usize..8, extra in 0usize..10, seed: u64, bion: bool) {
        let n = 2 * k + extra;
        let kind = if bion { InstanceKind::Bion } else { InstanceKind::Union };
        let t = generate_instance(n, k, kind, 1, seed).unwrap();
        prop_assert!(rse(t.r.as_array(), t.g_true.as_array(), t.h_true.as_array()).unwrap() < 1e-14);
        prop_assert!(infeas_uni(t.g_true.as_array()) < 1e-12);
        if bion {
            prop_assert!(infeas_bi(t.g_true.as_array(), t.h_true.as_array()).unwrap() < 1e-12);
        } else {
            prop_assert!(t.h_true.as_array().iter().all(|&v| v > 0.0));
        }
        prop_assert_eq!(generate_instance(n, k, kind, 1, seed).unwrap(), t);
    }

    #[test]
    fn matrix_files_round_trip_exactly(m in matrix(3, 5, 0.0, 1e6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        write_matrix(&path, &m).unwrap();
        prop_assert_eq!(read_matrix(&path).unwrap(), m);
    }
}
