use proptest::prelude::*;

use selfsim::eigensolve::{sturm_count, tridiag_cholesky, tridiag_eigs_all};
use selfsim::matrix::TridiagonalSymmetric;
use selfsim::operators::{
    boundary_functional, jacobi_bilinear_form, quadratic_form_sides, section, symmetry_defect,
    MatrixKind,
};
use selfsim::selfsim::{apply_g, weight_truncation, StepFunction};
use selfsim::spectral::{
    compute_spectrum, estimate_c_from, negative_mass_count, pencil_eigenpairs, Formulation,
};
use selfsim::SelfSimilarParams;

fn params() -> impl Strategy<Value = SelfSimilarParams> {
    (
        0.05f64..0.95,
        0.1f64..0.95,
        any::<bool>(),
        -2.0f64..2.0,
        0.1f64..2.0,
        any::<bool>(),
    )
        .prop_map(|(a, d_frac, negative, beta1, jump, flip)| {
            let d = d_frac / a.sqrt() * if negative { -1.0 } else { 1.0 };
            // choose β₂ so that d·β₁ + β₂ − β₁ = ±jump
            let target = if flip { -jump } else { jump };
            let beta2 = target + beta1 - d * beta1;
            SelfSimilarParams::new(a, d, beta1, beta2).unwrap()
        })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn similarity_deepens_truncation(p in params(), depth in 1usize..30) {
        let g = apply_g(&p, &StepFunction::self_similar(&p, depth));
        let deeper = StepFunction::self_similar(&p, depth + 1);
        prop_assert_eq!(g.gaps(), deeper.gaps());
        for (u, v) in g.values().iter().zip(deeper.values()) {
            prop_assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn jumps_are_masses(p in params(), n in 1usize..25) {
        let w = weight_truncation(&p, n).unwrap();
        let f = StepFunction::self_similar(&p, n);
        for k in 0..n {
            let jump = f.values()[k + 1] - f.values()[k];
            prop_assert!((jump - w.masses()[k]).abs() <= 1e-12 * w.masses()[k].abs().max(1.0));
        }
    }

    #[test]
    fn sturm_count_is_monotone(
        diag in prop::collection::vec(-10.0f64..10.0, 1..12),
        off in prop::collection::vec(-5.0f64..5.0, 11),
        mut probes in prop::collection::vec(-40.0f64..40.0, 2..40),
    ) {
        let n = diag.len();
        let t = TridiagonalSymmetric::new(diag, off[..n - 1].to_vec()).unwrap();
        probes.sort_by(f64::total_cmp);
        let counts: Vec<usize> = probes.iter().map(|x| sturm_count(&t, *x)).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(counts.iter().all(|c| *c <= n));
    }

    #[test]
    fn bisection_eigenvalues_sum_to_trace(
        diag in prop::collection::vec(-10.0f64..10.0, 1..12),
        off in prop::collection::vec(-5.0f64..5.0, 11),
    ) {
        let n = diag.len();
        let t = TridiagonalSymmetric::new(diag.clone(), off[..n - 1].to_vec()).unwrap();
        let e = tridiag_eigs_all(&t, 1e-15).unwrap().values;
        let trace: f64 = diag.iter().sum();
        let scale = t.norm_inf() * n as f64;
        prop_assert!((e.iter().sum::<f64>() - trace).abs() <= 1e-12 * scale);
        prop_assert!(e.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cholesky_reconstructs_stiffness(p in params(), n in 1usize..20) {
        let k = selfsim::operators::stiffness_matrix(&weight_truncation(&p, n).unwrap()).unwrap();
        let back = tridiag_cholesky(&k).unwrap().reconstruct();
        for (u, v) in back.diag().iter().zip(k.diag()) {
            prop_assert!(rel(*u, *v) <= 1e-13);
        }
        for (u, v) in back.offdiag().iter().zip(k.offdiag()) {
            prop_assert!(rel(*u, *v) <= 1e-13);
        }
    }

    #[test]
    fn jacobi_matrix_is_weighted_symmetric(
        p in params(),
        u in prop::collection::vec(-1.0f64..1.0, 1..10),
        v in prop::collection::vec(-1.0f64..1.0, 1..10),
    ) {
        let len = u.len().max(v.len());
        let n = len + 1;
        let mut u = u;
        let mut v = v;
        u.resize(len, 0.0);
        v.resize(len, 0.0);
        let m = section(&p, n, MatrixKind::ABinv).unwrap().matrix;
        let inv_d = 1.0 / p.d();
        let scale: f64 = (0..len)
            .map(|k| {
                let w = inv_d.powi(k as i32).abs() * m[(k, k + 1)].abs();
                let next = if k + 1 < len { u[k + 1].abs() * v[k].abs() + u[k].abs() * v[k + 1].abs() } else { 0.0 };
                w * next
            })
            .sum();
        let defect = symmetry_defect(&p, &u, &v, n).unwrap();
        prop_assert!(defect.abs() <= 1e-13 * scale + f64::MIN_POSITIVE);
        let uv = jacobi_bilinear_form(&p, &u, &v);
        let vu = jacobi_bilinear_form(&p, &v, &u);
        let mag = jacobi_bilinear_form(&p, &u.iter().map(|x| x.abs()).collect::<Vec<_>>(), &v.iter().map(|x| x.abs()).collect::<Vec<_>>()).abs()
            + scale;
        prop_assert!((uv - vu).abs() <= 1e-13 * mag);
    }

    #[test]
    fn section_product_leading_block(p in params(), n in 2usize..15) {
        let a = section(&p, n + 1, MatrixKind::A).unwrap().matrix;
        let binv = section(&p, n + 1, MatrixKind::Binv).unwrap().matrix;
        let prod = a.matmul(&binv);
        let target = section(&p, n, MatrixKind::ABinv).unwrap().matrix;
        for i in 0..n {
            for j in 0..n {
                let t = target[(i, j)];
                prop_assert!((prod[(i, j)] - t).abs() <= 1e-13 * t.abs().max(1.0));
            }
        }
    }

    #[test]
    fn fem_and_green_agree(p in params(), n in 1usize..14) {
        let fem = compute_spectrum(&p, n, Formulation::Fem, n).unwrap().eigenvalues;
        let green = compute_spectrum(&p, n, Formulation::Green, n).unwrap().eigenvalues;
        for (u, v) in fem.iter().zip(&green) {
            prop_assert!(rel(*v, *u) <= 1e-10, "{:?} vs {:?}", fem, green);
        }
    }

    #[test]
    fn inertia_follows_mass_signs(p in params(), n in 1usize..16) {
        let s = compute_spectrum(&p, n, Formulation::Fem, n).unwrap();
        prop_assert_eq!(s.inertia().0, negative_mass_count(&p, n).unwrap());
    }

    #[test]
    fn eigenpairs_satisfy_energy_identity(p in params(), n in 1usize..12) {
        for pair in pencil_eigenpairs(&p, n).unwrap() {
            let (lhs, rhs) = quadratic_form_sides(&p, &pair.slopes, pair.lambda, n);
            prop_assert!(rel(rhs, lhs) <= 1e-9);
            prop_assert!(boundary_functional(&p, &pair.slopes).abs() <= 1e-9);
        }
    }

    #[test]
    fn geometric_sequences_fit_exactly(c in 0.01f64..100.0, q in 1.5f64..20.0, len in 1usize..15) {
        let values: Vec<f64> = (1..=len).map(|k| c * q.powi(k as i32)).collect();
        let r = estimate_c_from(&values, q, (1, len)).unwrap();
        prop_assert!(rel(r.c_estimate, c) <= 1e-13);
        prop_assert!(r.max_rel_dispersion <= 1e-13);
    }
}
