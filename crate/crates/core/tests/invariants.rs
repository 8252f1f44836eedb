use levinson_core::potentials::{Potential, Shape};
use levinson_core::smatrix::{build_phase_curve, geometric_grid};
use levinson_core::solver::{self, SolverOptions};
use proptest::prelude::*;

fn gaussian_pair() -> impl Strategy<Value = Potential> {
    (
        -4.0..2.0f64,
        -2.0..2.0f64,
        0.3..1.5f64,
        -4.0..2.0f64,
        -2.0..2.0f64,
        0.3..1.5f64,
    )
        .prop_map(|(a1, c1, w1, a2, c2, w2)| {
            Potential::composite(vec![
                Shape::Gaussian { amplitude: a1, center: c1, width: w1 },
                Shape::Gaussian { amplitude: a2, center: c2, width: w2 },
            ])
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unitarity_and_time_reversal(p in gaussian_pair(), k in 0.01..20.0f64) {
        let s = solver::solve(&p, k, &SolverOptions::default()).unwrap();
        prop_assert!(s.unitarity_residual() < 1e-6);
        prop_assert!(s.time_reversal_residual() < 1e-6);
        // |b| = |b̃| follows from the two above
        prop_assert!((s.b.norm() - s.b_z.norm()).abs() < 1e-6);
    }

    #[test]
    fn mirror_swaps_channels(p in gaussian_pair(), k in 0.05..10.0f64) {
        let o = SolverOptions::default();
        let s = solver::solve(&p, k, &o).unwrap();
        let m = solver::solve(&p.mirrored(), k, &o).unwrap();
        prop_assert!((s.t - m.t).norm() < 1e-8);
        prop_assert!((s.b - m.b_z).norm() < 1e-8);
        prop_assert!((s.b_z - m.b).norm() < 1e-8);
    }

    #[test]
    fn determinant_is_a_pure_phase(p in gaussian_pair()) {
        let c = build_phase_curve(&p, &geometric_grid(0.01, 30.0, 80), &Default::default()).unwrap();
        for i in 0..c.len() {
            prop_assert!((c.smatrix(i).det().norm() - 1.0).abs() < 1e-6);
        }
        prop_assert!(c.det_residuals().iter().all(|&r| r < 1e-5));
    }

    #[test]
    fn mirror_symmetry_of_evaluation(p in gaussian_pair(), x in -5.0..5.0f64) {
        prop_assert_eq!(p.mirrored().evaluate(-x), p.evaluate(x));
    }
}

#[test]
fn transfer_matrix_is_unimodular() {
    let u = |x: f64| -2.0 / x.cosh().powi(2);
    let m = solver::transfer_matrix(&u, 0.7, -8.0, 8.0, 2000);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    assert!((det - 1.0).abs() < 1e-12);
}
