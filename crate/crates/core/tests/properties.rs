use guard_core::assignment::{
    solve_assignment, solve_assignment_bisection, verify_assignment, Regime, RewardMatrix,
};
use guard_core::dynamics::double_integrator_engagement;
use guard_core::rollout::{saturate, INFEASIBLE_REWARD};
use guard_core::weights::{build_terminal_weight, EmphasisVector};
use nalgebra::DVector;
use proptest::prelude::*;

fn reward_instance() -> impl Strategy<Value = (usize, usize, Vec<Vec<f64>>)> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(m, n)| {
        let cols = (1 << m) - 1;
        let cell = prop_oneof![
            1 => Just(INFEASIBLE_REWARD),
            6 => (0u32..30).prop_map(|v| f64::from(v) * 100.0),
        ];
        (Just(m), Just(n), prop::collection::vec(prop::collection::vec(cell, cols), n))
    })
}

proptest! {
    #[test]
    fn branch_and_bound_agrees_with_bisection((m, n, values) in reward_instance()) {
        let r = RewardMatrix::from_values(m, values).unwrap();
        let regime = Regime::for_counts(m, n);
        let exact = solve_assignment(&r, m, n);
        let bisect = solve_assignment_bisection(&r, m, n, regime);
        match (exact, bisect) {
            (Ok(s), Ok(v)) => {
                prop_assert_eq!(s.objective, v);
                let report = verify_assignment(&s.z, &r, m, n, regime);
                prop_assert!(report.is_valid(), "{:?}", report.violations);
                prop_assert_eq!(report.objective, Some(s.objective));
                prop_assert_eq!(s.sentinel_objective, s.objective <= INFEASIBLE_REWARD);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "solvers disagree: {:?} vs {:?}", a.map(|s| s.objective), b),
        }
    }

    #[test]
    fn terminal_weight_scales_and_ignores_velocity(
        m in 1usize..=3,
        c in 0.01f64..100.0,
        d in prop::collection::vec(0.1f64..50.0, 4),
        x in prop::collection::vec(-1e3f64..1e3, 30),
        dv in prop::collection::vec(-1e3f64..1e3, 30),
    ) {
        let n_x = 6;
        let dim = (m + 2) * n_x;
        let d = EmphasisVector::new(d[..=m].to_vec()).unwrap();
        let scaled = EmphasisVector::new(d.values().iter().map(|v| v * c).collect()).unwrap();
        let q = build_terminal_weight(&d, 20.0, m, n_x).unwrap();
        let qc = build_terminal_weight(&scaled, 20.0, m, n_x).unwrap();
        prop_assert!((&qc - &q * c).norm() <= 1e-12 * qc.norm());
        prop_assert!((&q - q.transpose()).norm() <= 1e-12 * q.norm());

        let x = DVector::from_column_slice(&x[..dim]);
        let mut y = x.clone();
        for g in 0..m + 2 {
            for k in 3..6 {
                y[g * n_x + k] += dv[g * n_x + k];
            }
        }
        let (fx, fy) = ((x.transpose() * &q * &x)[0], (y.transpose() * &q * &y)[0]);
        prop_assert!((fx - fy).abs() <= 1e-9 * fx.abs().max(1.0));
    }

    #[test]
    fn saturation_is_bounded_and_idempotent(
        cmd in prop::collection::vec(-1e5f64..1e5, 1..8),
        limit in 0.0f64..1e4,
    ) {
        let c = DVector::from_vec(cmd.clone());
        let s = saturate(&c, limit);
        prop_assert!(s.iter().all(|v| v.abs() <= limit));
        prop_assert_eq!(&saturate(&s, limit), &s);
        for (orig, sat) in cmd.iter().zip(s.iter()) {
            if orig.abs() <= limit {
                prop_assert_eq!(orig, sat);
            }
        }
    }

    #[test]
    fn step_is_linear(
        m in 1usize..=3,
        a in -10f64..10.0,
        seed in prop::collection::vec(-100f64..100.0, 60),
    ) {
        let sys = double_integrator_engagement(0.005, 3, m).unwrap();
        let n = sys.state_dim();
        let nu = sys.team_input_dim();
        let pick = |off: usize, len: usize| DVector::from_fn(len, |i, _| seed[(off + i) % seed.len()]);
        let (x1, x2) = (pick(0, n), pick(7, n));
        let (u1, u2) = (pick(3, nu), pick(11, nu));
        let (v1, v2) = (pick(5, 3), pick(13, 3));
        let lhs = sys.step(&(&x1 * a + &x2), &(&u1 * a + &u2), &(&v1 * a + &v2));
        let rhs = sys.step(&x1, &u1, &v1) * a + sys.step(&x2, &u2, &v2);
        prop_assert!((&lhs - &rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }
}
