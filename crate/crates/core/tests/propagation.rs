mod common;

use std::f64::consts::TAU;

use ast_orbit::elements::{orbital_features, MU_EARTH};
use common::{rel_diff, rk4, state_from_elements};
use proptest::prelude::*;

#[test]
fn closed_form_matches_numerical_integration() {
    for (e, nu) in [(0.0, 0.4), (0.3, 2.0), (0.7, 0.785), (0.7, 3.5), (0.9, 0.1)] {
        let s = state_from_elements(1.0, 1.0, e, 0.6, 0.2, 1.3, nu);
        let f = orbital_features(&s, 1.0).unwrap();
        for frac in [0.13, 0.5, 1.0, 1.7] {
            let t = frac * f.p;
            let exact = s.propagate(1.0, t).unwrap();
            let numeric = rk4(&s, 1.0, t, 400_000);
            let d = rel_diff(&exact, &numeric);
            assert!(d < 1e-8, "e={e} nu={nu} t={frac}P: {d:e}");
        }
    }
}

#[test]
fn physical_units_match_integration() {
    // 12 hour orbit, e = 0.7
    let a = (MU_EARTH * (43_200.0 / TAU).powi(2)).cbrt();
    let s = state_from_elements(MU_EARTH, a, 0.7, 2.76, 0.0, 0.0, 0.785);
    let exact = s.propagate(MU_EARTH, 5.0 * 3600.0).unwrap();
    let numeric = rk4(&s, MU_EARTH, 5.0 * 3600.0, 400_000);
    assert!(rel_diff(&exact, &numeric) < 1e-8);
}

#[test]
fn full_period_returns_home() {
    let s = state_from_elements(1.0, 1.0, 0.7, 0.3, 0.0, 0.0, 0.785);
    let p = orbital_features(&s, 1.0).unwrap().p;
    assert!(rel_diff(&s.propagate(1.0, p).unwrap(), &s) < 1e-12);
    assert!(rel_diff(&s.propagate(1.0, -3.0 * p).unwrap(), &s) < 1e-11);
}

prop_compose! {
    fn bound_state()(
        e in 0.0f64..0.95,
        a in 0.5f64..3.0,
        i in 0.0f64..3.1,
        raan in 0.0f64..TAU,
        argp in 0.0f64..TAU,
        nu in -3.14f64..3.14,
    ) -> ast_orbit::elements::StateVector {
        state_from_elements(1.0, a, e, i, raan, argp, nu)
    }
}

proptest! {
    #[test]
    fn invariants_are_conserved(s in bound_state()) {
        let f0 = orbital_features(&s, 1.0).unwrap();
        for k in 0..=30 {
            let t = 3.0 * f0.p * k as f64 / 30.0;
            let st = s.propagate(1.0, t).unwrap();
            let f = orbital_features(&st, 1.0).unwrap();
            prop_assert!(((f.h - f0.h) / f0.h).abs() < 1e-10);
            prop_assert!(((f.a - f0.a) / f0.a).abs() < 1e-10);
            prop_assert!((f.e.value() - f0.e.value()).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_longitude_is_linear(s in bound_state()) {
        let f = orbital_features(&s, 1.0).unwrap();
        let offsets: Vec<f64> = (0..=30)
            .map(|k| {
                let t = 3.0 * f.p * k as f64 / 30.0;
                f.propagated_angles(t).unwrap().phi - f.n * t
            })
            .collect();
        let spread = offsets.iter().fold(0.0f64, |m, x| m.max((x - offsets[0]).abs()));
        prop_assert!(spread < 1e-10);
    }

    #[test]
    fn propagation_composes(s in bound_state(), t1 in -10.0f64..10.0, t2 in -10.0f64..10.0) {
        let f = orbital_features(&s, 1.0).unwrap();
        let (t1, t2) = (t1 * f.p / TAU, t2 * f.p / TAU);
        let two = s.propagate(1.0, t1).unwrap().propagate(1.0, t2).unwrap();
        let one = s.propagate(1.0, t1 + t2).unwrap();
        prop_assert!(rel_diff(&two, &one) < 1e-9, "{}", rel_diff(&two, &one));
    }
}
