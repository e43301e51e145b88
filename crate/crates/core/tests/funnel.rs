use approx::assert_abs_diff_eq;
use funnel_core::funnel::{self, FunnelSpec, ObserverGains, ObserverState};
use funnel_core::linid::YNew;
use funnel_core::ode::{self, IntegratorSettings};
use funnel_core::reference::NewRefSample;
use funnel_core::Error;
use nalgebra::SVector;
use proptest::prelude::*;

fn specs() -> [FunnelSpec; 3] {
    FunnelSpec::case_study()
}

#[test]
fn phi_derivative_matches_finite_differences() {
    for f in specs() {
        for i in 0..=500 {
            let t = 0.01 * i as f64;
            let h = 1e-6;
            let fd = (f.eval(t + h).0 - f.eval(t - h).0) / (2.0 * h);
            assert_abs_diff_eq!(f.eval(t).1, fd, epsilon = 1e-6);
        }
    }
    assert_abs_diff_eq!(funnel::phi_eval(&specs()[0], 0.0).0, 0.666223, epsilon = 1e-6);
    assert_abs_diff_eq!(specs()[2].eval(0.0).0, 1.0 / 60.001, epsilon = 1e-15);
}

#[test]
fn funnel_limits() {
    for f in specs() {
        assert_abs_diff_eq!(f.eval(200.0).0, 1.0 / f.eps, epsilon = 1e-6);
        assert_abs_diff_eq!(f.boundary(1.3) * f.eval(1.3).0, 1.0, epsilon = 1e-15);
    }
    assert!(FunnelSpec::new(1.0, 0.0, 0.1).validate().is_err());
    assert!(FunnelSpec::new(1.0, 1.0, 0.0).validate().is_err());
    assert!(FunnelSpec::new(-1.0, 1.0, 0.1).validate().is_err());
}

#[test]
fn gain_derivative_is_exact_with_unit_weight() {
    // e0(t) = 0.1 sin t against a zero reference.
    let f = specs();
    let at = |t: f64| {
        let y = YNew {
            value: 0.1 * t.sin(),
            first: 0.1 * t.cos(),
            second: -0.1 * t.sin(),
        };
        funnel::cascade(&f, t, &y, &NewRefSample::default()).unwrap()
    };
    for i in 0..=300 {
        let t = 0.01 * i as f64;
        let h = 1e-6;
        let fd = (at(t + h).k0 - at(t - h).k0) / (2.0 * h);
        assert_abs_diff_eq!(at(t).k0_1, fd, epsilon = 1e-5);
        // With exact derivatives e1^[1] is the true derivative of e1.
        let fd_e1 = (at(t + h).e1 - at(t - h).e1) / (2.0 * h);
        assert_abs_diff_eq!(at(t).e1_1, fd_e1, epsilon = 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gain_is_at_least_one_and_monotone(phi in 0.01..100.0f64, frac in 0.0..0.999f64, bump in 0.0..1.0f64) {
        let e = frac / phi;
        let k = funnel::gain(phi, e).unwrap();
        prop_assert!(k >= 1.0);
        let e2 = (frac + bump * (0.9995 - frac)) / phi;
        prop_assert!(funnel::gain(phi, e2).unwrap() >= k);
        prop_assert_eq!(funnel::gain(phi, -e).unwrap(), k);
    }

    #[test]
    fn cascade_algebra(
        t in 0.0..5.0f64,
        y in -0.2..0.2f64, y1 in -0.3..0.3f64, y2 in -0.5..0.5f64,
        r in -0.2..0.2f64, r1 in -0.3..0.3f64, r2 in -0.5..0.5f64,
    ) {
        let f = specs();
        let out = funnel::cascade(&f, t, &YNew { value: y, first: y1, second: y2 }, &NewRefSample { value: r, first: r1, second: r2 });
        let (phi0, phi0d) = f[0].eval(t);
        let (phi1, _) = f[1].eval(t);
        let (phi2, _) = f[2].eval(t);
        let (e0, e01, e02) = (y - r, y1 - r1, y2 - r2);
        if phi0 * e0.abs() >= 1.0 {
            prop_assert!(matches!(out, Err(Error::FunnelViolation { level: 0, .. })), "expected level {} violation", 0);
            return Ok(());
        }
        let k0 = 1.0 / (1.0 - phi0.powi(2) * e0.powi(2));
        let k01 = 2.0 * phi0 * e0 * (phi0d * e0 + phi0 * e01) / (1.0 - phi0.powi(2) * e0.powi(2)).powi(2);
        let e1 = e01 + k0 * e0;
        if phi1 * e1.abs() >= 1.0 {
            prop_assert!(matches!(out, Err(Error::FunnelViolation { level: 1, .. })), "expected level {} violation", 1);
            return Ok(());
        }
        let k1 = 1.0 / (1.0 - phi1.powi(2) * e1.powi(2));
        let e2 = e02 + k0 * e01 + k01 * e0 + k1 * e1;
        if phi2 * e2.abs() >= 1.0 {
            prop_assert!(matches!(out, Err(Error::FunnelViolation { level: 2, .. })), "expected level {} violation", 2);
            return Ok(());
        }
        let u = e2 / (1.0 - phi2.powi(2) * e2.powi(2));
        let out = out.unwrap();
        prop_assert!((out.u - u).abs() <= 1e-12 * (1.0 + u.abs()));
        prop_assert!(out.max_scaled_error() < 1.0);
        prop_assert!(out.k0 >= 1.0 && out.k1 >= 1.0 && out.k2 >= 1.0);
    }

    #[test]
    fn input_increases_with_top_error(t in 0.0..5.0f64, y2 in -0.5..0.5f64, dy in 1e-4..1e-2f64) {
        // e2 moves one-to-one with the second derivative of y_new.
        let f = specs();
        let eval = |s: f64| funnel::cascade(&f, t, &YNew { value: 0.0, first: 0.0, second: s }, &NewRefSample::default()).unwrap();
        let (a, b) = (eval(y2), eval(y2 + dy));
        prop_assert!(b.e2 > a.e2);
        prop_assert!(b.u > a.u);
    }

    #[test]
    fn observer_superposition(
        z in prop::array::uniform3(-5.0..5.0f64), w in prop::array::uniform3(-5.0..5.0f64),
        ya in -1.0..1.0f64, yb in -1.0..1.0f64, s in -3.0..3.0f64,
    ) {
        let g = ObserverGains::case_study();
        let za = ObserverState::new(z[0], z[1], z[2]);
        let zb = ObserverState::new(w[0], w[1], w[2]);
        let zc = ObserverState::new(z[0] + s * w[0], z[1] + s * w[1], z[2] + s * w[2]);
        let (da, db, dc) = (funnel::observer_rhs(&g, &za, ya), funnel::observer_rhs(&g, &zb, yb), funnel::observer_rhs(&g, &zc, ya + s * yb));
        let scale = 1e-12 * 1e6 * 20.0;
        prop_assert!((dc.zeta1 - da.zeta1 - s * db.zeta1).abs() <= scale);
        prop_assert!((dc.zeta2 - da.zeta2 - s * db.zeta2).abs() <= scale);
        prop_assert!((dc.zeta3 - da.zeta3 - s * db.zeta3).abs() <= scale);
    }
}

#[test]
fn cascade_examples() {
    let zero = funnel::cascade(
        &specs(),
        0.0,
        &YNew {
            value: 0.0,
            first: 0.0,
            second: 0.0,
        },
        &NewRefSample::default(),
    )
    .unwrap();
    assert_eq!((zero.k0, zero.k1, zero.k2, zero.u), (1.0, 1.0, 1.0, 0.0));
    assert_abs_diff_eq!(funnel::gain(1.0, 0.6).unwrap(), 1.5625, epsilon = 1e-15);
    assert!(matches!(funnel::gain(1.0, 1.0), Err(Error::FunnelViolation { .. })));
}

fn run_observer(gains: ObserverGains, t_end: f64) -> (Vec<f64>, Vec<SVector<f64, 3>>) {
    let f = |t: f64, z: &SVector<f64, 3>| {
        let d = funnel::observer_rhs(&gains, &ObserverState::new(z[0], z[1], z[2]), t.sin());
        Ok(SVector::<f64, 3>::new(d.zeta1, d.zeta2, d.zeta3))
    };
    let sol = ode::solve(f, 0.0, SVector::zeros(), t_end, 1e-3, &IntegratorSettings::default()).unwrap();
    (sol.times, sol.states)
}

#[test]
fn observer_recovers_derivatives_of_a_sinusoid() {
    let (times, states) = run_observer(ObserverGains::case_study(), 5.0);
    let mut worst = (0.0f64, 0.0f64);
    for (t, z) in times.iter().zip(&states) {
        if *t >= 0.5 {
            worst.0 = worst.0.max((z[1] - t.cos()).abs());
            worst.1 = worst.1.max((z[2] + t.sin()).abs());
        }
    }
    assert!(worst.0 <= 1e-2, "first derivative error {}", worst.0);
    assert!(worst.1 <= 0.5, "second derivative error {}", worst.1);
}

#[test]
fn zero_gain_observer_keeps_stale_derivatives() {
    let g = ObserverGains {
        l1: 0.0,
        l2: 0.0,
        l3: 0.0,
    };
    let d = funnel::observer_rhs(&g, &ObserverState::new(0.3, 0.2, -0.1), 5.0);
    assert_eq!(d, ObserverState::new(0.2, -0.1, 0.0));
    let d = funnel::observer_rhs(&g, &ObserverState::new(0.3, 0.0, 0.0), 5.0);
    assert_eq!(d, ObserverState::default());
}
