use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

use bclab_core::profile::{
    cylinder_rhs, integrate_endpoint, integrate_profile, profile_curvature_report, rotational_rhs,
    self_convergence, unit_speed_report, Family, ProfileCurve, ProfileOde, ProfileSample, ProfileState,
};
use bclab_core::GeomError;
use proptest::prelude::*;

#[test]
fn rotational_rhs_at_axis_angles() {
    for (p, q, psi, phi) in [(1, 1, 1.0, 1.0), (2, 3, 0.7, 1.9), (4, 1, 2.5, 0.3)] {
        let d = rotational_rhs(ProfileState::new(psi, phi, 0.0), p, q).unwrap();
        assert!((d[2] - q as f64 / (3.0 * phi)).abs() < 1e-15);
        let d = rotational_rhs(ProfileState::new(psi, phi, FRAC_PI_2), p, q).unwrap();
        assert!((d[2] + p as f64 / (3.0 * psi)).abs() < 1e-15);
    }
}

#[test]
fn cylinder_rhs_is_negative_on_open_upper_half() {
    assert_eq!(cylinder_rhs(ProfileState::new(1.0, 0.5, 0.0), 3).unwrap()[2], 0.0);
    for k in 1..50 {
        let theta = PI * k as f64 / 50.0;
        assert!(cylinder_rhs(ProfileState::new(1.3, 0.0, theta), 2).unwrap()[2] < 0.0);
    }
}

#[test]
fn straight_cylinder_profile() {
    let c = integrate_profile(Family::Cylinder, 2, 2, ProfileState::new(1.0, 0.0, 0.0), 1.0, 1e-10).unwrap();
    for x in &c.samples {
        assert_eq!(x.theta, 0.0);
        assert!((x.psi - 1.0 - x.s).abs() < 1e-12);
    }
    let r = profile_curvature_report(&c).unwrap();
    assert!(r.max < 1e-12);
    assert!(unit_speed_report(&c).unwrap().max < 1e-12);
}

#[test]
fn integrated_curvature_matches_second_differences() {
    for (family, p, q, theta) in [
        (Family::Rotational, 2, 2, FRAC_PI_4),
        (Family::Rotational, 2, 2, FRAC_PI_3),
        (Family::Rotational, 1, 3, 1.0),
        (Family::Cylinder, 2, 2, FRAC_PI_3),
        (Family::Cylinder, 3, 1, 2.0),
    ] {
        let c = integrate_profile(family, p, q, ProfileState::new(1.0, 1.0, theta), 0.5, 1e-10).unwrap();
        assert!(!c.halted_early);
        let r = profile_curvature_report(&c).unwrap();
        assert!(r.max < 1e-7, "{family} p={p} q={q}: {:e}", r.max);
        assert!(unit_speed_report(&c).unwrap().max < 1e-8);
    }
}

#[test]
fn plane_curve_case_matches_closed_form_curvature() {
    let c = integrate_profile(Family::Cylinder, 1, 1, ProfileState::new(1.0, 0.0, 1.2), 0.5, 1e-10).unwrap();
    let r = profile_curvature_report(&c).unwrap();
    assert!(r.max < 1e-8, "{:e}", r.max);
    for x in &c.samples {
        let kappa = c.kappa(x).unwrap();
        assert!((kappa - x.theta.sin() / (3.0 * x.psi)).abs() < 1e-15);
    }
}

#[test]
fn round_arc_is_rejected_by_the_curvature_oracle() {
    let samples: Vec<ProfileSample> = (0..201)
        .map(|k| {
            let s = 0.5 * k as f64 / 200.0;
            ProfileSample { s, psi: 2.0 + s.cos(), phi: 2.0 + s.sin(), theta: s + FRAC_PI_2 }
        })
        .collect();
    let c = ProfileCurve::from_samples(Family::Rotational, 2, 2, samples).unwrap();
    let r = profile_curvature_report(&c).unwrap();
    assert!(r.max > 1e-2, "{:e}", r.max);
    assert!(!r.pass);
}

#[test]
fn too_few_samples_for_the_oracle() {
    let samples: Vec<ProfileSample> =
        (0..4).map(|k| ProfileSample { s: k as f64, psi: 1.0, phi: 1.0, theta: 0.0 }).collect();
    let c = ProfileCurve::from_samples(Family::Rotational, 1, 1, samples).unwrap();
    assert!(matches!(profile_curvature_report(&c), Err(GeomError::InsufficientSamples { .. })));
}

#[test]
fn halving_the_tolerance_barely_moves_the_endpoint() {
    let ode = ProfileOde::new(Family::Rotational, 2, 2);
    let init = ProfileState::new(1.0, 1.0, FRAC_PI_3);
    let a = integrate_endpoint(ode, init, 0.5, 1e-10).unwrap().state;
    let b = integrate_endpoint(ode, init, 0.5, 5e-11).unwrap().state;
    let d = ((a.psi - b.psi).powi(2) + (a.phi - b.phi).powi(2) + (a.theta - b.theta).powi(2)).sqrt();
    assert!(d < 1e-9, "{d:e}");
}

#[test]
fn self_convergence_order_is_at_least_four() {
    for (family, theta) in [(Family::Rotational, FRAC_PI_3), (Family::Cylinder, FRAC_PI_3)] {
        let ode = ProfileOde::new(family, 2, 2);
        let study = self_convergence(ode, ProfileState::new(1.0, 1.0, theta), 2.0, 1e-6, 12).unwrap();
        assert!(study.observed_order >= 4.0, "{family}: {}", study.observed_order);
        assert!(study.endpoint_errors.windows(2).all(|w| w[1] <= w[0] * 1.5));
    }
}

#[test]
fn cone_germ_converges_exactly() {
    // psi = phi with theta = pi/4 is a fixed line of the p = q equation.
    let ode = ProfileOde::new(Family::Rotational, 2, 2);
    let study = self_convergence(ode, ProfileState::new(1.0, 1.0, FRAC_PI_4), 2.0, 1e-6, 6).unwrap();
    assert!(study.observed_order.is_infinite());
}

#[test]
fn early_halt_near_the_axis() {
    let c = integrate_profile(Family::Cylinder, 2, 2, ProfileState::new(0.2, 1.0, PI), 2.0, 1e-10).unwrap();
    assert!(c.halted_early);
    let last = c.samples.last().unwrap();
    assert!(last.s < 2.0);
    assert!(last.psi.min(last.phi) < 1e-3);
    for w in c.samples.windows(2) {
        assert!(w[1].s > w[0].s);
    }
}

#[test]
fn tolerance_outside_range_is_bad_initial() {
    let init = ProfileState::new(1.0, 1.0, FRAC_PI_4);
    for tol in [1e-13, 1e-5] {
        assert!(matches!(
            integrate_profile(Family::Rotational, 2, 2, init, 1.0, tol),
            Err(GeomError::BadInitial(_))
        ));
    }
    assert!(matches!(
        integrate_profile(Family::Rotational, 2, 0, init, 1.0, 1e-10),
        Err(GeomError::BadInitial(_))
    ));
}

#[test]
fn csv_has_header_and_fixed_width_numbers() {
    let c = integrate_profile(Family::Rotational, 2, 2, ProfileState::new(1.0, 1.0, FRAC_PI_3), 0.5, 1e-10).unwrap();
    let csv = c.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,psi,phi,theta,kappa"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 5);
    let mantissa_digits = row[1].split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(mantissa_digits, 17);
    assert_eq!(csv.lines().count(), c.samples.len() + 1);
}

#[test]
fn state_at_reproduces_the_samples() {
    let c = integrate_profile(Family::Rotational, 2, 2, ProfileState::new(1.0, 1.0, FRAC_PI_3), 0.5, 1e-10).unwrap();
    for x in c.samples.iter().step_by(20) {
        let st = c.state_at(x.s).unwrap();
        assert!((st.psi - x.psi).abs() < 1e-9);
        assert!((st.phi - x.phi).abs() < 1e-9);
        assert!((st.theta - x.theta).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_stay_regular_and_unit_speed(
        psi in 0.6..2.0f64,
        phi in 0.6..2.0f64,
        theta in 0.0..(2.0 * PI),
        p in 1usize..4,
        q in 1usize..4,
    ) {
        let c = integrate_profile(Family::Rotational, p, q, ProfileState::new(psi, phi, theta), 0.3, 1e-10).unwrap();
        for w in c.samples.windows(2) {
            prop_assert!(w[1].s > w[0].s);
        }
        for x in &c.samples {
            prop_assert!(x.psi > 0.0 && x.phi > 0.0);
        }
        if !c.halted_early {
            prop_assert!(unit_speed_report(&c).unwrap().max < 1e-8);
        }
    }

    #[test]
    fn halt_flag_tracks_the_final_pole_distance(
        psi in 0.05..0.5f64,
        theta in (0.75 * PI)..(1.25 * PI),
    ) {
        let c = integrate_profile(Family::Cylinder, 2, 1, ProfileState::new(psi, 0.0, theta), 3.0, 1e-10).unwrap();
        let last = c.samples.last().unwrap();
        if last.psi < 10.0 * 1e-6 {
            prop_assert!(c.halted_early);
        }
        if !c.halted_early {
            prop_assert!((last.s - 3.0).abs() < 1e-12);
        }
    }
}
