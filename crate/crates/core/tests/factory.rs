use std::f64::consts::FRAC_PI_3;

use bclab_core::analysis::h_condition_report;
use bclab_core::factory::{
    generalized_cylinder, generalized_rotational, reference_surface, spherical_factor_point, ReferenceKind,
};
use bclab_core::geometry::point_geometry;
use bclab_core::grid::{generic_grid, tensor_grid};
use bclab_core::profile::{integrate_profile, Family, ProfileCurve, ProfileSample, ProfileState};
use bclab_core::surface::evaluate_jet;
use bclab_core::GeomError;
use proptest::prelude::*;

fn curve(family: Family, p: usize, q: usize) -> ProfileCurve {
    integrate_profile(family, p, q, ProfileState::new(1.0, 1.0, FRAC_PI_3), 0.5, 1e-10).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn assert_spectrum(actual: &[f64], expected: Vec<f64>, tol: f64) {
    let e = sorted(expected);
    let a = sorted(actual.to_vec());
    for (x, y) in a.iter().zip(&e) {
        assert!((x - y).abs() < tol, "{a:?} vs {e:?}");
    }
}

#[test]
fn rotational_spectrum_follows_the_profile() {
    for (p, q) in [(2, 2), (1, 3), (3, 1)] {
        let c = curve(Family::Rotational, p, q);
        let s = generalized_rotational(&c, p, q).unwrap();
        assert_eq!(s.dim_domain(), p + q + 1);
        assert_eq!(s.dim_ambient(), p + q + 2);
        for u in generic_grid(&s, 6, 3) {
            let d = c.derivatives_at(u[0]).unwrap();
            let mut expected = vec![d.dtheta];
            expected.extend(std::iter::repeat(d.phi[1] / d.psi[0]).take(p));
            expected.extend(std::iter::repeat(-d.psi[1] / d.phi[0]).take(q));
            let pg = point_geometry(&s, &u, 2).unwrap();
            assert_spectrum(&pg.spectrum.eigenvalues, expected, 1e-9);
        }
    }
}

#[test]
fn cylinder_spectrum_has_a_flat_block() {
    for (p, q) in [(2, 2), (3, 1), (1, 2)] {
        let c = curve(Family::Cylinder, p, q);
        let s = generalized_cylinder(&c, p, q).unwrap();
        assert_eq!(s.dim_ambient(), p + q + 2);
        for u in generic_grid(&s, 6, 5) {
            let d = c.derivatives_at(u[0]).unwrap();
            let mut expected = vec![d.dtheta];
            expected.extend(std::iter::repeat(d.phi[1] / d.psi[0]).take(p));
            expected.extend(std::iter::repeat(0.0).take(q));
            let pg = point_geometry(&s, &u, 2).unwrap();
            assert_spectrum(&pg.spectrum.eigenvalues, expected, 1e-9);
        }
    }
}

#[test]
fn rotational_chart_is_exactly_the_warped_product() {
    let (p, q) = (2, 2);
    let c = curve(Family::Rotational, p, q);
    let s = generalized_rotational(&c, p, q).unwrap();
    for u in generic_grid(&s, 10, 9) {
        let st = c.state_at(u[0]).unwrap();
        let t1 = spherical_factor_point(&u[1..=p]);
        let t2 = spherical_factor_point(&u[p + 1..]);
        let x = s.point(&u);
        let expected: Vec<f64> =
            t1.iter().map(|v| st.psi * v).chain(t2.iter().map(|v| st.phi * v)).collect();
        assert_eq!(x, expected);
    }
}

#[test]
fn sphere_factors_are_orthogonal_and_metric_is_block_diagonal() {
    let (p, q) = (2, 2);
    let c = curve(Family::Rotational, p, q);
    let s = generalized_rotational(&c, p, q).unwrap();
    for u in generic_grid(&s, 10, 17) {
        let jet = evaluate_jet(&s, &u, 1).unwrap();
        for a in 1..=p {
            for b in p + 1..=p + q {
                // Disjoint ambient supports make the pairing vanish identically.
                assert_eq!(jet.d1[a].dot(&jet.d1[b]), 0.0);
            }
        }
        for i in 1..u.len() {
            assert!(jet.d1[0].dot(&jet.d1[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn straight_profile_gives_a_flat_slab() {
    let c = integrate_profile(Family::Cylinder, 2, 2, ProfileState::new(1.0, 0.0, 0.0), 0.5, 1e-10).unwrap();
    let s = generalized_cylinder(&c, 2, 2).unwrap();
    for u in tensor_grid(&s, &[4, 3]) {
        let pg = point_geometry(&s, &u, 2).unwrap();
        // phi' = 0 also flattens the sphere block: the image is a flat slab.
        assert_spectrum(&pg.spectrum.eigenvalues, vec![0.0; 5], 1e-12);
    }
}

#[test]
fn degenerate_blocks_are_rejected() {
    let c = curve(Family::Rotational, 2, 2);
    assert!(matches!(generalized_rotational(&c, 2, 0), Err(GeomError::BadParams(_))));
    assert!(matches!(generalized_rotational(&c, 3, 2), Err(GeomError::BadParams(_))));
    let big = curve(Family::Rotational, 4, 4);
    assert!(matches!(generalized_rotational(&big, 4, 4), Err(GeomError::BadParams(_))));
}

#[test]
fn family_mismatch_is_reported() {
    let c = curve(Family::Cylinder, 2, 2);
    assert!(matches!(generalized_rotational(&c, 2, 2), Err(GeomError::FamilyMismatch { .. })));
    let r = curve(Family::Rotational, 2, 2);
    assert!(matches!(generalized_cylinder(&r, 2, 2), Err(GeomError::FamilyMismatch { .. })));
}

#[test]
fn profiles_touching_the_axis_are_rejected() {
    let samples: Vec<ProfileSample> = (0..10)
        .map(|k| {
            let s = 0.9995 * k as f64 / 9.0;
            ProfileSample { s, psi: 1.0 - s, phi: 1.0, theta: std::f64::consts::PI }
        })
        .collect();
    let c = ProfileCurve::from_samples(Family::Rotational, 2, 2, samples).unwrap();
    assert!(matches!(generalized_rotational(&c, 2, 2), Err(GeomError::PoleMargin { .. })));
}

#[test]
fn reference_spectra() {
    let sphere = reference_surface(&ReferenceKind::Sphere { n: 4, radius: 2.0 }).unwrap();
    for u in generic_grid(&sphere, 5, 1) {
        assert_spectrum(&point_geometry(&sphere, &u, 2).unwrap().spectrum.eigenvalues, vec![0.5; 4], 1e-12);
    }
    let cyl = reference_surface(&ReferenceKind::RoundCylinder { p: 2, q: 2, radius: 1.0 }).unwrap();
    for u in generic_grid(&cyl, 5, 1) {
        assert_spectrum(
            &point_geometry(&cyl, &u, 2).unwrap().spectrum.eigenvalues,
            vec![1.0, 1.0, 0.0, 0.0],
            1e-12,
        );
    }
    let plane = reference_surface(&ReferenceKind::Plane { n: 3 }).unwrap();
    assert_eq!(point_geometry(&plane, &[0.3, -1.0, 2.0], 2).unwrap().spectrum.eigenvalues, vec![0.0; 3]);
}

#[test]
fn invalid_reference_parameters() {
    for kind in [
        ReferenceKind::Sphere { n: 4, radius: 0.0 },
        ReferenceKind::Sphere { n: 9, radius: 1.0 },
        ReferenceKind::RoundCylinder { p: 0, q: 2, radius: 1.0 },
        ReferenceKind::Ellipsoid { semi_axes: vec![1.0, -1.0, 2.0] },
        ReferenceKind::Torus { p: 2, major: 0.5, minor: 0.7 },
    ] {
        assert!(matches!(reference_surface(&kind), Err(GeomError::BadParams(_))), "{kind:?}");
    }
}

#[test]
fn ellipsoid_control_fails_the_h_condition() {
    let e = reference_surface(&ReferenceKind::Ellipsoid { semi_axes: vec![1.0, 1.3, 1.7] }).unwrap();
    let r = h_condition_report(&e, &tensor_grid(&e, &[20, 5]), 1e-6).unwrap();
    assert!(r.max > 1e-2, "{:e}", r.max);
    assert!(!r.pass);
}

#[test]
fn reference_kind_serde_round_trip() {
    let k = ReferenceKind::Torus { p: 2, major: 2.0, minor: 0.7 };
    let json = serde_json::to_string(&k).unwrap();
    assert!(json.contains("\"kind\":\"torus\""));
    assert_eq!(serde_json::from_str::<ReferenceKind>(&json).unwrap(), k);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn warped_product_radii(theta0 in 0.3..1.3f64, seed in 0u64..1000) {
        let c = integrate_profile(Family::Rotational, 1, 2, ProfileState::new(1.0, 1.2, theta0), 0.4, 1e-10).unwrap();
        let s = generalized_rotational(&c, 1, 2).unwrap();
        for u in generic_grid(&s, 3, seed) {
            let x = s.point(&u);
            let st = c.state_at(u[0]).unwrap();
            let r1 = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let r2 = (x[2] * x[2] + x[3] * x[3] + x[4] * x[4]).sqrt();
            prop_assert!((r1 - st.psi).abs() < 1e-13);
            prop_assert!((r2 - st.phi).abs() < 1e-13);
        }
    }
}
