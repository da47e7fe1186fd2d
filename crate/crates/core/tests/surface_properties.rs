use std::f64::consts::{PI, TAU};

use minkdiff::norm::{Norm, NormSpec};
use minkdiff::surface::{
    curvatures, sign_agreement, Ellipsoid, Helicoid, Orientation, QuadraticGraph, Surface, SurfaceFamily,
    SurfaceSpec, Torus,
};
use minkdiff::Vector3;
use proptest::prelude::*;

fn any_norm() -> impl Strategy<Value = Norm> {
    prop_oneof![
        Just(Norm::euclidean()),
        (0.6..1.8f64, 0.6..1.8f64, 0.6..1.8f64).prop_map(|(a, b, c)| NormSpec::ellipsoid(a, b, c).build().unwrap()),
        (0.0..0.6f64).prop_map(|t| NormSpec::blend(t).build().unwrap()),
    ]
}

fn any_surface() -> impl Strategy<Value = Surface> {
    prop_oneof![
        (0.5..2.0f64, 0.5..2.0f64, 0.5..2.0f64)
            .prop_map(|(a, b, c)| Surface::from_chart(Ellipsoid { axes: Vector3::new(a, b, c) })),
        (1.5..3.0f64, 0.2..0.9f64).prop_map(|(r0, r1)| Surface::from_chart(Torus { major: r0, minor: r1 })),
        (0.3..2.0f64).prop_map(|p| Surface::from_chart(Helicoid { pitch: p })),
        (-2.0..2.0f64, -1.0..1.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Surface::from_chart(QuadraticGraph { a, b, c })),
    ]
}

/// Interior parameter point from unit coordinates, away from chart poles.
fn at(s: &Surface, a: f64, b: f64) -> (f64, f64) {
    let d = s.domain();
    let u = d[0][0] + (0.1 + 0.8 * a) * (d[0][1] - d[0][0]);
    let v = d[1][0] + (0.1 + 0.8 * b) * (d[1][1] - d[1][0]);
    (u, v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euclidean_curvature_is_the_sphere_curvature_times_k(s in any_surface(), n in any_norm(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (u, v) = at(&s, a, b);
        let r = curvatures(&s, &n, u, v).unwrap();
        let exact = r.sphere_curvature * r.gaussian;
        prop_assert!((r.euclidean_gaussian - exact).abs() <= 1e-6 * exact.abs().max(1e-9));
        prop_assert!(sign_agreement(&s, &n, u, v).unwrap().agree);
    }

    #[test]
    fn principal_curvatures_multiply_and_add_up(s in any_surface(), n in any_norm(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (u, v) = at(&s, a, b);
        let r = curvatures(&s, &n, u, v).unwrap();
        let scale = r.lambda1.abs().max(r.lambda2.abs()).max(1.0);
        prop_assert!(r.lambda1 >= r.lambda2);
        prop_assert!((r.lambda1 * r.lambda2 - r.gaussian).abs() <= 1e-9 * scale * scale);
        prop_assert!((0.5 * (r.lambda1 + r.lambda2) - r.mean).abs() <= 1e-9 * scale);
        prop_assert!(r.eta_dot_xi > 0.0);
        prop_assert!((n.gauge(&r.eta) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reversing_orientation_negates_mean_curvature(s in any_surface(), n in any_norm(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (u, v) = at(&s, a, b);
        let r = curvatures(&s, &n, u, v).unwrap();
        let flipped = s.clone().with_orientation(if s.orientation_sign() > 0.0 { Orientation::Reversed } else { Orientation::AsParametrized });
        let f = curvatures(&flipped, &n, u, v).unwrap();
        prop_assert!((f.mean + r.mean).abs() <= 1e-8 * r.mean.abs().max(1.0));
        prop_assert!((f.gaussian - r.gaussian).abs() <= 1e-8 * r.gaussian.abs().max(1.0));
        prop_assert!((f.eta + r.eta).norm() < 1e-8);
    }

    #[test]
    fn scaled_unit_sphere_has_constant_curvature(n in any_norm(), r in 0.5..3.0f64, t in 0.2..(PI - 0.2), p in 0.0..TAU) {
        let spec = SurfaceSpec::new(SurfaceFamily::UnitSphere).param("r", r);
        let s = spec.build(&n).unwrap();
        let c = curvatures(&s, &n, t, p).unwrap();
        prop_assert!((c.gaussian * r * r - 1.0).abs() < 1e-5);
        prop_assert!((c.mean * r - 1.0).abs() < 1e-5);
    }
}

#[test]
fn surface_description_roundtrip_and_errors() {
    let spec = SurfaceSpec::from_json(r#"{"family":"torus","params":{"R":2.0,"rho":0.5},"orientation":"outward"}"#).unwrap();
    let s = spec.build(&Norm::euclidean()).unwrap();
    let r = curvatures(&s, &Norm::euclidean(), 0.0, 0.0).unwrap();
    assert!((r.gaussian - 1.0 / (0.5 * 2.5)).abs() < 1e-12);
    assert!(SurfaceSpec::from_json(r#"{"family":"torus""#).is_err());
}
