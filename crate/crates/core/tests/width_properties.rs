use minkdiff::norm::{Norm, NormSpec};
use minkdiff::surface::SupportBody;
use minkdiff::width::{max_epsilon, opposite_point, width_curvature_identity, Perturbation, WidthBody};
use minkdiff::Vector3;
use proptest::prelude::*;

fn body(norm: &Norm, eps_frac: f64) -> WidthBody {
    let p = Perturbation::OddHarmonic;
    let eps = eps_frac * max_epsilon(norm, 2.0, &p, 16).unwrap();
    WidthBody::new(norm, 2.0, p, eps, 16).unwrap()
}

fn direction() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_map(|(x, y, z)| Vector3::new(x, y, z))
        .prop_filter("non-zero", |v| v.norm() > 1e-2)
        .prop_map(|v| v.normalize())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn width_is_constant(frac in 0.05..0.5f64, n in direction()) {
        let norm = NormSpec::blend(0.3).build().unwrap();
        let b = body(&norm, frac);
        prop_assert!((b.width_in_direction(&n).unwrap() - 2.0).abs() <= 1e-8);
        prop_assert!((b.width_from_points(&n).unwrap() - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn opposite_point_is_an_involution(frac in 0.05..0.5f64, t in 0.3..2.8f64, p in 0.0..6.2f64) {
        let norm = NormSpec::ellipsoid(2.0, 1.0, 1.0).build().unwrap();
        let b = body(&norm, frac);
        let s = b.surface();
        let pair = opposite_point(&s, &norm, 2.0, (t, p)).unwrap();
        let back = opposite_point(&s, &norm, 2.0, pair.q_params).unwrap();
        prop_assert!((back.q - pair.p).norm() <= 1e-6);
        prop_assert!(pair.eta_residual <= 1e-6);
        let id = width_curvature_identity(&s, &norm, 2.0, (t, p)).unwrap();
        prop_assert!(id.residual <= 1e-4);
    }
}

#[test]
fn unperturbed_body_is_the_scaled_unit_ball() {
    let norm = NormSpec::blend(0.3).build().unwrap();
    let b = WidthBody::new(&norm, 2.0, Perturbation::OddHarmonic, 0.0, 16).unwrap();
    for n in minkdiff::sampling::fibonacci_sphere(30) {
        let x = b.support_point(&n).unwrap();
        assert!((norm.gauge(&x) - 1.0).abs() < 1e-9);
        let (y, _) = b.boundary(&n).unwrap();
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn too_large_amplitude_is_rejected() {
    let norm = Norm::euclidean();
    let max = max_epsilon(&norm, 2.0, &Perturbation::OddHarmonic, 16).unwrap();
    assert!(WidthBody::new(&norm, 2.0, Perturbation::OddHarmonic, 2.0 * max, 16).is_err());
}

#[test]
fn even_perturbation_is_rejected() {
    assert!(Perturbation::parse("x^2").is_err());
    assert!(Perturbation::parse("x*y*z").is_ok());
}
