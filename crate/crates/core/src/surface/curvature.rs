//! Pointwise Minkowski curvature of a surface.

use nalgebra::{Matrix2, Matrix3x2, Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigen2, eigvec2};
use crate::norm::{Norm, SupportData};

use super::{Jet, Surface};

/// Everything the curvature engine reports at one parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub u: f64,
    pub v: f64,
    pub point: Vector3<f64>,
    pub xi: Vector3<f64>,
    pub eta: Vector3<f64>,
    /// `dη` in the chart basis `{f_u, f_v}`.
    pub deta: Matrix2<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Principal directions in chart coordinates, for `lambda1` and `lambda2`.
    pub principal_directions: [Vector2<f64>; 2],
    #[serde(rename = "K")]
    pub gaussian: f64,
    #[serde(rename = "H")]
    pub mean: f64,
    /// Affine fundamental form `h(f_i, f_j)`.
    pub h: Matrix2<f64>,
    pub dupin: Matrix2<f64>,
    pub weighted_dupin: Matrix2<f64>,
    /// First fundamental form.
    pub metric: Matrix2<f64>,
    /// Classical Gaussian curvature `K_e`.
    #[serde(rename = "Ke")]
    pub euclidean_gaussian: f64,
    /// `K_∂B` at `η(p)`.
    pub sphere_curvature: f64,
    /// `⟨η, ξ⟩`.
    pub eta_dot_xi: f64,
    /// `‖Dupin·dη − (Dupin·dη)ᵀ‖ / ‖Dupin·dη‖` before symmetrisation.
    pub self_adjoint_residual: f64,
}

/// Result of comparing the signs of `K` and `K_e`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SignAgreement {
    pub sign_k: i8,
    pub sign_ke: i8,
    pub agree: bool,
    #[serde(rename = "K")]
    pub gaussian: f64,
    #[serde(rename = "Ke")]
    pub euclidean_gaussian: f64,
}

/// A null direction of `dη` with the residuals of `dη X` and `dξ X` for the
/// Euclidean-unit ambient vector `X`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlatDirection {
    pub coords: Vector2<f64>,
    pub ambient: Vector3<f64>,
    pub deta_residual: f64,
    pub dxi_residual: f64,
}

/// First-order frame data at a parameter point.
pub(crate) struct Local {
    pub jet: Jet,
    pub xi: Vector3<f64>,
    pub xi_u: Vector3<f64>,
    pub xi_v: Vector3<f64>,
    pub frame: Matrix3x2<f64>,
    pub metric: Matrix2<f64>,
    pub metric_inv: Matrix2<f64>,
}

pub(crate) fn local(surface: &Surface, u: f64, v: f64) -> Result<Local> {
    let jet = surface.jet(u, v)?;
    let n = jet.du.cross(&jet.dv);
    let len = n.norm();
    let scale = surface.length_scale();
    if !(len > 1e-12 * scale * scale) {
        return Err(Error::NotImmersed { u, v });
    }
    let nh = n / len;
    let nu = jet.duu.cross(&jet.dv) + jet.du.cross(&jet.duv);
    let nv = jet.duv.cross(&jet.dv) + jet.du.cross(&jet.dvv);
    let s = surface.orientation_sign();
    let xi = nh * s;
    let xi_u = (nu - nh * nh.dot(&nu)) * (s / len);
    let xi_v = (nv - nh * nh.dot(&nv)) * (s / len);
    let frame = Matrix3x2::from_columns(&[jet.du, jet.dv]);
    let metric = frame.transpose() * frame;
    let metric_inv = metric.try_inverse().ok_or(Error::NotImmersed { u, v })?;
    Ok(Local {
        jet,
        xi,
        xi_u,
        xi_v,
        frame,
        metric,
        metric_inv,
    })
}

impl Local {
    /// Chart coordinates of the tangential part of an ambient vector.
    pub fn coords(&self, w: &Vector3<f64>) -> Vector2<f64> {
        self.metric_inv * (self.frame.transpose() * w)
    }

    /// Matrix in the chart basis of the tangent-valued map with the given
    /// images of `f_u` and `f_v`.
    pub fn matrix_of(&self, image_u: &Vector3<f64>, image_v: &Vector3<f64>) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.coords(image_u), self.coords(image_v)])
    }

    /// Classical second fundamental form `⟨f_ij, ξ⟩`.
    pub fn second_form(&self) -> Matrix2<f64> {
        let j = &self.jet;
        let b = j.duv.dot(&self.xi);
        Matrix2::new(j.duu.dot(&self.xi), b, b, j.dvv.dot(&self.xi))
    }
}

/// Curvature data computed from a frame and its support data.
pub(crate) struct Engine {
    pub local: Local,
    pub support: SupportData,
    pub raw_deta: Matrix2<f64>,
    pub deta: Matrix2<f64>,
    pub dupin: Matrix2<f64>,
    pub eta_dot_xi: f64,
    pub self_adjoint_residual: f64,
}

pub(crate) fn engine(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<Engine> {
    let local = local(surface, u, v)?;
    let support = norm.support_point(&local.xi)?;
    let eta = support.point;
    let eta_dot_xi = eta.dot(&local.xi);
    if !(eta_dot_xi > 0.0) {
        return Err(Error::Orientation(format!(
            "⟨η, ξ⟩ = {eta_dot_xi:.3e} ≤ 0 at ({u}, {v}); flip the orientation"
        )));
    }
    let deta_u = support.apply_differential(&local.xi_u);
    let deta_v = support.apply_differential(&local.xi_v);
    let raw_deta = local.matrix_of(&deta_u, &deta_v);
    let (fu, fv) = (local.jet.du, local.jet.dv);
    let wu = support.apply_weingarten(&fu);
    let wv = support.apply_weingarten(&fv);
    let off = 0.5 * (wu.dot(&fv) + wv.dot(&fu));
    let dupin = Matrix2::new(wu.dot(&fu), off, off, wv.dot(&fv));
    if !(dupin[(0, 0)] > 0.0 && dupin.determinant() > 0.0) {
        return Err(Error::NotAdmissible(format!(
            "Dupin metric is not positive definite at ({u}, {v})"
        )));
    }
    // dη is self-adjoint for the Dupin metric; project out the rounding noise
    let ds = dupin * raw_deta;
    let anti = 0.5 * (ds - ds.transpose());
    let scale = ds.norm();
    let self_adjoint_residual = if scale > 0.0 { 2.0 * anti.norm() / scale } else { 0.0 };
    if self_adjoint_residual > 1e-4 {
        return Err(Error::numeric(
            format!("dη is not self-adjoint for the Dupin metric at ({u}, {v})"),
            self_adjoint_residual,
        ));
    }
    let dupin_inv = dupin.try_inverse().ok_or_else(|| Error::NotAdmissible("singular Dupin metric".into()))?;
    let deta = dupin_inv * (ds - anti);
    Ok(Engine {
        local,
        support,
        raw_deta,
        deta,
        dupin,
        eta_dot_xi,
        self_adjoint_residual,
    })
}

/// Euclidean unit normal `ξ`, oriented as the surface prescribes.
pub fn euclid_normal(surface: &Surface, u: f64, v: f64) -> Result<Vector3<f64>> {
    Ok(local(surface, u, v)?.xi)
}

/// Birkhoff normal `η = u(ξ)`.
pub fn birkhoff_normal(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<Vector3<f64>> {
    norm.support_map(&local(surface, u, v)?.xi)
}

/// Matrix of `dη` in the chart basis `{f_u, f_v}`.
pub fn shape_operator(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<Matrix2<f64>> {
    Ok(engine(surface, norm, u, v)?.deta)
}

/// `dη` from central differences of `η` along the parameters (step `h`).
pub fn shape_operator_fd(surface: &Surface, norm: &Norm, u: f64, v: f64, h: f64) -> Result<Matrix2<f64>> {
    let l = local(surface, u, v)?;
    let eta = |a: f64, b: f64| birkhoff_normal(surface, norm, a, b);
    let eu = (eta(u + h, v)? - eta(u - h, v)?) / (2.0 * h);
    let ev = (eta(u, v + h)? - eta(u, v - h)?) / (2.0 * h);
    Ok(l.matrix_of(&eu, &ev))
}

/// Full curvature report.
pub fn curvatures(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<CurvatureReport> {
    let e = engine(surface, norm, u, v)?;
    let (l1, l2, imag) = eigen2(&e.deta);
    let rho = l1.abs().max(l2.abs()).max(e.deta.norm());
    if imag > 1e-7 * rho {
        return Err(Error::numeric(format!("complex principal curvatures at ({u}, {v})"), imag / rho));
    }
    let second = e.local.second_form();
    let h = second / e.eta_dot_xi;
    let g = e.local.metric;
    Ok(CurvatureReport {
        u,
        v,
        point: e.local.jet.point,
        xi: e.local.xi,
        eta: e.support.point,
        deta: e.deta,
        lambda1: l1,
        lambda2: l2,
        principal_directions: [eigvec2(&e.deta, l1), eigvec2(&e.deta, l2)],
        gaussian: e.deta.determinant(),
        mean: 0.5 * e.deta.trace(),
        h,
        dupin: e.dupin,
        weighted_dupin: e.dupin / e.eta_dot_xi,
        metric: g,
        euclidean_gaussian: second.determinant() / g.determinant(),
        sphere_curvature: e.support.sphere_curvature,
        eta_dot_xi: e.eta_dot_xi,
        self_adjoint_residual: e.self_adjoint_residual,
    })
}

/// `k(V) = ⟨du⁻¹V, dηV⟩ / ⟨du⁻¹V, V⟩` for the tangential part of `V`.
pub fn normal_curvature(surface: &Surface, norm: &Norm, u: f64, v: f64, vector: &Vector3<f64>) -> Result<f64> {
    let e = engine(surface, norm, u, v)?;
    let c = e.local.coords(vector);
    let tangent = e.local.frame * c;
    if !(tangent.norm() > 1e-14 * vector.norm()) || vector.norm() == 0.0 {
        return Err(Error::invalid("normal curvature needs a non-zero tangent vector"));
    }
    Ok(c.dot(&(e.dupin * e.deta * c)) / c.dot(&(e.dupin * c)))
}

/// `h(f_i, f_j) = ⟨f_ij, ξ⟩ / ⟨η, ξ⟩`.
pub fn affine_fundamental_form(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<Matrix2<f64>> {
    let l = local(surface, u, v)?;
    let eta = norm.support_map(&l.xi)?;
    let w = eta.dot(&l.xi);
    if !(w > 0.0) {
        return Err(Error::Orientation(format!("⟨η, ξ⟩ = {w:.3e} ≤ 0 at ({u}, {v})")));
    }
    Ok(l.second_form() / w)
}

/// The same form through `h(X, Y) = −b(Y, dη X)`.
pub fn affine_fundamental_form_via_dupin(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<Matrix2<f64>> {
    let e = engine(surface, norm, u, v)?;
    let b = e.dupin / e.eta_dot_xi;
    Ok(-(b * e.raw_deta).transpose())
}

/// `(Dupin, weighted Dupin)` metrics in the chart basis.
pub fn dupin_metrics(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let e = engine(surface, norm, u, v)?;
    Ok((e.dupin, e.dupin / e.eta_dot_xi))
}

fn sign_of(x: f64, zero: f64) -> i8 {
    if x.abs() <= zero {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Compare the signs of `K` and `K_e`; magnitudes up to `1e-9/ℓ²` count as
/// zero, `ℓ` the chart length scale.
pub fn sign_agreement(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<SignAgreement> {
    let r = curvatures(surface, norm, u, v)?;
    let zero = 1e-9 / surface.length_scale().powi(2);
    let sign_k = sign_of(r.gaussian, zero);
    let sign_ke = sign_of(r.euclidean_gaussian, zero);
    Ok(SignAgreement {
        sign_k,
        sign_ke,
        agree: sign_k == sign_ke,
        gaussian: r.gaussian,
        euclidean_gaussian: r.euclidean_gaussian,
    })
}

/// Basis of the kernel of `dη` (empty when `dη` is invertible) with the
/// residuals `|dη X|` and `|dξ X|`.
pub fn flat_directions(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<Vec<FlatDirection>> {
    let e = engine(surface, norm, u, v)?;
    let svd = e.deta.svd(true, true);
    let v_t = svd.v_t.ok_or_else(|| Error::numeric("singular value decomposition", f64::NAN))?;
    let smax = svd.singular_values.max();
    let zero = 1e-7 * smax.max(1.0 / surface.length_scale());
    let mut out = Vec::new();
    for k in 0..2 {
        if svd.singular_values[k] > zero {
            continue;
        }
        let c: Vector2<f64> = v_t.row(k).transpose();
        let x = e.local.frame * c;
        let len = x.norm();
        let deta_x = e.local.frame * (e.deta * c);
        let dxi_x = e.local.xi_u * c.x + e.local.xi_v * c.y;
        out.push(FlatDirection {
            coords: c / len,
            ambient: x / len,
            deta_residual: deta_x.norm() / len,
            dxi_residual: dxi_x.norm() / len,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormSpec;
    use crate::surface::{Cylinder, Ellipsoid, Helicoid, Orientation, Plane, Torus};
    use approx::assert_relative_eq;

    fn blend(t: f64) -> Norm {
        NormSpec::blend(t).build().unwrap()
    }

    #[test]
    fn euclidean_sphere_shape_operator_is_scaled_identity() {
        let s = Surface::from_chart(Ellipsoid::sphere(2.0));
        let r = curvatures(&s, &Norm::euclidean(), 1.0, 2.0).unwrap();
        assert_relative_eq!(r.deta, Matrix2::identity() * 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.gaussian, 0.25, epsilon = 1e-12);
        assert_relative_eq!(r.mean, 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.eta, r.xi, epsilon = 1e-12);
    }

    #[test]
    fn outward_normal_on_sphere_and_plane() {
        let s = Surface::from_chart(Ellipsoid::sphere(3.0));
        let xi = euclid_normal(&s, 1e-3, 0.0).unwrap();
        assert!(xi.z > 0.999);
        let p = Surface::from_chart(Plane);
        assert_relative_eq!(euclid_normal(&p, 0.3, 0.1).unwrap(), Vector3::z(), epsilon = 1e-15);
    }

    #[test]
    fn helicoid_normal_matches_cross_product() {
        let s = Surface::from_chart(Helicoid { pitch: 1.0 });
        let xi = euclid_normal(&s, 0.0, 1.0).unwrap();
        // f_u = (0, 1, 1), f_v = (1, 0, 0)
        let expect = Vector3::new(0.0, 1.0, 1.0).cross(&Vector3::x()).normalize();
        assert_relative_eq!(xi, expect, epsilon = 1e-15);
    }

    #[test]
    fn plane_has_zero_curvature_in_any_norm() {
        let s = Surface::from_chart(Plane);
        let n = NormSpec::ellipsoid(2.0, 1.0, 0.5).build().unwrap();
        let r = curvatures(&s, &n, 0.2, -0.4).unwrap();
        assert_eq!(r.gaussian, 0.0);
        assert_eq!(r.mean, 0.0);
        assert_relative_eq!(r.eta, Vector3::new(0.0, 0.0, 0.5), epsilon = 1e-12);
        assert_eq!(flat_directions(&s, &n, 0.0, 0.0).unwrap().len(), 2);
    }

    #[test]
    fn euclidean_torus_outer_equator() {
        let (r0, r1) = (2.0, 0.5);
        let s = Surface::from_chart(Torus { major: r0, minor: r1 });
        let r = curvatures(&s, &Norm::euclidean(), 0.3, 0.0).unwrap();
        assert_relative_eq!(r.gaussian, 1.0 / (r1 * (r0 + r1)), epsilon = 1e-12);
        assert_relative_eq!(r.mean, 0.5 * (1.0 / r1 + 1.0 / (r0 + r1)), epsilon = 1e-12);
        assert_relative_eq!(r.lambda1, 1.0 / r1, epsilon = 1e-12);
    }

    #[test]
    fn orientation_flip_negates_mean_not_gaussian() {
        let n = blend(0.3);
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.7 });
        let r = s.clone().with_orientation(Orientation::Reversed);
        let a = curvatures(&s, &n, 0.4, 2.1).unwrap();
        let b = curvatures(&r, &n, 0.4, 2.1).unwrap();
        assert_relative_eq!(a.gaussian, b.gaussian, max_relative = 1e-9);
        assert_relative_eq!(a.mean, -b.mean, max_relative = 1e-9);
        assert_relative_eq!(a.deta, -b.deta, epsilon = 1e-9);
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let n = blend(0.3);
        let s = Surface::from_chart(Ellipsoid {
            axes: Vector3::new(1.5, 1.0, 0.7),
        });
        for (u, v) in [(0.7, 0.4), (1.9, 3.0), (2.5, 5.1)] {
            let a = shape_operator(&s, &n, u, v).unwrap();
            let b = shape_operator_fd(&s, &n, u, v, 1e-5).unwrap();
            assert!((a - b).norm() <= 1e-4 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn affine_form_two_routes_agree() {
        let n = NormSpec::ellipsoid(1.3, 0.8, 1.1).build().unwrap();
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.6 });
        for (u, v) in [(0.1, 0.2), (1.3, 2.9), (4.0, 4.4)] {
            let a = affine_fundamental_form(&s, &n, u, v).unwrap();
            let b = affine_fundamental_form_via_dupin(&s, &n, u, v).unwrap();
            assert!((a - b).norm() <= 1e-6 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn normal_curvature_extremes_are_principal() {
        let n = blend(0.4);
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.6 });
        let (u, v) = (0.5, 2.2);
        let r = curvatures(&s, &n, u, v).unwrap();
        let l = local(&s, u, v).unwrap();
        let k = |t: f64| {
            let w = l.jet.du.normalize() * t.cos() + l.jet.dv.normalize() * t.sin();
            normal_curvature(&s, &n, u, v, &w).unwrap()
        };
        let step = 1f64.to_radians();
        let refine = |sign: f64| {
            let best = (0..360)
                .map(|i| i as f64 * step)
                .max_by(|a, b| (sign * k(*a)).total_cmp(&(sign * k(*b))))
                .unwrap();
            let (mut a, mut b) = (best - step, best + step);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            while b - a > 1e-9 {
                let (c, d) = (b - g * (b - a), a + g * (b - a));
                if sign * k(c) > sign * k(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            k(0.5 * (a + b))
        };
        assert_relative_eq!(refine(1.0), r.lambda1, epsilon = 1e-6);
        assert_relative_eq!(refine(-1.0), r.lambda2, epsilon = 1e-6);
        for (d, lam) in r.principal_directions.iter().zip([r.lambda1, r.lambda2]) {
            let w = l.frame * d;
            assert_relative_eq!(normal_curvature(&s, &n, u, v, &w).unwrap(), lam, max_relative = 1e-8);
        }
    }

    #[test]
    fn zero_vector_has_no_normal_curvature() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        assert!(normal_curvature(&s, &Norm::euclidean(), 1.0, 1.0, &Vector3::zeros()).is_err());
    }

    #[test]
    fn cylinder_flat_direction_is_the_ruling() {
        let n = NormSpec::ellipsoid(2.0, 1.0, 0.7).build().unwrap();
        let s = Surface::from_chart(Cylinder {
            radius: 1.0,
            half_height: 1.0,
        });
        let dirs = flat_directions(&s, &n, 0.9, 0.3).unwrap();
        assert_eq!(dirs.len(), 1);
        assert_relative_eq!(dirs[0].ambient.z.abs(), 1.0, epsilon = 1e-9);
        assert!(dirs[0].dxi_residual <= 1e-6);
        let sphere = Surface::from_chart(Ellipsoid::sphere(1.0));
        assert!(flat_directions(&sphere, &n, 1.0, 1.0).unwrap().is_empty());
    }

    #[test]
    fn helicoid_signs_agree() {
        let n = blend(0.5);
        let s = Surface::from_chart(Helicoid { pitch: 1.0 });
        let a = sign_agreement(&s, &n, 0.3, 0.4).unwrap();
        assert_eq!((a.sign_k, a.sign_ke, a.agree), (-1, -1, true));
    }

    #[test]
    fn weighted_dupin_is_dupin_over_eta_dot_xi() {
        let n = blend(0.2);
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.5 });
        let r = curvatures(&s, &n, 1.0, 1.0).unwrap();
        assert_relative_eq!(r.weighted_dupin * r.eta_dot_xi, r.dupin, epsilon = 1e-15);
        let euclid = curvatures(&s, &Norm::euclidean(), 1.0, 1.0).unwrap();
        assert_relative_eq!(euclid.dupin, euclid.metric, epsilon = 1e-12);
    }

    #[test]
    fn unit_sphere_of_the_norm_has_unit_curvature() {
        use crate::surface::{ScaledUnitSphere, SupportChart};
        use std::sync::Arc;
        for n in [blend(0.3), NormSpec::ellipsoid(2.0, 1.0, 1.0).build().unwrap()] {
            let norm = Arc::new(n);
            for r in [1.0, 2.5] {
                let body = ScaledUnitSphere { norm: norm.clone(), radius: r };
                let s = Surface::from_chart(SupportChart::new(Arc::new(body)));
                for (u, v) in [(0.4, 0.3), (1.2, 2.0), (2.8, 5.5)] {
                    let c = curvatures(&s, &norm, u, v).unwrap();
                    assert_relative_eq!(c.gaussian, 1.0 / (r * r), max_relative = 1e-6);
                    assert_relative_eq!(c.mean, 1.0 / r, max_relative = 1e-6);
                    assert_relative_eq!(c.eta * r, c.point, epsilon = 1e-9);
                }
            }
        }
    }
}
