//! Bodies of constant Minkowski width.
//!
//! A body `K` is given by its support function
//! `σ_K = (c/2)·σ_B + ε·P`, where `P` is odd and 1-homogeneous. Then
//! `σ_K(n) + σ_K(−n) = c·σ_B(n)` for every `n`, so `K` has Minkowski width
//! `c`; it is convex as long as the tangential Hessian of `σ_K` stays
//! positive definite.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geodesy::antipodal_params;
use crate::linalg::{angle_between, angles_of};
use crate::norm::Norm;
use crate::sampling::{fibonacci_sphere, lat_long_sphere};
use crate::surface::{birkhoff_normal, curvatures, SupportBody, SupportChart, Surface};

/// Relative eigenvalue gap below which a point counts as umbilic.
pub const UMBILIC_TOLERANCE: f64 = 1e-4;

/// The odd part of the support function, on unit normals; it is extended
/// 1-homogeneously.
#[derive(Clone, Debug)]
pub enum Perturbation {
    /// `n₃³ − (3/5)·n₃·|n|²`, an odd spherical harmonic of degree 3.
    OddHarmonic,
    /// An expression in `x, y, z`; it must be odd.
    Expression(Expression),
}

impl Perturbation {
    pub fn parse(src: &str) -> Result<Self> {
        let src = src.trim();
        if src.is_empty() || src == "odd-harmonic" {
            return Ok(Perturbation::OddHarmonic);
        }
        let e = Expression::parse(src, &["x", "y", "z"])?;
        for d in fibonacci_sphere(64) {
            let a = e.eval(&[d.x, d.y, d.z]);
            let b = e.eval(&[-d.x, -d.y, -d.z]);
            if !(a + b).abs().le(&(1e-10 * (1.0 + a.abs()))) {
                return Err(Error::invalid(format!("perturbation `{src}` is not odd")));
            }
        }
        Ok(Perturbation::Expression(e))
    }

    pub fn label(&self) -> String {
        match self {
            Perturbation::OddHarmonic => "odd-harmonic".into(),
            Perturbation::Expression(e) => e.source().to_string(),
        }
    }

    /// The 1-homogeneous extension at `n ≠ 0`.
    pub fn value(&self, n: &Vector3<f64>) -> f64 {
        match self {
            Perturbation::OddHarmonic => {
                let r2 = n.norm_squared();
                n.z.powi(3) / r2 - 0.6 * n.z
            }
            Perturbation::Expression(e) => {
                let r = n.norm();
                r * e.eval(&[n.x / r, n.y / r, n.z / r])
            }
        }
    }

    pub fn gradient(&self, n: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Perturbation::OddHarmonic => {
                let r2 = n.norm_squared();
                let z3 = n.z.powi(3);
                let s = -2.0 * z3 / (r2 * r2);
                Vector3::new(s * n.x, s * n.y, 3.0 * n.z * n.z / r2 + s * n.z - 0.6)
            }
            Perturbation::Expression(_) => {
                let h = 1e-6 * n.norm();
                Vector3::from_fn(|i, _| {
                    let mut a = *n;
                    let mut b = *n;
                    a[i] += h;
                    b[i] -= h;
                    (self.value(&a) - self.value(&b)) / (2.0 * h)
                })
            }
        }
    }

    /// Hessian by central differences of the gradient.
    pub fn hessian(&self, n: &Vector3<f64>) -> Matrix3<f64> {
        let h = match self {
            Perturbation::OddHarmonic => 1e-5,
            Perturbation::Expression(_) => 1e-4,
        } * n.norm();
        let mut m = Matrix3::zeros();
        for j in 0..3 {
            let mut a = *n;
            let mut b = *n;
            a[j] += h;
            b[j] -= h;
            let col = (self.gradient(&a) - self.gradient(&b)) / (2.0 * h);
            m.set_column(j, &col);
        }
        0.5 * (m + m.transpose())
    }
}

/// A constant-width body with support function `(c/2)·σ_B + ε·P`.
#[derive(Clone, Debug)]
pub struct WidthBody {
    norm: Arc<Norm>,
    width: f64,
    epsilon: f64,
    perturbation: Perturbation,
    /// Smallest eigenvalue of the tangential Hessian of `σ_K` on the scan.
    convexity_margin: f64,
}

/// Smallest eigenvalue of the tangential Hessian of `σ_K` over the grid.
fn convexity_margin(norm: &Norm, width: f64, epsilon: f64, p: &Perturbation, grid: usize) -> Result<f64> {
    let normals = lat_long_sphere(grid);
    let mins = normals
        .par_iter()
        .map(|n| {
            let sd = norm.support_point(n)?;
            let frame = Matrix3x2::from_columns(&sd.basis);
            let q: Matrix2<f64> = frame.transpose() * p.hessian(n) * frame;
            let m = sd.differential * (0.5 * width) + q * epsilon;
            let m = 0.5 * (m + m.transpose());
            Ok(m.symmetric_eigenvalues().min())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mins.into_iter().fold(f64::INFINITY, f64::min))
}

/// Largest `|ε|` keeping the body convex on the scan grid, by bisection to
/// a resolution of `1e-3`.
pub fn max_epsilon(norm: &Norm, width: f64, p: &Perturbation, grid: usize) -> Result<f64> {
    let ok = |e: f64| convexity_margin(norm, width, e, p, grid).map(|m| m > 0.0);
    let mut lo = 0.0;
    let mut hi = 0.01 * width;
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 * width {
            return Ok(f64::INFINITY);
        }
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

impl WidthBody {
    /// Build and validate the body; `grid` is the latitude/longitude
    /// resolution of the convexity scan.
    pub fn new(norm: &Norm, width: f64, perturbation: Perturbation, epsilon: f64, grid: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("width must be positive"));
        }
        if !epsilon.is_finite() {
            return Err(Error::invalid("epsilon must be finite"));
        }
        let margin = convexity_margin(norm, width, epsilon, &perturbation, grid)?;
        if margin <= 0.0 {
            let max = max_epsilon(norm, width, &perturbation, grid)?;
            return Err(Error::EpsilonTooLarge {
                epsilon,
                max_epsilon: max,
            });
        }
        Ok(Self {
            norm: Arc::new(norm.clone()),
            width,
            epsilon,
            perturbation,
            convexity_margin: margin,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn norm(&self) -> &Norm {
        &self.norm
    }

    pub fn convexity_margin(&self) -> f64 {
        self.convexity_margin
    }

    /// `σ_K(n)`.
    pub fn support_function(&self, n: &Vector3<f64>) -> Result<f64> {
        Ok(0.5 * self.width * self.norm.support_function(n)? + self.epsilon * self.perturbation.value(n))
    }

    /// The boundary point `∇σ_K(n)` with outward normal `n`.
    pub fn support_point(&self, n: &Vector3<f64>) -> Result<Vector3<f64>> {
        let n = n.normalize();
        Ok(self.norm.support_map(&n)? * (0.5 * self.width) + self.perturbation.gradient(&n) * self.epsilon)
    }

    /// Minkowski distance between the two supporting planes with normals
    /// `±n`: `(σ_K(n) + σ_K(−n)) / σ_B(n)`.
    pub fn width_in_direction(&self, n: &Vector3<f64>) -> Result<f64> {
        let n = n.normalize();
        Ok((self.support_function(&n)? + self.support_function(&-n)?) / self.norm.support_function(&n)?)
    }

    /// The same width from the two supporting points: `⟨p − q, n⟩ / σ_B(n)`.
    pub fn width_from_points(&self, n: &Vector3<f64>) -> Result<f64> {
        let n = n.normalize();
        let p = self.support_point(&n)?;
        let q = self.support_point(&-n)?;
        Ok((p - q).dot(&n) / self.norm.support_function(&n)?)
    }

    /// Boundary chart over the normal sphere.
    pub fn surface(&self) -> Surface {
        Surface::new(Arc::new(SupportChart::new(Arc::new(self.clone()))))
    }
}

impl SupportBody for WidthBody {
    fn label(&self) -> String {
        format!(
            "width-body(c={}, eps={}, P={}, {})",
            self.width,
            self.epsilon,
            self.perturbation.label(),
            self.norm.label()
        )
    }

    fn boundary(&self, n: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>)> {
        let sd = self.norm.support_point(n)?;
        let frame = Matrix3x2::from_columns(&sd.basis);
        let proj = Matrix3::identity() - n * n.transpose();
        let map = frame * sd.differential * frame.transpose() * (0.5 * self.width)
            + proj * self.perturbation.hessian(n) * proj * self.epsilon;
        let point = sd.point * (0.5 * self.width) + self.perturbation.gradient(n) * self.epsilon;
        Ok((point, map))
    }

    fn length_scale(&self) -> f64 {
        0.5 * self.width
    }
}

/// `p`, its opposite point `q = p − c·η(p)` and the residuals that certify
/// `q` as the point with parallel tangent plane.
#[derive(Clone, Debug, Serialize)]
pub struct OppositePair {
    pub p: Vector3<f64>,
    pub q: Vector3<f64>,
    pub q_params: (f64, f64),
    /// `|q − x(q_params)| / c`, the distance of `q` from the boundary point
    /// with the opposite normal.
    pub boundary_residual: f64,
    /// Angle between `ξ(q)` and `−ξ(p)`.
    pub parallel_residual: f64,
    /// `|η(q) + η(p)|`.
    pub eta_residual: f64,
}

/// Opposite point of the boundary point with parameters `at` on a body of
/// width `c` charted over its normals.
pub fn opposite_point(surface: &Surface, norm: &Norm, width: f64, at: (f64, f64)) -> Result<OppositePair> {
    let p = surface.point(at.0, at.1)?;
    let eta_p = birkhoff_normal(surface, norm, at.0, at.1)?;
    let q = p - eta_p * width;
    let q_params = antipodal_params(at.0, at.1);
    let x_q = surface.point(q_params.0, q_params.1)?;
    let eta_q = birkhoff_normal(surface, norm, q_params.0, q_params.1)?;
    let xi_p = surface.normal(at.0, at.1)?;
    let xi_q = surface.normal(q_params.0, q_params.1)?;
    Ok(OppositePair {
        p,
        q,
        q_params,
        boundary_residual: (q - x_q).norm() / width,
        parallel_residual: angle_between(&xi_q, &-xi_p),
        eta_residual: (eta_q + eta_p).norm(),
    })
}

/// Residuals of `1/λ₁(p) + 1/λ₂(q) = c` and of the symmetric form
/// `1/λ₂(p) + 1/λ₁(q) = c`, relative to `c`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityResidual {
    pub residual: f64,
    pub symmetric_residual: f64,
    pub lambda_p: (f64, f64),
    pub lambda_q: (f64, f64),
}

pub fn width_curvature_identity(surface: &Surface, norm: &Norm, width: f64, at: (f64, f64)) -> Result<IdentityResidual> {
    let q = antipodal_params(at.0, at.1);
    let cp = curvatures(surface, norm, at.0, at.1)?;
    let cq = curvatures(surface, norm, q.0, q.1)?;
    if cp.gaussian <= 0.0 || cq.gaussian <= 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "curvature must be positive at both points (K(p) = {:.3e}, K(q) = {:.3e})",
            cp.gaussian, cq.gaussian
        )));
    }
    let (p1, p2) = (cp.lambda1.max(cp.lambda2), cp.lambda1.min(cp.lambda2));
    let (q1, q2) = (cq.lambda1.max(cq.lambda2), cq.lambda1.min(cq.lambda2));
    Ok(IdentityResidual {
        residual: (1.0 / p1 + 1.0 / q2 - width).abs() / width,
        symmetric_residual: (1.0 / p2 + 1.0 / q1 - width).abs() / width,
        lambda_p: (p1, p2),
        lambda_q: (q1, q2),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct UmbilicReport {
    pub samples: usize,
    pub umbilics: usize,
    /// Umbilics whose opposite point is also umbilic.
    pub paired: usize,
    pub unpaired: usize,
    /// Whether the largest `λ₁` on the scan occurs at an umbilic.
    pub max_at_umbilic: bool,
    /// Every sample umbilic with one common curvature.
    pub sphere_signature: bool,
    pub max_relative_gap: f64,
}

/// Scan the grid `θ = iπ/N (0 < i < N)`, `φ = jπ/N (0 ≤ j < 2N)`, which is
/// closed under the opposite-point map. Umbilics have relative gap
/// `(λ₁ − λ₂)/(λ₁ + λ₂) ≤ tol`; the opposite point of an umbilic is accepted
/// with a gap up to `2·tol` scaled by the ratio of the mean curvatures.
pub fn umbilic_scan(surface: &Surface, norm: &Norm, grid: usize, tol: f64) -> Result<UmbilicReport> {
    let n = grid.max(2);
    let params: Vec<(f64, f64)> = (1..n)
        .flat_map(|i| (0..2 * n).map(move |j| (PI * i as f64 / n as f64, PI * j as f64 / n as f64)))
        .collect();
    let lambdas = params
        .par_iter()
        .map(|&(u, v)| {
            let c = curvatures(surface, norm, u, v)?;
            Ok((c.lambda1.max(c.lambda2), c.lambda1.min(c.lambda2)))
        })
        .collect::<Result<Vec<_>>>()?;
    let gap = |(a, b): (f64, f64)| (a - b) / (a + b).abs().max(f64::MIN_POSITIVE);
    let index = |i: usize, j: usize| (i - 1) * 2 * n + j;
    let mut umbilics = 0;
    let mut paired = 0;
    let mut max_gap = 0.0_f64;
    let mut arg_max = 0;
    for i in 1..n {
        for j in 0..2 * n {
            let k = index(i, j);
            let l = lambdas[k];
            max_gap = max_gap.max(gap(l));
            if l.0 > lambdas[arg_max].0 {
                arg_max = k;
            }
            if gap(l) <= tol {
                umbilics += 1;
                let o = lambdas[index(n - i, (j + n) % (2 * n))];
                let ratio = ((o.0 + o.1) / (l.0 + l.1)).abs().max(1.0);
                if gap(o) <= 2.0 * tol * ratio {
                    paired += 1;
                }
            }
        }
    }
    let all = lambdas.len();
    let (lo, hi) = lambdas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l.1), hi.max(l.0)));
    Ok(UmbilicReport {
        samples: all,
        umbilics,
        paired,
        unpaired: umbilics - paired,
        max_at_umbilic: gap(lambdas[arg_max]) <= tol,
        sphere_signature: umbilics == all && (hi - lo) <= tol * (hi + lo),
        max_relative_gap: max_gap,
    })
}

/// Summary of the constant-width checks on one body.
#[derive(Clone, Debug, Serialize)]
pub struct WidthReport {
    pub width: f64,
    pub epsilon: f64,
    pub convex: bool,
    pub convexity_margin: f64,
    pub width_deviation_max: f64,
    /// Largest difference between the two width formulas.
    pub width_cross_check_max: f64,
    pub identity_residual_max: f64,
    pub symmetric_residual_max: f64,
    pub involution_max: f64,
    pub eta_residual_max: f64,
    pub parallel_residual_max: f64,
    pub umbilic: UmbilicReport,
    pub umbilic_pairs: usize,
}

/// Build the body and run every check: widths over 500 directions, the
/// opposite-point map and the curvature identity over `samples` points, and
/// the umbilic scan on a `grid` lattice.
pub fn verify(norm: &Norm, width: f64, perturbation: Perturbation, epsilon: f64, grid: usize, samples: usize) -> Result<WidthReport> {
    let body = WidthBody::new(norm, width, perturbation, epsilon, grid.max(16))?;
    let surface = body.surface();
    let dirs = fibonacci_sphere(500);
    let widths = dirs
        .par_iter()
        .map(|n| Ok((body.width_in_direction(n)?, body.width_from_points(n)?)))
        .collect::<Result<Vec<_>>>()?;
    let width_deviation_max = widths.iter().fold(0.0_f64, |a, w| a.max((w.0 - width).abs()));
    let width_cross_check_max = widths.iter().fold(0.0_f64, |a, w| a.max((w.0 - w.1).abs()));
    let pts: Vec<(f64, f64)> = fibonacci_sphere(samples.max(1)).iter().map(angles_of).collect();
    let rows = pts
        .par_iter()
        .map(|&at| {
            let pair = opposite_point(&surface, norm, width, at)?;
            let back = opposite_point(&surface, norm, width, pair.q_params)?;
            let id = width_curvature_identity(&surface, norm, width, at)?;
            Ok(((back.q - pair.p).norm(), pair, id))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = WidthReport {
        width,
        epsilon,
        convex: true,
        convexity_margin: body.convexity_margin(),
        width_deviation_max,
        width_cross_check_max,
        identity_residual_max: 0.0,
        symmetric_residual_max: 0.0,
        involution_max: 0.0,
        eta_residual_max: 0.0,
        parallel_residual_max: 0.0,
        umbilic: umbilic_scan(&surface, norm, grid, UMBILIC_TOLERANCE)?,
        umbilic_pairs: 0,
    };
    for (inv, pair, id) in &rows {
        report.involution_max = report.involution_max.max(*inv);
        report.eta_residual_max = report.eta_residual_max.max(pair.eta_residual);
        report.parallel_residual_max = report.parallel_residual_max.max(pair.parallel_residual);
        report.identity_residual_max = report.identity_residual_max.max(id.residual);
        report.symmetric_residual_max = report.symmetric_residual_max.max(id.symmetric_residual);
    }
    report.umbilic_pairs = report.umbilic.paired;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormSpec;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_gradient_matches_differences() {
        let p = Perturbation::OddHarmonic;
        let n = Vector3::new(0.3, -0.5, 0.8);
        let fd = Perturbation::Expression(Expression::parse("z^3 - 0.6*z", &["x", "y", "z"]).unwrap());
        assert!((p.gradient(&n) - fd.gradient(&n)).norm() < 1e-7);
        assert_relative_eq!(p.value(&n), fd.value(&n), epsilon = 1e-12);
        assert_relative_eq!(p.value(&-n), -p.value(&n), epsilon = 1e-15);
    }

    #[test]
    fn unperturbed_body_is_half_scaled_ball() {
        let norm = NormSpec::blend(0.3).build().unwrap();
        let body = WidthBody::new(&norm, 3.0, Perturbation::OddHarmonic, 0.0, 16).unwrap();
        let n = Vector3::new(1.0, 2.0, -0.5).normalize();
        assert!((body.support_point(&n).unwrap() - norm.support_map(&n).unwrap() * 1.5).norm() < 1e-12);
        assert_relative_eq!(body.width_in_direction(&n).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ball_has_width_two() {
        let norm = NormSpec::ellipsoid(2.0, 1.0, 1.0).build().unwrap();
        let body = WidthBody::new(&norm, 2.0, Perturbation::OddHarmonic, 0.0, 16).unwrap();
        for n in fibonacci_sphere(20) {
            assert_relative_eq!(body.width_in_direction(&n).unwrap(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn perturbed_euclidean_body_has_constant_width() {
        let body = WidthBody::new(&Norm::euclidean(), 2.0, Perturbation::OddHarmonic, 0.05, 24).unwrap();
        for n in fibonacci_sphere(500) {
            assert!((body.width_in_direction(&n).unwrap() - 2.0).abs() < 1e-8);
            assert!((body.width_from_points(&n).unwrap() - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn large_epsilon_is_rejected_with_threshold() {
        let err = WidthBody::new(&Norm::euclidean(), 2.0, Perturbation::OddHarmonic, 5.0, 24).unwrap_err();
        match err {
            Error::EpsilonTooLarge { max_epsilon, .. } => {
                assert!(max_epsilon > 0.05 && max_epsilon < 5.0);
                assert!(WidthBody::new(&Norm::euclidean(), 2.0, Perturbation::OddHarmonic, max_epsilon, 24).is_ok());
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn scaled_ball_opposite_point_is_antipode() {
        let norm = NormSpec::blend(0.3).build().unwrap();
        let body = WidthBody::new(&norm, 2.0, Perturbation::OddHarmonic, 0.0, 16).unwrap();
        let s = body.surface();
        let pair = opposite_point(&s, &norm, 2.0, (1.1, 0.7)).unwrap();
        assert!((pair.q + pair.p).norm() < 1e-9);
        assert!(pair.boundary_residual < 1e-9);
        let id = width_curvature_identity(&s, &norm, 2.0, (1.1, 0.7)).unwrap();
        assert!(id.residual < 1e-5 && id.symmetric_residual < 1e-5, "{id:?}");
    }

    #[test]
    fn perturbed_body_identity_and_involution() {
        let body = WidthBody::new(&Norm::euclidean(), 2.0, Perturbation::OddHarmonic, 0.05, 24).unwrap();
        let s = body.surface();
        let e = Norm::euclidean();
        for at in [(0.4, 0.3), (1.3, 2.0), (2.5, 5.0)] {
            let pair = opposite_point(&s, &e, 2.0, at).unwrap();
            assert!(pair.boundary_residual < 1e-6 && pair.parallel_residual < 1e-6);
            let back = opposite_point(&s, &e, 2.0, pair.q_params).unwrap();
            assert!((back.q - pair.p).norm() < 1e-6);
            let id = width_curvature_identity(&s, &e, 2.0, at).unwrap();
            assert!(id.residual < 1e-4 && id.symmetric_residual < 1e-4, "{id:?}");
        }
    }

    #[test]
    fn scaled_ball_is_all_umbilic() {
        let norm = NormSpec::ellipsoid(2.0, 1.0, 1.0).build().unwrap();
        let body = WidthBody::new(&norm, 2.0, Perturbation::OddHarmonic, 0.0, 16).unwrap();
        let r = umbilic_scan(&body.surface(), &norm, 8, UMBILIC_TOLERANCE).unwrap();
        assert!(r.sphere_signature, "{r:?}");
        assert_eq!(r.unpaired, 0);
    }

    #[test]
    fn non_odd_perturbation_is_rejected() {
        assert!(Perturbation::parse("x^2").is_err());
        assert!(Perturbation::parse("x*y*z").is_ok());
    }
}
