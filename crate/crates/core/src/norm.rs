//! Admissible norms on ℝ³ and the geometry of their unit spheres.
//!
//! A norm is given by its gauge `γ` (the Minkowski functional of the unit
//! ball `B`). Everything else is derived from `γ` and its first two
//! derivatives:
//!
//! * the support map `u`, sending a Euclidean unit normal `n` to the point of
//!   `∂B` whose outward normal is `n` (inverse of the Gauss map of `∂B`);
//! * its differential `du_n`, a symmetric positive definite map of `n⊥`;
//! * the Weingarten map `du_n⁻¹` of `∂B` and its Gaussian curvature `K_∂B`;
//! * Birkhoff orthogonality and the admissibility scan (`m = inf K_∂B`,
//!   `m̄ = sup K_∂B`).

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::linalg::{angle_between, tangent_basis};
use crate::sampling::{fibonacci_sphere, lat_long_sphere, symmetric_directions, SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormFamily {
    Euclidean,
    Ellipsoid,
    #[serde(rename = "l2-l4-blend")]
    L2L4Blend,
    Custom,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    #[default]
    Analytic,
    FiniteDifference,
}

fn default_fd_step() -> f64 {
    1e-5
}

/// Serialized description of a norm, e.g.
/// `{"family": "ellipsoid", "params": {"a": 2.0, "b": 1.0, "c": 1.0}}`.
///
/// Family parameters:
/// * `euclidean` – none;
/// * `ellipsoid` – semi-axes `a`, `b`, `c > 0` (unit ball `x²/a² + y²/b² + z²/c² ≤ 1`);
/// * `l2-l4-blend` – weight `t ∈ [0, 1]`, `‖x‖ = (1 − t)‖x‖₂ + t‖x‖₄`
///   (`t = 1` is accepted so the scan can flag the flat points of `‖·‖₄`);
/// * `custom` – `gauge`: expression in `x`, `y`, `z`; derivatives are always
///   finite differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub family: NormFamily,
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub derivative_mode: DerivativeMode,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

impl NormSpec {
    /// Parse a JSON norm description; syntax and schema errors carry the
    /// line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    fn with(family: NormFamily, params: &[(&str, serde_json::Value)]) -> Self {
        Self {
            family,
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            derivative_mode: DerivativeMode::Analytic,
            fd_step: default_fd_step(),
        }
    }

    pub fn euclidean() -> Self {
        Self::with(NormFamily::Euclidean, &[])
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        Self::with(
            NormFamily::Ellipsoid,
            &[("a", a.into()), ("b", b.into()), ("c", c.into())],
        )
    }

    pub fn blend(t: f64) -> Self {
        Self::with(NormFamily::L2L4Blend, &[("t", t.into())])
    }

    pub fn custom(gauge: &str) -> Self {
        let mut s = Self::with(NormFamily::Custom, &[("gauge", gauge.into())]);
        s.derivative_mode = DerivativeMode::FiniteDifference;
        s
    }

    pub fn finite_difference(mut self) -> Self {
        self.derivative_mode = DerivativeMode::FiniteDifference;
        self
    }

    fn number(&self, key: &str) -> Result<f64> {
        match self.params.get(key) {
            None => Err(Error::Schema(format!(
                "norm family {:?} requires parameter `params.{key}`",
                self.family
            ))),
            Some(v) => v.as_f64().ok_or_else(|| {
                Error::Schema(format!("parameter `params.{key}` must be a number"))
            }),
        }
    }

    /// Validate and build the norm.
    pub fn build(&self) -> Result<Norm> {
        Norm::from_spec(self)
    }
}

#[derive(Clone, Debug)]
enum Gauge {
    Euclidean,
    /// Diagonal of `diag(1/a², 1/b², 1/c²)`.
    Ellipsoid(Vector3<f64>),
    Blend(f64),
    Custom(Expression),
}

/// Numerical controls of the support-point solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportTolerance {
    /// Gauge residual `|γ(q) − 1|` and normal-angle residual target.
    pub residual: f64,
    pub max_iterations: usize,
}

impl Default for SupportTolerance {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            max_iterations: 60,
        }
    }
}

/// A validated admissible-norm candidate.
#[derive(Clone, Debug)]
pub struct Norm {
    spec: NormSpec,
    gauge: Gauge,
    mode: DerivativeMode,
    fd_step: f64,
    tolerance: SupportTolerance,
}

/// Everything the support map yields at one normal direction.
#[derive(Clone, Debug, Serialize)]
pub struct SupportData {
    /// Euclidean unit normal `n`.
    pub normal: Vector3<f64>,
    /// `u(n) ∈ ∂B`.
    pub point: Vector3<f64>,
    /// Tangent basis `(e1, e2)` of `n⊥` in which the 2×2 arrays are expressed.
    pub basis: [Vector3<f64>; 2],
    /// `du_n` in the basis.
    pub differential: Matrix2<f64>,
    /// `du_n⁻¹`, the Weingarten map of `∂B` at `u(n)`.
    pub weingarten: Matrix2<f64>,
    /// Euclidean Gaussian curvature of `∂B` at `u(n)`.
    pub sphere_curvature: f64,
    /// `|∇γ(u(n))|`; equals `1/σ_B(n)`.
    pub gradient_norm: f64,
    pub gauge_residual: f64,
    pub angle_residual: f64,
    pub iterations: usize,
    /// Set when the caller passed a non-unit normal.
    pub normalized_input: bool,
}

impl SupportData {
    pub fn to_tangent(&self, w: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(w.dot(&self.basis[0]), w.dot(&self.basis[1]))
    }

    pub fn from_tangent(&self, c: &Vector2<f64>) -> Vector3<f64> {
        self.basis[0] * c.x + self.basis[1] * c.y
    }

    /// `du_n(w)` for `w ∈ n⊥` (the normal component of `w` is ignored).
    pub fn apply_differential(&self, w: &Vector3<f64>) -> Vector3<f64> {
        self.from_tangent(&(self.differential * self.to_tangent(w)))
    }

    /// `du_n⁻¹(w)` for `w ∈ n⊥`.
    pub fn apply_weingarten(&self, w: &Vector3<f64>) -> Vector3<f64> {
        self.from_tangent(&(self.weingarten * self.to_tangent(w)))
    }

    /// `σ_B(n) = ⟨u(n), n⟩`.
    pub fn support_value(&self) -> f64 {
        self.point.dot(&self.normal)
    }
}

/// Result of scanning `K_∂B` over a grid of normals.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub m: f64,
    pub m_bar: f64,
    pub admissible: bool,
    pub grid_size: usize,
    pub min_location: Vector3<f64>,
    pub max_location: Vector3<f64>,
    /// Set when a support solve failed; `min_location` is then its normal.
    pub failure: Option<String>,
}

/// Extremes of the Euclidean length over `∂B`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEquivalence {
    /// `min_{x∈∂B} |x|`, the inradius of `B`.
    pub min_euclidean: f64,
    /// `max_{x∈∂B} |x|`, the circumradius of `B`.
    pub max_euclidean: f64,
}

impl NormEquivalence {
    /// Smallest `c` with `(1/c)|x| ≤ ‖x‖ ≤ c|x|`.
    pub fn sandwich_constant(&self) -> f64 {
        self.max_euclidean.max(1.0 / self.min_euclidean)
    }

    /// `inf_{v∈∂B} |v|/‖v‖`, the constant of the diameter bound.
    pub fn bonnet_constant(&self) -> f64 {
        self.min_euclidean
    }

    /// Radius of the largest Euclidean ball inside `B`.
    pub fn inradius(&self) -> f64 {
        self.min_euclidean
    }
}

/// Outcome of a Birkhoff orthogonality test.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BirkhoffCheck {
    pub orthogonal: bool,
    pub residual: f64,
}

impl Norm {
    pub fn from_spec(spec: &NormSpec) -> Result<Self> {
        if !(spec.fd_step.is_finite() && spec.fd_step > 0.0) {
            return Err(Error::Schema("fd_step must be a positive real".into()));
        }
        let gauge = match spec.family {
            NormFamily::Euclidean => Gauge::Euclidean,
            NormFamily::Ellipsoid => {
                let (a, b, c) = (spec.number("a")?, spec.number("b")?, spec.number("c")?);
                for (k, v) in [("a", a), ("b", b), ("c", c)] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::Schema(format!("ellipsoid semi-axis {k} must be positive")));
                    }
                }
                Gauge::Ellipsoid(Vector3::new(1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c)))
            }
            NormFamily::L2L4Blend => {
                let t = spec.number("t")?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::Schema("blend weight t must lie in [0, 1]".into()));
                }
                Gauge::Blend(t)
            }
            NormFamily::Custom => {
                let src = spec
                    .params
                    .get("gauge")
                    .ok_or_else(|| Error::Schema("custom norm requires `params.gauge`".into()))?
                    .as_str()
                    .ok_or_else(|| Error::Schema("`params.gauge` must be a string".into()))?;
                Gauge::Custom(Expression::parse(src, &["x", "y", "z"])?)
            }
        };
        let mode = match gauge {
            Gauge::Custom(_) => DerivativeMode::FiniteDifference,
            _ => spec.derivative_mode,
        };
        let norm = Self {
            spec: spec.clone(),
            gauge,
            mode,
            fd_step: spec.fd_step,
            tolerance: SupportTolerance::default(),
        };
        norm.probe()?;
        Ok(norm)
    }

    pub fn euclidean() -> Self {
        NormSpec::euclidean().build().expect("euclidean norm")
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn family(&self) -> NormFamily {
        self.spec.family
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.gauge, Gauge::Euclidean)
    }

    pub fn with_tolerance(mut self, tolerance: SupportTolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn tolerance(&self) -> SupportTolerance {
        self.tolerance
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.gauge {
            Gauge::Euclidean => "euclidean".into(),
            Gauge::Ellipsoid(d) => format!(
                "ellipsoid({}, {}, {})",
                1.0 / d.x.sqrt(),
                1.0 / d.y.sqrt(),
                1.0 / d.z.sqrt()
            ),
            Gauge::Blend(t) => format!("l2-l4-blend({t})"),
            Gauge::Custom(e) => format!("custom({})", e.source()),
        }
    }

    /// Homogeneity, symmetry and positivity probe on 100 seeded rays.
    fn probe(&self) -> Result<()> {
        let mut rng = SeededRng::new(0x5eed_0f_9a_u64);
        for _ in 0..100 {
            let d = rng.direction() * rng.uniform(0.2, 3.0);
            let g = self.eval(&d);
            let gm = self.eval(&(-d));
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Schema(format!(
                    "gauge is not positive at x = [{}, {}, {}] (value {g})",
                    d.x, d.y, d.z
                )));
            }
            if (g - gm).abs() > 1e-9 * g.abs().max(1.0) {
                return Err(Error::Schema(format!(
                    "gauge is not symmetric: γ(x) = {g} but γ(−x) = {gm} at x = [{}, {}, {}]",
                    d.x, d.y, d.z
                )));
            }
            let s = rng.uniform(0.1, 5.0);
            let gs = self.eval(&(d * s));
            if (gs - s * g).abs() > 1e-9 * (s * g).max(1.0) {
                return Err(Error::Schema(format!(
                    "gauge is not 1-homogeneous at x = [{}, {}, {}]: γ({s}x) = {gs}, {s}γ(x) = {}",
                    d.x,
                    d.y,
                    d.z,
                    s * g
                )));
            }
        }
        Ok(())
    }

    fn eval(&self, x: &Vector3<f64>) -> f64 {
        match &self.gauge {
            Gauge::Euclidean => x.norm(),
            Gauge::Ellipsoid(d) => x.component_mul(d).dot(x).sqrt(),
            Gauge::Blend(t) => (1.0 - t) * x.norm() + t * l4(x),
            Gauge::Custom(e) => e.eval(x.as_slice()),
        }
    }

    /// `‖x‖`. Returns 0 at the origin.
    pub fn gauge(&self, x: &Vector3<f64>) -> f64 {
        if x.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        self.eval(x)
    }

    /// `‖x‖`, rejecting non-finite input.
    pub fn try_gauge(&self, x: &Vector3<f64>) -> Result<f64> {
        if !x.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("gauge argument must be finite"));
        }
        Ok(self.gauge(x))
    }

    /// `∇γ(x)` for `x ≠ 0`.
    pub fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        if self.mode == DerivativeMode::FiniteDifference {
            return self.fd_gradient(x);
        }
        match &self.gauge {
            Gauge::Euclidean => x / x.norm(),
            Gauge::Ellipsoid(d) => x.component_mul(d) / self.eval(x),
            Gauge::Blend(t) => {
                let s = l4(x);
                let s3 = s * s * s;
                (1.0 - t) * x / x.norm() + *t * x.map(|c| c * c * c) / s3
            }
            Gauge::Custom(_) => self.fd_gradient(x),
        }
    }

    /// `∇²γ(x)` for `x ≠ 0`.
    pub fn hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        if self.mode == DerivativeMode::FiniteDifference {
            return self.fd_hessian(x);
        }
        match &self.gauge {
            Gauge::Euclidean => euclid_hessian(x),
            Gauge::Ellipsoid(d) => {
                let q = x.component_mul(d).dot(x);
                let g = q.sqrt();
                let dx = x.component_mul(d);
                (Matrix3::from_diagonal(d) - dx * dx.transpose() / q) / g
            }
            Gauge::Blend(t) => {
                let s = l4(x);
                let s3 = s * s * s;
                let s7 = s3 * s3 * s;
                let cubes = x.map(|c| c * c * c);
                let l4_hess = Matrix3::from_diagonal(&x.map(|c| 3.0 * c * c / s3))
                    - cubes * cubes.transpose() * (3.0 / s7);
                (1.0 - t) * euclid_hessian(x) + *t * l4_hess
            }
            Gauge::Custom(_) => self.fd_hessian(x),
        }
    }

    fn fd_gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let h = self.fd_step * x.norm();
        Vector3::from_fn(|i, _| {
            let mut e = Vector3::zeros();
            e[i] = h;
            (self.eval(&(x + e)) - self.eval(&(x - e))) / (2.0 * h)
        })
    }

    fn fd_hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let h = 10.0 * self.fd_step * x.norm();
        let f0 = self.eval(x);
        let mut m = Matrix3::zeros();
        let e = |i: usize| {
            let mut v = Vector3::zeros();
            v[i] = h;
            v
        };
        for i in 0..3 {
            m[(i, i)] = (self.eval(&(x + e(i))) - 2.0 * f0 + self.eval(&(x - e(i)))) / (h * h);
            for j in 0..i {
                let v = (self.eval(&(x + e(i) + e(j))) - self.eval(&(x + e(i) - e(j)))
                    - self.eval(&(x - e(i) + e(j)))
                    + self.eval(&(x - e(i) - e(j))))
                    / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Projected Newton solve for the point of `∂B` with outward normal `n`
    /// (unit). Maximises `⟨x, n⟩` on `{γ = 1}` through the bordered system
    /// `∇γ(x) = λn, γ(x) = 1`.
    fn solve_support(&self, n: &Vector3<f64>) -> Result<(Vector3<f64>, usize, f64, f64)> {
        let tol = self.tolerance.residual;
        let mut x = n / self.eval(n);
        let mut angle = angle_between(&self.gradient(&x), n);
        let mut iterations = 0;
        let target = match self.mode {
            DerivativeMode::Analytic => tol.min(1e-15),
            DerivativeMode::FiniteDifference => tol,
        };
        while angle > target && iterations < self.tolerance.max_iterations {
            iterations += 1;
            let g = self.gradient(&x);
            let hess = self.hessian(&x);
            let lambda = g.dot(n);
            let r = g - n * lambda;
            let mut a = Matrix4::zeros();
            a.fixed_view_mut::<3, 3>(0, 0).copy_from(&hess);
            for i in 0..3 {
                a[(i, 3)] = -n[i];
                a[(3, i)] = g[i];
            }
            let rhs = Vector4::new(-r.x, -r.y, -r.z, -(self.eval(&x) - 1.0));
            let step = match a.lu().solve(&rhs) {
                Some(s) => Vector3::new(s.x, s.y, s.z),
                None => break,
            };
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = x + step * alpha;
                let gt = self.eval(&trial);
                if gt.is_finite() && gt > 0.0 {
                    let trial = trial / gt;
                    let a_new = angle_between(&self.gradient(&trial), n);
                    if a_new < angle {
                        x = trial;
                        angle = a_new;
                        improved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        let gauge_residual = (self.eval(&x) - 1.0).abs();
        // A finite-difference gauge cannot resolve the angle below its step noise.
        let floor = match self.mode {
            DerivativeMode::Analytic => tol,
            DerivativeMode::FiniteDifference => tol.max(1e-8),
        };
        if angle > floor || gauge_residual > tol {
            return Err(Error::numeric(
                format!("support point for normal [{}, {}, {}]", n.x, n.y, n.z),
                angle.max(gauge_residual),
            ));
        }
        Ok((x, iterations, gauge_residual, angle))
    }

    /// Support point together with the raw Weingarten map, without requiring
    /// positive definiteness.
    fn support_raw(&self, normal: &Vector3<f64>) -> Result<(Vector3<f64>, [Vector3<f64>; 2], Matrix2<f64>, f64, usize, f64, f64)> {
        let (point, iterations, gres, ares) = self.solve_support(normal)?;
        let (e1, e2) = tangent_basis(normal);
        let g = self.gradient(&point);
        let gn = g.norm();
        let hess = self.hessian(&point);
        let basis = [e1, e2];
        let mut w = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                w[(i, j)] = basis[i].dot(&(hess * basis[j])) / gn;
            }
        }
        let w = crate::linalg::sym2(&w);
        Ok((point, basis, w, gn, iterations, gres, ares))
    }

    /// `u(n)` with its differential and the curvature of `∂B` there.
    ///
    /// A non-unit `n` is normalised and the fact recorded in
    /// [`SupportData::normalized_input`]. Fails with `NotAdmissible` when the
    /// tangential Hessian of the gauge is not positive definite.
    pub fn support_point(&self, n: &Vector3<f64>) -> Result<SupportData> {
        let len = n.norm();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::invalid("support normal must be non-zero and finite"));
        }
        let normalized_input = (len - 1.0).abs() > 1e-12;
        if normalized_input {
            log::warn!("support_point: normal of length {len} was normalised");
        }
        let normal = n / len;
        let (point, basis, weingarten, gradient_norm, iterations, gauge_residual, angle_residual) =
            self.support_raw(&normal)?;
        let det = weingarten.determinant();
        if !(weingarten[(0, 0)] > 0.0 && det > 0.0) {
            return Err(Error::NotAdmissible(format!(
                "tangential Hessian of the gauge is not positive definite at normal [{}, {}, {}] (det {det:.3e})",
                normal.x, normal.y, normal.z
            )));
        }
        let differential = weingarten
            .try_inverse()
            .ok_or_else(|| Error::NotAdmissible("singular Weingarten map".into()))?;
        Ok(SupportData {
            normal,
            point,
            basis,
            differential,
            weingarten,
            sphere_curvature: det,
            gradient_norm,
            gauge_residual,
            angle_residual,
            iterations,
            normalized_input,
        })
    }

    /// `du_n` by central differences of `n ↦ u(n)` along the tangent basis,
    /// relative step `fd_step`.
    pub fn differential_fd(&self, n: &Vector3<f64>) -> Result<Matrix2<f64>> {
        let normal = n.normalize();
        let (e1, e2) = tangent_basis(&normal);
        let h = self.fd_step;
        let mut m = Matrix2::zeros();
        for (j, e) in [e1, e2].iter().enumerate() {
            let plus = self.solve_support(&(normal + e * h).normalize())?.0;
            let minus = self.solve_support(&(normal - e * h).normalize())?.0;
            let col = (plus - minus) / (2.0 * h);
            m[(0, j)] = col.dot(&e1);
            m[(1, j)] = col.dot(&e2);
        }
        Ok(m)
    }

    /// `σ_B(n) = max_{‖x‖≤1} ⟨x, n⟩`, 1-homogeneous in `n`.
    pub fn support_function(&self, n: &Vector3<f64>) -> Result<f64> {
        let len = n.norm();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::invalid("support_function needs a non-zero direction"));
        }
        let unit = n / len;
        let (x, ..) = self.solve_support(&unit)?;
        Ok(len * x.dot(&unit))
    }

    /// The support point alone, for callers that only need `u(n)`.
    pub fn support_map(&self, n: &Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.solve_support(&n.normalize())?.0)
    }

    /// Is `v` Birkhoff orthogonal to `span{w1, w2}`, i.e. does the plane
    /// support `B` at `v/‖v‖`? The residual is the largest pairing of the
    /// gauge gradient with the normalised spanning vectors.
    pub fn birkhoff_orthogonal(
        &self,
        v: &Vector3<f64>,
        w1: &Vector3<f64>,
        w2: &Vector3<f64>,
        tol: f64,
    ) -> Result<BirkhoffCheck> {
        if v.norm() == 0.0 || !v.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("v must be non-zero and finite"));
        }
        let (n1, n2) = (w1.norm(), w2.norm());
        if n1 == 0.0 || n2 == 0.0 || w1.cross(w2).norm() <= 1e-12 * n1 * n2 {
            return Err(Error::invalid("plane spanning vectors are degenerate"));
        }
        let g = self.gradient(&(v / self.gauge(v)));
        let residual = (g.dot(w1) / n1).abs().max((g.dot(w2) / n2).abs());
        Ok(BirkhoffCheck {
            orthogonal: residual <= tol,
            residual,
        })
    }

    /// Pattern search from a grid extreme of `K_∂B`; `sign = 1` minimises,
    /// `sign = -1` maximises.
    fn polish_extreme(&self, n0: Vector3<f64>, k0: f64, step: f64, sign: f64) -> (Vector3<f64>, f64) {
        let curvature = |n: &Vector3<f64>| self.support_raw(n).map(|r| r.2.determinant()).ok();
        let (mut n, mut k) = (n0, k0);
        let mut s = step;
        while s > 1e-9 {
            let (e1, e2) = tangent_basis(&n);
            let mut moved = false;
            for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let trial = (n + (e1 * a + e2 * b) * s).normalize();
                if let Some(kt) = curvature(&trial) {
                    if sign * kt < sign * k {
                        n = trial;
                        k = kt;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                s *= 0.5;
            }
        }
        (n, k)
    }

    /// Scan `K_∂B` over a latitude/longitude grid of normals, then polish the
    /// extremes by a local pattern search.
    pub fn admissibility_scan(&self, grid_resolution: usize, threshold: f64) -> Result<AdmissibilityReport> {
        if grid_resolution < 8 {
            return Err(Error::invalid("admissibility grid resolution must be at least 8"));
        }
        let normals = lat_long_sphere(grid_resolution);
        let samples: Vec<(Vector3<f64>, Result<f64>)> = normals
            .par_iter()
            .map(|n| (*n, self.support_raw(n).map(|r| r.2.determinant())))
            .collect();
        let mut m = f64::INFINITY;
        let mut m_bar = f64::NEG_INFINITY;
        let mut min_location = normals[0];
        let mut max_location = normals[0];
        for (n, k) in &samples {
            match k {
                Ok(k) => {
                    if *k < m {
                        m = *k;
                        min_location = *n;
                    }
                    if *k > m_bar {
                        m_bar = *k;
                        max_location = *n;
                    }
                }
                Err(e) => {
                    return Ok(AdmissibilityReport {
                        m: 0.0,
                        m_bar: m_bar.max(0.0),
                        admissible: false,
                        grid_size: normals.len(),
                        min_location: *n,
                        max_location,
                        failure: Some(e.to_string()),
                    })
                }
            }
        }
        let step = std::f64::consts::PI / grid_resolution as f64;
        let (min_location, m) = self.polish_extreme(min_location, m, step, 1.0);
        let (max_location, m_bar) = self.polish_extreme(max_location, m_bar, step, -1.0);
        Ok(AdmissibilityReport {
            m,
            m_bar,
            admissible: m > threshold,
            grid_size: normals.len(),
            min_location,
            max_location,
            failure: None,
        })
    }

    /// Extremes of `|x|` over `∂B`: a Fibonacci grid plus the 26 symmetric
    /// directions, each extreme polished by a shrinking pattern search.
    pub fn equivalence(&self) -> NormEquivalence {
        let radius = |d: &Vector3<f64>| 1.0 / self.eval(&d.normalize());
        let mut dirs = fibonacci_sphere(4000);
        dirs.extend(symmetric_directions());
        let radii: Vec<f64> = dirs.par_iter().map(radius).collect();
        let mut imin = 0;
        let mut imax = 0;
        for (i, r) in radii.iter().enumerate() {
            if *r < radii[imin] {
                imin = i;
            }
            if *r > radii[imax] {
                imax = i;
            }
        }
        let polish = |start: Vector3<f64>, sign: f64| {
            let mut best = start;
            let mut val = sign * radius(&best);
            let mut step = 0.05;
            while step > 1e-10 {
                let (e1, e2) = tangent_basis(&best);
                let mut moved = false;
                for e in [e1, -e1, e2, -e2] {
                    let cand = (best + e * step).normalize();
                    let v = sign * radius(&cand);
                    if v > val {
                        best = cand;
                        val = v;
                        moved = true;
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            sign * val
        };
        NormEquivalence {
            min_euclidean: polish(dirs[imin], -1.0),
            max_euclidean: polish(dirs[imax], 1.0),
        }
    }
}

fn l4(x: &Vector3<f64>) -> f64 {
    x.iter().map(|c| c.powi(4)).sum::<f64>().sqrt().sqrt()
}

fn euclid_hessian(x: &Vector3<f64>) -> Matrix3<f64> {
    let r = x.norm();
    let xh = x / r;
    (Matrix3::identity() - xh * xh.transpose()) / r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauge_examples() {
        let e = Norm::euclidean();
        assert_relative_eq!(e.gauge(&Vector3::new(3.0, 4.0, 0.0)), 5.0, epsilon = 1e-15);
        let ell = NormSpec::ellipsoid(2.0, 1.0, 0.5).build().unwrap();
        assert_relative_eq!(ell.gauge(&Vector3::new(2.0, 0.0, 0.0)), 1.0, epsilon = 1e-15);
        let b = NormSpec::blend(0.5).build().unwrap();
        let expected = 0.5 * 3f64.sqrt() + 0.5 * 3f64.powf(0.25);
        assert_relative_eq!(b.gauge(&Vector3::new(1.0, 1.0, 1.0)), expected, epsilon = 1e-14);
        assert_relative_eq!(expected, 1.524062, epsilon = 1e-6);
        assert_eq!(b.gauge(&Vector3::zeros()), 0.0);
    }

    #[test]
    fn non_finite_gauge_input_is_invalid() {
        let e = Norm::euclidean();
        assert!(matches!(
            e.try_gauge(&Vector3::new(f64::NAN, 0.0, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn euclidean_support_is_identity() {
        let e = Norm::euclidean();
        let n = Vector3::new(1.0, -2.0, 0.5).normalize();
        let s = e.support_point(&n).unwrap();
        assert!((s.point - n).norm() < 1e-14);
        assert!((s.differential - Matrix2::identity()).norm() < 1e-12);
        assert_relative_eq!(s.sphere_curvature, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.support_function(&Vector3::new(0.0, 0.0, 2.0)).unwrap(), 2.0);
    }

    #[test]
    fn ellipsoid_axis_support_point_and_curvature() {
        let (a, b, c) = (2.0, 1.5, 0.7);
        let ell = NormSpec::ellipsoid(a, b, c).build().unwrap();
        let s = ell.support_point(&Vector3::x()).unwrap();
        assert!((s.point - Vector3::new(a, 0.0, 0.0)).norm() < 1e-12);
        // classical ellipsoid curvature at the a-axis endpoint
        assert_relative_eq!(s.sphere_curvature, a * a / (b * b * c * c), max_relative = 1e-10);
    }

    #[test]
    fn ellipsoid_support_function_closed_form() {
        let (a, b, c) = (2.0, 1.0, 0.5);
        let ell = NormSpec::ellipsoid(a, b, c).build().unwrap();
        for n in fibonacci_sphere(50) {
            let closed = (a * a * n.x * n.x + b * b * n.y * n.y + c * c * n.z * n.z).sqrt();
            assert_relative_eq!(ell.support_function(&n).unwrap(), closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn blend_support_residuals() {
        let b = NormSpec::blend(0.2).build().unwrap();
        let n = Vector3::new(1.0, 1.0, 1.0).normalize();
        let s = b.support_point(&n).unwrap();
        assert!((b.gauge(&s.point) - 1.0).abs() < 1e-10);
        assert!(angle_between(&b.gradient(&s.point), &n) < 1e-8);
    }

    #[test]
    fn differential_routes_agree() {
        for spec in [NormSpec::ellipsoid(2.0, 1.0, 1.5), NormSpec::blend(0.4)] {
            let norm = spec.build().unwrap();
            for n in fibonacci_sphere(12) {
                let s = norm.support_point(&n).unwrap();
                let fd = norm.differential_fd(&n).unwrap();
                assert!((s.differential - fd).norm() <= 1e-6 * s.differential.norm());
            }
        }
    }

    #[test]
    fn non_unit_normal_is_normalised() {
        let e = Norm::euclidean();
        let s = e.support_point(&Vector3::new(0.0, 3.0, 0.0)).unwrap();
        assert!(s.normalized_input);
        assert!((s.point - Vector3::y()).norm() < 1e-14);
    }

    #[test]
    fn birkhoff_orthogonality_examples() {
        let e = Norm::euclidean();
        let (x, y) = (Vector3::x(), Vector3::y());
        assert!(e.birkhoff_orthogonal(&Vector3::z(), &x, &y, 1e-9).unwrap().orthogonal);
        assert!(!e
            .birkhoff_orthogonal(&Vector3::new(1.0, 0.0, 1.0), &x, &y, 1e-9)
            .unwrap()
            .orthogonal);
        assert!(matches!(
            e.birkhoff_orthogonal(&Vector3::z(), &x, &(x * 2.0), 1e-9),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn blend_birkhoff_plane_minimises_the_gauge() {
        let b = NormSpec::blend(0.5).build().unwrap();
        let v = Vector3::new(1.0, 1.0, 1.0);
        let g = b.gradient(&v);
        let (w1, w2) = tangent_basis(&g.normalize());
        assert!(b.birkhoff_orthogonal(&v, &w1, &w2, 1e-12).unwrap().orthogonal);
        // (1,1,1) is a symmetry axis, so off-diagonal v is needed to separate
        // the Birkhoff plane from the Euclidean orthogonal plane
        let off = Vector3::new(1.0, 2.0, 3.0);
        let (p1, p2) = tangent_basis(&off.normalize());
        assert!(!b.birkhoff_orthogonal(&off, &p1, &p2, 1e-6).unwrap().orthogonal);
        let base = b.gauge(&v);
        for k in 0..36 {
            let ang = k as f64 * std::f64::consts::PI / 36.0;
            let w = w1 * ang.cos() + w2 * ang.sin();
            for i in -40..=40 {
                let t = i as f64 * 0.05;
                assert!(b.gauge(&(v + w * t)) >= base - 1e-12);
            }
        }
    }

    #[test]
    fn admissibility_examples() {
        let e = Norm::euclidean().admissibility_scan(8, 1e-8).unwrap();
        assert!(e.admissible);
        assert_relative_eq!(e.m, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.m_bar, 1.0, epsilon = 1e-12);

        let ell = NormSpec::ellipsoid(2.0, 1.0, 1.0).build().unwrap();
        let r = ell.admissibility_scan(16, 1e-8).unwrap();
        assert!(r.admissible);
        assert_relative_eq!(r.m, 0.25, max_relative = 1e-9);
        assert_relative_eq!(r.m_bar, 4.0, max_relative = 1e-9);

        let l4 = NormSpec::blend(1.0).build().unwrap();
        let r = l4.admissibility_scan(16, 1e-8).unwrap();
        assert!(!r.admissible);
        assert!(r.m < 1e-8);
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        assert!(Norm::euclidean().admissibility_scan(4, 1e-8).is_err());
    }

    #[test]
    fn equivalence_constants() {
        let ell = NormSpec::ellipsoid(2.0, 1.0, 1.0).build().unwrap();
        let q = ell.equivalence();
        assert_relative_eq!(q.sandwich_constant(), 2.0, max_relative = 1e-9);
        assert_relative_eq!(q.bonnet_constant(), 1.0, max_relative = 1e-9);
        let b = NormSpec::blend(0.5).build().unwrap().equivalence();
        assert_relative_eq!(b.min_euclidean, 1.0, max_relative = 1e-9);
        let diag = 1.0 / (0.5 + 0.5 * 3f64.powf(-0.25));
        assert_relative_eq!(b.max_euclidean, diag, max_relative = 1e-9);
    }

    #[test]
    fn custom_gauge_matches_family_and_rejects_asymmetry() {
        let c = NormSpec::custom("sqrt(x^2/4 + y^2 + z^2)").build().unwrap();
        let s = c.support_point(&Vector3::new(1.0, 1.0, 0.0).normalize()).unwrap();
        let ell = NormSpec::ellipsoid(2.0, 1.0, 1.0).build().unwrap();
        let t = ell.support_point(&Vector3::new(1.0, 1.0, 0.0).normalize()).unwrap();
        assert!((s.point - t.point).norm() < 1e-7);
        assert!((s.sphere_curvature - t.sphere_curvature).abs() < 1e-5);

        let err = NormSpec::custom("sqrt(x^2 + y^2 + z^2) + 0.3*x").build().unwrap_err();
        match err {
            Error::Schema(msg) => assert!(msg.contains("not symmetric") && msg.contains("x = [")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_params_names_the_field() {
        let err = serde_json::from_str::<NormSpec>(r#"{"family":"ellipsoid"}"#).unwrap_err();
        assert!(err.to_string().contains("params"));
        let spec: NormSpec =
            serde_json::from_str(r#"{"family":"ellipsoid","params":{"a":2.0,"b":1.0}}"#).unwrap();
        assert!(matches!(spec.build(), Err(Error::Schema(m)) if m.contains("params.c")));
    }
}
