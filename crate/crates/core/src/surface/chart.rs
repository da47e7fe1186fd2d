//! Parametrized immersion patches.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{Matrix3, Matrix3x2, Vector3};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::linalg::spherical;
use crate::norm::Norm;

/// Identification of the parameter rectangle's edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// A plain rectangle with boundary.
    Open,
    /// `u` is periodic, `v` is an interval.
    PeriodicU,
    /// Both parameters periodic.
    Torus,
    /// `u ∈ [0, π]` is the polar angle (each end collapses to a pole) and
    /// `v ∈ [0, 2π]` is periodic.
    Sphere,
}

impl Topology {
    pub fn is_closed(self) -> bool {
        matches!(self, Topology::Torus | Topology::Sphere)
    }

    pub fn periodic_u(self) -> bool {
        matches!(self, Topology::PeriodicU | Topology::Torus)
    }

    pub fn periodic_v(self) -> bool {
        matches!(self, Topology::Torus | Topology::Sphere)
    }
}

/// Point and first/second partial derivatives of a chart.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub point: Vector3<f64>,
    pub du: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub duu: Vector3<f64>,
    pub duv: Vector3<f64>,
    pub dvv: Vector3<f64>,
}

/// A smooth map from a parameter rectangle into ℝ³.
pub trait Chart: Send + Sync {
    fn label(&self) -> String;

    /// Natural parameter rectangle `[[u0, u1], [v0, v1]]`.
    fn domain(&self) -> [[f64; 2]; 2];

    fn topology(&self) -> Topology;

    fn jet(&self, u: f64, v: f64) -> Result<Jet>;

    fn point(&self, u: f64, v: f64) -> Result<Vector3<f64>> {
        Ok(self.jet(u, v)?.point)
    }

    /// `(f, f_u, f_v)`; override when second derivatives are expensive.
    fn tangents(&self, u: f64, v: f64) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        let j = self.jet(u, v)?;
        Ok((j.point, j.du, j.dv))
    }

    /// Typical size of the surface, used to scale tolerances.
    fn length_scale(&self) -> f64 {
        1.0
    }

    /// Whether `f_u × f_v` already points out of a closed surface.
    fn outward_parametrized(&self) -> bool {
        true
    }
}

/// `f(u, v) = (u, v, 0)`.
#[derive(Clone, Debug)]
pub struct Plane;

impl Chart for Plane {
    fn label(&self) -> String {
        "plane".into()
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        [[-1.0, 1.0], [-1.0, 1.0]]
    }

    fn topology(&self) -> Topology {
        Topology::Open
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        let z = Vector3::zeros();
        Ok(Jet {
            point: Vector3::new(u, v, 0.0),
            du: Vector3::x(),
            dv: Vector3::y(),
            duu: z,
            duv: z,
            dvv: z,
        })
    }
}

/// Triaxial ellipsoid `(a sin u cos v, b sin u sin v, c cos u)`; the round
/// sphere is the case `a = b = c = r`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    pub axes: Vector3<f64>,
}

impl Ellipsoid {
    pub fn sphere(r: f64) -> Self {
        Self {
            axes: Vector3::new(r, r, r),
        }
    }
}

impl Chart for Ellipsoid {
    fn label(&self) -> String {
        let a = self.axes;
        if a.x == a.y && a.y == a.z {
            format!("sphere(r={})", a.x)
        } else {
            format!("ellipsoid(a={}, b={}, c={})", a.x, a.y, a.z)
        }
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        [[0.0, PI], [0.0, TAU]]
    }

    fn topology(&self) -> Topology {
        Topology::Sphere
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let a = self.axes;
        let s = |x: Vector3<f64>| x.component_mul(&a);
        Ok(Jet {
            point: s(Vector3::new(su * cv, su * sv, cu)),
            du: s(Vector3::new(cu * cv, cu * sv, -su)),
            dv: s(Vector3::new(-su * sv, su * cv, 0.0)),
            duu: s(Vector3::new(-su * cv, -su * sv, -cu)),
            duv: s(Vector3::new(-cu * sv, cu * cv, 0.0)),
            dvv: s(Vector3::new(-su * cv, -su * sv, 0.0)),
        })
    }

    fn length_scale(&self) -> f64 {
        self.axes.max()
    }
}

/// Torus of revolution `((R + ρ cos v) cos u, (R + ρ cos v) sin u, ρ sin v)`.
#[derive(Clone, Debug)]
pub struct Torus {
    pub major: f64,
    pub minor: f64,
}

impl Chart for Torus {
    fn label(&self) -> String {
        format!("torus(R={}, rho={})", self.major, self.minor)
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        [[0.0, TAU], [0.0, TAU]]
    }

    fn topology(&self) -> Topology {
        Topology::Torus
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let (r0, r1) = (self.major, self.minor);
        let w = r0 + r1 * cv;
        Ok(Jet {
            point: Vector3::new(w * cu, w * su, r1 * sv),
            du: Vector3::new(-w * su, w * cu, 0.0),
            dv: Vector3::new(-r1 * sv * cu, -r1 * sv * su, r1 * cv),
            duu: Vector3::new(-w * cu, -w * su, 0.0),
            duv: Vector3::new(r1 * sv * su, -r1 * sv * cu, 0.0),
            dvv: Vector3::new(-r1 * cv * cu, -r1 * cv * su, -r1 * sv),
        })
    }

    fn length_scale(&self) -> f64 {
        self.major + self.minor
    }
}

/// Circular cylinder `(r cos u, r sin u, v)`, `v ∈ [−h, h]`.
#[derive(Clone, Debug)]
pub struct Cylinder {
    pub radius: f64,
    pub half_height: f64,
}

impl Chart for Cylinder {
    fn label(&self) -> String {
        format!("cylinder(r={}, h={})", self.radius, self.half_height)
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        [[0.0, TAU], [-self.half_height, self.half_height]]
    }

    fn topology(&self) -> Topology {
        Topology::PeriodicU
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        let (su, cu) = u.sin_cos();
        let r = self.radius;
        let z = Vector3::zeros();
        Ok(Jet {
            point: Vector3::new(r * cu, r * su, v),
            du: Vector3::new(-r * su, r * cu, 0.0),
            dv: Vector3::z(),
            duu: Vector3::new(-r * cu, -r * su, 0.0),
            duv: z,
            dvv: z,
        })
    }

    fn length_scale(&self) -> f64 {
        self.radius
    }
}

/// Helicoid `(v cos u, v sin u, p·u)`.
#[derive(Clone, Debug)]
pub struct Helicoid {
    pub pitch: f64,
}

impl Chart for Helicoid {
    fn label(&self) -> String {
        format!("helicoid(pitch={})", self.pitch)
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        [[-PI, PI], [-1.0, 1.0]]
    }

    fn topology(&self) -> Topology {
        Topology::Open
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        let (su, cu) = u.sin_cos();
        Ok(Jet {
            point: Vector3::new(v * cu, v * su, self.pitch * u),
            du: Vector3::new(-v * su, v * cu, self.pitch),
            dv: Vector3::new(cu, su, 0.0),
            duu: Vector3::new(-v * cu, -v * su, 0.0),
            duv: Vector3::new(-su, cu, 0.0),
            dvv: Vector3::zeros(),
        })
    }

    fn length_scale(&self) -> f64 {
        self.pitch.abs().max(1.0)
    }
}

/// Monge patch `(u, v, a u² + b uv + c v²)`.
#[derive(Clone, Debug)]
pub struct QuadraticGraph {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Chart for QuadraticGraph {
    fn label(&self) -> String {
        format!("graph(z = {} u² + {} uv + {} v²)", self.a, self.b, self.c)
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        [[-1.0, 1.0], [-1.0, 1.0]]
    }

    fn topology(&self) -> Topology {
        Topology::Open
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        let (a, b, c) = (self.a, self.b, self.c);
        Ok(Jet {
            point: Vector3::new(u, v, a * u * u + b * u * v + c * v * v),
            du: Vector3::new(1.0, 0.0, 2.0 * a * u + b * v),
            dv: Vector3::new(0.0, 1.0, b * u + 2.0 * c * v),
            duu: Vector3::new(0.0, 0.0, 2.0 * a),
            duv: Vector3::new(0.0, 0.0, b),
            dvv: Vector3::new(0.0, 0.0, 2.0 * c),
        })
    }
}

/// Finite-difference jet of a point map: first derivatives with step `h1`,
/// second derivatives with step `h2`.
pub fn fd_jet<F>(f: F, u: f64, v: f64, h1: f64, h2: f64) -> Result<Jet>
where
    F: Fn(f64, f64) -> Result<Vector3<f64>>,
{
    let p = f(u, v)?;
    let du = (f(u + h1, v)? - f(u - h1, v)?) / (2.0 * h1);
    let dv = (f(u, v + h1)? - f(u, v - h1)?) / (2.0 * h1);
    let duu = (f(u + h2, v)? - 2.0 * p + f(u - h2, v)?) / (h2 * h2);
    let dvv = (f(u, v + h2)? - 2.0 * p + f(u, v - h2)?) / (h2 * h2);
    let duv = (f(u + h2, v + h2)? - f(u + h2, v - h2)? - f(u - h2, v + h2)? + f(u - h2, v - h2)?)
        / (4.0 * h2 * h2);
    Ok(Jet {
        point: p,
        du,
        dv,
        duu,
        duv,
        dvv,
    })
}

/// Chart given by three expressions in `u` and `v`; derivatives by finite
/// differences.
#[derive(Clone, Debug)]
pub struct ExpressionChart {
    coords: [Expression; 3],
    domain: [[f64; 2]; 2],
    topology: Topology,
    scale: f64,
}

impl ExpressionChart {
    pub fn new(x: &str, y: &str, z: &str, domain: [[f64; 2]; 2], topology: Topology) -> Result<Self> {
        let vars = ["u", "v"];
        let coords = [
            Expression::parse(x, &vars)?,
            Expression::parse(y, &vars)?,
            Expression::parse(z, &vars)?,
        ];
        let du = domain[0][1] - domain[0][0];
        let dv = domain[1][1] - domain[1][0];
        if !(du > 0.0 && dv > 0.0) {
            return Err(Error::Schema("custom chart needs a non-empty domain".into()));
        }
        Ok(Self {
            coords,
            domain,
            topology,
            scale: 1.0,
        })
    }

    /// Graph `z = g(u, v)` over `domain`.
    pub fn graph(g: &str, domain: [[f64; 2]; 2]) -> Result<Self> {
        Self::new("u", "v", g, domain, Topology::Open)
    }

    fn eval(&self, u: f64, v: f64) -> Result<Vector3<f64>> {
        let p = Vector3::new(
            self.coords[0].eval(&[u, v]),
            self.coords[1].eval(&[u, v]),
            self.coords[2].eval(&[u, v]),
        );
        if p.iter().all(|c| c.is_finite()) {
            Ok(p)
        } else {
            Err(Error::numeric(format!("custom chart at ({u}, {v})"), f64::NAN))
        }
    }
}

impl Chart for ExpressionChart {
    fn label(&self) -> String {
        format!(
            "custom({}, {}, {})",
            self.coords[0].source(),
            self.coords[1].source(),
            self.coords[2].source()
        )
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }

    fn topology(&self) -> Topology {
        self.topology
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        fd_jet(|a, b| self.eval(a, b), u, v, 1e-5, 1e-4)
    }

    fn point(&self, u: f64, v: f64) -> Result<Vector3<f64>> {
        self.eval(u, v)
    }

    fn tangents(&self, u: f64, v: f64) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        let h = 1e-6;
        Ok((
            self.eval(u, v)?,
            (self.eval(u + h, v)? - self.eval(u - h, v)?) / (2.0 * h),
            (self.eval(u, v + h)? - self.eval(u, v - h)?) / (2.0 * h),
        ))
    }

    fn length_scale(&self) -> f64 {
        self.scale
    }

    fn outward_parametrized(&self) -> bool {
        false
    }
}

/// A strictly convex body described through its boundary as a function of
/// the outward Euclidean unit normal.
pub trait SupportBody: Send + Sync {
    fn label(&self) -> String;

    /// The boundary point with outward normal `n` and the differential of
    /// `n ↦ point` as a 3×3 map acting on `n⊥`.
    fn boundary(&self, n: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>)>;

    fn length_scale(&self) -> f64 {
        1.0
    }
}

/// `r·∂B` for a norm, parametrized through the support map.
#[derive(Clone, Debug)]
pub struct ScaledUnitSphere {
    pub norm: Arc<Norm>,
    pub radius: f64,
}

impl SupportBody for ScaledUnitSphere {
    fn label(&self) -> String {
        format!("{}·∂B[{}]", self.radius, self.norm.label())
    }

    fn boundary(&self, n: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>)> {
        let sd = self.norm.support_point(n)?;
        let frame = Matrix3x2::from_columns(&sd.basis);
        let m = frame * sd.differential * frame.transpose() * self.radius;
        Ok((sd.point * self.radius, m))
    }

    fn length_scale(&self) -> f64 {
        self.radius
    }
}

/// Chart of a [`SupportBody`] over the normal sphere, `(θ, φ) ↦ x(n(θ, φ))`.
///
/// First derivatives are exact (`D n_θ`, `D n_φ`); second derivatives are
/// fourth-order central differences of the first, step `1e-3`.
#[derive(Clone)]
pub struct SupportChart {
    pub body: Arc<dyn SupportBody>,
}

impl SupportChart {
    pub fn new(body: Arc<dyn SupportBody>) -> Self {
        Self { body }
    }

    fn first(&self, t: f64, p: f64) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        let n = spherical(t, p);
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        let nt = Vector3::new(ct * cp, ct * sp, -st);
        let np = Vector3::new(-st * sp, st * cp, 0.0);
        let (x, d) = self.body.boundary(&n)?;
        Ok((x, d * nt, d * np))
    }
}

impl std::fmt::Debug for SupportChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SupportChart({})", self.body.label())
    }
}

impl Chart for SupportChart {
    fn label(&self) -> String {
        self.body.label()
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        [[0.0, PI], [0.0, TAU]]
    }

    fn topology(&self) -> Topology {
        Topology::Sphere
    }

    fn jet(&self, t: f64, p: f64) -> Result<Jet> {
        let h = 1e-3;
        let (x, ft, fp) = self.first(t, p)?;
        let mut dt = [(Vector3::zeros(), Vector3::zeros()); 4];
        let mut dp = dt;
        for (k, s) in [2.0, 1.0, -1.0, -2.0].into_iter().enumerate() {
            let (_, a, b) = self.first(t + s * h, p)?;
            dt[k] = (a, b);
            let (_, a, b) = self.first(t, p + s * h)?;
            dp[k] = (a, b);
        }
        let d = |f: [Vector3<f64>; 4]| (f[1] * 8.0 - f[2] * 8.0 - f[0] + f[3]) / (12.0 * h);
        let duu = d(dt.map(|x| x.0));
        let dvv = d(dp.map(|x| x.1));
        let duv = (d(dp.map(|x| x.0)) + d(dt.map(|x| x.1))) * 0.5;
        Ok(Jet {
            point: x,
            du: ft,
            dv: fp,
            duu,
            duv,
            dvv,
        })
    }

    fn point(&self, t: f64, p: f64) -> Result<Vector3<f64>> {
        Ok(self.body.boundary(&spherical(t, p))?.0)
    }

    fn tangents(&self, t: f64, p: f64) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        self.first(t, p)
    }

    fn length_scale(&self) -> f64 {
        self.body.length_scale()
    }
}
