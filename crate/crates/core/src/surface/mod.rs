//! Parametrized immersions and the pointwise curvature engine.
//!
//! A [`Surface`] wraps a [`Chart`] with an orientation and a parameter
//! rectangle. The functions in [`curvature`] evaluate, at a parameter point,
//! the Euclidean normal `ξ`, the Birkhoff normal `η = u∘ξ`, the matrix of
//! `dη` in the chart basis `{f_u, f_v}`, the Minkowski curvatures, the affine
//! fundamental form and the (weighted) Dupin metrics.

pub mod chart;
pub mod curvature;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub use chart::{
    Chart, Cylinder, Ellipsoid, ExpressionChart, Helicoid, Jet, Plane, QuadraticGraph, ScaledUnitSphere,
    SupportBody, SupportChart, Topology, Torus,
};
pub use curvature::{
    affine_fundamental_form, affine_fundamental_form_via_dupin, birkhoff_normal, curvatures, dupin_metrics,
    euclid_normal, flat_directions, normal_curvature, shape_operator, shape_operator_fd, sign_agreement,
    CurvatureReport, FlatDirection, SignAgreement,
};

use crate::error::{Error, Result};
use crate::norm::Norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Outward for closed surfaces, as parametrized otherwise.
    Outward,
    AsParametrized,
    Reversed,
}

/// A chart restricted to a parameter rectangle, with an orientation.
#[derive(Clone)]
pub struct Surface {
    chart: Arc<dyn Chart>,
    orientation: Orientation,
    domain: [[f64; 2]; 2],
    topology: Topology,
    sign: f64,
}

impl std::fmt::Debug for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Surface")
            .field("chart", &self.chart.label())
            .field("orientation", &self.orientation)
            .field("domain", &self.domain)
            .field("topology", &self.topology)
            .finish()
    }
}

impl Surface {
    /// Wrap a chart over its natural domain; closed charts are oriented outward.
    pub fn new(chart: Arc<dyn Chart>) -> Self {
        let domain = chart.domain();
        let topology = chart.topology();
        let mut s = Self {
            chart,
            orientation: Orientation::Outward,
            domain,
            topology,
            sign: 1.0,
        };
        s.sign = s.compute_sign();
        s
    }

    pub fn from_chart<C: Chart + 'static>(chart: C) -> Self {
        Self::new(Arc::new(chart))
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self.sign = self.compute_sign();
        self
    }

    /// Restrict to a parameter rectangle. Bounds within `1e-3` of the natural
    /// domain snap to it; any other rectangle makes the surface open.
    pub fn with_domain(mut self, domain: [[f64; 2]; 2]) -> Result<Self> {
        for r in &domain {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::Schema(format!("invalid parameter interval [{}, {}]", r[0], r[1])));
            }
        }
        let natural = self.chart.domain();
        let snaps = (0..2).all(|i| (0..2).all(|j| (domain[i][j] - natural[i][j]).abs() <= 1e-3));
        if snaps {
            self.domain = natural;
            self.topology = self.chart.topology();
        } else {
            self.domain = domain;
            self.topology = Topology::Open;
        }
        self.sign = self.compute_sign();
        Ok(self)
    }

    fn compute_sign(&self) -> f64 {
        match self.orientation {
            Orientation::AsParametrized => 1.0,
            Orientation::Reversed => -1.0,
            Orientation::Outward => {
                if !self.topology.is_closed() || self.chart.outward_parametrized() {
                    return 1.0;
                }
                let pts = self.grid(12, 12);
                let mut centre = Vector3::zeros();
                let mut count = 0.0_f64;
                for (u, v) in &pts {
                    if let Ok(p) = self.chart.point(*u, *v) {
                        centre += p;
                        count += 1.0;
                    }
                }
                centre /= count.max(1.0);
                let mut flux = 0.0;
                for (u, v) in &pts {
                    if let Ok(j) = self.chart.jet(*u, *v) {
                        flux += j.du.cross(&j.dv).dot(&(j.point - centre));
                    }
                }
                if flux < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn chart(&self) -> &Arc<dyn Chart> {
        &self.chart
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// `+1` or `−1`, the factor applied to `f_u × f_v`.
    pub fn orientation_sign(&self) -> f64 {
        self.sign
    }

    pub fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn label(&self) -> String {
        self.chart.label()
    }

    pub fn length_scale(&self) -> f64 {
        self.chart.length_scale()
    }

    pub fn jet(&self, u: f64, v: f64) -> Result<Jet> {
        let j = self.chart.jet(u, v)?;
        let finite = [j.point, j.du, j.dv, j.duu, j.duv, j.dvv]
            .iter()
            .all(|x| x.iter().all(|c| c.is_finite()));
        if finite {
            Ok(j)
        } else {
            Err(Error::numeric(format!("chart jet at ({u}, {v})"), f64::NAN))
        }
    }

    pub fn point(&self, u: f64, v: f64) -> Result<Vector3<f64>> {
        self.chart.point(u, v)
    }

    pub fn tangents(&self, u: f64, v: f64) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        self.chart.tangents(u, v)
    }

    /// Oriented Euclidean unit normal from first derivatives only. At a
    /// degenerate parameter point (a pole) the normal of a nearby interior
    /// point is returned.
    pub fn normal(&self, u: f64, v: f64) -> Result<Vector3<f64>> {
        let scale = self.length_scale();
        let [[u0, u1], _] = self.domain;
        let mid = 0.5 * (u0 + u1);
        for k in 0..4 {
            let uu = if k == 0 { u } else { u + (mid - u).signum() * 1e-7 * 10f64.powi(k) * (u1 - u0) };
            let (_, a, b) = self.tangents(uu, v)?;
            let n = a.cross(&b);
            let len = n.norm();
            if len > 1e-12 * scale * scale {
                return Ok(n * (self.sign / len));
            }
        }
        Err(Error::NotImmersed { u, v })
    }

    /// Interior grid of `nu × nv` cell-centred parameter points.
    pub fn grid(&self, nu: usize, nv: usize) -> Vec<(f64, f64)> {
        let [[u0, u1], [v0, v1]] = self.domain;
        let mut out = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            for j in 0..nv {
                let u = u0 + (u1 - u0) * (i as f64 + 0.5) / nu as f64;
                let v = v0 + (v1 - v0) * (j as f64 + 0.5) / nv as f64;
                out.push((u, v));
            }
        }
        out
    }

    /// Bring a parameter pair back into the domain: periodic directions wrap,
    /// the others clamp. On sphere topology the polar angle reflects across
    /// the poles.
    pub fn wrap(&self, u: f64, v: f64) -> (f64, f64) {
        let [[u0, u1], [v0, v1]] = self.domain;
        let wrap1 = |x: f64, a: f64, b: f64| a + (x - a).rem_euclid(b - a);
        let (mut u, mut v) = (u, v);
        if self.topology == Topology::Sphere {
            let mut t = u.rem_euclid(TAU);
            if t > PI {
                t = TAU - t;
                v += PI;
            }
            u = t;
        } else if self.topology.periodic_u() {
            u = wrap1(u, u0, u1);
        } else {
            u = u.clamp(u0, u1);
        }
        if self.topology.periodic_v() {
            v = wrap1(v, v0, v1);
        } else {
            v = v.clamp(v0, v1);
        }
        (u, v)
    }

    /// Parameters of the surface point nearest to `x`, by damped Gauss–Newton
    /// started at `hint`.
    pub fn project(&self, x: &Vector3<f64>, hint: (f64, f64)) -> Result<(f64, f64)> {
        let (mut u, mut v) = self.wrap(hint.0, hint.1);
        let mut p = self.point(u, v)?;
        let mut err = (p - x).norm_squared();
        let scale = self.length_scale();
        let mut mu = 1e-9 * scale * scale;
        for _ in 0..100 {
            if err <= (1e-15 * scale).powi(2) {
                break;
            }
            let (_, du, dv) = self.tangents(u, v)?;
            let r = p - x;
            let jtj = Matrix2::new(du.dot(&du), du.dot(&dv), dv.dot(&du), dv.dot(&dv));
            let g = Vector2::new(du.dot(&r), dv.dot(&r));
            if g.norm() <= 1e-14 * jtj.norm().sqrt() * r.norm().max(scale) {
                break;
            }
            let mut improved = false;
            for _ in 0..30 {
                let step = (jtj + Matrix2::identity() * mu)
                    .try_inverse()
                    .map(|m| -(m * g))
                    .unwrap_or_else(Vector2::zeros);
                let (nu, nv) = self.wrap(u + step.x, v + step.y);
                let np = self.point(nu, nv)?;
                let ne = (np - x).norm_squared();
                if ne < err {
                    u = nu;
                    v = nv;
                    p = np;
                    err = ne;
                    mu = (mu * 0.3).max(1e-14);
                    improved = true;
                    break;
                }
                mu *= 10.0;
            }
            if !improved {
                break;
            }
        }
        Ok((u, v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceFamily {
    Plane,
    Sphere,
    Ellipsoid,
    Torus,
    Cylinder,
    Helicoid,
    Graph,
    /// `r·∂B` of the active norm.
    UnitSphere,
    Custom,
}

/// Serialized surface description, e.g.
/// `{"family":"torus","params":{"R":2.0,"rho":0.5},"orientation":"outward"}`.
///
/// Family parameters: `sphere` – `r` (default 1); `ellipsoid` – `a`, `b`,
/// `c`; `torus` – `R`, `rho`; `cylinder` – `r`, `h` (defaults 1);
/// `helicoid` – `pitch` (default 1); `graph` – `a`, `b`, `c` for
/// `z = a u² + b uv + c v²` or an expression `g` in `u`, `v`; `unit-sphere` –
/// `r` (default 1); `custom` – expressions `x`, `y`, `z` in `u`, `v` and a
/// required `domain`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub family: SurfaceFamily,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub orientation: Option<Orientation>,
    #[serde(default)]
    pub domain: Option<[[f64; 2]; 2]>,
}

impl SurfaceSpec {
    pub fn new(family: SurfaceFamily) -> Self {
        Self {
            family,
            params: BTreeMap::new(),
            orientation: None,
            domain: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    fn number(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.params.get(key) {
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Schema(format!("`params.{key}` must be a finite number"))),
            None => default.ok_or_else(|| {
                Error::Schema(format!("surface family {:?} requires parameter `params.{key}`", self.family))
            }),
        }
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let x = self.number(key, default)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(Error::Schema(format!("`params.{key}` must be positive")))
        }
    }

    fn text(&self, key: &str) -> Result<Option<String>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(Error::Schema(format!("`params.{key}` must be a string"))),
        }
    }

    fn required_text(&self, key: &str) -> Result<String> {
        self.text(key)?.ok_or_else(|| {
            Error::Schema(format!("surface family {:?} requires parameter `params.{key}`", self.family))
        })
    }

    /// Build the surface; `norm` is only consulted by `unit-sphere`.
    pub fn build(&self, norm: &Norm) -> Result<Surface> {
        let chart: Arc<dyn Chart> = match self.family {
            SurfaceFamily::Plane => Arc::new(Plane),
            SurfaceFamily::Sphere => Arc::new(Ellipsoid::sphere(self.positive("r", Some(1.0))?)),
            SurfaceFamily::Ellipsoid => Arc::new(Ellipsoid {
                axes: Vector3::new(
                    self.positive("a", None)?,
                    self.positive("b", None)?,
                    self.positive("c", None)?,
                ),
            }),
            SurfaceFamily::Torus => {
                let major = self.positive("R", None)?;
                let minor = self.positive("rho", None)?;
                if minor >= major {
                    return Err(Error::Schema("torus needs rho < R".into()));
                }
                Arc::new(Torus { major, minor })
            }
            SurfaceFamily::Cylinder => Arc::new(Cylinder {
                radius: self.positive("r", Some(1.0))?,
                half_height: self.positive("h", Some(1.0))?,
            }),
            SurfaceFamily::Helicoid => {
                let pitch = self.number("pitch", Some(1.0))?;
                if pitch == 0.0 {
                    return Err(Error::Schema("helicoid pitch must be non-zero".into()));
                }
                Arc::new(Helicoid { pitch })
            }
            SurfaceFamily::Graph => match self.text("g")? {
                Some(g) => {
                    let domain = self.domain.unwrap_or([[-1.0, 1.0], [-1.0, 1.0]]);
                    Arc::new(ExpressionChart::graph(&g, domain)?)
                }
                None => Arc::new(QuadraticGraph {
                    a: self.number("a", Some(0.0))?,
                    b: self.number("b", Some(0.0))?,
                    c: self.number("c", Some(0.0))?,
                }),
            },
            SurfaceFamily::UnitSphere => Arc::new(SupportChart::new(Arc::new(ScaledUnitSphere {
                norm: Arc::new(norm.clone()),
                radius: self.positive("r", Some(1.0))?,
            }))),
            SurfaceFamily::Custom => {
                let domain = self
                    .domain
                    .ok_or_else(|| Error::Schema("custom surfaces require `domain`".into()))?;
                Arc::new(ExpressionChart::new(
                    &self.required_text("x")?,
                    &self.required_text("y")?,
                    &self.required_text("z")?,
                    domain,
                    Topology::Open,
                )?)
            }
        };
        let mut surface = Surface::new(chart);
        if let Some(d) = self.domain {
            surface = surface.with_domain(d)?;
        }
        if let Some(o) = self.orientation {
            surface = surface.with_orientation(o);
        }
        surface.immersion_probe()?;
        Ok(surface)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Schema(e.to_string())
        })
    }
}

impl Surface {
    /// Check `f_u × f_v ≠ 0` on an interior grid.
    pub fn immersion_probe(&self) -> Result<()> {
        let scale = self.length_scale();
        for (u, v) in self.grid(9, 9) {
            let j = self.jet(u, v)?;
            if j.du.cross(&j.dv).norm() <= 1e-12 * scale * scale {
                return Err(Error::NotImmersed { u, v });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn torus_spec_round_trips_and_snaps_domain() {
        let spec = SurfaceSpec::from_json(
            r#"{"family":"torus","params":{"R":2.0,"rho":0.5},"orientation":"outward","domain":[[0,6.2832],[0,6.2832]]}"#,
        )
        .unwrap();
        let s = spec.build(&Norm::euclidean()).unwrap();
        assert_eq!(s.topology(), Topology::Torus);
        assert_eq!(s.domain()[0][1], TAU);
    }

    #[test]
    fn restricted_domain_is_open() {
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.5 })
            .with_domain([[0.0, 1.0], [0.0, 1.0]])
            .unwrap();
        assert_eq!(s.topology(), Topology::Open);
    }

    #[test]
    fn missing_parameter_is_named() {
        let spec = SurfaceSpec::new(SurfaceFamily::Torus).param("R", 2.0);
        let err = spec.build(&Norm::euclidean()).unwrap_err();
        assert!(err.to_string().contains("params.rho"), "{err}");
    }

    #[test]
    fn reversed_custom_sphere_is_reoriented_outward() {
        // φ-first parametrization flips f_u × f_v inward
        let chart = ExpressionChart::new(
            "sin(v)*cos(u)",
            "sin(v)*sin(u)",
            "cos(v)",
            [[0.0, TAU], [0.0, PI]],
            Topology::Torus,
        )
        .unwrap();
        let s = Surface::from_chart(chart);
        assert_eq!(s.orientation_sign(), -1.0);
        let s = s.with_orientation(Orientation::AsParametrized);
        assert_eq!(s.orientation_sign(), 1.0);
    }

    #[test]
    fn project_recovers_parameters() {
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.5 });
        let x = s.point(1.0, 2.0).unwrap();
        let (u, v) = s.project(&(x * 1.0), (1.2, 1.8)).unwrap();
        assert_relative_eq!(u, 1.0, epsilon = 1e-9);
        assert_relative_eq!(v, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn sphere_wrap_reflects_through_poles() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        let (u, v) = s.wrap(-0.1, 0.5);
        assert_relative_eq!(u, 0.1, epsilon = 1e-15);
        assert_relative_eq!(v, 0.5 + PI, epsilon = 1e-15);
        let a = s.point(-0.1, 0.5).unwrap();
        let b = s.point(u, v).unwrap();
        assert_relative_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
    }
}
