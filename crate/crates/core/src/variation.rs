//! Area, Birkhoff normal variations and the calculus of the weighted Dupin
//! metric `b`.
//!
//! The area of a patch is `∫ ω(f_u, f_v) du dv` with `ω(X, Y) = det[X, Y, η]`.
//! A Birkhoff normal variation moves the patch to `f + t g η`; its first
//! variation is compared against `∫ 2 g H ω`.
//!
//! Sign conventions: `η` is the outward Birkhoff normal and `H = +1/r` on a
//! round sphere. With these, the `b`-Hessian of the height over the tangent
//! plane at a critical point is `+h`, and the `b`-Laplacian of the position
//! vector has normal part `−2Hη`.

use gauss_quad::GaussLegendre;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::norm::Norm;
use crate::surface::curvature::{engine, local};
use crate::surface::Surface;

/// A smooth scalar field on the parameter rectangle.
#[derive(Clone, Debug)]
pub enum ScalarField {
    Constant(f64),
    /// `A · Π exp(1 − 1/(1 − s_k²))` with `s = (x − centre)/radius`, zero
    /// outside the box.
    Bump {
        centre: [f64; 2],
        radius: [f64; 2],
        amplitude: f64,
    },
    Expression(Expression),
}

impl ScalarField {
    /// `"1"`-style constants, `"bump"`, or an expression in `u`, `v`.
    pub fn parse(source: &str, rect: [[f64; 2]; 2]) -> Result<Self> {
        let s = source.trim();
        if s == "bump" {
            return Ok(Self::bump_in(rect, 1.0));
        }
        if let Ok(c) = s.parse::<f64>() {
            return Ok(ScalarField::Constant(c));
        }
        Ok(ScalarField::Expression(Expression::parse(s, &["u", "v"])?))
    }

    /// Bump centred in `rect` whose support fills it.
    pub fn bump_in(rect: [[f64; 2]; 2], amplitude: f64) -> Self {
        ScalarField::Bump {
            centre: [0.5 * (rect[0][0] + rect[0][1]), 0.5 * (rect[1][0] + rect[1][1])],
            radius: [0.5 * (rect[0][1] - rect[0][0]), 0.5 * (rect[1][1] - rect[1][0])],
            amplitude,
        }
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Bump {
                centre,
                radius,
                amplitude,
            } => {
                let f = |x: f64| {
                    if x.abs() >= 1.0 {
                        0.0
                    } else {
                        (1.0 - 1.0 / (1.0 - x * x)).exp()
                    }
                };
                amplitude * f((u - centre[0]) / radius[0]) * f((v - centre[1]) / radius[1])
            }
            ScalarField::Expression(e) => e.eval(&[u, v]),
        }
    }

    /// Central-difference gradient.
    pub fn gradient(&self, u: f64, v: f64) -> Vector2<f64> {
        if let ScalarField::Constant(_) = self {
            return Vector2::zeros();
        }
        let hu = 1e-6 * (1.0 + u.abs());
        let hv = 1e-6 * (1.0 + v.abs());
        Vector2::new(
            (self.value(u + hu, v) - self.value(u - hu, v)) / (2.0 * hu),
            (self.value(u, v + hv) - self.value(u, v - hv)) / (2.0 * hv),
        )
    }
}

/// A parameter rectangle of a surface with a tensor Gauss–Legendre rule.
#[derive(Clone, Debug)]
pub struct DomainPatch {
    surface: Surface,
    rect: [[f64; 2]; 2],
    order: usize,
    nodes: Vec<(f64, f64, f64)>,
}

impl DomainPatch {
    /// `rect` must lie inside the surface's parameter domain.
    pub fn new(surface: Surface, rect: [[f64; 2]; 2], order: usize) -> Result<Self> {
        let dom = surface.domain();
        for k in 0..2 {
            let slack = 1e-12 * (dom[k][1] - dom[k][0]);
            if !(rect[k][0] < rect[k][1] && rect[k][0] >= dom[k][0] - slack && rect[k][1] <= dom[k][1] + slack) {
                return Err(Error::invalid(format!(
                    "patch interval [{}, {}] is not inside the domain [{}, {}]",
                    rect[k][0], rect[k][1], dom[k][0], dom[k][1]
                )));
            }
        }
        let rule = GaussLegendre::new(order).map_err(|e| Error::invalid(format!("quadrature order {order}: {e}")))?;
        let pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        let (hu, hv) = (0.5 * (rect[0][1] - rect[0][0]), 0.5 * (rect[1][1] - rect[1][0]));
        let (cu, cv) = (0.5 * (rect[0][1] + rect[0][0]), 0.5 * (rect[1][1] + rect[1][0]));
        let mut nodes = Vec::with_capacity(order * order);
        for (x, wx) in &pairs {
            for (y, wy) in &pairs {
                nodes.push((cu + hu * x, cv + hv * y, wx * wy * hu * hv));
            }
        }
        Ok(Self {
            surface,
            rect,
            order,
            nodes,
        })
    }

    /// The whole surface, 16×16 nodes.
    pub fn full(surface: Surface) -> Result<Self> {
        let rect = surface.domain();
        Self::new(surface, rect, 16)
    }

    pub fn with_order(&self, order: usize) -> Result<Self> {
        Self::new(self.surface.clone(), self.rect, order)
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn rect(&self) -> [[f64; 2]; 2] {
        self.rect
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `(u, v, weight)` triples.
    pub fn nodes(&self) -> &[(f64, f64, f64)] {
        &self.nodes
    }

    /// Largest distance between points of a 5×5 grid on the patch.
    pub fn diameter(&self) -> Result<f64> {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let u = self.rect[0][0] + (self.rect[0][1] - self.rect[0][0]) * i as f64 / 4.0;
                let v = self.rect[1][0] + (self.rect[1][1] - self.rect[1][0]) * j as f64 / 4.0;
                pts.push(self.surface.point(u, v)?);
            }
        }
        let mut d: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                d = d.max((a - b).norm());
            }
        }
        Ok(d)
    }

    /// Weighted sum of `f` over the nodes, evaluated in parallel and summed
    /// in node order.
    fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(f64, f64) -> Result<f64> + Sync,
    {
        let values: Vec<Result<f64>> = self.nodes.par_iter().map(|(u, v, w)| f(*u, *v).map(|x| x * w)).collect();
        let mut sum = 0.0;
        for x in values {
            sum += x?;
        }
        Ok(sum)
    }
}

/// `ω(X, Y) = det[X, Y, η(p)]`.
pub fn area_element(
    surface: &Surface,
    norm: &Norm,
    u: f64,
    v: f64,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
) -> Result<f64> {
    let eta = crate::surface::birkhoff_normal(surface, norm, u, v)?;
    Ok(Matrix3::from_columns(&[*x, *y, eta]).determinant())
}

fn area_density(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<f64> {
    let l = local(surface, u, v)?;
    let eta = norm.support_map(&l.xi)?;
    let w = l.jet.du.cross(&l.jet.dv).dot(&eta);
    if w < 0.0 {
        return Err(Error::Orientation(format!(
            "negative area element at ({u}, {v}); the chart is negatively oriented"
        )));
    }
    Ok(w)
}

/// `A = ∫ ω(f_u, f_v) du dv` over the patch.
pub fn area(patch: &DomainPatch, norm: &Norm) -> Result<f64> {
    patch.integrate(|u, v| area_density(&patch.surface, norm, u, v))
}

/// Variation field and the step of the central difference in `t`
/// (`None`: `1e-4` times the patch diameter).
#[derive(Clone, Debug)]
pub struct VariationSpec {
    pub g: ScalarField,
    pub t_step: Option<f64>,
}

/// Outcome of the finite-difference first variation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NumericVariation {
    pub value: f64,
    pub t_step: f64,
    /// How often the step was halved because the deformed patch degenerated.
    pub retries: usize,
}

struct VariationNode {
    weight: f64,
    sign: f64,
    fu: Vector3<f64>,
    fv: Vector3<f64>,
    eta: Vector3<f64>,
    gu_eta_u: Vector3<f64>,
    gv_eta_v: Vector3<f64>,
}

impl VariationNode {
    /// Area density of `f + t g η` at this node.
    fn density(&self, norm: &Norm, t: f64) -> Result<f64> {
        let a = self.fu + self.gu_eta_u * t;
        let b = self.fv + self.gv_eta_v * t;
        let n = a.cross(&b);
        if !(n.norm() > 0.0) {
            return Err(Error::numeric("deformed patch is not immersed", 0.0));
        }
        let eta = norm.support_map(&(n * self.sign))?;
        let w = n.dot(&eta);
        if w < 0.0 {
            return Err(Error::numeric("deformed patch changed orientation", w));
        }
        Ok(w)
    }
}

/// `A'(0)` of the Birkhoff normal variation `f + t g η` by a central
/// difference `(A(τ) − A(−τ)) / 2τ`. The step is halved (up to five times) if
/// the deformed patch stops being immersed.
pub fn first_variation_numeric(patch: &DomainPatch, norm: &Norm, spec: &VariationSpec) -> Result<NumericVariation> {
    let surface = &patch.surface;
    let nodes: Vec<Result<VariationNode>> = patch
        .nodes
        .par_iter()
        .map(|(u, v, w)| {
            let e = engine(surface, norm, *u, *v)?;
            let g = spec.g.value(*u, *v);
            let dg = spec.g.gradient(*u, *v);
            let eta = e.support.point;
            let eta_u = e.support.apply_differential(&e.local.xi_u);
            let eta_v = e.support.apply_differential(&e.local.xi_v);
            Ok(VariationNode {
                weight: *w,
                sign: surface.orientation_sign(),
                fu: e.local.jet.du,
                fv: e.local.jet.dv,
                eta,
                gu_eta_u: eta * dg.x + eta_u * g,
                gv_eta_v: eta * dg.y + eta_v * g,
            })
        })
        .collect();
    let nodes: Vec<VariationNode> = nodes.into_iter().collect::<Result<_>>()?;
    if nodes.iter().any(|n| n.fu.cross(&n.fv).dot(&n.eta) < 0.0) {
        return Err(Error::Orientation("negative area element on the patch".into()));
    }
    let area_at = |t: f64| -> Result<f64> {
        let parts: Vec<Result<f64>> = nodes.par_iter().map(|n| n.density(norm, t).map(|d| d * n.weight)).collect();
        let mut s = 0.0;
        for p in parts {
            s += p?;
        }
        Ok(s)
    };
    let mut tau = match spec.t_step {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(Error::invalid(format!("t_step must be positive, got {t}"))),
        None => 1e-4 * patch.diameter()?,
    };
    let mut retries = 0;
    loop {
        match (area_at(tau), area_at(-tau)) {
            (Ok(a), Ok(b)) => {
                return Ok(NumericVariation {
                    value: (a - b) / (2.0 * tau),
                    t_step: tau,
                    retries,
                })
            }
            (Err(e), _) | (_, Err(e)) => {
                if retries >= 5 {
                    return Err(e);
                }
                retries += 1;
                tau *= 0.5;
            }
        }
    }
}

/// `∫ 2 g H ω` over the patch.
pub fn first_variation_formula(patch: &DomainPatch, norm: &Norm, g: &ScalarField) -> Result<f64> {
    let surface = &patch.surface;
    patch.integrate(|u, v| {
        let e = engine(surface, norm, u, v)?;
        let omega = e.local.jet.du.cross(&e.local.jet.dv).dot(&e.support.point);
        Ok(g.value(u, v) * e.deta.trace() * omega)
    })
}

/// Levi-Civita connection of the weighted Dupin metric at one point.
#[derive(Clone, Debug, Serialize)]
pub struct BConnection {
    pub u: f64,
    pub v: f64,
    pub b: Matrix2<f64>,
    pub b_inv: Matrix2<f64>,
    /// `∂_u b`, `∂_v b`.
    pub db: [Matrix2<f64>; 2],
    /// `christoffel[k][(i, j)] = Γᵏᵢⱼ`.
    pub christoffel: [Matrix2<f64>; 2],
    pub det: f64,
}

fn weighted_dupin(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<Matrix2<f64>> {
    let e = engine(surface, norm, u, v)?;
    Ok(e.dupin / e.eta_dot_xi)
}

/// Christoffel symbols of `b` from central differences of its coefficients
/// with parameter step `step`.
pub fn b_connection(surface: &Surface, norm: &Norm, u: f64, v: f64, step: f64) -> Result<BConnection> {
    let b = weighted_dupin(surface, norm, u, v)?;
    let b_inv = b
        .try_inverse()
        .ok_or_else(|| Error::NotAdmissible("weighted Dupin metric is singular".into()))?;
    let du = (weighted_dupin(surface, norm, u + step, v)? - weighted_dupin(surface, norm, u - step, v)?) / (2.0 * step);
    let dv = (weighted_dupin(surface, norm, u, v + step)? - weighted_dupin(surface, norm, u, v - step)?) / (2.0 * step);
    let db = [du, dv];
    let mut lower = [Matrix2::zeros(); 2];
    for l in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                lower[l][(i, j)] = 0.5 * (db[i][(j, l)] + db[j][(i, l)] - db[l][(i, j)]);
            }
        }
    }
    let mut christoffel = [Matrix2::zeros(); 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                christoffel[k][(i, j)] = b_inv[(k, 0)] * lower[0][(i, j)] + b_inv[(k, 1)] * lower[1][(i, j)];
            }
        }
    }
    Ok(BConnection {
        u,
        v,
        b,
        b_inv,
        db,
        christoffel,
        det: b.determinant(),
    })
}

impl BConnection {
    /// `max |∂_k b_ij − Γˡₖᵢ b_lj − Γˡₖⱼ b_il| / ‖b‖`.
    pub fn compatibility_residual(&self) -> f64 {
        let g = &self.christoffel;
        let mut r: f64 = 0.0;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut x = self.db[k][(i, j)];
                    for l in 0..2 {
                        x -= g[l][(k, i)] * self.b[(l, j)] + g[l][(k, j)] * self.b[(i, l)];
                    }
                    r = r.max(x.abs());
                }
            }
        }
        r / self.b.norm()
    }

    /// `∂ᵢⱼ f − Γᵏᵢⱼ ∂ₖ f` from coordinate derivatives.
    pub fn hessian_from(&self, gradient: &Vector2<f64>, second: &Matrix2<f64>) -> Matrix2<f64> {
        second - self.christoffel[0] * gradient.x - self.christoffel[1] * gradient.y
    }

    /// `tr(b⁻¹ m)`.
    pub fn trace(&self, m: &Matrix2<f64>) -> f64 {
        (self.b_inv * m).trace()
    }
}

/// Coordinate gradient and Hessian of a scalar function by central
/// differences with step `h`.
pub fn coordinate_derivatives<F>(f: F, u: f64, v: f64, h: f64) -> (Vector2<f64>, Matrix2<f64>)
where
    F: Fn(f64, f64) -> f64,
{
    let c = f(u, v);
    let fu = (f(u + h, v) - f(u - h, v)) / (2.0 * h);
    let fv = (f(u, v + h) - f(u, v - h)) / (2.0 * h);
    let fuu = (f(u + h, v) - 2.0 * c + f(u - h, v)) / (h * h);
    let fvv = (f(u, v + h) - 2.0 * c + f(u, v - h)) / (h * h);
    let fuv = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4.0 * h * h);
    (Vector2::new(fu, fv), Matrix2::new(fuu, fuv, fuv, fvv))
}

/// `hess_b f` at the connection's point; derivatives of `f` by central
/// differences with step `h`.
pub fn b_hessian<F>(conn: &BConnection, f: F, h: f64) -> Matrix2<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let (grad, second) = coordinate_derivatives(f, conn.u, conn.v, h);
    conn.hessian_from(&grad, &second)
}

/// `Δ_b f = tr_b hess_b f`.
pub fn b_laplacian<F>(conn: &BConnection, f: F, h: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    conn.trace(&b_hessian(conn, f, h))
}

/// `Δ_b` of the three coordinate functions of the immersion, from the
/// analytic chart derivatives.
pub fn b_laplacian_immersion(surface: &Surface, norm: &Norm, u: f64, v: f64, step: f64) -> Result<Vector3<f64>> {
    let conn = b_connection(surface, norm, u, v, step)?;
    let j = surface.jet(u, v)?;
    let mut out = Vector3::zeros();
    for c in 0..3 {
        let grad = Vector2::new(j.du[c], j.dv[c]);
        let second = Matrix2::new(j.duu[c], j.duv[c], j.duv[c], j.dvv[c]);
        out[c] = conn.trace(&conn.hessian_from(&grad, &second));
    }
    Ok(out)
}

/// Height over the tangent plane at `(u0, v0)` measured along `η`:
/// `g = ⟨f − f(p₀), ξ₀⟩ / ⟨η₀, ξ₀⟩`. It has a critical point at `(u0, v0)`.
pub fn monge_height<'a>(surface: &'a Surface, norm: &Norm, u0: f64, v0: f64) -> Result<impl Fn(f64, f64) -> f64 + 'a> {
    let l = local(surface, u0, v0)?;
    let eta = norm.support_map(&l.xi)?;
    let w = eta.dot(&l.xi);
    let (p0, xi) = (l.jet.point, l.xi);
    Ok(move |u: f64, v: f64| match surface.point(u, v) {
        Ok(p) => (p - p0).dot(&xi) / w,
        Err(_) => f64::NAN,
    })
}

/// Residuals of the minimal-surface characterisations at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MinimalResiduals {
    /// `|H|`.
    pub r_h: f64,
    /// `‖h(dη·, dη·) + K h‖ / (‖h‖ |K|)`; `None` unless `K < 0`.
    pub r_prop22: Option<f64>,
    /// `‖b(dη·, dη·) + K b‖ / (‖b‖ |K|)`; `None` unless `K < 0`.
    pub r_conf: Option<f64>,
    #[serde(rename = "K")]
    pub gaussian: f64,
    #[serde(rename = "H")]
    pub mean: f64,
}

impl MinimalResiduals {
    /// `|H| / √|K|`, the scale-free mean curvature (only for `K < 0`).
    pub fn r_h_normalized(&self) -> Option<f64> {
        (self.gaussian < 0.0).then(|| self.r_h / (-self.gaussian).sqrt())
    }
}

pub fn minimal_residuals(surface: &Surface, norm: &Norm, u: f64, v: f64) -> Result<MinimalResiduals> {
    let e = engine(surface, norm, u, v)?;
    let s = e.deta;
    let k = s.determinant();
    let mean = 0.5 * s.trace();
    let (r_prop22, r_conf) = if k < 0.0 {
        let h = e.local.second_form() / e.eta_dot_xi;
        let b = e.dupin / e.eta_dot_xi;
        let rel = |m: &Matrix2<f64>| (s.transpose() * m * s + m * k).norm() / (m.norm() * k.abs());
        (Some(rel(&h)), Some(rel(&b)))
    } else {
        (None, None)
    };
    Ok(MinimalResiduals {
        r_h: mean.abs(),
        r_prop22,
        r_conf,
        gaussian: k,
        mean,
    })
}

/// Minimum, maximum and mean of a sample.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Stats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        Self {
            count: values.len(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

/// Grid scan of [`minimal_residuals`].
#[derive(Clone, Debug, Serialize)]
pub struct MinimalCheck {
    pub samples: usize,
    pub negative_curvature_samples: usize,
    pub max_abs_h: f64,
    pub r_prop22_stats: Stats,
    pub r_conf_stats: Stats,
    /// Rank correlation of `|H|` with each identity residual over the
    /// samples with `K < 0`.
    pub spearman_prop22: f64,
    pub spearman_conf: f64,
}

pub fn minimal_check(surface: &Surface, norm: &Norm, nu: usize, nv: usize) -> Result<MinimalCheck> {
    let pts = surface.grid(nu, nv);
    let res: Vec<Result<MinimalResiduals>> = pts.par_iter().map(|(u, v)| minimal_residuals(surface, norm, *u, *v)).collect();
    let res: Vec<MinimalResiduals> = res.into_iter().collect::<Result<_>>()?;
    let mut hs = Vec::new();
    let mut p22 = Vec::new();
    let mut conf = Vec::new();
    for r in &res {
        if let (Some(a), Some(b)) = (r.r_prop22, r.r_conf) {
            hs.push(r.r_h);
            p22.push(a);
            conf.push(b);
        }
    }
    Ok(MinimalCheck {
        samples: res.len(),
        negative_curvature_samples: hs.len(),
        max_abs_h: res.iter().map(|r| r.r_h).fold(0.0, f64::max),
        r_prop22_stats: Stats::of(&p22),
        r_conf_stats: Stats::of(&conf),
        spearman_prop22: spearman(&hs, &p22),
        spearman_conf: spearman(&hs, &conf),
    })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|a, b| x[*a].total_cmp(&x[*b]).then(a.cmp(b)));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `NaN` for fewer than two samples.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return f64::NAN;
    }
    let (ra, rb) = (ranks(&a[..n]), ranks(&b[..n]));
    let ma = ra.iter().sum::<f64>() / n as f64;
    let mb = rb.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..n {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma).powi(2);
        db += (rb[i] - mb).powi(2);
    }
    num / (da * db).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormSpec;
    use crate::surface::{curvatures, Ellipsoid, Helicoid, Plane, Torus};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn euclidean_sphere_area() {
        let p = DomainPatch::full(Surface::from_chart(Ellipsoid::sphere(1.0))).unwrap();
        assert_relative_eq!(area(&p, &Norm::euclidean()).unwrap(), 4.0 * PI, max_relative = 1e-10);
    }

    #[test]
    fn flat_square_area_and_element() {
        let s = Surface::from_chart(Plane);
        let p = DomainPatch::new(s.clone(), [[0.0, 1.0], [0.0, 1.0]], 4).unwrap();
        assert_relative_eq!(area(&p, &Norm::euclidean()).unwrap(), 1.0, epsilon = 1e-14);
        let n = NormSpec::ellipsoid(2.0, 1.0, 0.5).build().unwrap();
        let w = area_element(&s, &n, 0.0, 0.0, &Vector3::x(), &Vector3::y()).unwrap();
        assert_relative_eq!(w, 0.5, epsilon = 1e-12);
        assert_eq!(area_element(&s, &n, 0.0, 0.0, &Vector3::x(), &Vector3::x()).unwrap(), 0.0);
    }

    #[test]
    fn sphere_first_variation_is_eight_pi() {
        let p = DomainPatch::full(Surface::from_chart(Ellipsoid::sphere(1.0))).unwrap();
        let spec = VariationSpec {
            g: ScalarField::Constant(1.0),
            t_step: None,
        };
        let e = Norm::euclidean();
        assert_relative_eq!(first_variation_numeric(&p, &e, &spec).unwrap().value, 8.0 * PI, max_relative = 1e-7);
        assert_relative_eq!(first_variation_formula(&p, &e, &spec.g).unwrap(), 8.0 * PI, max_relative = 1e-10);
    }

    #[test]
    fn torus_bump_variation_matches_formula() {
        let n = NormSpec::ellipsoid(1.2, 0.9, 1.1).build().unwrap();
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.6 });
        let rect = [[0.5, 2.0], [1.0, 3.5]];
        let p = DomainPatch::new(s, rect, 24).unwrap();
        let g = ScalarField::bump_in(rect, 1.0);
        let spec = VariationSpec { g: g.clone(), t_step: None };
        let a = first_variation_numeric(&p, &n, &spec).unwrap().value;
        let b = first_variation_formula(&p, &n, &g).unwrap();
        assert!((a - b).abs() <= 1e-4 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn zero_field_has_zero_variation() {
        let p = DomainPatch::new(Surface::from_chart(Torus { major: 2.0, minor: 0.5 }), [[0.0, 1.0], [0.0, 1.0]], 6).unwrap();
        let spec = VariationSpec {
            g: ScalarField::Constant(0.0),
            t_step: None,
        };
        assert_eq!(first_variation_numeric(&p, &Norm::euclidean(), &spec).unwrap().value, 0.0);
    }

    #[test]
    fn flat_connection_vanishes() {
        let s = Surface::from_chart(Plane);
        let c = b_connection(&s, &Norm::euclidean(), 0.2, 0.3, 1e-4).unwrap();
        assert!(c.christoffel.iter().all(|m| m.norm() < 1e-12));
        assert_relative_eq!(b_hessian(&c, |u, v| 3.0 * u - v + 2.0, 1e-4).norm(), 0.0, epsilon = 1e-7);
        let h = b_hessian(&c, |u, _| u * u, 1e-4);
        assert_relative_eq!(h[(0, 0)], 2.0, epsilon = 1e-6);
        assert_relative_eq!(b_laplacian(&c, |u, v| u * u - v * v, 1e-4), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn sphere_christoffels_are_classical() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        let (t, p) = (1.1, 0.4);
        let c = b_connection(&s, &Norm::euclidean(), t, p, 1e-4).unwrap();
        assert_relative_eq!(c.christoffel[0][(1, 1)], -t.sin() * t.cos(), epsilon = 1e-5);
        assert_relative_eq!(c.christoffel[1][(0, 1)], t.cos() / t.sin(), epsilon = 1e-5);
        assert_relative_eq!(c.christoffel[1][(1, 0)], t.cos() / t.sin(), epsilon = 1e-5);
        assert_relative_eq!(c.christoffel[0][(0, 0)], 0.0, epsilon = 1e-5);
        assert!(c.compatibility_residual() < 1e-10);
    }

    #[test]
    fn monge_height_hessian_is_the_affine_form() {
        let n = NormSpec::blend(0.4).build().unwrap();
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.7 });
        let (u, v) = (0.8, 2.3);
        let c = b_connection(&s, &n, u, v, 1e-4).unwrap();
        let g = monge_height(&s, &n, u, v).unwrap();
        let hess = b_hessian(&c, g, 1e-4);
        let h = curvatures(&s, &n, u, v).unwrap().h;
        assert!((hess - h).norm() <= 1e-4 * h.norm(), "{hess} vs {h}");
    }

    #[test]
    fn euclidean_sphere_laplacian_of_position() {
        let s = Surface::from_chart(Ellipsoid::sphere(2.0));
        let (u, v) = (1.0, 0.5);
        let lap = b_laplacian_immersion(&s, &Norm::euclidean(), u, v, 1e-4).unwrap();
        let x = s.point(u, v).unwrap();
        // Δx = −2H ξ with H = 1/r
        assert_relative_eq!(lap, -x / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn helicoid_coordinates_are_harmonic() {
        let s = Surface::from_chart(Helicoid { pitch: 1.0 });
        let lap = b_laplacian_immersion(&s, &Norm::euclidean(), 0.4, 0.3, 1e-4).unwrap();
        assert!(lap.norm() < 1e-6, "{lap}");
        let r = minimal_residuals(&s, &Norm::euclidean(), 0.4, 0.3).unwrap();
        assert!(r.r_h < 1e-12 && r.r_prop22.unwrap() < 1e-10 && r.r_conf.unwrap() < 1e-10);
    }

    #[test]
    fn sphere_residuals_not_applicable() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        let r = minimal_residuals(&s, &Norm::euclidean(), 1.0, 1.0).unwrap();
        assert_relative_eq!(r.r_h, 1.0, epsilon = 1e-12);
        assert!(r.r_prop22.is_none() && r.r_conf.is_none());
    }

    #[test]
    fn spearman_of_monotone_data_is_one() {
        assert_relative_eq!(spearman(&[1.0, 2.0, 5.0], &[0.1, 0.3, 9.0]), 1.0);
        assert_relative_eq!(spearman(&[1.0, 2.0, 5.0], &[3.0, 2.0, 1.0]), -1.0);
    }
}
