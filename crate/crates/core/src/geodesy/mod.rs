//! The induced Minkowski length metric on a surface.
//!
//! Distances start from a Dijkstra search on an 8-connected parameter grid
//! and are then refined by minimising the discrete length of a polyline on
//! the surface over successively doubled segment counts. The reported
//! distance extrapolates the two finest levels (the chord error is
//! quadratic in the segment length).

mod mesh;
mod refine;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{angles_of, tangent_basis};
use crate::norm::Norm;
use crate::sampling::{fibonacci_sphere, SeededRng};
use crate::surface::{curvatures, ScaledUnitSphere, SupportChart, Surface, Topology};

pub use mesh::{antipodal_params, MeshGraph};
pub use refine::RefineOptions;

use refine::{euclidean_length, minimise, polyline_length, Polyline};

/// Relative slack granted to the inequality checks for discretisation
/// error in the estimates.
pub const BOUND_SLACK: f64 = 1e-4;

/// Minkowski length `Σ ‖xᵢ₊₁ − xᵢ‖` of a polyline.
pub fn path_length(points: &[Vector3<f64>], norm: &Norm) -> f64 {
    polyline_length(norm, points)
}

/// A polyline on the surface.
#[derive(Clone, Debug, Serialize)]
pub struct Path {
    pub points: Vec<Vector3<f64>>,
    pub params: Vec<(f64, f64)>,
    pub minkowski_length: f64,
    pub euclidean_length: f64,
    /// False when the graph path was kept.
    pub refined: bool,
    pub iterations: usize,
    pub final_step_norm: f64,
}

/// Distance between two surface points with its realising path.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceResult {
    pub d: f64,
    /// Euclidean length of the returned path (extrapolated like `d`).
    pub d_euclidean: f64,
    /// Length of the graph path, resampled on the surface and measured by
    /// the same rule as `d`.
    pub dijkstra_length: f64,
    /// `(dijkstra_length − d)/d`.
    pub certified_gap: f64,
    pub path: Path,
}

#[derive(Clone, Copy, Debug)]
pub struct GeodesyOptions {
    pub resolution: usize,
    pub refine: RefineOptions,
    /// Extrapolate the two finest refinement levels.
    pub extrapolate: bool,
}

impl Default for GeodesyOptions {
    fn default() -> Self {
        Self {
            resolution: 64,
            refine: RefineOptions::default(),
            extrapolate: true,
        }
    }
}

impl GeodesyOptions {
    pub fn with_resolution(resolution: usize) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }
}

/// Distance solver for one surface and norm; the mesh is built once and
/// shared read-only by every query.
pub struct Geodesy {
    surface: Surface,
    norm: Norm,
    mesh: MeshGraph,
    options: GeodesyOptions,
}

impl Geodesy {
    pub fn new(surface: Surface, norm: Norm, options: GeodesyOptions) -> Result<Self> {
        let mesh = MeshGraph::build(&surface, &norm, options.resolution)?;
        Ok(Self {
            surface,
            norm,
            mesh,
            options,
        })
    }

    /// Solver on the unit sphere `∂B` of `norm`, charted by outward normals.
    pub fn unit_sphere(norm: &Norm, options: GeodesyOptions) -> Result<Self> {
        let body = ScaledUnitSphere {
            norm: Arc::new(norm.clone()),
            radius: 1.0,
        };
        let surface = Surface::new(Arc::new(SupportChart::new(Arc::new(body))));
        Self::new(surface, norm.clone(), options)
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn norm(&self) -> &Norm {
        &self.norm
    }

    pub fn mesh(&self) -> &MeshGraph {
        &self.mesh
    }

    pub fn options(&self) -> GeodesyOptions {
        self.options
    }

    /// Induced distance between the surface points with parameters `p`, `q`.
    pub fn distance(&self, p: (f64, f64), q: (f64, f64)) -> Result<DistanceResult> {
        let p = self.surface.wrap(p.0, p.1);
        let q = self.surface.wrap(q.0, q.1);
        let xp = self.surface.point(p.0, p.1)?;
        let xq = self.surface.point(q.0, q.1)?;
        if (xp - xq).norm() <= 1e-14 * self.surface.length_scale() {
            let path = Path {
                points: vec![xp],
                params: vec![p],
                minkowski_length: 0.0,
                euclidean_length: 0.0,
                refined: true,
                iterations: 0,
                final_step_norm: 0.0,
            };
            return Ok(DistanceResult {
                d: 0.0,
                d_euclidean: 0.0,
                dijkstra_length: 0.0,
                certified_gap: 0.0,
                path,
            });
        }
        let (params, _) = self.mesh.shortest_path(&self.surface, &self.norm, p, q)?;
        let graph = Polyline::from_params(&self.surface, params)?;
        let opts = self.options.refine;
        let mut line = graph.resample(&self.surface, opts.initial_segments.max(1))?;
        // the graph path measured by the same polyline rule as the result
        let top = opts.max_segments.max(opts.initial_segments).max(2);
        let graph_fine = graph.resample(&self.surface, top)?;
        let mut dijkstra_length = polyline_length(&self.norm, &graph_fine.points);
        let graph_fine_e = euclidean_length(&graph_fine.points);
        let mut graph_e = graph_fine_e;
        if self.options.extrapolate && top >= 2 * opts.initial_segments {
            let half = graph.resample(&self.surface, top / 2)?;
            let coarse = polyline_length(&self.norm, &half.points);
            if (dijkstra_length - coarse).abs() <= 1e-2 * dijkstra_length {
                dijkstra_length = (4.0 * dijkstra_length - coarse) / 3.0;
                graph_e = (4.0 * graph_fine_e - euclidean_length(&half.points)) / 3.0;
            }
        }
        let mut levels = Vec::new();
        loop {
            let level = minimise(&self.surface, &self.norm, line, opts.max_iterations)?;
            let segments = level.line.points.len() - 1;
            let done = segments * 2 > opts.max_segments;
            line = if done { level.line.clone() } else { level.line.subdivide(&self.surface)? };
            levels.push(level);
            if done {
                break;
            }
        }
        let iterations = levels.iter().map(|l| l.iterations).sum();
        let finest = levels.last().unwrap();
        let fine_e = euclidean_length(&finest.line.points);
        let (mut d, mut d_e) = (finest.length, fine_e);
        if self.options.extrapolate && levels.len() >= 2 {
            let coarse = &levels[levels.len() - 2];
            let coarse_e = euclidean_length(&coarse.line.points);
            if (finest.length - coarse.length).abs() <= 1e-2 * finest.length {
                d = (4.0 * finest.length - coarse.length) / 3.0;
                d_e = (4.0 * fine_e - coarse_e) / 3.0;
            }
        }
        let refined = d <= dijkstra_length;
        let path = if refined {
            Path {
                points: finest.line.points.clone(),
                params: finest.line.params.clone(),
                minkowski_length: finest.length,
                euclidean_length: fine_e,
                refined: true,
                iterations,
                final_step_norm: finest.final_step,
            }
        } else {
            d = dijkstra_length;
            d_e = graph_e;
            Path {
                minkowski_length: polyline_length(&self.norm, &graph_fine.points),
                euclidean_length: graph_fine_e,
                points: graph_fine.points,
                params: graph_fine.params,
                refined: false,
                iterations,
                final_step_norm: finest.final_step,
            }
        };
        let certified_gap = ((dijkstra_length - d) / d).max(0.0);
        Ok(DistanceResult {
            d,
            d_euclidean: d_e,
            dijkstra_length,
            certified_gap,
            path,
        })
    }

    /// Compare the induced distance with the distance induced by the
    /// Euclidean norm on the same surface: `(1/c)·d_e ≤ d ≤ c·d_e`.
    pub fn metric_sandwich_check(&self, pairs: &[((f64, f64), (f64, f64))]) -> Result<SandwichReport> {
        let c = self.norm.equivalence().sandwich_constant();
        let euclid = if self.norm.is_euclidean() {
            None
        } else {
            Some(Geodesy::new(self.surface.clone(), Norm::euclidean(), self.options)?)
        };
        let entries = pairs
            .par_iter()
            .map(|&(p, q)| {
                let d = self.distance(p, q)?.d;
                let d_e = match &euclid {
                    Some(g) => g.distance(p, q)?.d,
                    None => d,
                };
                let slack = 1e-9 * d.max(d_e);
                Ok(SandwichEntry {
                    p,
                    q,
                    d,
                    d_euclidean: d_e,
                    holds: d_e / c <= d + slack && d <= c * d_e + slack,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let violations = entries.iter().filter(|e| !e.holds).count();
        Ok(SandwichReport { c, entries, violations })
    }

    fn sample_params(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        if self.surface.topology() == Topology::Sphere {
            return fibonacci_sphere(n)
                .iter()
                .map(|d| {
                    let (t, p) = angles_of(d);
                    (t, p.rem_euclid(TAU))
                })
                .collect();
        }
        let [[u0, u1], [v0, v1]] = self.surface.domain();
        let mut rng = SeededRng::new(seed);
        (0..n).map(|_| (rng.uniform(u0, u1), rng.uniform(v0, v1))).collect()
    }

    /// Ascent on one endpoint: move it along the direction in which the
    /// geodesic arrives, halving the step whenever the distance drops.
    fn polish(&self, fixed: (f64, f64), moving: (f64, f64), swap: bool) -> Result<((f64, f64), f64)> {
        let eval = |q: (f64, f64)| if swap { self.distance(q, fixed) } else { self.distance(fixed, q) };
        let mut at = moving;
        let mut best = eval(at)?;
        let scale = self.surface.length_scale();
        let mut step = 2.0 * PI * scale / self.options.resolution as f64;
        for _ in 0..60 {
            if step < 1e-4 * scale {
                break;
            }
            let pts = &best.path.points;
            if pts.len() < 2 {
                break;
            }
            let (end, prev) = if swap { (pts[0], pts[1]) } else { (pts[pts.len() - 1], pts[pts.len() - 2]) };
            let dir = (end - prev).normalize();
            let cand = self.surface.project(&(end + dir * step), at)?;
            let r = eval(cand)?;
            if r.d > best.d {
                at = cand;
                best = r;
            } else {
                step *= 0.5;
            }
        }
        Ok((at, best.d))
    }

    /// Sampled lower bound on the diameter. For each sample `p` the farthest
    /// mesh vertex is refined; the best pair is then polished by pattern
    /// search on both endpoints.
    pub fn diameter(&self, n_samples: usize, seed: u64) -> Result<DiameterResult> {
        if n_samples == 0 {
            return Err(Error::invalid("diameter needs at least one sample"));
        }
        let samples = self.sample_params(n_samples, seed);
        let found = samples
            .par_iter()
            .map(|&p| {
                let (k, _) = self.mesh.farthest(&self.surface, &self.norm, p)?;
                let q = self.mesh.param(k);
                Ok((p, q, self.distance(p, q)?.d))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = found[0];
        for f in &found[1..] {
            if f.2 > best.2 {
                best = *f;
            }
        }
        let (mut p, mut q, mut d) = best;
        let sampled = d;
        let (nq, _) = self.polish(p, q, false)?;
        q = nq;
        let (np, nd) = self.polish(q, p, true)?;
        p = np;
        d = d.max(nd);
        let xp = self.surface.point(p.0, p.1)?;
        let xq = self.surface.point(q.0, q.1)?;
        Ok(DiameterResult {
            diameter: d,
            sampled_maximum: sampled,
            witness: (p, q),
            witness_points: (xp, xq),
            samples: n_samples,
            lower_bound: true,
        })
    }

    /// Check `diam ≤ π/(c·√(m·ε))` given `K ≥ ε`. The curvature hypothesis
    /// is verified on a `grid × grid` scan first.
    pub fn bonnet_check(&self, epsilon: f64, n_samples: usize, seed: u64, grid: usize) -> Result<BonnetReport> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if !self.surface.topology().is_closed() {
            return Err(Error::HypothesisViolated("the diameter bound needs a closed surface".into()));
        }
        let ks = self
            .surface
            .grid(grid, grid)
            .par_iter()
            .map(|&(u, v)| curvatures(&self.surface, &self.norm, u, v).map(|r| r.gaussian))
            .collect::<Result<Vec<_>>>()?;
        let min_curvature = ks.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_curvature < epsilon * (1.0 - 1e-4) {
            return Err(Error::HypothesisViolated(format!(
                "minimum Minkowski curvature {min_curvature:.6} is below epsilon = {epsilon}"
            )));
        }
        let m = self.norm.admissibility_scan(64, 1e-8)?.m;
        let c = self.norm.equivalence().bonnet_constant();
        let bound = PI / (c * (m * epsilon).sqrt());
        let diameter = self.diameter(n_samples, seed)?;
        Ok(BonnetReport {
            pass: diameter.diameter <= bound * (1.0 + BOUND_SLACK),
            diameter: diameter.diameter,
            bound,
            epsilon,
            m,
            c,
            min_curvature,
            witness: diameter.witness,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichEntry {
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub d: f64,
    pub d_euclidean: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub c: f64,
    pub entries: Vec<SandwichEntry>,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiameterResult {
    pub diameter: f64,
    /// Best value before polishing the witness.
    pub sampled_maximum: f64,
    pub witness: ((f64, f64), (f64, f64)),
    pub witness_points: (Vector3<f64>, Vector3<f64>),
    pub samples: usize,
    /// The estimate never exceeds the true diameter (up to discretisation).
    pub lower_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BonnetReport {
    pub diameter: f64,
    pub bound: f64,
    pub pass: bool,
    pub epsilon: f64,
    pub m: f64,
    pub c: f64,
    pub min_curvature: f64,
    pub witness: ((f64, f64), (f64, f64)),
}

#[derive(Clone, Debug, Serialize)]
pub struct PerimeterReport {
    /// Twice the largest sampled antipodal distance on `∂B`.
    pub rho: f64,
    pub bound: f64,
    pub pass: bool,
    /// Smallest sampled antipodal distance `d(p, −p)`.
    pub min_antipodal_distance: f64,
    /// Largest `|d(p, −p) − d(−p, p)|`.
    pub max_asymmetry: f64,
    pub inradius: f64,
    pub m: f64,
    pub samples: usize,
    pub witness: Vector3<f64>,
}

/// Perimeter of the normed space: `ρ = 2·sup d(p, −p)` over `p ∈ ∂B`,
/// checked against `2π/√m` after rescaling `B` so its inscribed Euclidean
/// ball is the unit ball. The induced distance on `∂B` is invariant under
/// that rescaling, so only `m` changes (by the square of the inradius).
pub fn perimeter(norm: &Norm, resolution: usize, n_samples: usize) -> Result<PerimeterReport> {
    if n_samples == 0 {
        return Err(Error::invalid("perimeter needs at least one sample"));
    }
    let geo = Geodesy::unit_sphere(norm, GeodesyOptions::with_resolution(resolution))?;
    let inradius = norm.equivalence().inradius();
    if !(inradius > 0.0 && inradius.is_finite()) {
        return Err(Error::numeric("inradius of the unit ball", inradius));
    }
    let m = norm.admissibility_scan(64, 1e-8)?.m * inradius * inradius;
    let samples: Vec<(f64, f64)> = fibonacci_sphere(n_samples)
        .iter()
        .map(|d| {
            let (t, p) = angles_of(d);
            (t, p.rem_euclid(TAU))
        })
        .collect();
    let values = samples
        .par_iter()
        .map(|&(t, p)| {
            let anti = antipodal_params(t, p);
            let there = geo.distance((t, p), anti)?.d;
            let back = geo.distance(anti, (t, p))?.d;
            Ok((there, back))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    let mut min = f64::INFINITY;
    let mut asym = 0.0_f64;
    for (i, (a, b)) in values.iter().enumerate() {
        if *a > values[best].0 {
            best = i;
        }
        min = min.min(*a);
        asym = asym.max((a - b).abs());
    }
    let rho = 2.0 * values[best].0;
    let bound = 2.0 * PI / m.sqrt();
    let (t, p) = samples[best];
    Ok(PerimeterReport {
        rho,
        bound,
        pass: rho <= bound * (1.0 + BOUND_SLACK),
        min_antipodal_distance: min,
        max_asymmetry: asym,
        inradius,
        m,
        samples: n_samples,
        witness: geo.surface.point(t, p)?,
    })
}

/// Closed curve made of a geodesic from `p` to `−p` on `∂B` and its
/// antipodal image.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedGeodesic {
    pub points: Vec<Vector3<f64>>,
    /// Minkowski length of the loop (twice the antipodal distance).
    pub length: f64,
    pub half: DistanceResult,
    /// Angles between the one-sided tangents at `p` and `−p`, measured in
    /// the Dupin metric there.
    pub junction_defect: [f64; 2],
    pub smooth: bool,
}

/// Angle between tangent vectors `a`, `b` at the point of `∂B` with outward
/// normal `n`, in the Dupin metric `⟨W a, b⟩`.
fn dupin_angle(norm: &Norm, n: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<f64> {
    let sd = norm.support_point(n)?;
    let a = a - n * n.dot(a);
    let b = b - n * n.dot(b);
    let ab = sd.apply_weingarten(&a).dot(&b);
    let aa = sd.apply_weingarten(&a).dot(&a);
    let bb = sd.apply_weingarten(&b).dot(&b);
    Ok((ab / (aa * bb).sqrt()).clamp(-1.0, 1.0).acos())
}

/// The antipodally closed loop through the point of `∂B` with parameters
/// `(θ, φ)` (its outward normal is `n(θ, φ)`).
pub fn closed_geodesic(norm: &Norm, at: (f64, f64), resolution: usize, tol: f64) -> Result<ClosedGeodesic> {
    let geo = Geodesy::unit_sphere(norm, GeodesyOptions::with_resolution(resolution))?;
    let anti = antipodal_params(at.0, at.1);
    let half = geo.distance(at, anti)?;
    let x = &half.path.points;
    let n = x.len() - 1;
    if n < 2 {
        return Err(Error::numeric("closed geodesic needs a resolved path", n as f64));
    }
    let out_start = (x[1] * 4.0 - x[0] * 3.0 - x[2]) * 0.5;
    let in_end = (x[n] * 3.0 - x[n - 1] * 4.0 + x[n - 2]) * 0.5;
    // the returning arc is −x, so its tangent arriving at p is −in_end
    let np = geo.surface.normal(at.0, at.1)?;
    let nq = geo.surface.normal(anti.0, anti.1)?;
    let defect_p = dupin_angle(norm, &np, &out_start, &-in_end)?;
    let defect_q = dupin_angle(norm, &nq, &in_end, &-out_start)?;
    let mut points = x.clone();
    points.extend(x[1..].iter().map(|y| -y));
    let defect = [defect_p, defect_q];
    Ok(ClosedGeodesic {
        length: 2.0 * half.d,
        points,
        half,
        smooth: defect.iter().all(|d| *d <= tol),
        junction_defect: defect,
    })
}

/// Minkowski length of the section of `∂B` by the plane through the origin
/// with normal `plane_normal`, by the periodic trapezoid rule on `samples`
/// nodes.
pub fn planar_section_length(norm: &Norm, plane_normal: &Vector3<f64>, samples: usize) -> f64 {
    let (e1, e2) = tangent_basis(&plane_normal.normalize());
    let h = TAU / samples as f64;
    (0..samples)
        .map(|k| {
            let (s, c) = (k as f64 * h).sin_cos();
            let w = e1 * c + e2 * s;
            let dw = e2 * c - e1 * s;
            let g = norm.gauge(&w);
            let dg = norm.gradient(&w).dot(&dw);
            norm.gauge(&(dw / g - w * (dg / (g * g)))) * h
        })
        .sum()
}

/// Unit normal of the least-squares plane through the origin fitting `points`.
pub fn best_fit_plane_normal(points: &[Vector3<f64>]) -> Vector3<f64> {
    let mut m = Matrix3::zeros();
    for p in points {
        m += p * p.transpose();
    }
    let eig = m.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    eig.eigenvectors.column(k).into_owned()
}
