//! Fixed-endpoint minimisation of the discrete Minkowski length.

use nalgebra::{DMatrix, Vector3};

use crate::error::Result;
use crate::linalg::solve_tridiagonal;
use crate::norm::Norm;
use crate::surface::Surface;

/// Tuning of the polyline minimiser.
#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    /// Segment count of the first refinement level.
    pub initial_segments: usize,
    /// Segment count of the last level; levels double in between.
    pub max_segments: usize,
    /// Newton iterations allowed per level.
    pub max_iterations: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            initial_segments: 16,
            max_segments: 128,
            max_iterations: 200,
        }
    }
}

/// A polyline on the surface together with its parameter trace.
#[derive(Clone, Debug)]
pub(crate) struct Polyline {
    pub params: Vec<(f64, f64)>,
    pub points: Vec<Vector3<f64>>,
}

/// Outcome of one refinement level.
#[derive(Clone, Debug)]
pub(crate) struct Level {
    pub line: Polyline,
    pub length: f64,
    pub iterations: usize,
    pub final_step: f64,
}

pub(crate) fn polyline_length(norm: &Norm, points: &[Vector3<f64>]) -> f64 {
    points.windows(2).map(|w| norm.gauge(&(w[1] - w[0]))).sum()
}

pub(crate) fn euclidean_length(points: &[Vector3<f64>]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

impl Polyline {
    pub fn from_params(surface: &Surface, params: Vec<(f64, f64)>) -> Result<Self> {
        let points = params
            .iter()
            .map(|(u, v)| surface.point(*u, *v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, points })
    }

    /// Resample to `n` segments of equal Euclidean chord-length share,
    /// keeping both endpoints.
    pub fn resample(&self, surface: &Surface, n: usize) -> Result<Self> {
        let mut cum = vec![0.0];
        for w in self.points.windows(2) {
            cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
        }
        let total = *cum.last().unwrap();
        let last = self.points.len() - 1;
        let mut params = vec![self.params[0]];
        let mut points = vec![self.points[0]];
        let mut seg = 0;
        for k in 1..n {
            let s = total * k as f64 / n as f64;
            while seg + 1 < last && cum[seg + 1] < s {
                seg += 1;
            }
            let span = cum[seg + 1] - cum[seg];
            let t = if span > 0.0 { (s - cum[seg]) / span } else { 0.0 };
            let x = self.points[seg] + (self.points[seg + 1] - self.points[seg]) * t;
            let hint = if t < 0.5 { self.params[seg] } else { self.params[seg + 1] };
            let p = surface.project(&x, hint)?;
            points.push(surface.point(p.0, p.1)?);
            params.push(p);
        }
        params.push(self.params[last]);
        points.push(self.points[last]);
        Ok(Self { params, points })
    }

    /// Insert the surface projection of every chord midpoint.
    pub fn subdivide(&self, surface: &Surface) -> Result<Self> {
        let mut params = vec![self.params[0]];
        let mut points = vec![self.points[0]];
        for i in 0..self.points.len() - 1 {
            let mid = (self.points[i] + self.points[i + 1]) * 0.5;
            let p = surface.project(&mid, self.params[i])?;
            params.push(p);
            points.push(surface.point(p.0, p.1)?);
            params.push(self.params[i + 1]);
            points.push(self.points[i + 1]);
        }
        Ok(Self { params, points })
    }
}

fn spacing_ratio(points: &[Vector3<f64>]) -> f64 {
    let (lo, hi) = points.windows(2).fold((f64::INFINITY, 0.0_f64), |(lo, hi), w| {
        let l = (w[1] - w[0]).norm();
        (lo.min(l), hi.max(l))
    });
    hi / lo
}

/// How an interior vertex moves: along a chart curve `(u, v) + s·(a, b)`
/// with second derivative `accel`, or (near a chart singularity) by
/// projecting the ambient displacement back onto the surface.
enum Move {
    Chart { a: f64, b: f64, accel: Vector3<f64> },
    Project,
}

/// Damped Newton descent on the polyline length. Each interior vertex moves
/// along the in-surface direction orthogonal to its local chord. The model
/// Hessian includes the second derivative of the vertex curves, which
/// carries the curvature term of the second variation.
pub(crate) fn minimise(surface: &Surface, norm: &Norm, start: Polyline, max_iterations: usize) -> Result<Level> {
    let mut line = start;
    let mut length = polyline_length(norm, &line.points);
    let n = line.points.len();
    let scale = surface.length_scale();
    let mut iterations = 0;
    let mut final_step = 0.0;
    if n < 3 {
        return Ok(Level { line, length, iterations, final_step });
    }
    let mut mu = 1e-6;
    let mut resamples = 0;
    let mut escapes = 0;
    while iterations < max_iterations {
        iterations += 1;
        if resamples < 20 && spacing_ratio(&line.points) > 1.5 {
            line = line.resample(surface, n - 1)?;
            length = polyline_length(norm, &line.points);
            resamples += 1;
        }
        let edges: Vec<Vector3<f64>> = line.points.windows(2).map(|w| w[1] - w[0]).collect();
        let grads: Vec<Vector3<f64>> = edges.iter().map(|e| norm.gradient(e)).collect();
        let hess: Vec<_> = edges.iter().map(|e| norm.hessian(e)).collect();
        let m = n - 2;
        let mut dirs = Vec::with_capacity(m);
        let mut moves = Vec::with_capacity(m);
        for i in 1..n - 1 {
            let (u, v) = line.params[i];
            let jet = surface.jet(u, v)?;
            let cross = jet.du.cross(&jet.dv);
            let chord = line.points[i + 1] - line.points[i - 1];
            let regular = cross.norm() > 0.05 * jet.du.norm() * jet.dv.norm();
            let xi = if regular { cross.normalize() } else { surface.normal(u, v)? };
            let d = xi.cross(&chord);
            let len = d.norm();
            let d = if len > 0.0 { d / len } else { Vector3::zeros() };
            if regular {
                let g = nalgebra::Matrix2::new(
                    jet.du.dot(&jet.du),
                    jet.du.dot(&jet.dv),
                    jet.dv.dot(&jet.du),
                    jet.dv.dot(&jet.dv),
                );
                let rhs = nalgebra::Vector2::new(jet.du.dot(&d), jet.dv.dot(&d));
                let ab = g.try_inverse().map(|gi| gi * rhs).unwrap_or_else(nalgebra::Vector2::zeros);
                let (a, b) = (ab.x, ab.y);
                let accel = jet.duu * (a * a) + jet.duv * (2.0 * a * b) + jet.dvv * (b * b);
                moves.push(Move::Chart { a, b, accel });
            } else {
                moves.push(Move::Project);
            }
            dirs.push(d);
        }
        let mut g = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m.saturating_sub(1)];
        for k in 0..m {
            let i = k + 1;
            let d = &dirs[k];
            let force = grads[i - 1] - grads[i];
            g[k] = d.dot(&force);
            diag[k] = d.dot(&((hess[i - 1] + hess[i]) * d));
            if let Move::Chart { accel, .. } = &moves[k] {
                diag[k] += force.dot(accel);
            }
            if k + 1 < m {
                off[k] = -d.dot(&(hess[i] * dirs[k + 1]));
            }
        }
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm <= 1e-13 * (n as f64).sqrt() {
            final_step = 0.0;
            if escapes < 4 && escape(surface, norm, &mut line, &mut length, &moves, &dirs, &diag, &off)? {
                escapes += 1;
                continue;
            }
            break;
        }
        let dmax = diag.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let mut accepted = false;
        for _ in 0..12 {
            let damped: Vec<f64> = diag.iter().map(|x| x + mu * dmax).collect();
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            let Some(step) = solve_tridiagonal(&damped, &off, &rhs) else {
                mu = (mu * 10.0).max(1e-6);
                continue;
            };
            let step_norm = step.iter().fold(0.0_f64, |a, s| a.max(s.abs()));
            let mut alpha = 1.0;
            for _ in 0..20 {
                let mut cand = line.clone();
                for k in 0..m {
                    let i = k + 1;
                    let t = alpha * step[k];
                    let (u, v) = line.params[i];
                    let p = match moves[k] {
                        Move::Chart { a, b, .. } => surface.wrap(u + t * a, v + t * b),
                        Move::Project => surface.project(&(line.points[i] + dirs[k] * t), (u, v))?,
                    };
                    cand.params[i] = p;
                    cand.points[i] = surface.point(p.0, p.1)?;
                }
                let new_length = polyline_length(norm, &cand.points);
                if new_length < length {
                    final_step = alpha * step_norm;
                    line = cand;
                    length = new_length;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
                if alpha * step_norm < 1e-15 * scale {
                    break;
                }
            }
            if accepted {
                if alpha == 1.0 {
                    mu = (mu * 0.1).max(1e-12);
                }
                break;
            }
            mu = (mu * 10.0).max(1e-6);
        }
        if !accepted || final_step < 1e-13 * scale {
            if escapes < 4 && escape(surface, norm, &mut line, &mut length, &moves, &dirs, &diag, &off)? {
                escapes += 1;
                continue;
            }
            break;
        }
    }
    Ok(Level { line, length, iterations, final_step })
}

/// At a stationary polyline whose model Hessian has a negative eigenvalue
/// (a geodesic past a conjugate point), step along the offending mode.
#[allow(clippy::too_many_arguments)]
fn escape(
    surface: &Surface,
    norm: &Norm,
    line: &mut Polyline,
    length: &mut f64,
    moves: &[Move],
    dirs: &[Vector3<f64>],
    diag: &[f64],
    off: &[f64],
) -> Result<bool> {
    let m = diag.len();
    let mut h = DMatrix::zeros(m, m);
    for k in 0..m {
        h[(k, k)] = diag[k];
        if k + 1 < m {
            h[(k, k + 1)] = off[k];
            h[(k + 1, k)] = off[k];
        }
    }
    let eig = h.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let dmax = diag.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if eig.eigenvalues[k] >= -1e-9 * dmax {
        return Ok(false);
    }
    let mode = eig.eigenvectors.column(k);
    let peak = mode.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let spacing = euclidean_length(&line.points) / (line.points.len() - 1) as f64;
    let mut amp = spacing / peak;
    for _ in 0..30 {
        for sign in [1.0, -1.0] {
            let mut cand = line.clone();
            for j in 0..m {
                let i = j + 1;
                let t = sign * amp * mode[j];
                let (u, v) = line.params[i];
                let p = match moves[j] {
                    Move::Chart { a, b, .. } => surface.wrap(u + t * a, v + t * b),
                    Move::Project => surface.project(&(line.points[i] + dirs[j] * t), (u, v))?,
                };
                cand.params[i] = p;
                cand.points[i] = surface.point(p.0, p.1)?;
            }
            let l = polyline_length(norm, &cand.points);
            if l < *length {
                *line = cand;
                *length = l;
                return Ok(true);
            }
        }
        amp *= 0.5;
    }
    Ok(false)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{Ellipsoid, Plane};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn zigzag_on_plane_straightens() {
        let s = Surface::from_chart(Plane);
        let e = Norm::euclidean();
        let params = vec![(-1.0, -1.0), (0.0, -0.3), (0.2, 0.6), (1.0, 1.0)];
        let line = Polyline::from_params(&s, params).unwrap().resample(&s, 16).unwrap();
        let out = minimise(&s, &e, line, 200).unwrap();
        assert_relative_eq!(out.length, 8f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn sphere_quarter_arc() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        let e = Norm::euclidean();
        let params = vec![(PI / 2.0, 0.0), (1.2, 0.6), (PI / 2.0, PI / 2.0)];
        let mut line = Polyline::from_params(&s, params).unwrap().resample(&s, 16).unwrap();
        for _ in 0..3 {
            line = minimise(&s, &e, line, 200).unwrap().line.subdivide(&s).unwrap();
        }
        let out = minimise(&s, &e, line, 200).unwrap();
        assert_relative_eq!(out.length, PI / 2.0, epsilon = 1e-4);
        assert!(out.length < PI / 2.0);
    }

    #[test]
    fn long_arc_past_antipode_is_abandoned() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        let e = Norm::euclidean();
        // start on the long way round the equator between two nearly antipodal points
        let params: Vec<(f64, f64)> = (0..=32).map(|k| (PI / 2.0, -0.1 * (k as f64 / 32.0) * (PI + 0.1) / 0.1)).collect();
        let params = params.into_iter().map(|(u, v)| s.wrap(u, v)).collect();
        let line = Polyline::from_params(&s, params).unwrap();
        let out = minimise(&s, &e, line, 400).unwrap();
        let short = 2.0 * 32.0 * ((PI - 0.1) / 64.0).sin();
        assert!(out.length < short + 1e-6, "{} vs {short}", out.length);
    }
}
