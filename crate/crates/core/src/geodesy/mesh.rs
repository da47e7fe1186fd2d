//! Parameter-grid graph of a surface and Dijkstra search on it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::norm::Norm;
use crate::surface::{Surface, Topology};

/// An 8-connected grid over the parameter rectangle whose edges carry the
/// Minkowski and Euclidean lengths of their chords.
///
/// Open and periodic directions follow the surface topology. On sphere
/// topology the first and last polar rows are replaced by two pole vertices
/// joined to every vertex of the adjacent row.
#[derive(Clone, Debug)]
pub struct MeshGraph {
    rows: usize,
    cols: usize,
    wrap_rows: bool,
    wrap_cols: bool,
    poles: bool,
    origin: [f64; 2],
    spacing: [f64; 2],
    params: Vec<(f64, f64)>,
    points: Vec<Vector3<f64>>,
    offsets: Vec<usize>,
    edges: Vec<(usize, f64, f64)>,
}

/// Search-heap entry, ordered so the smallest `(length, index)` pops first.
#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MeshGraph {
    /// Grid with `resolution` cells along `u` (and `2·resolution` azimuthal
    /// cells on sphere topology, `resolution` otherwise).
    pub fn build(surface: &Surface, norm: &Norm, resolution: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::invalid("mesh resolution must be at least 4"));
        }
        let [[u0, u1], [v0, v1]] = surface.domain();
        let topo = surface.topology();
        let (rows, cols, wrap_rows, wrap_cols, poles) = match topo {
            Topology::Open => (resolution + 1, resolution + 1, false, false, false),
            Topology::PeriodicU => (resolution, resolution + 1, true, false, false),
            Topology::Torus => (resolution, resolution, true, true, false),
            Topology::Sphere => (resolution - 1, 2 * resolution, false, true, true),
        };
        let ncell_u = resolution as f64;
        let ncell_v = if poles { 2.0 * resolution as f64 } else { resolution as f64 };
        let spacing = [(u1 - u0) / ncell_u, (v1 - v0) / ncell_v];
        let origin = if poles { [u0 + spacing[0], v0] } else { [u0, v0] };
        let mut params = Vec::with_capacity(rows * cols + 2);
        for i in 0..rows {
            for j in 0..cols {
                params.push((origin[0] + i as f64 * spacing[0], origin[1] + j as f64 * spacing[1]));
            }
        }
        if poles {
            params.push((u0, v0));
            params.push((u1, v0));
        }
        let points: Vec<Result<Vector3<f64>>> = params.par_iter().map(|(u, v)| surface.point(*u, *v)).collect();
        let points: Vec<Vector3<f64>> = points.into_iter().collect::<Result<_>>()?;
        let mut mesh = Self {
            rows,
            cols,
            wrap_rows,
            wrap_cols,
            poles,
            origin,
            spacing,
            params,
            points,
            offsets: Vec::new(),
            edges: Vec::new(),
        };
        let n = mesh.params.len();
        let lists: Vec<Vec<(usize, f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|a| {
                mesh.neighbours(a)
                    .into_iter()
                    .map(|b| {
                        let d = mesh.points[b] - mesh.points[a];
                        (b, norm.gauge(&d), d.norm())
                    })
                    .collect()
            })
            .collect();
        mesh.offsets.push(0);
        for l in lists {
            mesh.edges.extend(l);
            mesh.offsets.push(mesh.edges.len());
        }
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, k: usize) -> (f64, f64) {
        self.params[k]
    }

    pub fn point(&self, k: usize) -> Vector3<f64> {
        self.points[k]
    }

    /// `(neighbour, Minkowski length, Euclidean length)` of the edges at `k`.
    pub fn edges(&self, k: usize) -> &[(usize, f64, f64)] {
        &self.edges[self.offsets[k]..self.offsets[k + 1]]
    }

    fn index(&self, i: isize, j: isize) -> Option<usize> {
        let (r, c) = (self.rows as isize, self.cols as isize);
        let i = if self.wrap_rows {
            i.rem_euclid(r)
        } else if (0..r).contains(&i) {
            i
        } else {
            return None;
        };
        let j = if self.wrap_cols {
            j.rem_euclid(c)
        } else if (0..c).contains(&j) {
            j
        } else {
            return None;
        };
        Some((i * c + j) as usize)
    }

    fn neighbours(&self, k: usize) -> Vec<usize> {
        let grid = self.rows * self.cols;
        if self.poles && k >= grid {
            let row = if k == grid { 0 } else { self.rows - 1 };
            return (0..self.cols).map(|j| row * self.cols + j).collect();
        }
        let (i, j) = ((k / self.cols) as isize, (k % self.cols) as isize);
        let mut out = Vec::with_capacity(9);
        for di in -1..=1 {
            for dj in -1..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                if let Some(b) = self.index(i + di, j + dj) {
                    if b != k && !out.contains(&b) {
                        out.push(b);
                    }
                }
            }
        }
        if self.poles {
            if i == 0 {
                out.push(grid);
            }
            if i as usize == self.rows - 1 {
                out.push(grid + 1);
            }
        }
        out
    }

    /// Grid vertices near the parameter point `(u, v)`: the 4×4 block around
    /// its cell, plus a pole when the point is within one row of it.
    pub fn vertices_near(&self, u: f64, v: f64) -> Vec<usize> {
        let fi = ((u - self.origin[0]) / self.spacing[0]).floor() as isize;
        let fj = ((v - self.origin[1]) / self.spacing[1]).floor() as isize;
        let mut out = Vec::new();
        for i in fi - 1..=fi + 2 {
            for j in fj - 1..=fj + 2 {
                if let Some(b) = self.index(i, j) {
                    if !out.contains(&b) {
                        out.push(b);
                    }
                }
            }
        }
        if self.poles {
            let grid = self.rows * self.cols;
            if fi <= 0 {
                out.push(grid);
            }
            if fi >= self.rows as isize - 2 {
                out.push(grid + 1);
            }
        }
        out
    }

    /// Virtual edges from an off-grid point to its nearby vertices.
    fn attach(&self, surface: &Surface, norm: &Norm, p: (f64, f64)) -> Result<(Vector3<f64>, Vec<(usize, f64)>)> {
        let x = surface.point(p.0, p.1)?;
        let edges = self
            .vertices_near(p.0, p.1)
            .into_iter()
            .map(|k| (k, norm.gauge(&(self.points[k] - x))))
            .collect();
        Ok((x, edges))
    }

    fn search(&self, sources: &[(usize, f64)], target: Option<&[(usize, f64)]>) -> (Vec<f64>, Vec<usize>, f64, usize) {
        let n = self.vertex_count();
        let none = usize::MAX;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![none; n];
        let mut heap = BinaryHeap::new();
        for &(k, w) in sources {
            if w < dist[k] {
                dist[k] = w;
                heap.push(Entry(w, k));
            }
        }
        let mut exit = vec![f64::INFINITY; n];
        if let Some(t) = target {
            for &(k, w) in t {
                exit[k] = exit[k].min(w);
            }
        }
        let mut best = f64::INFINITY;
        let mut best_vertex = none;
        while let Some(Entry(d, k)) = heap.pop() {
            if d > dist[k] {
                continue;
            }
            if target.is_some() && d >= best {
                break;
            }
            if d + exit[k] < best {
                best = d + exit[k];
                best_vertex = k;
            }
            for &(b, w, _) in self.edges(k) {
                let nd = d + w;
                if nd < dist[b] || (nd == dist[b] && k < prev[b]) {
                    if nd < dist[b] {
                        heap.push(Entry(nd, b));
                    }
                    dist[b] = nd;
                    prev[b] = k;
                }
            }
        }
        (dist, prev, best, best_vertex)
    }

    fn trace(prev: &[usize], mut k: usize) -> Vec<usize> {
        let mut out = vec![k];
        while prev[k] != usize::MAX {
            k = prev[k];
            out.push(k);
        }
        out.reverse();
        out
    }

    /// Shortest graph path between two parameter points. Returns the parameter
    /// sequence (endpoints included) and its graph length.
    pub fn shortest_path(
        &self,
        surface: &Surface,
        norm: &Norm,
        p: (f64, f64),
        q: (f64, f64),
    ) -> Result<(Vec<(f64, f64)>, f64)> {
        let (_, src) = self.attach(surface, norm, p)?;
        let (_, dst) = self.attach(surface, norm, q)?;
        let (_, prev, best, vertex) = self.search(&src, Some(&dst));
        if vertex == usize::MAX || !best.is_finite() {
            return Err(Error::NoPath);
        }
        let mut out = vec![p];
        out.extend(Self::trace(&prev, vertex).into_iter().map(|k| self.params[k]));
        out.push(q);
        Ok((out, best))
    }

    /// The grid vertex farthest from `p` in graph distance.
    pub fn farthest(&self, surface: &Surface, norm: &Norm, p: (f64, f64)) -> Result<(usize, f64)> {
        let (_, src) = self.attach(surface, norm, p)?;
        let (dist, ..) = self.search(&src, None);
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (k, d) in dist.iter().enumerate() {
            if d.is_finite() && *d > best.1 {
                best = (k, *d);
            }
        }
        if best.0 == usize::MAX {
            return Err(Error::NoPath);
        }
        Ok(best)
    }
}

/// Antipodal parameters on sphere topology: `(π − θ, φ + π)`.
pub fn antipodal_params(theta: f64, phi: f64) -> (f64, f64) {
    (PI - theta, (phi + PI).rem_euclid(2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{Ellipsoid, Plane, Torus};
    use approx::assert_relative_eq;

    #[test]
    fn heap_pops_smallest_length_then_index() {
        let mut h = BinaryHeap::new();
        for e in [Entry(2.0, 0), Entry(1.0, 5), Entry(1.0, 3)] {
            h.push(e);
        }
        assert_eq!(h.pop().unwrap().1, 3);
        assert_eq!(h.pop().unwrap().1, 5);
        assert_eq!(h.pop().unwrap().1, 0);
    }

    #[test]
    fn plane_diagonal_path() {
        let s = Surface::from_chart(Plane);
        let e = Norm::euclidean();
        let m = MeshGraph::build(&s, &e, 10).unwrap();
        let (path, len) = m.shortest_path(&s, &e, (-1.0, -1.0), (1.0, 1.0)).unwrap();
        assert_relative_eq!(len, 8f64.sqrt(), epsilon = 1e-12);
        assert_eq!(path.first(), Some(&(-1.0, -1.0)));
        assert_eq!(path.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn sphere_mesh_has_connected_poles() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        let e = Norm::euclidean();
        let m = MeshGraph::build(&s, &e, 16).unwrap();
        let n = m.vertex_count();
        assert_eq!(m.edges(n - 2).len(), 32);
        let (_, len) = m.shortest_path(&s, &e, (0.0, 0.0), (PI, 0.0)).unwrap();
        assert!(len > 2.0 && len < PI * 1.1, "{len}");
    }

    #[test]
    fn torus_wraps_in_both_directions() {
        let s = Surface::from_chart(Torus { major: 2.0, minor: 0.5 });
        let e = Norm::euclidean();
        let m = MeshGraph::build(&s, &e, 32).unwrap();
        let (_, len) = m.shortest_path(&s, &e, (0.1, 0.0), (6.2, 0.0)).unwrap();
        assert!(len < 0.6, "{len}");
    }

    #[test]
    fn farthest_point_on_sphere_is_near_antipode() {
        let s = Surface::from_chart(Ellipsoid::sphere(1.0));
        let e = Norm::euclidean();
        let m = MeshGraph::build(&s, &e, 24).unwrap();
        let (k, _) = m.farthest(&s, &e, (1.0, 0.5)).unwrap();
        let (t, p) = antipodal_params(1.0, 0.5);
        let anti = s.point(t, p).unwrap();
        assert!((m.point(k) - anti).norm() < 0.2);
    }
}
