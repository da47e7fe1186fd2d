//! Deterministic direction grids and the seeded random source.
//!
//! Randomised sampling uses SplitMix64 (`rand_xoshiro::SplitMix64`) seeded
//! directly with the 64-bit seed as its state, and uniform reals are drawn as
//! `(next_u64 >> 11) · 2⁻⁵³`. Both are documented in the README so that ports
//! can reproduce fixtures bit for bit.

use nalgebra::Vector3;
use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::linalg::spherical;

/// Seeded generator used for every randomised scan.
pub struct SeededRng(SplitMix64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::from_seed(seed.to_le_bytes()))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    /// Uniformly distributed unit vector (normalised via the polar map).
    pub fn direction(&mut self) -> Vector3<f64> {
        let z = self.uniform(-1.0, 1.0);
        let phi = self.uniform(0.0, std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vector3::new(r * phi.cos(), r * phi.sin(), z)
    }
}

/// `n` nearly uniform unit vectors on a Fibonacci spiral.
pub fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Latitude/longitude grid of unit normals: polar angles `iπ/N` (`i = 0..=N`)
/// and azimuths `2πj/(2N)`; each pole appears once. For even `N` all six
/// coordinate axis directions are on the grid.
pub fn lat_long_sphere(resolution: usize) -> Vec<Vector3<f64>> {
    let n = resolution.max(2);
    let mut out = vec![Vector3::new(0.0, 0.0, 1.0)];
    for i in 1..n {
        let theta = std::f64::consts::PI * i as f64 / n as f64;
        for j in 0..2 * n {
            let phi = std::f64::consts::PI * j as f64 / n as f64;
            out.push(spherical(theta, phi));
        }
    }
    out.push(Vector3::new(0.0, 0.0, -1.0));
    out
}

/// The 26 directions `(a, b, c)/|(a, b, c)|` with entries in `{-1, 0, 1}`.
pub fn symmetric_directions() -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(26);
    for a in -1..=1 {
        for b in -1..=1 {
            for c in -1..=1 {
                if (a, b, c) != (0, 0, 0) {
                    out.push(Vector3::new(a as f64, b as f64, c as f64).normalize());
                }
            }
        }
    }
    out
}
