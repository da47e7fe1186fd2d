//! Small dense helpers on top of `nalgebra`.

use nalgebra::{Matrix2, Vector2, Vector3};

/// Orthonormal basis `(e1, e2)` of the plane orthogonal to the unit vector `n`.
///
/// The coordinate axis least aligned with `n` is Gram–Schmidt projected onto
/// `n⊥`; `e2 = n × e1`, so `(e1, e2, n)` is right-handed. Ties pick the lowest
/// axis index, which keeps the basis reproducible.
pub fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let mut axis = 0;
    for i in 1..3 {
        if n[i].abs() < n[axis].abs() {
            axis = i;
        }
    }
    let mut a = Vector3::zeros();
    a[axis] = 1.0;
    let e1 = (a - n * n.dot(&a)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Eigenvalues of a real 2×2 matrix through the trace/determinant quadratic.
///
/// Returns `(larger, smaller, imaginary_part)`. A negative discriminant is
/// clipped to zero and its square root reported as the imaginary part so the
/// caller can decide whether it is rounding noise.
pub fn eigen2(m: &Matrix2<f64>) -> (f64, f64, f64) {
    let half_tr = 0.5 * m.trace();
    let det = m.determinant();
    let disc = half_tr * half_tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (half_tr + s, half_tr - s, 0.0)
    } else {
        (half_tr, half_tr, (-disc).sqrt())
    }
}

/// A unit eigenvector of `m` for the real eigenvalue `lambda`.
///
/// Falls back to `(1, 0)` when `m − λI` vanishes (umbilic case).
pub fn eigvec2(m: &Matrix2<f64>, lambda: f64) -> Vector2<f64> {
    let a = Vector2::new(m[(0, 1)], lambda - m[(0, 0)]);
    let b = Vector2::new(lambda - m[(1, 1)], m[(1, 0)]);
    let v = if a.norm() >= b.norm() { a } else { b };
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if v.norm() <= 1e-14 * scale {
        Vector2::new(1.0, 0.0)
    } else {
        v.normalize()
    }
}

/// Symmetric part of a 2×2 matrix.
pub fn sym2(m: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (m + m.transpose())
}

/// Solve a symmetric positive definite tridiagonal system `A x = rhs` where
/// `diag` holds `A_ii` and `off` holds `A_{i,i+1} = A_{i+1,i}`.
///
/// Returns `None` when a pivot is not positive.
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if !(pivot > 0.0) {
        return None;
    }
    if n > 1 {
        c[0] = off[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - off[i - 1] * c[i - 1];
        if !(pivot > 0.0) {
            return None;
        }
        if i + 1 < n {
            c[i] = off[i] / pivot;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / pivot;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Some(x)
}

/// Angle between two vectors, in radians.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let cross = a.cross(b).norm();
    cross.atan2(a.dot(b))
}

/// Unit vector from spherical angles (polar `theta`, azimuth `phi`).
pub fn spherical(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Polar and azimuthal angles of a non-zero vector; azimuth in `[0, 2π)`.
pub fn angles_of(x: &Vector3<f64>) -> (f64, f64) {
    let r = x.norm();
    let theta = (x.z / r).clamp(-1.0, 1.0).acos();
    let mut phi = x.y.atan2(x.x);
    if phi < 0.0 {
        phi += std::f64::consts::TAU;
    }
    (theta, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_basis_is_right_handed_and_orthonormal() {
        for n in [
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(1.0, 2.0, -3.0).normalize(),
            Vector3::new(-1.0, 0.0, 0.0),
        ] {
            let (e1, e2) = tangent_basis(&n);
            assert!((e1.norm() - 1.0).abs() < 1e-14);
            assert!(e1.dot(&n).abs() < 1e-14);
            assert!(e2.dot(&n).abs() < 1e-14);
            assert!((e1.cross(&e2) - n).norm() < 1e-14);
        }
    }

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let diag = [4.0, 5.0, 6.0, 3.0];
        let off = [1.0, -2.0, 0.5];
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let x = solve_tridiagonal(&diag, &off, &rhs).unwrap();
        let a = nalgebra::Matrix4::new(
            4.0, 1.0, 0.0, 0.0, //
            1.0, 5.0, -2.0, 0.0, //
            0.0, -2.0, 6.0, 0.5, //
            0.0, 0.0, 0.5, 3.0,
        );
        let r = a * nalgebra::Vector4::from_column_slice(&x) - nalgebra::Vector4::from_column_slice(&rhs);
        assert!(r.norm() < 1e-13);
    }

    #[test]
    fn eigen2_handles_complex_pair() {
        let rot = Matrix2::new(0.0, -1.0, 1.0, 0.0);
        let (_, _, im) = eigen2(&rot);
        assert!((im - 1.0).abs() < 1e-15);
        let (l1, l2, im) = eigen2(&Matrix2::new(3.0, 1.0, 0.0, -2.0));
        assert_eq!(im, 0.0);
        assert!((l1 - 3.0).abs() < 1e-14 && (l2 + 2.0).abs() < 1e-14);
    }
}
