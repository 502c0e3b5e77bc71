use nalgebra::Matrix3;

/// Frobenius distance from `f` to the rotation group SO(3).
///
/// With singular values σ₁ ≥ σ₂ ≥ σ₃ the nearest rotation is
/// `U diag(1, 1, d) Vᵀ` where `d = sign det(U Vᵀ)`, so
/// `dist² = (σ₁−1)² + (σ₂−1)² + (σ₃−d)²`. This stays correct for
/// `det f ≤ 0`.
pub fn dist_so3(f: &Matrix3<f64>) -> f64 {
    dist2_so3(f).sqrt()
}

pub fn dist2_so3(f: &Matrix3<f64>) -> f64 {
    let svd = f.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let d = (u * vt).determinant().signum();
    (s[0] - 1.0).powi(2) + (s[1] - 1.0).powi(2) + (s[2] - d).powi(2)
}

/// Closest rotation to `f` in the Frobenius norm.
pub fn nearest_rotation(f: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = f.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let d = (u * vt).determinant().signum();
    if d >= 0.0 {
        return u * vt;
    }
    // flip the direction of the smallest singular value
    let (kmin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("three singular values");
    let mut flip = Matrix3::identity();
    flip[(kmin, kmin)] = -1.0;
    u * flip * vt
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};

    #[test]
    fn rotations_are_at_distance_zero() {
        for (axis, angle) in [(Vector3::x(), 0.3), (Vector3::new(1.0, 2.0, -1.0), 2.9), (Vector3::z(), -1.1)] {
            let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner();
            assert!(dist_so3(&r) < 1e-7);
            assert!((nearest_rotation(&r) - r).norm() < 1e-12);
        }
    }

    #[test]
    fn scaled_identity() {
        assert!((dist_so3(&(2.0 * Matrix3::identity())) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reflection_is_handled() {
        let f = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        // nearest rotation is Id; distance 2
        assert!((dist_so3(&f) - 2.0).abs() < 1e-12);
        let r = nearest_rotation(&f);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        assert!(((f - r).norm() - 2.0).abs() < 1e-12);
    }
}
