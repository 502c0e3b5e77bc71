//! Isotropic material constants, the quadratic forms of linear elasticity,
//! and the Saint Venant–Kirchhoff stored energy.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub mu: f64,
    pub lambda: f64,
}

impl Material {
    /// Accepts any Lamé pair with `μ > 0` and `2μ + λ > 0`, the range in
    /// which the minimal completion defining `q2` exists.
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidMaterial("Lamé constants must be finite".into()));
        }
        if mu <= 0.0 {
            return Err(Error::InvalidMaterial(format!("mu must be positive, got {mu}")));
        }
        if 2.0 * mu + lambda <= 0.0 {
            return Err(Error::InvalidMaterial(format!("2 mu + lambda must be positive, got {}", 2.0 * mu + lambda)));
        }
        Ok(Self { mu, lambda })
    }

    /// Checks the stronger conditions the plate equations need: `q2`/`q3`
    /// positive definite (`2μ + 3λ > 0`) and a positive bending stiffness
    /// (`λ + μ > 0`).
    pub fn validate_plate(&self) -> Result<()> {
        if 2.0 * self.mu + 3.0 * self.lambda <= 0.0 {
            return Err(Error::InvalidMaterial("2 mu + 3 lambda must be positive".into()));
        }
        if self.lambda + self.mu <= 0.0 {
            return Err(Error::InvalidMaterial("lambda + mu must be positive".into()));
        }
        let (nu, s, b) = (self.nu(), self.young(), self.bending_stiffness());
        if !(nu.is_finite() && s.is_finite() && b.is_finite() && b > 0.0) {
            return Err(Error::InvalidMaterial(format!("degenerate derived constants nu={nu} S={s} B={b}")));
        }
        Ok(())
    }

    /// Poisson's ratio `λ / (2(λ+μ))`.
    pub fn nu(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }

    /// Young's modulus `μ(3λ+2μ)/(λ+μ)`.
    pub fn young(&self) -> f64 {
        self.mu * (3.0 * self.lambda + 2.0 * self.mu) / (self.lambda + self.mu)
    }

    /// Bending stiffness `S / (12(1−ν²))`.
    pub fn bending_stiffness(&self) -> f64 {
        let nu = self.nu();
        self.young() / (12.0 * (1.0 - nu * nu))
    }

    /// Coefficient of `(tr F)²` in `q2`.
    pub fn plate_lambda(&self) -> f64 {
        2.0 * self.mu * self.lambda / (2.0 * self.mu + self.lambda)
    }

    pub fn q3(&self, f: &Matrix3<f64>) -> f64 {
        let s = 0.5 * (f + f.transpose());
        2.0 * self.mu * s.norm_squared() + self.lambda * f.trace().powi(2)
    }

    pub fn q2(&self, f: &Matrix2<f64>) -> f64 {
        let s = 0.5 * (f + f.transpose());
        2.0 * self.mu * s.norm_squared() + self.plate_lambda() * f.trace().powi(2)
    }

    /// Plane stress `2μ sym F + λ̄ (tr F) Id`, half the derivative of `q2`.
    pub fn plate_stress(&self, f: &Matrix2<f64>) -> Matrix2<f64> {
        let s = 0.5 * (f + f.transpose());
        2.0 * self.mu * s + self.plate_lambda() * f.trace() * Matrix2::identity()
    }

    /// `q2` obtained by minimizing `q3` over the symmetric completions of
    /// `f`, using only evaluations of `q3`.
    pub fn q2_via_min(&self, f: &Matrix2<f64>) -> f64 {
        let complete = |p: &Vector3<f64>| {
            let mut m = Matrix3::zeros();
            m.fixed_view_mut::<2, 2>(0, 0).copy_from(f);
            m[(0, 2)] = p[0];
            m[(2, 0)] = p[0];
            m[(1, 2)] = p[1];
            m[(2, 1)] = p[1];
            m[(2, 2)] = p[2];
            self.q3(&m)
        };
        // q(p) = q0 + gᵀp + ½pᵀHp; unit-step differences are exact for a quadratic
        let q0 = complete(&Vector3::zeros());
        let e = |i: usize| Vector3::ith(i, 1.0);
        let mut hess = nalgebra::Matrix3::zeros();
        let mut g = Vector3::zeros();
        for i in 0..3 {
            let qp = complete(&e(i));
            let qm = complete(&(-e(i)));
            g[i] = 0.5 * (qp - qm);
            hess[(i, i)] = qp - 2.0 * q0 + qm;
        }
        for i in 0..3 {
            for j in i + 1..3 {
                let qpp = complete(&(e(i) + e(j)));
                let v = qpp - q0 - g[i] - g[j] - 0.5 * hess[(i, i)] - 0.5 * hess[(j, j)];
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let p = hess.cholesky().map(|c| c.solve(&(-g))).unwrap_or_else(Vector3::zeros);
        complete(&p)
    }

    /// The vector `c(F)` with `q2(F) = q3(F* + sym(c ⊗ e₃))`.
    pub fn c_vec(&self, f: &Matrix2<f64>) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -self.lambda * f.trace() / (2.0 * self.mu + self.lambda))
    }

    /// Saint Venant–Kirchhoff energy `μ|E|² + (λ/2)(tr E)²`, `E = (FᵀF − Id)/2`.
    pub fn w_density(&self, f: &Matrix3<f64>) -> f64 {
        let e = green_strain(f);
        self.mu * e.norm_squared() + 0.5 * self.lambda * e.trace().powi(2)
    }

    /// First Piola–Kirchhoff stress `∂W/∂F = F (2μE + λ tr E Id)`.
    pub fn piola(&self, f: &Matrix3<f64>) -> Matrix3<f64> {
        let e = green_strain(f);
        f * (2.0 * self.mu * e + self.lambda * e.trace() * Matrix3::identity())
    }
}

fn green_strain(f: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (f.transpose() * f - Matrix3::identity())
}

/// `l(F) = (F₁₃+F₃₁, F₂₃+F₃₂, F₃₃)`, so that `sym(F − (F₂ₓ₂)*) = sym(l(F) ⊗ e₃)`.
pub fn l_vec(f: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(f[(0, 2)] + f[(2, 0)], f[(1, 2)] + f[(2, 1)], f[(2, 2)])
}

/// `(F)*`: the 3×3 matrix with `F` in the upper-left block and zeros elsewhere.
pub fn embed(f: &Matrix2<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(f);
    m
}

/// `a ⊗ e₃`
pub fn outer_e3(a: &Vector3<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m.set_column(2, a);
    m
}

pub fn sym3(a: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (a + a.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::cof2;
    use proptest::prelude::*;

    fn unit() -> Material {
        Material::new(1.0, 1.0).unwrap()
    }

    fn mat3() -> impl Strategy<Value = Matrix3<f64>> {
        proptest::collection::vec(-2.0..2.0f64, 9).prop_map(|v| Matrix3::from_row_slice(&v))
    }

    fn sym2_strategy() -> impl Strategy<Value = Matrix2<f64>> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Matrix2::new(a, b, b, c))
    }

    #[test]
    fn rejects_bad_lame_pairs() {
        assert!(Material::new(0.0, 1.0).is_err());
        assert!(Material::new(1.0, -2.0).is_err());
        assert!(Material::new(1.0, f64::INFINITY).is_err());
        // accepted for the quadratic forms, refused for plate constants
        let m = Material::new(10.0, -19.9).unwrap();
        assert!(m.validate_plate().is_err());
        assert!(unit().validate_plate().is_ok());
    }

    #[test]
    fn quadratic_form_examples() {
        let m = unit();
        assert_eq!(m.q3(&Matrix3::identity()), 15.0);
        let skew = Matrix3::new(0.0, 1.0, -2.0, -1.0, 0.0, 3.0, 2.0, -3.0, 0.0);
        assert_eq!(m.q3(&skew), 0.0);
        assert!((m.q2(&Matrix2::identity()) - 20.0 / 3.0).abs() < 1e-14);
        assert_eq!(m.q2(&Matrix2::zeros()), 0.0);
        assert!((m.q2_via_min(&Matrix2::identity()) - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.q2_via_min(&Matrix2::zeros()), 0.0);
    }

    #[test]
    fn c_and_l_examples() {
        let m = unit();
        assert_eq!(m.c_vec(&Matrix2::zeros()), Vector3::zeros());
        let c = m.c_vec(&Matrix2::identity());
        assert!((c - Vector3::new(0.0, 0.0, -2.0 / 3.0)).norm() < 1e-15);
        assert_eq!(l_vec(&embed(&Matrix2::new(1.0, 2.0, 3.0, 4.0))), Vector3::zeros());
        let mut e33 = Matrix3::zeros();
        e33[(2, 2)] = 1.0;
        assert_eq!(l_vec(&e33), Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn density_examples() {
        let m = unit();
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -1.2, 2.0).into_inner();
        assert!(m.w_density(&r) < 1e-28);
        assert!((m.w_density(&(2.0 * Matrix3::identity())) - 16.875).abs() < 1e-12);
    }

    #[test]
    fn derived_constant_identities() {
        for (mu, lambda) in [(1.0, 1.0), (0.3, 2.5), (4.0, -1.0)] {
            let m = Material::new(mu, lambda).unwrap();
            let (nu, s, b) = (m.nu(), m.young(), m.bending_stiffness());
            assert!((b * 12.0 * (1.0 - nu * nu) - s).abs() < 1e-14 * s.abs().max(1.0));
            assert!((s - mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu)).abs() < 1e-14 * s.abs().max(1.0));
            assert!((nu - lambda / (2.0 * (lambda + mu))).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn q3_reads_only_symmetric_part(f in mat3()) {
            let m = Material::new(0.7, 1.9).unwrap();
            prop_assert!((m.q3(&f) - m.q3(&sym3(&f))).abs() < 1e-12);
        }

        #[test]
        fn q2_positive_on_symmetric(f in sym2_strategy()) {
            let m = Material::new(0.7, 1.9).unwrap();
            prop_assume!(f.norm() > 1e-6);
            prop_assert!(m.q2(&f) > 0.0);
        }

        #[test]
        fn c_vec_attains_q2(f in sym2_strategy(), mu in 0.1..10.0f64, lam in -0.05..5.0f64) {
            let m = Material::new(mu, lam).unwrap();
            let completed = embed(&f) + sym3(&outer_e3(&m.c_vec(&f)));
            prop_assert!((m.q3(&completed) - m.q2(&f)).abs() < 1e-12 * m.q2(&f).max(1.0));
        }

        #[test]
        fn l_vec_recovers_out_of_plane_part(f in mat3()) {
            let lhs = sym3(&(embed(&f.fixed_view::<2, 2>(0, 0).into_owned()) + outer_e3(&l_vec(&f))));
            prop_assert!((lhs - sym3(&f)).norm() < 1e-14);
        }

        #[test]
        fn c_and_l_are_linear(a in sym2_strategy(), b in sym2_strategy(), f in mat3(), g in mat3(), s in -3.0..3.0f64) {
            let m = Material::new(1.3, 0.4).unwrap();
            prop_assert!((m.c_vec(&(a + b * s)) - m.c_vec(&a) - m.c_vec(&b) * s).norm() < 1e-12);
            prop_assert!((l_vec(&(f + g * s)) - l_vec(&f) - l_vec(&g) * s).norm() < 1e-12);
        }

        #[test]
        fn plate_stress_identity(f in sym2_strategy(), mu in 0.1..10.0f64, lam in 0.0..10.0f64) {
            let m = Material::new(mu, lam).unwrap();
            let lhs = m.plate_stress(&f);
            let rhs = (f + cof2(&f) * m.nu()) * (12.0 * m.bending_stiffness());
            prop_assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }
    }
}
