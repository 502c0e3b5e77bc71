//! Growth tensors `a^h = Id + h²ε_g + h x₃ κ_g`, their incompatibility
//! sources, the curvature conditions that force a positive energy, and the
//! linearised flatness test.

use std::fmt;

use nalgebra::{Matrix2, Matrix3};

use crate::error::{Error, Result};
use crate::fields::{
    cof2, curl_t_curl, div_t_div, hessian, ops::grad_with, row_curl, sym2, sym_grad, Diff2, Field2, Grid2,
    Matrix3Field2, MatrixField2, ScalarField2, VectorField2,
};
use crate::material::Material;

/// The moment fields `ε_g`, `κ_g` on the mid-plate.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthField {
    pub eps_g: Matrix3Field2,
    pub kap_g: Matrix3Field2,
}

fn block(m: &Matrix3<f64>) -> Matrix2<f64> {
    m.fixed_view::<2, 2>(0, 0).into_owned()
}

impl GrowthField {
    pub fn new(eps_g: Matrix3Field2, kap_g: Matrix3Field2) -> Result<Self> {
        if eps_g.grid != kap_g.grid {
            return Err(Error::GridMismatch);
        }
        let finite = |f: &Matrix3Field2| f.values.iter().all(|m| m.iter().all(|v| v.is_finite()));
        if !finite(&eps_g) || !finite(&kap_g) {
            return Err(Error::InvalidArgument("growth fields must be finite".into()));
        }
        Ok(Self { eps_g, kap_g })
    }

    pub fn zero(grid: Grid2) -> Self {
        Self { eps_g: Matrix3Field2::zeros(grid), kap_g: Matrix3Field2::zeros(grid) }
    }

    /// Growth with only in-plane blocks, `(ε_g)₂ₓ₂ = eps`, `(κ_g)₂ₓ₂ = kap`.
    pub fn from_blocks(eps: &MatrixField2, kap: &MatrixField2) -> Result<Self> {
        Self::new(crate::fields::io::matrix3_from_2x2(eps), crate::fields::io::matrix3_from_2x2(kap))
    }

    pub fn grid(&self) -> Grid2 {
        self.eps_g.grid
    }

    /// `(sym ε_g)₂ₓ₂`
    pub fn eps_sym2(&self) -> MatrixField2 {
        self.eps_g.map(|m| sym2(&block(m)))
    }

    /// `(sym κ_g)₂ₓ₂`
    pub fn kap_sym2(&self) -> MatrixField2 {
        self.kap_g.map(|m| sym2(&block(m)))
    }

    /// Largest entry magnitude of either moment field, floored at 1.
    pub fn scale(&self) -> f64 {
        self.eps_g
            .values
            .iter()
            .chain(&self.kap_g.values)
            .flat_map(|m| m.iter())
            .fold(1.0f64, |s, v| s.max(v.abs()))
    }

    /// `a^h` at node `node`, physical transverse coordinate `x3 ∈ [−h/2, h/2]`.
    pub fn assemble_ah(&self, node: usize, x3: f64, h: f64) -> Result<Matrix3<f64>> {
        if !(h > 0.0) || x3.abs() > 0.5 * h * (1.0 + 1e-12) {
            return Err(Error::OutsideSlab { x3, h });
        }
        Ok(Matrix3::identity() + self.eps_g.values[node] * (h * h) + self.kap_g.values[node] * (h * x3))
    }

    /// Smallest `det a^h` over all nodes and `nz` evenly spaced transverse
    /// samples.
    pub fn min_det_ah(&self, h: f64, nz: usize) -> f64 {
        let nz = nz.max(2);
        let mut min = f64::INFINITY;
        for k in 0..self.grid().len() {
            for l in 0..nz {
                let x3 = h * (l as f64 / (nz - 1) as f64 - 0.5);
                let a = Matrix3::identity() + self.eps_g.values[k] * (h * h) + self.kap_g.values[k] * (h * x3);
                min = min.min(a.determinant());
            }
        }
        min
    }

    /// Largest thickness (up to `h_upper`) for which `det a^h > 0` at every
    /// sampled point, found by bisection.
    pub fn h_max(&self, h_upper: f64, nz: usize) -> f64 {
        if self.min_det_ah(h_upper, nz) > 0.0 {
            return h_upper;
        }
        let (mut lo, mut hi) = (0.0, h_upper);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.min_det_ah(mid, nz) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `λ_g = curlᵀcurl (ε_g)₂ₓ₂`
    pub fn lambda_g(&self) -> ScalarField2 {
        curl_t_curl(&self.eps_sym2())
    }

    /// `Ω_g` from the expanded formula
    /// `∂₁₁(κ₁₁+νκ₂₂) + ∂₂₂(κ₂₂+νκ₁₁) + (1−ν)∂₁₂(κ₁₂+κ₂₁)` on `(sym κ_g)₂ₓ₂`.
    pub fn omega_g(&self, m: &Material) -> ScalarField2 {
        let nu = m.nu();
        let k = self.kap_sym2();
        let d = Diff2::new(&k.grid);
        let a = d.dxx(&k.component(|m| m[(0, 0)] + nu * m[(1, 1)]));
        let b = d.dyy(&k.component(|m| m[(1, 1)] + nu * m[(0, 0)]));
        let c = d.dxy(&k.component(|m| m[(0, 1)] + m[(1, 0)]));
        Field2 { grid: k.grid, values: (0..a.len()).map(|i| a[i] + b[i] + (1.0 - nu) * c[i]).collect() }
    }

    /// `Ω_g` as `div ᵀdiv(K + ν cof K)` with `K = (sym κ_g)₂ₓ₂`.
    pub fn omega_g_operator(&self, m: &Material) -> ScalarField2 {
        let nu = m.nu();
        div_t_div(&self.kap_sym2().map(|k| k + cof2(k) * nu))
    }

    /// `curl((sym κ_g)₂ₓ₂)`, one scalar per row.
    pub fn co1_field(&self) -> VectorField2 {
        row_curl(&self.kap_sym2())
    }

    /// `curlᵀcurl (ε_g)₂ₓ₂ + det((sym κ_g)₂ₓ₂)`
    pub fn co2_field(&self) -> ScalarField2 {
        let lam = self.lambda_g();
        let k = self.kap_sym2();
        lam.zip_map(&k, |l, k| l + k.determinant())
    }

    /// Conditions that force `inf I_g > 0`; either one holding suffices.
    /// Norms are taken over nodes two or more cells from the boundary, where
    /// every composed stencil is central.
    pub fn curvature_conditions(&self, tol: f64) -> CurvatureReport {
        let co1 = self.co1_field();
        let co1_norm = (0..co1.grid.len())
            .filter(|&k| co1.grid.is_inner(k, 2))
            .fold(0.0f64, |m, k| m.max(co1.values[k].norm()));
        let co2_norm = self.co2_field().max_abs_inner(2);
        CurvatureReport { co1_norm, co2_norm, tol }
    }

    /// Linearised Gauss–Codazzi–Meinardi test: flat when
    /// `curl (sym κ_g)₂ₓ₂ = 0` and `curlᵀcurl (ε_g)₂ₓ₂ = −det (sym κ_g)₂ₓ₂`.
    pub fn flatness_test(&self, tol: f64) -> FlatnessReport {
        let c = self.curvature_conditions(tol);
        FlatnessReport { codazzi_residual: c.co1_norm, gauss_residual: c.co2_norm, tol }
    }

    /// Default tolerance for "≠ 0": `1e-8 ·` the field scale.
    pub fn default_tolerance(&self) -> f64 {
        1e-8 * self.scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureReport {
    pub co1_norm: f64,
    pub co2_norm: f64,
    pub tol: f64,
}

impl CurvatureReport {
    pub fn co1_holds(&self) -> bool {
        self.co1_norm > self.tol
    }

    pub fn co2_holds(&self) -> bool {
        self.co2_norm > self.tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessReport {
    pub codazzi_residual: f64,
    pub gauss_residual: f64,
    pub tol: f64,
}

impl FlatnessReport {
    pub fn is_flat(&self) -> bool {
        self.codazzi_residual <= self.tol && self.gauss_residual <= self.tol
    }
}

/// Growth for which `(w0, v0)` has zero energy: `(ε_g)₂ₓ₂ = sym∇w0 + ½∇v0⊗∇v0`,
/// `(κ_g)₂ₓ₂ = −∇²v0`, third rows and columns zero.
pub fn make_compatible(w0: &VectorField2, v0: &ScalarField2) -> Result<GrowthField> {
    if w0.grid != v0.grid {
        return Err(Error::GridMismatch);
    }
    let d = Diff2::new(&v0.grid);
    let gv = grad_with(&d, v0);
    let sw = sym_grad(w0);
    let eps = sw.zip_map(&gv, |s, g| s + 0.5 * g * g.transpose());
    let kap = hessian(v0).map(|h| -h);
    GrowthField::from_blocks(&eps, &kap)
}

/// Exponents of a growth family `a^h = Id + h^γ ε_g + h^θ x₃ κ_g` and the
/// measured decay of its variation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingProbe {
    pub gamma: f64,
    pub theta: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub beta0: f64,
    /// `(h, Var(a^h))` pairs.
    pub var_ah_samples: Vec<(f64, f64)>,
    /// Least-squares log-log slope of `Var(a^h)`; `None` when the variation
    /// vanishes identically.
    pub fitted_exponent: Option<f64>,
}

impl ScalingProbe {
    pub fn closed_form(gamma: f64, theta: f64) -> (f64, f64, f64) {
        let omega0 = gamma;
        let omega1 = gamma.min(theta);
        (omega0, omega1, critical_exponent(omega0))
    }
}

/// `β₀ = max{ω₀ + 2, 2ω₀}`
pub fn critical_exponent(omega0: f64) -> f64 {
    (omega0 + 2.0).max(2.0 * omega0)
}

/// `Var(a^h) = ‖∇_tan a^h|_Ω‖_∞ + ‖∂₃a^h‖_∞` for the `(γ, θ)` family,
/// with both derivatives taken by finite differences.
pub fn variation(g: &GrowthField, gamma: f64, theta: f64, h: f64, nz: usize) -> f64 {
    let grid = g.grid();
    let d = Diff2::new(&grid);
    // a^h restricted to the mid-plane; Id drops out of the derivatives
    let mid: Vec<Matrix3<f64>> = g.eps_g.values.iter().map(|e| e * h.powf(gamma)).collect();
    let mut tan = vec![0.0; grid.len()];
    for i in 0..3 {
        for j in 0..3 {
            let c: Vec<f64> = mid.iter().map(|m| m[(i, j)]).collect();
            let (dx, dy) = (d.dx(&c), d.dy(&c));
            for k in 0..grid.len() {
                tan[k] += dx[k] * dx[k] + dy[k] * dy[k];
            }
        }
    }
    let tan_sup = tan.iter().fold(0.0f64, |m, v| m.max(v.sqrt()));

    let nz = nz.max(3);
    let dz = h / (nz - 1) as f64;
    let z = crate::fields::Stencil1D::first_derivative(nz, dz);
    let mut normal_sup = 0.0f64;
    for k in 0..grid.len() {
        let column: Vec<Matrix3<f64>> = (0..nz)
            .map(|l| {
                let x3 = -0.5 * h + l as f64 * dz;
                g.eps_g.values[k] * h.powf(gamma) + g.kap_g.values[k] * (h.powf(theta) * x3)
            })
            .collect();
        for l in 0..nz {
            let d3: Matrix3<f64> = z.row(l).iter().map(|&(q, c)| column[q] * c).sum();
            normal_sup = normal_sup.max(d3.norm());
        }
    }
    tan_sup + normal_sup
}

pub fn scaling_probe(g: &GrowthField, gamma: f64, theta: f64, h_list: &[f64], nz: usize) -> Result<ScalingProbe> {
    if !(gamma > 0.0 && theta > 0.0) {
        return Err(Error::InvalidArgument("exponents must be positive".into()));
    }
    if h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidArgument("thicknesses must be positive".into()));
    }
    let (omega0, omega1, beta0) = ScalingProbe::closed_form(gamma, theta);
    let var_ah_samples: Vec<(f64, f64)> = h_list.iter().map(|&h| (h, variation(g, gamma, theta, h, nz))).collect();
    let pts: Vec<(f64, f64)> =
        var_ah_samples.iter().filter(|(_, v)| *v > 0.0).map(|(h, v)| (h.ln(), v.ln())).collect();
    let fitted_exponent = if pts.len() >= 2 { Some(log_slope(&pts)) } else { None };
    Ok(ScalingProbe { gamma, theta, omega0, omega1, beta0, var_ah_samples, fitted_exponent })
}

/// Least-squares slope of `(x, y)` points.
pub fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

impl fmt::Display for CurvatureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "co1_norm: {:e}", self.co1_norm)?;
        writeln!(f, "co2_norm: {:e}", self.co2_norm)?;
        writeln!(f, "co1_holds: {}", self.co1_holds())?;
        writeln!(f, "co2_holds: {}", self.co2_holds())
    }
}

impl fmt::Display for FlatnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "codazzi_residual: {:e}", self.codazzi_residual)?;
        writeln!(f, "gauss_residual: {:e}", self.gauss_residual)?;
        writeln!(f, "tolerance: {:e}", self.tol)?;
        writeln!(f, "flat: {}", self.is_flat())
    }
}

impl fmt::Display for ScalingProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gamma: {}", self.gamma)?;
        writeln!(f, "theta: {}", self.theta)?;
        writeln!(f, "omega0: {}", self.omega0)?;
        writeln!(f, "omega1: {}", self.omega1)?;
        writeln!(f, "beta0: {}", self.beta0)?;
        for (h, v) in &self.var_ah_samples {
            writeln!(f, "var_ah: h={h:e} value={v:e}")?;
        }
        match self.fitted_exponent {
            Some(e) => writeln!(f, "fitted_exponent: {e:.4}"),
            None => writeln!(f, "fitted_exponent: none"),
        }
    }
}
