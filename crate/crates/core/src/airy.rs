//! Stress, Airy potential and the Euler–Lagrange residuals of a plate state.
//!
//! At an equilibrium the in-plane stress `M` is divergence free, hence
//! `M = cof ∇²Φ` for a potential `Φ` fixed up to affine functions. The
//! residuals below measure how far a discrete state is from
//!
//! ```text
//! Δ²Φ = −S(det ∇²v + λ_g)          BΔ²v = [v,Φ] − BΩ_g
//! ```
//!
//! and from the free boundary conditions on the rectangle edges.

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::{Matrix2, Vector2};

use crate::energy2d::{membrane_strain, Displacement2D};
use crate::error::{Error, Result};
use crate::fields::{
    airy_bracket, biharmonic, cof2, curl_t_curl, div_t_div, ops::hessian_with, row_div, sym_grad, Diff2, Field2, Grid2,
    MatrixField2, ScalarField2, VectorField2,
};
use crate::growth::GrowthField;
use crate::material::Material;
use crate::sparse::{lstsq, Triplets};

/// Margin (in cells) of the nodes where residuals of fourth-order
/// expressions are evaluated.
pub const INTERIOR_MARGIN: usize = 2;

/// Stress quantities of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Stress {
    /// In-plane stress `2μ(sym∇w + Ψ) + λ̄(div w + tr Ψ) Id`.
    pub m: MatrixField2,
    /// `½∇v⊗∇v − (sym ε_g)₂ₓ₂`
    pub psi: MatrixField2,
    /// `∇²v + (sym κ_g)₂ₓ₂`
    pub psi_tilde: MatrixField2,
}

/// [`Stress`] together with its Airy potential.
#[derive(Debug, Clone, PartialEq)]
pub struct StressState {
    pub m: MatrixField2,
    pub phi: ScalarField2,
    pub psi: MatrixField2,
    pub psi_tilde: MatrixField2,
    pub fit: AiryFit,
}

impl StressState {
    pub fn compute(d: &Displacement2D, g: &GrowthField, mat: &Material) -> Result<Self> {
        let s = build_stress(d, g, mat)?;
        let (phi, fit) = airy_reconstruct(&s.m)?;
        Ok(Self { m: s.m, phi, psi: s.psi, psi_tilde: s.psi_tilde, fit })
    }
}

pub fn build_stress(d: &Displacement2D, g: &GrowthField, mat: &Material) -> Result<Stress> {
    if d.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = d.grid();
    let diff = Diff2::new(&grid);
    let gv: Vec<Vector2<f64>> = diff.dx(&d.v.values).into_iter().zip(diff.dy(&d.v.values)).map(|(a, b)| Vector2::new(a, b)).collect();
    let eps = g.eps_sym2();
    let psi = Field2 { grid, values: gv.iter().zip(&eps.values).map(|(g, e)| 0.5 * g * g.transpose() - e).collect() };
    let psi_tilde = &hessian_with(&diff, &d.v) + &g.kap_sym2();
    let m = membrane_strain(d, g).map(|e| mat.plate_stress(e));
    Ok(Stress { m, psi, psi_tilde })
}

/// Quality of the least-squares Airy fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryFit {
    /// Root-mean-square Frobenius norm of `∇²Φ − cof M` over the fitted
    /// nodes.
    pub misfit: f64,
    /// `misfit` divided by the root-mean-square of `cof M`.
    pub relative_misfit: f64,
}

impl AiryFit {
    /// Relative misfit above which `M` is not treated as an Airy stress.
    pub const CONSISTENCY_LIMIT: f64 = 0.1;
    /// Absolute misfit treated as roundoff; a stress this small is
    /// trivially an Airy stress and its relative misfit is meaningless.
    pub const NEGLIGIBLE_MISFIT: f64 = 1e-12;

    pub fn is_consistent(&self) -> bool {
        self.relative_misfit <= Self::CONSISTENCY_LIMIT || self.misfit <= Self::NEGLIGIBLE_MISFIT
    }
}

/// Least-squares `Φ` with `∇²Φ ≈ cof M` at every node one or more cells
/// inside the boundary, anchored by `Φ = ∂₁Φ = ∂₂Φ = 0` at the lower-left
/// corner.
pub fn airy_reconstruct(m: &MatrixField2) -> Result<(ScalarField2, AiryFit)> {
    let grid = m.grid;
    let n = grid.len();
    let d = Diff2::new(&grid);
    let interior: Vec<usize> = (0..n).filter(|&k| grid.is_inner(k, 1)).collect();
    let rows = 3 * interior.len() + 3;
    let mut a = Triplets::new(rows, n);
    let mut rhs = Vec::with_capacity(rows);
    let mut target_sq = 0.0;
    for (r, &k) in interior.iter().enumerate() {
        let (i, j) = grid.ij(k);
        let target = cof2(&m.values[k]);
        for &(ii, c) in d.dxx_stencil().row(i) {
            a.push(3 * r, grid.idx(ii, j), c);
        }
        for &(jj, c) in d.dyy_stencil().row(j) {
            a.push(3 * r + 1, grid.idx(i, jj), c);
        }
        // the mixed row stands for both off-diagonal entries of the hessian
        for &(ii, cx) in d.dx_stencil().row(i) {
            for &(jj, cy) in d.dy_stencil().row(j) {
                a.push(3 * r + 2, grid.idx(ii, jj), SQRT_2 * cx * cy);
            }
        }
        let t = [target[(0, 0)], target[(1, 1)], SQRT_2 * 0.5 * (target[(0, 1)] + target[(1, 0)])];
        target_sq += t.iter().map(|t| t * t).sum::<f64>();
        rhs.extend_from_slice(&t);
    }
    let base = 3 * interior.len();
    let corner = grid.idx(0, 0);
    a.push(base, corner, 1.0);
    for &(ii, c) in d.dx_stencil().row(0) {
        a.push(base + 1, grid.idx(ii, 0), c);
    }
    for &(jj, c) in d.dy_stencil().row(0) {
        a.push(base + 2, grid.idx(0, jj), c);
    }
    rhs.extend_from_slice(&[0.0, 0.0, 0.0]);

    let phi = lstsq(&a, &rhs)?;
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearAlgebra("Airy fit is rank deficient beyond the affine kernel".into()));
    }
    let mut res = vec![0.0; rows];
    for t in &a.entries {
        res[t.row] += t.val * phi[t.col];
    }
    let anchor_err = (base..rows).map(|r| res[r].abs()).fold(0.0, f64::max);
    let scale = phi.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if anchor_err > 1e-8 * scale {
        return Err(Error::LinearAlgebra("Airy fit is rank deficient beyond the affine kernel".into()));
    }
    let count = 3.0 * interior.len() as f64;
    let miss_sq: f64 = (0..base).map(|r| (res[r] - rhs[r]).powi(2)).sum();
    let misfit = (miss_sq / count).sqrt();
    let rms_target = (target_sq / count).sqrt();
    let relative_misfit = if rms_target > 0.0 { misfit / rms_target } else if misfit > 0.0 { f64::INFINITY } else { 0.0 };
    Ok((Field2 { grid, values: phi }, AiryFit { misfit, relative_misfit }))
}

/// Interior residuals of the equilibrium equations in both algebraic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ElResiduals {
    /// `Δ²Φ + S(det∇²v + curlᵀcurl(ε_g)₂ₓ₂)`
    pub r1: ScalarField2,
    /// `BΔ²v − [v,Φ] + BΩ_g`
    pub r2: ScalarField2,
    /// `Δ²Φ + S(½[v,v] + λ_g)`
    pub r1_bracket: ScalarField2,
    /// `BΔ²v + B divᵀdiv(K + ν cof K) − (cof∇²Φ):∇²v`, `K = (sym κ_g)₂ₓ₂`
    pub r2_divdiv: ScalarField2,
}

impl ElResiduals {
    pub fn r1_norm(&self) -> f64 {
        self.r1.max_abs_inner(INTERIOR_MARGIN)
    }

    pub fn r2_norm(&self) -> f64 {
        self.r2.max_abs_inner(INTERIOR_MARGIN)
    }

    /// Max-norm of `r1` over nodes at least `fraction` of the side length from
    /// every edge; the band next to the boundary carries a grid-scale layer.
    pub fn r1_norm_away(&self, fraction: f64) -> f64 {
        self.r1.max_abs_inner(physical_margin(&self.r1.grid, fraction))
    }

    pub fn r2_norm_away(&self, fraction: f64) -> f64 {
        self.r2.max_abs_inner(physical_margin(&self.r2.grid, fraction))
    }

    /// Largest disagreement between the two forms of each residual.
    pub fn form_gap(&self) -> f64 {
        let gap = |a: &ScalarField2, b: &ScalarField2| (a - b).max_abs_inner(INTERIOR_MARGIN);
        gap(&self.r1, &self.r1_bracket).max(gap(&self.r2, &self.r2_divdiv))
    }
}

/// Cell count matching a margin of `fraction` of the longer side, never below
/// the stencil margin.
pub fn physical_margin(grid: &Grid2, fraction: f64) -> usize {
    let cells = (grid.nx.max(grid.ny) - 1) as f64;
    ((fraction * cells).round() as usize).max(INTERIOR_MARGIN)
}

/// Residual fields vanish outside the interior margin.
pub fn el_residuals(d: &Displacement2D, phi: &ScalarField2, g: &GrowthField, mat: &Material) -> Result<ElResiduals> {
    let grid = d.grid();
    if phi.grid != grid || g.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let diff = Diff2::new(&grid);
    let (s, b) = (mat.young(), mat.bending_stiffness());
    let hv = hessian_with(&diff, &d.v);
    let hphi = hessian_with(&diff, phi);
    let bi_phi = biharmonic(phi);
    let bi_v = biharmonic(&d.v);
    let eps_block = g.eps_g.map(|m| Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]));
    let curl_eps = curl_t_curl(&eps_block);
    let lambda_g = g.lambda_g();
    let bracket_vv = airy_bracket(&d.v, &d.v);
    let bracket_vphi = airy_bracket(&d.v, phi);
    let omega = g.omega_g(mat);
    let nu = mat.nu();
    let divdiv = div_t_div(&g.kap_sym2().map(|k| k + cof2(k) * nu));
    let mask = |k: usize, v: f64| if grid.is_inner(k, INTERIOR_MARGIN) { v } else { 0.0 };
    let field = |f: &dyn Fn(usize) -> f64| Field2 { grid, values: (0..grid.len()).map(|k| mask(k, f(k))).collect() };
    Ok(ElResiduals {
        r1: field(&|k| bi_phi.values[k] + s * (hv.values[k].determinant() + curl_eps.values[k])),
        r2: field(&|k| b * bi_v.values[k] - bracket_vphi.values[k] + b * omega.values[k]),
        r1_bracket: field(&|k| bi_phi.values[k] + s * (0.5 * bracket_vv.values[k] + lambda_g.values[k])),
        r2_divdiv: field(&|k| {
            b * bi_v.values[k] + b * divdiv.values[k] - cof2(&hphi.values[k]).component_mul(&hv.values[k]).sum()
        }),
    })
}

/// Edges of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

    pub fn name(self) -> &'static str {
        match self {
            Edge::Bottom => "bottom",
            Edge::Right => "right",
            Edge::Top => "top",
            Edge::Left => "left",
        }
    }

    /// Outward normal.
    pub fn normal(self) -> Vector2<f64> {
        match self {
            Edge::Bottom => Vector2::new(0.0, -1.0),
            Edge::Right => Vector2::new(1.0, 0.0),
            Edge::Top => Vector2::new(0.0, 1.0),
            Edge::Left => Vector2::new(-1.0, 0.0),
        }
    }

    /// Counter-clockwise tangent.
    pub fn tangent(self) -> Vector2<f64> {
        let n = self.normal();
        Vector2::new(-n.y, n.x)
    }

    /// Edge nodes, excluding the `skip` nodes nearest each corner.
    pub fn nodes(self, grid: &Grid2, skip: usize) -> Vec<usize> {
        let (nx, ny) = (grid.nx, grid.ny);
        match self {
            Edge::Bottom => (skip..nx.saturating_sub(skip)).map(|i| grid.idx(i, 0)).collect(),
            Edge::Top => (skip..nx.saturating_sub(skip)).map(|i| grid.idx(i, ny - 1)).collect(),
            Edge::Left => (skip..ny.saturating_sub(skip)).map(|j| grid.idx(0, j)).collect(),
            Edge::Right => (skip..ny.saturating_sub(skip)).map(|j| grid.idx(nx - 1, j)).collect(),
        }
    }
}

/// Number of nodes next to each corner left out of the edge residuals.
pub const CORNER_SKIP: usize = 2;

/// Max-norms of the boundary residuals on one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeResiduals {
    pub edge: Edge,
    /// `|Φ|` after removing the best affine function.
    pub phi: f64,
    /// `|∂ₙΦ|` after removing the best affine function.
    pub dn_phi: f64,
    /// `Ψ̃:(n⊗n) + νΨ̃:(τ⊗τ)`
    pub b1: f64,
    /// `(1−ν)∂_τ(Ψ̃:(n⊗τ)) + div(Ψ̃ + ν cof Ψ̃)·n`
    pub b2: f64,
    /// `∂²ₙₙv + ν∂²ττv`, reported when `(sym κ_g)₂ₓ₂` vanishes on the edge.
    pub b1_simplified: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub edges: Vec<EdgeResiduals>,
}

impl BoundaryReport {
    pub fn bc1(&self) -> f64 {
        self.edges.iter().map(|e| e.phi.max(e.dn_phi)).fold(0.0, f64::max)
    }

    pub fn b1(&self) -> f64 {
        self.edges.iter().map(|e| e.b1).fold(0.0, f64::max)
    }

    pub fn b2(&self) -> f64 {
        self.edges.iter().map(|e| e.b2).fold(0.0, f64::max)
    }
}

impl fmt::Display for BoundaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            let name = e.edge.name();
            writeln!(f, "bc1_phi_{name}: {:e}", e.phi)?;
            writeln!(f, "bc1_dn_phi_{name}: {:e}", e.dn_phi)?;
            writeln!(f, "b1_{name}: {:e}", e.b1)?;
            writeln!(f, "b2_{name}: {:e}", e.b2)?;
            if let Some(s) = e.b1_simplified {
                writeln!(f, "b1_simplified_{name}: {:e}", s)?;
            }
        }
        Ok(())
    }
}

/// `Φ − (c + a·x)` with `(c, a)` minimizing the boundary values of `Φ` and
/// `∂ₙΦ` in the least-squares sense (normal derivatives weighted by the
/// domain size so both terms carry the same units).
pub fn subtract_best_affine(phi: &ScalarField2) -> Result<ScalarField2> {
    let grid = phi.grid;
    let d = Diff2::new(&grid);
    let (px, py) = (d.dx(&phi.values), d.dy(&phi.values));
    let len = grid.lx.max(grid.ly);
    let c0 = grid.centroid();
    let mut rows: Vec<([f64; 3], f64)> = Vec::new();
    for edge in Edge::ALL {
        let nrm = edge.normal();
        for k in edge.nodes(&grid, 0) {
            let p = grid.point(k) - c0;
            rows.push(([1.0, p.x, p.y], phi.values[k]));
            rows.push(([0.0, len * nrm.x, len * nrm.y], len * (px[k] * nrm.x + py[k] * nrm.y)));
        }
    }
    let mut a = Triplets::new(rows.len(), 3);
    for (r, (coef, _)) in rows.iter().enumerate() {
        for (c, v) in coef.iter().enumerate() {
            if *v != 0.0 {
                a.push(r, c, *v);
            }
        }
    }
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let x = lstsq(&a, &b)?;
    Ok(phi.zip_map(&Field2::from_fn(grid, |p| x[0] + x[1] * (p.x - c0.x) + x[2] * (p.y - c0.y)), |a, b| a - b))
}

pub fn boundary_residuals(d: &Displacement2D, phi: &ScalarField2, g: &GrowthField, mat: &Material) -> Result<BoundaryReport> {
    let grid = d.grid();
    if phi.grid != grid || g.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let diff = Diff2::new(&grid);
    let nu = mat.nu();
    let kap = g.kap_sym2();
    let hv = hessian_with(&diff, &d.v);
    let psi_t = &hv + &kap;
    let t = psi_t.map(|p| p + cof2(p) * nu);
    let div_t = row_div(&t);
    let phi0 = subtract_best_affine(phi)?;
    let (px, py) = (diff.dx(&phi0.values), diff.dy(&phi0.values));
    let kap_tol = 1e-12 * g.scale();

    let mut edges = Vec::new();
    for edge in Edge::ALL {
        let (n, tau) = (edge.normal(), edge.tangent());
        let mixed: Vec<f64> = psi_t.values.iter().map(|p| n.dot(&(p * tau))).collect();
        let (mx, my) = (diff.dx(&mixed), diff.dy(&mixed));
        let nodes = edge.nodes(&grid, CORNER_SKIP);
        let all_nodes = edge.nodes(&grid, 0);
        let mut r = EdgeResiduals { edge, phi: 0.0, dn_phi: 0.0, b1: 0.0, b2: 0.0, b1_simplified: None };
        for &k in &nodes {
            let p = psi_t.values[k];
            r.phi = r.phi.max(phi0.values[k].abs());
            r.dn_phi = r.dn_phi.max((px[k] * n.x + py[k] * n.y).abs());
            r.b1 = r.b1.max((n.dot(&(p * n)) + nu * tau.dot(&(p * tau))).abs());
            let dtau = tau.x * mx[k] + tau.y * my[k];
            r.b2 = r.b2.max(((1.0 - nu) * dtau + div_t.values[k].dot(&n)).abs());
        }
        if all_nodes.iter().all(|&k| kap.values[k].amax() <= kap_tol) {
            let s = nodes
                .iter()
                .map(|&k| {
                    let h = hv.values[k];
                    (n.dot(&(h * n)) + nu * tau.dot(&(h * tau))).abs()
                })
                .fold(0.0, f64::max);
            r.b1_simplified = Some(s);
        }
        edges.push(r);
    }
    Ok(BoundaryReport { edges })
}

/// Interior max-norm of the row-wise divergence of `M`.
pub fn div_m_norm(m: &MatrixField2) -> f64 {
    let dm = row_div(m);
    (0..dm.grid.len()).filter(|&k| dm.grid.is_inner(k, INTERIOR_MARGIN)).fold(0.0, |a, k| a.max(dm.values[k].norm()))
}

/// `curlᵀcurl F − β/(α+2β) Δ(tr F)` on the interior.
pub fn isotropic_strain_residual(f: &MatrixField2, alpha: f64, beta: f64) -> Result<f64> {
    if alpha == 0.0 || alpha + 2.0 * beta == 0.0 {
        return Err(Error::InvalidArgument("need α ≠ 0 and α + 2β ≠ 0".into()));
    }
    let tr = f.map(|m| m.trace());
    let lap = crate::fields::laplacian(&tr);
    let r = &curl_t_curl(f) - &(&lap * (beta / (alpha + 2.0 * beta)));
    Ok(r.max_abs_inner(INTERIOR_MARGIN))
}

/// Builds `F = α sym∇w + β (div w) Id` and returns the residual of the
/// compatibility identity it must satisfy.
pub fn isotropic_strain_check(w: &VectorField2, alpha: f64, beta: f64) -> Result<f64> {
    isotropic_strain_residual(&isotropic_strain_field(w, alpha, beta), alpha, beta)
}

/// `F = α sym∇w + β (div w) Id`.
pub fn isotropic_strain_field(w: &VectorField2, alpha: f64, beta: f64) -> MatrixField2 {
    sym_grad(w).map(|e| e * alpha + Matrix2::identity() * (beta * e.trace()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::make_compatible;
    use crate::solver2d::{minimize, SolverConfig};

    fn unit() -> Material {
        Material::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn stress_examples() {
        let g = Grid2::unit(9).unwrap();
        let zero = GrowthField::zero(g);
        let s = build_stress(&Displacement2D::zeros(g), &zero, &unit()).unwrap();
        assert!(s.m.values.iter().all(|m| m.norm() == 0.0));
        let stretch = GrowthField::from_blocks(&MatrixField2::filled(g, Matrix2::identity()), &MatrixField2::zeros(g)).unwrap();
        let s = build_stress(&Displacement2D::zeros(g), &stretch, &unit()).unwrap();
        for (m, p) in s.m.values.iter().zip(&s.psi.values) {
            assert!((m + Matrix2::identity() * (10.0 / 3.0)).norm() < 1e-14);
            assert!((p + Matrix2::identity()).norm() < 1e-14);
        }
    }

    #[test]
    fn compatible_state_is_stress_free() {
        let g = Grid2::unit(17).unwrap();
        let w0 = VectorField2::from_fn(g, |p| Vector2::new(p.x * p.y, p.y.sin()));
        let v0 = ScalarField2::from_fn(g, |p| (p.x + 0.5) * (p.y - 0.1).powi(2));
        let growth = make_compatible(&w0, &v0).unwrap();
        let d = Displacement2D { w: w0, v: v0 };
        let st = StressState::compute(&d, &growth, &unit()).unwrap();
        assert!(st.m.values.iter().all(|m| m.norm() < 1e-12));
        assert!(st.phi.max_abs() < 1e-12);
        let el = el_residuals(&d, &st.phi, &growth, &unit()).unwrap();
        assert!(el.form_gap() < 1e-10);
    }

    #[test]
    fn identity_stress_gives_paraboloid() {
        let g = Grid2::with_origin(11, 9, 1.0, 0.8, Vector2::new(0.5, -0.2)).unwrap();
        let (phi, fit) = airy_reconstruct(&MatrixField2::filled(g, Matrix2::identity())).unwrap();
        assert!(fit.misfit < 1e-10 && fit.is_consistent());
        for k in 0..g.len() {
            let p = g.point(k) - g.origin;
            assert!((phi.values[k] - 0.5 * p.norm_squared()).abs() < 1e-10);
        }
    }

    #[test]
    fn non_airy_stress_is_flagged() {
        let g = Grid2::unit(17).unwrap();
        let mut state = 12345u64;
        let m = MatrixField2::from_fn(g, |_| {
            let mut r = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let off = r();
            Matrix2::new(r(), off, off, r())
        });
        let (_, fit) = airy_reconstruct(&m).unwrap();
        assert!(!fit.is_consistent(), "{fit:?}");
    }

    #[test]
    fn cofactor_is_an_involution() {
        let a = Matrix2::new(1.5, -0.3, -0.3, 2.0);
        assert_eq!(cof2(&cof2(&a)), a);
    }

    #[test]
    fn zero_state_has_zero_residuals() {
        let g = Grid2::unit(11).unwrap();
        let d = Displacement2D::zeros(g);
        let z = GrowthField::zero(g);
        let phi = ScalarField2::zeros(g);
        let el = el_residuals(&d, &phi, &z, &unit()).unwrap();
        assert_eq!(el.r1_norm(), 0.0);
        assert_eq!(el.r2_norm(), 0.0);
        let b = boundary_residuals(&d, &phi, &z, &unit()).unwrap();
        assert_eq!(b.bc1().max(b.b1()).max(b.b2()), 0.0);
        assert!(b.edges.iter().all(|e| e.b1_simplified == Some(0.0)));
    }

    #[test]
    fn two_residual_forms_agree() {
        let g = Grid2::unit(21).unwrap();
        let growth = GrowthField::from_blocks(
            &MatrixField2::from_fn(g, |p| Matrix2::new(p.y * p.y, 0.3 * p.x, 0.1, p.x.cos())),
            &MatrixField2::from_fn(g, |p| Matrix2::new(1.0 + p.x, p.y, 0.0, 0.5)),
        )
        .unwrap();
        let d = Displacement2D {
            w: VectorField2::from_fn(g, |p| Vector2::new(0.1 * p.y, p.x * p.x)),
            v: ScalarField2::from_fn(g, |p| (2.0 * p.x).sin() * p.y),
        };
        let m = Material::new(0.7, 1.9).unwrap();
        let st = StressState::compute(&d, &growth, &m).unwrap();
        let el = el_residuals(&d, &st.phi, &growth, &m).unwrap();
        let scale = el.r1_norm().max(el.r2_norm()).max(1.0);
        assert!(el.form_gap() < 1e-12 * scale, "{}", el.form_gap());
    }

    #[test]
    fn isotropic_strain_examples() {
        let g = Grid2::unit(33).unwrap();
        let lin = VectorField2::from_fn(g, |p| Vector2::new(1.0 + 2.0 * p.x - p.y, 0.5 * p.x + 3.0 * p.y));
        assert!(isotropic_strain_check(&lin, 1.3, -0.2).unwrap() < 1e-10);
        let w = VectorField2::from_fn(g, |p| Vector2::new(p.x * p.x * p.y, p.x * p.y * p.y));
        let h = g.hx();
        assert!(isotropic_strain_check(&w, 2.0, 0.5).unwrap() < 10.0 * h * h);
        let f = MatrixField2::from_fn(g, |p| Matrix2::new(p.y * p.y / 2.0, 0.0, 0.0, 0.0));
        assert!((isotropic_strain_residual(&f, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(isotropic_strain_residual(&f, 1.0, -0.5).is_err());
    }

    #[test]
    fn converged_state_has_small_divergence() {
        let g = Grid2::unit(17).unwrap();
        let growth = GrowthField::from_blocks(&MatrixField2::zeros(g), &MatrixField2::filled(g, Matrix2::identity())).unwrap();
        let mat = unit();
        let (d, rep) = minimize(&Displacement2D::zeros(g), &growth, &mat, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        let st = StressState::compute(&d, &growth, &mat).unwrap();
        let scale = st.m.values.iter().fold(0.0f64, |a, m| a.max(m.amax()));
        assert!(div_m_norm(&st.m) < 0.2 * scale, "{} vs {scale}", div_m_norm(&st.m));
        assert!(st.fit.is_consistent(), "{:?}", st.fit);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cofactor_is_an_involution_on_random_matrices(a in prop::array::uniform4(-1e3..1e3f64)) {
                let m = Matrix2::new(a[0], a[1], a[2], a[3]);
                prop_assert_eq!(cof2(&cof2(&m)), m);
            }
        }
    }
}
