//! Three-dimensional thin-plate energies on the rescaled slab `Ω × (−½, ½)`.
//!
//! A deformation `u` of the physical plate `Ω × (−h/2, h/2)` is stored as
//! `y(x′, t) = u(x′, h t)`, so one grid serves every thickness. Physical
//! gradients are `∇u = [∂₁y, ∂₂y, ∂ₜy / h]`, and `(1/h)∫ over the plate`
//! becomes a plain integral over the rescaled slab.

use std::fmt;
use std::io::Write;

use nalgebra::{Matrix2, Matrix3, Vector3};
use rayon::prelude::*;

use crate::energy2d::{energy_ig, membrane_strain, Displacement2D};
use crate::error::{Error, Result};
use crate::fields::{dist2_so3, grad, hessian, nearest_rotation, Field2, Grid2, Stencil1D, Vector3Field2};
use crate::growth::{log_slope, GrowthField};
use crate::material::{l_vec, Material};
use crate::optim::{lbfgs, LbfgsParams};

/// Structured grid on the rescaled slab: `base × nz` layers at
/// `t = −½ + l/(nz − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    pub base: Grid2,
    pub nz: usize,
}

impl Grid3 {
    /// `nz` must be odd and at least 3 so the mid-plane is a layer.
    pub fn new(base: Grid2, nz: usize) -> Result<Self> {
        if nz < 3 || nz.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("need an odd layer count of at least 3, got {nz}")));
        }
        Ok(Self { base, nz })
    }

    pub fn len(&self) -> usize {
        self.base.len() * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of base node `k` in layer `l`.
    #[inline]
    pub fn idx(&self, k: usize, l: usize) -> usize {
        k + self.base.len() * l
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.nz - 1) as f64
    }

    pub fn t(&self, l: usize) -> f64 {
        -0.5 + l as f64 * self.dt()
    }

    fn dims(&self) -> [usize; 3] {
        [self.base.nx, self.base.ny, self.nz]
    }

    /// Quadrature weights over the rescaled slab; they sum to the area.
    pub fn weights(&self, rule: ThicknessRule) -> Vec<f64> {
        let wz = rule.weights(self.nz);
        let wt = self.base.trapezoid_weights();
        (0..self.nz).flat_map(|l| { let z = wz[l]; wt.iter().map(move |w| w * z) }).collect()
    }
}

/// Quadrature rule across the thickness. In-plane quadrature is always
/// trapezoidal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThicknessRule {
    Trapezoid,
    /// Composite Simpson; exact for cubics in `t`.
    #[default]
    Simpson,
}

impl ThicknessRule {
    /// Weights on `[−½, ½]` for `nz` (odd) equispaced points.
    pub fn weights(self, nz: usize) -> Vec<f64> {
        let dt = 1.0 / (nz - 1) as f64;
        match self {
            ThicknessRule::Trapezoid => crate::fields::trapezoid_1d(nz, dt),
            ThicknessRule::Simpson => (0..nz)
                .map(|l| {
                    let c = if l == 0 || l == nz - 1 { 1.0 } else if l % 2 == 1 { 4.0 } else { 2.0 };
                    c * dt / 3.0
                })
                .collect(),
        }
    }
}

/// A deformation of the physical plate in rescaled storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation3D {
    pub grid: Grid3,
    /// `y(x′, t) = u(x′, h t)` at every node.
    pub y: Vec<Vector3<f64>>,
    /// Physical thickness.
    pub h: f64,
}

impl Deformation3D {
    pub fn new(grid: Grid3, y: Vec<Vector3<f64>>, h: f64) -> Result<Self> {
        if y.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), found: y.len() });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("thickness must be positive, got {h}")));
        }
        if !y.iter().all(|p| p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("deformation must be finite".into()));
        }
        Ok(Self { grid, y, h })
    }

    /// The unstressed embedding `u(x) = x`.
    pub fn identity(grid: Grid3, h: f64) -> Result<Self> {
        let y = reference_points(&grid, h);
        Self::new(grid, y, h)
    }

    /// Components stacked as `[y₁ | y₂ | y₃]`.
    pub fn to_vec(&self) -> Vec<f64> {
        (0..3).flat_map(|c| self.y.iter().map(move |p| p[c])).collect()
    }

    fn from_slice(grid: Grid3, h: f64, x: &[f64]) -> Self {
        let n = grid.len();
        let y = (0..n).map(|i| Vector3::new(x[i], x[n + i], x[2 * n + i])).collect();
        Self { grid, y, h }
    }

    /// Applies `y ↦ R y + c`.
    pub fn rigid_motion(&self, r: &Matrix3<f64>, c: &Vector3<f64>) -> Self {
        Self { grid: self.grid, y: self.y.iter().map(|p| r * p + c).collect(), h: self.h }
    }

    /// The scaled mid-plane displacement `V(x′) = (1/h) ∫ (y(x′, t) − x′) dt`.
    pub fn midplane_average(&self, rule: ThicknessRule) -> Vector3Field2 {
        let base = self.grid.base;
        let wz = rule.weights(self.grid.nz);
        Field2::from_values(
            base,
            (0..base.len())
                .map(|k| {
                    let p = base.point(k);
                    let x = Vector3::new(p.x, p.y, 0.0);
                    (0..self.grid.nz).map(|l| (self.y[self.grid.idx(k, l)] - x) * wz[l]).sum::<Vector3<f64>>()
                        / self.h
                })
                .collect(),
        )
        .expect("one value per base node")
    }

    /// Discrete `W¹²` distance on the rescaled slab between `y` and the
    /// flat map `(x′, t) ↦ (x′, 0)`.
    pub fn flat_distance(&self, rule: ThicknessRule) -> f64 {
        let grid = self.grid;
        let wts = grid.weights(rule);
        let mut acc = 0.0;
        let flat: Vec<f64> = (0..3)
            .flat_map(|c| {
                (0..grid.len()).map(move |i| {
                    let p = grid.base.point(i % grid.base.len());
                    [p.x, p.y, 0.0][c]
                })
            })
            .collect();
        let diff: Vec<f64> = self.to_vec().iter().zip(&flat).map(|(a, b)| a - b).collect();
        let st = Stencils::new(&grid);
        let n = grid.len();
        for c in 0..3 {
            let comp = &diff[c * n..(c + 1) * n];
            let d: Vec<Vec<f64>> = (0..3).map(|axis| st.apply(axis, comp)).collect();
            for i in 0..n {
                acc += wts[i] * (comp[i] * comp[i] + d[0][i].powi(2) + d[1][i].powi(2) + d[2][i].powi(2));
            }
        }
        acc.sqrt()
    }
}

fn reference_points(grid: &Grid3, h: f64) -> Vec<Vector3<f64>> {
    let base = grid.base;
    (0..grid.nz)
        .flat_map(|l| {
            (0..base.len()).map(move |k| {
                let p = base.point(k);
                Vector3::new(p.x, p.y, h * grid.t(l))
            })
        })
        .collect()
}

/// Difference stencils along the three slab axes.
struct Stencils {
    dims: [usize; 3],
    axes: [Stencil1D; 3],
}

impl Stencils {
    fn new(grid: &Grid3) -> Self {
        let b = grid.base;
        Self {
            dims: grid.dims(),
            axes: [
                Stencil1D::first_derivative(b.nx, b.hx()),
                Stencil1D::first_derivative(b.ny, b.hy()),
                Stencil1D::first_derivative(grid.nz, grid.dt()),
            ],
        }
    }

    fn apply(&self, axis: usize, f: &[f64]) -> Vec<f64> {
        self.axes[axis].apply(&self.dims, axis, f)
    }

    fn apply_t_add(&self, axis: usize, g: &[f64], out: &mut [f64]) {
        self.axes[axis].apply_transpose_add(&self.dims, axis, g, out)
    }
}

/// The discrete energies `I^h_W` and `I^h_0` for one growth field, material
/// and thickness.
pub struct SlabEnergy {
    grid: Grid3,
    h: f64,
    material: Material,
    /// `(a^h)⁻¹` at every node.
    a_inv: Vec<Matrix3<f64>>,
    weights: Vec<f64>,
    stencils: Stencils,
}

impl SlabEnergy {
    /// Fails if `det a^h ≤ 0` at some node.
    pub fn new(grid: Grid3, g: &GrowthField, m: &Material, h: f64, rule: ThicknessRule) -> Result<Self> {
        if g.grid() != grid.base {
            return Err(Error::GridMismatch);
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("thickness must be positive, got {h}")));
        }
        let nb = grid.base.len();
        let mut a_inv = Vec::with_capacity(grid.len());
        for l in 0..grid.nz {
            for k in 0..nb {
                let a = g.assemble_ah(k, h * grid.t(l), h)?;
                let det = a.determinant();
                if !(det > 0.0) {
                    return Err(Error::SingularGrowth { node: grid.idx(k, l), det });
                }
                a_inv.push(a.try_inverse().ok_or(Error::SingularGrowth { node: grid.idx(k, l), det })?);
            }
        }
        Ok(Self { grid, h, material: *m, a_inv, weights: grid.weights(rule), stencils: Stencils::new(&grid) })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        3 * self.grid.len()
    }

    /// Elastic parts `∇u (a^h)⁻¹` at every node.
    fn elastic_parts(&self, x: &[f64]) -> Vec<Matrix3<f64>> {
        let n = self.grid.len();
        let d: Vec<[Vec<f64>; 3]> = (0..3)
            .into_par_iter()
            .map(|c| {
                let comp = &x[c * n..(c + 1) * n];
                let mut dt = self.stencils.apply(2, comp);
                dt.iter_mut().for_each(|v| *v /= self.h);
                [self.stencils.apply(0, comp), self.stencils.apply(1, comp), dt]
            })
            .collect();
        (0..n)
            .into_par_iter()
            .map(|i| Matrix3::from_fn(|r, c| d[r][c][i]) * self.a_inv[i])
            .collect()
    }

    /// Ordered sum so the result is independent of the thread count.
    fn integrate(&self, density: Vec<f64>) -> f64 {
        density.iter().zip(&self.weights).map(|(d, w)| d * w).sum()
    }

    pub fn energy_w(&self, x: &[f64]) -> f64 {
        let f = self.elastic_parts(x);
        self.integrate(f.par_iter().map(|f| self.material.w_density(f)).collect())
    }

    pub fn energy_dist(&self, x: &[f64]) -> f64 {
        let f = self.elastic_parts(x);
        self.integrate(f.par_iter().map(dist2_so3).collect())
    }

    /// `I^h_W` and its gradient with respect to the stored nodal values.
    pub fn energy_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.grid.len();
        let f = self.elastic_parts(x);
        let (dens, stress): (Vec<f64>, Vec<Matrix3<f64>>) = f
            .par_iter()
            .enumerate()
            .map(|(i, f)| (self.material.w_density(f), self.material.piola(f) * self.a_inv[i].transpose() * self.weights[i]))
            .unzip();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for c in 0..3 {
            let out = &mut grad[c * n..(c + 1) * n];
            for axis in 0..3 {
                let scale = if axis == 2 { 1.0 / self.h } else { 1.0 };
                let col: Vec<f64> = stress.iter().map(|s| s[(c, axis)] * scale).collect();
                self.stencils.apply_t_add(axis, &col, out);
            }
        }
        self.integrate(dens)
    }

    fn check(&self, u: &Deformation3D) -> Result<()> {
        if u.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        if u.h != self.h {
            return Err(Error::InvalidArgument(format!("deformation targets h = {}, energy built for h = {}", u.h, self.h)));
        }
        Ok(())
    }
}

/// `I^h_W(u) = (1/h) ∫ W(∇u (a^h)⁻¹)` over the physical plate.
pub fn energy_ihw(u: &Deformation3D, g: &GrowthField, m: &Material, rule: ThicknessRule) -> Result<f64> {
    let e = SlabEnergy::new(u.grid, g, m, u.h, rule)?;
    e.check(u)?;
    Ok(e.energy_w(&u.to_vec()))
}

/// `I^h_0(u) = (1/h) ∫ dist²(∇u (a^h)⁻¹, SO(3))` over the physical plate.
pub fn energy_ih0(u: &Deformation3D, g: &GrowthField, rule: ThicknessRule) -> Result<f64> {
    // the material does not enter the distance integrand
    let e = SlabEnergy::new(u.grid, g, &Material { mu: 1.0, lambda: 0.0 }, u.h, rule)?;
    e.check(u)?;
    Ok(e.energy_dist(&u.to_vec()))
}

/// Sign of the `½∇v⊗∇v` term inside the `c(·)` argument of the first
/// warping field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarpingSign {
    /// `c(sym∇w − ½∇v⊗∇v − sym ε_g)`
    Minus,
    /// `c(sym∇w + ½∇v⊗∇v − sym ε_g)`, the membrane strain of the limit energy.
    #[default]
    Plus,
}

/// Warping fields `d⁰`, `d¹` of the recovery ansatz at every base node.
pub fn warping_fields(d: &Displacement2D, g: &GrowthField, m: &Material, sign: WarpingSign) -> (Vector3Field2, Vector3Field2) {
    let grid = d.grid();
    let gv = grad(&d.v);
    let hv = hessian(&d.v);
    let strain = membrane_strain(d, g);
    let d0 = (0..grid.len())
        .map(|k| {
            let a = gv.values[k];
            let mut arg = strain.values[k];
            if sign == WarpingSign::Minus {
                arg -= a * a.transpose();
            }
            l_vec(&g.eps_g.values[k]) - Vector3::new(0.0, 0.0, 0.5 * a.norm_squared()) + m.c_vec(&arg)
        })
        .collect();
    let d1 = (0..grid.len())
        .map(|k| {
            let kap = g.kap_g.values[k];
            let ks: Matrix2<f64> = kap.fixed_view::<2, 2>(0, 0).into_owned();
            let arg = -hv.values[k] - 0.5 * (ks + ks.transpose());
            l_vec(&kap) + m.c_vec(&arg)
        })
        .collect();
    (Field2 { grid, values: d0 }, Field2 { grid, values: d1 })
}

/// The recovery ansatz
/// `u = (x′, 0) + (h²w, hv) + x₃(−h∇v, 1) + h²x₃d⁰ + ½hx₃²d¹`
/// sampled at every slab node, with `x₃ = h t`.
pub fn recovery_sequence(
    d: &Displacement2D,
    g: &GrowthField,
    m: &Material,
    h: f64,
    nz: usize,
    sign: WarpingSign,
) -> Result<Deformation3D> {
    if d.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = Grid3::new(d.grid(), nz)?;
    let (d0, d1) = warping_fields(d, g, m, sign);
    let gv = grad(&d.v);
    let nb = grid.base.len();
    let mut y = Vec::with_capacity(grid.len());
    for l in 0..nz {
        let x3 = h * grid.t(l);
        for k in 0..nb {
            let p = grid.base.point(k);
            let w = d.w.values[k];
            let a = gv.values[k];
            let base = Vector3::new(p.x + h * h * w.x, p.y + h * h * w.y, h * d.v.values[k]);
            let normal = Vector3::new(-h * a.x, -h * a.y, 1.0);
            y.push(base + normal * x3 + d0.values[k] * (h * h * x3) + d1.values[k] * (0.5 * h * x3 * x3));
        }
    }
    Deformation3D::new(grid, y, h)
}

/// One thickness of a limit probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSample {
    pub h: f64,
    pub ihw: f64,
    /// `I^h_W / h⁴`
    pub scaled: f64,
    /// `|I^h_W / h⁴ − I_g|`
    pub error: f64,
}

/// Convergence of the rescaled recovery-sequence energy to the limit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaProbe {
    pub ig: f64,
    /// Sorted by decreasing `h`.
    pub samples: Vec<GammaSample>,
    /// Magnitude of the `h → 0` limit of the signed error, extrapolated from
    /// the thinnest samples; the part of the error that thinning cannot
    /// remove.
    pub floor: f64,
    /// Least-squares slope of `log e` against `log h` over the samples above
    /// the floor band, `None` with fewer than two such samples.
    pub slope: Option<f64>,
    /// Same fit for `|signed error − floor|` over every sample.
    pub corrected_slope: Option<f64>,
    /// Whether `e(h)` decreases with `h` until it enters the floor band.
    pub monotone: bool,
}

impl GammaProbe {
    /// Errors within this many floors count as converged to the floor.
    pub const FLOOR_BAND: f64 = 2.0;

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "IhW", "IhW/h^4", "Ig", "e(h)"])?;
        for s in &self.samples {
            w.write_record([s.h, s.ihw, s.scaled, self.ig, s.error].map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for GammaProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ig: {:e}", self.ig)?;
        for s in &self.samples {
            writeln!(f, "h: {:e} scaled: {:e} error: {:e}", s.h, s.scaled, s.error)?;
        }
        writeln!(f, "floor: {:e}", self.floor)?;
        let opt = |s: Option<f64>| s.map_or("none".to_string(), |v| format!("{v:.4}"));
        writeln!(f, "slope: {}", opt(self.slope))?;
        writeln!(f, "corrected_slope: {}", opt(self.corrected_slope))?;
        writeln!(f, "monotone: {}", self.monotone)
    }
}

/// Builds the recovery sequence for every thickness and compares
/// `I^h_W / h⁴` with the discrete limit energy on the same base grid.
pub fn gamma_limit_probe(
    d: &Displacement2D,
    g: &GrowthField,
    m: &Material,
    h_list: &[f64],
    nz: usize,
    sign: WarpingSign,
    rule: ThicknessRule,
) -> Result<GammaProbe> {
    if h_list.is_empty() || h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidArgument("thicknesses must be positive and non-empty".into()));
    }
    let ig = energy_ig(d, g, m)?.total();
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup();
    let signed: Vec<(f64, f64)> = hs
        .par_iter()
        .map(|&h| {
            let u = recovery_sequence(d, g, m, h, nz, sign)?;
            Ok((h, energy_ihw(&u, g, m, rule)?))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<GammaSample> = signed
        .iter()
        .map(|&(h, ihw)| {
            let scaled = ihw / h.powi(4);
            GammaSample { h, ihw, scaled, error: (scaled - ig).abs() }
        })
        .collect();
    let delta: Vec<f64> = samples.iter().map(|s| s.scaled - ig).collect();
    let hs: Vec<f64> = samples.iter().map(|s| s.h).collect();
    let floor_signed = extrapolate_to_zero(&hs, &delta);
    // rounding in the energy sum sets a floor of its own
    let floor = floor_signed.abs().max(1e-11 * ig.abs());
    let band = GammaProbe::FLOOR_BAND * floor;
    let fit = |pts: Vec<(f64, f64)>| if pts.len() >= 2 { Some(log_slope(&pts)) } else { None };
    let pre: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.error > band).map(|s| (s.h.ln(), s.error.ln())).collect();
    let corrected: Vec<(f64, f64)> = samples
        .iter()
        .zip(&delta)
        .filter(|(_, d)| (*d - floor_signed).abs() > 0.0)
        .map(|(s, d)| (s.h.ln(), (d - floor_signed).abs().ln()))
        .collect();
    let mut monotone = true;
    for w in samples.windows(2) {
        if w[0].error <= band {
            break;
        }
        if w[1].error > w[0].error {
            monotone = false;
        }
    }
    Ok(GammaProbe { ig, samples, floor, slope: fit(pre), corrected_slope: fit(corrected), monotone })
}

/// Limit of `δ(h) ≈ F + a hᵖ` as `h → 0`. Three thinnest samples in a
/// geometric sequence fix `p`; otherwise `p = 1` from the two thinnest.
fn extrapolate_to_zero(h: &[f64], delta: &[f64]) -> f64 {
    let n = h.len();
    if n < 2 {
        return 0.0;
    }
    let linear = (h[n - 2] * delta[n - 1] - h[n - 1] * delta[n - 2]) / (h[n - 2] - h[n - 1]);
    if n < 3 {
        return linear;
    }
    let (r1, r2) = (h[n - 3] / h[n - 2], h[n - 2] / h[n - 1]);
    let (d1, d2) = (delta[n - 3] - delta[n - 2], delta[n - 2] - delta[n - 1]);
    if (r1 - r2).abs() > 1e-9 * r2 || d2 == 0.0 {
        return linear;
    }
    let q = d1 / d2;
    if !(q > 1.0) {
        // no contraction visible: the thinnest value is the best estimate
        return delta[n - 1];
    }
    delta[n - 1] - d2 / (q - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimize3Config {
    pub max_iters: usize,
    /// Bound on the max-norm of the gradient of `I^h_W / h⁴` per unit
    /// cell volume.
    pub grad_tol: f64,
    pub history: usize,
    pub rule: ThicknessRule,
}

impl Default for Minimize3Config {
    fn default() -> Self {
        Self { max_iters: 2000, grad_tol: 1e-6, history: 20, rule: ThicknessRule::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimize3Report {
    pub h: f64,
    pub energy: f64,
    pub initial_energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub line_search_failed: bool,
}

impl Minimize3Report {
    /// `I^h_W / h⁴` at the final state.
    pub fn scaled_energy(&self) -> f64 {
        self.energy / self.h.powi(4)
    }
}

impl fmt::Display for Minimize3Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "h: {:e}", self.h)?;
        writeln!(f, "energy: {:e}", self.energy)?;
        writeln!(f, "scaled_energy: {:e}", self.scaled_energy())?;
        writeln!(f, "initial_energy: {:e}", self.initial_energy)?;
        writeln!(f, "iterations: {}", self.iterations)?;
        writeln!(f, "grad_norm: {:e}", self.grad_norm)?;
        writeln!(f, "converged: {}", self.converged)?;
        writeln!(f, "line_search_failed: {}", self.line_search_failed)
    }
}

/// Removes the rigid motion fixed by the weighted mean position and the
/// nearest rotation to the weighted mean gradient; `I^h_W` is unchanged.
fn rigid_gauge(e: &SlabEnergy, reference_mean: &Vector3<f64>, x: &mut [f64]) {
    let n = e.grid.len();
    let total: f64 = e.weights.iter().sum();
    let f = e.elastic_parts(x);
    let mut mean_grad = Matrix3::zeros();
    for ((fi, a_inv), w) in f.iter().zip(&e.a_inv).zip(&e.weights) {
        // undo the growth factor to average ∇u itself
        mean_grad += fi * a_inv.try_inverse().unwrap_or_else(Matrix3::identity) * *w;
    }
    let r = nearest_rotation(&(mean_grad / total));
    let mut mean = Vector3::zeros();
    for i in 0..n {
        mean += Vector3::new(x[i], x[n + i], x[2 * n + i]) * e.weights[i];
    }
    mean /= total;
    for i in 0..n {
        let p = r.transpose() * (Vector3::new(x[i], x[n + i], x[2 * n + i]) - mean) + reference_mean;
        x[i] = p.x;
        x[n + i] = p.y;
        x[2 * n + i] = p.z;
    }
}

/// Quasi-Newton minimization of `I^h_W` over all nodal positions, modulo
/// rigid motions.
pub fn minimize3d(
    init: &Deformation3D,
    g: &GrowthField,
    m: &Material,
    cfg: &Minimize3Config,
) -> Result<(Deformation3D, Minimize3Report)> {
    let e = SlabEnergy::new(init.grid, g, m, init.h, cfg.rule)?;
    let x0 = init.to_vec();
    let initial_energy = e.energy_w(&x0);
    let total: f64 = e.weights.iter().sum();
    let reference: Vector3<f64> = {
        let r = reference_points(&init.grid, init.h);
        r.iter().zip(&e.weights).map(|(p, w)| p * *w).sum::<Vector3<f64>>() / total
    };
    let b = init.grid.base;
    let cell = b.hx() * b.hy() * init.grid.dt();
    let params = LbfgsParams { max_iters: cfg.max_iters, grad_tol: cfg.grad_tol, history: cfg.history, ..Default::default() };
    let out = lbfgs(
        |x, gr| e.energy_and_gradient(x, gr),
        x0,
        &params,
        1.0 / (cell * init.h.powi(4)),
        |x| rigid_gauge(&e, &reference, x),
    );
    let u = Deformation3D::from_slice(init.grid, init.h, &out.x);
    let report = Minimize3Report {
        h: init.h,
        energy: out.value,
        initial_energy,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        converged: out.converged,
        line_search_failed: out.line_search_failed,
    };
    Ok((u, report))
}
