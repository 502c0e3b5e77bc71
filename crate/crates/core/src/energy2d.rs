//! The von Kármán growth energy
//!
//! ```text
//! I_g(w,v) = ½∫ q2(sym∇w + ½∇v⊗∇v − (sym ε_g)₂ₓ₂) + 1/24 ∫ q2(∇²v + (sym κ_g)₂ₓ₂)
//! ```
//!
//! discretised with the grid stencils and trapezoidal quadrature, together
//! with its exact discrete gradient.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::fields::{Diff2, Field2, Grid2, MatrixField2, ScalarField2, VectorField2};
use crate::growth::GrowthField;
use crate::material::Material;
use crate::sparse::Triplets;

/// In-plane displacement `w` and out-of-plane displacement `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement2D {
    pub w: VectorField2,
    pub v: ScalarField2,
}

impl Displacement2D {
    pub fn new(w: VectorField2, v: ScalarField2) -> Result<Self> {
        if w.grid != v.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self { w, v })
    }

    pub fn zeros(grid: Grid2) -> Self {
        Self { w: VectorField2::zeros(grid), v: ScalarField2::zeros(grid) }
    }

    pub fn grid(&self) -> Grid2 {
        self.v.grid
    }

    /// Packs as `[w₁ | w₂ | v]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(3 * self.grid().len());
        x.extend(self.w.values.iter().map(|w| w.x));
        x.extend(self.w.values.iter().map(|w| w.y));
        x.extend(&self.v.values);
        x
    }

    pub fn from_slice(grid: Grid2, x: &[f64]) -> Self {
        let n = grid.len();
        assert_eq!(x.len(), 3 * n);
        Self {
            w: Field2 { grid, values: (0..n).map(|k| Vector2::new(x[k], x[n + k])).collect() },
            v: Field2 { grid, values: x[2 * n..].to_vec() },
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.w.values.iter().all(|w| w.x.is_finite() && w.y.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub membrane: f64,
    pub bending: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.membrane + self.bending
    }
}

/// Membrane strain, bending strain and ∇v per node.
type NodalStrains = (Vec<Matrix2<f64>>, Vec<Matrix2<f64>>, Vec<Vector2<f64>>);

/// Precomputed discrete functional for one grid, growth and material.
#[derive(Debug, Clone)]
pub struct PlateEnergy {
    grid: Grid2,
    diff: Diff2,
    weights: Vec<f64>,
    eps: Vec<Matrix2<f64>>,
    kap: Vec<Matrix2<f64>>,
    material: Material,
}

impl PlateEnergy {
    pub fn new(growth: &GrowthField, material: &Material) -> Self {
        let grid = growth.grid();
        Self {
            grid,
            diff: Diff2::new(&grid),
            weights: grid.trapezoid_weights(),
            eps: growth.eps_sym2().values,
            kap: growth.kap_sym2().values,
            material: *material,
        }
    }

    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn dim(&self) -> usize {
        3 * self.grid.len()
    }

    fn strains(&self, x: &[f64]) -> NodalStrains {
        let n = self.grid.len();
        let (w1, w2, v) = (&x[..n], &x[n..2 * n], &x[2 * n..]);
        let d = &self.diff;
        let (w1x, w1y, w2x, w2y) = (d.dx(w1), d.dy(w1), d.dx(w2), d.dy(w2));
        let (vx, vy) = (d.dx(v), d.dy(v));
        let (vxx, vxy, vyy) = (d.dxx(v), d.dxy(v), d.dyy(v));
        let mut mem = Vec::with_capacity(n);
        let mut bend = Vec::with_capacity(n);
        let mut gv = Vec::with_capacity(n);
        for k in 0..n {
            let g = Vector2::new(vx[k], vy[k]);
            let shear = 0.5 * (w1y[k] + w2x[k]);
            let sg = Matrix2::new(w1x[k], shear, shear, w2y[k]);
            mem.push(sg + 0.5 * g * g.transpose() - self.eps[k]);
            bend.push(Matrix2::new(vxx[k], vxy[k], vxy[k], vyy[k]) + self.kap[k]);
            gv.push(g);
        }
        (mem, bend, gv)
    }

    pub fn energy(&self, x: &[f64]) -> EnergyBreakdown {
        let (mem, bend, _) = self.strains(x);
        let q = |s: &[Matrix2<f64>], c: f64| -> f64 {
            s.iter().zip(&self.weights).map(|(e, w)| w * self.material.q2(e)).sum::<f64>() * c
        };
        EnergyBreakdown { membrane: q(&mem, 0.5), bending: q(&bend, 1.0 / 24.0) }
    }

    /// Energy and its gradient with respect to every packed nodal value.
    pub fn energy_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> EnergyBreakdown {
        let n = self.grid.len();
        let (mem, bend, gv) = self.strains(x);
        let m = &self.material;
        let mut e = EnergyBreakdown::default();
        // weighted stresses: membrane σ = q2'(E)/2, bending term carries 1/12
        let mut s11 = vec![0.0; n];
        let mut s12 = vec![0.0; n];
        let mut s22 = vec![0.0; n];
        let mut sg1 = vec![0.0; n];
        let mut sg2 = vec![0.0; n];
        let mut b11 = vec![0.0; n];
        let mut b12 = vec![0.0; n];
        let mut b22 = vec![0.0; n];
        for k in 0..n {
            let wk = self.weights[k];
            e.membrane += 0.5 * wk * m.q2(&mem[k]);
            e.bending += wk * m.q2(&bend[k]) / 24.0;
            let s = m.plate_stress(&mem[k]) * wk;
            s11[k] = s[(0, 0)];
            s12[k] = s[(0, 1)];
            s22[k] = s[(1, 1)];
            let sg = s * gv[k];
            sg1[k] = sg.x;
            sg2[k] = sg.y;
            let b = m.plate_stress(&bend[k]) * (wk / 12.0);
            b11[k] = b[(0, 0)];
            b12[k] = 2.0 * b[(0, 1)];
            b22[k] = b[(1, 1)];
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let d = &self.diff;
        let (g1, rest) = grad.split_at_mut(n);
        let (g2, gvv) = rest.split_at_mut(n);
        d.dx_t_add(&s11, g1);
        d.dy_t_add(&s12, g1);
        d.dx_t_add(&s12, g2);
        d.dy_t_add(&s22, g2);
        d.dx_t_add(&sg1, gvv);
        d.dy_t_add(&sg2, gvv);
        d.dxx_t_add(&b11, gvv);
        d.dxy_t_add(&b12, gvv);
        d.dyy_t_add(&b22, gvv);
        e
    }
}

impl PlateEnergy {
    /// Lower triangle of the exact Hessian at `x`.
    pub(crate) fn hessian_lower(&self, x: &[f64]) -> Triplets {
        let grid = self.grid;
        let n = grid.len();
        let (mem, _, gv) = self.strains(x);
        let m = &self.material;
        let lb = m.plate_lambda();
        let two_mu = 2.0 * m.mu;
        // q2 = eᵀ C e with e = (E11, E22, E12)
        let c = [[two_mu + lb, lb, 0.0], [lb, two_mu + lb, 0.0], [0.0, 0.0, 4.0 * m.mu]];
        let d = &self.diff;
        let mut t = Triplets::new(3 * n, 3 * n);
        let mut r = [Vec::new(), Vec::new(), Vec::new()];
        for k in 0..n {
            let (i, j) = grid.ij(k);
            let wk = self.weights[k];
            let rx: Vec<(usize, f64)> = d.dx_stencil().row(i).iter().map(|&(ii, c)| (grid.idx(ii, j), c)).collect();
            let ry: Vec<(usize, f64)> = d.dy_stencil().row(j).iter().map(|&(jj, c)| (grid.idx(i, jj), c)).collect();
            let rxx: Vec<(usize, f64)> = d.dxx_stencil().row(i).iter().map(|&(ii, c)| (grid.idx(ii, j), c)).collect();
            let ryy: Vec<(usize, f64)> = d.dyy_stencil().row(j).iter().map(|&(jj, c)| (grid.idx(i, jj), c)).collect();
            let rxy: Vec<(usize, f64)> = d
                .dx_stencil()
                .row(i)
                .iter()
                .flat_map(|&(ii, cx)| d.dy_stencil().row(j).iter().map(move |&(jj, cy)| (grid.idx(ii, jj), cx * cy)))
                .collect();
            let g = gv[k];

            r.iter_mut().for_each(Vec::clear);
            r[0].extend(shift(&rx, 0, 1.0).chain(shift(&rx, 2 * n, g.x)));
            r[1].extend(shift(&ry, n, 1.0).chain(shift(&ry, 2 * n, g.y)));
            r[2].extend(
                shift(&ry, 0, 0.5)
                    .chain(shift(&rx, n, 0.5))
                    .chain(shift(&rx, 2 * n, 0.5 * g.y))
                    .chain(shift(&ry, 2 * n, 0.5 * g.x)),
            );
            for a in 0..3 {
                for b in 0..3 {
                    if c[a][b] != 0.0 {
                        emit(&r[a], &r[b], wk * c[a][b], &mut t);
                    }
                }
            }
            let sigma = m.plate_stress(&mem[k]);
            let vx: Vec<(usize, f64)> = shift(&rx, 2 * n, 1.0).collect();
            let vy: Vec<(usize, f64)> = shift(&ry, 2 * n, 1.0).collect();
            emit(&vx, &vx, wk * sigma[(0, 0)], &mut t);
            emit(&vy, &vy, wk * sigma[(1, 1)], &mut t);
            emit(&vx, &vy, wk * sigma[(0, 1)], &mut t);
            emit(&vy, &vx, wk * sigma[(0, 1)], &mut t);

            let b = [
                shift(&rxx, 2 * n, 1.0).collect::<Vec<_>>(),
                shift(&ryy, 2 * n, 1.0).collect(),
                shift(&rxy, 2 * n, 1.0).collect(),
            ];
            for a in 0..3 {
                for bb in 0..3 {
                    if c[a][bb] != 0.0 {
                        emit(&b[a], &b[bb], wk * c[a][bb] / 12.0, &mut t);
                    }
                }
            }
        }
        t
    }
}

fn shift(row: &[(usize, f64)], off: usize, s: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    row.iter().map(move |&(p, c)| (p + off, s * c))
}

/// Adds the lower triangle of `s·a bᵀ`.
fn emit(a: &[(usize, f64)], b: &[(usize, f64)], s: f64, t: &mut Triplets) {
    for &(i, ci) in a {
        for &(j, cj) in b {
            if i >= j {
                t.push(i, j, s * ci * cj);
            }
        }
    }
}

/// `sym∇w + ½∇v⊗∇v − (sym ε_g)₂ₓ₂`
pub fn membrane_strain(d: &Displacement2D, g: &GrowthField) -> MatrixField2 {
    let e = PlateEnergy::new(g, &Material { mu: 1.0, lambda: 0.0 });
    Field2 { grid: d.grid(), values: e.strains(&d.to_vec()).0 }
}

/// `∇²v + (sym κ_g)₂ₓ₂`
pub fn bending_strain(d: &Displacement2D, g: &GrowthField) -> MatrixField2 {
    let e = PlateEnergy::new(g, &Material { mu: 1.0, lambda: 0.0 });
    Field2 { grid: d.grid(), values: e.strains(&d.to_vec()).1 }
}

pub fn energy_ig(d: &Displacement2D, g: &GrowthField, m: &Material) -> Result<EnergyBreakdown> {
    if d.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(PlateEnergy::new(g, m).energy(&d.to_vec()))
}

/// Gradient of the discrete energy with respect to the nodal values of `w`
/// and `v`.
pub fn grad_energy_ig(d: &Displacement2D, g: &GrowthField, m: &Material) -> Result<(VectorField2, ScalarField2)> {
    if d.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let e = PlateEnergy::new(g, m);
    let mut grad = vec![0.0; e.dim()];
    e.energy_and_gradient(&d.to_vec(), &mut grad);
    let gd = Displacement2D::from_slice(d.grid(), &grad);
    Ok((gd.w, gd.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::make_compatible;

    fn unit() -> Material {
        Material::new(1.0, 1.0).unwrap()
    }

    fn smooth_state(grid: Grid2, a: f64) -> Displacement2D {
        Displacement2D {
            w: VectorField2::from_fn(grid, |p| Vector2::new(a * (p.x * 2.0).sin() * p.y, a * (p.y - p.x * p.x))),
            v: ScalarField2::from_fn(grid, |p| a * ((p.x + 0.3) * (p.y - 0.2) + (3.0 * p.y).cos())),
        }
    }

    #[test]
    fn strain_examples() {
        let g = Grid2::unit(9).unwrap();
        let zero = GrowthField::zero(g);
        let d = Displacement2D::zeros(g);
        assert!(membrane_strain(&d, &zero).values.iter().all(|m| m.norm() == 0.0));
        let tilt = Displacement2D { w: VectorField2::zeros(g), v: ScalarField2::from_fn(g, |p| p.x) };
        for m in membrane_strain(&tilt, &zero).values {
            assert!((m - Matrix2::new(0.5, 0.0, 0.0, 0.0)).norm() < 1e-12);
        }
        let bowl = Displacement2D { w: VectorField2::zeros(g), v: ScalarField2::from_fn(g, |p| 0.5 * p.norm_squared()) };
        for m in bending_strain(&bowl, &zero).values {
            assert!((m - Matrix2::identity()).norm() < 1e-10);
        }
    }

    #[test]
    fn energy_examples() {
        let g = Grid2::unit(9).unwrap();
        let m = unit();
        let zero = GrowthField::zero(g);
        assert_eq!(energy_ig(&Displacement2D::zeros(g), &zero, &m).unwrap().total(), 0.0);
        let stretch = GrowthField::from_blocks(&MatrixField2::filled(g, Matrix2::identity()), &MatrixField2::zeros(g)).unwrap();
        let e = energy_ig(&Displacement2D::zeros(g), &stretch, &m).unwrap();
        assert!((e.membrane - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(e.bending, 0.0);
    }

    #[test]
    fn compatible_pair_has_zero_energy() {
        let g = Grid2::unit(65).unwrap();
        let d = smooth_state(g, 0.5);
        let growth = make_compatible(&d.w, &d.v).unwrap();
        let e = energy_ig(&d, &growth, &unit()).unwrap();
        assert!(e.total() <= 1e-6 * growth.scale(), "{e:?}");
        assert!(membrane_strain(&d, &growth).values.iter().all(|m| m.norm() < 1e-12));
        assert!(bending_strain(&d, &growth).values.iter().all(|m| m.norm() < 1e-12));
        let (gw, gv) = grad_energy_ig(&d, &growth, &unit()).unwrap();
        assert!(gw.values.iter().all(|w| w.norm() < 1e-12));
        assert!(gv.max_abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = Grid2::new(9, 7, 1.0, 0.8).unwrap();
        let growth = GrowthField::from_blocks(
            &MatrixField2::from_fn(g, |p| Matrix2::new(p.y * p.y, 0.1, 0.3, p.x)),
            &MatrixField2::from_fn(g, |p| Matrix2::new(1.0, p.x, 0.0, -p.y)),
        )
        .unwrap();
        let e = PlateEnergy::new(&growth, &Material::new(0.8, 1.7).unwrap());
        let x = smooth_state(g, 0.7).to_vec();
        let mut grad = vec![0.0; x.len()];
        e.energy_and_gradient(&x, &mut grad);
        let dir: Vec<f64> = (0..x.len()).map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let t = 1e-5;
        let shift = |s: f64| x.iter().zip(&dir).map(|(a, b)| a + s * b).collect::<Vec<_>>();
        let fd = (e.energy(&shift(t)).total() - e.energy(&shift(-t)).total()) / (2.0 * t);
        let an: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - an).abs() < 1e-7 * an.abs().max(1e-3), "{fd} vs {an}");
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = Grid2::new(7, 8, 1.0, 1.2).unwrap();
        let growth = GrowthField::from_blocks(
            &MatrixField2::from_fn(g, |p| Matrix2::new(p.y, 0.2, 0.2, p.x * p.x)),
            &MatrixField2::from_fn(g, |p| Matrix2::new(0.5, p.y, p.y, -1.0)),
        )
        .unwrap();
        let e = PlateEnergy::new(&growth, &Material::new(1.3, 0.6).unwrap());
        let x = smooth_state(g, 0.6).to_vec();
        let n = x.len();
        let mut dense = vec![0.0; n * n];
        for t in &e.hessian_lower(&x).entries {
            dense[t.row * n + t.col] += t.val;
            if t.row != t.col {
                dense[t.col * n + t.row] += t.val;
            }
        }
        let dir: Vec<f64> = (0..n).map(|k| ((k * 31) % 17) as f64 / 17.0 - 0.5).collect();
        let hv: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i * n + j] * dir[j]).sum()).collect();
        let step = 1e-6;
        let grad_at = |s: f64| {
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            let mut gr = vec![0.0; n];
            e.energy_and_gradient(&y, &mut gr);
            gr
        };
        let (gp, gm) = (grad_at(step), grad_at(-step));
        let scale = hv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let fd = (gp[i] - gm[i]) / (2.0 * step);
            assert!((fd - hv[i]).abs() < 1e-6 * scale, "{i}: {fd} vs {}", hv[i]);
        }
    }

    #[test]
    fn gauge_transformations_leave_energy_unchanged() {
        let g = Grid2::unit(17).unwrap();
        let m = unit();
        let growth = GrowthField::from_blocks(
            &MatrixField2::from_fn(g, |p| Matrix2::new(p.y * p.y, 0.0, 0.0, 0.2)),
            &MatrixField2::from_fn(g, |p| Matrix2::new(1.0, 0.0, 0.0, p.x)),
        )
        .unwrap();
        let d = smooth_state(g, 0.4);
        let e0 = energy_ig(&d, &growth, &m).unwrap().total();
        let a = Vector2::new(0.3, -0.7);
        let (b, omega) = (Vector2::new(0.2, 1.1), 0.37);
        let moved = Displacement2D {
            w: Field2 {
                grid: g,
                values: (0..g.len())
                    .map(|k| {
                        let p = g.point(k);
                        let rot = Vector2::new(-omega * p.y, omega * p.x);
                        d.w.values[k] + b + rot - a * d.v.values[k] - 0.5 * a.dot(&p) * a
                    })
                    .collect(),
            },
            v: d.v.zip_map(&ScalarField2::from_fn(g, |p| a.dot(&p) + 0.9), |v, t| v + t),
        };
        let e1 = energy_ig(&moved, &growth, &m).unwrap().total();
        assert!((e1 - e0).abs() < 1e-10 * e0, "{e0} {e1}");
    }

    #[test]
    fn doubling_lame_constants_doubles_energy() {
        let g = Grid2::unit(9).unwrap();
        let growth = GrowthField::from_blocks(
            &MatrixField2::from_fn(g, |p| Matrix2::new(p.x, 0.0, 0.0, p.y)),
            &MatrixField2::filled(g, Matrix2::identity()),
        )
        .unwrap();
        let d = smooth_state(g, 0.3);
        let a = energy_ig(&d, &growth, &Material::new(0.9, 0.4).unwrap()).unwrap();
        let b = energy_ig(&d, &growth, &Material::new(1.8, 0.8).unwrap()).unwrap();
        assert!((b.membrane - 2.0 * a.membrane).abs() < 1e-13 * b.membrane);
        assert!((b.bending - 2.0 * a.bending).abs() < 1e-13 * b.bending);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state(grid: Grid2, c: &[f64]) -> Displacement2D {
            Displacement2D {
                w: VectorField2::from_fn(grid, |p| Vector2::new(c[0] * (c[1] * p.y).sin() + c[2] * p.x * p.y, c[3] * p.x * p.x)),
                v: ScalarField2::from_fn(grid, |p| c[4] * (c[5] * p.x + p.y).cos() + c[6] * p.y * p.y * p.x),
            }
        }

        fn growth(grid: Grid2, c: &[f64]) -> GrowthField {
            GrowthField::from_blocks(
                &MatrixField2::from_fn(grid, |p| Matrix2::new(c[0] * p.x, c[1], c[2], c[3] * p.y * p.y)),
                &MatrixField2::from_fn(grid, |p| Matrix2::new(c[4] + p.x, c[5], c[5], c[6] * p.y)),
            )
            .unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn energy_is_nonnegative(c in prop::collection::vec(-1.0..1.0f64, 14), mu in 0.1..5.0f64, lam in -0.05..5.0f64) {
                let grid = Grid2::unit(9).unwrap();
                let e = energy_ig(&state(grid, &c[..7]), &growth(grid, &c[7..]), &Material::new(mu, lam).unwrap()).unwrap();
                prop_assert!(e.membrane >= 0.0 && e.bending >= 0.0);
            }

            #[test]
            fn gauge_orbits_have_constant_energy(
                c in prop::collection::vec(-1.0..1.0f64, 14),
                a in prop::array::uniform2(-1.0..1.0f64),
                b in prop::array::uniform2(-2.0..2.0f64),
                omega in -1.0..1.0f64,
                shift in -2.0..2.0f64,
            ) {
                let grid = Grid2::unit(11).unwrap();
                let (d, g) = (state(grid, &c[..7]), growth(grid, &c[7..]));
                let m = unit();
                let (a, b) = (Vector2::from(a), Vector2::from(b));
                let moved = Displacement2D {
                    w: Field2 {
                        grid,
                        values: (0..grid.len())
                            .map(|k| {
                                let p = grid.point(k);
                                d.w.values[k] + b + Vector2::new(-omega * p.y, omega * p.x) - a * d.v.values[k] - 0.5 * a.dot(&p) * a
                            })
                            .collect(),
                    },
                    v: d.v.zip_map(&ScalarField2::from_fn(grid, |p| a.dot(&p) + shift), |v, t| v + t),
                };
                let (e0, e1) = (energy_ig(&d, &g, &m).unwrap().total(), energy_ig(&moved, &g, &m).unwrap().total());
                prop_assert!((e0 - e1).abs() <= 1e-9 * e0.max(1e-12), "{} {}", e0, e1);
            }
        }
    }
}
