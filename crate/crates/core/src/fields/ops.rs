//! Differential operators on grid fields.
//!
//! All operators share the stencils of [`Diff2`]: second order everywhere,
//! with one-sided stencils on boundary nodes.

use nalgebra::{Matrix2, Vector2};

use super::grid::{Field2, MatrixField2, ScalarField2, VectorField2};
use super::stencil::Diff2;

pub fn cof2(a: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(a[(1, 1)], -a[(1, 0)], -a[(0, 1)], a[(0, 0)])
}

pub fn sym2(a: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (a + a.transpose())
}

fn vec_field(grid: &super::Grid2, a: Vec<f64>, b: Vec<f64>) -> VectorField2 {
    Field2 { grid: *grid, values: a.into_iter().zip(b).map(|(a, b)| Vector2::new(a, b)).collect() }
}

fn mat_field(grid: &super::Grid2, m11: &[f64], m12: &[f64], m21: &[f64], m22: &[f64]) -> MatrixField2 {
    Field2 {
        grid: *grid,
        values: (0..grid.len()).map(|k| Matrix2::new(m11[k], m12[k], m21[k], m22[k])).collect(),
    }
}

pub fn grad(f: &ScalarField2) -> VectorField2 {
    grad_with(&Diff2::new(&f.grid), f)
}

pub fn grad_with(d: &Diff2, f: &ScalarField2) -> VectorField2 {
    vec_field(&f.grid, d.dx(&f.values), d.dy(&f.values))
}

/// Full gradient of a vector field, `(∇w)ᵢⱼ = ∂ⱼwᵢ`.
pub fn grad_vec(w: &VectorField2) -> MatrixField2 {
    grad_vec_with(&Diff2::new(&w.grid), w)
}

pub fn grad_vec_with(d: &Diff2, w: &VectorField2) -> MatrixField2 {
    let w1 = w.component(|v| v.x);
    let w2 = w.component(|v| v.y);
    mat_field(&w.grid, &d.dx(&w1), &d.dy(&w1), &d.dx(&w2), &d.dy(&w2))
}

pub fn sym_grad(w: &VectorField2) -> MatrixField2 {
    grad_vec(w).map(sym2)
}

pub fn hessian(f: &ScalarField2) -> MatrixField2 {
    hessian_with(&Diff2::new(&f.grid), f)
}

pub fn hessian_with(d: &Diff2, f: &ScalarField2) -> MatrixField2 {
    let fxy = d.dxy(&f.values);
    mat_field(&f.grid, &d.dxx(&f.values), &fxy, &fxy, &d.dyy(&f.values))
}

/// `∂₁₁F₂₂ − ∂₁₂(F₁₂+F₂₁) + ∂₂₂F₁₁`
pub fn curl_t_curl(f: &MatrixField2) -> ScalarField2 {
    let d = Diff2::new(&f.grid);
    let a = d.dxx(&f.component(|m| m[(1, 1)]));
    let b = d.dxy(&f.component(|m| m[(0, 1)] + m[(1, 0)]));
    let c = d.dyy(&f.component(|m| m[(0, 0)]));
    Field2 { grid: f.grid, values: (0..a.len()).map(|k| a[k] - b[k] + c[k]).collect() }
}

/// `∂₁₁F₁₁ + ∂₁₂(F₁₂+F₂₁) + ∂₂₂F₂₂`
pub fn div_t_div(f: &MatrixField2) -> ScalarField2 {
    let d = Diff2::new(&f.grid);
    let a = d.dxx(&f.component(|m| m[(0, 0)]));
    let b = d.dxy(&f.component(|m| m[(0, 1)] + m[(1, 0)]));
    let c = d.dyy(&f.component(|m| m[(1, 1)]));
    Field2 { grid: f.grid, values: (0..a.len()).map(|k| a[k] + b[k] + c[k]).collect() }
}

/// Curl of each row: `(∂₁F₁₂ − ∂₂F₁₁, ∂₁F₂₂ − ∂₂F₂₁)`.
pub fn row_curl(f: &MatrixField2) -> VectorField2 {
    let d = Diff2::new(&f.grid);
    let r1 = d.dx(&f.component(|m| m[(0, 1)]));
    let s1 = d.dy(&f.component(|m| m[(0, 0)]));
    let r2 = d.dx(&f.component(|m| m[(1, 1)]));
    let s2 = d.dy(&f.component(|m| m[(1, 0)]));
    Field2 {
        grid: f.grid,
        values: (0..r1.len()).map(|k| Vector2::new(r1[k] - s1[k], r2[k] - s2[k])).collect(),
    }
}

/// Row-wise divergence: `(div F)ᵢ = ∂ⱼFᵢⱼ`.
pub fn row_div(f: &MatrixField2) -> VectorField2 {
    let d = Diff2::new(&f.grid);
    let a = d.dx(&f.component(|m| m[(0, 0)]));
    let b = d.dy(&f.component(|m| m[(0, 1)]));
    let c = d.dx(&f.component(|m| m[(1, 0)]));
    let e = d.dy(&f.component(|m| m[(1, 1)]));
    Field2 {
        grid: f.grid,
        values: (0..a.len()).map(|k| Vector2::new(a[k] + b[k], c[k] + e[k])).collect(),
    }
}

pub fn laplacian(f: &ScalarField2) -> ScalarField2 {
    let d = Diff2::new(&f.grid);
    let a = d.dxx(&f.values);
    let b = d.dyy(&f.values);
    Field2 { grid: f.grid, values: a.iter().zip(&b).map(|(a, b)| a + b).collect() }
}

/// Discrete Δ² as the Laplacian applied twice. Only nodes two or more cells
/// from the boundary see central stencils throughout.
pub fn biharmonic(f: &ScalarField2) -> ScalarField2 {
    laplacian(&laplacian(f))
}

/// Airy bracket `[v,Φ] = ∇²v : cof ∇²Φ`, pointwise.
pub fn airy_bracket(v: &ScalarField2, phi: &ScalarField2) -> ScalarField2 {
    let hv = hessian(v);
    let hp = hessian(phi);
    hv.zip_map(&hp, |a, b| a.component_mul(&cof2(b)).sum())
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::fields::Grid2;
    use proptest::prelude::*;

    fn random_field(grid: Grid2, seed: &[f64]) -> ScalarField2 {
        Field2::from_fn(grid, |p| seed[0] * (seed[1] * p.x + seed[2] * p.y).sin() + seed[3] * p.x * p.y * p.y)
    }

    fn random_matrix_field(grid: Grid2, s: &[f64]) -> MatrixField2 {
        Field2::from_fn(grid, |p| {
            Matrix2::new(
                s[0] * (s[1] * p.x).cos() + s[2] * p.y,
                s[3] * p.x * p.y,
                s[4] * p.y * p.y + s[5] * p.x,
                s[6] * (s[7] * p.y).sin(),
            )
        })
    }

    fn close(a: &ScalarField2, b: &ScalarField2) -> bool {
        (a - b).max_abs() <= 1e-11 * (1.0 + a.max_abs() + b.max_abs())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cofactor_contracts_to_twice_the_determinant(a in prop::array::uniform4(-5.0..5.0f64)) {
            let m = Matrix2::new(a[0], a[1], a[2], a[3]);
            prop_assert!((m.component_mul(&cof2(&m)).sum() - 2.0 * m.determinant()).abs() <= 1e-12 * (1.0 + m.norm_squared()));
        }

        #[test]
        fn operators_are_linear(
            s in prop::collection::vec(-2.0..2.0f64, 16),
            a in -3.0..3.0f64,
            b in -3.0..3.0f64,
        ) {
            let grid = Grid2::new(13, 10, 1.2, 0.8).unwrap();
            let (f, g) = (random_field(grid, &s[..4]), random_field(grid, &s[4..8]));
            let comb = &(&f * a) + &(&g * b);
            let lin = |op: &dyn Fn(&ScalarField2) -> ScalarField2| close(&op(&comb), &(&(&op(&f) * a) + &(&op(&g) * b)));
            prop_assert!(lin(&|x| grad(x).map(|v| v.x + 2.0 * v.y)));
            prop_assert!(lin(&|x| hessian(x).map(|m| m[(0, 0)] - m[(0, 1)] + 3.0 * m[(1, 1)])));
            let (fm, gm) = (random_matrix_field(grid, &s[..8]), random_matrix_field(grid, &s[8..]));
            let cm = &(&fm * a) + &(&gm * b);
            for op in [curl_t_curl as fn(&MatrixField2) -> ScalarField2, div_t_div] {
                prop_assert!(close(&op(&cm), &(&(&op(&fm) * a) + &(&op(&gm) * b))));
            }
        }

        #[test]
        fn curl_t_curl_ignores_the_skew_part(s in prop::collection::vec(-2.0..2.0f64, 8)) {
            let f = random_matrix_field(Grid2::unit(11).unwrap(), &s);
            prop_assert!(close(&curl_t_curl(&f), &curl_t_curl(&f.map(sym2))));
        }
    }
}
