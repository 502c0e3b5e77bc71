//! Behaviour of the discrete energy and its minimizers under grid refinement.

use grownplate::energy2d::{energy_ig, Displacement2D};
use grownplate::fields::{Grid2, MatrixField2, ScalarField2, VectorField2};
use grownplate::growth::GrowthField;
use grownplate::material::Material;
use grownplate::solver2d::{minimize, SolverConfig};
use nalgebra::{Matrix2, Vector2};

/// Growth sampled from the closed-form strains of
/// `w0 = (0.1xy, 0.05y²)`, `v0 = 0.3x² − 0.2xy + 0.1y³`. It is compatible
/// in the continuum but not exactly for the difference operators.
fn analytic_compatible(grid: Grid2) -> GrowthField {
    let eps = MatrixField2::from_fn(grid, |p| {
        let gv = Vector2::new(0.6 * p.x - 0.2 * p.y, -0.2 * p.x + 0.3 * p.y * p.y);
        let sw = Matrix2::new(0.1 * p.y, 0.05 * p.x, 0.05 * p.x, 0.1 * p.y);
        sw + 0.5 * gv * gv.transpose()
    });
    let kap = MatrixField2::from_fn(grid, |p| -Matrix2::new(0.6, -0.2, -0.2, 0.6 * p.y));
    GrowthField::from_blocks(&eps, &kap).unwrap()
}

#[test]
fn energy_quadrature_is_second_order() {
    let m = Material::new(1.0, 0.8).unwrap();
    let energies: Vec<(f64, f64)> = [17, 33, 65, 129, 257]
        .into_iter()
        .map(|n| {
            let grid = Grid2::unit(n).unwrap();
            let d = Displacement2D {
                w: VectorField2::from_fn(grid, |p| Vector2::new((2.0 * p.y).sin() * p.x, 0.3 * p.x * p.x * p.y)),
                v: ScalarField2::from_fn(grid, |p| (p.x + 2.0 * p.y).cos() + 0.2 * p.x.powi(3)),
            };
            let g = GrowthField::from_blocks(
                &MatrixField2::from_fn(grid, |p| Matrix2::new(0.2 * p.x, 0.1, 0.1, -0.3 * p.y)),
                &MatrixField2::from_fn(grid, |p| Matrix2::new(1.0 + p.y, 0.0, 0.0, (3.0 * p.x).sin())),
            )
            .unwrap();
            (grid.spacing(), energy_ig(&d, &g, &m).unwrap().total())
        })
        .collect();
    // E(h) = E* + C h^p, so successive differences shrink by 2^p
    let diff: Vec<f64> = energies.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let orders: Vec<f64> = diff.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    assert!(orders.windows(2).all(|o| o[1] >= o[0]), "orders {orders:?}");
    assert!(*orders.last().unwrap() >= 1.9, "orders {orders:?}, energies {energies:?}");
}

#[test]
fn converged_energies_form_a_cauchy_sequence() {
    let m = Material::new(1.0, 1.0).unwrap();
    let energies: Vec<f64> = [33, 65, 129]
        .into_iter()
        .map(|n| {
            let grid = Grid2::unit(n).unwrap();
            let (_, r) = minimize(&Displacement2D::zeros(grid), &analytic_compatible(grid), &m, &SolverConfig::default()).unwrap();
            assert!(r.ok(), "{r}");
            r.energy.total()
        })
        .collect();
    let (d1, d2) = ((energies[1] - energies[0]).abs(), (energies[2] - energies[1]).abs());
    assert!(d1 >= 3.0 * d2, "{energies:?}");
}
