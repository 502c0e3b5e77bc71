//! Compatibility of a growth tensor: curvature conditions and flatness.

use grownplate::fields::{Grid2, MatrixField2, ScalarField2, VectorField2};
use grownplate::growth::{make_compatible, GrowthField};
use nalgebra::{Matrix2, Vector2};

fn main() -> grownplate::Result<()> {
    let grid = Grid2::unit(33)?;
    let tol = 10.0 * grid.spacing().powi(2);

    let flat = make_compatible(
        &VectorField2::from_fn(grid, |p| Vector2::new(0.1 * p.x * p.y, -0.05 * p.x * p.x)),
        &ScalarField2::from_fn(grid, |p| 0.3 * p.x * p.x - 0.2 * p.y.powi(3)),
    )?;
    println!("growth induced by a displacement:\n{}", flat.flatness_test(tol));

    let sphere = GrowthField::from_blocks(&MatrixField2::zeros(grid), &MatrixField2::filled(grid, Matrix2::identity()))?;
    println!("uniform isotropic bending:\n{}{}", sphere.curvature_conditions(tol), sphere.flatness_test(tol));
    Ok(())
}
