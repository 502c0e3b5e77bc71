//! Relaxing the full three-dimensional energy from the recovery sequence
//! and comparing the scaled minimum with the 2D energy.

use grownplate::energy2d::Displacement2D;
use grownplate::fields::{Grid2, MatrixField2};
use grownplate::growth::GrowthField;
use grownplate::material::Material;
use grownplate::plate3d::{minimize3d, recovery_sequence, Minimize3Config, WarpingSign};
use grownplate::solver2d::{minimize, SolverConfig};
use nalgebra::Matrix2;

fn main() -> grownplate::Result<()> {
    let grid = Grid2::unit(17)?;
    let g = GrowthField::from_blocks(&MatrixField2::zeros(grid), &MatrixField2::filled(grid, Matrix2::identity()))?;
    let m = Material::new(1.0, 1.0)?;
    let (d, r2) = minimize(&Displacement2D::zeros(grid), &g, &m, &SolverConfig::default())?;
    println!("2D minimum {:.5e}", r2.energy.total());
    let cfg = Minimize3Config { max_iters: 500, ..Default::default() };
    for h in [1.0 / 8.0, 1.0 / 16.0] {
        let init = recovery_sequence(&d, &g, &m, h, 9, WarpingSign::Plus)?;
        let (_, r) = minimize3d(&init, &g, &m, &cfg)?;
        println!("{r}");
    }
    Ok(())
}
