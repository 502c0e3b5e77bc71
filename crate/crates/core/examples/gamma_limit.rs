//! Three-dimensional energy of the recovery sequence against the 2D limit
//! as the thickness shrinks.

use grownplate::energy2d::Displacement2D;
use grownplate::fields::{Field2, Grid2};
use grownplate::growth::GrowthField;
use grownplate::material::Material;
use grownplate::plate3d::{gamma_limit_probe, ThicknessRule, WarpingSign};
use nalgebra::{Matrix3, Vector2};

fn main() -> grownplate::Result<()> {
    let grid = Grid2::unit(33)?;
    let d = Displacement2D {
        w: Field2::from_fn(grid, |p| Vector2::new(0.2 * p.x * p.y, 0.15 * p.x * p.x)),
        v: Field2::from_fn(grid, |p| 0.4 * (p.x - 0.5).powi(2) - 0.3 * (p.y - 0.5).powi(2)),
    };
    let g = GrowthField::new(
        Field2::from_fn(grid, |p| Matrix3::new(0.2 * p.x, 0.05, 0.0, 0.05, -0.1 * p.y, 0.0, 0.0, 0.0, 0.1)),
        Field2::from_fn(grid, |p| Matrix3::new(1.0 + 0.3 * p.y, 0.2 * p.x, 0.0, 0.2 * p.x, 0.7, 0.0, 0.0, 0.0, 0.2)),
    )?;
    let m = Material::new(1.0, 1.5)?;
    let hs = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    for sign in [WarpingSign::Plus, WarpingSign::Minus] {
        let p = gamma_limit_probe(&d, &g, &m, &hs, 9, sign, ThicknessRule::Simpson)?;
        println!("warping sign {sign:?}\n{p}");
    }
    Ok(())
}
