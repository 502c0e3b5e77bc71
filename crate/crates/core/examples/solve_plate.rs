//! Minimizing the reduced plate energy for a growth with no flat
//! realization, from several starts.

use grownplate::fields::{Grid2, MatrixField2};
use grownplate::growth::GrowthField;
use grownplate::material::Material;
use grownplate::solver2d::{multistart, SolverConfig};
use nalgebra::Matrix2;

fn main() -> grownplate::Result<()> {
    let grid = Grid2::unit(33)?;
    let kap = MatrixField2::from_fn(grid, |p| Matrix2::new(1.0 + 0.5 * p.x, 0.0, 0.0, 0.5 + p.y));
    let g = GrowthField::from_blocks(&MatrixField2::zeros(grid), &kap)?;
    let m = Material::new(1.0, 1.0)?;
    let (d, report) = multistart(&g, &m, &SolverConfig::default(), 3)?;
    print!("{report}");
    let c = grid.idx(16, 16);
    println!("out-of-plane displacement at the centre {:.6}", d.v.values[c]);
    Ok(())
}
