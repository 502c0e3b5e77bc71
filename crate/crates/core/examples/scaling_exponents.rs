//! Energy-scaling exponents for growth of order h^gamma with bending of
//! order h^theta, with a numerical probe of the variation of a^h.

use grownplate::fields::{Grid2, MatrixField2};
use grownplate::growth::{critical_exponent, scaling_probe, GrowthField, ScalingProbe};
use nalgebra::Matrix2;

fn main() -> grownplate::Result<()> {
    for (gamma, theta) in [(2.0, 1.0), (1.0, 1.0), (3.0, 2.0)] {
        let (o0, o1, b0) = ScalingProbe::closed_form(gamma, theta);
        println!("gamma {gamma} theta {theta}: omega0 {o0} omega1 {o1} beta0 {b0} critical {}", critical_exponent(o0));
    }
    let grid = Grid2::unit(17)?;
    let g = GrowthField::from_blocks(
        &MatrixField2::from_fn(grid, |p| Matrix2::new(0.1 * p.x, 0.0, 0.0, 0.0)),
        &MatrixField2::from_fn(grid, |p| Matrix2::new(1.0, 0.0, 0.0, 0.5 + p.y)),
    )?;
    print!("{}", scaling_probe(&g, 2.0, 1.0, &[0.125, 0.0625, 0.03125], 9)?);
    Ok(())
}
