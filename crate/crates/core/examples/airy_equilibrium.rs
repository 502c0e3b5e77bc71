//! Stress function of a computed equilibrium and the residuals of the
//! field equations, under grid refinement.

use grownplate::airy::{boundary_residuals, el_residuals, StressState};
use grownplate::energy2d::Displacement2D;
use grownplate::fields::{Grid2, MatrixField2};
use grownplate::growth::GrowthField;
use grownplate::material::Material;
use grownplate::solver2d::{minimize, SolverConfig};
use nalgebra::Matrix2;

fn main() -> grownplate::Result<()> {
    let m = Material::new(1.0, 1.0)?;
    for n in [17, 33, 65] {
        let grid = Grid2::unit(n)?;
        let g = GrowthField::from_blocks(&MatrixField2::zeros(grid), &MatrixField2::filled(grid, Matrix2::identity()))?;
        let (d, _) = minimize(&Displacement2D::zeros(grid), &g, &m, &SolverConfig::default())?;
        let st = StressState::compute(&d, &g, &m)?;
        let el = el_residuals(&d, &st.phi, &g, &m)?;
        let bc = boundary_residuals(&d, &st.phi, &g, &m)?;
        println!(
            "n={n:3} airy misfit {:.1e}  interior r1 {:.3e}  r2 {:.3e}  bc1 {:.2e} b1 {:.2e} b2 {:.2e}",
            st.fit.relative_misfit,
            el.r1_norm_away(0.125),
            el.r2_norm_away(0.125),
            bc.bc1(),
            bc.b1(),
            bc.b2()
        );
    }
    Ok(())
}
