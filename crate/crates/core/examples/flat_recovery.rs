//! Compatible growth is realized with zero energy; the minimizer matches
//! the generating displacement up to rigid motions and reflection.

use grownplate::energy2d::Displacement2D;
use grownplate::fields::{Grid2, ScalarField2, VectorField2};
use grownplate::growth::make_compatible;
use grownplate::material::Material;
use grownplate::solver2d::{gauge_fix, minimize, SolverConfig};
use nalgebra::Vector2;

fn main() -> grownplate::Result<()> {
    let grid = Grid2::unit(33)?;
    let w0 = VectorField2::from_fn(grid, |p| Vector2::new(0.1 * p.x * p.y, 0.05 * p.y * p.y));
    let v0 = ScalarField2::from_fn(grid, |p| 0.3 * p.x * p.x - 0.2 * p.x * p.y + 0.1 * p.y.powi(3));
    let g = make_compatible(&w0, &v0)?;
    let (d, report) = minimize(&Displacement2D::zeros(grid), &g, &Material::new(1.0, 1.0)?, &SolverConfig::default())?;
    println!("energy {:.3e} after {} iterations", report.energy.total(), report.iterations);

    let got = gauge_fix(&d).v;
    let err = |v: ScalarField2| {
        let t = gauge_fix(&Displacement2D { w: w0.clone(), v }).v;
        (&got - &t).l2_norm() / t.l2_norm()
    };
    let e = err(v0.clone()).min(err(v0.map(|x| -x)));
    println!("relative L2 distance to the generating v (up to sign) {e:.2e}");
    Ok(())
}
