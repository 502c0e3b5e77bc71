//! Quadratic forms of an isotropic material and their plate reductions.

use grownplate::material::Material;
use nalgebra::{Matrix2, Matrix3};

fn main() -> grownplate::Result<()> {
    let m = Material::new(1.0, 1.5)?;
    println!("mu {} lambda {}", m.mu, m.lambda);
    println!("poisson ratio {:.4}, young modulus {:.4}", m.nu(), m.young());
    println!("bending stiffness {:.4}, plate lambda {:.4}", m.bending_stiffness(), m.plate_lambda());

    let f = Matrix2::new(0.3, 0.1, 0.1, -0.2);
    println!("q2 closed form   {:.12}", m.q2(&f));
    println!("q2 by minimizing {:.12}", m.q2_via_min(&f));

    let g = Matrix3::new(0.1, 0.2, 0.0, -0.1, 0.05, 0.3, 0.0, 0.1, -0.2);
    println!("q3 {:.6}", m.q3(&g));
    // the stored energy vanishes on rotations and is quadratic near them
    let t = 1e-3;
    let w = m.w_density(&(Matrix3::identity() + g * t)) / (t * t);
    println!("W(I + tG)/t^2 {:.6} -> q3/2 {:.6}", w, m.q3(&g) / 2.0);
    Ok(())
}
