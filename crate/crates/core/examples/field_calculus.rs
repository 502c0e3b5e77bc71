//! Sampling expressions on a grid and applying difference operators.

use grownplate::fields::{curl_t_curl, grad, hessian, sym_grad, FieldExpr, Grid2, VectorField2};
use nalgebra::Vector2;

fn main() -> grownplate::Result<()> {
    for n in [17, 33, 65] {
        let grid = Grid2::unit(n)?;
        let f = FieldExpr::parse("sin(2*x) * cos(3*y)")?.sample(&grid)?;
        let h = hessian(&f);
        let g = grad(&f);
        let k = grid.idx(n / 2, n / 3);
        let p = grid.point(k);
        let exact = -4.0 * (2.0 * p.x).sin() * (3.0 * p.y).cos();
        println!(
            "n={n:3} d1f err {:.2e}  d11f err {:.2e}",
            (g.values[k].x - 2.0 * (2.0 * p.x).cos() * (3.0 * p.y).cos()).abs(),
            (h.values[k][(0, 0)] - exact).abs()
        );
        // symmetric gradients are annihilated by curlᵀcurl up to truncation
        let w = VectorField2::from_fn(grid, |p| Vector2::new((p.x * p.y).sin(), p.x * p.x * p.y));
        println!("       |curlTcurl(sym grad w)| interior max {:.2e}", curl_t_curl(&sym_grad(&w)).max_abs_inner(2));
    }
    Ok(())
}
