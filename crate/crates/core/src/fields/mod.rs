//! Grid fields, finite-difference calculus, config expressions and field
//! CSV files.

mod expr;
mod grid;
pub mod io;
pub mod ops;
mod so3;
pub mod stencil;

pub use expr::{BinOp, FieldExpr, Func};
pub(crate) use grid::trapezoid_1d;
pub use grid::{Field2, Grid2, Matrix3Field2, MatrixField2, ScalarField2, Vector3Field2, VectorField2};
pub use io::FieldTable;
pub use ops::{
    airy_bracket, biharmonic, cof2, curl_t_curl, div_t_div, grad, grad_vec, hessian, laplacian, row_curl,
    row_div, sym2, sym_grad,
};
pub use so3::{dist2_so3, dist_so3, nearest_rotation};
pub use stencil::{Diff2, Stencil1D};
