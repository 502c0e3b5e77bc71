//! One-dimensional finite-difference stencils and their application along
//! one axis of a node array.
//!
//! Every operator is stored as an explicit row list so that the transpose
//! (needed by exact discrete gradients) reuses the same coefficients.

use super::grid::Grid2;

#[derive(Debug, Clone)]
pub struct Stencil1D {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Stencil1D {
    /// Second-order first derivative: central inside, three-point one-sided
    /// at the two ends.
    pub fn first_derivative(n: usize, h: f64) -> Self {
        assert!(n >= 3);
        let c = 1.0 / (2.0 * h);
        let mut rows = Vec::with_capacity(n);
        rows.push(vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)]);
        for i in 1..n - 1 {
            rows.push(vec![(i - 1, -c), (i + 1, c)]);
        }
        rows.push(vec![(n - 3, c), (n - 2, -4.0 * c), (n - 1, 3.0 * c)]);
        Self { rows }
    }

    /// Second derivative: three-point central inside, four-point one-sided
    /// (second order) at the ends when `n >= 4`.
    pub fn second_derivative(n: usize, h: f64) -> Self {
        assert!(n >= 3);
        let c = 1.0 / (h * h);
        let mut rows = Vec::with_capacity(n);
        if n >= 4 {
            rows.push(vec![(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)]);
        } else {
            rows.push(vec![(0, c), (1, -2.0 * c), (2, c)]);
        }
        for i in 1..n - 1 {
            rows.push(vec![(i - 1, c), (i, -2.0 * c), (i + 1, c)]);
        }
        if n >= 4 {
            rows.push(vec![(n - 4, -c), (n - 3, 4.0 * c), (n - 2, -5.0 * c), (n - 1, 2.0 * c)]);
        } else {
            rows.push(vec![(0, c), (1, -2.0 * c), (2, c)]);
        }
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `out = S x` along `axis` of an array with the given dimensions
    /// (first dimension fastest).
    pub fn apply(&self, dims: &[usize], axis: usize, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; input.len()];
        self.for_each_line(dims, axis, |base, stride| {
            for (i, row) in self.rows.iter().enumerate() {
                out[base + i * stride] = row.iter().map(|&(k, c)| c * input[base + k * stride]).sum();
            }
        });
        out
    }

    /// `out += Sᵀ x` along `axis`.
    pub fn apply_transpose_add(&self, dims: &[usize], axis: usize, input: &[f64], out: &mut [f64]) {
        self.for_each_line(dims, axis, |base, stride| {
            for (i, row) in self.rows.iter().enumerate() {
                let xi = input[base + i * stride];
                if xi != 0.0 {
                    for &(k, c) in row {
                        out[base + k * stride] += c * xi;
                    }
                }
            }
        });
    }

    fn for_each_line(&self, dims: &[usize], axis: usize, mut f: impl FnMut(usize, usize)) {
        assert_eq!(dims[axis], self.rows.len(), "stencil length does not match axis");
        let stride: usize = dims[..axis].iter().product();
        let outer: usize = dims[axis + 1..].iter().product();
        let block = stride * dims[axis];
        for o in 0..outer {
            for inner in 0..stride {
                f(o * block + inner, stride);
            }
        }
    }
}

/// The stencils of a [`Grid2`], precomputed.
#[derive(Debug, Clone)]
pub struct Diff2 {
    pub grid: Grid2,
    dx: Stencil1D,
    dy: Stencil1D,
    dxx: Stencil1D,
    dyy: Stencil1D,
}

impl Diff2 {
    pub fn new(grid: &Grid2) -> Self {
        Self {
            grid: *grid,
            dx: Stencil1D::first_derivative(grid.nx, grid.hx()),
            dy: Stencil1D::first_derivative(grid.ny, grid.hy()),
            dxx: Stencil1D::second_derivative(grid.nx, grid.hx()),
            dyy: Stencil1D::second_derivative(grid.ny, grid.hy()),
        }
    }

    fn dims(&self) -> [usize; 2] {
        [self.grid.nx, self.grid.ny]
    }

    pub fn dx(&self, f: &[f64]) -> Vec<f64> {
        self.dx.apply(&self.dims(), 0, f)
    }

    pub fn dy(&self, f: &[f64]) -> Vec<f64> {
        self.dy.apply(&self.dims(), 1, f)
    }

    pub fn dxx(&self, f: &[f64]) -> Vec<f64> {
        self.dxx.apply(&self.dims(), 0, f)
    }

    pub fn dyy(&self, f: &[f64]) -> Vec<f64> {
        self.dyy.apply(&self.dims(), 1, f)
    }

    /// Mixed derivative, averaged over both composition orders.
    pub fn dxy(&self, f: &[f64]) -> Vec<f64> {
        let a = self.dx(&self.dy(f));
        let b = self.dy(&self.dx(f));
        a.iter().zip(&b).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn dx_t_add(&self, g: &[f64], out: &mut [f64]) {
        self.dx.apply_transpose_add(&self.dims(), 0, g, out);
    }

    pub fn dy_t_add(&self, g: &[f64], out: &mut [f64]) {
        self.dy.apply_transpose_add(&self.dims(), 1, g, out);
    }

    pub fn dxx_t_add(&self, g: &[f64], out: &mut [f64]) {
        self.dxx.apply_transpose_add(&self.dims(), 0, g, out);
    }

    pub fn dyy_t_add(&self, g: &[f64], out: &mut [f64]) {
        self.dyy.apply_transpose_add(&self.dims(), 1, g, out);
    }

    pub fn dxy_t_add(&self, g: &[f64], out: &mut [f64]) {
        let dims = self.dims();
        let mut tmp = vec![0.0; g.len()];
        // (Dx Dy)ᵀ = Dyᵀ Dxᵀ
        self.dx.apply_transpose_add(&dims, 0, g, &mut tmp);
        let mut a = vec![0.0; g.len()];
        self.dy.apply_transpose_add(&dims, 1, &tmp, &mut a);
        tmp.iter_mut().for_each(|t| *t = 0.0);
        self.dy.apply_transpose_add(&dims, 1, g, &mut tmp);
        let mut b = vec![0.0; g.len()];
        self.dx.apply_transpose_add(&dims, 0, &tmp, &mut b);
        for ((o, a), b) in out.iter_mut().zip(&a).zip(&b) {
            *o += 0.5 * (a + b);
        }
    }

    /// Rows of the x / y first-derivative stencils (sparse assembly).
    pub fn dx_stencil(&self) -> &Stencil1D {
        &self.dx
    }

    pub fn dy_stencil(&self) -> &Stencil1D {
        &self.dy
    }

    pub fn dxx_stencil(&self) -> &Stencil1D {
        &self.dxx
    }

    pub fn dyy_stencil(&self) -> &Stencil1D {
        &self.dyy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(a, b)| a * b).sum()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn transposes_are_adjoint() {
        let g = Grid2::new(7, 5, 1.3, 0.7).unwrap();
        let d = Diff2::new(&g);
        let x = pseudo_random(g.len(), 1);
        let y = pseudo_random(g.len(), 2);
        type Fwd = fn(&Diff2, &[f64]) -> Vec<f64>;
        type Adj = fn(&Diff2, &[f64], &mut [f64]);
        let pairs: [(Fwd, Adj); 5] = [
            (Diff2::dx, Diff2::dx_t_add),
            (Diff2::dy, Diff2::dy_t_add),
            (Diff2::dxx, Diff2::dxx_t_add),
            (Diff2::dyy, Diff2::dyy_t_add),
            (Diff2::dxy, Diff2::dxy_t_add),
        ];
        for (fwd, adj) in pairs {
            let mut aty = vec![0.0; g.len()];
            adj(&d, &y, &mut aty);
            let lhs = dot(&fwd(&d, &x), &y);
            let rhs = dot(&x, &aty);
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn three_node_second_derivative_is_exact_on_quadratics() {
        let s = Stencil1D::second_derivative(3, 0.5);
        let f: Vec<f64> = (0..3).map(|i| (0.5 * i as f64).powi(2)).collect();
        let out = s.apply(&[3], 0, &f);
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}
