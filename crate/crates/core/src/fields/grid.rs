use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Uniform node-centred grid over an axis-aligned rectangle.
///
/// `nx` and `ny` count nodes, so the spacing is `lx / (nx - 1)`. Nodes are
/// stored row-major with `i` (the x index) running fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub origin: Vector2<f64>,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::with_origin(nx, ny, lx, ly, Vector2::zeros())
    }

    pub fn with_origin(nx: usize, ny: usize, lx: f64, ly: f64, origin: Vector2<f64>) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes per direction, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("side lengths must be positive, got {lx}x{ly}")));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx, ny, lx, ly, origin })
    }

    /// Unit square with `n x n` nodes.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn hx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    /// Larger of the two spacings.
    pub fn spacing(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin.x + i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin.y + j as f64 * self.hy()
    }

    pub fn point(&self, k: usize) -> Vector2<f64> {
        let (i, j) = self.ij(k);
        Vector2::new(self.x(i), self.y(j))
    }

    /// Nodes at least `margin` cells away from every edge.
    pub fn is_inner(&self, k: usize, margin: usize) -> bool {
        let (i, j) = self.ij(k);
        i >= margin && j >= margin && i + margin < self.nx && j + margin < self.ny
    }

    /// Trapezoidal quadrature weights, one per node.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let wx = trapezoid_1d(self.nx, self.hx());
        let wy = trapezoid_1d(self.ny, self.hy());
        let mut w = Vec::with_capacity(self.len());
        for wyj in &wy {
            for wxi in &wx {
                w.push(wxi * wyj);
            }
        }
        w
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn centroid(&self) -> Vector2<f64> {
        self.origin + Vector2::new(self.lx / 2.0, self.ly / 2.0)
    }

    /// Same rectangle with a different resolution.
    pub fn resampled(&self, nx: usize, ny: usize) -> Result<Self> {
        Self::with_origin(nx, ny, self.lx, self.ly, self.origin)
    }
}

pub(crate) fn trapezoid_1d(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = h / 2.0;
    w[n - 1] = h / 2.0;
    w
}

/// Values attached to every node of a [`Grid2`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field2<T> {
    pub grid: Grid2,
    pub values: Vec<T>,
}

pub type ScalarField2 = Field2<f64>;
pub type VectorField2 = Field2<Vector2<f64>>;
pub type Vector3Field2 = Field2<Vector3<f64>>;
pub type MatrixField2 = Field2<Matrix2<f64>>;
pub type Matrix3Field2 = Field2<Matrix3<f64>>;

impl<T: Clone> Field2<T> {
    pub fn filled(grid: Grid2, value: T) -> Self {
        Self { values: vec![value; grid.len()], grid }
    }

    pub fn from_values(grid: Grid2, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut(Vector2<f64>) -> T) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        Self { grid, values }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Field2<U> {
        Field2 { grid: self.grid, values: self.values.iter().map(f).collect() }
    }

    pub fn zip_map<U, V>(&self, other: &Field2<U>, mut f: impl FnMut(&T, &U) -> V) -> Field2<V> {
        debug_assert_eq!(self.grid, other.grid);
        Field2 {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn component(&self, f: impl Fn(&T) -> f64) -> Vec<f64> {
        self.values.iter().map(f).collect()
    }
}

impl<T: Default + Clone> Field2<T> {
    pub fn zeros(grid: Grid2) -> Self {
        Self::filled(grid, T::default())
    }
}

impl ScalarField2 {
    /// Trapezoidal integral over the rectangle.
    pub fn integral(&self) -> f64 {
        self.grid.trapezoid_weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max of |value| over nodes at least `margin` cells from the boundary.
    pub fn max_abs_inner(&self, margin: usize) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.is_inner(*k, margin))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Trapezoidal L2 norm.
    pub fn l2_norm(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl<T: Clone + std::ops::Add<Output = T>> std::ops::Add for &Field2<T> {
    type Output = Field2<T>;
    fn add(self, rhs: Self) -> Field2<T> {
        self.zip_map(rhs, |a, b| a.clone() + b.clone())
    }
}

impl<T: Clone + std::ops::Sub<Output = T>> std::ops::Sub for &Field2<T> {
    type Output = Field2<T>;
    fn sub(self, rhs: Self) -> Field2<T> {
        self.zip_map(rhs, |a, b| a.clone() - b.clone())
    }
}

impl<T: Clone + std::ops::Mul<f64, Output = T>> std::ops::Mul<f64> for &Field2<T> {
    type Output = Field2<T>;
    fn mul(self, rhs: f64) -> Field2<T> {
        self.map(|a| a.clone() * rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid2::new(2, 5, 1.0, 1.0).is_err());
        assert!(Grid2::new(5, 5, 0.0, 1.0).is_err());
        assert!(Grid2::new(5, 5, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn spacing_and_indexing() {
        let g = Grid2::new(5, 3, 2.0, 1.0).unwrap();
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 0.5);
        let k = g.idx(3, 2);
        assert_eq!(g.ij(k), (3, 2));
        assert_eq!(g.point(k), Vector2::new(1.5, 1.0));
    }

    #[test]
    fn trapezoid_integrates_bilinear_exactly() {
        let g = Grid2::new(7, 9, 2.0, 3.0).unwrap();
        let f = ScalarField2::from_fn(g, |p| 1.0 + p.x * p.y);
        // ∫∫ 1 + xy = 6 + (2²/2)(3²/2)
        assert!((f.integral() - (6.0 + 9.0)).abs() < 1e-12);
        assert!((g.trapezoid_weights().iter().sum::<f64>() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = Grid2::unit(4).unwrap();
        assert!(matches!(ScalarField2::from_values(g, vec![0.0; 3]), Err(Error::Shape { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn accepted_grids_satisfy_the_invariants(nx in 0usize..40, ny in 0usize..40, lx in -2.0..5.0f64, ly in -2.0..5.0f64) {
                match Grid2::new(nx, ny, lx, ly) {
                    Ok(g) => {
                        prop_assert!(g.nx >= 3 && g.ny >= 3 && g.hx() > 0.0 && g.hy() > 0.0);
                        prop_assert_eq!(g.len(), nx * ny);
                        prop_assert!((g.trapezoid_weights().iter().sum::<f64>() - lx * ly).abs() < 1e-12 * lx * ly);
                    }
                    Err(e) => prop_assert!(matches!(e, Error::InvalidGrid(_)) && (nx < 3 || ny < 3 || lx <= 0.0 || ly <= 0.0)),
                }
            }
        }
    }
}
