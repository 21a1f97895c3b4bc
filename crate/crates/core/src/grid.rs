//! Periodic square grid on the torus `[-1/2, 1/2)^2`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 2 points per side, got {0}")]
    TooSmall(usize),
}

/// Uniform periodic grid with `N` points per side and spacing `h = 1/N`.
///
/// Index `(i, j)` maps to the point `(-1/2 + i*h, -1/2 + j*h)`; index
/// arithmetic wraps modulo `N` in both directions. Linear storage order is
/// scanline order: `j` outer, `i` inner (`x1` varies fastest).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n_side: usize,
}

impl Grid {
    pub fn new(points_per_side: usize) -> Result<Self, GridError> {
        if points_per_side < 2 {
            return Err(GridError::TooSmall(points_per_side));
        }
        Ok(Grid { n_side: points_per_side })
    }

    #[inline]
    pub fn points_per_side(&self) -> usize {
        self.n_side
    }

    /// Total number of grid points, `N^2`.
    #[inline]
    pub fn num_points(&self) -> usize {
        self.n_side * self.n_side
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n_side as f64
    }

    /// Linear index of the wrapped point `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        let n = self.n_side;
        (j % n) * n + (i % n)
    }

    /// Inverse of [`Grid::index`]: linear index -> `(i, j)`.
    #[inline]
    pub fn pair(&self, idx: usize) -> (usize, usize) {
        (idx % self.n_side, idx / self.n_side)
    }

    /// Coordinate of `(i, j)` in `[-1/2, 1/2)^2`.
    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.spacing();
        (-0.5 + i as f64 * h, -0.5 + j as f64 * h)
    }

    /// Signed integer wavenumber of a 1-D index: `0..=N/2` then negative.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n_side as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wrap an index offset into `0..N`.
    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        let n = self.n_side as isize;
        (((i % n) + n) % n) as usize
    }
}

/// Scalar value per grid point, stored in grid scanline order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.num_points(), "scalar field length mismatch");
        ScalarField { grid, data }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let n = grid.points_per_side();
        let mut data = Vec::with_capacity(grid.num_points());
        for j in 0..n {
            for i in 0..n {
                let (x1, x2) = grid.coord(i, j);
                data.push(f(x1, x2));
            }
        }
        ScalarField { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }
}

/// Pointwise determinant sign, values in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignField {
    pub grid: Grid,
    pub signs: Vec<i8>,
}

impl SignField {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> i8 {
        self.signs[self.grid.index(i, j)]
    }

    pub fn count_positive(&self) -> usize {
        self.signs.iter().filter(|&&s| s > 0).count()
    }

    /// View as a scalar field (`+1.0` / `-1.0`) for contour extraction.
    pub fn to_scalar(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.signs.iter().map(|&s| s as f64).collect(),
        }
    }

    /// One pass of a 3x3 majority filter; removes single-cell noise.
    pub fn majority_filtered(&self) -> SignField {
        let n = self.grid.points_per_side();
        let mut out = vec![0i8; self.signs.len()];
        for j in 0..n {
            for i in 0..n {
                let mut sum = 0i32;
                for dj in -1isize..=1 {
                    for di in -1isize..=1 {
                        let ii = self.grid.wrap(i as isize + di);
                        let jj = self.grid.wrap(j as isize + dj);
                        sum += self.at(ii, jj) as i32;
                    }
                }
                out[self.grid.index(i, j)] = if sum > 0 { 1 } else { -1 };
            }
        }
        SignField { grid: self.grid, signs: out }
    }
}
