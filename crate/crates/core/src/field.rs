//! Matrix-valued fields on the periodic grid and their pointwise operations:
//! projection to the orthogonal group, energy, determinant signs, winding
//! indices and the L1-Frobenius metric.

use std::ops::Deref;

use thiserror::Error;

use crate::grid::{Grid, SignField};
use crate::linalg;
use crate::spectral::{self, SpectralWorkspace};

/// Relative threshold below which the smallest singular value makes the
/// nearest orthogonal matrix ill-defined.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Relative threshold below which a pointwise determinant counts as zero.
pub const DET_TOL: f64 = 1e-12;
/// Orthogonality defect guaranteed by the projection.
pub const PROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("matrix at grid point ({i}, {j}) is numerically singular")]
    SingularMatrix { i: usize, j: usize },
    #[error("determinant at grid point ({i}, {j}) is below the degeneracy threshold")]
    DegenerateDeterminant { i: usize, j: usize },
    #[error("field shapes differ: {left_points} points / n={left_n} vs {right_points} points / n={right_n}")]
    ShapeMismatch {
        left_points: usize,
        left_n: usize,
        right_points: usize,
        right_n: usize,
    },
    #[error("winding of {value} cannot be resolved to an integer / unwrapped past a near-pi jump")]
    AmbiguousWinding { value: f64 },
    #[error("field orthogonality defect {defect} exceeds tolerance {tol}")]
    NotOrthogonal { defect: f64, tol: f64 },
    #[error("non-finite entry at grid point ({i}, {j})")]
    NonFinite { i: usize, j: usize },
}

/// An `n x n` real matrix attached to every grid point.
///
/// Storage is scanline point order with the matrix entries row-major within
/// each point, so the buffer doubles as the snapshot payload.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    n: usize,
    data: Vec<f64>,
}

impl MatrixField {
    pub fn zeros(grid: Grid, n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        MatrixField { grid, n, data: vec![0.0; grid.num_points() * n * n] }
    }

    /// Same matrix at every point.
    pub fn constant(grid: Grid, n: usize, matrix: &[f64]) -> Self {
        assert_eq!(matrix.len(), n * n);
        let mut f = Self::zeros(grid, n);
        for p in 0..grid.num_points() {
            f.data[p * n * n..(p + 1) * n * n].copy_from_slice(matrix);
        }
        f
    }

    /// Build from a closure writing the matrix for each coordinate.
    pub fn from_matrix_fn(grid: Grid, n: usize, mut f: impl FnMut(f64, f64, &mut [f64])) -> Self {
        let mut out = Self::zeros(grid, n);
        let nn = n * n;
        let side = grid.points_per_side();
        for j in 0..side {
            for i in 0..side {
                let (x1, x2) = grid.coord(i, j);
                let p = grid.index(i, j);
                f(x1, x2, &mut out.data[p * nn..(p + 1) * nn]);
            }
        }
        out
    }

    pub fn from_raw(grid: Grid, n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.num_points() * n * n, "raw field length mismatch");
        MatrixField { grid, n, data }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Matrix at point `(i, j)` as a row-major slice.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let nn = self.n * self.n;
        let p = self.grid.index(i, j);
        &self.data[p * nn..(p + 1) * nn]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let nn = self.n * self.n;
        let p = self.grid.index(i, j);
        &mut self.data[p * nn..(p + 1) * nn]
    }

    /// Matrix entry `(r, c)` at point `(i, j)`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, r: usize, c: usize) -> f64 {
        self.at(i, j)[r * self.n + c]
    }

    pub fn same_shape(&self, other: &MatrixField) -> bool {
        self.grid == other.grid && self.n == other.n
    }

    pub fn shape_mismatch(&self, other: &MatrixField) -> FieldError {
        FieldError::ShapeMismatch {
            left_points: self.grid.num_points(),
            left_n: self.n,
            right_points: other.grid.num_points(),
            right_n: other.n,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn validate_finite(&self) -> Result<(), FieldError> {
        let nn = self.n * self.n;
        for (p, chunk) in self.data.chunks_exact(nn).enumerate() {
            if chunk.iter().any(|x| !x.is_finite()) {
                let (i, j) = self.grid.pair(p);
                return Err(FieldError::NonFinite { i, j });
            }
        }
        Ok(())
    }

    /// Largest pointwise `||A^t A - I||_F` over the grid.
    pub fn max_orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let nn = n * n;
        let mut g = vec![0.0; nn];
        let mut worst = 0.0f64;
        for chunk in self.data.chunks_exact(nn) {
            linalg::gram(chunk, n, &mut g);
            for i in 0..n {
                g[i * n + i] -= 1.0;
            }
            worst = worst.max(linalg::frobenius_norm(&g));
        }
        worst
    }
}

/// Rotation-block field `[[cos eta, -sin eta], [sin eta, cos eta]]`.
pub fn rotation_field(grid: Grid, mut eta: impl FnMut(f64, f64) -> f64) -> MatrixField {
    MatrixField::from_matrix_fn(grid, 2, |x1, x2, m| {
        let (s, c) = eta(x1, x2).sin_cos();
        m[0] = c;
        m[1] = -s;
        m[2] = s;
        m[3] = c;
    })
}

/// Reflection-block field `[[cos eta, sin eta], [sin eta, -cos eta]]`.
pub fn reflection_field(grid: Grid, mut eta: impl FnMut(f64, f64) -> f64) -> MatrixField {
    MatrixField::from_matrix_fn(grid, 2, |x1, x2, m| {
        let (s, c) = eta(x1, x2).sin_cos();
        m[0] = c;
        m[1] = s;
        m[2] = s;
        m[3] = -c;
    })
}

/// A matrix field whose pointwise values are orthogonal up to a recorded
/// tolerance.
#[derive(Debug, Clone)]
pub struct OrthogonalField {
    field: MatrixField,
    orthogonality_tol: f64,
}

impl OrthogonalField {
    /// Wrap a field after checking `||A^t A - I||_F <= tol` everywhere.
    pub fn try_new(field: MatrixField, tol: f64) -> Result<Self, FieldError> {
        let defect = field.max_orthogonality_defect();
        if defect > tol {
            return Err(FieldError::NotOrthogonal { defect, tol });
        }
        Ok(OrthogonalField { field, orthogonality_tol: defect })
    }

    /// Wrap a field whose defect was already measured by the caller.
    pub(crate) fn from_measured(field: MatrixField, defect: f64) -> Self {
        OrthogonalField { field, orthogonality_tol: defect }
    }

    pub fn orthogonality_tol(&self) -> f64 {
        self.orthogonality_tol
    }

    pub fn field(&self) -> &MatrixField {
        &self.field
    }

    pub fn into_inner(self) -> MatrixField {
        self.field
    }
}

impl Deref for OrthogonalField {
    type Target = MatrixField;
    fn deref(&self) -> &MatrixField {
        &self.field
    }
}

/// Scalar phase per grid point, unwrapped along the extraction raster.
#[derive(Debug, Clone)]
pub struct PhaseField {
    pub grid: Grid,
    pub eta: Vec<f64>,
    /// Winding pair consumed while unwrapping.
    pub index: IndexPair,
}

impl PhaseField {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.eta[self.grid.index(i, j)]
    }
}

/// Dirichlet / potential split of the Allen-Cahn energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
    pub epsilon: f64,
}

/// Winding numbers of the first-column direction around the two fundamental
/// loops of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexPair {
    /// Winding along `x1`.
    pub m: i64,
    /// Winding along `x2`.
    pub k: i64,
}

/// Wrap an angle difference into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(mut d: f64) -> f64 {
    use std::f64::consts::PI;
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Pointwise nearest orthogonal matrix `U V^t`, preserving the determinant
/// sign. Fails on points whose smallest singular value is below
/// [`SINGULAR_TOL`] relative to the Frobenius norm.
pub fn project_to_orthogonal(a: &MatrixField) -> Result<OrthogonalField, FieldError> {
    let n = a.matrix_dim();
    let nn = n * n;
    let grid = a.grid();
    let mut out = MatrixField::zeros(grid, n);
    for (p, chunk) in a.data().chunks_exact(nn).enumerate() {
        let norm = linalg::frobenius_norm(chunk);
        let smin = linalg::min_singular_value(chunk, n);
        if !(smin > SINGULAR_TOL * norm) {
            let (i, j) = grid.pair(p);
            return Err(FieldError::SingularMatrix { i, j });
        }
        let q = linalg::orthogonal_polar_factor(chunk, n);
        out.data_mut()[p * nn..(p + 1) * nn].copy_from_slice(&q);
    }
    let projected = OrthogonalField::try_new(out, PROJECTION_TOL)?;
    debug_assert!(projected.orthogonality_tol() <= PROJECTION_TOL);
    Ok(projected)
}

/// Allen-Cahn energy `int 1/2 ||grad A||_F^2 + eps^-2 W(A)` with the
/// Dirichlet part evaluated spectrally (exact for band-limited fields) and
/// the potential part by grid quadrature.
pub fn energy(a: &MatrixField, epsilon: f64, ws: &SpectralWorkspace) -> Result<EnergyReport, FieldError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let dirichlet = spectral::dirichlet_energy(a, ws).map_err(|_| FieldError::ShapeMismatch {
        left_points: a.grid().num_points(),
        left_n: a.matrix_dim(),
        right_points: ws.grid().num_points(),
        right_n: a.matrix_dim(),
    })?;
    let potential = potential_energy(a, epsilon);
    Ok(EnergyReport { dirichlet, potential, total: dirichlet + potential, epsilon })
}

/// Grid quadrature of `eps^-2 W(A)` with `W(A) = 1/4 ||A^t A - I||_F^2`.
pub fn potential_energy(a: &MatrixField, epsilon: f64) -> f64 {
    let n = a.matrix_dim();
    let nn = n * n;
    let mut g = vec![0.0; nn];
    let mut sum = 0.0;
    for chunk in a.data().chunks_exact(nn) {
        linalg::gram(chunk, n, &mut g);
        for i in 0..n {
            g[i * n + i] -= 1.0;
        }
        let w: f64 = g.iter().map(|x| x * x).sum();
        sum += 0.25 * w;
    }
    let h = a.grid().spacing();
    sum * h * h / (epsilon * epsilon)
}

/// Centered finite-difference Dirichlet energy; cross-check for the spectral
/// route, accurate to `O(h^2)`.
pub fn dirichlet_energy_fd(a: &MatrixField) -> f64 {
    let grid = a.grid();
    let side = grid.points_per_side();
    let n = a.matrix_dim();
    let nn = n * n;
    let h = grid.spacing();
    let inv2h = 1.0 / (2.0 * h);
    let mut sum = 0.0;
    for j in 0..side {
        for i in 0..side {
            let xp = a.at((i + 1) % side, j);
            let xm = a.at(grid.wrap(i as isize - 1), j);
            let yp = a.at(i, (j + 1) % side);
            let ym = a.at(i, grid.wrap(j as isize - 1));
            for k in 0..nn {
                let dx = (xp[k] - xm[k]) * inv2h;
                let dy = (yp[k] - ym[k]) * inv2h;
                sum += dx * dx + dy * dy;
            }
        }
    }
    0.5 * sum * h * h
}

/// Sign of the pointwise determinant; errors where `|det|` falls below
/// [`DET_TOL`] relative to `||A||_F^n`.
pub fn det_sign_field(a: &MatrixField) -> Result<SignField, FieldError> {
    let n = a.matrix_dim();
    let nn = n * n;
    let grid = a.grid();
    let mut signs = Vec::with_capacity(grid.num_points());
    for (p, chunk) in a.data().chunks_exact(nn).enumerate() {
        let det = linalg::determinant(chunk, n);
        let scale = linalg::frobenius_norm(chunk).powi(n as i32);
        if !(det.abs() > DET_TOL * scale) {
            let (i, j) = grid.pair(p);
            return Err(FieldError::DegenerateDeterminant { i, j });
        }
        signs.push(if det > 0.0 { 1 } else { -1 });
    }
    Ok(SignField { grid, signs })
}

fn first_column_angle(a: &MatrixField, i: usize, j: usize) -> f64 {
    let n = a.matrix_dim();
    let m = a.at(i, j);
    if n == 1 {
        if m[0] >= 0.0 {
            0.0
        } else {
            std::f64::consts::PI
        }
    } else {
        m[n].atan2(m[0])
    }
}

fn winding_along<F: Fn(usize) -> f64>(count: usize, angle_at: F) -> Result<i64, FieldError> {
    use std::f64::consts::PI;
    let mut total = 0.0;
    let first = angle_at(0);
    let mut prev = first;
    for s in 1..=count {
        let next = if s == count { first } else { angle_at(s) };
        total += wrap_angle(next - prev);
        prev = next;
    }
    let value = total / (2.0 * PI);
    let rounded = value.round();
    if (value - rounded).abs() > 0.25 {
        return Err(FieldError::AmbiguousWinding { value });
    }
    Ok(rounded as i64)
}

/// Winding pair of the first-column direction along the two fundamental
/// loops. The field must have constant determinant sign for the result to be
/// meaningful; per-step increments are unwrapped into `(-pi, pi]`.
pub fn index_pair(a: &MatrixField) -> Result<IndexPair, FieldError> {
    let side = a.grid().points_per_side();
    let m = winding_along(side, |i| first_column_angle(a, i, 0))?;
    let k = winding_along(side, |j| first_column_angle(a, 0, j))?;
    Ok(IndexPair { m, k })
}

/// `int ||A - B||_F dx` by grid quadrature; the convergence metric of the
/// projection scheme.
pub fn l1_frobenius_distance(a: &MatrixField, b: &MatrixField) -> Result<f64, FieldError> {
    if !a.same_shape(b) {
        return Err(a.shape_mismatch(b));
    }
    let nn = a.matrix_dim() * a.matrix_dim();
    let mut sum = 0.0;
    for (ca, cb) in a.data().chunks_exact(nn).zip(b.data().chunks_exact(nn)) {
        let d2: f64 = ca.iter().zip(cb).map(|(x, y)| (x - y) * (x - y)).sum();
        sum += d2.sqrt();
    }
    let h = a.grid().spacing();
    Ok(sum * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralWorkspace;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn small_grid() -> Grid {
        Grid::new(16).unwrap()
    }

    #[test]
    fn projection_fixes_identity() {
        let f = MatrixField::constant(small_grid(), 2, &[1.0, 0.0, 0.0, 1.0]);
        let p = project_to_orthogonal(&f).unwrap();
        assert_eq!(p.field().data(), f.data());
    }

    #[test]
    fn projection_of_diagonal_stretch() {
        let f = MatrixField::constant(small_grid(), 2, &[2.0, 0.0, 0.0, 0.5]);
        let p = project_to_orthogonal(&f).unwrap();
        for chunk in p.data().chunks_exact(4) {
            assert!((chunk[0] - 1.0).abs() < 1e-15);
            assert!((chunk[3] - 1.0).abs() < 1e-15);
            assert!(chunk[1].abs() < 1e-15 && chunk[2].abs() < 1e-15);
        }
    }

    #[test]
    fn projection_keeps_reflection_branch() {
        let f = MatrixField::constant(small_grid(), 2, &[0.0, 2.0, 1.0, 0.0]);
        let p = project_to_orthogonal(&f).unwrap();
        for chunk in p.data().chunks_exact(4) {
            let expect = [0.0, 1.0, 1.0, 0.0];
            for k in 0..4 {
                assert!((chunk[k] - expect[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn projection_rejects_singular_point() {
        let mut f = MatrixField::constant(small_grid(), 2, &[1.0, 0.0, 0.0, 1.0]);
        f.at_mut(3, 5).copy_from_slice(&[1.0, 1.0, 1.0, 1.0]);
        match project_to_orthogonal(&f) {
            Err(FieldError::SingularMatrix { i, j }) => {
                assert_eq!((i, j), (3, 5));
            }
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = MatrixField::from_matrix_fn(small_grid(), 2, |_, _, m| {
            for v in m.iter_mut() {
                *v = rng.random_range(-2.0..2.0);
            }
        });
        let once = project_to_orthogonal(&f).unwrap();
        let twice = project_to_orthogonal(once.field()).unwrap();
        for (x, y) in once.data().iter().zip(twice.data()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_commutes_with_constant_left_rotation() {
        // left-invariance of the polar factor
        let g = Grid::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let theta: f64 = rng.random_range(-PI..PI);
            let r = [theta.cos(), -theta.sin(), theta.sin(), theta.cos()];
            let a = MatrixField::from_matrix_fn(g, 2, |_, _, m| {
                for v in m.iter_mut() {
                    *v = rng.random_range(-2.0..2.0);
                }
            });
            if project_to_orthogonal(&a).is_err() {
                continue;
            }
            let mut ra = MatrixField::zeros(g, 2);
            for p in 0..g.num_points() {
                let (i, j) = g.pair(p);
                let mut out = [0.0; 4];
                linalg::matmul(&r, a.at(i, j), 2, &mut out);
                ra.at_mut(i, j).copy_from_slice(&out);
            }
            let lhs = project_to_orthogonal(&ra).unwrap();
            let proj = project_to_orthogonal(&a).unwrap();
            for p in 0..g.num_points() {
                let (i, j) = g.pair(p);
                let mut rhs = [0.0; 4];
                linalg::matmul(&r, proj.at(i, j), 2, &mut rhs);
                for k in 0..4 {
                    assert!((lhs.at(i, j)[k] - rhs[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn energy_of_constant_orthogonal_field_is_zero() {
        let g = small_grid();
        let ws = SpectralWorkspace::new(g).unwrap();
        let f = rotation_field(g, |_, _| 0.7);
        let e = energy(&f, 0.3, &ws).unwrap();
        assert!(e.dirichlet.abs() < 1e-12);
        assert!(e.potential.abs() < 1e-24);
        assert_eq!(e.total, e.dirichlet + e.potential);
    }

    #[test]
    fn energy_of_linear_winding_field() {
        // eta = 2 pi x1: ||grad A||_F^2 = 2 |grad eta|^2, so E = 4 pi^2.
        let g = Grid::new(32).unwrap();
        let ws = SpectralWorkspace::new(g).unwrap();
        let f = rotation_field(g, |x1, _| 2.0 * PI * x1);
        let e = energy(&f, 1.0, &ws).unwrap();
        assert!((e.dirichlet - 4.0 * PI * PI).abs() < 1e-9, "dirichlet = {}", e.dirichlet);
        assert!(e.potential.abs() < 1e-20);
    }

    #[test]
    fn energy_potential_of_scaled_identity() {
        let g = small_grid();
        let ws = SpectralWorkspace::new(g).unwrap();
        let f = MatrixField::constant(g, 2, &[2.0, 0.0, 0.0, 2.0]);
        let e = energy(&f, 1.0, &ws).unwrap();
        assert!(e.dirichlet.abs() < 1e-12);
        assert!((e.potential - 4.5).abs() < 1e-12);
    }

    #[test]
    fn energy_invariant_under_constant_left_rotation() {
        let g = Grid::new(32).unwrap();
        let ws = SpectralWorkspace::new(g).unwrap();
        let f = rotation_field(g, |x1, x2| 0.5 * (2.0 * PI * (x1 + 2.0 * x2)).sin());
        let r = [0.6f64.cos(), -(0.6f64.sin()), 0.6f64.sin(), 0.6f64.cos()];
        let mut rf = MatrixField::zeros(g, 2);
        let side = g.points_per_side();
        for j in 0..side {
            for i in 0..side {
                let mut out = [0.0; 4];
                linalg::matmul(&r, f.at(i, j), 2, &mut out);
                rf.at_mut(i, j).copy_from_slice(&out);
            }
        }
        let e0 = energy(&f, 0.5, &ws).unwrap();
        let e1 = energy(&rf, 0.5, &ws).unwrap();
        assert!((e0.total - e1.total).abs() < 1e-10);
    }

    #[test]
    fn fd_energy_agrees_at_second_order() {
        let eta = |x1: f64, x2: f64| 0.8 * (2.0 * PI * x1).sin() + 0.3 * (2.0 * PI * x2).cos();
        let mut errs = Vec::new();
        for side in [32usize, 64] {
            let g = Grid::new(side).unwrap();
            let ws = SpectralWorkspace::new(g).unwrap();
            let f = rotation_field(g, eta);
            let spectral = energy(&f, 1.0, &ws).unwrap().dirichlet;
            let fd = dirichlet_energy_fd(&f);
            errs.push((fd - spectral).abs());
        }
        // halving h divides the FD error by about 4
        assert!(errs[1] < errs[0] / 3.0, "errors: {errs:?}");
    }

    #[test]
    fn det_sign_basics() {
        let g = small_grid();
        let f = MatrixField::constant(g, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(det_sign_field(&f).unwrap().signs.iter().all(|&s| s == 1));
        let f = MatrixField::constant(g, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(det_sign_field(&f).unwrap().signs.iter().all(|&s| s == -1));
    }

    #[test]
    fn det_sign_of_disk_initial_data() {
        let g = Grid::new(64).unwrap();
        let inside = |x1: f64, x2: f64| x1.hypot(x2) < 0.15;
        let f = MatrixField::from_matrix_fn(g, 2, |x1, x2, m| {
            let eta: f64 = 0.4;
            let (s, c) = eta.sin_cos();
            if inside(x1, x2) {
                m.copy_from_slice(&[c, -s, s, c]);
            } else {
                m.copy_from_slice(&[c, s, s, -c]);
            }
        });
        let signs = det_sign_field(&f).unwrap();
        assert_eq!(signs.at(32, 32), 1, "rotation block inside the curve");
        assert_eq!(signs.at(0, 0), -1, "reflection block outside");
    }

    #[test]
    fn det_sign_rejects_degenerate_point() {
        let mut f = MatrixField::constant(small_grid(), 2, &[1.0, 0.0, 0.0, 1.0]);
        f.at_mut(0, 1).copy_from_slice(&[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            det_sign_field(&f),
            Err(FieldError::DegenerateDeterminant { i: 0, j: 1 })
        ));
    }

    #[test]
    fn index_pair_examples() {
        let g = Grid::new(64).unwrap();
        let uniform = rotation_field(g, |_, _| 1.2);
        assert_eq!(index_pair(&uniform).unwrap(), IndexPair { m: 0, k: 0 });

        let f = rotation_field(g, |x1, _| 2.0 * PI * x1);
        assert_eq!(index_pair(&f).unwrap(), IndexPair { m: 1, k: 0 });

        for (n1, n2) in [(1i64, 0i64), (2, 1), (-1, 3), (0, 0)] {
            let f = rotation_field(g, |x1, x2| 2.0 * PI * (n1 as f64 * x1 + n2 as f64 * x2));
            assert_eq!(index_pair(&f).unwrap(), IndexPair { m: n1, k: n2 });
        }
    }

    #[test]
    fn index_pair_invariant_under_phase_shift() {
        let g = Grid::new(48).unwrap();
        for shift in [0.0, 0.9, 2.5, -1.3] {
            let f = rotation_field(g, |x1, x2| 2.0 * PI * (2.0 * x1 - x2) + shift);
            assert_eq!(index_pair(&f).unwrap(), IndexPair { m: 2, k: -1 });
        }
    }

    #[test]
    fn l1_distance_examples() {
        let g = small_grid();
        let a = MatrixField::constant(g, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(l1_frobenius_distance(&a, &a).unwrap(), 0.0);

        let b = MatrixField::constant(g, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!((l1_frobenius_distance(&a, &b).unwrap() - 2.0).abs() < 1e-13);

        let z = MatrixField::zeros(g, 2);
        assert!((l1_frobenius_distance(&a, &z).unwrap() - 2.0f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn l1_distance_shape_mismatch() {
        let a = MatrixField::zeros(Grid::new(8).unwrap(), 2);
        let b = MatrixField::zeros(Grid::new(16).unwrap(), 2);
        assert!(matches!(l1_frobenius_distance(&a, &b), Err(FieldError::ShapeMismatch { .. })));
    }

    #[test]
    fn l1_distance_metric_properties() {
        let g = Grid::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut random_field = || {
            MatrixField::from_matrix_fn(g, 2, |_, _, m| {
                for v in m.iter_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            })
        };
        for _ in 0..50 {
            let (a, b, c) = (random_field(), random_field(), random_field());
            let dab = l1_frobenius_distance(&a, &b).unwrap();
            let dba = l1_frobenius_distance(&b, &a).unwrap();
            let dac = l1_frobenius_distance(&a, &c).unwrap();
            let dcb = l1_frobenius_distance(&c, &b).unwrap();
            assert!((dab - dba).abs() < 1e-14);
            assert!(dab <= dac + dcb + 1e-12);
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert_eq!(wrap_angle(0.3), 0.3);
    }
}
