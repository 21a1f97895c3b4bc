//! Discrete Fourier machinery on the periodic grid: exact heat propagator,
//! spectral Laplacian and the spectral Dirichlet energy, applied
//! componentwise to matrix fields.
//!
//! Transform convention: forward unnormalized, inverse divides by `N^2`, so
//! multiplier tables are normalization-independent.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::field::MatrixField;
use crate::grid::Grid;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("spectral workspace needs an even grid size, got {0}")]
    OddGridSize(usize),
    #[error("field grid ({field} points per side) does not match workspace grid ({workspace})")]
    ShapeMismatch { field: usize, workspace: usize },
    #[error("diffusion time must be finite and nonnegative, got {0}")]
    InvalidTau(f64),
}

/// Immutable per-grid tables: the Laplacian symbol `-4 pi^2 |k|^2` per mode
/// and the heat multiplier `exp(symbol * tau)` for one cached `tau`.
pub struct SpectralWorkspace {
    grid: Grid,
    symbol: Vec<f64>,
    cached_tau: Option<f64>,
    heat_multiplier: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralWorkspace {
    pub fn new(grid: Grid) -> Result<Self, SpectralError> {
        Self::build(grid, None)
    }

    /// Workspace with the heat multiplier precomputed for `tau`.
    pub fn with_cached_tau(grid: Grid, tau: f64) -> Result<Self, SpectralError> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(SpectralError::InvalidTau(tau));
        }
        Self::build(grid, Some(tau))
    }

    fn build(grid: Grid, tau: Option<f64>) -> Result<Self, SpectralError> {
        let side = grid.points_per_side();
        if side % 2 != 0 {
            return Err(SpectralError::OddGridSize(side));
        }
        let mut symbol = vec![0.0; grid.num_points()];
        let four_pi_sq = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        for j in 0..side {
            for i in 0..side {
                let k1 = grid.wavenumber(i) as f64;
                let k2 = grid.wavenumber(j) as f64;
                symbol[j * side + i] = -four_pi_sq * (k1 * k1 + k2 * k2);
            }
        }
        let heat_multiplier = match tau {
            Some(t) => symbol.iter().map(|s| (s * t).exp()).collect(),
            None => Vec::new(),
        };
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(side);
        let inverse = planner.plan_fft_inverse(side);
        Ok(SpectralWorkspace { grid, symbol, cached_tau: tau, heat_multiplier, forward, inverse })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Laplacian symbol `-4 pi^2 |k|^2`, in grid storage order.
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn check(&self, a: &MatrixField) -> Result<(), SpectralError> {
        if a.grid() != self.grid {
            return Err(SpectralError::ShapeMismatch {
                field: a.grid().points_per_side(),
                workspace: self.grid.points_per_side(),
            });
        }
        Ok(())
    }

    pub(crate) fn scratch_buffer(&self) -> Vec<Complex<f64>> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex::new(0.0, 0.0); len]
    }

    pub(crate) fn fft2_forward(&self, buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let side = self.grid.points_per_side();
        self.forward.process_with_scratch(buf, scratch);
        transpose_square(buf, side);
        self.forward.process_with_scratch(buf, scratch);
        transpose_square(buf, side);
    }

    pub(crate) fn fft2_inverse(&self, buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let side = self.grid.points_per_side();
        self.inverse.process_with_scratch(buf, scratch);
        transpose_square(buf, side);
        self.inverse.process_with_scratch(buf, scratch);
        transpose_square(buf, side);
        let norm = 1.0 / (self.grid.num_points() as f64);
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }
}

fn transpose_square(buf: &mut [Complex<f64>], n: usize) {
    for j in 0..n {
        for i in 0..j {
            buf.swap(j * n + i, i * n + j);
        }
    }
}

/// Apply a real Fourier multiplier to every matrix component of `a`.
fn apply_multiplier(a: &MatrixField, ws: &SpectralWorkspace, mult: &[f64]) -> MatrixField {
    let grid = a.grid();
    let n = a.matrix_dim();
    let nn = n * n;
    let points = grid.num_points();
    let mut out = MatrixField::zeros(grid, n);
    let mut buf = vec![Complex::new(0.0, 0.0); points];
    let mut scratch = ws.scratch_buffer();
    let amplitude = a.max_abs();
    let mult_max = mult.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst_imag = 0.0f64;
    for comp in 0..nn {
        for p in 0..points {
            buf[p] = Complex::new(a.data()[p * nn + comp], 0.0);
        }
        ws.fft2_forward(&mut buf, &mut scratch);
        for (v, m) in buf.iter_mut().zip(mult) {
            *v *= m;
        }
        ws.fft2_inverse(&mut buf, &mut scratch);
        for p in 0..points {
            worst_imag = worst_imag.max(buf[p].im.abs());
            out.data_mut()[p * nn + comp] = buf[p].re;
        }
    }
    // real multipliers are symmetric under k -> -k; anything beyond round-off
    // (scaled by the multiplier magnitude) is a bug, not data
    assert!(
        worst_imag <= 1e-11 * (1.0 + mult_max) * (1.0 + amplitude),
        "imaginary residue {worst_imag} after real multiplier"
    );
    out
}

/// Solve the heat equation exactly for time `tau`: every component is
/// multiplied by `exp(-4 pi^2 |k|^2 tau)` in frequency space.
pub fn heat_solve(a: &MatrixField, tau: f64, ws: &SpectralWorkspace) -> Result<MatrixField, SpectralError> {
    ws.check(a)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(SpectralError::InvalidTau(tau));
    }
    if ws.cached_tau == Some(tau) {
        Ok(apply_multiplier(a, ws, &ws.heat_multiplier))
    } else {
        let mult: Vec<f64> = ws.symbol.iter().map(|s| (s * tau).exp()).collect();
        Ok(apply_multiplier(a, ws, &mult))
    }
}

/// Spectral Laplacian: componentwise multiplication by `-4 pi^2 |k|^2`.
pub fn laplacian(a: &MatrixField, ws: &SpectralWorkspace) -> Result<MatrixField, SpectralError> {
    ws.check(a)?;
    Ok(apply_multiplier(a, ws, &ws.symbol))
}

/// Spectral Dirichlet energy `int 1/2 ||grad A||_F^2` via Parseval; exact
/// for band-limited fields.
pub fn dirichlet_energy(a: &MatrixField, ws: &SpectralWorkspace) -> Result<f64, SpectralError> {
    ws.check(a)?;
    let grid = a.grid();
    let n = a.matrix_dim();
    let nn = n * n;
    let points = grid.num_points();
    let mut buf = vec![Complex::new(0.0, 0.0); points];
    let mut scratch = ws.scratch_buffer();
    let mut sum = 0.0;
    for comp in 0..nn {
        for p in 0..points {
            buf[p] = Complex::new(a.data()[p * nn + comp], 0.0);
        }
        ws.fft2_forward(&mut buf, &mut scratch);
        for (v, s) in buf.iter().zip(&ws.symbol) {
            sum += -s * v.norm_sqr();
        }
    }
    let n4 = (points as f64) * (points as f64);
    Ok(0.5 * sum / n4)
}
