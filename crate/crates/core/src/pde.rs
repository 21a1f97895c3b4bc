//! Direct stiff integration of `dA/dt = Lap A - eps^-2 A (A^t A - I)` with a
//! first-order IMEX spectral scheme: backward-Euler diffusion, forward-Euler
//! reaction.

use thiserror::Error;

use crate::field::{energy, EnergyReport, FieldError, MatrixField};
use crate::grid::Grid;
use crate::linalg;
use crate::spectral::{SpectralError, SpectralWorkspace};
use rustfft::num_complex::Complex;

/// `dt <= STABILITY_FRACTION * eps^2` keeps the explicit reaction stable.
pub const STABILITY_FRACTION: f64 = 0.1;
/// Any entry beyond this magnitude counts as a blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("entry magnitude exceeded {BLOWUP_LIMIT:e} at step {step}; the integration is unstable")]
    BlowUp { step: usize },
    #[error("epsilon = {epsilon} is below 4 grid spacings (h = {h}); the diffuse layer is unresolved")]
    UnresolvedInterface { epsilon: f64, h: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct PdeConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Skip the `epsilon >= 4h` resolution check (uniform or manufactured
    /// data with no diffuse layer).
    pub allow_coarse_grid: bool,
}

impl PdeConfig {
    pub fn new(epsilon: f64, dt: f64, t_end: f64, record_every: usize) -> Result<Self, PdeError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(PdeError::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(PdeError::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if dt > STABILITY_FRACTION * epsilon * epsilon * (1.0 + 1e-12) {
            return Err(PdeError::InvalidConfig(format!(
                "dt = {dt} exceeds {STABILITY_FRACTION} * epsilon^2 = {}",
                STABILITY_FRACTION * epsilon * epsilon
            )));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(PdeError::InvalidConfig(format!("t_end must be nonnegative, got {t_end}")));
        }
        if record_every == 0 {
            return Err(PdeError::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(PdeConfig { epsilon, dt, t_end, record_every, allow_coarse_grid: false })
    }

    /// Bypass the `dt <= 0.1 eps^2` rule; the caller owns the fallout.
    pub fn with_unchecked_dt(epsilon: f64, dt: f64, t_end: f64, record_every: usize) -> Self {
        PdeConfig { epsilon, dt, t_end, record_every, allow_coarse_grid: false }
    }

    pub fn allow_coarse_grid(mut self) -> Self {
        self.allow_coarse_grid = true;
        self
    }

    /// Diffuse-interface resolution rule: error below `4h`, warn below `6h`.
    pub fn check_resolution(&self, grid: Grid) -> Result<(), PdeError> {
        if self.allow_coarse_grid {
            return Ok(());
        }
        let h = grid.spacing();
        if self.epsilon < 4.0 * h {
            return Err(PdeError::UnresolvedInterface { epsilon: self.epsilon, h });
        }
        if self.epsilon < 6.0 * h {
            log::warn!(
                "epsilon = {} is below 6 grid spacings (h = {h}); the diffuse layer is marginally resolved",
                self.epsilon
            );
        }
        Ok(())
    }
}

/// Pointwise reaction term `-eps^-2 A (A^t A - I)`.
pub fn reaction(a: &MatrixField, epsilon: f64) -> MatrixField {
    let n = a.matrix_dim();
    let nn = n * n;
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let mut out = MatrixField::zeros(a.grid(), n);
    let mut g = vec![0.0; nn];
    let mut prod = vec![0.0; nn];
    for (chunk, dst) in a.data().chunks_exact(nn).zip(out.data_mut().chunks_exact_mut(nn)) {
        linalg::gram(chunk, n, &mut g);
        for i in 0..n {
            g[i * n + i] -= 1.0;
        }
        linalg::matmul(chunk, &g, n, &mut prod);
        for (d, p) in dst.iter_mut().zip(&prod) {
            *d = -inv_eps2 * p;
        }
    }
    out
}

/// One IMEX step: `Anew(k) = (A(k) + dt * R(k)) / (1 + dt * 4 pi^2 |k|^2)`
/// componentwise in frequency space.
pub fn imex_step(
    a: &MatrixField,
    cfg: &PdeConfig,
    ws: &SpectralWorkspace,
) -> Result<MatrixField, PdeError> {
    let stepped = imex_step_inner(a, cfg, ws)?;
    if stepped.max_abs() > BLOWUP_LIMIT {
        return Err(PdeError::BlowUp { step: 0 });
    }
    Ok(stepped)
}

fn imex_step_inner(
    a: &MatrixField,
    cfg: &PdeConfig,
    ws: &SpectralWorkspace,
) -> Result<MatrixField, PdeError> {
    if a.grid() != ws.grid() {
        return Err(SpectralError::ShapeMismatch {
            field: a.grid().points_per_side(),
            workspace: ws.grid().points_per_side(),
        }
        .into());
    }
    let dt = cfg.dt;
    // explicit reaction in real space, then one implicit spectral solve
    let r = reaction(a, cfg.epsilon);
    let mut rhs = a.clone();
    for (x, y) in rhs.data_mut().iter_mut().zip(r.data()) {
        *x += dt * y;
    }
    let grid = a.grid();
    let n = a.matrix_dim();
    let nn = n * n;
    let points = grid.num_points();
    let symbol = ws.laplacian_symbol();
    let mut out = MatrixField::zeros(grid, n);
    let mut buf = vec![Complex::new(0.0, 0.0); points];
    let mut scratch = ws.scratch_buffer();
    for comp in 0..nn {
        for p in 0..points {
            buf[p] = Complex::new(rhs.data()[p * nn + comp], 0.0);
        }
        ws.fft2_forward(&mut buf, &mut scratch);
        for (v, s) in buf.iter_mut().zip(symbol) {
            *v /= 1.0 - dt * s;
        }
        ws.fft2_inverse(&mut buf, &mut scratch);
        for p in 0..points {
            out.data_mut()[p * nn + comp] = buf[p].re;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PdeSnapshot {
    pub step: usize,
    pub time: f64,
    pub field: MatrixField,
}

#[derive(Debug, Clone)]
pub struct PdeTrajectory {
    pub snapshots: Vec<PdeSnapshot>,
    /// Energy at each recorded snapshot, index-aligned with `snapshots`.
    pub energies: Vec<EnergyReport>,
    pub steps: usize,
}

/// Integrate to `t_end` (rounded to a whole number of steps), recording the
/// field and its energy every `record_every` steps.
pub fn run_pde(
    a0: &MatrixField,
    cfg: &PdeConfig,
    ws: &SpectralWorkspace,
) -> Result<PdeTrajectory, PdeError> {
    cfg.check_resolution(a0.grid())?;
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut state = a0.clone();
    let mut snapshots = Vec::new();
    let mut energies = Vec::new();
    let mut record = |step: usize, field: &MatrixField| -> Result<(), PdeError> {
        snapshots.push(PdeSnapshot { step, time: step as f64 * cfg.dt, field: field.clone() });
        energies.push(energy(field, cfg.epsilon, ws)?);
        Ok(())
    };
    record(0, &state)?;
    for step in 1..=n_steps {
        state = imex_step_inner(&state, cfg, ws)?;
        if state.max_abs() > BLOWUP_LIMIT {
            return Err(PdeError::BlowUp { step });
        }
        if step % cfg.record_every == 0 || step == n_steps {
            record(step, &state)?;
        }
    }
    Ok(PdeTrajectory { snapshots, energies, steps: n_steps })
}
