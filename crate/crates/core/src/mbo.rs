//! Diffusion-generated scheme: alternate the exact heat step with the
//! pointwise projection to the orthogonal group until the L1-Frobenius
//! increment falls below tolerance, monitoring the stability functional
//! `-int <A, G_tau * A>_F` along the way.

use thiserror::Error;

use crate::field::{
    l1_frobenius_distance, project_to_orthogonal, FieldError, MatrixField, OrthogonalField,
};
use crate::spectral::{heat_solve, SpectralError, SpectralWorkspace};

#[derive(Debug, Error)]
pub enum MboError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no convergence within {max_iters} iterations (last increment {last_increment:e})")]
    MaxItersExceeded {
        max_iters: usize,
        last_increment: f64,
        trajectory: Box<MboTrajectory>,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct MboConfig {
    pub tau: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub record_every: usize,
}

impl MboConfig {
    pub fn new(tau: f64, tol: f64, max_iters: usize, record_every: usize) -> Result<Self, MboError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(MboError::InvalidConfig(format!("tau must be positive, got {tau}")));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(MboError::InvalidConfig(format!("tol must be positive, got {tol}")));
        }
        if max_iters == 0 {
            return Err(MboError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if record_every == 0 {
            return Err(MboError::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(MboConfig { tau, tol, max_iters, record_every })
    }
}

#[derive(Debug, Clone)]
pub struct MboSnapshot {
    pub step: usize,
    pub time: f64,
    pub field: OrthogonalField,
}

/// Recorded iterates plus full-resolution per-step diagnostics.
#[derive(Debug, Clone)]
pub struct MboTrajectory {
    pub snapshots: Vec<MboSnapshot>,
    /// `increments[s-1]` is the L1-Frobenius distance between iterates `s`
    /// and `s-1`.
    pub increments: Vec<f64>,
    /// Stability functional of iterate `s` (one entry per iterate, the final
    /// iterate included).
    pub lyapunov: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `-int <A, G_tau * A>_F dx` where `G_tau` is the heat propagator.
pub fn mbo_lyapunov(a: &OrthogonalField, tau: f64, ws: &SpectralWorkspace) -> Result<f64, MboError> {
    let diffused = heat_solve(a, tau, ws)?;
    Ok(lyapunov_from_diffused(a, &diffused))
}

fn lyapunov_from_diffused(a: &MatrixField, diffused: &MatrixField) -> f64 {
    let inner: f64 = a.data().iter().zip(diffused.data()).map(|(x, y)| x * y).sum();
    let h = a.grid().spacing();
    -inner * h * h
}

/// One diffusion + projection step; returns the new iterate and its
/// L1-Frobenius distance to the input.
pub fn mbo_step(
    a: &OrthogonalField,
    tau: f64,
    ws: &SpectralWorkspace,
) -> Result<(OrthogonalField, f64), MboError> {
    let diffused = heat_solve(a, tau, ws)?;
    let next = project_to_orthogonal(&diffused)?;
    let increment = l1_frobenius_distance(&next, a)?;
    Ok((next, increment))
}

/// Step-by-step driver for the scheme. Owns the current iterate; each
/// [`MboDriver::advance`] performs one diffusion + projection step and
/// reports the increment together with the stability functional of the
/// pre-step iterate (it reuses the diffusion needed for the step, so the
/// functional costs nothing extra).
pub struct MboDriver<'a> {
    ws: &'a SpectralWorkspace,
    tau: f64,
    state: OrthogonalField,
    step: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct MboStepReport {
    pub step: usize,
    pub increment: f64,
    /// Stability functional of the iterate *before* this step.
    pub lyapunov_before: f64,
}

impl<'a> MboDriver<'a> {
    /// Projects the initial field before the first step.
    pub fn new(a0: &MatrixField, tau: f64, ws: &'a SpectralWorkspace) -> Result<Self, MboError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(MboError::InvalidConfig(format!("tau must be positive, got {tau}")));
        }
        let state = project_to_orthogonal(a0)?;
        Ok(MboDriver { ws, tau, state, step: 0 })
    }

    pub fn state(&self) -> &OrthogonalField {
        &self.state
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.tau
    }

    pub fn advance(&mut self) -> Result<MboStepReport, MboError> {
        let diffused = heat_solve(&self.state, self.tau, self.ws)?;
        let lyapunov_before = lyapunov_from_diffused(&self.state, &diffused);
        let next = project_to_orthogonal(&diffused)?;
        let increment = l1_frobenius_distance(&next, &self.state)?;
        self.state = next;
        self.step += 1;
        Ok(MboStepReport { step: self.step, increment, lyapunov_before })
    }

    /// Stability functional of the current iterate (costs one heat solve).
    pub fn lyapunov(&self) -> Result<f64, MboError> {
        mbo_lyapunov(&self.state, self.tau, self.ws)
    }
}

/// Run the scheme from `a0` until the increment drops below `cfg.tol`,
/// recording iterates every `cfg.record_every` steps (the initial and final
/// iterates always included).
pub fn run_mbo(
    a0: &MatrixField,
    cfg: &MboConfig,
    ws: &SpectralWorkspace,
) -> Result<MboTrajectory, MboError> {
    let mut driver = MboDriver::new(a0, cfg.tau, ws)?;
    let mut snapshots = vec![MboSnapshot { step: 0, time: 0.0, field: driver.state().clone() }];
    let mut increments = Vec::new();
    let mut lyapunov = Vec::new();
    let mut converged = false;
    while driver.step() < cfg.max_iters {
        let report = driver.advance()?;
        lyapunov.push(report.lyapunov_before);
        increments.push(report.increment);
        let done = report.increment <= cfg.tol;
        if report.step % cfg.record_every == 0 || done {
            snapshots.push(MboSnapshot {
                step: report.step,
                time: driver.time(),
                field: driver.state().clone(),
            });
        }
        if done {
            converged = true;
            break;
        }
    }
    let iterations = driver.step();
    if !converged && snapshots.last().map(|s| s.step) != Some(iterations) {
        snapshots.push(MboSnapshot {
            step: iterations,
            time: driver.time(),
            field: driver.state().clone(),
        });
    }
    lyapunov.push(driver.lyapunov()?);
    let trajectory = MboTrajectory {
        snapshots,
        increments: increments.clone(),
        lyapunov,
        iterations,
        converged,
    };
    if converged {
        Ok(trajectory)
    } else {
        Err(MboError::MaxItersExceeded {
            max_iters: cfg.max_iters,
            last_increment: increments.last().copied().unwrap_or(f64::NAN),
            trajectory: Box::new(trajectory),
        })
    }
}
