//! Executable forms of the asymptotic objects attached to the equation: the
//! pointwise fast relaxation with its closed-form singular-value law, the
//! constrained (orthogonal-group) diffusion equation, phase extraction, the
//! harmonic-field residual, the interface transition profile and the
//! surface-tension constant.

use thiserror::Error;

use crate::field::{
    index_pair, FieldError, MatrixField, OrthogonalField, PhaseField, SINGULAR_TOL,
};
use crate::linalg;
use crate::spectral::{laplacian, SpectralError, SpectralWorkspace};

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("orthogonality defect {defect:e} after step exceeds {limit:e}; reduce dt")]
    OrthogonalityDrift { defect: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Post-step orthogonality defect beyond which the constrained-diffusion
/// step is rejected.
pub const DRIFT_LIMIT: f64 = 1e-4;

/// Fast pointwise relaxation toward the nearest orthogonal matrix.
///
/// With `B0 = U diag(sigma_i) V^t`, each singular value follows the logistic
/// law `sigma(t)^2 = sigma0^2 e^{2t'} / (1 - sigma0^2 + sigma0^2 e^{2t'})`
/// with `t' = t / eps^2`, so `sigma_i -> 1` and `B(t) -> U V^t`. Accepts
/// `t = inf` for the limit itself.
pub fn pointwise_relax(
    b0: &[f64],
    n: usize,
    t: f64,
    epsilon: f64,
) -> Result<Vec<f64>, AsymptoticsError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(t >= 0.0) {
        return Err(AsymptoticsError::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    let svd = linalg::svd(b0, n);
    let norm = linalg::frobenius_norm(b0);
    if !(svd.sigma[n - 1] > SINGULAR_TOL * norm) {
        return Err(FieldError::SingularMatrix { i: 0, j: 0 }.into());
    }
    let tp = t / (epsilon * epsilon);
    let relaxed: Vec<f64> = svd
        .sigma
        .iter()
        .map(|&s0| {
            // stable form of the logistic law; exact at t = 0 and t = inf
            let decay = (-2.0 * tp).exp();
            let denom = 1.0 + (1.0 - s0 * s0) / (s0 * s0) * decay;
            1.0 / denom.sqrt()
        })
        .collect();
    let mut us = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            us[i * n + j] = svd.u[i * n + j] * relaxed[j];
        }
    }
    let vt = linalg::transpose(&svd.v, n);
    let mut out = vec![0.0; n * n];
    linalg::matmul(&us, &vt, n, &mut out);
    Ok(out)
}

/// Right-hand side `1/2 (Lap B B^t - B Lap B^t) B` with the spectral
/// Laplacian.
fn constrained_diffusion_rhs(
    b: &MatrixField,
    ws: &SpectralWorkspace,
) -> Result<MatrixField, AsymptoticsError> {
    let lap = laplacian(b, ws)?;
    let n = b.matrix_dim();
    let nn = n * n;
    let mut out = MatrixField::zeros(b.grid(), n);
    let mut skew = vec![0.0; nn];
    let mut prod = vec![0.0; nn];
    for ((bm, lm), dst) in b
        .data()
        .chunks_exact(nn)
        .zip(lap.data().chunks_exact(nn))
        .zip(out.data_mut().chunks_exact_mut(nn))
    {
        // skew = 1/2 (L B^t - B L^t)
        for r in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += lm[r * n + k] * bm[c * n + k] - bm[r * n + k] * lm[c * n + k];
                }
                skew[r * n + c] = 0.5 * s;
            }
        }
        linalg::matmul(&skew, bm, n, &mut prod);
        dst.copy_from_slice(&prod);
    }
    Ok(out)
}

fn axpy(y: &MatrixField, alpha: f64, x: &MatrixField) -> MatrixField {
    let mut out = y.clone();
    for (o, v) in out.data_mut().iter_mut().zip(x.data()) {
        *o += alpha * v;
    }
    out
}

/// One classical fourth-order explicit step of the constrained diffusion
/// equation; no internal re-projection, so orthogonality preservation is a
/// measured property of the step.
pub fn on_diffusion_step(
    b: &OrthogonalField,
    dt: f64,
    ws: &SpectralWorkspace,
) -> Result<OrthogonalField, AsymptoticsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(AsymptoticsError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let k1 = constrained_diffusion_rhs(b, ws)?;
    let k2 = constrained_diffusion_rhs(&axpy(b, 0.5 * dt, &k1), ws)?;
    let k3 = constrained_diffusion_rhs(&axpy(b, 0.5 * dt, &k2), ws)?;
    let k4 = constrained_diffusion_rhs(&axpy(b, dt, &k3), ws)?;
    let mut next = b.field().clone();
    for ((((o, a), bb), c), d) in next
        .data_mut()
        .iter_mut()
        .zip(k1.data())
        .zip(k2.data())
        .zip(k3.data())
        .zip(k4.data())
    {
        *o += dt / 6.0 * (a + 2.0 * bb + 2.0 * c + d);
    }
    let defect = next.max_orthogonality_defect();
    if defect > DRIFT_LIMIT {
        return Err(AsymptoticsError::OrthogonalityDrift { defect, limit: DRIFT_LIMIT });
    }
    Ok(OrthogonalField::from_measured(next, defect))
}

#[derive(Debug, Clone)]
pub struct OnDiffusionSnapshot {
    pub step: usize,
    pub time: f64,
    pub field: OrthogonalField,
}

#[derive(Debug, Clone)]
pub struct OnDiffusionTrajectory {
    pub snapshots: Vec<OnDiffusionSnapshot>,
    /// Largest pointwise orthogonality defect seen at each recorded step.
    pub drift: Vec<f64>,
    pub steps: usize,
}

/// Integrate the constrained diffusion equation to `t_end`. With
/// `project_each_step` the iterate is re-projected after every step, trading
/// the drift measurement for long-run stability.
pub fn run_on_diffusion(
    b0: &OrthogonalField,
    dt: f64,
    t_end: f64,
    record_every: usize,
    project_each_step: bool,
    ws: &SpectralWorkspace,
) -> Result<OnDiffusionTrajectory, AsymptoticsError> {
    if record_every == 0 {
        return Err(AsymptoticsError::InvalidParameter("record_every must be at least 1".into()));
    }
    let n_steps = (t_end / dt).round() as usize;
    let mut state = b0.clone();
    let mut snapshots = Vec::new();
    let mut drift = Vec::new();
    snapshots.push(OnDiffusionSnapshot { step: 0, time: 0.0, field: state.clone() });
    drift.push(state.orthogonality_tol());
    for step in 1..=n_steps {
        state = on_diffusion_step(&state, dt, ws)?;
        if project_each_step {
            state = crate::field::project_to_orthogonal(&state)?;
        }
        if step % record_every == 0 || step == n_steps {
            snapshots.push(OnDiffusionSnapshot {
                step,
                time: step as f64 * dt,
                field: state.clone(),
            });
            drift.push(state.orthogonality_tol());
        }
    }
    Ok(OnDiffusionTrajectory { snapshots, drift, steps: n_steps })
}

/// Phase `eta = atan2(B_21, B_11)` unwrapped along a fixed row-major raster
/// (first column, then row by row), recording the winding pair. Works for
/// rotation and reflection blocks alike since they share the first column.
pub fn phase_of(b: &MatrixField) -> Result<PhaseField, AsymptoticsError> {
    use std::f64::consts::PI;
    let grid = b.grid();
    let side = grid.points_per_side();
    let n = b.matrix_dim();
    let raw = |i: usize, j: usize| -> f64 {
        if n == 1 {
            if b.entry(i, j, 0, 0) >= 0.0 {
                0.0
            } else {
                PI
            }
        } else {
            b.entry(i, j, 1, 0).atan2(b.entry(i, j, 0, 0))
        }
    };
    let jump_limit = PI * (1.0 - 1e-6);
    let step = |from: f64, to_raw: f64| -> Result<f64, AsymptoticsError> {
        let d = crate::field::wrap_angle(to_raw - crate::field::wrap_angle(from));
        if d.abs() >= jump_limit {
            return Err(FieldError::AmbiguousWinding { value: d }.into());
        }
        Ok(from + d)
    };
    let mut eta = vec![0.0; grid.num_points()];
    eta[grid.index(0, 0)] = raw(0, 0);
    for j in 1..side {
        eta[grid.index(0, j)] = step(eta[grid.index(0, j - 1)], raw(0, j))?;
    }
    for j in 0..side {
        for i in 1..side {
            eta[grid.index(i, j)] = step(eta[grid.index(i - 1, j)], raw(i, j))?;
        }
    }
    let index = index_pair(b)?;
    Ok(PhaseField { grid, eta, index })
}

/// Grid L2 norm of `(Lap B)^t B - B^t (Lap B)`; zero exactly on harmonic
/// orthogonal fields.
pub fn harmonic_residual(b: &MatrixField, ws: &SpectralWorkspace) -> Result<f64, AsymptoticsError> {
    let lap = laplacian(b, ws)?;
    let n = b.matrix_dim();
    let nn = n * n;
    let mut sum = 0.0;
    for (bm, lm) in b.data().chunks_exact(nn).zip(lap.data().chunks_exact(nn)) {
        for r in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += lm[k * n + r] * bm[k * n + c] - bm[k * n + r] * lm[k * n + c];
                }
                sum += s * s;
            }
        }
    }
    let h = b.grid().spacing();
    Ok((sum * h * h).sqrt())
}

/// The 1-D transition profile across the interface:
/// `B(z) = R(xi1) diag(1, tanh(z / sqrt 2)) R(xi2)^t` with `xi1` and `xi2`
/// the half-sum and half-difference of the side phases. Connects the
/// reflection block at `z -> -inf` to the rotation block at `z -> +inf`.
#[derive(Debug, Clone, Copy)]
pub struct TransitionProfile {
    pub eta_minus: f64,
    pub eta_plus: f64,
}

impl TransitionProfile {
    pub fn new(eta_minus: f64, eta_plus: f64) -> Self {
        TransitionProfile { eta_minus, eta_plus }
    }

    /// Half-sum angle applied on the left.
    pub fn left_angle(&self) -> f64 {
        0.5 * (self.eta_minus + self.eta_plus)
    }

    /// Half-difference angle applied on the right.
    pub fn right_angle(&self) -> f64 {
        0.5 * (self.eta_minus - self.eta_plus)
    }

    fn assemble(&self, diag_first: f64, sigma: f64) -> [f64; 4] {
        let (s1, c1) = self.left_angle().sin_cos();
        let (s2, c2) = self.right_angle().sin_cos();
        [
            c1 * c2 * diag_first + s1 * sigma * s2,
            c1 * s2 * diag_first - s1 * sigma * c2,
            s1 * c2 * diag_first - c1 * sigma * s2,
            s1 * s2 * diag_first + c1 * sigma * c2,
        ]
    }

    pub fn evaluate(&self, z: f64) -> [f64; 4] {
        self.assemble(1.0, (z / std::f64::consts::SQRT_2).tanh())
    }

    /// Analytic `dB/dz`.
    pub fn derivative(&self, z: f64) -> [f64; 4] {
        let sigma = (z / std::f64::consts::SQRT_2).tanh();
        let dsigma = (1.0 - sigma * sigma) / std::f64::consts::SQRT_2;
        self.assemble(0.0, dsigma)
    }

    /// Analytic `d^2B/dz^2`.
    pub fn second_derivative(&self, z: f64) -> [f64; 4] {
        let sigma = (z / std::f64::consts::SQRT_2).tanh();
        let d2sigma = -sigma * (1.0 - sigma * sigma);
        self.assemble(0.0, d2sigma)
    }

    /// Boundary matrix at `z -> -inf`: the reflection block with phase
    /// `eta_minus`.
    pub fn limit_minus(&self) -> [f64; 4] {
        let (s, c) = self.eta_minus.sin_cos();
        [c, s, s, -c]
    }

    /// Boundary matrix at `z -> +inf`: the rotation block with phase
    /// `eta_plus`.
    pub fn limit_plus(&self) -> [f64; 4] {
        let (s, c) = self.eta_plus.sin_cos();
        [c, -s, s, c]
    }

    /// Max over a z-grid of `||B'' - B (B^t B - I)||_F`, the profile ODE
    /// residual; `B''` is analytic and the right side is assembled by
    /// explicit matrix products.
    pub fn ode_residual_max(&self, z_min: f64, z_max: f64, samples: usize) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..samples {
            let z = z_min + (z_max - z_min) * s as f64 / (samples - 1) as f64;
            let b = self.evaluate(z);
            let b2 = self.second_derivative(z);
            let mut g = [0.0; 4];
            linalg::gram(&b, 2, &mut g);
            g[0] -= 1.0;
            g[3] -= 1.0;
            let mut rhs = [0.0; 4];
            linalg::matmul(&b, &g, 2, &mut rhs);
            let mut res = 0.0;
            for k in 0..4 {
                let d = b2[k] - rhs[k];
                res += d * d;
            }
            worst = worst.max(res.sqrt());
        }
        worst
    }

    /// `int ||dB/dz||_F^2 dz` by adaptive quadrature of the analytic
    /// derivative (truncated at `|z| = 40`). Independent of the side phases.
    pub fn gradient_energy(&self) -> f64 {
        let f = |z: f64| {
            let d = self.derivative(z);
            d.iter().map(|x| x * x).sum::<f64>()
        };
        adaptive_simpson(&f, -QUADRATURE_CUTOFF, QUADRATURE_CUTOFF, 1e-13)
    }
}

/// Truncation point for the profile quadratures; the integrand tails decay
/// like `exp(-2 sqrt(2) |z|)`, far below 1e-12 by `|z| = 20` already.
pub const QUADRATURE_CUTOFF: f64 = 40.0;

/// Surface-tension constant `int (1 - tanh^2(z / sqrt 2))^2 dz = 4 sqrt(2) / 3`.
pub fn surface_tension() -> f64 {
    surface_tension_truncated(QUADRATURE_CUTOFF)
}

pub(crate) fn surface_tension_integrand(z: f64) -> f64 {
    let t = (z / std::f64::consts::SQRT_2).tanh();
    let s = 1.0 - t * t;
    s * s
}

pub(crate) fn surface_tension_truncated(cutoff: f64) -> f64 {
    adaptive_simpson(&surface_tension_integrand, -cutoff, cutoff, 1e-13)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fb: f64,
        fc: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let c = 0.5 * (a + b);
        let d = 0.5 * (a + c);
        let e = 0.5 * (c + b);
        let fd = f(d);
        let fe = f(e);
        let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
        let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
                + recurse(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
        }
    }
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    recurse(f, a, b, fa, fb, fc, whole, tol, 40)
}
