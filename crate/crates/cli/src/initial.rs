//! Initial-condition generators: a closed catalog of named forms rather
//! than an expression language, so reproduction configs stay auditable.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use mvac::field::{reflection_field, rotation_field, MatrixField};
use mvac::grid::Grid;

use crate::config::ConfigError;

/// Phase expression `constant + 2 pi (l1 x1 + l2 x2) + a sin(2 pi (w1 x1 + w2 x2))`.
///
/// The linear part uses integer windings so the field closes up around the
/// torus; the sinusoidal part covers the wave-perturbed cases.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EtaSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub linear: [i64; 2],
    #[serde(default)]
    pub sin_amplitude: f64,
    #[serde(default)]
    pub sin_wave: [i64; 2],
}

impl EtaSpec {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        use std::f64::consts::PI;
        let linear = 2.0 * PI * (self.linear[0] as f64 * x1 + self.linear[1] as f64 * x2);
        let wave = 2.0 * PI * (self.sin_wave[0] as f64 * x1 + self.sin_wave[1] as f64 * x2);
        self.constant + linear + self.sin_amplitude * wave.sin()
    }

    pub fn linear_windings(n1: i64, n2: i64) -> Self {
        EtaSpec { linear: [n1, n2], ..Default::default() }
    }
}

/// The generator catalog.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Constant rotation block (or `+-1` for scalar fields with
    /// `reflection` selecting the sign).
    Uniform {
        #[serde(default)]
        eta: f64,
        #[serde(default)]
        reflection: bool,
    },
    /// Rotation block with the given phase everywhere.
    Rotation { eta: EtaSpec },
    /// Rotation block inside `r < radius + wobble_amplitude sin(wobble_mode theta)`,
    /// reflection block outside; both share the phase.
    DiskDefect {
        eta: EtaSpec,
        radius: f64,
        #[serde(default)]
        wobble_amplitude: f64,
        #[serde(default)]
        wobble_mode: u32,
    },
    /// Rotation block with `eta_outer` where `|x2| > half_width`, reflection
    /// block with `eta_inner` inside the strip.
    StripDefect {
        eta_outer: EtaSpec,
        eta_inner: EtaSpec,
        half_width: f64,
    },
    /// Independent entries uniform in `[-1, 1]`, fully determined by the
    /// 64-bit seed.
    Random {},
}

impl InitialSpec {
    pub fn validate(&self, matrix_dim: usize) -> Result<(), ConfigError> {
        let field = "initial_condition";
        match self {
            InitialSpec::Uniform { eta, reflection: _ } => {
                if matrix_dim != 2 && *eta != 0.0 {
                    return Err(ConfigError::new(
                        field,
                        "uniform generator supports a phase only for 2x2 fields",
                    ));
                }
            }
            InitialSpec::Rotation { .. } => {
                if matrix_dim != 2 {
                    return Err(ConfigError::new(field, "rotation generator needs matrix_dim = 2"));
                }
            }
            InitialSpec::DiskDefect { radius, wobble_amplitude, .. } => {
                if matrix_dim != 2 {
                    return Err(ConfigError::new(field, "disk_defect generator needs matrix_dim = 2"));
                }
                if !(*radius > 0.0 && radius + wobble_amplitude.abs() < 0.5) {
                    return Err(ConfigError::new(
                        field,
                        "disk radius (plus wobble) must lie inside (0, 0.5)",
                    ));
                }
            }
            InitialSpec::StripDefect { half_width, .. } => {
                if matrix_dim != 2 {
                    return Err(ConfigError::new(field, "strip_defect generator needs matrix_dim = 2"));
                }
                if !(*half_width > 0.0 && *half_width < 0.5) {
                    return Err(ConfigError::new(field, "half_width must lie in (0, 0.5)"));
                }
            }
            InitialSpec::Random {} => {}
        }
        Ok(())
    }
}

/// Build the initial field; the formulas hold exactly at grid points.
pub fn generate_initial(
    spec: &InitialSpec,
    grid: Grid,
    matrix_dim: usize,
    seed: u64,
) -> Result<MatrixField, ConfigError> {
    spec.validate(matrix_dim)?;
    Ok(match spec {
        InitialSpec::Uniform { eta, reflection } => {
            if matrix_dim == 2 {
                if *reflection {
                    reflection_field(grid, |_, _| *eta)
                } else {
                    rotation_field(grid, |_, _| *eta)
                }
            } else {
                let mut m = vec![0.0; matrix_dim * matrix_dim];
                let sign = if *reflection { -1.0 } else { 1.0 };
                for d in 0..matrix_dim {
                    m[d * matrix_dim + d] = if d == matrix_dim - 1 { sign } else { 1.0 };
                }
                MatrixField::constant(grid, matrix_dim, &m)
            }
        }
        InitialSpec::Rotation { eta } => rotation_field(grid, |x1, x2| eta.eval(x1, x2)),
        InitialSpec::DiskDefect { eta, radius, wobble_amplitude, wobble_mode } => {
            MatrixField::from_matrix_fn(grid, 2, |x1, x2, m| {
                let r = x1.hypot(x2);
                let theta = x2.atan2(x1);
                let boundary = radius + wobble_amplitude * (*wobble_mode as f64 * theta).sin();
                let (s, c) = eta.eval(x1, x2).sin_cos();
                if r < boundary {
                    m.copy_from_slice(&[c, -s, s, c]);
                } else {
                    m.copy_from_slice(&[c, s, s, -c]);
                }
            })
        }
        InitialSpec::StripDefect { eta_outer, eta_inner, half_width } => {
            MatrixField::from_matrix_fn(grid, 2, |x1, x2, m| {
                if x2.abs() > *half_width {
                    let (s, c) = eta_outer.eval(x1, x2).sin_cos();
                    m.copy_from_slice(&[c, -s, s, c]);
                } else {
                    let (s, c) = eta_inner.eval(x1, x2).sin_cos();
                    m.copy_from_slice(&[c, s, s, -c]);
                }
            })
        }
        InitialSpec::Random {} => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            MatrixField::from_matrix_fn(grid, matrix_dim, |_, _, m| {
                for v in m.iter_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            })
        }
    })
}
