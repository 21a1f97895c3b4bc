//! Run configuration: a flat JSON document with explicit physical
//! parameters. No physical defaults; every scheme-relevant number must be
//! spelled out, and fields that the chosen scheme does not use are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::initial::InitialSpec;

#[derive(Debug, Error)]
#[error("config error at `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Mbo,
    Pde,
    Ondiff,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Mbo => "mbo",
            Scheme::Pde => "pde",
            Scheme::Ondiff => "ondiff",
        }
    }
}

fn default_record_every() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// The resolved run configuration; serializing it back yields a document
/// that reproduces the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `mbo` (diffusion-generated projection scheme), `pde` (IMEX
    /// integrator) or `ondiff` (constrained diffusion flow).
    pub scheme: String,
    pub grid_points: usize,
    pub matrix_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    pub initial_condition: InitialSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_true")]
    pub analyze_interface: bool,
    #[serde(default = "default_true")]
    pub analyze_index: bool,
    #[serde(default = "default_true")]
    pub analyze_energy: bool,
    #[serde(default)]
    pub render_frames: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("<document>", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn scheme(&self) -> Result<Scheme, ConfigError> {
        match self.scheme.as_str() {
            "mbo" => Ok(Scheme::Mbo),
            "pde" => Ok(Scheme::Pde),
            "ondiff" => Ok(Scheme::Ondiff),
            other => Err(ConfigError::new(
                "scheme",
                format!("unknown scheme `{other}`; expected one of mbo, pde, ondiff"),
            )),
        }
    }

    /// Full cross-field validation with field-level messages.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let scheme = self.scheme()?;
        if self.grid_points < 2 {
            return Err(ConfigError::new("grid_points", "need at least 2 points per side"));
        }
        if self.grid_points % 2 != 0 {
            return Err(ConfigError::new(
                "grid_points",
                "the spectral transforms need an even grid size",
            ));
        }
        if self.matrix_dim == 0 {
            return Err(ConfigError::new("matrix_dim", "matrix dimension must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(ConfigError::new("record_every", "must be at least 1"));
        }

        let require = |field: &str, present: bool| -> Result<(), ConfigError> {
            if present {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("required for scheme {}", scheme.name())))
            }
        };
        let forbid = |field: &str, absent: bool| -> Result<(), ConfigError> {
            if absent {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("not used by scheme {}", scheme.name())))
            }
        };
        match scheme {
            Scheme::Mbo => {
                require("tau", self.tau.is_some())?;
                require("tol", self.tol.is_some())?;
                require("max_iters", self.max_iters.is_some())?;
                forbid("epsilon", self.epsilon.is_none())?;
                forbid("dt", self.dt.is_none())?;
                forbid("t_end", self.t_end.is_none())?;
                let tau = self.tau.unwrap();
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(ConfigError::new("tau", "must be a positive time step"));
                }
                if !(self.tol.unwrap() > 0.0) {
                    return Err(ConfigError::new("tol", "must be positive"));
                }
                if self.max_iters.unwrap() == 0 {
                    return Err(ConfigError::new("max_iters", "must be at least 1"));
                }
            }
            Scheme::Pde | Scheme::Ondiff => {
                require("epsilon", self.epsilon.is_some())?;
                require("dt", self.dt.is_some())?;
                require("t_end", self.t_end.is_some())?;
                forbid("tau", self.tau.is_none())?;
                forbid("tol", self.tol.is_none())?;
                forbid("max_iters", self.max_iters.is_none())?;
                let eps = self.epsilon.unwrap();
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(ConfigError::new("epsilon", "must be positive"));
                }
                let dt = self.dt.unwrap();
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(ConfigError::new("dt", "must be a positive time step"));
                }
                if !(self.t_end.unwrap() >= 0.0) {
                    return Err(ConfigError::new("t_end", "must be nonnegative"));
                }
                if scheme == Scheme::Pde && dt > 0.1 * eps * eps * (1.0 + 1e-12) {
                    return Err(ConfigError::new(
                        "dt",
                        format!("must satisfy dt <= 0.1 epsilon^2 = {}", 0.1 * eps * eps),
                    ));
                }
            }
        }
        self.initial_condition.validate(self.matrix_dim)?;
        if matches!(self.initial_condition, InitialSpec::Random {}) && self.seed.is_none() {
            return Err(ConfigError::new("seed", "required for the random initial condition"));
        }
        if self.output_dir.is_none() {
            return Err(ConfigError::new(
                "output_dir",
                "missing; set it in the config or pass --out",
            ));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> &Path {
        self.output_dir.as_deref().expect("validated config has an output dir")
    }
}
