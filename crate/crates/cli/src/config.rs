use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use velgrad_core::flowfields::ScfParams;
use velgrad_core::inversion::Solver;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Usage(String),
    /// Failure while running a valid configuration; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<velgrad_core::Error> for CliError {
    fn from(e: velgrad_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Reads a JSON config, or the default when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

/// Where sample tensors come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowSource {
    /// Random tensors with per-irrep amplitudes.
    Ensemble { amp_v0: f64, amp_v1: f64, amp_v2: f64 },
    /// Strided points of a spherical Couette mid-plane grid.
    Scf { params: ScfParams, z0: f64, nx: usize, ny: usize },
}

impl Default for FlowSource {
    fn default() -> Self {
        FlowSource::Ensemble {
            amp_v0: 0.0,
            amp_v1: 1.0,
            amp_v2: 1.0,
        }
    }
}

impl FlowSource {
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            FlowSource::Ensemble { amp_v0, amp_v1, amp_v2 } => {
                let amps = [*amp_v0, *amp_v1, *amp_v2];
                if amps.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return Err(usage(format!("ensemble amplitudes must be finite and >= 0, got {amps:?}")));
                }
                if amps.iter().all(|a| *a == 0.0) {
                    return Err(usage("at least one ensemble amplitude must be positive"));
                }
            }
            FlowSource::Scf { params, nx, ny, .. } => {
                params.validate().map_err(|e| usage(e.to_string()))?;
                if *nx < 1 || *ny < 1 {
                    return Err(usage("scf grid needs nx, ny >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// `--estimator`/`--lambda`/`--tol` on top of a configured solver.
pub fn override_solver(
    solver: Solver,
    estimator: Option<&str>,
    lambda: Option<f64>,
    tol: Option<f64>,
) -> Result<Solver, CliError> {
    let kind = match estimator {
        Some(k) => k,
        None => match solver {
            Solver::MinNorm { .. } => "min_norm",
            Solver::Tikhonov { .. } => "tikhonov",
        },
    };
    match kind {
        "min_norm" => {
            if lambda.is_some() {
                return Err(usage("--lambda only applies to the tikhonov estimator"));
            }
            let current = match solver {
                Solver::MinNorm { tol } => tol,
                Solver::Tikhonov { .. } => None,
            };
            Ok(Solver::MinNorm { tol: tol.or(current) })
        }
        "tikhonov" => {
            let current = match solver {
                Solver::Tikhonov { lambda } => Some(lambda),
                Solver::MinNorm { .. } => None,
            };
            let lambda = lambda
                .or(current)
                .ok_or_else(|| usage("the tikhonov estimator needs --lambda (or solver.lambda in the config)"))?;
            Ok(Solver::Tikhonov { lambda })
        }
        other => Err(usage(format!("unknown estimator '{other}', expected min_norm or tikhonov"))),
    }
}

pub fn validate_solver(solver: &Solver) -> Result<(), CliError> {
    match *solver {
        Solver::MinNorm { tol: Some(t) } if !(t > 0.0 && t.is_finite()) => {
            Err(usage(format!("min_norm tol must be > 0, got {t}")))
        }
        Solver::Tikhonov { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
            Err(usage(format!("tikhonov lambda must be > 0, got {lambda}")))
        }
        _ => Ok(()),
    }
}
