use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: at least {min} required")]
    InvalidDimension { dim: usize, min: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver failed to converge after {0} iterations")]
    EigenNoConvergence(usize),

    #[error("truncation not converged at dim {dim}: relative change {rel_change:e}")]
    Convergence { dim: usize, rel_change: f64 },

    #[error("validity: {0}")]
    Validity(String),

    #[error("material `{material}` is missing `{field}`")]
    IncompleteMaterial { material: String, field: &'static str },

    #[error("ambiguous resonance: {count} candidate features in sweep")]
    AmbiguousResonance { count: usize },

    #[error("bistable response: low-amplitude branch at {low_branch_hz:e} Hz, high-amplitude branch at {high_branch_hz:e} Hz")]
    Bifurcation { low_branch_hz: f64, high_branch_hz: f64 },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last f0 = {last_hz:e} Hz)")]
    FixedPointNoConvergence { iterations: usize, last_hz: f64 },

    #[error("invalid {family} mode index ({m}, {n}, {p})")]
    ModeIndex { family: String, m: u32, n: u32, p: u32 },

    #[error("target {f_target:e} Hz is not below the empty-cavity mode at {f_empty:e} Hz")]
    UnreachableLoading { f_target: f64, f_empty: f64 },

    #[error("config validation failed:\n  {}", .0.join("\n  "))]
    ConfigValidation(Vec<String>),

    #[error("unknown material `{name}`; available: {}", .available.join(", "))]
    UnknownMaterial { name: String, available: Vec<String> },

    #[error("{}: {message}", .path.display())]
    Io { path: PathBuf, message: String },
}

/// Per-point failure classification used by sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReasonCode {
    Validity,
    Convergence,
    Bifurcation,
    Domain,
}

impl ReasonCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReasonCode::Validity => "validity",
            ReasonCode::Convergence => "convergence",
            ReasonCode::Bifurcation => "bifurcation",
            ReasonCode::Domain => "domain",
        }
    }
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Error {
    pub fn reason_code(&self) -> ReasonCode {
        match self {
            Error::Validity(_) => ReasonCode::Validity,
            Error::Convergence { .. } | Error::EigenNoConvergence(_) => ReasonCode::Convergence,
            Error::Bifurcation { .. } | Error::FixedPointNoConvergence { .. } => ReasonCode::Bifurcation,
            _ => ReasonCode::Domain,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: impl fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

/// How soft validity limits are enforced.
///
/// `Soft` logs a warning and carries on; `Strict` turns the same condition
/// into [`Error::Validity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validity {
    #[default]
    Soft,
    Strict,
}

impl Validity {
    pub(crate) fn check(self, ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
        if ok {
            return Ok(());
        }
        match self {
            Validity::Soft => {
                log::warn!("{}", msg());
                Ok(())
            }
            Validity::Strict => Err(Error::Validity(msg())),
        }
    }
}

pub(crate) fn ensure_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be finite, got {v}")));
        }
    }
    Ok(())
}

pub(crate) fn ensure_positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}
