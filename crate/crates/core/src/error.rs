use std::fmt;

use crate::config::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {}", ViolationList(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("{what}: argument {value} outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("cutoff N = {n} is too small; need N >= {required} ({reason})")]
    CutoffTooSmall {
        n: usize,
        required: usize,
        reason: &'static str,
    },

    #[error("quadrature did not converge: last relative change {achieved:e} after {order} nodes")]
    Quadrature { achieved: f64, order: usize },

    #[error("time step {step} exceeds the stability limit {limit}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("state left the physical region at Γt = {time}: {detail}")]
    Invariant { time: f64, detail: String },

    #[error("steady state not converged (residual {residual:e}); pass force to use it anyway")]
    Unconverged { residual: f64 },

    #[error("weak-field cavity denominator |1 - R²e^(2ikL)| = {modulus:e} is singular")]
    Pole { modulus: f64 },

    #[error("sum cache does not cover {what}: need {needed}, have {available}")]
    CacheCoverage {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("unknown {what} '{name}'")]
    UnknownName { what: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
