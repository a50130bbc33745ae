use std::fmt;

use thiserror::Error;

/// Which integration sweep produced a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Forward,
    Adjoint,
    Update,
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sweep::Forward => "forward",
            Sweep::Adjoint => "adjoint",
            Sweep::Update => "update",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructor or operation received data that violates its invariants.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two sampled signals were expected to share a grid but do not.
    #[error("grid mismatch: expected {expected} samples, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    /// A parameter triple of the wrong kind was supplied.
    #[error("parameter kind mismatch: expected {expected}, got {actual}")]
    KindMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    /// NaN or overflow during time stepping. `step` is the first bad node.
    #[error("{sweep} divergence at step {step}{}", fmt_iteration(*.iteration))]
    Divergence {
        sweep: Sweep,
        step: usize,
        iteration: Option<usize>,
    },

    /// The adjoint gradient vanished while the residual did not.
    #[error("zero gradient with residual {residual} at iteration {iteration}")]
    ZeroGradient { residual: f64, iteration: usize },
}

fn fmt_iteration(iteration: Option<usize>) -> String {
    iteration
        .map(|k| format!(" (iteration {k})"))
        .unwrap_or_default()
}

impl Error {
    /// Attaches a Landweber iteration index to a divergence error.
    pub(crate) fn at_iteration(self, k: usize) -> Self {
        match self {
            Error::Divergence { sweep, step, .. } => Error::Divergence {
                sweep,
                step,
                iteration: Some(k),
            },
            Error::ZeroGradient { residual, .. } => Error::ZeroGradient {
                residual,
                iteration: k,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
