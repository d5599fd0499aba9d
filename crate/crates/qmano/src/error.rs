//! Error type shared by all modules.

use crate::C64;
use thiserror::Error;

/// Result alias used throughout the crate.
pub type QResult<T> = Result<T, QError>;

/// Failures reported by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or iteration exceeded its budget.
    #[error("convergence failure: {0}")]
    Convergence(String),
    /// Evaluation hit a pole; `x` is the offending point.
    #[error("pole at x = {x} (on the q-spiral {spiral})")]
    Pole { x: C64, spiral: String },
    /// Two objects live in incompatible spaces.
    #[error("incompatible spaces: {0}")]
    Incompatible(String),
    /// Zero finding did not produce a certified answer.
    #[error("root finding failed: {0}")]
    RootFinding(String),
    /// Several answers fit within tolerance.
    #[error("ambiguous result: {0}")]
    Ambiguous(String),
    /// A matrix or function degenerated (for instance an identically zero determinant).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A Mano decomposition could not be verified.
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    /// Data contradicts a structural property that should hold.
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
}
