//! Error taxonomy shared by every module.
//!
//! The variants mirror the failure modes of the numerical pipeline: domain
//! violations (a point outside Ω_c, x ≤ 0 where a boundary weight is needed),
//! argument errors (a coincident-point weight evaluation without a direction),
//! accuracy failures of adaptive quadrature, and structural problems with
//! files and grids.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A point or parameter lies outside the region an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-supplied argument is structurally invalid.
    #[error("argument error: {0}")]
    Argument(String),

    /// Input data failed validation against its own description.
    #[error("validation error: {0}")]
    Validation(String),

    /// The metric or another field evaluator produced a non-finite value.
    #[error("integration error at ({x}, {y}): {what}")]
    Integration { x: f64, y: f64, what: String },

    /// Adaptive quadrature exhausted its refinement budget. The best estimate
    /// travels with the error so callers can decide whether to accept it.
    #[error("accuracy error: {what} (best estimate {best:e}, last change {change:e})")]
    Accuracy { what: String, best: f64, change: f64 },

    /// The convexity certificate failed: a symbol or kernel needs α > 0.
    #[error("convexity violation: {0}")]
    Convexity(String),

    /// A layer-stripping slab is not covered by any usable ray.
    #[error("coverage error: slab {slab} ({lo:.4} ≤ x̃ ≤ {hi:.4}) has no rays reaching it")]
    Coverage { slab: usize, lo: f64, hi: f64 },

    /// A nonzero phantom produced a numerically zero transform: the
    /// injectivity the whole inversion rests on failed empirically. Drivers
    /// treat this as a reportable failure, not a usage error.
    #[error("injectivity alarm: {0}")]
    Injectivity(String),

    /// Grid payload size disagrees with its header.
    #[error("truncated payload in {path}: expected {expected} bytes, found {actual}")]
    TruncatedPayload {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    /// Header text could not be parsed.
    #[error("parse error in {path} at line {line}, column {column}: {msg}")]
    HeaderParse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },

    /// Grid shape does not match an operation's expectation.
    #[error("shape error: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
