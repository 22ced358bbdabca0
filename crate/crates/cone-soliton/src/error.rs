//! Crate-wide error type.
//!
//! Validation failures (bad input shape, parse errors) and numerical aborts
//! (indefinite metrics, degenerate linear solves) share one enum; the CLI
//! maps the two groups onto distinct exit codes.

use thiserror::Error;

/// Byte-precise description of a rejected expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDetail {
    /// Byte offset into the source string where the error was detected.
    pub offset: usize,
    /// Tokens that would have been accepted at this position.
    pub expected: Vec<String>,
    /// What was actually found (rendered for the message).
    pub found: String,
}

impl std::fmt::Display for ParseDetail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" | "),
            self.found
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: metric is not positive definite (min eigenvalue {min_eig:.3e} at {location})")]
    NonPositiveDefinite {
        context: &'static str,
        min_eig: f64,
        location: String,
    },

    #[error("unsupported dimension {dim}: {reason}")]
    BadDimension { dim: usize, reason: String },

    #[error("expression parse error {0}")]
    Parse(ParseDetail),

    #[error("division by zero while evaluating expression at bytes {span_start}..{span_end}")]
    DivisionByZero { span_start: usize, span_end: usize },

    #[error("{op}: rank mismatch (expected {expected}, found {found})")]
    RankMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("{op}: resulting tensor rank {rank} exceeds the supported maximum {max}")]
    RankOverflow {
        op: &'static str,
        rank: usize,
        max: usize,
    },

    #[error("{context}: tensor is not symmetric (max deviation {deviation:.3e})")]
    NotSymmetric {
        context: &'static str,
        deviation: f64,
    },

    #[error("series coefficient at exponent {requested} requested below the truncation floor {floor}")]
    FloorUnderflow { requested: i32, floor: i32 },

    #[error("order {order}: linear solve divisor {divisor:.3e} is numerically degenerate")]
    DegenerateDivisor { order: usize, divisor: f64 },

    #[error("order {order}: probe response is not a scalar multiple of the probe (relative deviation {deviation:.3e})")]
    NonlinearResponse { order: usize, deviation: f64 },

    #[error("constraint residual is identically zero; no decay slope to fit")]
    AllZeroResidual,

    #[error("integration step rejected near r = {r}: state changed by {rel_change:.3e} in one step")]
    StepTooLarge { r: f64, rel_change: f64 },

    #[error("constant-frame field leaves the homogeneous block family (deviation {deviation:.3e})")]
    OffFamily { deviation: f64 },

    #[error("{context}: {message}")]
    Invalid {
        context: &'static str,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that indicate malformed input rather than a numerical
    /// failure discovered mid-computation. The CLI exits with 2 for the
    /// former and 3 for the latter.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::BadDimension { .. }
                | Error::Parse(_)
                | Error::RankMismatch { .. }
                | Error::RankOverflow { .. }
                | Error::NotSymmetric { .. }
                | Error::Invalid { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
