use thiserror::Error;

/// Errors raised across the crate. Infeasibility of a model is usually a
/// reported state rather than an error; the `Infeasible` variant is only used
/// by operations whose contract requires a feasible input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("row {row}: field `{field}`: {message}")]
    Row {
        row: usize,
        field: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("frame construction did not converge (norm {norm:.3e}, orthogonality {orth:.3e}, born {born:.3e})")]
    NonConvergence { norm: f64, orth: f64, born: f64 },

    #[error("record is not classical: {}", format_violations(.0))]
    NotClassical(Vec<crate::classicality::Violation>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[crate::classicality::Violation]) -> String {
    v.iter()
        .map(|x| format!("{} (residual {:+.4})", x.condition, x.residual))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
