use serde_json::{json, Value};
use thiserror::Error;

/// Which side of a table a label or index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Col,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Col => f.write_str("column"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("{axis} `{label}` has a zero margin")]
    ZeroMargin { axis: Axis, label: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown {axis} label `{label}`")]
    UnknownLabel { axis: Axis, label: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate cell set: {0}")]
    DegenerateCellSet(String),

    #[error("reconstitution produced negative value {value} in cell ({row}, {col})")]
    NegativeImputation {
        row: String,
        col: String,
        value: f64,
    },

    #[error(
        "reconstitution did not converge in {iterations} iterations (last change {last_change:e})"
    )]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        trace: Vec<f64>,
    },

    #[error("removing supplementary points empties rows {rows:?} and columns {cols:?}")]
    DegenerateReduction {
        rows: Vec<String>,
        cols: Vec<String>,
    },

    #[error("supplementary {axis} `{label}` has no mass on the retained categories")]
    UnprojectablePoint { axis: Axis, label: String },
}

impl Error {
    /// Stable machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "InvalidMatrix",
            Error::Shape(_) => "ShapeError",
            Error::Index(_) => "IndexError",
            Error::ZeroMargin { .. } => "ZeroMargin",
            Error::Parse { .. } => "ParseError",
            Error::UnknownLabel { .. } => "UnknownLabel",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::DegenerateCellSet(_) => "DegenerateCellSet",
            Error::NegativeImputation { .. } => "NegativeImputation",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::DegenerateReduction { .. } => "DegenerateReduction",
            Error::UnprojectablePoint { .. } => "UnprojectablePoint",
        }
    }

    /// True for failures caused by malformed input rather than by the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::UnknownLabel { .. } | Error::InvalidConfig(_)
        )
    }

    /// JSON payload carrying the error kind, message and any structured detail.
    pub fn payload(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        let detail = match self {
            Error::ZeroMargin { axis, label } => json!({ "axis": axis, "label": label }),
            Error::Parse { line, column, .. } => json!({ "line": line, "column": column }),
            Error::UnknownLabel { axis, label } => json!({ "axis": axis, "label": label }),
            Error::NegativeImputation { row, col, value } => {
                json!({ "row": row, "col": col, "value": value })
            }
            Error::NonConvergence {
                iterations,
                last_change,
                trace,
            } => json!({ "iterations": iterations, "last_change": last_change, "trace": trace }),
            Error::DegenerateReduction { rows, cols } => json!({ "rows": rows, "cols": cols }),
            Error::UnprojectablePoint { axis, label } => json!({ "axis": axis, "label": label }),
            _ => Value::Null,
        };
        if !detail.is_null() {
            v["detail"] = detail;
        }
        v
    }
}

pub type Result<T> = std::result::Result<T, Error>;
