use crate::ca::CaSolution;
use crate::diagnostics::OutlierReport;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::reconstitution::ReconstitutionResult;
use crate::supplementary::{SupplementarySolution, SupplementarySpec};
use crate::table::ContingencyTable;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Masses {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub row: String,
    pub col: String,
    pub original: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstitutionSection {
    pub cells: Vec<CellEntry>,
    pub order_requested: usize,
    pub order: usize,
    pub iterations_used: usize,
    pub converged: bool,
    pub fallback_applied: bool,
    pub advisories: Vec<String>,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplementarySection {
    pub spec: SupplementarySpec,
    pub reduced_shape: (usize, usize),
    pub rows: BTreeMap<String, Vec<f64>>,
    pub cols: BTreeMap<String, Vec<f64>>,
}

/// JSON view of a CA solution and whatever was computed alongside it.
/// Matrices are stored as arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub schema: u32,
    pub labels: Labels,
    pub masses: Masses,
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub null_sigma: Vec<f64>,
    /// Percent of total inertia, one decimal.
    pub inertia_proportions: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub total_inertia: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<OutlierReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstitution: Option<ReconstitutionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supplementary: Option<SupplementarySection>,
    /// Reserved for comparisons against results from other tools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_comparison: Option<serde_json::Value>,
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

fn matrix_of(rows: &[Vec<f64>], n: usize, k: usize, name: &str) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != k) {
        return Err(Error::Shape(format!("`{name}` is not {n}x{k}")));
    }
    Matrix::from_row_major(n, k, rows.concat())
}

impl SolutionDocument {
    pub fn new(t: &ContingencyTable, sol: &CaSolution) -> Self {
        SolutionDocument {
            schema: SCHEMA_VERSION,
            labels: Labels {
                rows: t.row_labels().to_vec(),
                cols: t.col_labels().to_vec(),
            },
            masses: Masses {
                rows: sol.row_masses.clone(),
                cols: sol.col_masses.clone(),
            },
            sigma: sol.sigma.clone(),
            null_sigma: sol.null_sigma.clone(),
            inertia_proportions: sol
                .inertia_proportions
                .iter()
                .map(|p| (p * 1000.0).round() / 10.0)
                .collect(),
            phi: rows_of(&sol.phi),
            gamma: rows_of(&sol.gamma),
            f: rows_of(&sol.f),
            g: rows_of(&sol.g),
            total_inertia: sol.total_inertia,
            diagnostics: None,
            reconstitution: None,
            supplementary: None,
            external_comparison: None,
        }
    }

    /// Attaches a report; an empty one leaves the field out.
    pub fn with_diagnostics(mut self, report: OutlierReport) -> Self {
        self.diagnostics = (!report.is_empty()).then_some(report);
        self
    }

    /// Document of the imputed table's CA with the imputation details.
    pub fn from_reconstitution(res: &ReconstitutionResult) -> Self {
        let t = &res.table;
        let mut doc = SolutionDocument::new(t, &res.solution);
        doc.reconstitution = Some(ReconstitutionSection {
            cells: res
                .cells
                .iter()
                .map(|c| CellEntry {
                    row: t.row_labels()[c.row].clone(),
                    col: t.col_labels()[c.col].clone(),
                    original: c.original,
                    value: c.value,
                })
                .collect(),
            order_requested: res.order_requested,
            order: res.order_used,
            iterations_used: res.iterations_used,
            converged: res.converged,
            fallback_applied: res.fallback_applied,
            advisories: res.advisories.clone(),
            trace: res.trace.clone(),
        });
        doc
    }

    /// Document of the reduced table's CA with the projected points.
    pub fn from_supplementary(s: &SupplementarySolution) -> Self {
        let mut doc = SolutionDocument::new(&s.reduced, &s.base);
        doc.supplementary = Some(SupplementarySection {
            spec: s.spec.clone(),
            reduced_shape: s.reduced_shape,
            rows: s.sup_row_coords.clone(),
            cols: s.sup_col_coords.clone(),
        });
        doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SolutionDocument = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema version {}",
                doc.schema
            )));
        }
        Ok(doc)
    }

    /// Rebuilds the coordinate matrices. Inertia proportions are recomputed
    /// from `sigma` since the stored ones are rounded.
    pub fn solution(&self) -> Result<CaSolution> {
        let (ni, nj, k) = (
            self.labels.rows.len(),
            self.labels.cols.len(),
            self.sigma.len(),
        );
        let proportions = self
            .sigma
            .iter()
            .map(|s| {
                if self.total_inertia > 0.0 {
                    s * s / self.total_inertia
                } else {
                    0.0
                }
            })
            .collect();
        Ok(CaSolution {
            sigma: self.sigma.clone(),
            null_sigma: self.null_sigma.clone(),
            phi: matrix_of(&self.phi, ni, k, "phi")?,
            gamma: matrix_of(&self.gamma, nj, k, "gamma")?,
            f: matrix_of(&self.f, ni, k, "f")?,
            g: matrix_of(&self.g, nj, k, "g")?,
            row_masses: self.masses.rows.clone(),
            col_masses: self.masses.cols.clone(),
            total_inertia: self.total_inertia,
            inertia_proportions: proportions,
            rank: k,
            rank_zero: k == 0,
        })
    }
}
