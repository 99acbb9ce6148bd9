use crate::error::{Axis, Error, Result};
use crate::linalg::Matrix;
use std::collections::HashSet;

/// A labeled two-way table of nonnegative counts or incidences.
///
/// Every row and column margin is strictly positive and labels are unique
/// within each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    x: Matrix,
    grand_total: f64,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, x: Matrix) -> Result<Self> {
        if row_labels.len() != x.rows() || col_labels.len() != x.cols() {
            return Err(Error::Shape(format!(
                "{} row labels and {} column labels for a {}x{} matrix",
                row_labels.len(),
                col_labels.len(),
                x.rows(),
                x.cols()
            )));
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::InvalidMatrix(
                "table has no rows or no columns".into(),
            ));
        }
        check_unique(&row_labels, Axis::Row)?;
        check_unique(&col_labels, Axis::Col)?;
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                if x[(i, j)] < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "negative entry {} in cell ({}, {})",
                        x[(i, j)],
                        row_labels[i],
                        col_labels[j]
                    )));
                }
            }
        }
        check_margins(&x, &row_labels, &col_labels)?;
        let grand_total = x.sum();
        Ok(ContingencyTable {
            row_labels,
            col_labels,
            x,
            grand_total,
        })
    }

    /// Builds a table with labels `1..=I` for rows and `a, b, ...` for columns.
    pub fn unlabeled(x: Matrix) -> Result<Self> {
        let rows = (1..=x.rows()).map(|i| i.to_string()).collect();
        let cols = (0..x.cols()).map(column_letter).collect();
        ContingencyTable::new(rows, cols, x)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        ContingencyTable::unlabeled(Matrix::from_rows(rows)?)
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn grand_total(&self) -> f64 {
        self.grand_total
    }

    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.cols()
    }

    pub fn row_margins(&self) -> Vec<f64> {
        self.x.row_sums()
    }

    pub fn col_margins(&self) -> Vec<f64> {
        self.x.col_sums()
    }

    pub fn row_index(&self, label: &str) -> Result<usize> {
        self.row_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                axis: Axis::Row,
                label: label.to_string(),
            })
    }

    pub fn col_index(&self, label: &str) -> Result<usize> {
        self.col_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                axis: Axis::Col,
                label: label.to_string(),
            })
    }

    /// Same labels, new entries. Validation is re-run on the new matrix.
    pub fn with_entries(&self, x: Matrix) -> Result<Self> {
        ContingencyTable::new(self.row_labels.clone(), self.col_labels.clone(), x)
    }

    /// Keeps the listed rows and columns in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        ContingencyTable::new(
            rows.iter().map(|&i| self.row_labels[i].clone()).collect(),
            cols.iter().map(|&j| self.col_labels[j].clone()).collect(),
            self.x.select(rows, cols),
        )
    }

    /// Drops rows and columns whose margins are zero. Rows are dropped first,
    /// which cannot empty a column that had mass.
    pub fn drop_empty(row_labels: Vec<String>, col_labels: Vec<String>, x: Matrix) -> Result<Self> {
        let rs = x.row_sums();
        let cs = x.col_sums();
        let rows: Vec<usize> = (0..x.rows()).filter(|&i| rs[i] > 0.0).collect();
        let cols: Vec<usize> = (0..x.cols()).filter(|&j| cs[j] > 0.0).collect();
        ContingencyTable::new(
            rows.iter().map(|&i| row_labels[i].clone()).collect(),
            cols.iter().map(|&j| col_labels[j].clone()).collect(),
            x.select(&rows, &cols),
        )
    }
}

pub(crate) fn check_margins(x: &Matrix, rows: &[String], cols: &[String]) -> Result<()> {
    if let Some(i) = x.row_sums().iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroMargin {
            axis: Axis::Row,
            label: rows[i].clone(),
        });
    }
    if let Some(j) = x.col_sums().iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroMargin {
            axis: Axis::Col,
            label: cols[j].clone(),
        });
    }
    Ok(())
}

fn check_unique(labels: &[String], axis: Axis) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::InvalidMatrix(format!(
                "duplicate {axis} label `{l}`"
            )));
        }
    }
    Ok(())
}

fn column_letter(j: usize) -> String {
    let mut s = String::new();
    let mut n = j + 1;
    while n > 0 {
        let r = (n - 1) % 26;
        s.insert(0, (b'a' + r as u8) as char);
        n = (n - 1) / 26;
    }
    s
}
