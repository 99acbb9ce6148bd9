//! Reconstitution of order `h` for cell-wise outliers.
//!
//! Flagged cells are treated as missing and re-imputed until each one is
//! reproduced exactly by the `h`-dimensional reconstitution formula of the
//! table it sits in:
//!
//! ```text
//! x_mn <- (x_m+ x_+n / x_++) * (1 + sum_{k<=h} phi_mk sigma_k gamma_nk)
//! ```
//!
//! Order 0 drops the sum and converges to the independence value. All flagged
//! cells are updated together from the previous iterate, and for `h > 0` the
//! CA is refitted on every iteration because the margins move with the
//! imputed values.

use crate::ca::{fit_ca, fit_matrix, CaSolution};
use crate::error::{Axis, Error, Result};
use crate::exec::Strategy;
use crate::linalg::Matrix;
use crate::table::ContingencyTable;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Flagged `(row, col)` cells, kept sorted and free of duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellSet {
    cells: Vec<(usize, usize)>,
}

impl CellSet {
    pub fn empty() -> Self {
        CellSet::default()
    }

    /// Validates indices against `t` and rejects duplicates and fully
    /// flagged rows or columns.
    pub fn new(
        t: &ContingencyTable,
        cells: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let (ni, nj) = (t.n_rows(), t.n_cols());
        let mut set = BTreeSet::new();
        for (i, j) in cells {
            if i >= ni || j >= nj {
                return Err(Error::Index(format!(
                    "cell ({i}, {j}) outside a {ni}x{nj} table"
                )));
            }
            if !set.insert((i, j)) {
                return Err(Error::DegenerateCellSet(format!(
                    "cell ({}, {}) listed twice",
                    t.row_labels()[i],
                    t.col_labels()[j]
                )));
            }
        }
        for i in 0..ni {
            if (0..nj).all(|j| set.contains(&(i, j))) {
                return Err(Error::DegenerateCellSet(format!(
                    "every cell of row `{}` is flagged",
                    t.row_labels()[i]
                )));
            }
        }
        for j in 0..nj {
            if (0..ni).all(|i| set.contains(&(i, j))) {
                return Err(Error::DegenerateCellSet(format!(
                    "every cell of column `{}` is flagged",
                    t.col_labels()[j]
                )));
            }
        }
        Ok(CellSet {
            cells: set.into_iter().collect(),
        })
    }

    pub fn from_labels<R: AsRef<str>, C: AsRef<str>>(
        t: &ContingencyTable,
        cells: &[(R, C)],
    ) -> Result<Self> {
        let idx = cells
            .iter()
            .map(|(r, c)| Ok((t.row_index(r.as_ref())?, t.col_index(c.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        CellSet::new(t, idx)
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: (usize, usize)) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }
}

/// Resolves `"ROW:COL"` against the table's labels. Labels may themselves
/// contain `:`; the split must be unambiguous.
pub fn parse_cell_label(t: &ContingencyTable, spec: &str) -> Result<(usize, usize)> {
    let mut found = Vec::new();
    for (pos, _) in spec.match_indices(':') {
        let (r, c) = (&spec[..pos], &spec[pos + 1..]);
        if let (Ok(i), Ok(j)) = (t.row_index(r), t.col_index(c)) {
            found.push((i, j));
        }
    }
    match found.as_slice() {
        [one] => Ok(*one),
        [] => {
            let (r, c) = spec.split_once(':').ok_or_else(|| {
                Error::InvalidConfig(format!("cell `{spec}` is not of the form ROW:COL"))
            })?;
            t.row_index(r)?;
            Err(Error::UnknownLabel {
                axis: Axis::Col,
                label: c.to_string(),
            })
        }
        _ => Err(Error::InvalidConfig(format!(
            "cell `{spec}` splits into labels more than one way"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum InitRule {
    /// Independence value from the margins with the flagged cells zeroed.
    Independence,
    /// Start from the observed entries.
    Observed,
    /// Start every flagged cell at a fixed nonnegative value.
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativePolicy {
    Error,
    FallbackToOrderZero,
    /// Project every update onto `x >= 0`.
    ClampToZero,
}

impl std::str::FromStr for NegativePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(NegativePolicy::Error),
            "fallback" | "fallback_to_order_0" | "fallback_to_order_zero" => {
                Ok(NegativePolicy::FallbackToOrderZero)
            }
            "clamp" | "clamp_to_zero" => Ok(NegativePolicy::ClampToZero),
            other => Err(Error::InvalidConfig(format!(
                "unknown negative policy `{other}` (expected error, fallback or clamp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstitutionConfig {
    pub order: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the largest absolute cell change.
    pub tolerance: f64,
    pub init: InitRule,
    pub negative_policy: NegativePolicy,
}

impl Default for ReconstitutionConfig {
    fn default() -> Self {
        ReconstitutionConfig {
            order: 2,
            max_iterations: 10_000,
            tolerance: 1e-8,
            init: InitRule::Independence,
            negative_policy: NegativePolicy::FallbackToOrderZero,
        }
    }
}

impl ReconstitutionConfig {
    pub fn with_order(order: usize) -> Self {
        ReconstitutionConfig {
            order,
            ..Default::default()
        }
    }

    /// Highest admissible order for an `ni x nj` table.
    pub fn max_order(ni: usize, nj: usize) -> usize {
        (ni.min(nj).saturating_sub(1)).saturating_sub(1)
    }

    pub fn validate(&self, ni: usize, nj: usize) -> Result<()> {
        let max = Self::max_order(ni, nj);
        if self.order > max {
            return Err(Error::InvalidConfig(format!(
                "order {} exceeds {max} for a {ni}x{nj} table",
                self.order
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if let InitRule::Value(v) = self.init {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(
                    "initial value must be nonnegative".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub row: usize,
    pub col: usize,
    pub original: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstitutionResult {
    /// Input table with the flagged cells replaced.
    pub table: ContingencyTable,
    pub cells: Vec<ImputedCell>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Largest absolute cell change per iteration.
    pub trace: Vec<f64>,
    pub fallback_applied: bool,
    pub order_requested: usize,
    pub order_used: usize,
    pub advisories: Vec<String>,
    /// CA of the imputed table.
    pub solution: CaSolution,
}

impl ReconstitutionResult {
    pub fn converged_value(&self, cell: (usize, usize)) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| (c.row, c.col) == cell)
            .map(|c| c.value)
    }
}

struct Iterate {
    x: Matrix,
    trace: Vec<f64>,
}

fn check_identifiable(t: &ContingencyTable, cells: &CellSet) -> Result<()> {
    let x = t.x();
    for &(i, j) in cells.cells() {
        let row_rest: f64 = (0..x.cols())
            .filter(|&c| !cells.contains((i, c)))
            .map(|c| x[(i, c)])
            .sum();
        if row_rest <= 0.0 {
            return Err(Error::DegenerateCellSet(format!(
                "row `{}` has no mass outside the flagged cells",
                t.row_labels()[i]
            )));
        }
        let col_rest: f64 = (0..x.rows())
            .filter(|&r| !cells.contains((r, j)))
            .map(|r| x[(r, j)])
            .sum();
        if col_rest <= 0.0 {
            return Err(Error::DegenerateCellSet(format!(
                "column `{}` has no mass outside the flagged cells",
                t.col_labels()[j]
            )));
        }
        // with every unflagged entry in row i or column j the update grows
        // without bound
        let elsewhere: f64 = (0..x.rows())
            .filter(|&r| r != i)
            .flat_map(|r| (0..x.cols()).filter(move |&c| c != j).map(move |c| (r, c)))
            .filter(|&c| !cells.contains(c))
            .map(|c| x[c])
            .sum();
        if elsewhere <= 0.0 {
            return Err(Error::DegenerateCellSet(format!(
                "cell ({}, {}) has no unflagged mass outside its row and column",
                t.row_labels()[i],
                t.col_labels()[j]
            )));
        }
    }
    Ok(())
}

fn initialize(x: &mut Matrix, cells: &[(usize, usize)], rule: InitRule) {
    match rule {
        InitRule::Observed => {}
        InitRule::Value(v) => {
            for &c in cells {
                x[c] = v;
            }
        }
        InitRule::Independence => {
            for &c in cells {
                x[c] = 0.0;
            }
            let rs = x.row_sums();
            let cs = x.col_sums();
            let total = x.sum();
            for &(i, j) in cells {
                x[(i, j)] = rs[i] * cs[j] / total;
            }
        }
    }
}

/// One simultaneous update of every flagged cell from the current iterate.
fn update(x: &Matrix, cells: &[(usize, usize)], order: usize) -> Result<Vec<f64>> {
    let rs = x.row_sums();
    let cs = x.col_sums();
    let total = x.sum();
    let sol = if order > 0 {
        Some(fit_matrix(x)?)
    } else {
        None
    };
    Ok(cells
        .iter()
        .map(|&(m, n)| {
            let base = rs[m] * cs[n] / total;
            match &sol {
                Some(s) => base * (1.0 + s.inner_product(m, n, order)),
                None => base,
            }
        })
        .collect())
}

fn iterate(
    t: &ContingencyTable,
    cells: &[(usize, usize)],
    order: usize,
    cfg: &ReconstitutionConfig,
) -> Result<Iterate> {
    let mut x = t.x().clone();
    initialize(&mut x, cells, cfg.init);
    let mut trace = Vec::new();
    for _ in 0..cfg.max_iterations {
        let mut next = update(&x, cells, order)?;
        if cfg.negative_policy == NegativePolicy::ClampToZero {
            for v in &mut next {
                *v = v.max(0.0);
            }
        }
        let change = cells
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (&c, v)| m.max((v - x[c]).abs()));
        for (&c, v) in cells.iter().zip(next) {
            x[c] = v;
        }
        trace.push(change);
        if change <= cfg.tolerance {
            return Ok(Iterate { x, trace });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        last_change: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

pub fn reconstitute(
    t: &ContingencyTable,
    cells: &CellSet,
    cfg: &ReconstitutionConfig,
) -> Result<ReconstitutionResult> {
    let (ni, nj) = (t.n_rows(), t.n_cols());
    cfg.validate(ni, nj)?;
    if let Some(&(i, j)) = cells.cells().iter().find(|&&(i, j)| i >= ni || j >= nj) {
        return Err(Error::Index(format!(
            "cell ({i}, {j}) outside a {ni}x{nj} table"
        )));
    }
    check_identifiable(t, cells)?;

    let flagged = cells.cells();
    let mut order_used = cfg.order;
    let mut fallback_applied = false;
    let mut advisories = Vec::new();

    let mut run = if flagged.is_empty() {
        Iterate {
            x: t.x().clone(),
            trace: Vec::new(),
        }
    } else {
        iterate(t, flagged, cfg.order, cfg)?
    };

    if let Some((c, v)) = most_negative(&run.x, flagged) {
        let (row, col) = (t.row_labels()[c.0].clone(), t.col_labels()[c.1].clone());
        match cfg.negative_policy {
            NegativePolicy::Error => {
                return Err(Error::NegativeImputation { row, col, value: v });
            }
            NegativePolicy::FallbackToOrderZero => {
                advisories.push(format!(
                    "order {} imputed {v:.6} in cell ({row}, {col}); fell back to order 0",
                    cfg.order
                ));
                run = iterate(t, flagged, 0, cfg)?;
                order_used = 0;
                fallback_applied = true;
            }
            // clamped inside the iteration; unreachable in practice
            NegativePolicy::ClampToZero => {}
        }
    }

    let table = t.with_entries(run.x)?;
    let solution = fit_ca(&table)?;
    let imputed = flagged
        .iter()
        .map(|&(row, col)| ImputedCell {
            row,
            col,
            original: t.x()[(row, col)],
            value: table.x()[(row, col)],
        })
        .collect();
    Ok(ReconstitutionResult {
        table,
        cells: imputed,
        iterations_used: run.trace.len(),
        converged: true,
        trace: run.trace,
        fallback_applied,
        order_requested: cfg.order,
        order_used,
        advisories,
        solution,
    })
}

fn most_negative(x: &Matrix, cells: &[(usize, usize)]) -> Option<((usize, usize), f64)> {
    cells
        .iter()
        .map(|&c| (c, x[c]))
        .filter(|&(_, v)| v < 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Runs one reconstitution per order, each as an independent work item.
pub fn reconstitute_orders(
    t: &ContingencyTable,
    cells: &CellSet,
    orders: &[usize],
    cfg: &ReconstitutionConfig,
    strategy: Strategy,
) -> Vec<Result<ReconstitutionResult>> {
    strategy.map_slice(orders, |&order| {
        reconstitute(t, cells, &ReconstitutionConfig { order, ..*cfg })
    })
}

/// Largest gap, over the flagged cells, between the imputed value and its
/// order-`h` reconstitution from the imputed table's own CA.
pub fn verify_elimination(res: &ReconstitutionResult, cells: &CellSet, h: usize) -> f64 {
    let x = res.table.x();
    let rs = x.row_sums();
    let cs = x.col_sums();
    let total = x.sum();
    cells
        .cells()
        .iter()
        .map(|&(m, n)| {
            let fitted = rs[m] * cs[n] / total * (1.0 + res.solution.inner_product(m, n, h));
            (x[(m, n)] - fitted).abs()
        })
        .fold(0.0, f64::max)
}
