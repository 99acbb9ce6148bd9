//! Inertia and contribution decompositions for spotting outlying points and
//! cells, plus the reordering view that exposes block structure.
//!
//! Outliers are judged by inspection; this module ranks candidates and
//! raises advisories against overridable thresholds but never decides.

use crate::ca::{col_distances_to_origin, decompose, row_distances_to_origin, CaSolution};
use crate::error::{Axis, Error, Result};
use crate::linalg::Matrix;
use crate::table::ContingencyTable;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Profiles closer than this (max elementwise) are treated as identical.
const PROFILE_TOL: f64 = 1e-12;

/// Shares are ranked after rounding to this resolution so that exact
/// duplicates tie and fall back to label order.
const RANK_RESOLUTION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct InertiaDecomposition {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    pub row_distances: Vec<f64>,
    pub col_distances: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `(p_ij - p_i+ p_+j)^2 / (p_i+ p_+j)`.
    pub cell_inertia: Matrix,
    /// `p_i+ f_ik^2`.
    pub row_point_inertia: Matrix,
    /// `p_+j g_jk^2`.
    pub col_point_inertia: Matrix,
    /// `u_ik^2`, the share of dimension `k` due to row `i`.
    pub row_contrib: Matrix,
    /// `v_jk^2`.
    pub col_contrib: Matrix,
    pub cell_share_of_total: Matrix,
    /// Sum of the cell inertias.
    pub total_inertia: f64,
    pub row_groups: Vec<DuplicateGroup>,
    pub col_groups: Vec<DuplicateGroup>,
}

impl InertiaDecomposition {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
}

/// Categories with identical profiles, which share one position on every map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub axis: Axis,
    /// Label shown for the group: the first member in table order.
    pub representative: String,
    pub members: Vec<String>,
    pub indices: Vec<usize>,
    /// Combined mass of the members.
    pub mass: f64,
    /// Combined contribution to each dimension.
    pub contributions: Vec<f64>,
}

pub fn decompose_inertia(t: &ContingencyTable, sol: &CaSolution) -> Result<InertiaDecomposition> {
    let (ni, nj) = (t.n_rows(), t.n_cols());
    if sol.n_rows() != ni || sol.n_cols() != nj {
        return Err(Error::Shape(format!(
            "solution is {}x{}, table is {ni}x{nj}",
            sol.n_rows(),
            sol.n_cols()
        )));
    }
    let d = decompose(t)?;
    let k = sol.rank;
    let cell_inertia = Matrix::from_fn(ni, nj, |i, j| d.s[(i, j)] * d.s[(i, j)]);
    let total_inertia = cell_inertia.sum();
    let cell_share_of_total = Matrix::from_fn(ni, nj, |i, j| {
        if total_inertia > 0.0 {
            cell_inertia[(i, j)] / total_inertia
        } else {
            0.0
        }
    });
    let row_point_inertia = Matrix::from_fn(ni, k, |i, c| {
        d.row_masses[i] * sol.f[(i, c)] * sol.f[(i, c)]
    });
    let col_point_inertia = Matrix::from_fn(nj, k, |j, c| {
        d.col_masses[j] * sol.g[(j, c)] * sol.g[(j, c)]
    });
    let row_contrib = Matrix::from_fn(ni, k, |i, c| {
        d.row_masses[i] * sol.phi[(i, c)] * sol.phi[(i, c)]
    });
    let col_contrib = Matrix::from_fn(nj, k, |j, c| {
        d.col_masses[j] * sol.gamma[(j, c)] * sol.gamma[(j, c)]
    });

    let row_profiles = Matrix::from_fn(ni, nj, |i, j| d.p[(i, j)] / d.row_masses[i]);
    let col_profiles = Matrix::from_fn(nj, ni, |j, i| d.p[(i, j)] / d.col_masses[j]);
    let row_groups = duplicate_groups(
        &row_profiles,
        t.row_labels(),
        &d.row_masses,
        &row_contrib,
        Axis::Row,
    );
    let col_groups = duplicate_groups(
        &col_profiles,
        t.col_labels(),
        &d.col_masses,
        &col_contrib,
        Axis::Col,
    );

    Ok(InertiaDecomposition {
        row_labels: t.row_labels().to_vec(),
        col_labels: t.col_labels().to_vec(),
        row_distances: row_distances_to_origin(&d),
        col_distances: col_distances_to_origin(&d),
        row_masses: d.row_masses,
        col_masses: d.col_masses,
        sigma: sol.sigma.clone(),
        cell_inertia,
        row_point_inertia,
        col_point_inertia,
        row_contrib,
        col_contrib,
        cell_share_of_total,
        total_inertia,
        row_groups,
        col_groups,
    })
}

fn duplicate_groups(
    profiles: &Matrix,
    labels: &[String],
    masses: &[f64],
    contrib: &Matrix,
    axis: Axis,
) -> Vec<DuplicateGroup> {
    let n = profiles.rows();
    let mut assigned = vec![false; n];
    let mut groups = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..n)
            .filter(|&i2| {
                !assigned[i2]
                    && profiles
                        .row(i)
                        .iter()
                        .zip(profiles.row(i2))
                        .all(|(a, b)| (a - b).abs() <= PROFILE_TOL)
            })
            .collect();
        for &m in &members {
            assigned[m] = true;
        }
        if members.len() > 1 {
            groups.push(DuplicateGroup {
                axis,
                representative: labels[i].clone(),
                members: members.iter().map(|&m| labels[m].clone()).collect(),
                mass: members.iter().map(|&m| masses[m]).sum(),
                contributions: (0..contrib.cols())
                    .map(|k| members.iter().map(|&m| contrib[(m, k)]).sum())
                    .collect(),
                indices: members,
            });
        }
    }
    groups
}

/// Advisory cutoffs. Neither is a test; both only annotate the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Share of a dimension's inertia due to one point.
    pub point_contribution: f64,
    /// Share of total inertia due to one cell.
    pub cell_share: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            point_contribution: 0.5,
            cell_share: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub axis: Axis,
    pub label: String,
    pub index: usize,
    pub mass: f64,
    /// Chi-squared distance to the centroid.
    pub distance: f64,
    /// Contribution to the dimension this record is listed under.
    pub contribution: f64,
    /// Contribution to every retained dimension.
    pub contributions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub row: String,
    pub col: String,
    pub row_index: usize,
    pub col_index: usize,
    pub inertia: f64,
    /// Fraction of total inertia.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    /// 1-based dimension number.
    pub dim: usize,
    pub sigma: f64,
    pub inertia_share: f64,
    pub rows: Vec<PointRecord>,
    pub cols: Vec<PointRecord>,
    /// Cells lying in a row or column listed above, by inertia share.
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisory {
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// Length of each ranked list; entries tied with the last one are kept too.
    pub top_n: usize,
    pub thresholds: Thresholds,
    pub total_inertia: f64,
    pub dimensions: Vec<DimensionReport>,
    /// Globally highest-share cells.
    pub cells: Vec<CellRecord>,
    pub duplicate_groups: Vec<DuplicateGroup>,
    pub advisories: Vec<Advisory>,
}

impl OutlierReport {
    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty() && self.cells.is_empty()
    }
}

fn rank_key(share: f64) -> i64 {
    (share * RANK_RESOLUTION).round() as i64
}

/// Indices sorted by descending share, ties in index order.
fn ranked(shares: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..shares.len()).collect();
    idx.sort_by_key(|&i| (std::cmp::Reverse(rank_key(shares[i])), i));
    idx
}

/// The first `n` of `order`, extended by anything tied with the last one.
fn top_with_ties(order: Vec<usize>, shares: &[f64], n: usize) -> Vec<usize> {
    let Some(&last) = order.get(n.saturating_sub(1)) else {
        return order;
    };
    let cut = rank_key(shares[last]);
    let extra = order[n..]
        .iter()
        .take_while(|&&i| rank_key(shares[i]) == cut)
        .count();
    order.into_iter().take(n + extra).collect()
}

pub fn outlier_report(dec: &InertiaDecomposition, top_n: usize) -> OutlierReport {
    outlier_report_with(dec, top_n, Thresholds::default())
}

pub fn outlier_report_with(
    dec: &InertiaDecomposition,
    top_n: usize,
    thresholds: Thresholds,
) -> OutlierReport {
    let top_n = top_n.max(1);
    let (ni, nj) = dec.cell_inertia.shape();
    let total_sq: f64 = dec.sigma.iter().map(|s| s * s).sum();

    let point = |axis: Axis, idx: usize, k: usize| -> PointRecord {
        let (labels, masses, dists, contrib) = match axis {
            Axis::Row => (
                &dec.row_labels,
                &dec.row_masses,
                &dec.row_distances,
                &dec.row_contrib,
            ),
            Axis::Col => (
                &dec.col_labels,
                &dec.col_masses,
                &dec.col_distances,
                &dec.col_contrib,
            ),
        };
        PointRecord {
            axis,
            label: labels[idx].clone(),
            index: idx,
            mass: masses[idx],
            distance: dists[idx],
            contribution: contrib[(idx, k)],
            contributions: (0..contrib.cols()).map(|c| contrib[(idx, c)]).collect(),
        }
    };
    let cell = |i: usize, j: usize| CellRecord {
        row: dec.row_labels[i].clone(),
        col: dec.col_labels[j].clone(),
        row_index: i,
        col_index: j,
        inertia: dec.cell_inertia[(i, j)],
        share: dec.cell_share_of_total[(i, j)],
    };

    let mut dimensions = Vec::new();
    let mut advisories = Vec::new();
    for k in 0..dec.rank() {
        let rshares = dec.row_contrib.column(k);
        let cshares = dec.col_contrib.column(k);
        let top_rows = top_with_ties(ranked(&rshares), &rshares, top_n);
        let top_cols = top_with_ties(ranked(&cshares), &cshares, top_n);

        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for i in 0..ni {
            for j in 0..nj {
                if top_rows.contains(&i) || top_cols.contains(&j) {
                    candidates.push((i, j));
                }
            }
        }
        let cand_shares: Vec<f64> = candidates
            .iter()
            .map(|&(i, j)| dec.cell_share_of_total[(i, j)])
            .collect();
        let cells = top_with_ties(ranked(&cand_shares), &cand_shares, top_n)
            .into_iter()
            .map(|c| cell(candidates[c].0, candidates[c].1))
            .collect();

        for (axis, shares) in [(Axis::Row, &rshares), (Axis::Col, &cshares)] {
            for idx in ranked(shares) {
                if shares[idx] <= thresholds.point_contribution {
                    break;
                }
                let label = match axis {
                    Axis::Row => &dec.row_labels[idx],
                    Axis::Col => &dec.col_labels[idx],
                };
                advisories.push(Advisory {
                    message: format!(
                        "{axis} `{label}` contributes {} of dimension {}",
                        percent(shares[idx]),
                        k + 1
                    ),
                    dim: Some(k + 1),
                    share: shares[idx],
                });
            }
        }

        dimensions.push(DimensionReport {
            dim: k + 1,
            sigma: dec.sigma[k],
            inertia_share: if total_sq > 0.0 {
                dec.sigma[k] * dec.sigma[k] / total_sq
            } else {
                0.0
            },
            rows: top_rows.iter().map(|&i| point(Axis::Row, i, k)).collect(),
            cols: top_cols.iter().map(|&j| point(Axis::Col, j, k)).collect(),
            cells,
        });
    }

    let mut cells = Vec::new();
    // a rank-zero table has only rounding noise left in its cells
    if dec.rank() > 0 {
        let shares = dec.cell_share_of_total.as_slice();
        let listed = top_with_ties(ranked(shares), shares, top_n);
        for c in ranked(shares) {
            let (i, j) = (c / nj, c % nj);
            if listed.contains(&c) {
                cells.push(cell(i, j));
            }
            if shares[c] > thresholds.cell_share {
                advisories.push(Advisory {
                    message: format!(
                        "cell ({}, {}) holds {} of total inertia",
                        dec.row_labels[i],
                        dec.col_labels[j],
                        percent(shares[c])
                    ),
                    dim: None,
                    share: shares[c],
                });
            } else if cells.len() >= listed.len() {
                break;
            }
        }
    }

    OutlierReport {
        top_n,
        thresholds,
        total_inertia: dec.total_inertia,
        dimensions,
        cells,
        duplicate_groups: dec
            .row_groups
            .iter()
            .chain(&dec.col_groups)
            .cloned()
            .collect(),
        advisories,
    }
}

/// Formats a fraction as a percentage with one decimal.
pub fn percent(share: f64) -> String {
    format!("{:.1}%", share * 100.0)
}

impl fmt::Display for OutlierReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total inertia {:.6}", self.total_inertia)?;
        for d in &self.dimensions {
            writeln!(
                f,
                "dimension {} (sigma {:.3}, {} of inertia)",
                d.dim,
                d.sigma,
                percent(d.inertia_share)
            )?;
            for p in d.rows.iter().chain(&d.cols) {
                writeln!(
                    f,
                    "  {:<6} {:<20} mass {:.3}  dist {:.3}  ctr {:>6}",
                    p.axis.to_string(),
                    p.label,
                    p.mass,
                    p.distance,
                    percent(p.contribution)
                )?;
            }
            for c in &d.cells {
                writeln!(f, "  cell   ({}, {})  {}", c.row, c.col, percent(c.share))?;
            }
        }
        if !self.cells.is_empty() {
            writeln!(f, "cells by share of total inertia")?;
            for c in &self.cells {
                writeln!(f, "  ({}, {})  {}", c.row, c.col, percent(c.share))?;
            }
        }
        for g in &self.duplicate_groups {
            writeln!(
                f,
                "identical {} profiles {}: {}",
                g.axis,
                g.representative,
                g.members.join(", ")
            )?;
        }
        for a in &self.advisories {
            writeln!(f, "advisory: {}", a.message)?;
        }
        Ok(())
    }
}

/// Row and column orders sorting the standard coordinates of dimension `dim`
/// (1-based) ascending; near-equal coordinates keep table order.
pub fn dimension_order(sol: &CaSolution, dim: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = sol.check_dim(dim)?;
    let order = |coords: Vec<f64>| {
        let mut idx: Vec<usize> = (0..coords.len()).collect();
        idx.sort_by_key(|&i| ((coords[i] * 1e9).round() as i64, i));
        idx
    };
    Ok((order(sol.phi.column(k)), order(sol.gamma.column(k))))
}

pub fn reorder_by_dimension(
    t: &ContingencyTable,
    sol: &CaSolution,
    dim: usize,
) -> Result<ContingencyTable> {
    if sol.n_rows() != t.n_rows() || sol.n_cols() != t.n_cols() {
        return Err(Error::Shape("solution does not match table".into()));
    }
    let (rows, cols) = dimension_order(sol, dim)?;
    t.select(&rows, &cols)
}
