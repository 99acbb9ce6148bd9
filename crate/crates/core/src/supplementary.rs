//! Supplementary points: fit CA without some rows and columns, then place
//! them on the map with the transition formulas.

use crate::ca::{fit_ca, CaSolution};
use crate::error::{Axis, Error, Result};
use crate::table::ContingencyTable;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplementarySpec {
    pub sup_rows: Vec<String>,
    pub sup_cols: Vec<String>,
}

impl SupplementarySpec {
    pub fn new<R: Into<String>, C: Into<String>>(
        rows: impl IntoIterator<Item = R>,
        cols: impl IntoIterator<Item = C>,
    ) -> Self {
        SupplementarySpec {
            sup_rows: rows.into_iter().map(Into::into).collect(),
            sup_cols: cols.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sup_rows.is_empty() && self.sup_cols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupplementarySolution {
    pub spec: SupplementarySpec,
    /// CA of the reduced table.
    pub base: CaSolution,
    pub reduced: ContingencyTable,
    /// Principal coordinates of each supplementary row, length `base.rank`.
    pub sup_row_coords: BTreeMap<String, Vec<f64>>,
    pub sup_col_coords: BTreeMap<String, Vec<f64>>,
    pub reduced_shape: (usize, usize),
}

struct Split {
    active: Vec<usize>,
    passive: Vec<usize>,
}

fn split(
    labels: &[String],
    sup: &[String],
    lookup: impl Fn(&str) -> Result<usize>,
) -> Result<Split> {
    let mut passive = Vec::new();
    for l in sup {
        let i = lookup(l)?;
        if !passive.contains(&i) {
            passive.push(i);
        }
    }
    passive.sort_unstable();
    let active = (0..labels.len()).filter(|i| !passive.contains(i)).collect();
    Ok(Split { active, passive })
}

/// `(a / sum a) * coords`, the barycentre of the active points of the
/// other axis.
fn project(profile: &[f64], coords: &crate::linalg::Matrix) -> Option<Vec<f64>> {
    let total: f64 = profile.iter().sum();
    if total <= 0.0 {
        return None;
    }
    Some(
        (0..coords.cols())
            .map(|k| {
                profile
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a / total * coords[(i, k)])
                    .sum()
            })
            .collect(),
    )
}

pub fn fit_supplementary(
    t: &ContingencyTable,
    spec: &SupplementarySpec,
) -> Result<SupplementarySolution> {
    let rows = split(t.row_labels(), &spec.sup_rows, |l| t.row_index(l))?;
    let cols = split(t.col_labels(), &spec.sup_cols, |l| t.col_index(l))?;
    if rows.active.is_empty() || cols.active.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one active row and one active column must remain".into(),
        ));
    }

    let x = t.x();
    let empty_rows: Vec<String> = rows
        .active
        .iter()
        .filter(|&&i| cols.active.iter().map(|&j| x[(i, j)]).sum::<f64>() <= 0.0)
        .map(|&i| t.row_labels()[i].clone())
        .collect();
    let empty_cols: Vec<String> = cols
        .active
        .iter()
        .filter(|&&j| rows.active.iter().map(|&i| x[(i, j)]).sum::<f64>() <= 0.0)
        .map(|&j| t.col_labels()[j].clone())
        .collect();
    if !empty_rows.is_empty() || !empty_cols.is_empty() {
        return Err(Error::DegenerateReduction {
            rows: empty_rows,
            cols: empty_cols,
        });
    }

    let reduced = t.select(&rows.active, &cols.active)?;
    let base = fit_ca(&reduced)?;

    let mut sup_row_coords = BTreeMap::new();
    for &i in &rows.passive {
        let a: Vec<f64> = cols.active.iter().map(|&j| x[(i, j)]).collect();
        let label = &t.row_labels()[i];
        let c = project(&a, &base.gamma).ok_or_else(|| Error::UnprojectablePoint {
            axis: Axis::Row,
            label: label.clone(),
        })?;
        sup_row_coords.insert(label.clone(), c);
    }
    let mut sup_col_coords = BTreeMap::new();
    for &j in &cols.passive {
        let b: Vec<f64> = rows.active.iter().map(|&i| x[(i, j)]).collect();
        let label = &t.col_labels()[j];
        let c = project(&b, &base.phi).ok_or_else(|| Error::UnprojectablePoint {
            axis: Axis::Col,
            label: label.clone(),
        })?;
        sup_col_coords.insert(label.clone(), c);
    }

    Ok(SupplementarySolution {
        spec: spec.clone(),
        reduced_shape: (reduced.n_rows(), reduced.n_cols()),
        base,
        reduced,
        sup_row_coords,
        sup_col_coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;

    #[test]
    fn unknown_label_rejected() {
        let t = datasets::large_value();
        let spec = SupplementarySpec::new(["9"], Vec::<String>::new());
        assert!(matches!(
            fit_supplementary(&t, &spec),
            Err(Error::UnknownLabel {
                axis: Axis::Row,
                ..
            })
        ));
    }

    #[test]
    fn base_matches_reduced_fit_bitwise() {
        let t = datasets::large_value();
        let spec = SupplementarySpec::new(["2"], ["b"]);
        let s = fit_supplementary(&t, &spec).unwrap();
        let direct = fit_ca(&t.select(&[0, 2, 3], &[0, 2, 3]).unwrap()).unwrap();
        assert_eq!(s.base, direct);
        assert_eq!(s.reduced_shape, (3, 3));
        assert_eq!(s.sup_row_coords["2"].len(), s.base.rank);
    }

    #[test]
    fn reduction_emptying_a_row_fails() {
        // removing column b empties row 2
        let t = datasets::block_diagonal();
        let spec = SupplementarySpec::new(Vec::<String>::new(), ["b"]);
        match fit_supplementary(&t, &spec) {
            Err(Error::DegenerateReduction { rows, cols }) => {
                assert_eq!(rows, ["2"]);
                assert!(cols.is_empty());
            }
            other => panic!("expected DegenerateReduction, got {other:?}"),
        }
    }

    #[test]
    fn unprojectable_row() {
        // row 2 only has mass in the supplementary column
        let t = datasets::block_diagonal();
        let spec = SupplementarySpec::new(["2"], ["b"]);
        assert!(matches!(
            fit_supplementary(&t, &spec),
            Err(Error::UnprojectablePoint {
                axis: Axis::Row,
                ..
            })
        ));
    }

    #[test]
    fn copy_of_active_row_lands_on_it() {
        let x = crate::linalg::Matrix::from_rows(&[
            [4.0, 1.0, 2.0],
            [1.0, 5.0, 1.0],
            [2.0, 2.0, 6.0],
            [8.0, 2.0, 4.0],
        ])
        .unwrap();
        let t = ContingencyTable::unlabeled(x).unwrap();
        let s =
            fit_supplementary(&t, &SupplementarySpec::new(["4"], Vec::<String>::new())).unwrap();
        let p = &s.sup_row_coords["4"];
        for (k, v) in p.iter().enumerate() {
            assert!((v - s.base.f[(0, k)]).abs() < 1e-8);
        }
    }
}
