#![allow(dead_code)]

use cellca::{ContingencyTable, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random table with entries in `0..=max_entry` and positive margins.
pub fn random_table(
    rng: &mut ChaCha8Rng,
    rows: std::ops::RangeInclusive<usize>,
    cols: std::ops::RangeInclusive<usize>,
    max_entry: u32,
) -> ContingencyTable {
    loop {
        let ni = rng.gen_range(rows.clone());
        let nj = rng.gen_range(cols.clone());
        let data: Vec<f64> = (0..ni * nj)
            .map(|_| rng.gen_range(0..=max_entry) as f64)
            .collect();
        let x = Matrix::from_row_major(ni, nj, data).unwrap();
        if let Ok(t) = ContingencyTable::unlabeled(x) {
            return t;
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues descending and eigenvectors as columns.
pub fn sym_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n)
        .map(|r| order.iter().map(|&c| v[r][c]).collect())
        .collect();
    (vals, vecs)
}

/// Standardized residuals computed straight from the counts.
pub fn residuals(t: &ContingencyTable) -> Vec<Vec<f64>> {
    let x = t.x();
    let n = t.grand_total();
    let rs = t.row_margins();
    let cs = t.col_margins();
    (0..t.n_rows())
        .map(|i| {
            (0..t.n_cols())
                .map(|j| {
                    let e = rs[i] * cs[j] / n;
                    (x[(i, j)] - e) / (e * n).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Pearson chi-squared over the grand total.
pub fn total_inertia(t: &ContingencyTable) -> f64 {
    let x = t.x();
    let n = t.grand_total();
    let rs = t.row_margins();
    let cs = t.col_margins();
    let mut chi2 = 0.0;
    for i in 0..t.n_rows() {
        for j in 0..t.n_cols() {
            let e = rs[i] * cs[j] / n;
            chi2 += (x[(i, j)] - e).powi(2) / e;
        }
    }
    chi2 / n
}

pub fn row_chi2_distance(t: &ContingencyTable, i: usize, i2: usize) -> f64 {
    let x = t.x();
    let n = t.grand_total();
    let rs = t.row_margins();
    let cs = t.col_margins();
    (0..t.n_cols())
        .map(|j| (x[(i, j)] / rs[i] - x[(i2, j)] / rs[i2]).powi(2) / (cs[j] / n))
        .sum::<f64>()
        .sqrt()
}

pub fn col_chi2_distance(t: &ContingencyTable, j: usize, j2: usize) -> f64 {
    let x = t.x();
    let n = t.grand_total();
    let rs = t.row_margins();
    let cs = t.col_margins();
    (0..t.n_rows())
        .map(|i| (x[(i, j)] / cs[j] - x[(i, j2)] / cs[j2]).powi(2) / (rs[i] / n))
        .sum::<f64>()
        .sqrt()
}

/// `a a^T` for a row-major matrix.
pub fn gram(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|r| {
            a.iter()
                .map(|s| r.iter().zip(s).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

/// Groups descending eigenvalues whose neighbours are closer than `gap`.
pub fn clusters(vals: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=vals.len() {
        if k == vals.len() || vals[k - 1] - vals[k] > gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Largest per-entry difference between `got` and `want` columns after
/// flipping each column of `got` to best match.
pub fn max_diff_up_to_sign(got: &Matrix, want: &[Vec<f64>]) -> f64 {
    let k = want[0].len();
    let mut worst: f64 = 0.0;
    for c in 0..k {
        let dot: f64 = (0..want.len()).map(|i| got[(i, c)] * want[i][c]).sum();
        let s = if dot < 0.0 { -1.0 } else { 1.0 };
        for (i, row) in want.iter().enumerate() {
            worst = worst.max((s * got[(i, c)] - row[c]).abs());
        }
    }
    worst
}
