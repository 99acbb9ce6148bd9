//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of a working copy of the input are rotated pairwise until every
//! pair is orthogonal to working precision; the column norms are then the
//! singular values and the accumulated rotations form `V`. The method is
//! fully sequential, so repeated calls on the same input are bitwise
//! identical.

use super::Matrix;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one are numerically null.
pub const NULL_RELATIVE: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactorization {
    /// Left singular vectors, `m x k` with `k = min(m, n)`.
    pub u: Matrix,
    /// Singular values in descending order.
    pub sigma: Vec<f64>,
    /// Right singular vectors, `n x k`.
    pub v: Matrix,
}

impl SvdFactorization {
    /// Whether dimension `k` (0-based) is numerically null.
    pub fn is_null(&self, k: usize) -> bool {
        let s1 = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma[k] <= NULL_RELATIVE * s1 || s1 == 0.0
    }

    pub fn numerical_rank(&self) -> usize {
        (0..self.sigma.len()).filter(|&k| !self.is_null(k)).count()
    }

    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        Matrix::from_fn(m, n, |i, j| {
            self.sigma
                .iter()
                .enumerate()
                .map(|(k, s)| self.u[(i, k)] * s * self.v[(j, k)])
                .sum()
        })
    }
}

pub fn svd(m: &Matrix) -> Result<SvdFactorization> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidMatrix("SVD of an empty matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("SVD input contains NaN or Inf".into()));
    }
    if m.rows() >= m.cols() {
        Ok(jacobi_tall(m))
    } else {
        let t = jacobi_tall(&m.transpose());
        let mut out = SvdFactorization {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        apply_sign_convention(&mut out);
        Ok(out)
    }
}

/// One-sided Jacobi on an `m x n` matrix with `m >= n`.
fn jacobi_tall(a: &Matrix) -> SvdFactorization {
    let (m, n) = a.shape();
    // Column-major working storage keeps the rotations cache friendly.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * m as f64;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = gram(&w[p], &w[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = w.iter().map(|col| norm(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal singular values keep their column order.
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    sigma = order.iter().map(|&j| sigma[j]).collect();

    let smax = sigma[0];
    let mut u_cols: Vec<Option<Vec<f64>>> = order
        .iter()
        .zip(&sigma)
        .map(|(&j, &s)| {
            if s > 0.0 && s > smax * 1e-13 {
                Some(w[j].iter().map(|x| x / s).collect())
            } else {
                None
            }
        })
        .collect();
    complete_orthonormal(&mut u_cols, m);

    let u = Matrix::from_fn(m, n, |i, k| u_cols[k].as_ref().unwrap()[i]);
    let vm = Matrix::from_fn(n, n, |i, k| v[order[k]][i]);
    let mut out = SvdFactorization { u, sigma, v: vm };
    apply_sign_convention(&mut out);
    out
}

fn gram(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut g = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        a += xi * xi;
        b += yi * yi;
        g += xi * yi;
    }
    (a, b, g)
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *xp;
        let b = *xq;
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Fills `None` columns with unit vectors orthogonal to every other column.
/// Each is the standard basis vector with the largest residual after two
/// passes of Gram-Schmidt, lowest index on ties.
fn complete_orthonormal(cols: &mut [Option<Vec<f64>>], m: usize) {
    for k in 0..cols.len() {
        if cols[k].is_some() {
            continue;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for basis in 0..m {
            let mut e = vec![0.0; m];
            e[basis] = 1.0;
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let d: f64 = e.iter().zip(other).map(|(a, b)| a * b).sum();
                    for (ei, oi) in e.iter_mut().zip(other) {
                        *ei -= d * oi;
                    }
                }
            }
            let nrm = norm(&e);
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, e));
            }
        }
        let (nrm, e) = best.expect("m >= 1");
        cols[k] = Some(e.into_iter().map(|x| x / nrm).collect());
    }
}

/// Flips each singular pair so the largest-magnitude entry of the `u`
/// column is nonnegative (first index wins ties).
fn apply_sign_convention(f: &mut SvdFactorization) {
    for k in 0..f.sigma.len() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..f.u.rows() {
            let a = f.u[(i, k)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if f.u[(best, k)] < 0.0 {
            for i in 0..f.u.rows() {
                f.u[(i, k)] = -f.u[(i, k)];
            }
            for j in 0..f.v.rows() {
                f.v[(j, k)] = -f.v[(j, k)];
            }
        }
    }
}
