//! Simple correspondence analysis: correspondence matrix, standardized
//! residuals, their SVD, standard and principal coordinates, chi-squared
//! distances and the transition formulas.

use crate::error::{Axis, Error, Result};
use crate::exec::Strategy;
use crate::linalg::{svd, Matrix, NULL_RELATIVE};
use crate::table::ContingencyTable;

/// Singular values at or below this absolute level are null regardless of
/// the leading one. Standardized residuals are O(1), so anything this small
/// is rounding noise of an (almost) independent table.
pub const NULL_ABSOLUTE: f64 = 1e-12;

/// `P = X / x++`, its margins, the independence model and the standardized residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceDecomposition {
    pub p: Matrix,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    pub e: Matrix,
    pub s: Matrix,
}

impl CorrespondenceDecomposition {
    pub fn shape(&self) -> (usize, usize) {
        self.p.shape()
    }

    /// Total inertia as the sum of squared standardized residuals.
    pub fn total_inertia(&self) -> f64 {
        self.s.as_slice().iter().map(|v| v * v).sum()
    }

    /// `D_r^-1 (P - E) D_c^-1`.
    pub fn profile_residuals(&self) -> Matrix {
        Matrix::from_fn(self.p.rows(), self.p.cols(), |i, j| {
            (self.p[(i, j)] - self.e[(i, j)]) / (self.row_masses[i] * self.col_masses[j])
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaSolution {
    /// Non-null singular values, descending.
    pub sigma: Vec<f64>,
    /// Nontrivial singular values judged numerically null; reported only.
    pub null_sigma: Vec<f64>,
    /// Row standard coordinates, `I x rank`.
    pub phi: Matrix,
    /// Column standard coordinates, `J x rank`.
    pub gamma: Matrix,
    /// Row principal coordinates `phi * diag(sigma)`.
    pub f: Matrix,
    /// Column principal coordinates `gamma * diag(sigma)`.
    pub g: Matrix,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    pub total_inertia: f64,
    /// `sigma_k^2 / total_inertia` as fractions.
    pub inertia_proportions: Vec<f64>,
    pub rank: usize,
    /// Set when the table is independent and no dimension survives.
    pub rank_zero: bool,
}

impl CaSolution {
    pub fn n_rows(&self) -> usize {
        self.phi.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.gamma.rows()
    }

    /// Row contribution coordinates `u = D_r^{1/2} phi`.
    pub fn u(&self) -> Matrix {
        Matrix::from_fn(self.phi.rows(), self.rank, |i, k| {
            self.phi[(i, k)] * self.row_masses[i].sqrt()
        })
    }

    /// Column contribution coordinates `v = D_c^{1/2} gamma`.
    pub fn v(&self) -> Matrix {
        Matrix::from_fn(self.gamma.rows(), self.rank, |j, k| {
            self.gamma[(j, k)] * self.col_masses[j].sqrt()
        })
    }

    /// `sum_{k < dims} phi_ik sigma_k gamma_jk`, the low-rank profile residual.
    pub fn inner_product(&self, i: usize, j: usize, dims: usize) -> f64 {
        (0..dims.min(self.rank))
            .map(|k| self.phi[(i, k)] * self.sigma[k] * self.gamma[(j, k)])
            .sum()
    }

    /// `Phi Sigma Gamma^T` over all retained dimensions.
    pub fn biplot_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n_rows(), self.n_cols(), |i, j| {
            self.inner_product(i, j, self.rank)
        })
    }

    /// Checks a 1-based dimension number against the rank.
    pub fn check_dim(&self, dim: usize) -> Result<usize> {
        if dim == 0 || dim > self.rank {
            return Err(Error::Index(format!(
                "dimension {dim} outside 1..={}",
                self.rank
            )));
        }
        Ok(dim - 1)
    }
}

pub fn decompose(t: &ContingencyTable) -> Result<CorrespondenceDecomposition> {
    decompose_labeled(t.x(), t.row_labels(), t.col_labels())
}

pub(crate) fn decompose_labeled(
    x: &Matrix,
    row_labels: &[String],
    col_labels: &[String],
) -> Result<CorrespondenceDecomposition> {
    crate::table::check_margins(x, row_labels, col_labels)?;
    let total = x.sum();
    let p = x.scale(1.0 / total);
    let row_masses = p.row_sums();
    let col_masses = p.col_sums();
    let e = Matrix::from_fn(p.rows(), p.cols(), |i, j| row_masses[i] * col_masses[j]);
    let s = Matrix::from_fn(p.rows(), p.cols(), |i, j| {
        (p[(i, j)] - e[(i, j)]) / e[(i, j)].sqrt()
    });
    Ok(CorrespondenceDecomposition {
        p,
        row_masses,
        col_masses,
        e,
        s,
    })
}

/// Decomposes a raw matrix that need not be nonnegative (intermediate
/// reconstitution tables) but must have positive margins.
pub(crate) fn decompose_matrix(x: &Matrix) -> Result<CorrespondenceDecomposition> {
    let rows: Vec<String> = (1..=x.rows()).map(|i| i.to_string()).collect();
    let cols: Vec<String> = (1..=x.cols()).map(|j| j.to_string()).collect();
    decompose_labeled(x, &rows, &cols)
}

pub fn fit_ca(t: &ContingencyTable) -> Result<CaSolution> {
    fit_decomposition(&decompose(t)?)
}

pub(crate) fn fit_matrix(x: &Matrix) -> Result<CaSolution> {
    fit_decomposition(&decompose_matrix(x)?)
}

pub fn fit_decomposition(d: &CorrespondenceDecomposition) -> Result<CaSolution> {
    let (ni, nj) = d.shape();
    let f = svd(&d.s)?;
    let max_dims = ni.min(nj) - 1;
    let s1 = f.sigma[0];
    let is_null = |s: f64| s <= NULL_ABSOLUTE || s <= NULL_RELATIVE * s1;
    let rank = f.sigma[..max_dims]
        .iter()
        .take_while(|&&s| !is_null(s))
        .count();
    let sigma = f.sigma[..rank].to_vec();
    let null_sigma = f.sigma[rank..max_dims].to_vec();

    let phi = Matrix::from_fn(ni, rank, |i, k| f.u[(i, k)] / d.row_masses[i].sqrt());
    let gamma = Matrix::from_fn(nj, rank, |j, k| f.v[(j, k)] / d.col_masses[j].sqrt());
    let fm = Matrix::from_fn(ni, rank, |i, k| phi[(i, k)] * sigma[k]);
    let gm = Matrix::from_fn(nj, rank, |j, k| gamma[(j, k)] * sigma[k]);

    let total_inertia: f64 = f.sigma[..max_dims].iter().map(|s| s * s).sum();
    let inertia_proportions = sigma
        .iter()
        .map(|s| {
            if total_inertia > 0.0 {
                s * s / total_inertia
            } else {
                0.0
            }
        })
        .collect();

    Ok(CaSolution {
        sigma,
        null_sigma,
        phi,
        gamma,
        f: fm,
        g: gm,
        row_masses: d.row_masses.clone(),
        col_masses: d.col_masses.clone(),
        total_inertia,
        inertia_proportions,
        rank,
        rank_zero: rank == 0,
    })
}

/// Fits many tables, one work item per table.
pub fn fit_many(tables: &[ContingencyTable], strategy: Strategy) -> Vec<Result<CaSolution>> {
    strategy.map_slice(tables, fit_ca)
}

fn check_index(i: usize, n: usize, axis: Axis) -> Result<()> {
    if i >= n {
        return Err(Error::Index(format!("{axis} index {i} outside 0..{n}")));
    }
    Ok(())
}

/// Chi-squared distance between the profiles of rows `i` and `i2`.
pub fn chi2_distance_rows(d: &CorrespondenceDecomposition, i: usize, i2: usize) -> Result<f64> {
    let (ni, nj) = d.shape();
    check_index(i, ni, Axis::Row)?;
    check_index(i2, ni, Axis::Row)?;
    let sq: f64 = (0..nj)
        .map(|j| {
            let diff = d.p[(i, j)] / d.row_masses[i] - d.p[(i2, j)] / d.row_masses[i2];
            diff * diff / d.col_masses[j]
        })
        .sum();
    Ok(sq.sqrt())
}

/// Chi-squared distance between the profiles of columns `j` and `j2`.
pub fn chi2_distance_cols(d: &CorrespondenceDecomposition, j: usize, j2: usize) -> Result<f64> {
    let (ni, nj) = d.shape();
    check_index(j, nj, Axis::Col)?;
    check_index(j2, nj, Axis::Col)?;
    let sq: f64 = (0..ni)
        .map(|i| {
            let diff = d.p[(i, j)] / d.col_masses[j] - d.p[(i, j2)] / d.col_masses[j2];
            diff * diff / d.row_masses[i]
        })
        .sum();
    Ok(sq.sqrt())
}

/// Chi-squared distance of each row profile to the average row profile.
pub fn row_distances_to_origin(d: &CorrespondenceDecomposition) -> Vec<f64> {
    let (ni, nj) = d.shape();
    (0..ni)
        .map(|i| {
            (0..nj)
                .map(|j| {
                    let diff = d.p[(i, j)] / d.row_masses[i] - d.col_masses[j];
                    diff * diff / d.col_masses[j]
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Chi-squared distance of each column profile to the average column profile.
pub fn col_distances_to_origin(d: &CorrespondenceDecomposition) -> Vec<f64> {
    let (ni, nj) = d.shape();
    (0..nj)
        .map(|j| {
            (0..ni)
                .map(|i| {
                    let diff = d.p[(i, j)] / d.col_masses[j] - d.row_masses[i];
                    diff * diff / d.row_masses[i]
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Full symmetric matrix of row-profile chi-squared distances.
pub fn row_distance_matrix(d: &CorrespondenceDecomposition, strategy: Strategy) -> Matrix {
    let n = d.shape().0;
    let rows = strategy.map_range(n, |i| {
        (0..n)
            .map(|i2| chi2_distance_rows(d, i, i2).expect("indices in range"))
            .collect::<Vec<f64>>()
    });
    Matrix::from_rows(&rows).expect("square distance matrix")
}

/// Largest deviation from the transition formulas
/// `F = D_r^-1 P Gamma` and `G = D_c^-1 P^T Phi`.
pub fn verify_transition(sol: &CaSolution, d: &CorrespondenceDecomposition) -> Result<f64> {
    let (ni, nj) = d.shape();
    if sol.n_rows() != ni || sol.n_cols() != nj {
        return Err(Error::Shape(format!(
            "solution is {}x{}, decomposition is {ni}x{nj}",
            sol.n_rows(),
            sol.n_cols()
        )));
    }
    let mut worst = 0.0f64;
    for k in 0..sol.rank {
        for i in 0..ni {
            let avg: f64 = (0..nj)
                .map(|j| d.p[(i, j)] * sol.gamma[(j, k)])
                .sum::<f64>()
                / d.row_masses[i];
            worst = worst.max((sol.f[(i, k)] - avg).abs());
        }
        for j in 0..nj {
            let avg: f64 =
                (0..ni).map(|i| d.p[(i, j)] * sol.phi[(i, k)]).sum::<f64>() / d.col_masses[j];
            worst = worst.max((sol.g[(j, k)] - avg).abs());
        }
    }
    Ok(worst)
}
