//! Correspondence analysis of two-way tables, with tools for finding
//! cell-wise outliers and for refitting once they are handled, either by
//! reconstitution of order `h` or as supplementary points.
//!
//! ```
//! use cellca::{datasets, fit_ca};
//!
//! let sol = fit_ca(&datasets::car()).unwrap();
//! assert_eq!(sol.rank, 6);
//! assert!((sol.sigma[0] - 0.3355).abs() < 1e-3);
//! ```

pub mod ca;
pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod reconstitution;
pub mod supplementary;
pub mod table;

pub use ca::{decompose, fit_ca, CaSolution, CorrespondenceDecomposition};
pub use diagnostics::{decompose_inertia, outlier_report, InertiaDecomposition, OutlierReport};
pub use error::{Axis, Error, Result};
pub use exec::Strategy;
pub use linalg::Matrix;
pub use reconstitution::{
    reconstitute, CellSet, InitRule, NegativePolicy, ReconstitutionConfig, ReconstitutionResult,
};
pub use supplementary::{fit_supplementary, SupplementarySolution, SupplementarySpec};
pub use table::ContingencyTable;
