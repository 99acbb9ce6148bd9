//! Dense linear algebra used by every correspondence-analysis computation.

mod matrix;
mod svd;

pub use matrix::Matrix;
pub use svd::{svd, SvdFactorization, NULL_RELATIVE};
