//! Linear algebra, Fisher distribution functions and Gaussian sampling.

mod fisher;
mod linalg;
mod mvn;
mod special;

pub use fisher::{fisher_isf, fisher_sf, FisherParams};
pub use linalg::{
    axpy, cholesky, dot, norm_sq, orthonormalize, project, Matrix, OrthonormalBasis,
    DEFAULT_RANK_TOL,
};
pub use mvn::{sample_mvn, CholeskyFactor};
pub use special::{inc_beta_pair, ln_gamma, reg_inc_beta};
