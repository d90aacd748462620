//! Multivariate normal sampling through a Cholesky factor.

use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::{cholesky, Matrix};
use crate::error::Result;

/// Lower-triangular factor of a covariance matrix, ready for sampling.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Matrix,
    identity: bool,
}

impl CholeskyFactor {
    pub fn new(sigma: &Matrix) -> Result<Self> {
        let lower = cholesky(sigma)?;
        let identity = lower == Matrix::identity(lower.nrows());
        Ok(CholeskyFactor { lower, identity })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Fills `out` with one draw `L z`, `z ~ N(0, I)`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let p = self.dim();
        debug_assert_eq!(out.len(), p);
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
        if self.identity {
            return;
        }
        // out <- L out, bottom row first so inputs are still unread.
        for i in (0..p).rev() {
            let mut s = 0.0;
            for k in 0..=i {
                s += self.lower.get(i, k) * out[k];
            }
            out[i] = s;
        }
    }

    /// `count` independent rows drawn from `N(0, L L^T)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Matrix {
        let p = self.dim();
        let mut x = Matrix::zeros(count, p);
        let mut row = vec![0.0; p];
        for i in 0..count {
            self.sample_into(rng, &mut row);
            for (j, v) in row.iter().enumerate() {
                x.set(i, j, *v);
            }
        }
        x
    }
}

/// `count x p` matrix whose rows are i.i.d. `N(0, sigma)`.
pub fn sample_mvn<R: Rng + ?Sized>(rng: &mut R, sigma: &Matrix, count: usize) -> Result<Matrix> {
    Ok(CholeskyFactor::new(sigma)?.sample(rng, count))
}
