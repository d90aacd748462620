//! Dense column-major matrices, Gram-Schmidt bases and orthogonal projections.

use crate::error::{Error, Result};

/// Relative rank tolerance used when the caller does not supply one.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A dense `nrows x ncols` matrix stored column by column.
///
/// Designs are consumed one column at a time (projections, Gram-Schmidt),
/// so columns are the contiguous unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from its columns. All columns must share one length.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for c in columns {
            if c.len() != nrows {
                return Err(Error::DimensionMismatch {
                    expected: nrows,
                    found: c.len(),
                });
            }
            data.extend(c);
        }
        Ok(Matrix { nrows, ncols, data })
    }

    /// Builds a matrix from row slices, the natural layout for literals.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    found: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.nrows;
        &mut self.data[j * n..(j + 1) * n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.ncols).map(move |j| self.col(j))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    /// Appends a column in place.
    pub fn push_column(&mut self, column: &[f64]) -> Result<()> {
        if self.ncols > 0 && column.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: column.len(),
            });
        }
        if self.ncols == 0 {
            self.nrows = column.len();
        }
        self.data.extend_from_slice(column);
        self.ncols += 1;
        Ok(())
    }

    /// Raw column-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols
            && (0..self.nrows)
                .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: v.len(),
            });
        }
        let mut out = vec![0.0; self.nrows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                axpy(vj, self.col(j), &mut out);
            }
        }
        Ok(out)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Orthonormal vectors of a common ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthonormalBasis {
    /// The basis of the zero subspace of `R^dim`.
    pub fn empty(dim: usize) -> Self {
        OrthonormalBasis {
            dim,
            vectors: Vec::new(),
        }
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Orthogonalises `column` against the current vectors (modified
    /// Gram-Schmidt, two passes) and appends the normalised residual unless
    /// its norm is `<= tol`. Returns whether the rank grew.
    pub fn extend(&mut self, column: &[f64], tol: f64) -> Result<bool> {
        if self.vectors.is_empty() && self.dim == 0 {
            self.dim = column.len();
        }
        if column.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: column.len(),
            });
        }
        let mut w = column.to_vec();
        for _ in 0..2 {
            for b in &self.vectors {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let norm = norm_sq(&w).sqrt();
        if norm <= tol || norm == 0.0 {
            return Ok(false);
        }
        w.iter_mut().for_each(|x| *x /= norm);
        self.vectors.push(w);
        Ok(true)
    }

    /// Coefficients `<y, b_j>` of `y` on each basis vector.
    pub fn coefficients(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        Ok(self.vectors.iter().map(|b| dot(y, b)).collect())
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if !self.vectors.is_empty() && y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        Ok(())
    }
}

/// Orthonormal basis of the span of `columns`.
///
/// Columns whose residual after projection on the previously accepted
/// vectors has norm `<= tol` are dropped. `tol = None` means
/// `1e-10 * max column norm`.
pub fn orthonormalize<C: AsRef<[f64]>>(columns: &[C], tol: Option<f64>) -> Result<OrthonormalBasis> {
    let Some(first) = columns.first() else {
        return Ok(OrthonormalBasis::empty(0));
    };
    let n = first.as_ref().len();
    let mut max_norm: f64 = 0.0;
    for c in columns {
        let c = c.as_ref();
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.len(),
            });
        }
        max_norm = max_norm.max(norm_sq(c).sqrt());
    }
    let tol = tol.unwrap_or(DEFAULT_RANK_TOL * max_norm);
    if tol < 0.0 {
        return Err(Error::Domain(format!("rank tolerance must be >= 0, got {tol}")));
    }
    let mut basis = OrthonormalBasis::empty(n);
    for c in columns {
        basis.extend(c.as_ref(), tol)?;
    }
    Ok(basis)
}

/// Orthogonal projection of `y` on the span of `basis`.
pub fn project(y: &[f64], basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    basis.check_dim(y)?;
    let mut out = vec![0.0; y.len()];
    for b in basis.vectors() {
        axpy(dot(y, b), b, &mut out);
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor `L` with `sigma = L L^T`.
///
/// Fails when a pivot falls to `1e-12` or below.
pub fn cholesky(sigma: &Matrix) -> Result<Matrix> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: sigma.ncols(),
        });
    }
    if !sigma.is_symmetric(1e-12 * (1.0 + max_abs(sigma))) {
        return Err(Error::Spec("covariance matrix is not symmetric".into()));
    }
    let mut l = Matrix::zeros(p, p);
    for j in 0..p {
        let mut d = sigma.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 1e-12) {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in j + 1..p {
            let mut s = sigma.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

fn max_abs(m: &Matrix) -> f64 {
    m.as_slice().iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
}
