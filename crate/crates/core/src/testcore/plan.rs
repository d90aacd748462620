//! Precomputed orthonormal increments for every model of a collection.
//!
//! For each model `m` we store orthonormal vectors spanning
//! `span(X_{V∪m}) ⊖ span(X_V)`. When a model contains its predecessor the
//! predecessor's vectors are reused and only the new columns are
//! orthogonalised, so a nested chain costs one Gram-Schmidt pass overall.
//! A statistic for any response then needs only inner products.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::collections::Model;
use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix, OrthonormalBasis, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedModel {
    pub model: Model,
    /// First pool vector of the model's chain.
    start: usize,
    /// `D_m`: numerical rank increment from `V` to `V ∪ m`.
    pub rank_increment: usize,
    /// `N_m = n - rank(V) - D_m`.
    pub residual_df: usize,
}

/// Squared-norm decomposition of one response vector.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub total: f64,
    pub on_v: f64,
    /// Per pool vector, running sum of squared coefficients within its chain.
    partial: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProjectionPlan {
    n: usize,
    base: OrthonormalBasis,
    pool: Vec<f64>,
    chain_start: Vec<usize>,
    models: Vec<PlannedModel>,
    fingerprint: u64,
}

impl ProjectionPlan {
    /// `v` and the models use 1-based column indices of `x`. With
    /// `centered`, the constant direction is added to `V`.
    pub fn new(x: &Matrix, v: &[usize], models: &[Model], centered: bool) -> Result<Self> {
        let n = x.nrows();
        let p = x.ncols();
        let check = |i: usize| -> Result<usize> {
            if i == 0 || i > p {
                Err(Error::InfeasibleCollection(format!("column index {i} outside 1..={p}")))
            } else {
                Ok(i - 1)
            }
        };
        let max_norm = (0..p).map(|j| dot(x.col(j), x.col(j)).sqrt()).fold(0.0, f64::max);
        let tol = DEFAULT_RANK_TOL * max_norm.max(1.0);

        let mut base = OrthonormalBasis::empty(n);
        if centered {
            base.extend(&vec![1.0; n], tol)?;
        }
        for &i in v {
            base.extend(x.col(check(i)?), tol)?;
        }

        let mut pool = Vec::new();
        let mut chain_start = Vec::new();
        let mut planned = Vec::with_capacity(models.len());
        let mut current = base.clone();
        let mut chain = 0usize;
        let mut prev: Option<&Model> = None;
        for m in models {
            if m.is_empty() {
                return Err(Error::InfeasibleCollection("empty model".into()));
            }
            if let Some(i) = m.iter().find(|i| v.contains(i)) {
                return Err(Error::InfeasibleCollection(format!("model index {i} lies in V")));
            }
            let extends = prev.is_some_and(|pm| pm.iter().all(|i| m.contains(i)));
            let new_cols: Vec<usize> = if extends {
                let pm = prev.unwrap();
                m.iter().copied().filter(|i| !pm.contains(i)).collect()
            } else {
                current = base.clone();
                chain = chain_start.len();
                m.clone()
            };
            for i in new_cols {
                if current.extend(x.col(check(i)?), tol)? {
                    pool.extend_from_slice(current.vectors().last().unwrap());
                    chain_start.push(chain);
                }
            }
            let d_m = current.rank() - base.rank();
            if n <= current.rank() {
                return Err(Error::InfeasibleCollection(format!(
                    "model {m:?}: rank {} leaves no residual degrees of freedom with n = {n}",
                    current.rank()
                )));
            }
            planned.push(PlannedModel {
                model: m.clone(),
                start: chain,
                rank_increment: d_m,
                residual_df: n - current.rank(),
            });
            prev = Some(m);
        }

        let mut h = DefaultHasher::new();
        (n, p, centered).hash(&mut h);
        x.as_slice().iter().for_each(|f| f.to_bits().hash(&mut h));
        v.hash(&mut h);
        models.hash(&mut h);
        Ok(ProjectionPlan { n, base, pool, chain_start, models: planned, fingerprint: h.finish() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `rank(V)`, including the constant direction when centered.
    pub fn base_rank(&self) -> usize {
        self.base.rank()
    }

    pub fn models(&self) -> &[PlannedModel] {
        &self.models
    }

    /// Hash of the design, `V`, the models and the centering flag.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn decompose(&self, z: &[f64]) -> Decomposition {
        debug_assert_eq!(z.len(), self.n);
        let on_v = self.base.vectors().iter().map(|b| dot(z, b).powi(2)).sum();
        let mut partial = Vec::with_capacity(self.chain_start.len());
        for (k, b) in self.pool.chunks_exact(self.n).enumerate() {
            let c = dot(z, b).powi(2);
            let prior = if self.chain_start[k] == k { 0.0 } else { partial[k - 1] };
            partial.push(prior + c);
        }
        Decomposition { total: dot(z, z), on_v, partial }
    }

    /// `(‖Π_{V∪m}z − Π_V z‖², ‖z − Π_{V∪m}z‖²)` for model number `idx`.
    pub fn split(&self, dec: &Decomposition, idx: usize) -> (f64, f64) {
        let pm = &self.models[idx];
        let num = if pm.rank_increment == 0 { 0.0 } else { dec.partial[pm.start + pm.rank_increment - 1] };
        (num, (dec.total - dec.on_v - num).max(0.0))
    }
}
