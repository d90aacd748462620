//! Covariance structures, dataset generation and signal functionals.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, CholeskyFactor, Matrix};

/// Shape of the covariate covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    /// Unit variances, every correlation equal to `c`.
    ConstantCorr { c: f64 },
    /// `exp(-w |i-j|_p)` with the toroidal distance.
    ToroidalExp { w: f64 },
    /// `(1 + |i-j|_p)^(-t)`.
    ToroidalPoly { t: f64 },
    /// Any symmetric positive definite matrix, given by rows.
    Explicit { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    #[serde(flatten)]
    pub kind: CovarianceKind,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn new(kind: CovarianceKind, p: usize) -> Self {
        CovarianceSpec { kind, p }
    }

    pub fn identity(p: usize) -> Self {
        Self::new(CovarianceKind::Identity, p)
    }
}

/// `min(|i-j|, p-|i-j|)`.
pub fn toroidal_distance(i: usize, j: usize, p: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(p - d)
}

/// Realizes the covariance matrix described by `spec`.
pub fn build_covariance(spec: &CovarianceSpec) -> Result<Matrix> {
    let p = spec.p;
    if p == 0 {
        return Err(Error::Spec("dimension p must be >= 1".into()));
    }
    let entry: Box<dyn Fn(usize, usize) -> f64> = match spec.kind {
        CovarianceKind::Identity => Box::new(|i, j| if i == j { 1.0 } else { 0.0 }),
        CovarianceKind::ConstantCorr { c } => {
            let lower = if p > 1 { -1.0 / (p as f64 - 1.0) + 1e-12 } else { f64::NEG_INFINITY };
            if !(c > lower && c < 1.0) {
                return Err(Error::Spec(format!(
                    "constant correlation c = {c} outside the positive definite range for p = {p}"
                )));
            }
            Box::new(move |i, j| if i == j { 1.0 } else { c })
        }
        CovarianceKind::ToroidalExp { w } => {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Spec(format!("toroidal_exp needs w > 0, got {w}")));
            }
            Box::new(move |i, j| (-w * toroidal_distance(i, j, p) as f64).exp())
        }
        CovarianceKind::ToroidalPoly { t } => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Spec(format!("toroidal_poly needs t > 0, got {t}")));
            }
            Box::new(move |i, j| (1.0 + toroidal_distance(i, j, p) as f64).powf(-t))
        }
        CovarianceKind::Explicit { ref rows } => {
            if rows.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: rows.len() });
            }
            let m = Matrix::from_rows(rows)?;
            if m.ncols() != p {
                return Err(Error::DimensionMismatch { expected: p, found: m.ncols() });
            }
            crate::numerics::cholesky(&m)?;
            return Ok(m);
        }
    };
    let mut m = Matrix::zeros(p, p);
    for j in 0..p {
        for i in 0..p {
            m.set(i, j, entry(i, j));
        }
    }
    Ok(m)
}

/// Regression coefficients and the total variance of the response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub theta: Vec<f64>,
    pub var_y: f64,
}

impl SignalSpec {
    pub fn null(p: usize) -> Self {
        SignalSpec { theta: vec![0.0; p], var_y: 1.0 }
    }
}

/// `θᵀ Σ θ`.
pub fn theta_norm_sq(theta: &[f64], sigma: &Matrix) -> Result<f64> {
    let s_theta = sigma.mul_vec(theta)?;
    Ok(dot(theta, &s_theta).max(0.0))
}

/// Signal-to-noise ratio `θᵀΣθ / (var_y - θᵀΣθ)`.
pub fn snr(theta: &[f64], sigma: &Matrix, var_y: f64) -> Result<f64> {
    let signal = theta_norm_sq(theta, sigma)?;
    if signal >= var_y {
        return Err(Error::SignalExceedsVariance { signal, total: var_y });
    }
    Ok(signal / (var_y - signal))
}

/// Response `y` and design `x` with `n` rows.
///
/// `augmented` holds the 1-based column index of an appended mean covariate,
/// if any. `centered` records that the empirical mean was removed, which
/// costs one degree of freedom in every test run on the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: Matrix,
    pub augmented: Option<usize>,
    pub centered: bool,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: Matrix) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: y.len(), found: x.nrows() });
        }
        Ok(Dataset { y, x, augmented: None, centered: false })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Degrees of freedom consumed by preprocessing (1 after centering).
    pub fn dof_adjustment(&self) -> usize {
        usize::from(self.centered)
    }

    /// Appends `column` as covariate `p + 1` and flags it.
    pub fn with_augmented(mut self, column: &[f64]) -> Result<Self> {
        self.x.push_column(column)?;
        self.augmented = Some(self.x.ncols());
        Ok(self)
    }
}

/// Draws datasets from a fixed `(Σ, θ, var_y)`; the Cholesky factor is
/// computed once.
#[derive(Debug, Clone)]
pub struct DatasetSampler {
    factor: CholeskyFactor,
    theta: Vec<f64>,
    noise_sd: f64,
}

impl DatasetSampler {
    pub fn new(spec: &CovarianceSpec, signal: &SignalSpec) -> Result<Self> {
        let sigma = build_covariance(spec)?;
        if signal.theta.len() != spec.p {
            return Err(Error::DimensionMismatch { expected: spec.p, found: signal.theta.len() });
        }
        let s = theta_norm_sq(&signal.theta, &sigma)?;
        if !(s < signal.var_y) {
            return Err(Error::SignalExceedsVariance { signal: s, total: signal.var_y });
        }
        Ok(DatasetSampler {
            factor: CholeskyFactor::new(&sigma)?,
            theta: signal.theta.clone(),
            noise_sd: (signal.var_y - s).sqrt(),
        })
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_sd * self.noise_sd
    }

    /// `n` rows: `X ~ N(0, Σ)`, then `Y = Xθ + ε` with independent noise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Dataset {
        let x = self.factor.sample(rng, n);
        let mut y = x.mul_vec(&self.theta).expect("theta length checked at construction");
        for yi in y.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *yi += self.noise_sd * e;
        }
        Dataset { y, x, augmented: None, centered: false }
    }
}

/// One dataset of `n` observations; see [`DatasetSampler`].
pub fn sample_dataset<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &CovarianceSpec,
    signal: &SignalSpec,
    n: usize,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InsufficientData("n must be >= 1".into()));
    }
    Ok(DatasetSampler::new(spec, signal)?.sample(rng, n))
}

/// Row-wise mean of the standardized columns, `(1/p) Σ X_i / sd_i`.
pub fn augment_mean_covariate(x: &Matrix, sigma_diag: &[f64]) -> Result<Vec<f64>> {
    let p = x.ncols();
    if sigma_diag.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: sigma_diag.len() });
    }
    let mut out = vec![0.0; x.nrows()];
    for (j, &v) in sigma_diag.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::DegenerateCovariate { index: j + 1, variance: v });
        }
        let scale = 1.0 / (v.sqrt() * p as f64);
        for (o, xij) in out.iter_mut().zip(x.col(j)) {
            *o += scale * xij;
        }
    }
    Ok(out)
}

/// Removes the empirical mean from `y` and every column of `x`.
///
/// The returned integer is the number of degrees of freedom to add to `d`.
pub fn center_unknown_mean(data: &Dataset) -> Result<(Dataset, usize)> {
    let n = data.n();
    if n < 2 {
        return Err(Error::InsufficientData(format!("centering needs n >= 2, got {n}")));
    }
    let mut out = data.clone();
    center(&mut out.y);
    for j in 0..out.x.ncols() {
        center(out.x.col_mut(j));
    }
    out.centered = true;
    Ok((out, 1))
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_corr_zero_is_identity() {
        let m = build_covariance(&CovarianceSpec::new(CovarianceKind::ConstantCorr { c: 0.0 }, 3)).unwrap();
        assert_eq!(m, Matrix::identity(3));
    }

    #[test]
    fn toroidal_entries() {
        let w = 0.7;
        let m = build_covariance(&CovarianceSpec::new(CovarianceKind::ToroidalExp { w }, 4)).unwrap();
        assert!((m.get(0, 2) - (-2.0 * w).exp()).abs() < 1e-15);
        assert!((m.get(0, 3) - (-w).exp()).abs() < 1e-15);
        let m = build_covariance(&CovarianceSpec::new(CovarianceKind::ToroidalPoly { t: 1.0 }, 5)).unwrap();
        assert!((m.get(0, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs() {
        for kind in [
            CovarianceKind::ConstantCorr { c: 1.0 },
            CovarianceKind::ConstantCorr { c: -0.5 },
            CovarianceKind::ToroidalExp { w: 0.0 },
            CovarianceKind::ToroidalPoly { t: -1.0 },
        ] {
            assert!(build_covariance(&CovarianceSpec::new(kind, 3)).is_err());
        }
        let bad = CovarianceKind::Explicit { rows: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(matches!(
            build_covariance(&CovarianceSpec::new(bad, 2)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn norms_and_snr() {
        let id = Matrix::identity(4);
        assert!((theta_norm_sq(&[0.8, 0.0, 0.0, 0.0], &id).unwrap() - 0.64).abs() < 1e-15);
        let c = 0.3;
        let cc = build_covariance(&CovarianceSpec::new(CovarianceKind::ConstantCorr { c }, 4)).unwrap();
        let a = 0.5;
        let got = theta_norm_sq(&[a, a, 0.0, 0.0], &cc).unwrap();
        assert!((got - 2.0 * a * a * (1.0 + c)).abs() < 1e-15);
        assert!((snr(&[0.8, 0.0, 0.0, 0.0], &id, 1.0).unwrap() - 0.64 / 0.36).abs() < 1e-12);
        let r = snr(&[0.9, 0.0, 0.0, 0.0], &id, 1.0).unwrap();
        assert_eq!(format!("{r:.2}"), "4.26");
        assert!(matches!(snr(&[1.0, 0.0, 0.0, 0.0], &id, 1.0), Err(Error::SignalExceedsVariance { .. })));
    }

    #[test]
    fn sampler_noise_variance() {
        let mut theta = vec![0.0; 5];
        theta[0] = 0.8;
        let s = DatasetSampler::new(&CovarianceSpec::identity(5), &SignalSpec { theta, var_y: 1.0 }).unwrap();
        assert!((s.noise_variance() - 0.36).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = s.sample(&mut rng, 7);
        assert_eq!((d.n(), d.p()), (7, 5));
    }

    #[test]
    fn centering() {
        let x = Matrix::from_columns(vec![vec![3.0; 4], vec![1.0, 2.0, 3.0, 10.0]]).unwrap();
        let d = Dataset::new(vec![1.0, -1.0, 2.0, 0.5], x).unwrap();
        let (c, adj) = center_unknown_mean(&d).unwrap();
        assert_eq!(adj, 1);
        assert!(c.x.col(0).iter().all(|v| *v == 0.0));
        let (cc, _) = center_unknown_mean(&c).unwrap();
        for (a, b) in cc.y.iter().zip(&c.y) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(cc.dof_adjustment(), 1);
        let tiny = Dataset::new(vec![1.0], Matrix::zeros(1, 1)).unwrap();
        assert!(center_unknown_mean(&tiny).is_err());
    }

    #[test]
    fn mean_covariate() {
        let x = Matrix::from_columns(vec![vec![2.0, 4.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(augment_mean_covariate(&x, &[1.0, 1.0]).unwrap(), vec![1.0, 3.0]);
        assert_eq!(augment_mean_covariate(&x, &[4.0, 1.0]).unwrap(), vec![0.5, 2.0]);
        assert!(augment_mean_covariate(&x, &[1.0, 0.0]).is_err());
    }
}
