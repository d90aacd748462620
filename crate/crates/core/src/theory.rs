//! Closed-form power thresholds and minimax rates of testing.
//!
//! Lower bounds are stated with the explicit constants that come out of
//! their proofs, written in terms of `η = 2(1 − α − δ)` and
//! `L(η) = log(1 + 2η²)/2`. Every rate carries a `convention` string saying
//! which constant was used, so a conventional constant is never mistaken for
//! a sharp one.

use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use crate::collections::{Model, ModelCollection};
use crate::error::{Error, Result};

/// `η = 2(1 − α − δ)`.
pub fn eta(alpha: f64, delta: f64) -> f64 {
    2.0 * (1.0 - alpha - delta)
}

/// `L(η) = log(1 + 2η²)/2`.
pub fn l_eta(eta: f64) -> f64 {
    (1.0 + 2.0 * eta * eta).ln() / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmModelCheck {
    pub model: Model,
    pub alpha_m: f64,
    pub n_m: usize,
    /// `α_m ≥ exp(−N_m/10)`.
    pub level_ok: bool,
    /// `δ ≥ 2 exp(−N_m/21)`.
    pub delta_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmReport {
    pub holds: bool,
    pub per_model: Vec<HmModelCheck>,
}

/// Checks the sufficient condition of the power theorem on every model.
pub fn check_hypothesis_hm(collection: &ModelCollection, delta: f64) -> HmReport {
    let per_model: Vec<HmModelCheck> = collection
        .models
        .iter()
        .zip(&collection.weights)
        .map(|(m, &a)| {
            let n_m = collection.residual_df(m);
            let nf = n_m as f64;
            HmModelCheck {
                model: m.clone(),
                alpha_m: a,
                n_m,
                level_ok: a >= (-nf / 10.0).exp(),
                delta_ok: delta >= 2.0 * (-nf / 21.0).exp(),
            }
        })
        .collect();
    HmReport { holds: per_model.iter().all(|c| c.level_ok && c.delta_ok), per_model }
}

/// Inputs of the explicit power thresholds `Δ̄_m(δ)` and `Δ'_m(δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerThresholdInputs {
    pub d_m: usize,
    pub n_m: usize,
    pub alpha_m: f64,
    pub delta: f64,
    pub n: usize,
    pub d: usize,
}

impl PowerThresholdInputs {
    fn validate(&self) -> Result<()> {
        if self.d_m == 0 || self.n_m == 0 {
            return Err(Error::Domain("D_m and N_m must be positive".into()));
        }
        if !(self.alpha_m > 0.0 && self.alpha_m < 1.0 && self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!(
                "alpha_m = {} and delta = {} must lie in (0, 1)",
                self.alpha_m, self.delta
            )));
        }
        if self.n < self.d + self.d_m || self.n - self.d - self.d_m != self.n_m {
            return Err(Error::Domain(format!(
                "inconsistent degrees of freedom: N_m = {} but n - d - D_m = {} - {} - {}",
                self.n_m, self.n, self.d, self.d_m
            )));
        }
        Ok(())
    }
}

/// `Δ̄_m(δ)`, the threshold on `‖Π_{V∪m}Xθ − Π_V Xθ‖²/var(Y|X)` beyond which
/// the single test of `m` rejects with probability at least `1 − δ`.
pub fn delta_bar_threshold(inp: &PowerThresholdInputs) -> Result<f64> {
    inp.validate()?;
    let d = inp.d_m as f64;
    let n = inp.n_m as f64;
    let u_m = (1.0 / inp.alpha_m).ln();
    let u = (2.0 / inp.delta).ln();
    let k_m = 2.0 * (4.0 * u_m / n).exp();
    let big_k = 1.0 + 2.0 * (u / n).sqrt() + 2.0 * k_m * u / n;
    let log_term = (4.0 / (inp.alpha_m * inp.delta)).ln();
    Ok(2.5 * (1.0 + big_k * big_k).sqrt() * (d * log_term).sqrt() * (1.0 + (d / n).sqrt())
        + 2.5 * (k_m * big_k).max(5.0) * log_term * (1.0 + 2.0 * d / n))
}

/// `Δ'_m(δ) = Δ̄_m(δ) / [(n−d)(1 − 2√(U/(n−d)))]`, the bound on the
/// signal-to-noise gain of `m`.
pub fn delta_prime_threshold(inp: &PowerThresholdInputs) -> Result<f64> {
    let bar = delta_bar_threshold(inp)?;
    let nd = (inp.n - inp.d) as f64;
    let u = (2.0 / inp.delta).ln();
    if nd <= 4.0 * u * (1.0 + 1e-12) {
        return Err(Error::GuaranteeVoid { n_minus_d: nd, bound: 4.0 * u });
    }
    Ok(bar / (nd * (1.0 - 2.0 * (u / nd).sqrt())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateVariant {
    SparseLower,
    SparseClaim53,
    FullLower,
    ConstCorrLower,
    ToroidalExpLower,
    ToroidalPolyLower,
    NestedLower,
    EllipsoidLower,
    EllipsoidAdaptiveLower,
    SparseUpperShape,
}

impl RateVariant {
    pub fn name(self) -> &'static str {
        match self {
            RateVariant::SparseLower => "sparse_lower",
            RateVariant::SparseClaim53 => "sparse_claim53",
            RateVariant::FullLower => "full_lower",
            RateVariant::ConstCorrLower => "const_corr_lower",
            RateVariant::ToroidalExpLower => "toroidal_exp_lower",
            RateVariant::ToroidalPolyLower => "toroidal_poly_lower",
            RateVariant::NestedLower => "nested_lower",
            RateVariant::EllipsoidLower => "ellipsoid_lower",
            RateVariant::EllipsoidAdaptiveLower => "ellipsoid_adaptive_lower",
            RateVariant::SparseUpperShape => "sparse_upper_shape",
        }
    }
}

/// A rate formula and whichever parameters it needs.
///
/// `dim` is the model dimension `D` of `nested_lower`; `a` is the full
/// sequence `a_1, …, a_{p+1}` for the ellipsoid rates; `constant` is the
/// shape constant `C` of `sparse_upper_shape` (default 1).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RateParams {
    pub k: Option<usize>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub w: Option<f64>,
    pub t: Option<f64>,
    pub dim: Option<usize>,
    pub a: Option<Vec<f64>>,
    pub r: Option<f64>,
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    pub variant: RateVariant,
    #[serde(flatten)]
    pub params: RateParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateValue {
    pub variant: RateVariant,
    pub value: f64,
    pub convention: String,
}

fn need<T: Clone>(v: &Option<T>, name: &'static str) -> Result<T> {
    v.clone().ok_or(Error::MissingParam(name))
}

fn eta_of(params: &RateParams, cap: Option<f64>) -> Result<f64> {
    let alpha = need(&params.alpha, "alpha")?;
    let delta = need(&params.delta, "delta")?;
    check_alpha_delta(alpha, delta, cap)?;
    Ok(eta(alpha, delta))
}

fn check_alpha_delta(alpha: f64, delta: f64, cap: Option<f64>) -> Result<()> {
    if !(alpha > 0.0 && delta > 0.0 && alpha + delta < 1.0) {
        return Err(Error::Domain(format!(
            "need alpha > 0, delta > 0 and alpha + delta < 1, got alpha = {alpha}, delta = {delta}"
        )));
    }
    if let Some(cap) = cap {
        if alpha + delta > cap {
            return Err(Error::Domain(format!("this bound requires alpha + delta <= {cap}")));
        }
    }
    Ok(())
}

fn positive_n(params: &RateParams) -> Result<f64> {
    let n = need(&params.n, "n")?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    Ok(n as f64)
}

fn k_and_p(params: &RateParams) -> Result<(f64, f64)> {
    let k = need(&params.k, "k")?;
    let p = need(&params.p, "p")?;
    if k == 0 || k > p {
        return Err(Error::Domain(format!("need 1 <= k <= p, got k = {k}, p = {p}")));
    }
    Ok((k as f64, p as f64))
}

fn full_lower(p: f64, n: f64, eta: f64) -> f64 {
    let l = l_eta(eta);
    2f64.sqrt() * l.sqrt().min(l / LN_2.sqrt()) * p.sqrt() / n
}

fn nested_lower(dim: f64, n: f64, eta: f64) -> f64 {
    let loglog = (dim + 1.0).ln().ln().max(0.0);
    (1.0 / (2.0 * LN_2.sqrt())) * (1.0f64).min((1.0 + 2.0 * eta * eta).ln()) * loglog.sqrt() * dim.sqrt() / n
}

/// `a_1, …, a_{p+1}`, checked: `a_1 = 1`, nonincreasing, `a_{p+1} = 0`.
fn checked_sequence(a: &[f64]) -> Result<usize> {
    if a.len() < 2 {
        return Err(Error::MalformedSequence("need at least a_1 and a_{p+1}".into()));
    }
    if a[0] != 1.0 {
        return Err(Error::MalformedSequence(format!("a_1 must be 1, got {}", a[0])));
    }
    if *a.last().unwrap() != 0.0 {
        return Err(Error::MalformedSequence("a_{p+1} must be 0".into()));
    }
    if let Some(i) = a.windows(2).position(|w| !(w[1] <= w[0]) || !(w[1] >= 0.0)) {
        return Err(Error::MalformedSequence(format!("sequence increases or turns negative at index {}", i + 2)));
    }
    Ok(a.len() - 1)
}

/// Evaluates a rate formula.
///
/// ```
/// use hdtest::theory::{minimax_rate, RateParams, RateQuery, RateVariant};
/// let q = RateQuery {
///     variant: RateVariant::SparseClaim53,
///     params: RateParams { k: Some(1), p: Some(30), n: Some(15), ..Default::default() },
/// };
/// let v = minimax_rate(&q).unwrap();
/// assert!((v.value - 31f64.ln() / 30.0).abs() < 1e-15);
/// ```
pub fn minimax_rate(q: &RateQuery) -> Result<RateValue> {
    let ps = &q.params;
    let explicit = "explicit proof constant, eta = 2(1-alpha-delta), L(eta) = log(1+2 eta^2)/2";
    let (value, convention): (f64, String) = match q.variant {
        RateVariant::SparseLower => {
            let (k, p) = k_and_p(ps)?;
            let n = positive_n(ps)?;
            let e = eta_of(ps, None)?;
            let r = p / (k * k);
            let v = (k / n) * l_eta(e).min(1.0) * (1.0 + r + (2.0 * r).sqrt()).ln();
            (v, format!("constant L(eta) ∧ 1; {explicit}"))
        }
        RateVariant::SparseClaim53 => {
            let (k, p) = k_and_p(ps)?;
            let n = positive_n(ps)?;
            if let (Some(a), Some(d)) = (ps.alpha, ps.delta) {
                check_alpha_delta(a, d, Some(0.53))?;
            }
            let r = p / (k * k);
            ((k / (2.0 * n)) * (1.0 + r.max(r.sqrt())).ln(), "constant 1/2, valid when alpha + delta <= 0.53".into())
        }
        RateVariant::FullLower => {
            let p = need(&ps.p, "p")? as f64;
            let n = positive_n(ps)?;
            let e = eta_of(ps, None)?;
            (full_lower(p, n, e), format!("constant sqrt(2)[sqrt(L) ∧ L/sqrt(log 2)]; {explicit}"))
        }
        RateVariant::ConstCorrLower => {
            let p = need(&ps.p, "p")? as f64;
            let n = positive_n(ps)?;
            let c = need(&ps.c, "c")?;
            if !(0.0..1.0).contains(&c) {
                return Err(Error::Domain(format!("c must lie in [0, 1), got {c}")));
            }
            let e = eta_of(ps, Some(0.53))?;
            let first = (1.0 + p * e * e).ln();
            let second = if c > 0.0 { (1.0 + e * e).ln() / c } else { f64::INFINITY };
            (first.min(second) / n, format!("min(log(1+p eta^2), log(1+eta^2)/c)/n; {explicit}"))
        }
        RateVariant::ToroidalExpLower => {
            let p = need(&ps.p, "p")? as f64;
            let n = positive_n(ps)?;
            let w = need(&ps.w, "w")?;
            if !(w > 0.0) {
                return Err(Error::Domain(format!("w must be > 0, got {w}")));
            }
            let e = eta_of(ps, None)?;
            let l = 2.0 * e * e;
            let ew = (-w).exp();
            ((1.0 + l * p * (1.0 - ew) / (1.0 + ew)).ln() / n, format!("L = 2 eta^2; {explicit}"))
        }
        RateVariant::ToroidalPolyLower => {
            let p = need(&ps.p, "p")? as f64;
            let n = positive_n(ps)?;
            let t = need(&ps.t, "t")?;
            if !(t > 0.0) {
                return Err(Error::Domain(format!("t must be > 0, got {t}")));
            }
            let e = eta_of(ps, None)?;
            let l = 2.0 * e * e;
            let inner = if t > 1.0 {
                p * (t - 1.0) / (t + 1.0)
            } else if t == 1.0 {
                if p < 2.0 {
                    return Err(Error::Domain("t = 1 needs p >= 2".into()));
                }
                p / (1.0 + 2.0 * (p - 1.0).ln())
            } else {
                p.powf(t) * 2f64.powf(-t) * (1.0 - t)
            };
            ((1.0 + l * inner).ln() / n, format!("L = 2 eta^2; {explicit}"))
        }
        RateVariant::NestedLower => {
            let dim = need(&ps.dim, "dim")?;
            if dim == 0 {
                return Err(Error::Domain("dim must be >= 1".into()));
            }
            let n = positive_n(ps)?;
            let e = eta_of(ps, None)?;
            (
                nested_lower(dim as f64, n, e),
                format!("constant (1 ∧ log(1+2 eta^2))/(2 sqrt(log 2)), loglog clamped at 0; {explicit}"),
            )
        }
        RateVariant::EllipsoidLower => {
            let a = need(&ps.a, "a")?;
            let p = checked_sequence(&a)?;
            let r = need(&ps.r, "r")?;
            let n = positive_n(ps)?;
            let e = eta_of(ps, None)?;
            let v = (1..=p)
                .map(|i| full_lower(i as f64, n, e).min(a[i - 1] * a[i - 1] * r * r))
                .fold(0.0, f64::max);
            (v, format!("sup_i [full_lower(i) ∧ a_i^2 R^2]; {explicit}"))
        }
        RateVariant::EllipsoidAdaptiveLower => {
            let a = need(&ps.a, "a")?;
            let p = checked_sequence(&a)?;
            let r = need(&ps.r, "r")?;
            let n = positive_n(ps)?;
            let e = eta_of(ps, None)?;
            let v = (1..=p)
                .map(|d| nested_lower(d as f64, n, e).min(r * r * a[d - 1] * a[d - 1]))
                .fold(0.0, f64::max);
            (v, format!("sup_D [nested_lower(D) ∧ R^2 a_D^2]; {explicit}"))
        }
        RateVariant::SparseUpperShape => {
            let (k, p) = k_and_p(ps)?;
            let n = positive_n(ps)?;
            let c = ps.constant.unwrap_or(1.0);
            (c * k * (E * p / k).ln() / n, format!("shape only, conventional constant C = {c}"))
        }
    };
    Ok(RateValue { variant: q.variant, value, convention })
}

/// `D* = inf{1 ≤ i ≤ p : a_i² R² ≤ √i / n}`, or `p` when no index qualifies.
///
/// `a` is the full sequence `a_1, …, a_{p+1}`.
pub fn d_star(a: &[f64], r: f64, n: usize) -> Result<usize> {
    let p = checked_sequence(a)?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let n = n as f64;
    Ok((1..=p).find(|&i| a[i - 1] * a[i - 1] * r * r <= (i as f64).sqrt() / n).unwrap_or(p))
}
