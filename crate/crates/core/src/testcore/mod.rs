//! Fisher statistics, single tests and the multiple test `T_α` under the
//! Bonferroni (P1) and conditional Monte-Carlo (P2) calibrations.

mod plan;
mod quantile;

use std::collections::HashMap;
use std::fmt;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collections::{Model, ModelCollection};
use crate::covmodels::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{fisher_isf, FisherParams};

pub use plan::{Decomposition, PlannedModel, ProjectionPlan};
pub use quantile::{estimate_q, estimate_q_seeded, QuantileCache};

/// Default number of Monte-Carlo draws for P2.
pub const DEFAULT_MC_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "snake_case")]
pub enum Procedure {
    /// Bonferroni: model `m` is tested at its own weight `α_m`.
    P1,
    /// Every model tested at the conditional quantile `q_{X,α}`, estimated
    /// with `draws` simulated responses.
    P2 { draws: usize },
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Procedure::P1 => f.write_str("P1"),
            Procedure::P2 { .. } => f.write_str("P2"),
        }
    }
}

/// One Fisher test inside the multiple procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStat {
    pub model: Model,
    pub phi: f64,
    pub d_m: usize,
    pub n_m: usize,
    /// Level the model was tested at (`α_m` or `q`).
    pub level: f64,
    pub threshold: f64,
    pub rejected: bool,
}

impl SingleStat {
    /// `|m| - D_m`: columns that added no numerical rank.
    pub fn rank_deficit(&self) -> usize {
        self.model.len() - self.d_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub per_model: Vec<SingleStat>,
    /// `sup_m (φ_m − threshold_m)`.
    pub t_alpha: f64,
    pub rejected: bool,
    pub procedure: Procedure,
    pub q_estimate: Option<f64>,
    pub mc_draws: Option<usize>,
    /// Models left out: no rank added to `V`, or `Y` in their span.
    pub skipped: Vec<Model>,
}

fn ratio(num: f64, res: f64, d_m: usize, n_m: usize) -> f64 {
    num * n_m as f64 / (res * d_m as f64)
}

/// Model statistics for `y` on `plan`: `Some((φ, D, N))`, or `None` when the
/// model is skipped.
fn plan_statistics(plan: &ProjectionPlan, y: &[f64]) -> Vec<Option<(f64, usize, usize)>> {
    let dec = plan.decompose(y);
    let floor = 1e-12 * dec.total;
    plan.models()
        .iter()
        .enumerate()
        .map(|(k, pm)| {
            let (num, res) = plan.split(&dec, k);
            if pm.rank_increment == 0 || res <= floor {
                None
            } else {
                Some((ratio(num, res, pm.rank_increment, pm.residual_df), pm.rank_increment, pm.residual_df))
            }
        })
        .collect()
}

fn check_dataset(data: &Dataset, v: &[usize]) -> Result<()> {
    if let Some(&i) = v.iter().find(|&&i| i == 0 || i > data.p()) {
        return Err(Error::InfeasibleCollection(format!("V index {i} outside 1..={}", data.p())));
    }
    Ok(())
}

/// `(φ_m, D_m, N_m)` for one model.
///
/// ```
/// use hdtest::covmodels::Dataset;
/// use hdtest::numerics::Matrix;
/// use hdtest::testcore::fisher_stat;
/// let x = Matrix::from_columns(vec![vec![1.0, 0.0, 0.0]]).unwrap();
/// let data = Dataset::new(vec![2.0, 1.0, 1.0], x).unwrap();
/// let (phi, d, n) = fisher_stat(&data, &[], &[1]).unwrap();
/// assert!((phi - 4.0).abs() < 1e-12);
/// assert_eq!((d, n), (1, 2));
/// ```
pub fn fisher_stat(data: &Dataset, v: &[usize], m: &[usize]) -> Result<(f64, usize, usize)> {
    check_dataset(data, v)?;
    let plan = ProjectionPlan::new(&data.x, v, &[m.to_vec()], data.centered)?;
    let pm = &plan.models()[0];
    if pm.rank_increment == 0 {
        return Err(Error::InfeasibleCollection(format!("model {m:?} adds no rank to V")));
    }
    plan_statistics(&plan, &data.y)[0].ok_or_else(|| {
        Error::DegenerateResidual(format!("model {m:?}: ‖Y − Π_(V∪m) Y‖² ≤ 1e-12 ‖Y‖²"))
    })
}

/// The Fisher test of model `m` at level `alpha`.
pub fn single_test(data: &Dataset, v: &[usize], m: &[usize], alpha: f64) -> Result<SingleStat> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (phi, d_m, n_m) = fisher_stat(data, v, m)?;
    let threshold = fisher_isf(FisherParams::new(d_m, n_m)?, alpha)?;
    Ok(SingleStat { model: m.to_vec(), phi, d_m, n_m, level: alpha, threshold, rejected: phi > threshold })
}

/// Runs the multiple test of `collection` on `data`.
///
/// The conditioning set, level and P1 weights come from `collection`. P2
/// estimates `q` on the same design with a seed taken from `rng`.
pub fn run_test<R: Rng + ?Sized>(
    rng: &mut R,
    data: &Dataset,
    collection: &ModelCollection,
    procedure: Procedure,
) -> Result<TestOutcome> {
    run_test_inner(rng, data, collection, procedure, None)
}

/// [`run_test`] with P2 quantiles memoized in `cache`.
pub fn run_test_cached<R: Rng + ?Sized>(
    rng: &mut R,
    data: &Dataset,
    collection: &ModelCollection,
    procedure: Procedure,
    cache: &QuantileCache,
) -> Result<TestOutcome> {
    run_test_inner(rng, data, collection, procedure, Some(cache))
}

fn run_test_inner<R: Rng + ?Sized>(
    rng: &mut R,
    data: &Dataset,
    collection: &ModelCollection,
    procedure: Procedure,
    cache: Option<&QuantileCache>,
) -> Result<TestOutcome> {
    let setting = &collection.setting;
    if data.p() != setting.p || data.n() != setting.n {
        return Err(Error::DimensionMismatch { expected: setting.n * setting.p, found: data.n() * data.p() });
    }
    check_dataset(data, &setting.v)?;
    let plan = ProjectionPlan::new(&data.x, &setting.v, &collection.models, data.centered)?;
    let stats = plan_statistics(&plan, &data.y);
    if stats.iter().all(Option::is_none) {
        return Err(Error::DegenerateResidual(
            "every model either adds no rank to V or leaves a numerically zero residual".into(),
        ));
    }

    let (q, draws) = match procedure {
        Procedure::P1 => (None, None),
        Procedure::P2 { draws } => {
            let seed = rng.next_u64();
            let q = match cache {
                Some(c) => c.get_or_estimate(&plan, collection.alpha, draws, seed)?,
                None => estimate_q_seeded(&plan, collection.alpha, draws, seed)?,
            };
            (Some(q), Some(draws))
        }
    };

    let mut isf_cache: HashMap<(usize, usize, u64), f64> = HashMap::new();
    let mut per_model = Vec::new();
    let mut skipped = Vec::new();
    let mut t_alpha = f64::NEG_INFINITY;
    for (k, st) in stats.into_iter().enumerate() {
        let model = &collection.models[k];
        let Some((phi, d_m, n_m)) = st else {
            warn!("model {model:?} skipped (no rank increment or degenerate residual)");
            skipped.push(model.clone());
            continue;
        };
        let level = q.unwrap_or(collection.weights[k]);
        let threshold = match isf_cache.get(&(d_m, n_m, level.to_bits())) {
            Some(t) => *t,
            None => {
                let t = fisher_isf(FisherParams::new(d_m, n_m)?, level)?;
                isf_cache.insert((d_m, n_m, level.to_bits()), t);
                t
            }
        };
        if d_m < model.len() {
            warn!("model {model:?}: rank increment {d_m} < |m| = {}", model.len());
        }
        t_alpha = t_alpha.max(phi - threshold);
        per_model.push(SingleStat { model: model.clone(), phi, d_m, n_m, level, threshold, rejected: phi > threshold });
    }
    Ok(TestOutcome { per_model, t_alpha, rejected: t_alpha > 0.0, procedure, q_estimate: q, mc_draws: draws, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collections::{assign_weights, Setting, WeightScheme};
    use crate::numerics::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_computed_statistic() {
        let x = Matrix::from_columns(vec![vec![1.0, 0.0, 0.0]]).unwrap();
        let data = Dataset::new(vec![2.0, 1.0, 1.0], x).unwrap();
        let s = single_test(&data, &[], &[1], 0.05).unwrap();
        assert!((s.phi - 4.0).abs() < 1e-12);
        assert!((s.threshold - 18.512820512820497).abs() < 1e-8);
        assert!(!s.rejected);
    }

    #[test]
    fn orthogonal_response_gives_zero() {
        let x = Matrix::from_columns(vec![vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let data = Dataset::new(vec![0.0, 1.0, -2.0, 0.5], x).unwrap();
        assert_eq!(fisher_stat(&data, &[], &[1]).unwrap().0, 0.0);
    }

    #[test]
    fn zero_response_is_degenerate() {
        let x = Matrix::from_columns(vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let data = Dataset::new(vec![0.0; 3], x).unwrap();
        assert!(matches!(fisher_stat(&data, &[], &[1]), Err(Error::DegenerateResidual(_))));
        let s = Setting::new(2, 3);
        let c = assign_weights(vec![vec![1]], &s, &WeightScheme::Uniform, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(run_test(&mut rng, &data, &c, Procedure::P1), Err(Error::DegenerateResidual(_))));
    }

    #[test]
    fn outcome_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = crate::covmodels::CovarianceSpec::identity(6);
        let mut theta = vec![0.0; 6];
        theta[0] = 0.9;
        let data = crate::covmodels::sample_dataset(&mut rng, &spec, &crate::covmodels::SignalSpec { theta, var_y: 1.0 }, 12).unwrap();
        let s = Setting::new(6, 12);
        let ms = crate::collections::build_collection(&crate::collections::CollectionKind::Nested, &s, &Default::default()).unwrap();
        let c = assign_weights(ms, &s, &WeightScheme::Uniform, 0.05).unwrap();
        for proc in [Procedure::P1, Procedure::P2 { draws: 200 }] {
            let o = run_test(&mut rng, &data, &c, proc).unwrap();
            assert_eq!(o.rejected, o.per_model.iter().any(|s| s.rejected));
            assert_eq!(o.rejected, o.t_alpha > 0.0);
        }
    }
}
