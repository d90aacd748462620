//! Monte-Carlo estimate of the conditional quantile used by procedure P2.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::plan::ProjectionPlan;
use crate::error::{Error, Result};
use crate::numerics::{fisher_sf, FisherParams};

/// Models grouped by `(D_m, N_m)`. Since the survival function is
/// decreasing, `inf_m F̄(stat_m)` only needs the largest statistic per group.
fn df_groups(plan: &ProjectionPlan) -> Vec<(FisherParams, Vec<usize>)> {
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (k, pm) in plan.models().iter().enumerate() {
        if pm.rank_increment > 0 {
            groups.entry((pm.rank_increment, pm.residual_df)).or_default().push(k);
        }
    }
    groups
        .into_iter()
        .map(|((d, n), ks)| (FisherParams { num_df: d, den_df: n }, ks))
        .collect()
}

/// Number of distinct models with a positive rank increment.
pub(crate) fn distinct_models(plan: &ProjectionPlan) -> usize {
    let mut seen: Vec<&[usize]> = plan
        .models()
        .iter()
        .filter(|pm| pm.rank_increment > 0)
        .map(|pm| pm.model.as_slice())
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// `⌊αB⌋`, guarding against `0.29 * 100 = 28.999…`.
fn order_index(alpha: f64, draws: usize) -> usize {
    (alpha * draws as f64 * (1.0 + 1e-12)).floor() as usize
}

/// One draw `S_b = inf_m F̄_{D_m,N_m}(F-ratio of m at Z)`.
fn draw_inf_sf(plan: &ProjectionPlan, groups: &[(FisherParams, Vec<usize>)], rng: &mut ChaCha8Rng, z: &mut [f64]) -> f64 {
    for zi in z.iter_mut() {
        *zi = rng.sample(StandardNormal);
    }
    let dec = plan.decompose(z);
    let mut inf = 1.0f64;
    for (fp, ks) in groups {
        let mut best = 0.0f64;
        for &k in ks {
            let (num, res) = plan.split(&dec, k);
            let stat = if res > 0.0 { num * fp.den_df as f64 / (res * fp.num_df as f64) } else { f64::INFINITY };
            best = best.max(stat);
        }
        inf = inf.min(fisher_sf(*fp, best));
    }
    inf
}

/// The `⌊αB⌋`-th smallest of `B` simulated values `S_b`, raised to at least
/// `α / |M|`.
///
/// Draw `b` uses the ChaCha stream `b` of `seed`, so the result does not
/// depend on how rayon schedules the draws. The floor `α / |M|` is where the
/// union bound puts the exact quantile; enforcing it keeps P2 at least as
/// permissive as uniform Bonferroni weights for every Monte-Carlo outcome.
pub fn estimate_q_seeded(plan: &ProjectionPlan, alpha: f64, draws: usize, seed: u64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if draws < 100 {
        return Err(Error::Domain(format!("need at least 100 Monte-Carlo draws, got {draws}")));
    }
    let k = order_index(alpha, draws);
    if k < 1 {
        return Err(Error::DrawsTooSmall { alpha, draws });
    }
    let groups = df_groups(plan);
    let models = distinct_models(plan);
    if models == 0 {
        return Err(Error::DegenerateResidual("no model adds rank to V".into()));
    }
    let n = plan.n();
    let mut s: Vec<f64> = (0..draws)
        .into_par_iter()
        .with_min_len(32)
        .map_init(
            || vec![0.0; n],
            |z, b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                draw_inf_sf(plan, &groups, &mut rng, z)
            },
        )
        .collect();
    s.sort_unstable_by(f64::total_cmp);
    Ok(s[k - 1].max(alpha / models as f64))
}

/// As [`estimate_q_seeded`], taking the seed from `rng`.
pub fn estimate_q<R: Rng + ?Sized>(rng: &mut R, plan: &ProjectionPlan, alpha: f64, draws: usize) -> Result<f64> {
    estimate_q_seeded(plan, alpha, draws, rng.next_u64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    fingerprint: u64,
    alpha_bits: u64,
    draws: usize,
    seed: u64,
}

/// Memoizes [`estimate_q_seeded`] by (design fingerprint, α, B, seed), for
/// loops that test many responses against one fixed design.
#[derive(Debug, Default)]
pub struct QuantileCache {
    map: Mutex<HashMap<CacheKey, f64>>,
}

impl QuantileCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_estimate(&self, plan: &ProjectionPlan, alpha: f64, draws: usize, seed: u64) -> Result<f64> {
        let key = CacheKey { fingerprint: plan.fingerprint(), alpha_bits: alpha.to_bits(), draws, seed };
        if let Some(q) = self.map.lock().unwrap().get(&key) {
            return Ok(*q);
        }
        let q = estimate_q_seeded(plan, alpha, draws, seed)?;
        self.map.lock().unwrap().insert(key, q);
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_index_is_robust() {
        assert_eq!(order_index(0.05, 1000), 50);
        assert_eq!(order_index(0.29, 100), 29);
        assert_eq!(order_index(0.001, 100), 0);
    }
}
