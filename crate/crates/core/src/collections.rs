//! Model collections and their Bonferroni weights.
//!
//! Models are sorted lists of 1-based covariate indices. "Prefix" collections
//! (nested, dyadic, ellipsoid) take prefixes of the candidate order, which is
//! `1..=p` minus `V` unless the caller supplies a permutation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Model = Vec<usize>;

/// Default cap on the size of enumerated collections.
pub const DEFAULT_MODEL_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollectionKind {
    /// `{1}, ..., {p}`.
    Singletons,
    /// Prefixes of sizes `1..=J`, `J = p ∧ [(n-d)/2]`.
    Nested,
    /// Prefixes of sizes `2^j <= J`.
    Dyadic,
    /// Every `k`-element subset.
    KSubsets { k: usize },
    /// Prefixes of sizes `1..=[(n-d)/2]` if `n-d < 2p`, else `1..=p`.
    EllipsoidNested,
    /// Dyadic prefix sizes up to `[(n-d)/2]` if `n-d < 2p`, else dyadic sizes plus `p`.
    EllipsoidDyadic,
}

/// Where the collection lives: `p` covariates, `n` observations, conditioning
/// set `v` (1-based) and `d` degrees of freedom already spent (`|V|` plus any
/// centering adjustment).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Setting {
    pub p: usize,
    pub n: usize,
    pub d: usize,
    pub v: Vec<usize>,
}

impl Setting {
    pub fn new(p: usize, n: usize) -> Self {
        Setting { p, n, d: 0, v: Vec::new() }
    }

    pub fn with_v(mut self, v: Vec<usize>, extra_dof: usize) -> Self {
        self.d = v.len() + extra_dof;
        self.v = v;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < self.d + 2 {
            return Err(Error::InfeasibleCollection(format!(
                "need n >= d + 2, got n = {}, d = {}",
                self.n, self.d
            )));
        }
        if self.d < self.v.len() {
            return Err(Error::InfeasibleCollection("d smaller than |V|".into()));
        }
        if let Some(&bad) = self.v.iter().find(|&&i| i == 0 || i > self.p) {
            return Err(Error::InfeasibleCollection(format!("V index {bad} outside 1..={}", self.p)));
        }
        Ok(())
    }

    /// `I \ V` in increasing order.
    pub fn candidates(&self) -> Vec<usize> {
        (1..=self.p).filter(|i| !self.v.contains(i)).collect()
    }

    fn half_effective_n(&self) -> usize {
        (self.n - self.d) / 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionParams {
    pub cap: usize,
    /// Candidate order for prefix collections; must be a permutation of `I \ V`.
    pub order: Option<Vec<usize>>,
}

impl Default for CollectionParams {
    fn default() -> Self {
        CollectionParams { cap: DEFAULT_MODEL_CAP, order: None }
    }
}

fn dyadic_sizes(max: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |k| k.checked_mul(2)).take_while(|&k| k <= max).collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn k_subsets(items: &[usize], k: usize) -> Vec<Model> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    let n = items.len();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Builds the models of a collection of the given kind.
///
/// ```
/// use hdtest::collections::{build_collection, CollectionKind, CollectionParams, Setting};
/// let ms = build_collection(&CollectionKind::Dyadic, &Setting::new(500, 50), &CollectionParams::default()).unwrap();
/// let sizes: Vec<usize> = ms.iter().map(|m| m.len()).collect();
/// assert_eq!(sizes, [1, 2, 4, 8, 16]);
/// ```
pub fn build_collection(kind: &CollectionKind, setting: &Setting, params: &CollectionParams) -> Result<Vec<Model>> {
    setting.validate()?;
    let candidates = match &params.order {
        Some(order) => {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != setting.candidates() {
                return Err(Error::InfeasibleCollection(
                    "order must be a permutation of the candidate covariates".into(),
                ));
            }
            order.clone()
        }
        None => setting.candidates(),
    };
    let p = candidates.len();
    if p == 0 {
        return Err(Error::InfeasibleCollection("no candidate covariates outside V".into()));
    }
    let half = setting.half_effective_n();
    let j = p.min(half);
    let prefix = |sizes: Vec<usize>| -> Vec<Model> {
        sizes
            .into_iter()
            .map(|k| {
                let mut m = candidates[..k].to_vec();
                m.sort_unstable();
                m
            })
            .collect()
    };
    let models = match kind {
        CollectionKind::Singletons => candidates.iter().map(|&i| vec![i]).collect(),
        CollectionKind::Nested => prefix((1..=j).collect()),
        CollectionKind::Dyadic => prefix(dyadic_sizes(j)),
        CollectionKind::KSubsets { k } => {
            if *k == 0 || *k > p {
                return Err(Error::InfeasibleCollection(format!("k = {k} outside 1..={p}")));
            }
            let count = binomial(p, *k);
            if count > params.cap as u128 {
                return Err(Error::TooManyModels { count, cap: params.cap });
            }
            let mut sorted = candidates.clone();
            sorted.sort_unstable();
            k_subsets(&sorted, *k)
        }
        CollectionKind::EllipsoidNested => {
            if setting.n - setting.d < 2 * p {
                prefix((1..=half).collect())
            } else {
                prefix((1..=p).collect())
            }
        }
        CollectionKind::EllipsoidDyadic => {
            if setting.n - setting.d < 2 * p {
                prefix(dyadic_sizes(half))
            } else {
                let mut sizes = dyadic_sizes(p);
                if sizes.last() != Some(&p) {
                    sizes.push(p);
                }
                prefix(sizes)
            }
        }
    };
    if models.is_empty() {
        return Err(Error::InfeasibleCollection(format!("{kind:?} is empty for this setting")));
    }
    check_feasible(&models, setting)?;
    Ok(models)
}

fn check_feasible(models: &[Model], setting: &Setting) -> Result<()> {
    for m in models {
        if m.is_empty() {
            return Err(Error::InfeasibleCollection("empty model".into()));
        }
        if let Some(i) = m.iter().find(|i| **i == 0 || **i > setting.p || setting.v.contains(i)) {
            return Err(Error::InfeasibleCollection(format!("model index {i} is outside I \\ V")));
        }
        if setting.n < setting.d + m.len() + 1 {
            return Err(Error::InfeasibleCollection(format!(
                "model of size {} leaves N_m = n - d - D_m < 1 (n = {}, d = {})",
                m.len(),
                setting.n,
                setting.d
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum WeightScheme {
    /// `α / |M|` each.
    Uniform,
    /// `α / 2` on the model holding every candidate, the rest split evenly.
    EllipsoidSplit,
    Explicit { weights: Vec<f64> },
}

impl WeightScheme {
    /// `EllipsoidSplit` for the ellipsoid collections once `n - d >= 2p`
    /// (where they contain the full model), `Uniform` otherwise.
    pub fn default_for(kind: &CollectionKind, setting: &Setting) -> Self {
        let p = setting.p - setting.v.len();
        let ellipsoid = matches!(kind, CollectionKind::EllipsoidNested | CollectionKind::EllipsoidDyadic);
        if ellipsoid && setting.n - setting.d >= 2 * p {
            WeightScheme::EllipsoidSplit
        } else {
            WeightScheme::Uniform
        }
    }
}

/// Models with per-model levels `α_m`, tied to their [`Setting`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCollection {
    pub models: Vec<Model>,
    pub weights: Vec<f64>,
    pub setting: Setting,
    pub alpha: f64,
}

impl ModelCollection {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// `N_m = n - d - |m|`.
    pub fn residual_df(&self, model: &[usize]) -> usize {
        self.setting.n - self.setting.d - model.len()
    }
}

/// Attaches weights to `models` under `scheme`.
pub fn assign_weights(models: Vec<Model>, setting: &Setting, scheme: &WeightScheme, alpha: f64) -> Result<ModelCollection> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if models.is_empty() {
        return Err(Error::InfeasibleCollection("no models".into()));
    }
    setting.validate()?;
    check_feasible(&models, setting)?;
    let m = models.len();
    let weights = match scheme {
        WeightScheme::Uniform => vec![alpha / m as f64; m],
        WeightScheme::EllipsoidSplit => {
            if m == 1 {
                vec![alpha]
            } else {
                let full = setting.p - setting.v.len();
                let Some(top) = models.iter().position(|mm| mm.len() == full) else {
                    return Err(Error::InvalidWeights("ellipsoid_split needs the full model m_p in the collection".into()));
                };
                let rest = alpha / (2.0 * (m - 1) as f64);
                let mut w = vec![rest; m];
                w[top] = alpha / 2.0;
                w
            }
        }
        WeightScheme::Explicit { weights } => {
            if weights.len() != m {
                return Err(Error::InvalidWeights(format!("{} weights for {m} models", weights.len())));
            }
            if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
                return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
            }
            let total: f64 = weights.iter().sum();
            if total > alpha * (1.0 + 1e-12) {
                return Err(Error::InvalidWeights(format!("weights sum to {total} > alpha = {alpha}")));
            }
            weights.clone()
        }
    };
    Ok(ModelCollection { models, weights, setting: setting.clone(), alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(kind: CollectionKind, s: &Setting) -> Result<Vec<Model>> {
        build_collection(&kind, s, &CollectionParams::default())
    }

    #[test]
    fn singletons_and_nested() {
        assert_eq!(build(CollectionKind::Singletons, &Setting::new(3, 10)).unwrap(), vec![vec![1], vec![2], vec![3]]);
        let nested = build(CollectionKind::Nested, &Setting::new(500, 50)).unwrap();
        assert_eq!(nested.len(), 25);
        assert_eq!(nested[24], (1..=25).collect::<Vec<_>>());
    }

    #[test]
    fn v_is_excluded() {
        let s = Setting::new(5, 20).with_v(vec![2], 0);
        let ms = build(CollectionKind::Nested, &s).unwrap();
        assert_eq!(ms[1], vec![1, 3]);
        assert!(ms.iter().all(|m| !m.contains(&2)));
    }

    #[test]
    fn custom_order() {
        let params = CollectionParams { order: Some(vec![3, 1, 2]), ..Default::default() };
        let ms = build_collection(&CollectionKind::Nested, &Setting::new(3, 10), &params).unwrap();
        assert_eq!(ms, vec![vec![3], vec![1, 3], vec![1, 2, 3]]);
        let bad = CollectionParams { order: Some(vec![3, 1]), ..Default::default() };
        assert!(build_collection(&CollectionKind::Nested, &Setting::new(3, 10), &bad).is_err());
    }

    #[test]
    fn k_subsets_enumeration_and_cap() {
        let ms = build(CollectionKind::KSubsets { k: 2 }, &Setting::new(4, 10)).unwrap();
        assert_eq!(ms, vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]);
        let params = CollectionParams { cap: 5, order: None };
        assert!(matches!(
            build_collection(&CollectionKind::KSubsets { k: 2 }, &Setting::new(4, 10), &params),
            Err(Error::TooManyModels { count: 6, cap: 5 })
        ));
    }

    #[test]
    fn ellipsoid_collections() {
        // n < 2p
        let ms = build(CollectionKind::EllipsoidNested, &Setting::new(10, 12)).unwrap();
        assert_eq!(ms.len(), 6);
        // n >= 2p
        let ms = build(CollectionKind::EllipsoidNested, &Setting::new(10, 20)).unwrap();
        assert_eq!(ms.len(), 10);
        let ms = build(CollectionKind::EllipsoidDyadic, &Setting::new(10, 40)).unwrap();
        let sizes: Vec<usize> = ms.iter().map(Vec::len).collect();
        assert_eq!(sizes, [1, 2, 4, 8, 10]);
    }

    #[test]
    fn infeasible_models() {
        let models = vec![vec![1, 2, 3]];
        let s = Setting::new(3, 3);
        assert!(matches!(assign_weights(models, &s, &WeightScheme::Uniform, 0.05), Err(Error::InfeasibleCollection(_))));
        assert!(build(CollectionKind::Singletons, &Setting::new(3, 1)).is_err());
    }

    #[test]
    fn weights() {
        let s = Setting::new(30, 15);
        let ms = build(CollectionKind::Singletons, &s).unwrap();
        let c = assign_weights(ms.clone(), &s, &WeightScheme::Uniform, 0.05).unwrap();
        assert!(c.weights.iter().all(|w| *w == 0.05 / 30.0));
        assert!((c.weights.iter().sum::<f64>() - 0.05).abs() < 1e-15);

        let s10 = Setting::new(10, 20);
        let ms10 = build(CollectionKind::EllipsoidNested, &s10).unwrap();
        let c = assign_weights(ms10, &s10, &WeightScheme::EllipsoidSplit, 0.05).unwrap();
        assert_eq!(c.weights[9], 0.025);
        assert!((c.weights[0] - 0.025 / 9.0).abs() < 1e-18);

        let w = vec![0.002; 30];
        assert!(matches!(
            assign_weights(ms, &s, &WeightScheme::Explicit { weights: w }, 0.05),
            Err(Error::InvalidWeights(_))
        ));
    }
}
