//! Declarative experiment configuration.

use serde::{Deserialize, Deserializer, Serialize};

use crate::collections::CollectionKind;
use crate::error::{Error, Result};
use crate::testcore::{Procedure, DEFAULT_MC_DRAWS};

/// A grid axis: JSON accepts either a scalar or a list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid<T>(pub Vec<T>);

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Grid<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OneOrMany<T> {
            One(T),
            Many(Vec<T>),
        }
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(x) => Grid(vec![x]),
            OneOrMany::Many(v) => Grid(v),
        })
    }
}

impl<T> Default for Grid<T> {
    fn default() -> Self {
        Grid(Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Equicorrelated covariates, only `θ_1` possibly non-zero.
    ConstCorrSingleSignal,
    /// Independent covariates, `θ_i = R i^(-s)`.
    PolynomialDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarnessCollection {
    #[serde(alias = "m1")]
    M1,
    #[serde(alias = "m2")]
    M2,
    #[serde(alias = "m3")]
    M3,
}

impl HarnessCollection {
    pub fn kind(self) -> CollectionKind {
        match self {
            HarnessCollection::M1 => CollectionKind::Singletons,
            HarnessCollection::M2 => CollectionKind::Nested,
            HarnessCollection::M3 => CollectionKind::Dyadic,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HarnessCollection::M1 => "M1",
            HarnessCollection::M2 => "M2",
            HarnessCollection::M3 => "M3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcedureName {
    #[serde(alias = "P1")]
    P1,
    #[serde(alias = "P2")]
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    /// Single test of the known non-zero coordinate, model `{1}`.
    PhiKnownCoord,
    /// Single test of the appended mean covariate, model `{p+1}`.
    PhiMeanCovariate,
}

impl Benchmark {
    pub fn label(self) -> &'static str {
        match self {
            Benchmark::PhiKnownCoord => "phi_known_coord",
            Benchmark::PhiMeanCovariate => "phi_mean_covariate",
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_replicates() -> usize {
    1000
}

fn default_draws() -> usize {
    DEFAULT_MC_DRAWS
}

fn default_var_y() -> f64 {
    1.0
}

/// One simulation experiment over a grid of cells.
///
/// Experiment `const_corr_single_signal` crosses `p × n × c × theta1`;
/// `polynomial_decay` crosses `p × n × r × s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub p: Grid<usize>,
    pub n: Grid<usize>,
    #[serde(default)]
    pub c: Grid<f64>,
    #[serde(default)]
    pub theta1: Grid<f64>,
    #[serde(default, alias = "R")]
    pub r: Grid<f64>,
    #[serde(default)]
    pub s: Grid<f64>,
    #[serde(default = "default_var_y")]
    pub var_y: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub procedures: Vec<ProcedureName>,
    #[serde(default = "default_draws")]
    pub mc_draws: usize,
    pub collections: Vec<HarnessCollection>,
    #[serde(default)]
    pub benchmarks: Vec<Benchmark>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub p: usize,
    pub n: usize,
    /// `c` for experiment 1, `R` for experiment 2.
    pub a: f64,
    /// `θ_1` for experiment 1, `s` for experiment 2.
    pub b: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = |m: String| Err(Error::Spec(m));
        if self.replicates == 0 {
            return spec("replicates must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return spec(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.p.0.is_empty() || self.n.0.is_empty() {
            return spec("p and n need at least one value".into());
        }
        if self.procedures.is_empty() && self.benchmarks.is_empty() {
            return spec("nothing to run: no procedures and no benchmarks".into());
        }
        if !self.procedures.is_empty() && self.collections.is_empty() {
            return spec("procedures given without collections".into());
        }
        match self.experiment {
            Experiment::ConstCorrSingleSignal => {
                if self.collections.iter().any(|c| *c != HarnessCollection::M1) {
                    return spec("const_corr_single_signal uses collection M1 only".into());
                }
                if self.c.0.is_empty() || self.theta1.0.is_empty() {
                    return spec("const_corr_single_signal needs `c` and `theta1`".into());
                }
                if !self.r.0.is_empty() || !self.s.0.is_empty() {
                    return spec("`r`/`s` belong to polynomial_decay".into());
                }
            }
            Experiment::PolynomialDecay => {
                if self.collections.contains(&HarnessCollection::M1) {
                    return spec("polynomial_decay uses collections M2 and M3".into());
                }
                if self.r.0.is_empty() || self.s.0.is_empty() {
                    return spec("polynomial_decay needs `r` and `s`".into());
                }
                if !self.c.0.is_empty() || !self.theta1.0.is_empty() {
                    return spec("`c`/`theta1` belong to const_corr_single_signal".into());
                }
                if !self.benchmarks.is_empty() {
                    return spec("benchmarks are defined for const_corr_single_signal only".into());
                }
            }
        }
        Ok(())
    }

    /// Cartesian product of the grid axes, in row-major order.
    pub fn cells(&self) -> Vec<Cell> {
        let (xs, ys) = match self.experiment {
            Experiment::ConstCorrSingleSignal => (&self.c.0, &self.theta1.0),
            Experiment::PolynomialDecay => (&self.r.0, &self.s.0),
        };
        let mut out = Vec::new();
        for &p in &self.p.0 {
            for &n in &self.n.0 {
                for &a in xs {
                    for &b in ys {
                        out.push(Cell { p, n, a, b });
                    }
                }
            }
        }
        out
    }

    pub fn cell_label(&self, cell: &Cell) -> String {
        match self.experiment {
            Experiment::ConstCorrSingleSignal => {
                format!("p={};n={};c={};theta1={}", cell.p, cell.n, cell.a, cell.b)
            }
            Experiment::PolynomialDecay => format!("p={};n={};R={};s={}", cell.p, cell.n, cell.a, cell.b),
        }
    }

    pub fn procedure(&self, name: ProcedureName) -> Procedure {
        match name {
            ProcedureName::P1 => Procedure::P1,
            ProcedureName::P2 => Procedure::P2 { draws: self.mc_draws },
        }
    }
}
