//! Monte-Carlo rejection-frequency experiments.
//!
//! Replicate `r` of cell `c` draws from ChaCha stream `(c << 32) | r` of the
//! configured seed, and tallies are reduced in replicate order, so a table is
//! bit-identical for any thread count. Within a replicate one dataset feeds
//! every procedure (common random numbers).

mod config;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::collections::{assign_weights, build_collection, CollectionParams, ModelCollection, Setting, WeightScheme};
use crate::covmodels::{augment_mean_covariate, build_covariance, CovarianceKind, CovarianceSpec, DatasetSampler, SignalSpec};
use crate::error::{Error, Result};
use crate::testcore::{run_test, single_test, Procedure};

pub use config::{Benchmark, Cell, Experiment, ExperimentConfig, Grid, HarnessCollection, ProcedureName};

/// Empirical rejection frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub frequency: f64,
    pub stderr: f64,
    pub replicates: usize,
}

impl RateEstimate {
    pub fn from_count(rejections: usize, replicates: usize) -> Self {
        let f = rejections as f64 / replicates as f64;
        RateEstimate { frequency: f, stderr: (f * (1.0 - f) / replicates as f64).sqrt(), replicates }
    }
}

/// Runs `f` on replicates `0..replicates`, replicate `r` seeing stream
/// `stream_base | r` of `seed`. Results come back in replicate order.
pub fn map_replicates<T, F>(seed: u64, stream_base: u64, replicates: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base | r as u64);
            f(&mut rng).map_err(|e| Error::Replicate { index: r, source: Box::new(e) })
        })
        .collect()
}

/// Frequency with which `test` rejects on datasets from `generator`.
pub fn estimate_rejection_rate<D, G, T>(seed: u64, replicates: usize, generator: G, test: T) -> Result<RateEstimate>
where
    G: Fn(&mut ChaCha8Rng) -> Result<D> + Sync,
    T: Fn(&mut ChaCha8Rng, &D) -> Result<bool> + Sync,
{
    if replicates == 0 {
        return Err(Error::Domain("replicates must be >= 1".into()));
    }
    let flags = map_replicates(seed, 0, replicates, |rng| {
        let data = generator(rng)?;
        test(rng, &data)
    })?;
    Ok(RateEstimate::from_count(flags.iter().filter(|f| **f).count(), replicates))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionRow {
    pub cell: String,
    pub procedure: String,
    pub frequency: f64,
    pub stderr: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn get(&self, cell: &str, procedure: &str) -> Option<&RejectionRow> {
        self.rows.iter().find(|r| r.cell == cell && r.procedure == procedure)
    }
}

/// One line of the optional per-replicate trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub replicate: usize,
    pub cell: String,
    pub procedure: String,
    pub rejected: bool,
}

enum Column {
    Multiple { label: String, collection: ModelCollection, procedure: Procedure },
    Benchmark(Benchmark),
}

impl Column {
    fn label(&self) -> &str {
        match self {
            Column::Multiple { label, .. } => label,
            Column::Benchmark(b) => b.label(),
        }
    }
}

fn cell_model(config: &ExperimentConfig, cell: &Cell) -> Result<(CovarianceSpec, SignalSpec)> {
    let p = cell.p;
    match config.experiment {
        Experiment::ConstCorrSingleSignal => {
            let mut theta = vec![0.0; p];
            theta[0] = cell.b;
            Ok((CovarianceSpec::new(CovarianceKind::ConstantCorr { c: cell.a }, p), SignalSpec { theta, var_y: config.var_y }))
        }
        Experiment::PolynomialDecay => {
            let theta = (1..=p).map(|i| cell.a * (i as f64).powf(-cell.b)).collect();
            Ok((CovarianceSpec::identity(p), SignalSpec { theta, var_y: config.var_y }))
        }
    }
}

fn cell_columns(config: &ExperimentConfig, cell: &Cell) -> Result<Vec<Column>> {
    let setting = Setting::new(cell.p, cell.n);
    let mut cols = Vec::new();
    for hc in &config.collections {
        let models = build_collection(&hc.kind(), &setting, &CollectionParams::default())?;
        let collection = assign_weights(models, &setting, &WeightScheme::Uniform, config.alpha)?;
        for &pn in &config.procedures {
            let procedure = config.procedure(pn);
            cols.push(Column::Multiple {
                label: format!("{}/{}", hc.label(), procedure),
                collection: collection.clone(),
                procedure,
            });
        }
    }
    cols.extend(config.benchmarks.iter().map(|b| Column::Benchmark(*b)));
    Ok(cols)
}

/// Runs every cell of `config`; see [`run_experiment_traced`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<RejectionTable> {
    Ok(run_experiment_traced(config, false)?.0)
}

/// Runs every cell of `config` and, with `trace`, also returns one record
/// per replicate and procedure.
pub fn run_experiment_traced(config: &ExperimentConfig, trace: bool) -> Result<(RejectionTable, Vec<TraceRecord>)> {
    config.validate()?;
    let seed = config.seed.ok_or(Error::MissingParam("seed"))?;
    let mut table = RejectionTable::default();
    let mut records = Vec::new();
    for (ci, cell) in config.cells().iter().enumerate() {
        let label = config.cell_label(cell);
        info!("cell {label}: {} replicates", config.replicates);
        let (cov, signal) = cell_model(config, cell)?;
        let sampler = DatasetSampler::new(&cov, &signal)?;
        let sigma_diag: Vec<f64> = {
            let s = build_covariance(&cov)?;
            (0..cell.p).map(|i| s.get(i, i)).collect()
        };
        let columns = cell_columns(config, cell)?;
        let flags = map_replicates(seed, (ci as u64) << 32, config.replicates, |rng| {
            let data = sampler.sample(rng, cell.n);
            columns
                .iter()
                .map(|col| match col {
                    Column::Multiple { collection, procedure, .. } => {
                        Ok(run_test(rng, &data, collection, *procedure)?.rejected)
                    }
                    Column::Benchmark(Benchmark::PhiKnownCoord) => {
                        Ok(single_test(&data, &[], &[1], config.alpha)?.rejected)
                    }
                    Column::Benchmark(Benchmark::PhiMeanCovariate) => {
                        let extra = augment_mean_covariate(&data.x, &sigma_diag)?;
                        let aug = data.clone().with_augmented(&extra)?;
                        Ok(single_test(&aug, &[], &[cell.p + 1], config.alpha)?.rejected)
                    }
                })
                .collect::<Result<Vec<bool>>>()
        })?;
        for (k, col) in columns.iter().enumerate() {
            let count = flags.iter().filter(|f| f[k]).count();
            let est = RateEstimate::from_count(count, config.replicates);
            table.rows.push(RejectionRow {
                cell: label.clone(),
                procedure: col.label().to_string(),
                frequency: est.frequency,
                stderr: est.stderr,
                replicates: est.replicates,
            });
        }
        if trace {
            for (r, f) in flags.iter().enumerate() {
                for (k, col) in columns.iter().enumerate() {
                    records.push(TraceRecord { replicate: r, cell: label.clone(), procedure: col.label().to_string(), rejected: f[k] });
                }
            }
        }
    }
    Ok((table, records))
}
