use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use hdtest::collections::{assign_weights, build_collection, CollectionKind, CollectionParams, Setting, WeightScheme};
use hdtest::covmodels::center_unknown_mean;
use hdtest::ggm::{graph_test, Graph, NodeOutcome};
use hdtest::simharness::{run_experiment_traced, ExperimentConfig, ProcedureName};
use hdtest::testcore::{run_test, Procedure, DEFAULT_MC_DRAWS};
use hdtest::theory::{minimax_rate, RateParams, RateQuery, RateVariant};
use hdtest::{Error, Result};

mod io;

const EXIT_REJECT: u8 = 3;

#[derive(Parser)]
#[command(name = "hdtest", version, about = "Multiple Fisher tests for high-dimensional linear hypotheses")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a dataset; exits 0 on accept and 3 on reject.
    Test(TestArgs),
    /// Run a simulation experiment and write a rejection table.
    Simulate(SimulateArgs),
    /// Neighbourhood tests of a graph against data.
    Ggm(GgmArgs),
    /// Evaluate minimax-rate formulas.
    Rates(RatesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProcArg {
    P1,
    P2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CollectionArg {
    M1,
    M2,
    M3,
    Ksubsets,
    Ellipsoid,
    Dyadic,
}

fn collection_kind(c: CollectionArg, k: Option<usize>) -> Result<CollectionKind> {
    Ok(match c {
        CollectionArg::M1 => CollectionKind::Singletons,
        CollectionArg::M2 => CollectionKind::Nested,
        CollectionArg::M3 | CollectionArg::Dyadic => CollectionKind::Dyadic,
        CollectionArg::Ksubsets => CollectionKind::KSubsets { k: k.ok_or(Error::MissingParam("k"))? },
        CollectionArg::Ellipsoid => CollectionKind::EllipsoidNested,
    })
}

fn procedure(p: ProcArg, draws: usize) -> Procedure {
    match p {
        ProcArg::P1 => Procedure::P1,
        ProcArg::P2 => Procedure::P2 { draws },
    }
}

/// Test options, from `--config` and/or flags (flags win).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TestSpec {
    v: Vec<usize>,
    collection: Option<CollectionArg>,
    k: Option<usize>,
    procedure: Option<ProcArg>,
    mc_draws: Option<usize>,
    alpha: Option<f64>,
    center: bool,
}

#[derive(Args)]
struct TestArgs {
    /// Dataset CSV with header `y,x1,...,xp`.
    #[arg(long)]
    data: PathBuf,
    /// JSON test spec (fields: v, collection, k, procedure, mc_draws, alpha, center).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Conditioning covariates V, comma separated, 1-based.
    #[arg(long, value_delimiter = ',')]
    v: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    collection: Option<CollectionArg>,
    /// Subset size for `ksubsets`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    procedure: Option<ProcArg>,
    #[arg(long)]
    mc_draws: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Center the data first (unknown mean; costs one degree of freedom).
    #[arg(long)]
    center: bool,
    /// Required with P2.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-model CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Re-run from a manifest written by an earlier run.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    replicates: Option<usize>,
    /// Restrict to one procedure.
    #[arg(long, value_enum)]
    procedure: Option<ProcArg>,
    #[arg(long)]
    mc_draws: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Per-replicate trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GgmArgs {
    /// Data CSV with a header row, one column per node.
    #[arg(long)]
    data: PathBuf,
    /// Edge list, one `i j` pair per line, 1-based.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "m1")]
    collection: CollectionArg,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "p1")]
    procedure: ProcArg,
    #[arg(long, default_value_t = DEFAULT_MC_DRAWS)]
    mc_draws: usize,
    /// Required with P2.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    /// JSON: one query object or a list of them.
    #[arg(long, conflicts_with = "variant")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Model dimension D for `nested_lower`.
    #[arg(long)]
    dim: Option<usize>,
    /// Sequence a_1..a_{p+1}, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum VariantArg {
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

impl From<VariantArg> for RateVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::SparseLower => RateVariant::SparseLower,
            VariantArg::SparseClaim53 => RateVariant::SparseClaim53,
            VariantArg::FullLower => RateVariant::FullLower,
            VariantArg::ConstCorrLower => RateVariant::ConstCorrLower,
            VariantArg::ToroidalExpLower => RateVariant::ToroidalExpLower,
            VariantArg::ToroidalPolyLower => RateVariant::ToroidalPolyLower,
            VariantArg::NestedLower => RateVariant::NestedLower,
            VariantArg::EllipsoidLower => RateVariant::EllipsoidLower,
            VariantArg::EllipsoidAdaptiveLower => RateVariant::EllipsoidAdaptiveLower,
            VariantArg::SparseUpperShape => RateVariant::SparseUpperShape,
        }
    }
}

/// Everything needed to reproduce a run, written before any computation.
#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    subcommand: String,
    config: ExperimentConfig,
    seed: u64,
    version: String,
    started_unix_secs: u64,
    outputs: Vec<PathBuf>,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn require_seed(seed: Option<u64>, why: &str) -> Result<u64> {
    seed.ok_or_else(|| {
        log::error!("--seed is required {why}");
        Error::MissingParam("seed")
    })
}

fn cmd_test(a: TestArgs) -> Result<ExitCode> {
    let mut spec: TestSpec = match &a.config {
        Some(p) => io::read_json(p)?,
        None => TestSpec::default(),
    };
    if let Some(v) = a.v {
        spec.v = v;
    }
    spec.collection = a.collection.or(spec.collection);
    spec.k = a.k.or(spec.k);
    spec.procedure = a.procedure.or(spec.procedure);
    spec.mc_draws = a.mc_draws.or(spec.mc_draws);
    spec.alpha = a.alpha.or(spec.alpha);
    spec.center |= a.center;

    let data = io::read_dataset(&a.data)?;
    let (data, extra) = if spec.center { center_unknown_mean(&data)? } else { (data, 0) };
    let alpha = spec.alpha.unwrap_or(0.05);
    let kind = collection_kind(spec.collection.unwrap_or(CollectionArg::M1), spec.k)?;
    let proc_ = procedure(spec.procedure.unwrap_or(ProcArg::P1), spec.mc_draws.unwrap_or(DEFAULT_MC_DRAWS));
    let seed = match proc_ {
        Procedure::P2 { .. } => require_seed(a.seed, "with procedure p2")?,
        Procedure::P1 => a.seed.unwrap_or(0),
    };

    let mut v = spec.v.clone();
    v.sort_unstable();
    v.dedup();
    let setting = Setting::new(data.p(), data.n()).with_v(v, extra);
    let models = build_collection(&kind, &setting, &CollectionParams::default())?;
    let scheme = WeightScheme::default_for(&kind, &setting);
    let collection = assign_weights(models, &setting, &scheme, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = run_test(&mut rng, &data, &collection, proc_)?;

    println!("procedure: {}", outcome.procedure);
    println!("models: {} tested, {} skipped", outcome.per_model.len(), outcome.skipped.len());
    if let Some(q) = outcome.q_estimate {
        println!("q_estimate: {q}");
    }
    println!("t_alpha: {}", outcome.t_alpha);
    println!("verdict: {}", if outcome.rejected { "reject" } else { "accept" });

    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_path(out).map_err(csv_err)?;
        w.write_record(["model", "phi", "d_m", "n_m", "level", "threshold", "rejected"]).map_err(csv_err)?;
        for s in &outcome.per_model {
            let model = s.model.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            w.write_record([
                model,
                s.phi.to_string(),
                s.d_m.to_string(),
                s.n_m.to_string(),
                s.level.to_string(),
                s.threshold.to_string(),
                s.rejected.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(if outcome.rejected { ExitCode::from(EXIT_REJECT) } else { ExitCode::SUCCESS })
}

fn cmd_simulate(a: SimulateArgs) -> Result<ExitCode> {
    let mut config: ExperimentConfig = match (&a.config, &a.manifest) {
        (Some(p), _) => io::read_json(p)?,
        (None, Some(m)) => io::read_json::<RunManifest>(m)?.config,
        (None, None) => unreachable!("clap enforces one of --config/--manifest"),
    };
    if let Some(s) = a.seed {
        config.seed = Some(s);
    }
    let seed = require_seed(config.seed, "for simulate (or a manifest carrying one)")?;
    if let Some(r) = a.replicates {
        config.replicates = r;
    }
    if let Some(p) = a.procedure {
        config.procedures = vec![match p {
            ProcArg::P1 => ProcedureName::P1,
            ProcArg::P2 => ProcedureName::P2,
        }];
    }
    if let Some(b) = a.mc_draws {
        config.mc_draws = b;
    }
    if let Some(al) = a.alpha {
        config.alpha = al;
    }
    config.validate()?;

    let mut outputs = vec![a.out.clone()];
    outputs.extend(a.trace.clone());
    let manifest = RunManifest {
        subcommand: "simulate".into(),
        config: config.clone(),
        seed,
        version: env!("CARGO_PKG_VERSION").into(),
        started_unix_secs: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        outputs,
    };
    let mpath = manifest_path(&a.out);
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    info!("manifest written to {}", mpath.display());

    let (table, trace) = run_experiment_traced(&config, a.trace.is_some())?;
    let mut w = csv::Writer::from_path(&a.out).map_err(csv_err)?;
    for row in &table.rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    if let Some(tp) = &a.trace {
        let mut w = csv::Writer::from_path(tp).map_err(csv_err)?;
        for rec in &trace {
            w.serialize(rec).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ggm(a: GgmArgs) -> Result<ExitCode> {
    let z = io::read_matrix(&a.data)?;
    let graph = Graph::from_file(&a.graph, z.ncols())?;
    let kind = collection_kind(a.collection, a.k)?;
    let proc_ = procedure(a.procedure, a.mc_draws);
    let seed = match proc_ {
        Procedure::P2 { .. } => require_seed(a.seed, "with procedure p2")?,
        Procedure::P1 => a.seed.unwrap_or(0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = graph_test(&mut rng, &z, &graph, a.alpha, &kind, proc_)?;

    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["node", "neighbors", "status", "level", "q_estimate", "t_alpha", "rejected"]).map_err(csv_err)?;
    for node in &out.nodes {
        let j = node.node();
        let nb = graph.neighbors(j).iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let rec = match node {
            NodeOutcome::Tested { outcome, .. } => [
                j.to_string(),
                nb,
                "tested".into(),
                out.node_level.to_string(),
                outcome.q_estimate.map_or(String::new(), |q| q.to_string()),
                outcome.t_alpha.to_string(),
                outcome.rejected.to_string(),
            ],
            NodeOutcome::NothingToTest { .. } => {
                [j.to_string(), nb, "nothing_to_test".into(), out.node_level.to_string(), String::new(), String::new(), "false".into()]
            }
        };
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    eprintln!(
        "graph: {} (Bonferroni across {} nodes, level {} each)",
        if out.rejected { "reject" } else { "accept" },
        out.nodes.len(),
        out.node_level
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(RateQuery),
    Many(Vec<RateQuery>),
}

fn cmd_rates(a: RatesArgs) -> Result<ExitCode> {
    let queries = match (&a.config, a.variant) {
        (Some(p), _) => match io::read_json::<OneOrMany>(p)? {
            OneOrMany::One(q) => vec![q],
            OneOrMany::Many(qs) => qs,
        },
        (None, Some(v)) => vec![RateQuery {
            variant: v.into(),
            params: RateParams {
                k: a.k,
                p: a.p,
                n: a.n,
                alpha: a.alpha,
                delta: a.delta,
                c: a.c,
                w: a.w,
                t: a.t,
                dim: a.dim,
                a: a.a.clone(),
                r: a.r,
                constant: a.constant,
            },
        }],
        (None, None) => return Err(Error::MissingParam("variant")),
    };
    let values = queries.iter().map(minimax_rate).collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["variant", "value", "convention"]).map_err(csv_err)?;
    for v in &values {
        w.write_record([v.variant.name(), &v.value.to_string(), &v.convention]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let job = move || match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Ggm(a) => cmd_ggm(a),
        Command::Rates(a) => cmd_rates(a),
    };
    match cli.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            pool.install(job)
        }
        None => job(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HDTEST_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
