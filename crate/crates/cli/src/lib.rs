//! Command-line front end for the `sdls` simulator.
//!
//! Exit codes: 0 on success, 2 for configuration and input errors, 3 when a
//! numerical guard trips (divergence, a non-diagonalizable algorithm matrix).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use sdls::graph::{GraphSpec, Topology};
use sdls::problem::{
    bandwidth_col_sizes, build_augmented, even_sizes, spectral_report, write_bundle, BSplitRule,
    PartitionSpec, ProblemBundle, ProblemError, SpectralReport,
};
use sdls::sim::{
    best_per_algorithm, comparison_csv, generate_random_problem, load_problem, run_comparison,
    run_simulation, AlphaChoice, Algorithm, Conditioning, ProblemSource, RunConfig, SignalSpec,
    SimError, DEFAULT_THRESHOLD,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("M_tilde is not numerically diagonalizable (cond(V) = {cond_v:e})")]
    NotDiagonalizable { cond_v: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::Sim(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotDiagonalizable { .. } => 3,
            CliError::Sim(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sdls", version, about = "Bandwidth-scheduled distributed least squares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random problem bundle.
    Gen(GenArgs),
    /// Run one algorithm and write a metrics CSV with a JSON sidecar.
    Run(RunArgs),
    /// Run several algorithms on one instance and tabulate cycles to a threshold.
    Compare(CompareArgs),
    /// Run with a time-varying observation.
    Track(RunArgs),
    /// Print the spectral checks of an instance as JSON.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub agents: usize,
    /// Largest portion size; defaults to n, i.e. a single portion.
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// Draw A with this rank instead of a full-rank Gaussian matrix.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, value_parser = parse_serde::<Topology>, default_value = "ring")]
    pub graph: Topology,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run config, or the sidecar of an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem bundle directory.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long = "alg", value_parser = parse_serde::<Algorithm>)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub ki: Option<f64>,
    /// A step size or `auto`.
    #[arg(long)]
    pub alpha: Option<AlphaChoice>,
    /// Accept an explicit step size above the admissible bound.
    #[arg(long)]
    pub force_alpha: bool,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub parallel: bool,
    /// Observation signal as inline JSON, e.g. `{"kind":"ramp","step_norm":0.01}`.
    #[arg(long, value_parser = parse_json::<SignalSpec>)]
    pub signal: Option<SignalSpec>,
    /// Metrics CSV; the sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// JSON file `{"runs": [RunConfig...], "budget_cycles": .., "threshold": ..}`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',', value_parser = parse_serde::<Algorithm>)]
    pub algs: Vec<Algorithm>,
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub ki: Option<f64>,
    #[arg(long)]
    pub alpha: Option<AlphaChoice>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep only the fastest row of each algorithm.
    #[arg(long)]
    pub best: bool,
    #[arg(long, default_value = "compare.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub ki: Option<f64>,
    /// Step size for `Φ(α)`; defaults to `0.9·min(1, α_max)`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Comparison file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub runs: Vec<RunConfig>,
    #[serde(default = "default_budget")]
    pub budget_cycles: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_budget() -> u64 {
    100_000
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    m: usize,
    n: usize,
    p: usize,
    q: usize,
    k_p: f64,
    k_i: f64,
    #[serde(flatten)]
    report: SpectralReport,
}

fn parse_serde<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_json<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, file: &Path) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| CliError::Schema {
        path: file.display().to_string(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

fn absolute(path: &Path, base: &Path) -> Result<PathBuf, CliError> {
    let joined = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
    std::path::absolute(&joined).map_err(|e| CliError::io(&joined, e))
}

/// Bundle paths in a config are relative to the config file.
fn resolve_paths(cfg: &mut RunConfig, base: &Path) -> Result<(), CliError> {
    if let ProblemSource::Bundle { path } = &mut cfg.problem {
        *path = absolute(path, base)?;
    }
    Ok(())
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads and validates a run config. A run sidecar is accepted too, in which
/// case its embedded config is used.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let mut value = read_json(path)?;
    if let Some(obj) = value.as_object_mut() {
        if !obj.contains_key("problem") {
            if let Some(inner) = obj.remove("config") {
                value = inner;
            }
        }
    }
    let mut cfg: RunConfig = from_value(value, path)?;
    resolve_paths(&mut cfg, &config_dir(path))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_compare_config(path: &Path) -> Result<CompareConfig, CliError> {
    let mut cc: CompareConfig = from_value(read_json(path)?, path)?;
    if cc.runs.is_empty() {
        return Err(CliError::Config(format!("{}: `runs` is empty", path.display())));
    }
    for cfg in &mut cc.runs {
        resolve_paths(cfg, &config_dir(path))?;
        cfg.validate()?;
    }
    Ok(cc)
}

fn bundle_source(dir: &Path) -> Result<ProblemSource, CliError> {
    Ok(ProblemSource::Bundle {
        path: absolute(dir, Path::new("."))?,
    })
}

fn run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, &args.problem) {
        (Some(path), _) => parse_config(path)?,
        (None, Some(dir)) => RunConfig::new(bundle_source(dir)?, Algorithm::Sdls),
        (None, None) => return Err(CliError::Config("pass --config or --problem".into())),
    };
    if let (Some(_), Some(dir)) = (&args.config, &args.problem) {
        cfg.problem = bundle_source(dir)?;
    }
    if let Some(a) = args.algorithm {
        cfg.algorithm = a;
    }
    if let Some(v) = args.kp {
        cfg.gains.k_p = v;
    }
    if let Some(v) = args.ki {
        cfg.gains.k_i = v;
    }
    if let Some(a) = args.alpha {
        cfg.gains.alpha = a;
    }
    cfg.force_alpha |= args.force_alpha;
    cfg.parallel |= args.parallel;
    if let Some(k) = args.k_max {
        cfg.k_max = k;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.stride {
        cfg.record_stride = s;
    }
    if let Some(s) = &args.signal {
        cfg.signal = s.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => gen(&a),
        Command::Run(a) => run(&a, false),
        Command::Track(a) => run(&a, true),
        Command::Compare(a) => compare(&a),
        Command::Verify(a) => verify(&a),
    }
}

fn gen(a: &GenArgs) -> Result<(), CliError> {
    if a.m == 0 || a.n == 0 || a.agents == 0 {
        return Err(CliError::Config("--m, --n and --agents must be positive".into()));
    }
    if a.agents > a.m {
        return Err(CliError::Config(format!("{} agents cannot share {} rows", a.agents, a.m)));
    }
    let bandwidth = a.bandwidth.unwrap_or(a.n);
    if bandwidth == 0 {
        return Err(CliError::Config("--bandwidth must be positive".into()));
    }
    let conditioning = a.rank.map_or(Conditioning::Gaussian, Conditioning::RankDeficient);
    let problem = generate_random_problem(a.m, a.n, a.seed, conditioning)?;
    let col_sizes = bandwidth_col_sizes(a.n, bandwidth);
    let partition = PartitionSpec {
        row_sizes: even_sizes(a.m, a.agents),
        graph: GraphSpec::Named {
            kind: a.graph,
            n: a.agents,
        },
        graph_c: GraphSpec::default_portion_graph(col_sizes.len()),
        col_sizes,
        bandwidth,
        b_split_rule: BSplitRule::default(),
    };
    let bundle = ProblemBundle { problem, partition };
    // Building the partition and graphs validates the bundle before writing.
    bundle.partitioned()?;
    bundle.graphs()?;
    write_bundle(&bundle, &a.out)?;
    Ok(())
}

fn run(a: &RunArgs, track: bool) -> Result<(), CliError> {
    let cfg = run_config(a)?;
    if track && cfg.signal.is_static() {
        return Err(CliError::Config("track needs a time-varying signal (--signal or `signal` in the config)".into()));
    }
    let default_out = if track { "track.csv" } else { "run.csv" };
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(default_out));
    let log = run_simulation(&cfg)?;
    log.write(&out)?;
    let last = log.last();
    eprintln!(
        "{}: {} iterations, {} cycles, e1 = {:e}, stop = {:?}",
        cfg.algorithm.name(),
        last.k,
        last.cycles,
        last.e1,
        log.meta.stop_reason
    );
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let mut cc = match (&a.config, &a.problem) {
        (Some(path), _) => parse_compare_config(path)?,
        (None, Some(dir)) => {
            if a.algs.is_empty() {
                return Err(CliError::Config("pass --algs with --problem".into()));
            }
            let source = bundle_source(dir)?;
            let runs = a.algs.iter().map(|&alg| RunConfig::new(source.clone(), alg)).collect();
            CompareConfig {
                runs,
                budget_cycles: default_budget(),
                threshold: default_threshold(),
            }
        }
        (None, None) => return Err(CliError::Config("pass --config or --problem".into())),
    };
    for cfg in &mut cc.runs {
        if let Some(v) = a.kp {
            cfg.gains.k_p = v;
        }
        if let Some(v) = a.ki {
            cfg.gains.k_i = v;
        }
        if let Some(v) = a.alpha {
            cfg.gains.alpha = v;
        }
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
    }
    if let Some(b) = a.budget {
        cc.budget_cycles = b;
    }
    if let Some(t) = a.threshold {
        cc.threshold = t;
    }
    if !(cc.threshold > 0.0) {
        return Err(CliError::Config("threshold must be positive".into()));
    }
    let mut rows = run_comparison(&cc.runs, cc.budget_cycles, cc.threshold)?;
    if a.best {
        rows = best_per_algorithm(&rows);
    }
    let csv = comparison_csv(&rows, cc.budget_cycles);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(&a.out, csv).map_err(|e| CliError::io(&a.out, e))
}

fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let mut cfg = match (&a.config, &a.problem) {
        (Some(path), _) => parse_config(path)?,
        (None, Some(dir)) => RunConfig::new(bundle_source(dir)?, Algorithm::Sdls),
        (None, None) => return Err(CliError::Config("pass --config or --problem".into())),
    };
    if let (Some(_), Some(dir)) = (&a.config, &a.problem) {
        cfg.problem = bundle_source(dir)?;
    }
    let k_p = a.kp.unwrap_or(cfg.gains.k_p);
    let k_i = a.ki.unwrap_or(cfg.gains.k_i);
    if let Some(alpha) = a.alpha {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(CliError::Config(format!("--alpha must be positive, got {alpha}")));
        }
    }
    let (pl, g_spec, gc_spec) = load_problem(&cfg)?;
    let g = g_spec.build().map_err(ProblemError::from)?;
    let g_c = gc_spec.build().map_err(ProblemError::from)?;
    let aug = build_augmented(&pl, &g, &g_c)?;
    let report = spectral_report(&aug, k_p, k_i, a.alpha)?;
    let diagonalizable = report.diagonalizable_m_tilde;
    let cond_v = report.cond_v_m_tilde;
    let out = VerifyOutput {
        m: pl.m(),
        n: pl.n(),
        p: pl.p(),
        q: pl.q(),
        k_p,
        k_i,
        report,
    };
    let mut json = serde_json::to_string_pretty(&out).expect("report serializes");
    json.push('\n');
    print!("{json}");
    if let Some(path) = &a.out {
        std::fs::write(path, &json).map_err(|e| CliError::io(path, e))?;
    }
    if !diagonalizable {
        return Err(CliError::NotDiagonalizable { cond_v });
    }
    Ok(())
}
