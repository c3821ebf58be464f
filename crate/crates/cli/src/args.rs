//! Command-line and config-file parsing into a typed [`RunConfig`].
//!
//! Every physics flag can also be given in a `key = value` file passed with
//! `--config`; keys are the flag names without dashes, and flags win over the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmcmc::experiments::ExperimentKind;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "qmcmc", version, about = "Simulate thermal-state preparation with a dissipative ancilla protocol")]
struct Cli {
    #[command(subcommand)]
    command: CommandArg,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum CommandArg {
    /// Steady state and metrics for one model.
    Thermalize,
    /// Shot-based trajectory sampler.
    Sample,
    /// Parameter sweep.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentArg,
    },
    /// Rate-hierarchy and Trotter-count pre-flight check.
    Validate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Tfim,
    Magnetization,
    Graph,
}

/// Flags shared by all commands. Values stay textual until merged with the config file.
#[derive(Debug, Args)]
struct Flags {
    /// `key = value` file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Hamiltonian family: tfim or graph.
    #[arg(long, global = true)]
    model: Option<String>,
    /// System size (qubits or graph vertices); comma list for sweeps.
    #[arg(long, global = true)]
    n: Option<String>,
    /// Transverse field in units of J; comma list for sweeps.
    #[arg(long, global = true)]
    hj: Option<String>,
    /// Coupling J.
    #[arg(long, global = true)]
    jj: Option<String>,
    /// Inverse temperature(s) in units of 1/J; comma list for sweeps.
    #[arg(long, global = true)]
    beta: Option<String>,
    /// System-ancilla coupling g.
    #[arg(long, global = true)]
    g: Option<String>,
    /// Trotter steps per period.
    #[arg(long, global = true)]
    nt: Option<String>,
    /// Periods per comb cycle.
    #[arg(long, global = true)]
    ncycle: Option<String>,
    /// Edge probability for random graphs; comma list for sweeps.
    #[arg(long, global = true)]
    pe: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    shots: Option<String>,
    /// Burn-in cycles per shot.
    #[arg(long, global = true)]
    burnin: Option<String>,
    /// Replace the steady state by this many map applications from a random pure state.
    #[arg(long, global = true)]
    sweeps: Option<String>,
    /// Ratio required by each "much less than" in the rate hierarchy.
    #[arg(long, global = true)]
    threshold: Option<String>,
    /// Target Trotter error used by `validate`.
    #[arg(long, global = true)]
    epsilon: Option<String>,
    #[arg(long = "qubit-cap", global = true)]
    qubit_cap: Option<String>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "QMCMC_WORKERS")]
    workers: Option<String>,
    /// Record per-row wall time.
    #[arg(long, global = true)]
    timing: bool,
    /// Suppress the hierarchy report and progress messages.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Also print per-row progress.
    #[arg(short, long, global = true)]
    verbose: bool,
}

/// Keys accepted in a config file, mirroring the long flag names.
pub const CONFIG_KEYS: [&str; 19] = [
    "model", "n", "hj", "jj", "beta", "g", "nt", "ncycle", "pe", "seed", "shots", "burnin", "sweeps", "threshold",
    "epsilon", "qubit-cap", "format", "out", "workers",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Thermalize,
    Sample,
    Experiment(ExperimentKind),
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Tfim,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verbosity {
    Quiet,
    Normal,
    Verbose,
}

/// Fully resolved invocation. `None` means "use the experiment default".
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Model,
    pub sizes: Option<Vec<usize>>,
    pub fields_hj: Option<Vec<f64>>,
    pub coupling_j: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub g: Option<f64>,
    pub n_trotter: Option<usize>,
    pub n_cycle: Option<usize>,
    pub edge_probs: Option<Vec<f64>>,
    pub seed: u64,
    pub shots: usize,
    pub burn_in: usize,
    pub sweeps: Option<usize>,
    pub threshold: f64,
    pub epsilon: f64,
    pub qubit_cap: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub timing: bool,
    pub verbosity: Verbosity,
}

/// Parses `argv` (program name first). Help and version requests surface as
/// [`CliError::Display`] so the caller can print them and exit 0.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Display(e.to_string())
        }
        _ => CliError::Usage(e.to_string().trim_end().to_string()),
    })?;
    let mut values = match &cli.flags.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (key, value) in flag_values(&cli.flags) {
        values.insert(key.to_string(), value);
    }
    resolve(&cli, &values)
}

/// Reads a flat `key = value` file with `#` comments.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if !CONFIG_KEYS.contains(&key) {
            return Err(CliError::UnknownKey(key.to_string()));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn flag_values(f: &Flags) -> Vec<(&'static str, String)> {
    let pairs = [
        ("model", &f.model),
        ("n", &f.n),
        ("hj", &f.hj),
        ("jj", &f.jj),
        ("beta", &f.beta),
        ("g", &f.g),
        ("nt", &f.nt),
        ("ncycle", &f.ncycle),
        ("pe", &f.pe),
        ("seed", &f.seed),
        ("shots", &f.shots),
        ("burnin", &f.burnin),
        ("sweeps", &f.sweeps),
        ("threshold", &f.threshold),
        ("epsilon", &f.epsilon),
        ("qubit-cap", &f.qubit_cap),
        ("format", &f.format),
        ("out", &f.out),
        ("workers", &f.workers),
    ];
    pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect()
}

fn scalar<T: FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    values
        .get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("invalid value `{v}` for --{key}: {e}"))))
        .transpose()
}

fn list<T: FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<T>>, CliError>
where
    T::Err: std::fmt::Display,
{
    let Some(raw) = values.get(key) else {
        return Ok(None);
    };
    let items = raw
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<T>().map_err(|e| CliError::Usage(format!("invalid value `{s}` for --{key}: {e}")))
        })
        .collect::<Result<Vec<T>, _>>()?;
    if items.is_empty() {
        return Err(CliError::Usage(format!("--{key} needs at least one value")));
    }
    Ok(Some(items))
}

fn single<T: Copy>(key: &str, items: &Option<Vec<T>>) -> Result<(), CliError> {
    match items {
        Some(v) if v.len() > 1 => Err(CliError::Usage(format!("--{key} takes a single value for this command"))),
        _ => Ok(()),
    }
}

fn resolve(cli: &Cli, values: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let command = match cli.command {
        CommandArg::Thermalize => Command::Thermalize,
        CommandArg::Sample => Command::Sample,
        CommandArg::Validate => Command::Validate,
        CommandArg::Experiment { kind } => Command::Experiment(match kind {
            ExperimentArg::Tfim => ExperimentKind::TfimInfidelity,
            ExperimentArg::Magnetization => ExperimentKind::MagnetizationSweep,
            ExperimentArg::Graph => ExperimentKind::GraphSampling,
        }),
    };
    let model_text = values.get("model").map(String::as_str);
    let model = match (command, model_text) {
        (Command::Experiment(ExperimentKind::GraphSampling), None | Some("graph")) => Model::Graph,
        (Command::Experiment(ExperimentKind::GraphSampling), Some(other)) => {
            return Err(CliError::Usage(format!("`experiment graph` conflicts with --model {other}")))
        }
        (Command::Experiment(_), None | Some("tfim")) => Model::Tfim,
        (Command::Experiment(_), Some(other)) => {
            return Err(CliError::Usage(format!("TFIM experiments conflict with --model {other}")))
        }
        (_, None | Some("tfim")) => Model::Tfim,
        (_, Some("graph")) => Model::Graph,
        (_, Some(other)) => return Err(CliError::Usage(format!("unknown --model `{other}` (expected tfim or graph)"))),
    };
    match model {
        Model::Tfim if values.contains_key("pe") => {
            return Err(CliError::Usage("--pe only applies to --model graph".into()))
        }
        Model::Graph if values.contains_key("hj") || values.contains_key("jj") => {
            return Err(CliError::Usage("--hj and --jj only apply to --model tfim".into()))
        }
        _ => {}
    }
    let format = match values.get("format").map(String::as_str) {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => return Err(CliError::Usage(format!("unknown --format `{other}` (expected csv or json)"))),
    };
    let verbosity = match (cli.flags.quiet, cli.flags.verbose) {
        (true, _) => Verbosity::Quiet,
        (_, true) => Verbosity::Verbose,
        _ => Verbosity::Normal,
    };
    let cfg = RunConfig {
        command,
        model,
        sizes: list(values, "n")?,
        fields_hj: list(values, "hj")?,
        coupling_j: scalar(values, "jj")?,
        betas: list(values, "beta")?,
        g: scalar(values, "g")?,
        n_trotter: scalar(values, "nt")?,
        n_cycle: scalar(values, "ncycle")?,
        edge_probs: list(values, "pe")?,
        seed: scalar(values, "seed")?.unwrap_or(0),
        shots: scalar(values, "shots")?.unwrap_or(1000),
        burn_in: scalar(values, "burnin")?.unwrap_or(20),
        sweeps: scalar(values, "sweeps")?,
        threshold: scalar(values, "threshold")?.unwrap_or(qmcmc::schedule::DEFAULT_HIERARCHY_RATIO),
        epsilon: scalar(values, "epsilon")?.unwrap_or(1e-2),
        qubit_cap: scalar(values, "qubit-cap")?,
        format,
        out: values.get("out").map(PathBuf::from),
        workers: scalar(values, "workers")?,
        timing: cli.flags.timing,
        verbosity,
    };
    if cfg.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    if !matches!(command, Command::Experiment(_)) {
        if cfg.betas.is_none() {
            return Err(CliError::Usage("missing required flag --beta".into()));
        }
        single("n", &cfg.sizes)?;
        single("hj", &cfg.fields_hj)?;
        single("pe", &cfg.edge_probs)?;
    }
    if command == Command::Sample {
        single("beta", &cfg.betas)?;
        if cfg.shots == 0 {
            return Err(CliError::Usage("--shots must be at least 1".into()));
        }
    }
    Ok(cfg)
}
