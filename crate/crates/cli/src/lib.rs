//! Command-line front end: parses arguments, prints the rate-hierarchy report,
//! dispatches to the simulator and writes CSV or JSON.

pub mod args;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use qmcmc::experiments::{self, ExperimentError, ExperimentKind, ExperimentPlan, GraphSource, StateMode};
use qmcmc::hamiltonians::{self, HamiltonianError, HamiltonianSpec};
use qmcmc::schedule::{self, ProtocolConfig};
use qmcmc::trajectory::{self, TrajectoryError};
use thiserror::Error;

pub use args::{parse_args, Command, Format, Model, RunConfig, Verbosity};
pub use output::{emit_results, emit_samples};

#[derive(Debug, Error)]
pub enum CliError {
    /// Help or version text; not a failure.
    #[error("{0}")]
    Display(String),
    #[error("{0}")]
    Usage(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("no result rows to write")]
    EmptyResult,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Schedule(#[from] schedule::ScheduleError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 0 for help/version, 2 for usage and config errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Display(_) => 0,
            CliError::Usage(_) | CliError::UnknownKey(_) => 2,
            CliError::Experiment(ExperimentError::InvalidPlan(_)) => 2,
            _ => 1,
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(argv).and_then(|cfg| execute(&cfg, stdout, stderr));
    match result {
        Ok(()) => 0,
        Err(CliError::Display(text)) => {
            let _ = write!(stdout, "{text}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed configuration, inside a bounded thread pool when `--workers` is set.
pub fn execute(cfg: &RunConfig, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match cfg.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            pool.install(|| dispatch(cfg, stdout, stderr))
        }
        None => dispatch(cfg, stdout, stderr),
    }
}

fn dispatch(cfg: &RunConfig, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match cfg.command {
        Command::Validate => validate(cfg, stdout),
        Command::Sample => sample(cfg, stdout, stderr),
        Command::Thermalize => {
            let kind = match cfg.model {
                Model::Tfim => ExperimentKind::TfimInfidelity,
                Model::Graph => ExperimentKind::GraphSampling,
            };
            run_experiment(cfg, build_plan(cfg, kind), stdout, stderr)
        }
        Command::Experiment(kind) => run_experiment(cfg, build_plan(cfg, kind), stdout, stderr),
    }
}

/// Experiment defaults overlaid with whatever the user supplied.
pub fn build_plan(cfg: &RunConfig, kind: ExperimentKind) -> ExperimentPlan {
    let mut plan = match kind {
        ExperimentKind::TfimInfidelity => ExperimentPlan::tfim(),
        ExperimentKind::MagnetizationSweep => ExperimentPlan::magnetization(),
        ExperimentKind::GraphSampling => ExperimentPlan::graph(),
    };
    if let Some(b) = &cfg.betas {
        plan.betas = b.clone();
    }
    if let Some(h) = &cfg.fields_hj {
        plan.fields_hj = h.clone();
    }
    if let Some(j) = cfg.coupling_j {
        plan.coupling_j = j;
    }
    if let Some(p) = &cfg.edge_probs {
        plan.edge_probs = p.clone();
    }
    if let Some(sizes) = &cfg.sizes {
        match kind {
            ExperimentKind::GraphSampling => plan.graph = GraphSource::Random { vertices: sizes[0] },
            _ => plan.sizes = sizes.clone(),
        }
    }
    if let Some(g) = cfg.g {
        plan.g = g;
    }
    if let Some(nt) = cfg.n_trotter {
        plan.n_trotter = nt;
    }
    if let Some(nc) = cfg.n_cycle {
        plan.n_cycle = nc;
    }
    if let Some(cap) = cfg.qubit_cap {
        plan.qubit_cap = cap;
    }
    if let Some(s) = cfg.sweeps {
        plan.mode = StateMode::Sweeps(s);
    }
    plan.seed = cfg.seed;
    plan.output = cfg.out.as_ref().map(|p| p.display().to_string());
    plan
}

/// The Hamiltonians a plan will visit, labelled for reports.
fn plan_hamiltonians(plan: &ExperimentPlan) -> Result<Vec<(String, HamiltonianSpec)>, CliError> {
    let mut out = Vec::new();
    match (&plan.kind, &plan.graph) {
        (ExperimentKind::GraphSampling, GraphSource::Random { vertices }) => {
            for (i, &p) in plan.edge_probs.iter().enumerate() {
                let seed = plan.seed.wrapping_add(i as u64);
                let g = experiments::generate_er_instance(*vertices, p, seed)?;
                out.push((
                    format!("graph n={vertices} p_e={p} seed={seed}"),
                    hamiltonians::build_graph_ising(&g)?,
                ));
            }
        }
        (ExperimentKind::GraphSampling, GraphSource::Fixed(g)) => {
            out.push(("graph".into(), hamiltonians::build_graph_ising(g)?));
        }
        _ => {
            for &n in &plan.sizes {
                for &hj in &plan.fields_hj {
                    let spec = hamiltonians::build_tfim(n, plan.coupling_j, hj * plan.coupling_j)?;
                    out.push((format!("tfim n={n} h/J={hj}"), spec));
                }
            }
        }
    }
    Ok(out)
}

fn protocol_for(plan: &ExperimentPlan, spec: &HamiltonianSpec, beta: f64) -> Result<ProtocolConfig, CliError> {
    let omega_m = hamiltonians::spectral_width(spec)?;
    Ok(plan.config(spec.qubit_count, beta, omega_m))
}

fn hierarchy_lines(plan: &ExperimentPlan, threshold: f64) -> Result<Vec<String>, CliError> {
    let beta = plan.betas.first().copied().unwrap_or(0.0);
    plan_hamiltonians(plan)?
        .into_iter()
        .map(|(label, spec)| {
            let cfg = protocol_for(plan, &spec, beta)?;
            let norm = hamiltonians::operator_norm(&spec)?;
            Ok(format!("[{label}]\n{}", schedule::validate_hierarchy(&cfg, norm, threshold)))
        })
        .collect()
}

fn open_sink<'a>(cfg: &RunConfig, stdout: &'a mut (dyn Write + Send)) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

fn run_experiment(
    cfg: &RunConfig,
    plan: ExperimentPlan,
    stdout: &mut (dyn Write + Send),
    stderr: &mut (dyn Write + Send),
) -> Result<(), CliError> {
    plan.validate()?;
    if cfg.verbosity >= Verbosity::Normal {
        for line in hierarchy_lines(&plan, cfg.threshold)? {
            writeln!(stderr, "{line}")?;
        }
    }
    let rows = experiments::run_plan(&plan, cfg.timing)?;
    if cfg.verbosity >= Verbosity::Verbose {
        for r in &rows {
            writeln!(
                stderr,
                "{} n={} beta={} -> {}",
                r.experiment,
                r.n_s,
                r.beta,
                r.error.as_deref().unwrap_or("ok")
            )?;
        }
    }
    let mut sink = open_sink(cfg, stdout)?;
    emit_results(&rows, cfg.format, &mut *sink)?;
    sink.flush()?;
    let failed = rows.iter().filter(|r| !r.succeeded()).count();
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} of {} points failed; see the error column", rows.len())));
    }
    Ok(())
}

fn sample(cfg: &RunConfig, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let kind = match cfg.model {
        Model::Tfim => ExperimentKind::TfimInfidelity,
        Model::Graph => ExperimentKind::GraphSampling,
    };
    let plan = build_plan(cfg, kind);
    plan.validate()?;
    let (label, spec) = plan_hamiltonians(&plan)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Usage("no Hamiltonian selected".into()))?;
    let pcfg = protocol_for(&plan, &spec, plan.betas[0])?;
    if cfg.verbosity >= Verbosity::Normal {
        let norm = hamiltonians::operator_norm(&spec)?;
        writeln!(stderr, "[{label}]\n{}", schedule::validate_hierarchy(&pcfg, norm, cfg.threshold))?;
    }
    let set = trajectory::sample_gibbs(&spec, &pcfg, cfg.burn_in, cfg.shots, cfg.seed)?;
    let mut sink = open_sink(cfg, stdout)?;
    emit_samples(&set, cfg.format, &mut *sink)?;
    sink.flush()?;
    Ok(())
}

fn validate(cfg: &RunConfig, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let kind = match cfg.model {
        Model::Tfim => ExperimentKind::TfimInfidelity,
        Model::Graph => ExperimentKind::GraphSampling,
    };
    let plan = build_plan(cfg, kind);
    plan.validate()?;
    for (label, spec) in plan_hamiltonians(&plan)? {
        let pcfg = protocol_for(&plan, &spec, plan.betas[0])?;
        let norm = hamiltonians::operator_norm(&spec)?;
        let report = schedule::validate_hierarchy(&pcfg, norm, cfg.threshold);
        // Largest single-term norm in the step: system, ancilla field, or coupling.
        let lambda = norm.max(0.5 * pcfg.omega_m).max(pcfg.g);
        let suggested = schedule::suggest_trotter_steps(pcfg.t_g(), lambda, cfg.epsilon)?;
        writeln!(stdout, "[{label}]\n{report}")?;
        writeln!(
            stdout,
            "trotter steps for error {:e}: suggested {suggested}, configured {}",
            cfg.epsilon, pcfg.n_trotter
        )?;
        writeln!(stdout, "overall: {}", if report.passes() { "ok" } else { "WARN" })?;
    }
    Ok(())
}
