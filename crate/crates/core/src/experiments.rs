//! Parameter sweeps: TFIM steady-state infidelity, transverse magnetization versus
//! temperature, and Gibbs sampling on random Ising graphs.

use std::time::Instant;

use num_complex::Complex64;
use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, CycleMap};
use crate::hamiltonians::{self, Edge, GraphInstance, HamiltonianError, HamiltonianSpec};
use crate::linalg::{self, ComplexMatrix};
use crate::observables::{self, ObservableError};
use crate::schedule::{CombKind, ProtocolConfig};
use crate::trajectory::splitmix64;

pub const DEFAULT_QUBIT_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("cycle map has {count} eigenvalues near 1, so its fixed point is not unique ({source})")]
    DegenerateFixedPoint { count: usize, source: ChannelError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    TfimInfidelity,
    MagnetizationSweep,
    GraphSampling,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TfimInfidelity => "tfim",
            ExperimentKind::MagnetizationSweep => "magnetization",
            ExperimentKind::GraphSampling => "graph",
        }
    }
}

/// How the algorithm's state is obtained from the cycle map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateMode {
    /// Unit-eigenvalue eigenvector of the cycle map.
    SteadyState,
    /// This many cycle-map applications to a seeded random pure state.
    Sweeps(usize),
}

impl StateMode {
    pub fn label(self) -> String {
        match self {
            StateMode::SteadyState => "steady_state".into(),
            StateMode::Sweeps(n) => format!("sweeps_{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GraphSource {
    /// Fresh Erdos-Renyi instances, one per edge probability.
    Random { vertices: usize },
    /// Fixed vertex fields and edges.
    Fixed(GraphInstance),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    /// Principal-qubit counts (TFIM kinds).
    pub sizes: Vec<usize>,
    pub coupling_j: f64,
    /// Transverse field in units of `J` (TFIM kinds).
    pub fields_hj: Vec<f64>,
    pub betas: Vec<f64>,
    /// Edge probabilities (graph kind).
    pub edge_probs: Vec<f64>,
    pub graph: GraphSource,
    pub g: f64,
    pub n_trotter: usize,
    pub n_cycle: usize,
    /// `None` couples one ancilla to each principal qubit.
    pub ancilla_map: Option<Vec<usize>>,
    pub mode: StateMode,
    pub seed: u64,
    pub qubit_cap: usize,
    pub output: Option<String>,
}

impl ExperimentPlan {
    fn base(kind: ExperimentKind) -> Self {
        Self {
            kind,
            sizes: vec![2],
            coupling_j: 1.0,
            fields_hj: vec![1.0],
            betas: vec![10.0],
            edge_probs: vec![0.4],
            graph: GraphSource::Random { vertices: 4 },
            g: 0.005,
            n_trotter: 5000,
            n_cycle: 500,
            ancilla_map: None,
            mode: StateMode::SteadyState,
            seed: 0,
            qubit_cap: DEFAULT_QUBIT_CAP,
            output: None,
        }
    }

    /// TFIM defaults: `N_s = 2`, `h/J = 1`, `beta J = 10`, `g/J = 0.005`, `N_T = 5000`, `N_cycle = 500`.
    pub fn tfim() -> Self {
        Self::base(ExperimentKind::TfimInfidelity)
    }

    pub fn magnetization() -> Self {
        Self {
            betas: vec![0.1, 1.0, 10.0],
            ..Self::base(ExperimentKind::MagnetizationSweep)
        }
    }

    /// Graph defaults: 4 vertices, `p_e = 0.4`, `beta in {10, 1, 0.1}`, `N_cycle = 100`.
    pub fn graph() -> Self {
        Self {
            betas: vec![10.0, 1.0, 0.1],
            n_cycle: 100,
            ..Self::base(ExperimentKind::GraphSampling)
        }
    }

    fn principal_sizes(&self) -> Vec<usize> {
        match (&self.kind, &self.graph) {
            (ExperimentKind::GraphSampling, GraphSource::Random { vertices }) => vec![*vertices],
            (ExperimentKind::GraphSampling, GraphSource::Fixed(g)) => vec![g.vertex_count],
            _ => self.sizes.clone(),
        }
    }

    fn ancillas_for(&self, n_s: usize) -> Vec<usize> {
        self.ancilla_map.clone().unwrap_or_else(|| (0..n_s).collect())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidPlan(m));
        if self.betas.is_empty() {
            return bad("beta list is empty".into());
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return bad(format!("beta {b} must be finite and >= 0"));
        }
        match self.kind {
            ExperimentKind::TfimInfidelity | ExperimentKind::MagnetizationSweep => {
                if self.sizes.is_empty() || self.fields_hj.is_empty() {
                    return bad("size and field lists must be nonempty".into());
                }
            }
            ExperimentKind::GraphSampling => match &self.graph {
                GraphSource::Random { .. } => {
                    if self.edge_probs.is_empty() {
                        return bad("edge probability list is empty".into());
                    }
                    if let Some(p) = self.edge_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                        return bad(format!("edge probability {p} outside [0, 1]"));
                    }
                }
                GraphSource::Fixed(g) => g.validate()?,
            },
        }
        for n in self.principal_sizes() {
            if n == 0 {
                return bad("system size must be >= 1".into());
            }
            let m = self.ancillas_for(n);
            if m.is_empty() {
                return bad("at least one ancilla is required".into());
            }
            if n + m.len() > self.qubit_cap {
                return bad(format!(
                    "{n} principal + {} ancilla qubits exceeds the cap of {}",
                    m.len(),
                    self.qubit_cap
                ));
            }
            if let Some(q) = m.iter().find(|&&q| q >= n) {
                return bad(format!("ancilla mapped to qubit {q} of a {n}-qubit system"));
            }
        }
        if !(self.g > 0.0) || self.n_trotter == 0 || self.n_cycle == 0 {
            return bad("g, n_trotter and n_cycle must be positive".into());
        }
        Ok(())
    }

    /// Protocol configuration this plan uses for an `n_s`-qubit system.
    pub fn config(&self, n_s: usize, beta: f64, omega_m: f64) -> ProtocolConfig {
        ProtocolConfig {
            g: self.g,
            beta,
            omega_m,
            n_trotter: self.n_trotter,
            n_cycle: self.n_cycle,
            comb_kind: CombKind::SinSquared,
            ancilla_map: self.ancillas_for(n_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub n_s: usize,
    pub coupling_j: f64,
    pub field_h: Option<f64>,
    pub beta: f64,
    pub p_e: Option<f64>,
    pub instance_seed: Option<u64>,
    pub edges: Option<usize>,
    pub g: f64,
    pub n_trotter: usize,
    pub n_cycle: usize,
    pub mode: String,
    pub omega_m: Option<f64>,
    pub infidelity: Option<f64>,
    pub tvd: Option<f64>,
    pub magnetization_exact: Option<f64>,
    pub magnetization_algorithm: Option<f64>,
    pub magnetization_error: Option<f64>,
    pub spectral_gap: Option<f64>,
    pub unique_fixed_point: Option<bool>,
    pub lambda1_deviation: Option<f64>,
    pub error: Option<String>,
    /// Omitted from serialized output unless timing is requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl ResultRow {
    /// Column names in serialization order; `wall_time` is appended when present.
    pub const COLUMNS: [&'static str; 22] = [
        "experiment",
        "n_s",
        "coupling_j",
        "field_h",
        "beta",
        "p_e",
        "instance_seed",
        "edges",
        "g",
        "n_trotter",
        "n_cycle",
        "mode",
        "omega_m",
        "infidelity",
        "tvd",
        "magnetization_exact",
        "magnetization_algorithm",
        "magnetization_error",
        "spectral_gap",
        "unique_fixed_point",
        "lambda1_deviation",
        "error",
    ];

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// One sweep point before evaluation.
#[derive(Debug, Clone)]
struct Point {
    spec: HamiltonianSpec,
    field_h: Option<f64>,
    beta: f64,
    p_e: Option<f64>,
    instance_seed: Option<u64>,
    edges: Option<usize>,
}

/// Outcome of evaluating the protocol on one Hamiltonian at one temperature.
#[derive(Debug, Clone)]
pub struct PointMetrics {
    pub omega_m: f64,
    pub state: ComplexMatrix,
    pub thermal: ComplexMatrix,
    pub infidelity: f64,
    pub tvd: f64,
    pub magnetization_exact: f64,
    pub magnetization_algorithm: f64,
    pub spectral_gap: f64,
    pub unique: bool,
    pub lambda1_deviation: f64,
}

/// Deterministic random pure state used as the start of `StateMode::Sweeps`.
fn random_pure_state(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = Pcg64::seed_from_u64(splitmix64(seed));
    let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    let v = linalg::ComplexVector::from_fn(dim, |_, _| Complex64::new(u(), u()));
    let v = v.unscale(v.norm());
    &v * v.adjoint()
}

/// Builds the cycle map for `spec` at `beta` and scores the resulting state.
pub fn evaluate_point(
    spec: &HamiltonianSpec,
    plan: &ExperimentPlan,
    beta: f64,
    seed: u64,
) -> Result<PointMetrics, ExperimentError> {
    let omega_m = hamiltonians::spectral_width(spec)?;
    let cfg = plan.config(spec.qubit_count, beta, omega_m);
    let map: CycleMap = channel::build_cycle_map(spec, &cfg)?;
    let gap = channel::spectral_gap(&map)?;
    let ss = channel::steady_state(&map).map_err(|source| {
        if gap.unique {
            ExperimentError::Channel(source)
        } else {
            let values = linalg::eigenvalues(&map.superoperator.matrix).unwrap_or_default();
            let count = values.iter().filter(|v| (**v - Complex64::new(1.0, 0.0)).norm() < channel::DEGENERACY_TOL).count();
            ExperimentError::DegenerateFixedPoint { count, source }
        }
    })?;
    let lambda1_deviation = (ss.lambda_1 - Complex64::new(1.0, 0.0)).norm();
    let state = match plan.mode {
        StateMode::SteadyState => ss.rho,
        StateMode::Sweeps(n) => {
            let start = random_pure_state(spec.dim(), seed);
            let rho = channel::iterate_map(&map, &start, n);
            let rho = (&rho + rho.adjoint()).scale(0.5);
            let tr = linalg::trace(&rho).re;
            rho.unscale(tr)
        }
    };
    let thermal = hamiltonians::thermal_state(spec, beta)?;
    let fid = observables::fidelity(&thermal, &state)?;
    let target = if spec.is_diagonal() {
        hamiltonians::gibbs_distribution(spec, beta)?
    } else {
        observables::diagonal_distribution(&thermal)
    };
    let tvd = observables::tvd(&target, &renormalized(observables::diagonal_distribution(&state)))?;
    let n = spec.qubit_count;
    Ok(PointMetrics {
        omega_m,
        magnetization_exact: observables::transverse_magnetization(&thermal, n)?,
        magnetization_algorithm: observables::transverse_magnetization(&state, n)?,
        state,
        thermal,
        infidelity: (1.0 - fid).clamp(0.0, 1.0),
        tvd,
        spectral_gap: gap.gap,
        unique: gap.unique,
        lambda1_deviation,
    })
}

fn renormalized(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

fn run_points(plan: &ExperimentPlan, points: Vec<Point>, timing: bool) -> Vec<ResultRow> {
    points
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| {
            let start = Instant::now();
            let seed = plan.seed.wrapping_add(i as u64);
            let result = evaluate_point(&p.spec, plan, p.beta, seed);
            let mut row = ResultRow {
                experiment: plan.kind.name().into(),
                n_s: p.spec.qubit_count,
                coupling_j: plan.coupling_j,
                field_h: p.field_h,
                beta: p.beta,
                p_e: p.p_e,
                instance_seed: p.instance_seed,
                edges: p.edges,
                g: plan.g,
                n_trotter: plan.n_trotter,
                n_cycle: plan.n_cycle,
                mode: plan.mode.label(),
                omega_m: None,
                infidelity: None,
                tvd: None,
                magnetization_exact: None,
                magnetization_algorithm: None,
                magnetization_error: None,
                spectral_gap: None,
                unique_fixed_point: None,
                lambda1_deviation: None,
                error: None,
                wall_time: None,
            };
            match result {
                Ok(m) => {
                    row.omega_m = Some(m.omega_m);
                    row.infidelity = Some(m.infidelity);
                    row.tvd = Some(m.tvd);
                    row.magnetization_exact = Some(m.magnetization_exact);
                    row.magnetization_algorithm = Some(m.magnetization_algorithm);
                    row.magnetization_error = Some((m.magnetization_exact - m.magnetization_algorithm).abs());
                    row.spectral_gap = Some(m.spectral_gap);
                    row.unique_fixed_point = Some(m.unique);
                    row.lambda1_deviation = Some(m.lambda1_deviation);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            if timing {
                row.wall_time = Some(start.elapsed().as_secs_f64());
            }
            row
        })
        .collect()
}

fn tfim_points(plan: &ExperimentPlan) -> Result<Vec<Point>, ExperimentError> {
    let mut points = Vec::new();
    for &n in &plan.sizes {
        for &hj in &plan.fields_hj {
            let spec = hamiltonians::build_tfim(n, plan.coupling_j, hj * plan.coupling_j)?;
            for &beta in &plan.betas {
                points.push(Point {
                    spec: spec.clone(),
                    field_h: Some(hj * plan.coupling_j),
                    beta,
                    p_e: None,
                    instance_seed: None,
                    edges: None,
                });
            }
        }
    }
    Ok(points)
}

fn expect_kind(plan: &ExperimentPlan, kind: ExperimentKind) -> Result<(), ExperimentError> {
    if plan.kind != kind {
        return Err(ExperimentError::InvalidPlan(format!(
            "plan is for `{}`, expected `{}`",
            plan.kind.name(),
            kind.name()
        )));
    }
    plan.validate()
}

/// Seeded Erdos-Renyi instance. Draw order: all vertex fields ascending, then for each
/// pair `(j, k)` in lexicographic order an inclusion draw followed, if included, by its weight.
pub fn generate_er_instance(n: usize, p_e: f64, seed: u64) -> Result<GraphInstance, ExperimentError> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(ExperimentError::InvalidPlan(format!("edge probability {p_e} outside [0, 1]")));
    }
    let mut rng = Pcg64::seed_from_u64(splitmix64(seed));
    let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let local_fields: Vec<f64> = (0..n).map(|_| u()).collect();
    let mut edges = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            if u() < p_e {
                edges.push(Edge { j, k, weight: u() });
            }
        }
    }
    Ok(GraphInstance {
        vertex_count: n,
        local_fields,
        edges,
    })
}

pub fn run_tfim_infidelity(plan: &ExperimentPlan) -> Result<Vec<ResultRow>, ExperimentError> {
    run_tfim_infidelity_timed(plan, false)
}

pub fn run_tfim_infidelity_timed(plan: &ExperimentPlan, timing: bool) -> Result<Vec<ResultRow>, ExperimentError> {
    expect_kind(plan, ExperimentKind::TfimInfidelity)?;
    Ok(run_points(plan, tfim_points(plan)?, timing))
}

pub fn run_magnetization_sweep(plan: &ExperimentPlan) -> Result<Vec<ResultRow>, ExperimentError> {
    run_magnetization_sweep_timed(plan, false)
}

pub fn run_magnetization_sweep_timed(plan: &ExperimentPlan, timing: bool) -> Result<Vec<ResultRow>, ExperimentError> {
    expect_kind(plan, ExperimentKind::MagnetizationSweep)?;
    Ok(run_points(plan, tfim_points(plan)?, timing))
}

pub fn run_graph_sampling(plan: &ExperimentPlan) -> Result<Vec<ResultRow>, ExperimentError> {
    run_graph_sampling_timed(plan, false)
}

pub fn run_graph_sampling_timed(plan: &ExperimentPlan, timing: bool) -> Result<Vec<ResultRow>, ExperimentError> {
    expect_kind(plan, ExperimentKind::GraphSampling)?;
    let instances: Vec<(GraphInstance, Option<f64>, Option<u64>)> = match &plan.graph {
        GraphSource::Random { vertices } => plan
            .edge_probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let seed = plan.seed.wrapping_add(i as u64);
                generate_er_instance(*vertices, p, seed).map(|g| (g, Some(p), Some(seed)))
            })
            .collect::<Result<_, _>>()?,
        GraphSource::Fixed(g) => vec![(g.clone(), None, None)],
    };
    let mut points = Vec::new();
    for (graph, p_e, seed) in instances {
        let spec = hamiltonians::build_graph_ising(&graph)?;
        for &beta in &plan.betas {
            points.push(Point {
                spec: spec.clone(),
                field_h: None,
                beta,
                p_e,
                instance_seed: seed,
                edges: Some(graph.edges.len()),
            });
        }
    }
    Ok(run_points(plan, points, timing))
}

/// Dispatches on `plan.kind`.
pub fn run_plan(plan: &ExperimentPlan, timing: bool) -> Result<Vec<ResultRow>, ExperimentError> {
    match plan.kind {
        ExperimentKind::TfimInfidelity => run_tfim_infidelity_timed(plan, timing),
        ExperimentKind::MagnetizationSweep => run_magnetization_sweep_timed(plan, timing),
        ExperimentKind::GraphSampling => run_graph_sampling_timed(plan, timing),
    }
}
