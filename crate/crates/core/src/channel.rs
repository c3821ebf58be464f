//! Per-period thermalization channels and the full-cycle map.
//!
//! The composite register holds the `N_s` principal qubits followed by the `M`
//! ancillas. Each period resets the ancillas, flips each one with probability
//! `1 - p_0`, and evolves under the Trotterized unitary `W`. Because the reset
//! discards the ancilla state, the reduced system channel for one period is
//! exactly `rho -> Tr_anc[W (rho (x) rho_prep) W^dagger]`, so no ancilla state is
//! carried between periods.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonians::{self, HamiltonianError, HamiltonianSpec};
use crate::linalg::{self, ComplexMatrix, ComplexVector, LinalgError};
use crate::schedule::{self, ProtocolConfig, ScheduleError};

/// Kraus operators with Frobenius norm below this are dropped.
pub const KRAUS_PRUNE_NORM: f64 = 1e-14;
/// Allowed `||sum K^dagger K - I||_F`.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Allowed `|lambda_1 - 1|` for a fixed point.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-6;
/// Eigenvalues within this distance of 1 count towards the fixed-point degeneracy.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Total negative spectral weight that may be clipped from a steady state.
pub const MAX_CLIPPED_MASS: f64 = 1e-6;

/// Periods whose channels are built concurrently before being folded into the cycle.
const PERIOD_CHUNK: usize = 16;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("Kraus set is not complete: ||sum K^dagger K - I||_F = {deviation:.3e}")]
    CompletenessViolation { deviation: f64 },
    #[error("protocol needs at least one ancilla")]
    NoAncilla,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dominant eigenvalue {lambda} is not within {tol:e} of 1", tol = UNIT_EIGENVALUE_TOL)]
    NoUnitEigenvalue { lambda: Complex64 },
    #[error("steady state has {mass:.3e} negative spectral weight")]
    NegativeEigenvalue { mass: f64 },
    #[error("unit-eigenvalue eigenvector is traceless; fixed point is not unique")]
    TracelessFixedPoint,
}

/// Precomputed gate set for one Trotter step on the composite register.
#[derive(Debug, Clone)]
pub(crate) struct TrotterGates {
    pub n_s: usize,
    pub m: usize,
    pub dt: f64,
    /// `exp(-i H_s dt)` on the principal register.
    pub system_unitary: ComplexMatrix,
    /// Interaction angle `g dt`; each factor is `cos I - i sin X (x) X`.
    pub cos_theta: f64,
    pub sin_theta: f64,
    /// `(principal bit, ancilla bit)` masks per ancilla.
    pub pair_masks: Vec<(usize, usize)>,
}

impl TrotterGates {
    pub fn new(spec: &HamiltonianSpec, cfg: &ProtocolConfig) -> Result<Self, ChannelError> {
        cfg.validate(spec.qubit_count)?;
        let n_s = spec.qubit_count;
        let m = cfg.ancilla_count();
        let n = n_s + m;
        let dt = cfg.dt();
        let system_unitary = linalg::expm_hermitian(&hamiltonians::to_matrix(spec), Complex64::new(0.0, -dt))?;
        let theta = cfg.g * dt;
        let bit = |q: usize| 1usize << (n - 1 - q);
        let pair_masks = cfg
            .ancilla_map
            .iter()
            .enumerate()
            .map(|(a, &p)| (bit(p), bit(n_s + a)))
            .collect();
        Ok(Self {
            n_s,
            m,
            dt,
            system_unitary,
            cos_theta: theta.cos(),
            sin_theta: theta.sin(),
            pair_masks,
        })
    }

    pub fn qubits(&self) -> usize {
        self.n_s + self.m
    }

    pub fn dim(&self) -> usize {
        1usize << self.qubits()
    }

    /// Diagonal of `prod_m exp(+i (Omega/2) Z_m dt)` over the composite basis.
    pub fn ancilla_phases(&self, omega: f64) -> Vec<Complex64> {
        let half = 0.5 * omega * self.dt;
        let anc_mask = (1usize << self.m) - 1;
        (0..self.dim())
            .map(|idx| {
                let ones = (idx & anc_mask).count_ones() as f64;
                let zsum = self.m as f64 - 2.0 * ones;
                Complex64::from_polar(1.0, half * zsum)
            })
            .collect()
    }

    /// One Trotter step: ancilla phases, then system evolution, then interactions.
    pub fn apply_step(&self, amps: &mut [Complex64], phases: &[Complex64]) {
        for (a, p) in amps.iter_mut().zip(phases) {
            *a *= p;
        }
        self.apply_system(amps);
        let (c, s) = (self.cos_theta, self.sin_theta);
        let mis = Complex64::new(0.0, -s);
        for &(p_bit, a_bit) in &self.pair_masks {
            let mask = p_bit | a_bit;
            for r in 0..amps.len() {
                if r & p_bit != 0 {
                    continue;
                }
                let t = r ^ mask;
                let (x, y) = (amps[r], amps[t]);
                amps[r] = x * c + y * mis;
                amps[t] = y * c + x * mis;
            }
        }
    }

    /// `exp(-i H_s dt) (x) I_anc`; principal qubits are the leading bits, so each
    /// ancilla basis value `b` owns the strided slice `s * 2^M + b`.
    fn apply_system(&self, amps: &mut [Complex64]) {
        let d = 1usize << self.n_s;
        let anc = 1usize << self.m;
        let u = &self.system_unitary;
        let mut stack = [Complex64::default(); 64];
        let mut heap = Vec::new();
        let tmp: &mut [Complex64] = if d <= stack.len() {
            &mut stack[..d]
        } else {
            heap.resize(d, Complex64::default());
            &mut heap
        };
        for b in 0..anc {
            for (s, t) in tmp.iter_mut().enumerate() {
                *t = amps[s * anc + b];
            }
            for r in 0..d {
                let mut acc = Complex64::default();
                for (s, t) in tmp.iter().enumerate() {
                    acc += u[(r, s)] * t;
                }
                amps[r * anc + b] = acc;
            }
        }
    }

    /// Matrix of one Trotter step.
    pub fn step_matrix(&self, omega: f64) -> ComplexMatrix {
        let dim = self.dim();
        let phases = self.ancilla_phases(omega);
        let mut step = linalg::identity(dim);
        for col in step.as_mut_slice().chunks_exact_mut(dim) {
            self.apply_step(col, &phases);
        }
        step
    }

    pub fn period_unitary(&self, omega: f64, n_trotter: usize) -> ComplexMatrix {
        linalg::matrix_power(&self.step_matrix(omega), n_trotter)
    }
}

/// Trotterized interaction-period unitary on the composite register.
pub fn build_period_unitary(
    spec: &HamiltonianSpec,
    cfg: &ProtocolConfig,
    omega: f64,
) -> Result<ComplexMatrix, ChannelError> {
    Ok(TrotterGates::new(spec, cfg)?.period_unitary(omega, cfg.n_trotter))
}

/// Product distribution of thermal ancillas over the `2^M` ancilla basis states.
pub fn ancilla_preparation(omega: f64, beta: f64, m_count: usize) -> Vec<f64> {
    distribution_from_ground(schedule::ground_probability(omega, beta), m_count)
}

pub(crate) fn distribution_from_ground(p0: f64, m_count: usize) -> Vec<f64> {
    (0..1usize << m_count)
        .map(|b| {
            let ones = b.count_ones() as i32;
            p0.powi(m_count as i32 - ones) * (1.0 - p0).powi(ones)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct KrausSet {
    pub dim: usize,
    pub operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.operators {
            sum += k.adjoint() * k;
        }
        (sum - linalg::identity(self.dim)).norm()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.operators {
            out += k * rho * k.adjoint();
        }
        out
    }
}

/// Reduced system channel of one period from the composite unitary and ancilla preparation.
pub fn build_period_channel(
    w: &ComplexMatrix,
    prep: &[f64],
    n_s: usize,
    m_count: usize,
) -> Result<KrausSet, ChannelError> {
    let anc = 1usize << m_count;
    let d = 1usize << n_s;
    if w.shape() != (d * anc, d * anc) {
        return Err(ChannelError::DimensionMismatch(format!(
            "unitary is {}x{}, expected {} for {n_s}+{m_count} qubits",
            w.nrows(),
            w.ncols(),
            d * anc
        )));
    }
    if prep.len() != anc {
        return Err(ChannelError::DimensionMismatch(format!(
            "preparation has {} entries, expected {anc}",
            prep.len()
        )));
    }
    let mut operators = Vec::with_capacity(anc * anc);
    for (b, &pb) in prep.iter().enumerate() {
        if pb <= 0.0 {
            continue;
        }
        let amp = pb.sqrt();
        for i in 0..anc {
            let k = ComplexMatrix::from_fn(d, d, |row, col| w[(row * anc + i, col * anc + b)] * amp);
            if k.norm() >= KRAUS_PRUNE_NORM {
                operators.push(k);
            }
        }
    }
    let set = KrausSet { dim: d, operators };
    let deviation = set.completeness_deviation();
    if !(deviation < COMPLETENESS_TOL) {
        return Err(ChannelError::CompletenessViolation { deviation });
    }
    Ok(set)
}

/// Channel matrix on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    /// Dimension `d` of the density matrices acted on; the matrix is `d^2 x d^2`.
    pub system_dim: usize,
    pub matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn identity(system_dim: usize) -> Self {
        Self {
            system_dim,
            matrix: linalg::identity(system_dim * system_dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.system_dim * self.system_dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let v = &self.matrix * linalg::vectorize(rho);
        linalg::devectorize(&v, self.system_dim)
    }

    /// `self` after `first`.
    pub fn after(&self, first: &Superoperator) -> Superoperator {
        Superoperator {
            system_dim: self.system_dim,
            matrix: linalg::matmul(&self.matrix, &first.matrix),
        }
    }

    /// Choi matrix `sum_ij |i><j| (x) Lambda(|i><j|)`.
    pub fn choi(&self) -> ComplexMatrix {
        let d = self.system_dim;
        ComplexMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, a) = (r / d, r % d);
            let (j, b) = (c / d, c % d);
            self.matrix[(b * d + a, j * d + i)]
        })
    }
}

/// `sum_K conj(K) (x) K`.
pub fn to_superoperator(kraus: &KrausSet) -> Superoperator {
    let d = kraus.dim;
    let mut matrix = ComplexMatrix::zeros(d * d, d * d);
    for k in &kraus.operators {
        let kc = k.map(|z| z.conj());
        for c2 in 0..d {
            for r2 in 0..d {
                let outer = kc[(r2, c2)];
                if outer == Complex64::default() {
                    continue;
                }
                for c1 in 0..d {
                    let col = c2 * d + c1;
                    for r1 in 0..d {
                        matrix[(r2 * d + r1, col)] += outer * k[(r1, c1)];
                    }
                }
            }
        }
    }
    Superoperator { system_dim: d, matrix }
}

/// Full-cycle reduced map plus the per-period schedule it was built from.
#[derive(Debug, Clone)]
pub struct CycleMap {
    pub superoperator: Superoperator,
    pub config: ProtocolConfig,
    pub omegas: Vec<f64>,
    pub ground_probabilities: Vec<f64>,
}

/// Everything needed to build period `k`'s channel; shared across workers.
pub(crate) struct PeriodSchedule {
    pub gates: TrotterGates,
    pub omegas: Vec<f64>,
    pub ground_probabilities: Vec<f64>,
}

impl PeriodSchedule {
    pub fn new(spec: &HamiltonianSpec, cfg: &ProtocolConfig) -> Result<Self, ChannelError> {
        if cfg.ancilla_map.is_empty() {
            return Err(ChannelError::NoAncilla);
        }
        let gates = TrotterGates::new(spec, cfg)?;
        let omegas = (0..cfg.n_cycle)
            .map(|k| schedule::comb_value(cfg, k))
            .collect::<Result<Vec<_>, _>>()?;
        let ground_probabilities = omegas
            .iter()
            .map(|&w| schedule::ground_probability(w, cfg.beta))
            .collect();
        Ok(Self {
            gates,
            omegas,
            ground_probabilities,
        })
    }
}

pub fn build_cycle_map(spec: &HamiltonianSpec, cfg: &ProtocolConfig) -> Result<CycleMap, ChannelError> {
    let sched = PeriodSchedule::new(spec, cfg)?;
    let gates = &sched.gates;
    let period = |k: usize| -> Result<Superoperator, ChannelError> {
        let w = gates.period_unitary(sched.omegas[k], cfg.n_trotter);
        let prep = distribution_from_ground(sched.ground_probabilities[k], gates.m);
        let kraus = build_period_channel(&w, &prep, gates.n_s, gates.m)?;
        Ok(to_superoperator(&kraus))
    };

    let mut total = Superoperator::identity(1usize << gates.n_s);
    let indices: Vec<usize> = (0..cfg.n_cycle).collect();
    for chunk in indices.chunks(PERIOD_CHUNK) {
        let built = chunk
            .par_iter()
            .map(|&k| period(k))
            .collect::<Result<Vec<_>, _>>()?;
        for s in &built {
            total = s.after(&total);
        }
    }
    Ok(CycleMap {
        superoperator: total,
        config: cfg.clone(),
        omegas: sched.omegas,
        ground_probabilities: sched.ground_probabilities,
    })
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: ComplexMatrix,
    pub lambda_1: Complex64,
}

/// Fixed point of a channel from its dominant eigenvector, projected onto the state space.
pub fn steady_state_of(op: &Superoperator) -> Result<SteadyState, ChannelError> {
    let pair = linalg::dominant_eigs(&op.matrix, 1)?.remove(0);
    if !((pair.value - Complex64::new(1.0, 0.0)).norm() < UNIT_EIGENVALUE_TOL) {
        return Err(ChannelError::NoUnitEigenvalue { lambda: pair.value });
    }
    let raw = linalg::devectorize(&pair.vector, op.system_dim);
    let tr = linalg::trace(&raw);
    if tr.norm() < 1e-8 {
        return Err(ChannelError::TracelessFixedPoint);
    }
    let scaled = raw.map(|z| z / tr);
    let herm = (&scaled + scaled.adjoint()).scale(0.5);
    let eig = linalg::hermitian_eig(&herm)?;
    let clipped: f64 = eig.eigenvalues.iter().filter(|&&v| v < -1e-9).map(|v| -v).sum();
    if clipped > MAX_CLIPPED_MASS {
        return Err(ChannelError::NegativeEigenvalue { mass: clipped });
    }
    let kept: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let rho = eig.reconstruct_with(|v| Complex64::new(v.max(0.0) / kept, 0.0));
    let rho = (&rho + rho.adjoint()).scale(0.5);
    Ok(SteadyState {
        rho,
        lambda_1: pair.value,
    })
}

pub fn steady_state(m: &CycleMap) -> Result<SteadyState, ChannelError> {
    steady_state_of(&m.superoperator)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    /// `1 - |lambda_2|`.
    pub gap: f64,
    /// Exactly one eigenvalue within `DEGENERACY_TOL` of 1.
    pub unique: bool,
    pub lambda_1: Complex64,
    pub lambda_2: Complex64,
}

pub fn spectral_gap_of(op: &Superoperator) -> Result<SpectralGap, ChannelError> {
    let values = linalg::eigenvalues(&op.matrix)?;
    let one = Complex64::new(1.0, 0.0);
    let near_one = values.iter().filter(|v| (**v - one).norm() < DEGENERACY_TOL).count();
    let lambda_1 = values[0];
    let lambda_2 = values.get(1).copied().unwrap_or_default();
    Ok(SpectralGap {
        gap: (1.0 - lambda_2.norm()).clamp(0.0, 1.0),
        unique: near_one == 1,
        lambda_1,
        lambda_2,
    })
}

pub fn spectral_gap(m: &CycleMap) -> Result<SpectralGap, ChannelError> {
    spectral_gap_of(&m.superoperator)
}

/// Applies the cycle map `cycles` times to `rho`.
pub fn iterate_map(m: &CycleMap, rho: &ComplexMatrix, cycles: usize) -> ComplexMatrix {
    let mut v: ComplexVector = linalg::vectorize(rho);
    for _ in 0..cycles {
        v = &m.superoperator.matrix * v;
    }
    linalg::devectorize(&v, m.superoperator.system_dim)
}
