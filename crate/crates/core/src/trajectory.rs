//! Pure-state trajectories of the thermalization protocol, gate by gate, with
//! mid-circuit ancilla resets and probabilistic ancilla flips.
//!
//! Randomness comes from PCG-XSL-RR 128/64 (`rand_pcg::Pcg64`). Shot `i` of a run
//! with seed `s` is seeded with `Pcg64::seed_from_u64(splitmix64(s + i))`, and a
//! uniform `u` in `[0, 1)` is `(next_u64() >> 11) * 2^-53`. Per shot the draws are
//! consumed in this order: the initial system basis state, then for every period
//! one reset measurement per ancilla followed by one flip decision per ancilla,
//! then the final system measurement.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, PeriodSchedule, TrotterGates};
use crate::hamiltonians::HamiltonianSpec;
use crate::schedule::ProtocolConfig;

/// Largest tolerated drift of the state norm after a period.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("state norm drifted to {norm}")]
    NormalizationLoss { norm: f64 },
    #[error("shot count must be at least 1")]
    InvalidShots,
    #[error("state has {got} amplitudes, protocol needs {want}")]
    DimensionMismatch { got: usize, want: usize },
}

/// SplitMix64 finalizer, used to derive per-shot seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn shot_rng(seed: u64, shot: u64) -> Pcg64 {
    Pcg64::seed_from_u64(splitmix64(seed.wrapping_add(shot)))
}

fn uniform(rng: &mut Pcg64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub amplitudes: Vec<Complex64>,
    pub rng: Pcg64,
    pub cycle_index: usize,
    pub period_index: usize,
}

impl TrajectoryState {
    /// System in basis state `system_basis`, ancillas in `|0...0>`.
    pub fn basis(n_s: usize, m: usize, system_basis: usize, rng: Pcg64) -> Self {
        let mut amplitudes = vec![Complex64::default(); 1usize << (n_s + m)];
        amplitudes[system_basis << m] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            rng,
            cycle_index: 0,
            period_index: 0,
        }
    }

    /// Uniformly random system basis state drawn from `rng`.
    pub fn random_basis(n_s: usize, m: usize, mut rng: Pcg64) -> Self {
        let dim = 1usize << n_s;
        let idx = ((uniform(&mut rng) * dim as f64) as usize).min(dim - 1);
        Self::basis(n_s, m, idx, rng)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Gates and per-period schedule compiled once and reused across shots.
#[derive(Debug, Clone)]
pub struct TrajectoryProgram {
    gates: TrotterGates,
    n_trotter: usize,
    phases: Vec<Vec<Complex64>>,
    ground_probabilities: Vec<f64>,
}

impl TrajectoryProgram {
    pub fn new(spec: &HamiltonianSpec, cfg: &ProtocolConfig) -> Result<Self, TrajectoryError> {
        let sched = PeriodSchedule::new(spec, cfg)?;
        let phases = sched.omegas.iter().map(|&w| sched.gates.ancilla_phases(w)).collect();
        Ok(Self {
            gates: sched.gates,
            n_trotter: cfg.n_trotter,
            phases,
            ground_probabilities: sched.ground_probabilities,
        })
    }

    pub fn system_qubits(&self) -> usize {
        self.gates.n_s
    }

    pub fn ancilla_count(&self) -> usize {
        self.gates.m
    }

    pub fn periods(&self) -> usize {
        self.phases.len()
    }

    /// Overrides the ancilla ground probability used in period `k`.
    pub fn set_ground_probability(&mut self, k: usize, p0: f64) {
        self.ground_probabilities[k] = p0;
    }

    fn ancilla_bit(&self, a: usize) -> usize {
        1usize << (self.gates.m - 1 - a)
    }

    /// Measure ancilla `a` in the computational basis and return it to `|0>`.
    fn reset_ancilla(&self, state: &mut TrajectoryState, a: usize) {
        let bit = self.ancilla_bit(a);
        let p1: f64 = state
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        let outcome_one = uniform(&mut state.rng) < p1;
        let keep_prob = if outcome_one { p1 } else { 1.0 - p1 };
        let renorm = 1.0 / keep_prob.sqrt();
        let amps = &mut state.amplitudes;
        for i in 0..amps.len() {
            if i & bit != 0 {
                continue;
            }
            let j = i | bit;
            if outcome_one {
                amps[i] = amps[j] * renorm;
            } else {
                amps[i] *= renorm;
            }
            amps[j] = Complex64::default();
        }
    }

    fn flip_ancilla(&self, state: &mut TrajectoryState, a: usize) {
        let bit = self.ancilla_bit(a);
        let amps = &mut state.amplitudes;
        for i in 0..amps.len() {
            if i & bit == 0 {
                amps.swap(i, i | bit);
            }
        }
    }

    /// Reset, probabilistic flip and Trotterized evolution for period `k`.
    pub fn run_period(&self, state: &mut TrajectoryState, k: usize) -> Result<(), TrajectoryError> {
        let want = self.gates.dim();
        if state.amplitudes.len() != want {
            return Err(TrajectoryError::DimensionMismatch {
                got: state.amplitudes.len(),
                want,
            });
        }
        for a in 0..self.gates.m {
            self.reset_ancilla(state, a);
        }
        let flip = 1.0 - self.ground_probabilities[k];
        for a in 0..self.gates.m {
            if uniform(&mut state.rng) < flip {
                self.flip_ancilla(state, a);
            }
        }
        let phases = &self.phases[k];
        for _ in 0..self.n_trotter {
            self.gates.apply_step(&mut state.amplitudes, phases);
        }
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(TrajectoryError::NormalizationLoss { norm });
        }
        state.period_index = k + 1;
        Ok(())
    }

    pub fn run_cycle(&self, state: &mut TrajectoryState) -> Result<(), TrajectoryError> {
        for k in 0..self.periods() {
            self.run_period(state, k)?;
        }
        state.cycle_index += 1;
        state.period_index = 0;
        Ok(())
    }

    /// Computational-basis measurement of the system register.
    pub fn measure_system(&self, state: &mut TrajectoryState) -> usize {
        let anc = 1usize << self.gates.m;
        let dim = 1usize << self.gates.n_s;
        let u = uniform(&mut state.rng);
        let mut acc = 0.0;
        for s in 0..dim {
            acc += state.amplitudes[s * anc..(s + 1) * anc]
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>();
            if u < acc {
                return s;
            }
        }
        // Rounding can leave the total marginally below 1; take the last populated state.
        (0..dim)
            .rev()
            .find(|&s| state.amplitudes[s * anc..(s + 1) * anc].iter().any(|z| z.norm_sqr() > 0.0))
            .unwrap_or(dim - 1)
    }

    /// One full shot: random basis start, `burn_in` cycles, system measurement.
    pub fn shot(&self, burn_in: usize, seed: u64, shot: u64) -> Result<usize, TrajectoryError> {
        let mut state = TrajectoryState::random_basis(self.gates.n_s, self.gates.m, shot_rng(seed, shot));
        for _ in 0..burn_in {
            self.run_cycle(&mut state)?;
        }
        Ok(self.measure_system(&mut state))
    }
}

/// Advances `state` by one comb cycle.
pub fn run_cycle(
    mut state: TrajectoryState,
    spec: &HamiltonianSpec,
    cfg: &ProtocolConfig,
) -> Result<TrajectoryState, TrajectoryError> {
    TrajectoryProgram::new(spec, cfg)?.run_cycle(&mut state)?;
    Ok(state)
}

/// Measurement counts keyed by system bitstring (qubit 0 first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub system_qubits: usize,
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl SampleSet {
    pub fn empty(system_qubits: usize, seed: u64) -> Self {
        Self {
            system_qubits,
            counts: BTreeMap::new(),
            shots: 0,
            seed,
        }
    }

    pub fn bitstring(&self, outcome: usize) -> String {
        (0..self.system_qubits)
            .map(|q| if outcome >> (self.system_qubits - 1 - q) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn record(&mut self, outcome: usize) {
        *self.counts.entry(self.bitstring(outcome)).or_insert(0) += 1;
        self.shots += 1;
    }

    /// Associative merge of two sample sets over the same register.
    pub fn merge(mut self, other: SampleSet) -> SampleSet {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.shots += other.shots;
        self
    }

    /// Empirical distribution indexed by basis state.
    pub fn distribution(&self) -> Vec<f64> {
        let dim = 1usize << self.system_qubits;
        let mut p = vec![0.0; dim];
        for (k, &v) in &self.counts {
            let idx = usize::from_str_radix(k, 2).expect("bitstring keys");
            p[idx] = v as f64 / self.shots as f64;
        }
        p
    }
}

/// Runs `shots` independent trajectories and histograms the final system measurement.
pub fn sample_gibbs(
    spec: &HamiltonianSpec,
    cfg: &ProtocolConfig,
    burn_in_cycles: usize,
    shots: usize,
    seed: u64,
) -> Result<SampleSet, TrajectoryError> {
    if shots == 0 {
        return Err(TrajectoryError::InvalidShots);
    }
    let program = TrajectoryProgram::new(spec, cfg)?;
    let outcomes = (0..shots as u64)
        .into_par_iter()
        .map(|i| program.shot(burn_in_cycles, seed, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut set = SampleSet::empty(spec.qubit_count, seed);
    for o in outcomes {
        set.record(o);
    }
    Ok(set)
}
