//! Simulation of dissipative-dynamics quantum Markov chain Monte Carlo.
//!
//! A system register is weakly coupled to a few ancilla qubits whose frequency is
//! swept across the system spectrum ("spectral combing") and which are reset to a
//! thermal state after every interaction period. The reduced dynamics over one
//! sweep is a CPTP map whose fixed point approximates the Gibbs state.
//!
//! * [`linalg`]: dense complex kernels (Kronecker products, eigensolvers, partial trace).
//! * [`hamiltonians`]: Pauli-word Hamiltonians, TFIM and graph Ising builders, thermal oracles.
//! * [`schedule`]: comb waveform, ancilla occupations, parameter-hierarchy checks.
//! * [`channel`]: period channels, cycle map, steady state and spectral gap.
//! * [`trajectory`]: shot-based pure-state sampler with mid-circuit resets.
//! * [`observables`]: fidelity, total variation distance, transverse magnetization.
//! * [`experiments`]: parameter sweeps producing [`experiments::ResultRow`]s.

// `!(x < tol)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod experiments;
pub mod hamiltonians;
pub mod linalg;
pub mod observables;
pub mod schedule;
pub mod trajectory;

pub use channel::{build_cycle_map, spectral_gap, steady_state, CycleMap, KrausSet, Superoperator};
pub use hamiltonians::{build_graph_ising, build_tfim, GraphInstance, HamiltonianSpec};
pub use linalg::ComplexMatrix;
pub use schedule::ProtocolConfig;
