//! Spin Hamiltonians as weighted Pauli-word sums, and exact thermal oracles.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, ComplexMatrix, LinalgError};

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("Hamiltonian is not diagonal in the computational basis (term {term} contains X or Y)")]
    NonDiagonalHamiltonian { term: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `coefficient * letters[0] (x) letters[1] (x) ...`, qubit 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub coefficient: f64,
    pub letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(coefficient: f64, letters: Vec<Pauli>) -> Self {
        Self { coefficient, letters }
    }

    /// Identity everywhere except the listed `(qubit, letter)` sites.
    pub fn sites(coefficient: f64, qubit_count: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut letters = vec![Pauli::I; qubit_count];
        for &(q, p) in sites {
            letters[q] = p;
        }
        Self { coefficient, letters }
    }

    pub fn word(&self) -> String {
        self.letters.iter().map(|p| p.as_char()).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.letters.iter().all(|p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Image of basis state `col` under the bare word: `(row, phase)`.
    fn act_on_basis(&self, col: usize) -> (usize, Complex64) {
        let n = self.letters.len();
        let mut row = col;
        let mut phase = Complex64::new(1.0, 0.0);
        for (q, letter) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            let set = col & bit != 0;
            match letter {
                Pauli::I => {}
                Pauli::X => row ^= bit,
                Pauli::Y => {
                    row ^= bit;
                    phase *= if set { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
                }
                Pauli::Z => {
                    if set {
                        phase = -phase;
                    }
                }
            }
        }
        (row, phase)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub qubit_count: usize,
    pub terms: Vec<PauliString>,
    pub label: String,
}

impl HamiltonianSpec {
    pub fn new(qubit_count: usize, terms: Vec<PauliString>, label: impl Into<String>) -> Result<Self, HamiltonianError> {
        if qubit_count == 0 {
            return Err(HamiltonianError::InvalidSize("qubit count must be at least 1".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.letters.len() != qubit_count {
                return Err(HamiltonianError::InvalidSize(format!(
                    "term {i} has {} letters, expected {qubit_count}",
                    t.letters.len()
                )));
            }
            if !t.coefficient.is_finite() {
                return Err(HamiltonianError::InvalidSize(format!("term {i} has a non-finite coefficient")));
            }
        }
        Ok(Self {
            qubit_count,
            terms,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        1usize << self.qubit_count
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(PauliString::is_diagonal)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliString::new(t.coefficient * factor, t.letters.clone()))
            .collect();
        Self {
            qubit_count: self.qubit_count,
            terms,
            label: self.label.clone(),
        }
    }
}

/// Text form: one `coeff word` line per term, `#` starts a comment.
impl fmt::Display for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.label.is_empty() {
            writeln!(f, "# {}", self.label)?;
        }
        for t in &self.terms {
            writeln!(f, "{:?} {}", t.coefficient, t.word())?;
        }
        Ok(())
    }
}

impl FromStr for HamiltonianSpec {
    type Err = HamiltonianError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut qubit_count: Option<usize> = None;
        let mut terms = Vec::new();
        let mut label = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let (body, comment) = match raw.split_once('#') {
                Some((b, c)) => (b, Some(c)),
                None => (raw, None),
            };
            if label.is_empty() && terms.is_empty() && body.trim().is_empty() {
                if let Some(c) = comment {
                    label = c.trim().to_string();
                }
            }
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let parse_err = |message: String| HamiltonianError::Parse { line: line_no, message };
            let mut fields = body.split_whitespace();
            let (Some(coeff), Some(word), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected `coeff pauli-word`, got `{body}`")));
            };
            let coefficient: f64 = coeff
                .parse()
                .map_err(|_| parse_err(format!("bad coefficient `{coeff}`")))?;
            if !coefficient.is_finite() {
                return Err(parse_err(format!("non-finite coefficient `{coeff}`")));
            }
            let letters = word
                .chars()
                .map(|ch| Pauli::from_char(ch).ok_or_else(|| parse_err(format!("bad Pauli letter `{ch}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            match qubit_count {
                None => qubit_count = Some(letters.len()),
                Some(n) if n != letters.len() => {
                    return Err(parse_err(format!(
                        "word `{word}` has {} letters, earlier terms have {n}",
                        letters.len()
                    )))
                }
                Some(_) => {}
            }
            terms.push(PauliString { coefficient, letters });
        }
        let n = qubit_count.ok_or_else(|| HamiltonianError::Parse {
            line: 0,
            message: "no terms found".into(),
        })?;
        HamiltonianSpec::new(n, terms, label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub j: usize,
    pub k: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub vertex_count: usize,
    pub local_fields: Vec<f64>,
    pub edges: Vec<Edge>,
}

impl GraphInstance {
    pub fn validate(&self) -> Result<(), HamiltonianError> {
        if self.vertex_count == 0 {
            return Err(HamiltonianError::InvalidGraph("graph has no vertices".into()));
        }
        if self.local_fields.len() != self.vertex_count {
            return Err(HamiltonianError::InvalidGraph(format!(
                "{} local fields for {} vertices",
                self.local_fields.len(),
                self.vertex_count
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if !(e.j < e.k && e.k < self.vertex_count) {
                return Err(HamiltonianError::InvalidGraph(format!(
                    "edge ({}, {}) must satisfy j < k < {}",
                    e.j, e.k, self.vertex_count
                )));
            }
            if !seen.insert((e.j, e.k)) {
                return Err(HamiltonianError::InvalidGraph(format!("duplicate edge ({}, {})", e.j, e.k)));
            }
            if !e.weight.is_finite() {
                return Err(HamiltonianError::InvalidGraph(format!("edge ({}, {}) weight not finite", e.j, e.k)));
            }
        }
        if self.local_fields.iter().any(|h| !h.is_finite()) {
            return Err(HamiltonianError::InvalidGraph("non-finite local field".into()));
        }
        Ok(())
    }
}

/// Vertex fields of the three published 4-vertex graph instances (edges unpublished).
pub const GRAPH_FIELD_PRESETS: [(&str, [f64; 4]); 3] = [
    ("a", [0.084, 0.026, 0.403, 0.379]),
    ("b", [0.403, 0.379, 0.0528, 0.805]),
    ("c", [0.379, 0.0528, 0.805, 0.379]),
];

/// Open-boundary transverse-field Ising chain `-J sum Z_i Z_{i+1} - h sum Y_i`.
pub fn build_tfim(n: usize, coupling: f64, field: f64) -> Result<HamiltonianSpec, HamiltonianError> {
    if n == 0 {
        return Err(HamiltonianError::InvalidSize("TFIM needs at least one spin".into()));
    }
    let mut terms = Vec::with_capacity(2 * n - 1);
    for i in 0..n.saturating_sub(1) {
        terms.push(PauliString::sites(-coupling, n, &[(i, Pauli::Z), (i + 1, Pauli::Z)]));
    }
    for i in 0..n {
        terms.push(PauliString::sites(-field, n, &[(i, Pauli::Y)]));
    }
    HamiltonianSpec::new(n, terms, format!("tfim n={n} J={coupling} h={field}"))
}

/// `sum h_i Z_i + sum w_jk Z_j Z_k` with the signs exactly as written.
pub fn build_graph_ising(graph: &GraphInstance) -> Result<HamiltonianSpec, HamiltonianError> {
    graph.validate()?;
    let n = graph.vertex_count;
    let mut terms: Vec<PauliString> = graph
        .local_fields
        .iter()
        .enumerate()
        .map(|(i, &h)| PauliString::sites(h, n, &[(i, Pauli::Z)]))
        .collect();
    terms.extend(
        graph
            .edges
            .iter()
            .map(|e| PauliString::sites(e.weight, n, &[(e.j, Pauli::Z), (e.k, Pauli::Z)])),
    );
    HamiltonianSpec::new(n, terms, format!("graph n={n} edges={}", graph.edges.len()))
}

pub fn to_matrix(spec: &HamiltonianSpec) -> ComplexMatrix {
    let dim = spec.dim();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for term in &spec.terms {
        for col in 0..dim {
            let (row, phase) = term.act_on_basis(col);
            m[(row, col)] += phase * term.coefficient;
        }
    }
    m
}

/// Exact `E_max - E_min`.
pub fn spectral_width(spec: &HamiltonianSpec) -> Result<f64, HamiltonianError> {
    let eig = linalg::hermitian_eig(&to_matrix(spec))?;
    Ok(eig.eigenvalues.last().unwrap() - eig.eigenvalues[0])
}

/// Spectral norm `max |E|`.
pub fn operator_norm(spec: &HamiltonianSpec) -> Result<f64, HamiltonianError> {
    Ok(linalg::hermitian_norm(&to_matrix(spec))?)
}

fn boltzmann_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `exp(-beta H) / Tr exp(-beta H)`, ground energy shifted to zero before exponentiation.
pub fn thermal_state(spec: &HamiltonianSpec, beta: f64) -> Result<ComplexMatrix, HamiltonianError> {
    if !(beta >= 0.0) {
        return Err(HamiltonianError::InvalidSize(format!("beta must be >= 0, got {beta}")));
    }
    let eig = linalg::hermitian_eig(&to_matrix(spec))?;
    let weights = boltzmann_weights(&eig.eigenvalues, beta);
    let mut rho = ComplexMatrix::zeros(spec.dim(), spec.dim());
    for (j, &w) in weights.iter().enumerate() {
        let v = eig.eigenvectors.column(j);
        rho += (v * v.adjoint()) * Complex64::new(w, 0.0);
    }
    Ok(rho)
}

/// Boltzmann distribution over computational basis states of a Z-only Hamiltonian.
pub fn gibbs_distribution(spec: &HamiltonianSpec, beta: f64) -> Result<Vec<f64>, HamiltonianError> {
    if let Some(term) = spec.terms.iter().position(|t| !t.is_diagonal()) {
        return Err(HamiltonianError::NonDiagonalHamiltonian { term });
    }
    if !(beta >= 0.0) {
        return Err(HamiltonianError::InvalidSize(format!("beta must be >= 0, got {beta}")));
    }
    let energies: Vec<f64> = (0..spec.dim())
        .map(|i| {
            spec.terms
                .iter()
                .map(|t| t.coefficient * t.act_on_basis(i).1.re)
                .sum()
        })
        .collect();
    Ok(boltzmann_weights(&energies, beta))
}
