//! Spectral-combing schedule: the ancilla frequency sweep, ancilla thermal
//! occupations, parameter-hierarchy checks and Trotter-count estimates.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ratio a "much less than" relation must satisfy.
pub const DEFAULT_HIERARCHY_RATIO: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
    #[error("period index {k} out of range for {n_cycle} periods per cycle")]
    IndexOutOfRange { k: usize, n_cycle: usize },
    #[error("Trotter tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CombKind {
    /// `f(t) = sin^2(pi t / T_cycle)`
    #[default]
    SinSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// System-ancilla coupling.
    pub g: f64,
    /// Target inverse temperature.
    pub beta: f64,
    /// Comb amplitude.
    pub omega_m: f64,
    pub n_trotter: usize,
    pub n_cycle: usize,
    pub comb_kind: CombKind,
    /// `ancilla_map[m]` is the principal qubit ancilla `m` couples to.
    pub ancilla_map: Vec<usize>,
}

impl ProtocolConfig {
    /// One ancilla per principal qubit, ancilla `m` on qubit `m`.
    pub fn one_to_one(n_s: usize, g: f64, beta: f64, omega_m: f64, n_trotter: usize, n_cycle: usize) -> Self {
        Self {
            g,
            beta,
            omega_m,
            n_trotter,
            n_cycle,
            comb_kind: CombKind::SinSquared,
            ancilla_map: (0..n_s).collect(),
        }
    }

    pub fn ancilla_count(&self) -> usize {
        self.ancilla_map.len()
    }

    /// Interaction period `T_g = pi / g`.
    pub fn t_g(&self) -> f64 {
        PI / self.g
    }

    pub fn t_cycle(&self) -> f64 {
        self.t_g() * self.n_cycle as f64
    }

    /// Trotter step `T_g / N_T`.
    pub fn dt(&self) -> f64 {
        self.t_g() / self.n_trotter as f64
    }

    pub fn validate(&self, n_s: usize) -> Result<(), ScheduleError> {
        let bad = |m: String| Err(ScheduleError::InvalidConfig(m));
        if !(self.g > 0.0 && self.g.is_finite()) {
            return bad(format!("g must be positive and finite, got {}", self.g));
        }
        if !(self.beta >= 0.0) || self.beta.is_nan() {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.omega_m >= 0.0 && self.omega_m.is_finite()) {
            return bad(format!("omega_m must be >= 0 and finite, got {}", self.omega_m));
        }
        if self.n_trotter == 0 {
            return bad("n_trotter must be >= 1".into());
        }
        if self.n_cycle == 0 {
            return bad("n_cycle must be >= 1".into());
        }
        if let Some(&q) = self.ancilla_map.iter().find(|&&q| q >= n_s) {
            return bad(format!("ancilla mapped to principal qubit {q}, system has {n_s}"));
        }
        if !(self.t_cycle().is_finite() && self.t_cycle() > 0.0) {
            return bad("T_cycle is not finite".into());
        }
        Ok(())
    }
}

/// Ancilla frequency `Omega(t_k)` held over period `k` (sampled at `t_k = k T_g`).
pub fn comb_value(cfg: &ProtocolConfig, k: usize) -> Result<f64, ScheduleError> {
    if k >= cfg.n_cycle {
        return Err(ScheduleError::IndexOutOfRange { k, n_cycle: cfg.n_cycle });
    }
    match cfg.comb_kind {
        CombKind::SinSquared => {
            // sin^2 is symmetric about the midpoint; fold so both halves round identically.
            let folded = k.min(cfg.n_cycle - k);
            let s = (PI * folded as f64 / cfg.n_cycle as f64).sin();
            Ok(cfg.omega_m * s * s)
        }
    }
}

/// Thermal ground occupation of an ancilla with splitting `omega`: `1 / (1 + e^{-beta omega})`.
pub fn ground_probability(omega: f64, beta: f64) -> f64 {
    let x = beta * omega;
    if x == 0.0 {
        return 0.5;
    }
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    /// `max |dOmega/dt| = pi omega_m / T_cycle`.
    pub max_comb_rate: f64,
    pub g: f64,
    pub h_s_norm: f64,
    /// `max_comb_rate / g`.
    pub rate_ratio: f64,
    /// `g / ||H_s||`.
    pub coupling_ratio: f64,
    pub threshold: f64,
    pub rate_flagged: bool,
    pub coupling_flagged: bool,
}

impl HierarchyReport {
    pub fn passes(&self) -> bool {
        !self.rate_flagged && !self.coupling_flagged
    }
}

impl fmt::Display for HierarchyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |flag: bool| if flag { "WARN" } else { "ok" };
        writeln!(
            f,
            "hierarchy |dOmega/dt|max << g: {:.4e} / {:.4e} = {:.4e} (need <= {:.4e}) [{}]",
            self.max_comb_rate,
            self.g,
            self.rate_ratio,
            1.0 / self.threshold,
            mark(self.rate_flagged)
        )?;
        write!(
            f,
            "hierarchy g << ||H_s||: {:.4e} / {:.4e} = {:.4e} (need <= {:.4e}) [{}]",
            self.g,
            self.h_s_norm,
            self.coupling_ratio,
            1.0 / self.threshold,
            mark(self.coupling_flagged)
        )
    }
}

/// Checks `max|dOmega/dt| << g << ||H_s||`, each with ratio `threshold`. Never fails.
pub fn validate_hierarchy(cfg: &ProtocolConfig, h_s_norm: f64, threshold: f64) -> HierarchyReport {
    let max_comb_rate = match cfg.comb_kind {
        CombKind::SinSquared => PI * cfg.omega_m / cfg.t_cycle(),
    };
    let rate_ratio = max_comb_rate / cfg.g;
    let coupling_ratio = if h_s_norm > 0.0 { cfg.g / h_s_norm } else { f64::INFINITY };
    HierarchyReport {
        max_comb_rate,
        g: cfg.g,
        h_s_norm,
        rate_ratio,
        coupling_ratio,
        threshold,
        rate_flagged: !(rate_ratio * threshold <= 1.0),
        coupling_flagged: !(coupling_ratio * threshold <= 1.0),
    }
}

/// `ceil((3 t_g Lambda)^2 / epsilon)`, at least 1.
pub fn suggest_trotter_steps(t_g: f64, lambda_max: f64, epsilon: f64) -> Result<usize, ScheduleError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ScheduleError::InvalidTolerance(epsilon));
    }
    let x = 3.0 * t_g * lambda_max;
    let steps = (x * x / epsilon).ceil();
    Ok((steps as usize).max(1))
}
