//! Fidelity, total variation distance and transverse magnetization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonians::{self, HamiltonianSpec, Pauli, PauliString};
use crate::linalg::{self, ComplexMatrix, LinalgError};

const PSD_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-8;
const DISTRIBUTION_TOL: f64 = 1e-8;
const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a probability distribution: {0}")]
    NotADistribution(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub fidelity: f64,
    pub infidelity: f64,
    pub tvd: f64,
    pub magnetization: f64,
    pub site_magnetizations: Option<Vec<f64>>,
}

fn check_state(rho: &ComplexMatrix, name: &str) -> Result<linalg::HermitianEigen, ObservableError> {
    if !rho.is_square() {
        return Err(ObservableError::NotAState(format!("{name} is not square")));
    }
    let eig = linalg::hermitian_eig(rho)
        .map_err(|e| ObservableError::NotAState(format!("{name}: {e}")))?;
    let min = eig.eigenvalues[0];
    if min < -PSD_TOL {
        return Err(ObservableError::NotAState(format!(
            "{name} has eigenvalue {min:.3e} below -{PSD_TOL:e}"
        )));
    }
    let tr: f64 = eig.eigenvalues.iter().sum();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(ObservableError::NotAState(format!("{name} has trace {tr}")));
    }
    Ok(eig)
}

fn psd_sqrt(eig: &linalg::HermitianEigen) -> ComplexMatrix {
    eig.reconstruct_with(|v| Complex64::new(v.max(0.0).sqrt(), 0.0))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, computed as the squared
/// nuclear norm of `sqrt(rho) sqrt(sigma)`.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64, ObservableError> {
    if rho.shape() != sigma.shape() {
        return Err(ObservableError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            rho.nrows(),
            rho.ncols(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let a = psd_sqrt(&check_state(rho, "first state")?);
    let b = psd_sqrt(&check_state(sigma, "second state")?);
    let product = linalg::matmul(&a, &b);
    let nuclear: f64 = product.singular_values().iter().sum();
    Ok((nuclear * nuclear).clamp(0.0, 1.0))
}

fn check_distribution(p: &[f64], name: &str) -> Result<(), ObservableError> {
    if p.iter().any(|x| !x.is_finite() || *x < -DISTRIBUTION_TOL) {
        return Err(ObservableError::NotADistribution(format!("{name} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(ObservableError::NotADistribution(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// `0.5 sum |p_i - q_i|`.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64, ObservableError> {
    if p.len() != q.len() {
        return Err(ObservableError::DimensionMismatch(format!("lengths {} and {}", p.len(), q.len())));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * d).clamp(0.0, 1.0))
}

/// `<Y_i>` for every site.
pub fn site_magnetizations(rho: &ComplexMatrix, n_s: usize) -> Result<Vec<f64>, ObservableError> {
    let dim = 1usize << n_s;
    if rho.shape() != (dim, dim) {
        return Err(ObservableError::NotAState(format!(
            "{}x{} matrix is not a {n_s}-qubit state",
            rho.nrows(),
            rho.ncols()
        )));
    }
    (0..n_s)
        .map(|i| {
            let spec = HamiltonianSpec::new(n_s, vec![PauliString::sites(1.0, n_s, &[(i, Pauli::Y)])], "")
                .expect("single-site Y word is well formed");
            let y = hamiltonians::to_matrix(&spec);
            let value = linalg::trace(&(&y * rho));
            if value.im.abs() > IMAG_TOL {
                return Err(ObservableError::NotAState(format!(
                    "Tr(rho Y_{i}) has imaginary part {:.3e}",
                    value.im
                )));
            }
            Ok(value.re)
        })
        .collect()
}

/// Per-site average `(1/N_s) sum_i Tr(rho Y_i)`.
pub fn transverse_magnetization(rho: &ComplexMatrix, n_s: usize) -> Result<f64, ObservableError> {
    let sites = site_magnetizations(rho, n_s)?;
    Ok(sites.iter().sum::<f64>() / n_s as f64)
}

/// Computational-basis populations of a density matrix.
pub fn diagonal_distribution(rho: &ComplexMatrix) -> Vec<f64> {
    rho.diagonal().iter().map(|z| z.re.max(0.0)).collect()
}

/// All metrics of `rho` against a reference state.
pub fn metric_report(
    rho: &ComplexMatrix,
    reference: &ComplexMatrix,
    n_s: usize,
) -> Result<MetricReport, ObservableError> {
    let fid = fidelity(reference, rho)?;
    let p = normalized(diagonal_distribution(reference));
    let q = normalized(diagonal_distribution(rho));
    let sites = site_magnetizations(rho, n_s)?;
    Ok(MetricReport {
        fidelity: fid,
        infidelity: 1.0 - fid,
        tvd: tvd(&p, &q)?,
        magnetization: sites.iter().sum::<f64>() / n_s as f64,
        site_magnetizations: Some(sites),
    })
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}
