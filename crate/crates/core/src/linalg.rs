//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`, which is column-major. Qubit `q`
//! of an `n`-qubit register is bit `n - 1 - q` of a basis index, so qubit 0 is the
//! most significant and `kron(a, b)` places `a` on the lower-numbered qubits.
//!
//! Superoperators use column-stacking vectorization: `vec(rho)` is the
//! column-major entry slice of `rho`, and the channel `rho -> A rho B^dagger` is the
//! matrix `conj(B) (x) A`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Dimension above which `dominant_eigs` switches from the dense Schur solver to
/// power iteration with deflation.
pub const DENSE_EIG_LIMIT: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 100_000;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (||h - h^dagger||_F = {asymmetry:.3e})")]
    NonHermitianInput { asymmetry: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigensolver did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(diag) V^dagger` for a scalar function of the eigenvalues.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fj);
        }
        matmul(&scaled, &v.adjoint())
    }
}

/// One eigenpair of a general square matrix; `vector` has unit 2-norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: ComplexVector,
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Matrix product through a blocked complex GEMM kernel.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = ComplexMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    // SAFETY: Complex64 is repr(C) with layout [re, im], matching the kernel's
    // element type. Strides describe nalgebra's contiguous column-major storage
    // and the output buffer does not alias either input.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

/// `m^power` by repeated squaring.
pub fn matrix_power(m: &ComplexMatrix, mut power: usize) -> ComplexMatrix {
    assert!(m.is_square());
    let mut result: Option<ComplexMatrix> = None;
    let mut base = m.clone();
    while power > 0 {
        if power & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => matmul(&base, &r),
            });
        }
        power >>= 1;
        if power > 0 {
            base = matmul(&base, &base);
        }
    }
    result.unwrap_or_else(|| identity(m.nrows()))
}

pub fn is_hermitian(h: &ComplexMatrix) -> Result<(), LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let asymmetry = (h - h.adjoint()).norm();
    if asymmetry > HERMITIAN_TOL * h.norm() {
        return Err(LinalgError::NonHermitianInput { asymmetry });
    }
    Ok(())
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    is_hermitian(h)?;
    let n = h.nrows();
    // Exact symmetrization removes rounding-level asymmetry the solver would ignore anyway.
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(LinalgError::ConvergenceFailure { iterations: 0 })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, j| eig.eigenvectors[(r, order[j])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(c * h)` for Hermitian `h`.
pub fn expm_hermitian(h: &ComplexMatrix, scale: Complex64) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig(h)?;
    Ok(eig.reconstruct_with(|lam| (scale * lam).exp()))
}

/// Reduced matrix on the qubits in `keep` (kept in ascending order).
pub fn partial_trace(
    rho: &ComplexMatrix,
    qubit_count: usize,
    keep: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    let dim = 1usize << qubit_count;
    if rho.shape() != (dim, dim) {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} matrix is not a {qubit_count}-qubit operator",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&q| q >= qubit_count) {
        return Err(LinalgError::DimensionMismatch(format!(
            "kept qubits {keep:?} out of range for {qubit_count} qubits"
        )));
    }
    let traced: Vec<usize> = (0..qubit_count).filter(|q| !kept.contains(q)).collect();
    let bit = |q: usize| 1usize << (qubit_count - 1 - q);
    let spread = |local: usize, qubits: &[usize]| -> usize {
        let k = qubits.len();
        qubits
            .iter()
            .enumerate()
            .filter(|(j, _)| (local >> (k - 1 - j)) & 1 == 1)
            .map(|(_, &q)| bit(q))
            .sum()
    };
    let kd = 1usize << kept.len();
    let td = 1usize << traced.len();
    let kept_idx: Vec<usize> = (0..kd).map(|l| spread(l, &kept)).collect();
    let traced_idx: Vec<usize> = (0..td).map(|l| spread(l, &traced)).collect();
    Ok(ComplexMatrix::from_fn(kd, kd, |a, b| {
        traced_idx
            .iter()
            .map(|&t| rho[(kept_idx[a] | t, kept_idx[b] | t)])
            .sum()
    }))
}

/// Offsets of the `2^k` basis states spanned by `targets` within an `n`-qubit index.
fn local_offsets(n_qubits: usize, targets: &[usize]) -> (Vec<usize>, usize) {
    let k = targets.len();
    let mut mask = 0usize;
    let offsets = (0..1usize << k)
        .map(|l| {
            targets
                .iter()
                .enumerate()
                .filter(|(j, _)| (l >> (k - 1 - j)) & 1 == 1)
                .map(|(_, &q)| 1usize << (n_qubits - 1 - q))
                .sum()
        })
        .collect();
    for &q in targets {
        mask |= 1usize << (n_qubits - 1 - q);
    }
    (offsets, mask)
}

/// Applies `gate` on `targets` (first target is the gate's most significant qubit)
/// to a single `2^n` amplitude vector in place, without forming `gate (x) I`.
pub fn apply_local(amps: &mut [Complex64], n_qubits: usize, targets: &[usize], gate: &ComplexMatrix) {
    let local_dim = 1usize << targets.len();
    assert_eq!(gate.shape(), (local_dim, local_dim));
    assert_eq!(amps.len(), 1usize << n_qubits);
    let (offsets, mask) = local_offsets(n_qubits, targets);
    let mut buf = vec![Complex64::default(); local_dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (slot, &off) in buf.iter_mut().zip(&offsets) {
            *slot = amps[base | off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            amps[base | off] = (0..local_dim).map(|s| gate[(r, s)] * buf[s]).sum();
        }
    }
}

/// Left-multiplies every column of `op` by the local `gate`.
pub fn apply_local_to_columns(op: &mut ComplexMatrix, n_qubits: usize, targets: &[usize], gate: &ComplexMatrix) {
    let rows = op.nrows();
    for col in op.as_mut_slice().chunks_exact_mut(rows) {
        apply_local(col, n_qubits, targets, gate);
    }
}

fn sort_by_modulus_desc(values: &mut [(usize, Complex64)]) {
    values.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then(a.0.cmp(&b.0)));
}

/// All eigenvalues of a general square matrix, sorted by descending modulus.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>, LinalgError> {
    let (_, t) = schur(m)?;
    let mut vals: Vec<(usize, Complex64)> = (0..t.nrows()).map(|i| (i, t[(i, i)])).collect();
    sort_by_modulus_desc(&mut vals);
    Ok(vals.into_iter().map(|(_, v)| v).collect())
}

fn schur(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix), LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let max_iter = 100 * m.nrows().max(10);
    // QR sweeps can stall on near-scalar matrices at machine-epsilon deflation;
    // slightly looser thresholds still leave eigenvalue errors near 1e-13 relative.
    [1.0, 16.0, 256.0]
        .into_iter()
        .find_map(|f| Schur::try_new(m.clone(), f * f64::EPSILON, max_iter))
        .map(|s| s.unpack())
        .ok_or(LinalgError::ConvergenceFailure { iterations: max_iter })
}

/// The `k` eigenpairs of largest modulus, sorted by descending `|lambda|`.
pub fn dominant_eigs(m: &ComplexMatrix, k: usize) -> Result<Vec<EigenPair>, LinalgError> {
    dominant_eigs_with_limit(m, k, DENSE_EIG_LIMIT)
}

/// As [`dominant_eigs`], with an explicit dense-solver dimension limit.
pub fn dominant_eigs_with_limit(
    m: &ComplexMatrix,
    k: usize,
    dense_limit: usize,
) -> Result<Vec<EigenPair>, LinalgError> {
    if !m.is_square() || k > m.nrows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "requested {k} eigenpairs of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() <= dense_limit {
        dense_dominant_eigs(m, k)
    } else {
        power_dominant_eigs(m, k)
    }
}

fn residual(m: &ComplexMatrix, pair: &EigenPair) -> f64 {
    (m * &pair.vector - &pair.vector * pair.value).norm()
}

fn dense_dominant_eigs(m: &ComplexMatrix, k: usize) -> Result<Vec<EigenPair>, LinalgError> {
    let n = m.nrows();
    let (q, t) = schur(m)?;
    let mut order: Vec<(usize, Complex64)> = (0..n).map(|i| (i, t[(i, i)])).collect();
    sort_by_modulus_desc(&mut order);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let smin = (f64::EPSILON * t.norm()).max(f64::MIN_POSITIVE);

    order
        .into_iter()
        .take(k)
        .map(|(idx, value)| {
            // Back substitution on the triangular factor: (T - value I) y = 0 with y[idx] = 1.
            let mut y = ComplexVector::zeros(n);
            y[idx] = Complex64::new(1.0, 0.0);
            for j in (0..idx).rev() {
                let rhs: Complex64 = ((j + 1)..=idx).map(|l| t[(j, l)] * y[l]).sum();
                let mut denom = t[(j, j)] - value;
                if denom.norm() < smin {
                    denom = Complex64::new(smin, 0.0);
                }
                y[j] = -rhs / denom;
            }
            let mut vector = &q * y;
            let norm = vector.norm();
            vector.unscale_mut(norm);
            let mut pair = EigenPair { value, vector };
            if residual(m, &pair) >= RESIDUAL_TOL * scale {
                refine(m, &mut pair);
            }
            if residual(m, &pair) >= RESIDUAL_TOL * scale {
                return Err(LinalgError::ConvergenceFailure { iterations: 0 });
            }
            Ok(pair)
        })
        .collect()
}

/// A few steps of shifted inverse iteration on an already close eigenpair.
fn refine(m: &ComplexMatrix, pair: &mut EigenPair) {
    let n = m.nrows();
    let shift = pair.value + Complex64::new(1e-12 * m.norm().max(1.0), 0.0);
    let shifted = m - ComplexMatrix::identity(n, n) * shift;
    let lu = shifted.lu();
    for _ in 0..3 {
        let Some(mut x) = lu.solve(&pair.vector) else {
            return;
        };
        let norm = x.norm();
        if !norm.is_finite() || norm == 0.0 {
            return;
        }
        x.unscale_mut(norm);
        let mx = m * &x;
        pair.value = x.dotc(&mx);
        pair.vector = x;
    }
}

/// Power iteration with Hotelling-style deflation using left eigenvectors.
fn power_dominant_eigs(m: &ComplexMatrix, k: usize) -> Result<Vec<EigenPair>, LinalgError> {
    let n = m.nrows();
    let adj = m.adjoint();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    // (value, right vector, left vector, 1 / (w^dagger v))
    let mut found: Vec<(Complex64, ComplexVector, ComplexVector, Complex64)> = Vec::with_capacity(k);
    let mut pairs = Vec::with_capacity(k);

    let start = |salt: f64| {
        let mut v = ComplexVector::from_fn(n, |i, _| {
            Complex64::new(1.0 + salt * ((i as f64) * 0.618_034).fract(), 0.0)
        });
        let norm = v.norm();
        v.unscale_mut(norm);
        v
    };

    for index in 0..k {
        // Deflated operator: A x - sum_j lambda_j v_j (w_j^dagger x) / (w_j^dagger v_j).
        let apply = |x: &ComplexVector, adjoint: bool| -> ComplexVector {
            let mut y = if adjoint { &adj * x } else { m * x };
            for (lam, v, w, inv) in &found {
                if adjoint {
                    let coeff = v.dotc(x) * inv.conj() * lam.conj();
                    y.axpy(-coeff, w, Complex64::new(1.0, 0.0));
                } else {
                    let coeff = w.dotc(x) * inv * lam;
                    y.axpy(-coeff, v, Complex64::new(1.0, 0.0));
                }
            }
            y
        };
        let iterate = |adjoint: bool| -> Result<(Complex64, ComplexVector), LinalgError> {
            let mut v = start(0.5 + index as f64);
            for _ in 0..POWER_MAX_ITER {
                let y = apply(&v, adjoint);
                let lam = v.dotc(&y);
                if (&y - &v * lam).norm() < POWER_TOL * scale {
                    return Ok((lam, v));
                }
                let norm = y.norm();
                if norm == 0.0 {
                    return Ok((Complex64::new(0.0, 0.0), v));
                }
                v = y.unscale(norm);
            }
            Err(LinalgError::ConvergenceFailure {
                iterations: POWER_MAX_ITER,
            })
        };
        let (value, vector) = iterate(false)?;
        let (_, left) = iterate(true)?;
        let overlap = left.dotc(&vector);
        let inv = if overlap.norm() > f64::EPSILON {
            overlap.inv()
        } else {
            Complex64::new(0.0, 0.0)
        };
        found.push((value, vector.clone(), left, inv));
        pairs.push(EigenPair { value, vector });
    }
    pairs.sort_by(|a, b| b.value.norm().total_cmp(&a.value.norm()));
    Ok(pairs)
}

/// Spectral norm of a Hermitian matrix (largest absolute eigenvalue).
pub fn hermitian_norm(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    let eig = hermitian_eig(h)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Trace norm distance `0.5 ||a - b||_1` between Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, LinalgError> {
    let diff = a - b;
    let eig = hermitian_eig(&diff)?;
    Ok(0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Column-stacked `vec(rho)`.
pub fn vectorize(rho: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(rho.as_slice())
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &ComplexVector, dim: usize) -> ComplexMatrix {
    assert_eq!(v.len(), dim * dim);
    ComplexMatrix::from_column_slice(dim, dim, v.as_slice())
}
