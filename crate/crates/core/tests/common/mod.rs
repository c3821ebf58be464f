//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the eigensolvers, exponentials, Kraus construction or
//! superoperator code of the crate under test; matrices are combined with plain
//! nalgebra arithmetic.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qmcmc::hamiltonians::{self, HamiltonianSpec};
use qmcmc::schedule::ProtocolConfig;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn eye(n: usize) -> M {
    M::identity(n, n)
}

pub fn kron(a: &M, b: &M) -> M {
    let (br, bc) = b.shape();
    M::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn x() -> M {
    M::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn y() -> M {
    M::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn z() -> M {
    M::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Single-site operator `op` on qubit `q` of `n`.
pub fn site(op: &M, q: usize, n: usize) -> M {
    let mut out = eye(1);
    for i in 0..n {
        let factor = if i == q { op.clone() } else { eye(2) };
        out = kron(&out, &factor);
    }
    out
}

fn one_norm(a: &M) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scaled-and-squared Taylor series for `exp(a)`.
pub fn taylor_expm(a: &M) -> M {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut term = eye(n);
    let mut sum = eye(n);
    for k in 1..40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-beta H) / Tr` via the Taylor series.
pub fn series_thermal(h: &M, beta: f64) -> M {
    let e = taylor_expm(&(h * Complex64::new(-beta, 0.0)));
    let tr: Complex64 = e.diagonal().iter().sum();
    e / tr
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &M) -> Complex64 {
    let mut m = a.clone();
    let n = m.nrows();
    let mut d = c(1., 0.);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm())).unwrap();
        if m[(piv, col)].norm() == 0.0 {
            return c(0., 0.);
        }
        if piv != col {
            m.swap_rows(piv, col);
            d = -d;
        }
        d *= m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / m[(col, col)];
            for k in col..n {
                let v = m[(col, k)];
                m[(r, k)] -= f * v;
            }
        }
    }
    d
}

/// Real roots of `det(H - lambda I)` for Hermitian `H` with a simple spectrum,
/// found by bracketing sign changes on a fine grid and bisecting.
pub fn char_poly_roots(h: &M) -> Vec<f64> {
    let n = h.nrows();
    let bound = (0..n)
        .map(|i| h.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let p = |lam: f64| det(&(h - eye(n) * c(lam, 0.))).re;
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev = p(prev_x);
    for i in 1..=steps {
        let xk = -bound + 2.0 * bound * i as f64 / steps as f64;
        let v = p(xk);
        if prev == 0.0 {
            roots.push(prev_x);
        } else if prev.signum() != v.signum() && v != 0.0 {
            let (mut lo, mut hi, mut flo) = (prev_x, xk, prev);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = p(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = xk;
        prev = v;
    }
    roots
}

/// Partial trace over the trailing `m` qubits of an `(n_s + m)`-qubit operator.
pub fn trace_out_trailing(rho: &M, n_s: usize, m: usize) -> M {
    let d = 1usize << n_s;
    let a = 1usize << m;
    M::from_fn(d, d, |i, j| (0..a).map(|b| rho[(i * a + b, j * a + b)]).sum())
}

/// Composite-register reference for one comb cycle: explicit reset `R`, explicit
/// bit-flip mixture `F_t`, and a Trotterized `W_t` assembled from full-space
/// exponentials, then the ancillas are traced out.
pub fn composite_cycle(spec: &HamiltonianSpec, cfg: &ProtocolConfig, rho_s: &M) -> M {
    let n_s = spec.qubit_count;
    let m = cfg.ancilla_map.len();
    let n = n_s + m;
    let a = 1usize << m;
    let dt = std::f64::consts::PI / cfg.g / cfg.n_trotter as f64;

    let hs = kron(&hamiltonians::to_matrix(spec), &eye(a));
    let mut hi = M::zeros(1 << n, 1 << n);
    let mut zsum = M::zeros(1 << n, 1 << n);
    for (anc, &p) in cfg.ancilla_map.iter().enumerate() {
        hi += site(&x(), p, n) * site(&x(), n_s + anc, n) * c(cfg.g, 0.);
        zsum += site(&z(), n_s + anc, n);
    }
    let u_int = taylor_expm(&(&hi * c(0., -dt)));
    let u_sys = taylor_expm(&(&hs * c(0., -dt)));

    let mut zero_anc = M::zeros(a, a);
    zero_anc[(0, 0)] = c(1., 0.);
    let mut rho = kron(rho_s, &zero_anc);

    for k in 0..cfg.n_cycle {
        let s = (std::f64::consts::PI * k as f64 / cfg.n_cycle as f64).sin();
        let omega = cfg.omega_m * s * s;
        let up = (0.5 * cfg.beta * omega).exp();
        let down = (-0.5 * cfg.beta * omega).exp();
        let p0 = up / (up + down);

        // R: every ancilla basis state |i> is sent to |0>.
        let mut reset = M::zeros(1 << n, 1 << n);
        for i in 0..a {
            let mut op = M::zeros(a, a);
            op[(0, i)] = c(1., 0.);
            let big = kron(&eye(1 << n_s), &op);
            reset += &big * &rho * big.adjoint();
        }
        rho = reset;

        // F_t: independent bit flips with probability 1 - p0.
        for anc in 0..m {
            let xm = site(&x(), n_s + anc, n);
            rho = &rho * c(p0, 0.) + &xm * &rho * &xm * c(1.0 - p0, 0.);
        }

        let u_anc = taylor_expm(&(&zsum * c(0., 0.5 * omega * dt)));
        let step = &u_int * &u_sys * &u_anc;
        let mut w = eye(1 << n);
        for _ in 0..cfg.n_trotter {
            w = &step * w;
        }
        rho = &w * &rho * w.adjoint();
    }
    trace_out_trailing(&rho, n_s, m)
}

/// Small deterministic generator for test inputs (SplitMix64 stream).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn ginibre(&mut self, rows: usize, cols: usize) -> M {
        M::from_fn(rows, cols, |_, _| c(self.normal(), self.normal()))
    }

    /// Random full-rank density matrix `G G^dagger / Tr`.
    pub fn density(&mut self, d: usize) -> M {
        let g = self.ginibre(d, d);
        let r = &g * g.adjoint();
        let tr: Complex64 = r.diagonal().iter().sum();
        r / tr
    }

    /// Haar-ish unitary from the QR factorization of a Ginibre matrix.
    pub fn unitary(&mut self, d: usize) -> M {
        self.ginibre(d, d).qr().q()
    }

    pub fn distribution(&mut self, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| self.uniform() + 1e-3).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }
}

/// Trace distance of Hermitian matrices through the singular values of their difference.
pub fn trace_distance(a: &M, b: &M) -> f64 {
    0.5 * (a - b).singular_values().iter().sum::<f64>()
}
