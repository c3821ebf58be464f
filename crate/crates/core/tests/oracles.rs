//! Library results checked against the independent reference computations in `common`.

mod common;

use common::{c, TestRng, M};
use num_complex::Complex64;
use qmcmc::channel;
use qmcmc::experiments::{self, ExperimentPlan, GraphSource};
use qmcmc::hamiltonians::{self, Edge, GraphInstance};
use qmcmc::linalg;
use qmcmc::observables;
use qmcmc::schedule::ProtocolConfig;

fn max_abs(a: &M) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Explicit TFIM matrix built from Kronecker products.
fn tfim_oracle(n: usize, j: f64, h: f64) -> M {
    let d = 1 << n;
    let mut out = M::zeros(d, d);
    for q in 0..n.saturating_sub(1) {
        out -= common::site(&common::z(), q, n) * common::site(&common::z(), q + 1, n) * c(j, 0.);
    }
    for q in 0..n {
        out -= common::site(&common::y(), q, n) * c(h, 0.);
    }
    out
}

fn magnetization_oracle(rho: &M, n: usize) -> f64 {
    let mut my = M::zeros(1 << n, 1 << n);
    for q in 0..n {
        my += common::site(&common::y(), q, n);
    }
    let v: Complex64 = (rho * my).diagonal().iter().sum();
    v.re / n as f64
}

#[test]
fn tfim_matrix_matches_kronecker_construction() {
    for n in 1..=4 {
        for &(j, h) in &[(1.0, 1.0), (0.7, 2.3), (1.0, 0.0)] {
            let spec = hamiltonians::build_tfim(n, j, h).unwrap();
            assert!(max_abs(&(hamiltonians::to_matrix(&spec) - tfim_oracle(n, j, h))) < 1e-14);
        }
    }
}

#[test]
fn tfim_spectrum_matches_characteristic_polynomial() {
    // Two sites at h/J = 0.8 have four simple levels, which the bracketing oracle needs.
    let spec = hamiltonians::build_tfim(2, 1.0, 0.8).unwrap();
    let roots = common::char_poly_roots(&tfim_oracle(2, 1.0, 0.8));
    let eig = linalg::hermitian_eig(&hamiltonians::to_matrix(&spec)).unwrap();
    assert_eq!(roots.len(), 4);
    for (r, e) in roots.iter().zip(&eig.eigenvalues) {
        assert!((r - e).abs() < 1e-9, "{r} vs {e}");
    }
    let width = hamiltonians::spectral_width(&spec).unwrap();
    assert!((width - (roots[3] - roots[0])).abs() < 1e-9);
}

#[test]
fn thermal_state_matches_series() {
    for &beta in &[0.1, 1.0, 3.0] {
        for n in 1..=3 {
            let spec = hamiltonians::build_tfim(n, 1.0, 1.0).unwrap();
            let got = hamiltonians::thermal_state(&spec, beta).unwrap();
            let want = common::series_thermal(&tfim_oracle(n, 1.0, 1.0), beta);
            assert!(max_abs(&(got - &want)) < 1e-10, "beta {beta}, n {n}");
        }
    }
}

#[test]
fn magnetization_matches_series() {
    for &beta in &[0.1, 1.0, 10.0] {
        let spec = hamiltonians::build_tfim(2, 1.0, 1.0).unwrap();
        let thermal = hamiltonians::thermal_state(&spec, beta).unwrap();
        let got = observables::transverse_magnetization(&thermal, 2).unwrap();
        let want = magnetization_oracle(&common::series_thermal(&tfim_oracle(2, 1.0, 1.0), beta), 2);
        assert!((got - want).abs() < 1e-10, "beta {beta}: {got} vs {want}");
    }
}

#[test]
fn gibbs_distribution_is_thermal_diagonal() {
    let graph = GraphInstance {
        vertex_count: 3,
        local_fields: vec![0.3, -0.2, 0.5],
        edges: vec![Edge { j: 0, k: 1, weight: 0.7 }, Edge { j: 1, k: 2, weight: -0.4 }],
    };
    let spec = hamiltonians::build_graph_ising(&graph).unwrap();
    let h = hamiltonians::to_matrix(&spec);
    for &beta in &[0.0, 0.5, 4.0] {
        let p = hamiltonians::gibbs_distribution(&spec, beta).unwrap();
        let series = common::series_thermal(&h, beta);
        for (i, pi) in p.iter().enumerate() {
            assert!((pi - series[(i, i)].re).abs() < 1e-12);
        }
    }
}

#[test]
fn trotter_error_shrinks_first_order() {
    let spec = hamiltonians::build_tfim(1, 1.0, 1.0).unwrap();
    let g = 0.5;
    let omega = 1.0;
    let total = common::kron(&tfim_oracle(1, 1.0, 1.0), &common::eye(2))
        - common::site(&common::z(), 1, 2) * c(0.5 * omega, 0.)
        + common::site(&common::x(), 0, 2) * common::site(&common::x(), 1, 2) * c(g, 0.);
    let t_g = std::f64::consts::PI / g;
    let exact = common::taylor_expm(&(total * c(0., -t_g)));
    let err = |n_t: usize| {
        let cfg = ProtocolConfig::one_to_one(1, g, 1.0, 2.0, n_t, 4);
        (channel::build_period_unitary(&spec, &cfg, omega).unwrap() - &exact).singular_values().max()
    };
    for n_t in [100, 200, 400] {
        let ratio = err(n_t) / err(2 * n_t);
        assert!((1.5..=2.5).contains(&ratio), "N_T {n_t}: ratio {ratio}");
    }
}

/// `Tr_anc[W (rho (x) diag(prep)) W^dagger]` over the composite register.
fn brute_period(w: &M, prep: &[f64], rho: &M, n_s: usize, m: usize) -> M {
    let a = 1 << m;
    let sigma = M::from_fn(a, a, |i, j| if i == j { c(prep[i], 0.) } else { c(0., 0.) });
    let full = w * common::kron(rho, &sigma) * w.adjoint();
    common::trace_out_trailing(&full, n_s, m)
}

#[test]
fn period_channel_matches_partial_trace() {
    let mut rng = TestRng::new(11);
    for &(n_s, m) in &[(1, 1), (1, 2), (2, 1)] {
        let w = rng.unitary(1 << (n_s + m));
        let prep = rng.distribution(1 << m);
        let kraus = channel::build_period_channel(&w, &prep, n_s, m).unwrap();
        let sup = channel::to_superoperator(&kraus);
        for _ in 0..20 {
            let rho = rng.density(1 << n_s);
            let want = brute_period(&w, &prep, &rho, n_s, m);
            assert!(max_abs(&(kraus.apply(&rho) - &want)) < 1e-10);
            assert!(max_abs(&(sup.apply(&rho) - &want)) < 1e-10);
        }
    }
}

#[test]
fn thermal_ancilla_preparation_matches_boltzmann_weights() {
    let (omega, beta) = (1.3, 0.8);
    let prep = channel::ancilla_preparation(omega, beta, 2);
    // Ancilla Hamiltonian -(Omega/2) Z: |0> has energy -Omega/2.
    let w0 = (0.5 * beta * omega).exp();
    let w1 = (-0.5 * beta * omega).exp();
    let z = (w0 + w1) * (w0 + w1);
    let want = [w0 * w0 / z, w0 * w1 / z, w1 * w0 / z, w1 * w1 / z];
    for (p, q) in prep.iter().zip(want) {
        assert!((p - q).abs() < 1e-14);
    }
}

#[test]
fn cycle_map_matches_composite_simulation() {
    let mut rng = TestRng::new(4);
    let cases = [
        (hamiltonians::build_tfim(1, 1.0, 0.6).unwrap(), ProtocolConfig::one_to_one(1, 0.2, 2.0, 1.2, 30, 6)),
        (hamiltonians::build_tfim(2, 1.0, 1.0).unwrap(), ProtocolConfig::one_to_one(2, 0.1, 1.0, 3.0, 20, 4)),
        (
            hamiltonians::build_tfim(2, 1.0, 0.5).unwrap(),
            ProtocolConfig { ancilla_map: vec![1], ..ProtocolConfig::one_to_one(2, 0.1, 0.7, 2.5, 20, 5) },
        ),
    ];
    for (spec, cfg) in &cases {
        let map = channel::build_cycle_map(spec, cfg).unwrap();
        for _ in 0..5 {
            let rho = rng.density(spec.dim());
            let want = common::composite_cycle(spec, cfg, &rho);
            assert!(common::trace_distance(&map.superoperator.apply(&rho), &want) < 1e-9);
        }
    }
}

#[test]
fn steady_state_matches_repeated_application() {
    let spec = hamiltonians::build_tfim(2, 1.0, 1.0).unwrap();
    let width = hamiltonians::spectral_width(&spec).unwrap();
    let cfg = ProtocolConfig::one_to_one(2, 0.005, 10.0, width, 5000, 500);
    let map = channel::build_cycle_map(&spec, &cfg).unwrap();
    let ss = channel::steady_state(&map).unwrap();
    let mut rho = common::eye(4) * c(0.25, 0.);
    for _ in 0..1000 {
        rho = map.superoperator.apply(&rho);
    }
    assert!(common::trace_distance(&ss.rho, &rho) < 1e-6);
    let gap = channel::spectral_gap(&map).unwrap();
    assert!(gap.unique && gap.gap > 0.0);
}

/// Fixed point of the composite-space cycle, iterated from the maximally mixed state.
fn composite_fixed_point(spec: &hamiltonians::HamiltonianSpec, cfg: &ProtocolConfig) -> M {
    let d = spec.dim();
    let mut rho = common::eye(d) * c(1.0 / d as f64, 0.);
    for _ in 0..2000 {
        let next = common::composite_cycle(spec, cfg, &rho);
        let delta = max_abs(&(&next - &rho));
        rho = next;
        if delta < 1e-15 {
            break;
        }
    }
    rho
}

#[test]
fn graph_experiment_tvd_matches_composite_fixed_point() {
    let graph = GraphInstance {
        vertex_count: 2,
        local_fields: vec![0.4, -0.25],
        edges: vec![Edge { j: 0, k: 1, weight: 0.6 }],
    };
    let plan = ExperimentPlan {
        graph: GraphSource::Fixed(graph.clone()),
        betas: vec![1.0],
        g: 0.1,
        n_trotter: 40,
        n_cycle: 10,
        ..ExperimentPlan::graph()
    };
    let rows = experiments::run_graph_sampling(&plan).unwrap();
    let row = &rows[0];
    assert!(row.succeeded(), "{:?}", row.error);

    let spec = hamiltonians::build_graph_ising(&graph).unwrap();
    let width = hamiltonians::spectral_width(&spec).unwrap();
    let cfg = ProtocolConfig::one_to_one(2, 0.1, 1.0, width, 40, 10);
    let rho = composite_fixed_point(&spec, &cfg);
    let h = hamiltonians::to_matrix(&spec);
    let gibbs = common::series_thermal(&h, 1.0);
    let tvd: f64 = 0.5 * (0..4).map(|i| (rho[(i, i)].re - gibbs[(i, i)].re).abs()).sum::<f64>();
    assert!((row.tvd.unwrap() - tvd).abs() < 1e-8, "{:?} vs {tvd}", row.tvd);
}

#[test]
fn magnetization_experiment_reports_series_value() {
    let plan = ExperimentPlan {
        betas: vec![0.5, 2.0],
        fields_hj: vec![0.5, 1.5],
        n_trotter: 200,
        n_cycle: 40,
        g: 0.05,
        ..ExperimentPlan::magnetization()
    };
    let rows = experiments::run_magnetization_sweep(&plan).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let h = tfim_oracle(r.n_s, r.coupling_j, r.field_h.unwrap());
        let want = magnetization_oracle(&common::series_thermal(&h, r.beta), r.n_s);
        assert!((r.magnetization_exact.unwrap() - want).abs() < 1e-10);
        let err = (r.magnetization_algorithm.unwrap() - want).abs();
        assert!((r.magnetization_error.unwrap() - err).abs() < 1e-12);
    }
}
