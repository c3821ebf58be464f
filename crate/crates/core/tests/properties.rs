mod common;

use common::{c, TestRng, M};
use num_complex::Complex64;
use proptest::prelude::*;
use qmcmc::channel;
use qmcmc::hamiltonians;
use qmcmc::linalg;
use qmcmc::observables;
use qmcmc::schedule::{self, ProtocolConfig};

fn max_abs(a: &M) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn min_eigenvalue(m: &M) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.);
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn random_hermitian(rng: &mut TestRng, d: usize) -> M {
    let g = rng.ginibre(d, d);
    (&g + g.adjoint()) * c(0.5, 0.)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_mixed_product(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let (a, b, cm, d) = (rng.ginibre(2, 2), rng.ginibre(3, 3), rng.ginibre(2, 2), rng.ginibre(3, 3));
        let lhs = linalg::kron(&a, &b) * linalg::kron(&cm, &d);
        let rhs = linalg::kron(&(&a * &cm), &(&b * &d));
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-10);
    }

    #[test]
    fn partial_trace_is_linear_and_trace_preserving(seed in any::<u64>(), s in -2.0f64..2.0) {
        let mut rng = TestRng::new(seed);
        let (a, b) = (rng.ginibre(8, 8), rng.ginibre(8, 8));
        for keep in [vec![0], vec![1, 2], vec![0, 2]] {
            let lhs = linalg::partial_trace(&(&a + &b * c(s, 0.)), 3, &keep).unwrap();
            let rhs = linalg::partial_trace(&a, 3, &keep).unwrap()
                + linalg::partial_trace(&b, 3, &keep).unwrap() * c(s, 0.);
            prop_assert!(max_abs(&(&lhs - rhs)) < 1e-10);
            prop_assert!((linalg::trace(&lhs) - linalg::trace(&(&a + &b * c(s, 0.)))).norm() < 1e-10);
        }
    }

    #[test]
    fn expm_of_hermitian_is_unitary(seed in any::<u64>(), t in -5.0f64..5.0) {
        let mut rng = TestRng::new(seed);
        let h = random_hermitian(&mut rng, 4);
        let u = linalg::expm_hermitian(&h, Complex64::new(0.0, -t)).unwrap();
        prop_assert!(max_abs(&(&u * u.adjoint() - common::eye(4))) < 1e-10);
        prop_assert!(max_abs(&(u - common::taylor_expm(&(h * c(0., -t))))) < 1e-9);
    }

    #[test]
    fn spectrum_invariant_under_unitary_conjugation(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let h = random_hermitian(&mut rng, 4);
        let u = rng.unitary(4);
        let a = linalg::hermitian_eig(&h).unwrap().eigenvalues;
        let b = linalg::hermitian_eig(&(&u * &h * u.adjoint())).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn thermal_eigenvalues_are_softmax(n in 1usize..4, h in 0.0f64..3.0, beta in 0.0f64..5.0) {
        let spec = hamiltonians::build_tfim(n, 1.0, h).unwrap();
        let energies = linalg::hermitian_eig(&hamiltonians::to_matrix(&spec)).unwrap().eigenvalues;
        let rho = hamiltonians::thermal_state(&spec, beta).unwrap();
        let got = linalg::hermitian_eig(&rho).unwrap().eigenvalues;
        let z: f64 = energies.iter().map(|e| (-beta * (e - energies[0])).exp()).sum();
        let mut want: Vec<f64> = energies.iter().map(|e| (-beta * (e - energies[0])).exp() / z).collect();
        want.sort_by(f64::total_cmp);
        for (x, y) in got.iter().zip(&want) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn tfim_commutes_with_global_flip(n in 1usize..5, j in -2.0f64..2.0, h in -2.0f64..2.0) {
        // The Y field and ZZ bonds are both invariant under conjugation by the product of Y.
        let hm = hamiltonians::to_matrix(&hamiltonians::build_tfim(n, j, h).unwrap());
        let mut flip = common::eye(1);
        for _ in 0..n {
            flip = common::kron(&flip, &common::y());
        }
        prop_assert!(max_abs(&(&flip * &hm - &hm * &flip)) < 1e-12);
    }

    #[test]
    fn ground_probability_monotone_and_complementary(omega in 0.0f64..20.0, d in 0.0f64..5.0, beta in 0.0f64..10.0) {
        let p = schedule::ground_probability(omega, beta);
        prop_assert!((0.5..=1.0).contains(&p));
        prop_assert!(schedule::ground_probability(omega + d, beta) >= p - 1e-15);
        prop_assert!((p + schedule::ground_probability(-omega, beta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comb_is_symmetric(n_cycle in 1usize..200, k in 0usize..200, omega_m in 0.1f64..10.0) {
        let cfg = ProtocolConfig::one_to_one(1, 0.1, 1.0, omega_m, 10, n_cycle);
        let k = k % n_cycle;
        let a = schedule::comb_value(&cfg, k).unwrap();
        let b = schedule::comb_value(&cfg, (n_cycle - k) % n_cycle).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=omega_m).contains(&a));
    }

    #[test]
    fn fidelity_symmetric_and_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let (rho, sigma, u) = (rng.density(4), rng.density(4), rng.unitary(4));
        let f = observables::fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - observables::fidelity(&sigma, &rho).unwrap()).abs() < 1e-9);
        let rot = |m: &M| &u * m * u.adjoint();
        prop_assert!((f - observables::fidelity(&rot(&rho), &rot(&sigma)).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn tvd_is_a_metric(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let (p, q, r) = (rng.distribution(8), rng.distribution(8), rng.distribution(8));
        let d = |a: &[f64], b: &[f64]| observables::tvd(a, b).unwrap();
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-15);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
        prop_assert!((0.0..=1.0).contains(&d(&p, &q)));
    }

    #[test]
    fn magnetization_bounded(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = TestRng::new(seed);
        let rho = rng.density(1 << n);
        prop_assert!(observables::transverse_magnetization(&rho, n).unwrap().abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn period_channels_are_cptp(seed in any::<u64>(), m in 1usize..3, n_s in 1usize..3) {
        let mut rng = TestRng::new(seed);
        let w = rng.unitary(1 << (n_s + m));
        let prep = rng.distribution(1 << m);
        let kraus = channel::build_period_channel(&w, &prep, n_s, m).unwrap();
        prop_assert!(kraus.completeness_deviation() < 1e-8);
        let sup = channel::to_superoperator(&kraus);
        prop_assert!(min_eigenvalue(&sup.choi()) >= -1e-8);
        // Trace preservation in the superoperator picture.
        let rho = rng.density(1 << n_s);
        prop_assert!((linalg::trace(&sup.apply(&rho)) - c(1., 0.)).norm() < 1e-10);
    }

    #[test]
    fn composition_matches_sequential_application(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let make = |rng: &mut TestRng| {
            let w = rng.unitary(4);
            let prep = rng.distribution(2);
            channel::to_superoperator(&channel::build_period_channel(&w, &prep, 1, 1).unwrap())
        };
        let (a, b) = (make(&mut rng), make(&mut rng));
        let rho = rng.density(2);
        let lhs = b.after(&a).apply(&rho);
        let rhs = b.apply(&a.apply(&rho));
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
        prop_assert!(min_eigenvalue(&b.after(&a).choi()) >= -1e-8);
    }

    #[test]
    fn channel_spectral_radius_is_one(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let w = rng.unitary(8);
        let prep = rng.distribution(2);
        let sup = channel::to_superoperator(&channel::build_period_channel(&w, &prep, 2, 1).unwrap());
        let eigs = linalg::eigenvalues(&sup.matrix).unwrap();
        prop_assert!((eigs[0].norm() - 1.0).abs() < 1e-8);
        prop_assert!(eigs.iter().all(|z| z.norm() <= 1.0 + 1e-8));
        let gap = channel::spectral_gap_of(&sup).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&gap.gap));
    }

    #[test]
    fn infinite_temperature_cycle_is_unital(h in 0.1f64..2.0, g in 0.05f64..0.5, n_t in 1usize..40) {
        let spec = hamiltonians::build_tfim(2, 1.0, h).unwrap();
        let cfg = ProtocolConfig::one_to_one(2, g, 0.0, 2.0 * h + 2.0, n_t, 3);
        let map = channel::build_cycle_map(&spec, &cfg).unwrap();
        let mixed = common::eye(4) * c(0.25, 0.);
        prop_assert!(max_abs(&(map.superoperator.apply(&mixed) - &mixed)) < 1e-10);
    }
}
