//! Property tests: each invariant is checked against an independent computation route.

mod common;

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use common::*;

use qtomo::channels::{depolarize, generate_input_stream, quantum_switch_output};
use qtomo::metrics::{distance_correlation_sq, fidelities};
use qtomo::qcore::linalg::trace;
use qtomo::qcore::*;
use qtomo::readout::ridge_solve;
use qtomo::reservoir::{Reservoir, ReservoirState};
use qtomo::spectral::superoperator_for;

#[test]
fn cptp_invariants_over_ten_thousand_steps() {
    let mut steps = 0;
    for seed in 0..10u64 {
        let cfg = small_config(seed);
        let res = Reservoir::new(&cfg).unwrap();
        let mut rng = PrngStream::new(1000 + seed);
        let stream = generate_input_stream(1000, cfg.n_e, 1 + seed as usize % 3, &mut rng).unwrap();
        let mut state = ReservoirState::haar(cfg.n_m, &mut rng);
        for b in &stream.beta {
            let (next, x) = res.evolve_step(&state, b).unwrap();
            assert_density(&next.rho);
            assert_eq!(x.len(), cfg.multiplexity * cfg.k());
            assert!(x.iter().all(|v| v.abs() <= 1.0 + 1e-12));
            state = next;
            steps += 1;
        }
    }
    assert_eq!(steps, 10_000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn superoperator_matches_reservoir_step(seed in any::<u64>()) {
        let cfg = small_config(seed).with_multiplexity(1);
        let mut rng = PrngStream::new(seed ^ 0x5eed);
        let beta = if rng.coin() { haar_random_pure(cfg.dim_e(), &mut rng) } else { random_mixed(cfg.dim_e(), &mut rng) };
        let rho = random_mixed(cfg.dim_s(), &mut rng);
        let res = Reservoir::new(&cfg).unwrap();
        let sup = superoperator_for(&res, &beta).unwrap();
        let via_sup = sup.apply(rho.matrix()).unwrap();
        let (next, _) = res.evolve_step(&ReservoirState::new(rho.clone()), &beta).unwrap();
        let dense = dense_step(&cfg, rho.matrix(), beta.matrix());
        prop_assert!(frobenius(&(&via_sup - next.rho.matrix())) < 1e-10);
        prop_assert!(frobenius(&(&via_sup - &dense)) < 1e-10);
    }

    #[test]
    fn switch_closed_form_matches_kraus_sum(seed in any::<u64>(), two_qubit in any::<bool>()) {
        let mut rng = PrngStream::new(seed);
        let n = if two_qubit { 2 } else { 1 };
        let rho = random_mixed(1 << n, &mut rng);
        let (u, q1, q2) = (rng.uniform(), rng.uniform(), rng.uniform());
        let closed = quantum_switch_output(&rho, u, q1, q2).unwrap();
        let oracle = switch_by_kraus(rho.matrix(), u, q1, q2, n);
        prop_assert!(frobenius(&(closed.matrix() - &oracle)) < 1e-10);
        assert_density(&closed);
    }

    #[test]
    fn ridge_satisfies_normal_equations(seed in any::<u64>(), rows in 3usize..40, cols in 1usize..12, outs in 1usize..4) {
        let mut rng = PrngStream::new(seed);
        let x = Array2::from_shape_fn((rows, cols), |_| rng.normal());
        let y = Array2::from_shape_fn((rows, outs), |_| rng.normal());
        let eta = 10f64.powf(rng.uniform_range(-8.0, 1.0));
        let w = ridge_solve(&x, &y, eta).unwrap();
        let lhs = x.t().dot(&x).dot(&w) + &w * eta;
        let rhs = x.t().dot(&y);
        let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>() * w.iter().map(|v| v.abs()).fold(0.0, f64::max) + rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let resid = (&lhs - &rhs).iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(resid <= 1e-9 * scale, "residual {resid} scale {scale}");
    }

    #[test]
    fn fidelity_is_symmetric(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = PrngStream::new(seed);
        let a = if rng.coin() { haar_random_pure(d, &mut rng) } else { random_mixed(d, &mut rng) };
        let b = random_mixed(d, &mut rng);
        let (fab, fba) = (fidelity(&a, &b).unwrap(), fidelity(&b, &a).unwrap());
        prop_assert!((fab - fba).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&fab));
    }

    #[test]
    fn partial_trace_is_linear(seed in any::<u64>(), ds in 1usize..4, de in 1usize..4) {
        let mut rng = PrngStream::new(seed);
        let (a, b) = (random_hermitian(ds * de, &mut rng), random_hermitian(ds * de, &mut rng));
        let (x, y) = (rng.normal(), rng.normal());
        let combo = a.mapv(|z| z * x) + b.mapv(|z| z * y);
        let lhs = partial_trace_env_matrix(&combo, ds, de).unwrap();
        let rhs = partial_trace_env_matrix(&a, ds, de).unwrap().mapv(|z| z * x) + partial_trace_env_matrix(&b, ds, de).unwrap().mapv(|z| z * y);
        prop_assert!(frobenius(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn channel_is_contractive(seed in any::<u64>()) {
        let cfg = small_config(seed);
        let mut rng = PrngStream::new(seed.wrapping_add(1));
        let beta = haar_random_pure(cfg.dim_e(), &mut rng);
        let (r1, r2) = (random_mixed(cfg.dim_s(), &mut rng), haar_random_pure(cfg.dim_s(), &mut rng));
        let res = Reservoir::new(&cfg).unwrap();
        let (n1, _) = res.evolve_step(&ReservoirState::new(r1.clone()), &beta).unwrap();
        let (n2, _) = res.evolve_step(&ReservoirState::new(r2.clone()), &beta).unwrap();
        prop_assert!(trace_distance(&n1.rho, &n2.rho).unwrap() <= trace_distance(&r1, &r2).unwrap() + 1e-10);
    }

    #[test]
    fn multiplexed_step_matches_single_unitary(seed in any::<u64>()) {
        let base = small_config(seed);
        let m = 2 + (seed % 4) as usize;
        let mut rng = PrngStream::new(seed.wrapping_mul(3));
        let beta = random_mixed(base.dim_e(), &mut rng);
        let rho = ReservoirState::new(random_mixed(base.dim_s(), &mut rng));
        let (a, _) = Reservoir::new(&base.clone().with_multiplexity(1)).unwrap().evolve_step(&rho, &beta).unwrap();
        let (b, x) = Reservoir::new(&base.clone().with_multiplexity(m)).unwrap().evolve_step(&rho, &beta).unwrap();
        prop_assert!(frobenius(&(a.rho.matrix() - b.rho.matrix())) < 1e-9);
        prop_assert_eq!(x.len(), m * base.k());
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let cfg = small_config(seed);
        let run = || {
            let mut rng = PrngStream::new(seed);
            let s = generate_input_stream(30, cfg.n_e, 2, &mut rng).unwrap();
            let init = ReservoirState::haar(cfg.n_m, &mut rng);
            (s.p.clone(), Reservoir::new(&cfg).unwrap().run_sequence(&s.beta, &init).unwrap().0)
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.0, b.0);
        prop_assert_eq!(a.1.data(), b.1.data());
    }

    #[test]
    fn depolarize_matches_kraus_twirl(seed in any::<u64>(), two_qubit in any::<bool>()) {
        let mut rng = PrngStream::new(seed);
        let n = if two_qubit { 2 } else { 1 };
        let rho = random_mixed(1 << n, &mut rng);
        let p = rng.uniform();
        let mut oracle = CMatrix::zeros((1 << n, 1 << n));
        for k in depolarizing_kraus(p, n) {
            oracle = oracle + k.dot(rho.matrix()).dot(&dagger(&k));
        }
        prop_assert!(frobenius(&(depolarize(&rho, p).unwrap().matrix() - &oracle)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn projection_matches_dykstra_oracle(seed in any::<u64>(), four in any::<bool>()) {
        let mut rng = PrngStream::new(seed);
        let d = if four { 4 } else { 2 };
        let a = random_hermitian(d, &mut rng).mapv(|z| z * rng.uniform_range(0.1, 2.0));
        let p = project_spectrahedron(&a).unwrap();
        let oracle = dykstra_projection(&a);
        prop_assert!(frobenius(&(p.matrix() - &oracle)) < 1e-6, "gap {}", frobenius(&(p.matrix() - &oracle)));
    }

    #[test]
    fn projection_is_idempotent_and_optimal(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = PrngStream::new(seed);
        let a = random_hermitian(d, &mut rng);
        let p = project_spectrahedron(&a).unwrap();
        assert_density(&p);
        let again = project_spectrahedron(p.matrix()).unwrap();
        prop_assert!(frobenius(&(again.matrix() - p.matrix())) < 1e-10);
        // Variational inequality: Re tr[(A − P)(Y − P)] <= 0 for every density matrix Y.
        for _ in 0..20 {
            let y = if rng.coin() { haar_random_pure(d, &mut rng) } else { random_mixed(d, &mut rng) };
            let ip = trace(&(&a - p.matrix()).dot(&(y.matrix() - p.matrix()))).re;
            prop_assert!(ip <= 1e-9, "inner product {ip}");
        }
    }

    #[test]
    fn negativity_matches_werner_oracle(p in 0.0f64..=1.0) {
        let want = ((3.0 * p - 1.0) / 4.0).max(0.0);
        prop_assert!((negativity(&werner(p), 2).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn distance_correlation_is_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = PrngStream::new(seed);
        let a: Vec<_> = (0..30).map(|_| random_mixed(2, &mut rng)).collect();
        let b: Vec<_> = a.iter().map(|s| depolarize(s, 0.3).unwrap()).collect();
        let u = haar_random_unitary(2, &mut rng);
        let v = haar_random_unitary(2, &mut rng);
        let ua: Vec<_> = a.iter().map(|s| s.conjugate_by(&u)).collect();
        let vb: Vec<_> = b.iter().map(|s| s.conjugate_by(&v)).collect();
        let r = distance_correlation_sq(&a, &b).unwrap();
        prop_assert!((r - distance_correlation_sq(&ua, &vb).unwrap()).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&r));
    }
}

#[test]
fn negativity_examples() {
    let h = 1.0 / 2f64.sqrt();
    let bell = DensityMatrix::pure(&Array1::from(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])).unwrap();
    assert!((negativity(&bell, 2).unwrap() - 0.5).abs() < 1e-12);
    let mut rng = PrngStream::new(3);
    let prod = DensityMatrix::new(kron(random_mixed(2, &mut rng).matrix(), random_mixed(2, &mut rng).matrix())).unwrap();
    assert!(negativity(&prod, 2).unwrap().abs() < 1e-12);
}

#[test]
fn distance_correlation_self_and_independence() {
    let mut rng = PrngStream::new(11);
    let a: Vec<_> = (0..1000).map(|_| haar_random_pure(2, &mut rng)).collect();
    let b: Vec<_> = (0..1000).map(|_| haar_random_pure(2, &mut rng)).collect();
    assert!((distance_correlation_sq(&a, &a).unwrap() - 1.0).abs() < 1e-10);
    let r = distance_correlation_sq(&a, &b).unwrap();
    assert!(r < 0.1, "independent streams gave {r}");
}

#[test]
fn perfect_reconstruction_has_unit_fidelity() {
    let mut rng = PrngStream::new(12);
    let s: Vec<_> = (0..20).map(|_| random_mixed(4, &mut rng)).collect();
    assert!(fidelities(&s, &s).unwrap().iter().all(|f| (f - 1.0).abs() < 1e-8));
}
