//! Independent oracles shared by the property and acceptance suites.
#![allow(dead_code)]

use ndarray::Array1;

use qtomo::qcore::linalg::{eigh, eigvalsh, hermiticity_defect, hermitize, reassemble, trace};
use qtomo::qcore::*;
use qtomo::reservoir::{build_hamiltonian_storage, ObservableSet, ReservoirConfig};

pub fn small_config(seed: u64) -> ReservoirConfig {
    let mut rng = PrngStream::new(seed);
    let n_m = 1 + (rng.uniform() * 3.0) as usize;
    let n_e = 1 + (rng.uniform() * 2.0) as usize;
    let obs = if rng.coin() { ObservableSet::Z } else { ObservableSet::ZZz };
    ReservoirConfig::new(n_m, n_e, rng.uniform_range(0.1, 10.0))
        .with_couplings(rng.uniform_range(0.3, 2.7), rng.uniform_range(0.05, 2.0))
        .with_multiplexity(1 + (rng.uniform() * 3.0) as usize)
        .with_observables(obs)
}

pub fn random_hermitian(d: usize, rng: &mut PrngStream) -> CMatrix {
    let a = CMatrix::from_shape_fn((d, d), |_| c(rng.normal(), rng.normal()));
    hermitize(&a)
}

/// `exp(-i t H)` by scaling and squaring a truncated Taylor series.
pub fn taylor_expm(h: &CMatrix, t: f64) -> CMatrix {
    let norm = frobenius(h) * t;
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = h.mapv(|z| z * c(0.0, -t / 2f64.powi(s)));
    let mut term = identity(h.nrows());
    let mut sum = term.clone();
    for k in 1..30 {
        term = term.dot(&a).mapv(|z| z / k as f64);
        sum = sum + &term;
    }
    for _ in 0..s {
        sum = sum.dot(&sum);
    }
    sum
}

pub fn dense_step(cfg: &ReservoirConfig, rho: &CMatrix, beta: &CMatrix) -> CMatrix {
    let u = taylor_expm(&build_hamiltonian_storage(cfg), cfg.tau());
    let joint = u.dot(&kron(rho, beta)).dot(&dagger(&u));
    partial_trace_env_matrix(&joint, cfg.dim_s(), cfg.dim_e()).unwrap()
}

pub fn pauli_string(index: usize, n: usize) -> CMatrix {
    let axes = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
    let mut out = identity(1);
    for q in 0..n {
        let p = match axes[(index >> (2 * q)) & 3] {
            None => identity(2),
            Some(ax) => pauli(ax),
        };
        out = kron(&out, &p);
    }
    out
}

/// Kraus operators of `p I/D + (1 − p) ρ` from the Pauli twirl.
pub fn depolarizing_kraus(p: f64, n: usize) -> Vec<CMatrix> {
    let d2 = (1usize << (2 * n)) as f64;
    (0..1usize << (2 * n))
        .map(|k| {
            let w = if k == 0 { 1.0 - p + p / d2 } else { p / d2 };
            pauli_string(k, n).mapv(|z| z * w.sqrt())
        })
        .collect()
}

pub fn switch_by_kraus(rho: &CMatrix, u_c: f64, q1: f64, q2: f64, n: usize) -> CMatrix {
    let d = rho.nrows();
    let ctrl = Array1::from(vec![c(u_c.sqrt(), 0.0), c((1.0 - u_c).sqrt(), 0.0)]);
    let omega = CMatrix::from_shape_fn((2, 2), |(i, j)| ctrl[i] * ctrl[j].conj());
    let p0 = CMatrix::from_shape_fn((2, 2), |(i, j)| if i == 0 && j == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let p1 = CMatrix::from_shape_fn((2, 2), |(i, j)| if i == 1 && j == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let input = kron(rho, &omega);
    let mut out = CMatrix::zeros((2 * d, 2 * d));
    for k in depolarizing_kraus(q1, n) {
        for l in depolarizing_kraus(q2, n) {
            let w = kron(&k.dot(&l), &p0) + kron(&l.dot(&k), &p1);
            out = out + w.dot(&input).dot(&dagger(&w));
        }
    }
    out
}

/// Projection onto the density matrices by Dykstra alternation between the PSD cone
/// and the unit-trace hyperplane.
pub fn dykstra_projection(a: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let psd = |m: &CMatrix| {
        let (w, v) = eigh(&hermitize(m)).unwrap();
        let w = w.mapv(|x| x.max(0.0));
        reassemble(&w, &v)
    };
    let affine = |m: &CMatrix| {
        let shift = (1.0 - trace(m).re) / d as f64;
        m + &identity(d).mapv(|z| z * shift)
    };
    let mut x = a.clone();
    let mut p = CMatrix::zeros((d, d));
    let mut q = CMatrix::zeros((d, d));
    for _ in 0..200_000 {
        let y = psd(&(&x + &p));
        p = &x + &p - &y;
        let next = affine(&(&y + &q));
        q = &y + &q - &next;
        // x can stall while the correction terms still move, so also require feasibility.
        let delta = frobenius(&(&next - &x)) + frobenius(&(&next - &y));
        x = next;
        if delta < 1e-13 {
            break;
        }
    }
    x
}

pub fn werner(p: f64) -> DensityMatrix {
    let h = 1.0 / 2f64.sqrt();
    let singlet = Array1::from(vec![c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)]);
    let s = DensityMatrix::pure(&singlet).unwrap();
    DensityMatrix::new(s.matrix().mapv(|z| z * p) + identity(4).mapv(|z| z * ((1.0 - p) / 4.0))).unwrap()
}

/// `Err` describing the first violated density-matrix condition.
pub fn check_density(rho: &DensityMatrix) -> Result<(), String> {
    let m = rho.matrix();
    let tr = trace(m).re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(format!("trace {tr}"));
    }
    if hermiticity_defect(m) > HERMITIAN_TOL {
        return Err(format!("hermiticity defect {}", hermiticity_defect(m)));
    }
    let min = eigvalsh(m).unwrap().iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(format!("min eigenvalue {min}"));
    }
    Ok(())
}

pub fn assert_density(rho: &DensityMatrix) {
    if let Err(e) = check_density(rho) {
        panic!("{e}");
    }
}
