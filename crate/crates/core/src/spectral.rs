//! Superoperators of reduced dynamics maps and their spectral diagnostics.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals};
use serde::{Deserialize, Serialize};

use crate::channels::generate_input_stream;
use crate::error::{Error, Result};
use crate::qcore::linalg::{self, dagger, hermitize};
use crate::qcore::{c, haar_random_pure, identity, trace_distance, CMatrix, DensityMatrix, PrngStream, C64};
use crate::reservoir::{Reservoir, ReservoirConfig, ReservoirState};

/// Largest reservoir accepted for superoperator work.
pub const MAX_SPECTRAL_QUBITS: usize = 6;

/// Column-stacking vectorization.
pub fn vec(m: &CMatrix) -> Array1<C64> {
    let (r, cl) = m.dim();
    Array1::from_shape_fn(r * cl, |k| m[[k % r, k / r]])
}

/// Inverse of [`vec`].
pub fn unvec(v: &Array1<C64>, dim: usize) -> Result<CMatrix> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, found: v.len() });
    }
    Ok(CMatrix::from_shape_fn((dim, dim), |(i, j)| v[j * dim + i]))
}

#[derive(Clone, Debug)]
pub struct Superoperator {
    pub dim_s: usize,
    pub data: CMatrix,
    pub source: String,
}

impl Superoperator {
    /// `Σ_k conj(K_k) ⊗ K_k`, acting on column-stacked vectors.
    pub fn from_kraus(kraus: &[CMatrix], source: impl Into<String>) -> Result<Self> {
        let d = kraus.first().map(|k| k.nrows()).ok_or_else(|| Error::InvalidState("no Kraus operators".into()))?;
        let mut data = CMatrix::zeros((d * d, d * d));
        for k in kraus {
            data = data + crate::qcore::kron(&k.mapv(|z| z.conj()), k);
        }
        Ok(Superoperator { dim_s: d, data, source: source.into() })
    }

    /// Applies the map to an arbitrary `dim_s x dim_s` matrix.
    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        unvec(&self.data.dot(&vec(m)), self.dim_s)
    }
}

/// Superoperator of the full-step reduced map `ρ ↦ Tr_E[U(ρ ⊗ β)U†]`.
pub fn build_superoperator(config: &ReservoirConfig, beta: &DensityMatrix) -> Result<Superoperator> {
    check_size(config)?;
    superoperator_for(&Reservoir::new(config)?, beta)
}

/// Same as [`build_superoperator`] for an already prepared reservoir.
pub fn superoperator_for(reservoir: &Reservoir, beta: &DensityMatrix) -> Result<Superoperator> {
    let cfg = reservoir.config();
    check_size(cfg)?;
    let kraus = reservoir.kraus_operators(beta, cfg.multiplexity)?;
    Superoperator::from_kraus(&kraus, format!("n_m={} n_e={} tau_b={} alpha={} J={} B={}", cfg.n_m, cfg.n_e, cfg.tau_b, cfg.alpha, cfg.j_strength, cfg.b_field))
}

fn check_size(config: &ReservoirConfig) -> Result<()> {
    if config.n_m > MAX_SPECTRAL_QUBITS {
        return Err(Error::Unsupported(format!(
            "superoperators are limited to n_m <= {MAX_SPECTRAL_QUBITS} (got {}, matrix side {})",
            config.n_m,
            1usize << (2 * config.n_m)
        )));
    }
    Ok(())
}

fn sort_desc_modulus(v: &mut [C64]) {
    v.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Sorted by descending modulus.
    pub eigenvalues: Vec<C64>,
    pub inv_lambda2: f64,
    /// Mean of `|λ_{k+1}| / |λ_k|` over consecutive pairs with nonzero denominator.
    pub ratio_mean: f64,
}

impl SpectralReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<C64>) -> Self {
        sort_desc_modulus(&mut eigenvalues);
        let l2 = eigenvalues.get(1).map_or(0.0, |z| z.norm());
        let inv_lambda2 = if l2 > 0.0 { 1.0 / l2 } else { f64::INFINITY };
        let scale = eigenvalues.first().map_or(0.0, |z| z.norm());
        let ratios: Vec<f64> = eigenvalues
            .windows(2)
            .filter(|w| w[0].norm() > 1e-12 * scale)
            .map(|w| w[1].norm() / w[0].norm())
            .collect();
        let ratio_mean = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
        SpectralReport { eigenvalues, inv_lambda2, ratio_mean }
    }

    pub fn lambda2_modulus(&self) -> f64 {
        self.eigenvalues.get(1).map_or(0.0, |z| z.norm())
    }

    /// `ln(1/ε) / ln(1/|λ₂|)`; infinite when `|λ₂| ≥ 1 − 1e−12`.
    pub fn esp_timescale(&self, eps: f64) -> f64 {
        esp_timescale(self.lambda2_modulus(), eps)
    }
}

pub fn esp_timescale(lambda2_modulus: f64, eps: f64) -> f64 {
    if lambda2_modulus >= 1.0 - 1e-12 {
        f64::INFINITY
    } else if lambda2_modulus == 0.0 {
        0.0
    } else {
        (1.0 / eps).ln() / (1.0 / lambda2_modulus).ln()
    }
}

pub fn spectral_report(superop: &Superoperator) -> Result<SpectralReport> {
    let ev = superop.data.eigvals()?;
    Ok(SpectralReport::from_eigenvalues(ev.to_vec()))
}

/// Two-state metastable structure from the second eigenmode.
#[derive(Clone, Debug)]
pub struct MetastableDecomposition {
    pub lambda2: f64,
    pub v2_max: f64,
    pub v2_min: f64,
    pub rho_ss: CMatrix,
    pub l2: CMatrix,
    pub r2: CMatrix,
    /// `ρ_ss + v₂^max R₂`; Hermitian, unit trace, PSD only up to the metastability approximation.
    pub ems_1: CMatrix,
    /// `ρ_ss + v₂^min R₂`.
    pub ems_2: CMatrix,
    pub povm_p1: CMatrix,
    pub povm_p2: CMatrix,
    pub a_eff: Array2<f64>,
}

impl MetastableDecomposition {
    /// Stationary weights `(p1, p2)` of `A_eff`.
    pub fn stationary_weights(&self) -> (f64, f64) {
        stationary_weights(self.v2_max, self.v2_min)
    }
}

/// `(1 − λ₂)/Δv [[−v_max, −v_min], [v_max, v_min]]`.
pub fn effective_generator(lambda2: f64, v2_max: f64, v2_min: f64) -> Array2<f64> {
    let s = (1.0 - lambda2) / (v2_max - v2_min);
    ndarray::array![[-s * v2_max, -s * v2_min], [s * v2_max, s * v2_min]]
}

pub fn stationary_weights(v2_max: f64, v2_min: f64) -> (f64, f64) {
    let dv = v2_max - v2_min;
    (-v2_min / dv, v2_max / dv)
}

/// Hermitian representative of an eigenmatrix of a Hermiticity-preserving map.
fn hermitian_part(x: &CMatrix) -> CMatrix {
    let h = hermitize(x);
    let anti = (x - &dagger(x)).mapv(|z| z / c(0.0, 2.0));
    if linalg::frobenius(&h) >= linalg::frobenius(&anti) {
        h
    } else {
        anti
    }
}

fn closest_index(values: &Array1<C64>, target: C64) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if (v - target).norm() < (values[best] - target).norm() {
            best = k;
        }
    }
    best
}

pub fn metastable_decomposition(superop: &Superoperator) -> Result<MetastableDecomposition> {
    let d = superop.dim_s;
    let (vals, right) = superop.data.eig()?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (vals[a], vals[b]);
        y.norm().total_cmp(&x.norm()).then(y.re.total_cmp(&x.re)).then(y.im.total_cmp(&x.im))
    });
    if order.len() < 3 {
        return Err(Error::Unsupported("metastable decomposition needs at least three eigenvalues".into()));
    }
    let (l2, l3) = (vals[order[1]], vals[order[2]]);
    if l2.im.abs() > 1e-8 * l2.norm() {
        return Err(Error::Unsupported(format!("second eigenvalue {l2} is not real")));
    }
    if l2.norm() >= 1.0 {
        return Err(Error::Unsupported(format!("|λ₂| = {} is not below 1", l2.norm())));
    }
    if l2.norm() - l3.norm() <= 1e-6 {
        return Err(Error::Unsupported("no spectral gap between λ₂ and λ₃".into()));
    }
    let lambda2 = l2.re;

    let ss = hermitize(&unvec(&right.column(order[0]).to_owned(), d)?);
    let rho_ss = ss.mapv(|z| z / linalg::trace(&ss).re);
    let mut r2 = hermitian_part(&unvec(&right.column(order[1]).to_owned(), d)?);

    // Left eigenvector: eigenvector of L̃† for conj(λ₂).
    let (lvals, left) = dagger(&superop.data).eig()?;
    let li = closest_index(&lvals, l2.conj());
    let mut l2m = hermitian_part(&unvec(&left.column(li).to_owned(), d)?);

    // Orthogonality tr[L₂ ρ_ss] = 0 holds up to rounding; remove it exactly.
    let overlap = linalg::trace(&l2m.dot(&rho_ss)).re;
    l2m = l2m - identity(d).mapv(|z| z * overlap);
    let norm = linalg::trace(&l2m.dot(&r2)).re;
    if norm.abs() < 1e-12 {
        return Err(Error::Linalg("left and right eigenmatrices are orthogonal".into()));
    }
    r2 = r2.mapv(|z| z / norm);
    let w = linalg::eigvalsh(&l2m)?;
    let (mut vmin, mut vmax) = (w[0], w[w.len() - 1]);
    // Fix the sign of the pair (L₂, R₂) so that v₂^max ≥ −v₂^min.
    if vmax < -vmin {
        l2m = l2m.mapv(|z| -z);
        r2 = r2.mapv(|z| -z);
        (vmin, vmax) = (-vmax, -vmin);
    }
    let dv = vmax - vmin;
    let ems_1 = &rho_ss + &r2.mapv(|z| z * vmax);
    let ems_2 = &rho_ss + &r2.mapv(|z| z * vmin);
    let povm_p1 = (&l2m - &identity(d).mapv(|z| z * vmin)).mapv(|z| z / dv);
    let povm_p2 = (identity(d).mapv(|z| z * vmax) - &l2m).mapv(|z| z / dv);
    Ok(MetastableDecomposition {
        lambda2,
        v2_max: vmax,
        v2_min: vmin,
        rho_ss,
        l2: l2m,
        r2,
        ems_1,
        ems_2,
        povm_p1,
        povm_p2,
        a_eff: effective_generator(lambda2, vmax, vmin),
    })
}

/// Mean ratio of final to initial trace distance between two trajectories driven by a
/// shared random stream, over `n_pairs` Haar pairs at initial distance above 0.5.
pub fn convergence_ratio(config: &ReservoirConfig, n_steps: usize, n_pairs: usize, rng: &mut PrngStream) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::config("n_pairs", "must be >= 1"));
    }
    if n_steps == 0 {
        return Ok(1.0);
    }
    let res = Reservoir::new(config)?;
    let ds = config.dim_s();
    let mut total = 0.0;
    for _ in 0..n_pairs {
        let (a, b, d0) = loop {
            let a = haar_random_pure(ds, rng);
            let b = haar_random_pure(ds, rng);
            let d0 = trace_distance(&a, &b)?;
            if d0 > 0.5 {
                break (a, b, d0);
            }
        };
        let stream = generate_input_stream(n_steps, config.n_e, 1, rng)?;
        let (_, fa) = res.run_sequence(&stream.beta, &ReservoirState::new(a))?;
        let (_, fb) = res.run_sequence(&stream.beta, &ReservoirState::new(b))?;
        total += trace_distance(&fa.rho, &fb.rho)? / d0;
    }
    Ok((total / n_pairs as f64).max(1e-10))
}

/// Median, mean and sample standard deviation of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { median: f64::NAN, mean: f64::NAN, sd: f64::NAN };
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        let mean = s.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 { (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Summary { median, mean, sd }
    }
}

/// Spectral statistics over Haar-random inputs `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub samples: usize,
    pub inv_lambda2: Summary,
    pub ratio_mean: Summary,
}

/// Reports for `n_samples` Haar-random inputs drawn from `rng`.
pub fn spectral_ensemble(config: &ReservoirConfig, n_samples: usize, rng: &mut PrngStream) -> Result<(Vec<SpectralReport>, EnsembleStats)> {
    check_size(config)?;
    let res = Reservoir::new(config)?;
    let betas: Vec<DensityMatrix> = (0..n_samples).map(|_| haar_random_pure(config.dim_e(), rng)).collect();
    let reports = betas
        .iter()
        .map(|b| spectral_report(&superoperator_for(&res, b)?))
        .collect::<Result<Vec<_>>>()?;
    let inv: Vec<f64> = reports.iter().map(|r| r.inv_lambda2).collect();
    let rat: Vec<f64> = reports.iter().map(|r| r.ratio_mean).collect();
    let stats = EnsembleStats { samples: n_samples, inv_lambda2: Summary::of(&inv), ratio_mean: Summary::of(&rat) };
    Ok((reports, stats))
}
