//! Transverse-field Ising reservoir with repeated interactions and multiplexed readout.
//!
//! Storage order of the joint space is `S ⊗ E`. Sites `1..=n_e` of the chain form
//! the environment, the remaining sites form the reservoir; site `s` lives in
//! storage slot `n_m + s` if `s <= n_e` and `s - n_e` otherwise.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::{self, dagger};
use crate::qcore::{c, haar_random_pure, pauli_on_site, Axis, CMatrix, DensityMatrix, PrngStream, C64};

/// Largest joint register (`n_m + n_e`) accepted.
pub const MAX_JOINT_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObservableSet {
    /// `sz_j` on every reservoir qubit (`K = n_m`).
    #[serde(rename = "z")]
    Z,
    /// `sz_j` plus `sz_i sz_j` for `i < j` (`K = n_m (n_m + 1) / 2`).
    #[serde(rename = "z_zz")]
    ZZz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub n_m: usize,
    pub n_e: usize,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub j_strength: f64,
    #[serde(default = "one")]
    pub b_field: f64,
    /// Interaction time in units of `1 / B`.
    pub tau_b: f64,
    #[serde(default = "one_usize")]
    pub multiplexity: usize,
    #[serde(default = "default_observables")]
    pub observables: ObservableSet,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_observables() -> ObservableSet {
    ObservableSet::ZZz
}

impl ReservoirConfig {
    pub fn new(n_m: usize, n_e: usize, tau_b: f64) -> Self {
        ReservoirConfig {
            n_m,
            n_e,
            alpha: 1.0,
            j_strength: 1.0,
            b_field: 1.0,
            tau_b,
            multiplexity: 1,
            observables: ObservableSet::ZZz,
        }
    }

    pub fn with_multiplexity(mut self, m: usize) -> Self {
        self.multiplexity = m;
        self
    }

    pub fn with_observables(mut self, set: ObservableSet) -> Self {
        self.observables = set;
        self
    }

    pub fn with_couplings(mut self, alpha: f64, j_over_b: f64) -> Self {
        self.alpha = alpha;
        self.j_strength = j_over_b * self.b_field;
        self
    }

    pub fn tau(&self) -> f64 {
        self.tau_b / self.b_field
    }

    pub fn n_qubits(&self) -> usize {
        self.n_m + self.n_e
    }

    pub fn dim_s(&self) -> usize {
        1 << self.n_m
    }

    pub fn dim_e(&self) -> usize {
        1 << self.n_e
    }

    /// Number of observables `K` per snapshot.
    pub fn k(&self) -> usize {
        match self.observables {
            ObservableSet::Z => self.n_m,
            ObservableSet::ZZz => self.n_m * (self.n_m + 1) / 2,
        }
    }

    /// Feature columns including the bias.
    pub fn feature_dim(&self) -> usize {
        self.multiplexity * self.k() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_m == 0 {
            return Err(Error::config("reservoir.n_m", "must be >= 1"));
        }
        if self.n_e == 0 {
            return Err(Error::config("reservoir.n_e", "must be >= 1"));
        }
        if self.n_qubits() > MAX_JOINT_QUBITS {
            return Err(Error::config(
                "reservoir",
                format!("n_m + n_e = {} exceeds {MAX_JOINT_QUBITS}", self.n_qubits()),
            ));
        }
        if self.multiplexity == 0 {
            return Err(Error::config("reservoir.multiplexity", "must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 3.0) {
            return Err(Error::config("reservoir.alpha", "must lie in (0, 3)"));
        }
        if !(self.b_field.is_finite() && self.b_field != 0.0) {
            return Err(Error::config("reservoir.b_field", "must be finite and nonzero"));
        }
        if !(self.j_strength.is_finite()) {
            return Err(Error::config("reservoir.j_strength", "must be finite"));
        }
        if !(self.tau_b.is_finite() && self.tau_b >= 0.0) {
            return Err(Error::config("reservoir.tau_b", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Coupling `J_ij` between 1-based chain sites.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let n = self.n_qubits();
        let norm: f64 = (1..=n)
            .flat_map(|a| (1..a).map(move |b| ((a - b) as f64).powf(-self.alpha)))
            .sum::<f64>()
            / (n - 1) as f64;
        self.j_strength * (i.abs_diff(j) as f64).powf(-self.alpha) / norm
    }
}

/// Storage slot (1-based, slot 1 leftmost) of chain site `site`.
pub fn storage_slot(site: usize, n_m: usize, n_e: usize) -> usize {
    if site <= n_e {
        n_m + site
    } else {
        site - n_e
    }
}

fn hamiltonian_with_slots(config: &ReservoirConfig, slot: impl Fn(usize) -> usize) -> CMatrix {
    let n = config.n_qubits();
    let dim = 1usize << n;
    let mask = |site: usize| 1usize << (n - slot(site));
    let mut h = CMatrix::zeros((dim, dim));
    for i in 1..=n {
        for j in 1..i {
            let jij = config.coupling(i, j);
            let flip = mask(i) | mask(j);
            for a in 0..dim {
                h[[a ^ flip, a]] += c(jij, 0.0);
            }
        }
    }
    for a in 0..dim {
        let ones = a.count_ones() as f64;
        h[[a, a]] += c(config.b_field * (n as f64 - 2.0 * ones), 0.0);
    }
    h
}

/// Ising Hamiltonian in chain-site order (site 1 is the leftmost tensor factor).
pub fn build_hamiltonian(config: &ReservoirConfig) -> CMatrix {
    hamiltonian_with_slots(config, |s| s)
}

/// Ising Hamiltonian in `S ⊗ E` storage order.
pub fn build_hamiltonian_storage(config: &ReservoirConfig) -> CMatrix {
    let (n_m, n_e) = (config.n_m, config.n_e);
    hamiltonian_with_slots(config, move |s| storage_slot(s, n_m, n_e))
}

/// Eigendecomposition-based `exp(-i t H)` family for a fixed Hermitian `H`.
pub struct Propagator {
    energies: Array1<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &CMatrix) -> Result<Self> {
        let (energies, vectors) = linalg::eigh(h)?;
        Ok(Propagator { energies, vectors })
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, &e) in scaled.columns_mut().into_iter().zip(self.energies.iter()) {
            let ph = C64::from_polar(1.0, -t * e);
            col.mapv_inplace(|z| z * ph);
        }
        scaled.dot(&dagger(&self.vectors))
    }
}

/// `exp(-i tau H)` in chain-site order.
pub fn build_unitary(config: &ReservoirConfig) -> Result<CMatrix> {
    Ok(Propagator::new(&build_hamiltonian(config))?.at(config.tau()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirState {
    pub rho: DensityMatrix,
    pub step_index: usize,
}

impl ReservoirState {
    pub fn new(rho: DensityMatrix) -> Self {
        ReservoirState { rho, step_index: 0 }
    }

    /// `|0...0><0...0|` on `n_m` qubits.
    pub fn zero(n_m: usize) -> Self {
        Self::new(DensityMatrix::basis(1 << n_m, 0).expect("basis index 0 exists"))
    }

    pub fn haar(n_m: usize, rng: &mut PrngStream) -> Self {
        Self::new(haar_random_pure(1 << n_m, rng))
    }
}

/// Measured observables per time step with a trailing bias column of ones.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
}

impl FeatureMatrix {
    /// Appends the bias column to raw measurement rows.
    pub fn from_measurements(raw: Array2<f64>) -> Self {
        let (r, k) = raw.dim();
        let mut data = Array2::ones((r, k + 1));
        data.slice_mut(ndarray::s![.., ..k]).assign(&raw);
        FeatureMatrix { data }
    }

    /// Wraps a matrix whose last column is the bias.
    pub fn from_data(data: Array2<f64>) -> Result<Self> {
        if data.ncols() == 0 || data.column(data.ncols() - 1).iter().any(|&x| x != 1.0) {
            return Err(Error::InvalidState("bias column must be all ones".into()));
        }
        Ok(FeatureMatrix { data })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn rows(&self, range: std::ops::Range<usize>) -> FeatureMatrix {
        FeatureMatrix { data: self.data.slice(ndarray::s![range, ..]).to_owned() }
    }
}

/// Precomputed reservoir: sub-cycle propagator blocks and observable sign tables.
pub struct Reservoir {
    config: ReservoirConfig,
    /// `blocks[m][e * D_E + e']` is the `D_S x D_S` block `<e| U_{m+1} |e'>`.
    blocks: Vec<Vec<CMatrix>>,
    /// `signs[[k, s]]` is the eigenvalue of observable `k` on basis state `s` of S.
    signs: Array2<f64>,
    labels: Vec<String>,
}

impl Reservoir {
    pub fn new(config: &ReservoirConfig) -> Result<Self> {
        config.validate()?;
        let prop = Propagator::new(&build_hamiltonian_storage(config))?;
        let (ds, de) = (config.dim_s(), config.dim_e());
        let mm = config.multiplexity;
        let blocks = (1..=mm)
            .map(|m| {
                let u = prop.at(config.tau() * m as f64 / mm as f64);
                split_blocks(&u, ds, de)
            })
            .collect();
        let (signs, labels) = sign_table(config.n_m, config.observables);
        Ok(Reservoir { config: config.clone(), blocks, signs, labels })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    /// Observable labels of one snapshot, in feature order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn check_input(&self, input: &DensityMatrix) -> Result<()> {
        if input.dim() != self.config.dim_e() {
            return Err(Error::DimensionMismatch { expected: self.config.dim_e(), found: input.dim() });
        }
        Ok(())
    }

    /// Kraus operators of the reduced map after sub-cycle `m` (1-based; `m = M` is the full step).
    pub fn kraus_operators(&self, input: &DensityMatrix, m: usize) -> Result<Vec<CMatrix>> {
        self.check_input(input)?;
        if m == 0 || m > self.config.multiplexity {
            return Err(Error::IndexOutOfRange { index: m, max: self.config.multiplexity });
        }
        Ok(self.kraus_from_components(&input_components(input)?, m))
    }

    fn kraus_from_components(&self, comps: &[Array1<C64>], m: usize) -> Vec<CMatrix> {
        let blocks = &self.blocks[m - 1];
        let (ds, de) = (self.config.dim_s(), self.config.dim_e());
        let mut out = Vec::with_capacity(de * comps.len());
        for e in 0..de {
            for psi in comps {
                let mut k = CMatrix::zeros((ds, ds));
                for (ep, &w) in psi.iter().enumerate() {
                    if w != c(0.0, 0.0) {
                        k.scaled_add(w, &blocks[e * de + ep]);
                    }
                }
                out.push(k);
            }
        }
        out
    }

    /// One input interaction: returns the new state and `M * K` measured values.
    pub fn evolve_step(&self, state: &ReservoirState, input: &DensityMatrix) -> Result<(ReservoirState, Vec<f64>)> {
        let rho = state.rho.matrix();
        if rho.nrows() != self.config.dim_s() {
            return Err(Error::DimensionMismatch { expected: self.config.dim_s(), found: rho.nrows() });
        }
        self.check_input(input)?;
        let comps = input_components(input)?;
        let mm = self.config.multiplexity;
        let ds = self.config.dim_s();
        let mut features = Vec::with_capacity(mm * self.signs.nrows());
        let mut next = CMatrix::zeros((ds, ds));
        for m in 1..=mm {
            let mut diag = vec![0.0; ds];
            for k in self.kraus_from_components(&comps, m) {
                let t = k.dot(rho);
                for s in 0..ds {
                    let mut acc = 0.0;
                    for a in 0..ds {
                        acc += (t[[s, a]] * k[[s, a]].conj()).re;
                    }
                    diag[s] += acc;
                }
                if m == mm {
                    next = next + t.dot(&dagger(&k));
                }
            }
            features.extend(self.signs.rows().into_iter().map(|row| {
                row.iter().zip(diag.iter()).map(|(sg, p)| sg * p).sum::<f64>()
            }));
        }
        let next = linalg::hermitize(&next);
        Ok((
            ReservoirState { rho: DensityMatrix::new_unchecked(next), step_index: state.step_index + 1 },
            features,
        ))
    }

    /// Drives the reservoir with `inputs`; one feature row per input, bias appended.
    pub fn run_sequence(&self, inputs: &[DensityMatrix], initial: &ReservoirState) -> Result<(FeatureMatrix, ReservoirState)> {
        let width = self.config.multiplexity * self.signs.nrows();
        let mut raw = Array2::zeros((inputs.len(), width));
        let mut state = initial.clone();
        for (n, input) in inputs.iter().enumerate() {
            let (next, row) = self.evolve_step(&state, input)?;
            raw.row_mut(n).assign(&Array1::from(row));
            state = next;
        }
        Ok((FeatureMatrix::from_measurements(raw), state))
    }
}

/// Weighted pure components `sqrt(p_k) psi_k` of an input state.
fn input_components(input: &DensityMatrix) -> Result<Vec<Array1<C64>>> {
    let (w, v) = linalg::eigh(input.matrix())?;
    let cutoff = 1e-14;
    let kept: f64 = w.iter().filter(|&&p| p > cutoff).sum();
    let total = linalg::trace(input.matrix()).re;
    let renorm = total / kept;
    Ok(w.iter()
        .enumerate()
        .rev()
        .filter(|(_, &p)| p > cutoff)
        .map(|(k, &p)| v.column(k).mapv(|z| z * (p * renorm).sqrt()))
        .collect())
}

fn split_blocks(u: &CMatrix, ds: usize, de: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(de * de);
    for e in 0..de {
        for ep in 0..de {
            out.push(CMatrix::from_shape_fn((ds, ds), |(s, sp)| u[[s * de + e, sp * de + ep]]));
        }
    }
    out
}

fn sign_table(n_m: usize, set: ObservableSet) -> (Array2<f64>, Vec<String>) {
    let ds = 1usize << n_m;
    let z = |j: usize, s: usize| if (s >> (n_m - j)) & 1 == 0 { 1.0 } else { -1.0 };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    for j in 1..=n_m {
        rows.push((0..ds).map(|s| z(j, s)).collect());
        labels.push(format!("sz_{j}"));
    }
    if set == ObservableSet::ZZz {
        for i in 1..=n_m {
            for j in (i + 1)..=n_m {
                rows.push((0..ds).map(|s| z(i, s) * z(j, s)).collect());
                labels.push(format!("szsz_{i}_{j}"));
            }
        }
    }
    let k = rows.len();
    (Array2::from_shape_vec((k, ds), rows.concat()).expect("consistent row lengths"), labels)
}

/// `(1/n_m) Σ_j <s^γ_j>` on the reservoir state.
pub fn average_magnetization(state: &ReservoirState, axis: Axis) -> Result<f64> {
    let dim = state.rho.dim();
    let n = dim.trailing_zeros() as usize;
    if dim != 1 << n || n == 0 {
        return Err(Error::InvalidState(format!("dimension {dim} is not a qubit register")));
    }
    let mut total = 0.0;
    for j in 1..=n {
        total += pauli_on_site(axis, j, n)?.expectation(&state.rho);
    }
    Ok(total / n as f64)
}
