//! Input streams, the nonlinear depolarizing-probability sequence, and the
//! temporal quantum maps used as tomography targets.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c, haar_random_pure, identity, random_mixed, kron, pauli, Axis, CMatrix, DensityMatrix, PrngStream};
use crate::reservoir::Propagator;

/// Parameters of the order-`r` nonlinear autoregressive sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NarmaParams {
    pub order: usize,
    pub kappa: f64,
    pub eta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub input_scale: f64,
}

impl Default for NarmaParams {
    fn default() -> Self {
        NarmaParams { order: 10, kappa: 0.3, eta: 0.04, gamma: 1.5, delta: 0.1, input_scale: 0.2 }
    }
}

/// `p_n = κ p_{n−1} + η p_{n−1} Σ_{j<r} p_{n−j−1} + γ v_{n−r+1} v_n + δ` with `v = scale · u`.
/// The first `r` entries are zero.
pub fn narma_p(u: &[f64], params: &NarmaParams) -> Result<Vec<f64>> {
    let r = params.order;
    let v: Vec<f64> = u.iter().map(|x| x * params.input_scale).collect();
    let mut p = vec![0.0; u.len()];
    for n in r..u.len() {
        let window: f64 = p[n - r..n].iter().sum();
        let val = params.kappa * p[n - 1]
            + params.eta * p[n - 1] * window
            + params.gamma * v[n + 1 - r] * v[n]
            + params.delta;
        if !(0.0..=1.0).contains(&val) {
            return Err(Error::OutOfRange { name: "p_n", value: val });
        }
        p[n] = val;
    }
    Ok(p)
}

/// A driving sequence: scalar inputs `u`, input states `beta`, and depolarizing strengths `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputStream {
    pub u: Vec<f64>,
    pub beta: Vec<DensityMatrix>,
    pub p: Vec<f64>,
    /// Classical bits for the Bell-state task (`beta_n = |b_n><b_n|`).
    pub bits: Option<Vec<u8>>,
    pub hold_steps: usize,
}

impl InputStream {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.beta.first().map_or(0, |b| b.dim())
    }
}

/// `sqrt(u)|0> + sqrt(1-u)|1>` as a density matrix.
pub fn qubit_from_u(u: f64) -> DensityMatrix {
    let psi = Array1::from(vec![c(u.sqrt(), 0.0), c((1.0 - u).sqrt(), 0.0)]);
    DensityMatrix::pure(&psi).expect("nonzero amplitude")
}

/// Distribution of multi-qubit input states (`n_e > 1`); single-qubit inputs always follow `u`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputEnsemble {
    #[default]
    HaarPure,
    /// `A A† / tr(A A†)` with complex Gaussian `A`.
    RandomMixed,
}

impl InputEnsemble {
    pub fn sample(self, dim: usize, rng: &mut PrngStream) -> DensityMatrix {
        match self {
            InputEnsemble::HaarPure => haar_random_pure(dim, rng),
            InputEnsemble::RandomMixed => random_mixed(dim, rng),
        }
    }
}

/// Draws a stream of `length` steps. Each block of `hold_steps` steps shares one
/// draw: `u` first, then (for `n_e > 1`) a Haar-random `2^n_e`-dimensional state.
pub fn generate_input_stream(length: usize, n_e: usize, hold_steps: usize, rng: &mut PrngStream) -> Result<InputStream> {
    generate_input_stream_with(length, n_e, hold_steps, InputEnsemble::HaarPure, rng)
}

/// [`generate_input_stream`] with a chosen ensemble for multi-qubit inputs.
pub fn generate_input_stream_with(
    length: usize,
    n_e: usize,
    hold_steps: usize,
    ensemble: InputEnsemble,
    rng: &mut PrngStream,
) -> Result<InputStream> {
    if hold_steps == 0 {
        return Err(Error::config("stream.hold_steps", "must be >= 1"));
    }
    if n_e == 0 {
        return Err(Error::config("reservoir.n_e", "must be >= 1"));
    }
    let mut u = Vec::with_capacity(length);
    let mut beta = Vec::with_capacity(length);
    while u.len() < length {
        let un = rng.uniform();
        let bn = if n_e == 1 { qubit_from_u(un) } else { ensemble.sample(1 << n_e, rng) };
        for _ in 0..hold_steps.min(length - u.len()) {
            u.push(un);
            beta.push(bn.clone());
        }
    }
    let p = narma_p(&u, &NarmaParams::default())?;
    Ok(InputStream { u, beta, p, bits: None, hold_steps })
}

/// Stream of fair coin flips `b_n` with `beta_n = |b_n><b_n|` and `u_n = 1 - b_n`.
pub fn generate_bit_stream(length: usize, hold_steps: usize, rng: &mut PrngStream) -> Result<InputStream> {
    if hold_steps == 0 {
        return Err(Error::config("stream.hold_steps", "must be >= 1"));
    }
    let mut bits = Vec::with_capacity(length);
    while bits.len() < length {
        let b = u8::from(rng.coin());
        for _ in 0..hold_steps.min(length - bits.len()) {
            bits.push(b);
        }
    }
    let u: Vec<f64> = bits.iter().map(|&b| 1.0 - f64::from(b)).collect();
    let beta = bits.iter().map(|&b| DensityMatrix::basis(2, b as usize).expect("qubit basis")).collect();
    let p = narma_p(&u, &NarmaParams::default())?;
    Ok(InputStream { u, beta, p, bits: Some(bits), hold_steps })
}

/// `p I/D + (1 − p) β`.
pub fn depolarize(beta: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p });
    }
    let d = beta.dim() as f64;
    let out = beta.matrix().mapv(|z| z * (1.0 - p)) + identity(beta.dim()).mapv(|z| z * (p / d));
    Ok(DensityMatrix::new_unchecked(out))
}

/// Parameters of the two-qubit entangling unitary `exp(−i t H)`,
/// `H = h12 sx⊗sx + (2 + g1) sz⊗I + (2 + g2) I⊗sz`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntanglerParams {
    pub h12: f64,
    pub g1: f64,
    pub g2: f64,
    pub t: f64,
}

impl EntanglerParams {
    /// `h12, g1, g2 ~ U[−0.5, 0.5]`, `t = 10`.
    pub fn random(rng: &mut PrngStream) -> Self {
        let h12 = rng.uniform_range(-0.5, 0.5);
        let g1 = rng.uniform_range(-0.5, 0.5);
        let g2 = rng.uniform_range(-0.5, 0.5);
        EntanglerParams { h12, g1, g2, t: 10.0 }
    }

    pub fn hamiltonian(&self) -> CMatrix {
        let (x, z, i2) = (pauli(Axis::X), pauli(Axis::Z), identity(2));
        kron(&x, &x).mapv(|v| v * self.h12)
            + kron(&z, &i2).mapv(|v| v * (2.0 + self.g1))
            + kron(&i2, &z).mapv(|v| v * (2.0 + self.g2))
    }

    pub fn unitary(&self) -> Result<CMatrix> {
        Ok(Propagator::new(&self.hamiltonian())?.at(self.t))
    }
}

/// Declarative description of a temporal target map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemporalMapSpec {
    /// `Ω_{n−d}(β_{n−d})`.
    Delayed { delay: usize },
    /// Uniform average of `Ω_{n−i}(β_{n−i})` for `i = 0..=d`.
    MovingAverage { delay: usize },
    /// Weights `η_i = d + 1 − i`.
    WeightedAverage { delay: usize },
    /// `(1/Z) Σ_i η_i Ω_{n−i}(β_{n−i})`, `weights[i] = η_i`.
    ConvexMixture { weights: Vec<f64> },
    /// Switch of `Ω_{n−d_c}` and `Ω_{n−d_t}` on target `β_{n−d_t}` with control `β_{n−d_c}`.
    QuantumSwitch { control_delay: usize, target_delay: usize },
    /// `U (Ω_{n−d1}(β_{n−d1}) ⊗ Ω_{n−d2}(β_{n−d2})) U†`. Parameters are drawn per trial when absent.
    Entangler {
        delays: [usize; 2],
        #[serde(default)]
        params: Option<EntanglerParams>,
    },
    /// Bell state selected by the bits `b_{n−d1}, b_{n−d2}`.
    BellCreator { delays: [usize; 2] },
    /// `β_{n−d}` with no channel; used for memory profiles.
    DelayReconstruction { delay: usize },
}

impl TemporalMapSpec {
    pub fn max_delay(&self) -> usize {
        match self {
            TemporalMapSpec::Delayed { delay }
            | TemporalMapSpec::MovingAverage { delay }
            | TemporalMapSpec::WeightedAverage { delay }
            | TemporalMapSpec::DelayReconstruction { delay } => *delay,
            TemporalMapSpec::ConvexMixture { weights } => weights.len().saturating_sub(1),
            TemporalMapSpec::QuantumSwitch { control_delay, target_delay } => (*control_delay).max(*target_delay),
            TemporalMapSpec::Entangler { delays, .. } | TemporalMapSpec::BellCreator { delays } => delays[0].max(delays[1]),
        }
    }

    /// Output dimension for inputs of dimension `input_dim`.
    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            TemporalMapSpec::QuantumSwitch { .. } => 2 * input_dim,
            TemporalMapSpec::Entangler { .. } | TemporalMapSpec::BellCreator { .. } => 4,
            _ => input_dim,
        }
    }

    /// Subsystem dimension used for negativity, when the output is bipartite.
    pub fn bipartite_dim_a(&self) -> Option<usize> {
        match self {
            TemporalMapSpec::Entangler { .. } | TemporalMapSpec::BellCreator { .. } => Some(2),
            _ => None,
        }
    }

    pub fn uses_bits(&self) -> bool {
        matches!(self, TemporalMapSpec::BellCreator { .. })
    }

    pub fn validate(&self, n_e: usize) -> Result<()> {
        match self {
            TemporalMapSpec::ConvexMixture { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::config("task.weights", "must be non-empty, finite and non-negative"));
                }
                if weights.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::config("task.weights", "must not all be zero"));
                }
            }
            TemporalMapSpec::QuantumSwitch { .. }
            | TemporalMapSpec::Entangler { .. }
            | TemporalMapSpec::BellCreator { .. } => {
                if n_e != 1 {
                    return Err(Error::config("reservoir.n_e", "this task needs single-qubit inputs (n_e = 1)"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Fills in entangler parameters from `rng` if they are absent.
    pub fn resolve(&self, rng: &mut PrngStream) -> TemporalMapSpec {
        match self {
            TemporalMapSpec::Entangler { delays, params: None } => {
                TemporalMapSpec::Entangler { delays: *delays, params: Some(EntanglerParams::random(rng)) }
            }
            other => other.clone(),
        }
    }
}

fn channel_output(stream: &InputStream, n: usize) -> Result<DensityMatrix> {
    depolarize(&stream.beta[n], stream.p[n])
}

fn convex_mixture(stream: &InputStream, weights: &[f64], n: usize) -> Result<DensityMatrix> {
    let z: f64 = weights.iter().sum();
    let dim = stream.input_dim();
    let mut acc = CMatrix::zeros((dim, dim));
    for (i, &w) in weights.iter().enumerate() {
        acc = acc + channel_output(stream, n - i)?.matrix().mapv(|x| x * w);
    }
    Ok(DensityMatrix::new_unchecked(acc.mapv(|x| x / z)))
}

/// Target state of `spec` at 0-based time index `n` (requires `n >= max_delay`).
pub fn apply_temporal_map(spec: &TemporalMapSpec, stream: &InputStream, n: usize) -> Result<DensityMatrix> {
    let required = spec.max_delay();
    if n < required {
        return Err(Error::UndefinedPrefix { index: n, required });
    }
    if n >= stream.len() {
        return Err(Error::IndexOutOfRange { index: n, max: stream.len().saturating_sub(1) });
    }
    match spec {
        TemporalMapSpec::Delayed { delay } => channel_output(stream, n - delay),
        TemporalMapSpec::DelayReconstruction { delay } => Ok(stream.beta[n - delay].clone()),
        TemporalMapSpec::MovingAverage { delay } => convex_mixture(stream, &vec![1.0; delay + 1], n),
        TemporalMapSpec::WeightedAverage { delay } => {
            let w: Vec<f64> = (0..=*delay).map(|i| (delay + 1 - i) as f64).collect();
            convex_mixture(stream, &w, n)
        }
        TemporalMapSpec::ConvexMixture { weights } => convex_mixture(stream, weights, n),
        TemporalMapSpec::QuantumSwitch { control_delay, target_delay } => {
            temporal_switch_target(stream, *control_delay, *target_delay, n)
        }
        TemporalMapSpec::Entangler { delays, params } => {
            let params = params.ok_or_else(|| Error::config("task.params", "entangler parameters unresolved"))?;
            entangler_target(stream, delays[0], delays[1], &params, n)
        }
        TemporalMapSpec::BellCreator { delays } => {
            let bits = stream
                .bits
                .as_ref()
                .ok_or_else(|| Error::config("task", "the Bell task needs a bit stream"))?;
            bell_target(bits, delays[0], delays[1], n)
        }
    }
}

/// Quantum switch of two depolarizing channels with strengths `q1`, `q2` on `rho`,
/// control `sqrt(u_c)|0> + sqrt(1−u_c)|1>`. Output is `target ⊗ control`.
pub fn quantum_switch_output(rho: &DensityMatrix, u_c: f64, q1: f64, q2: f64) -> Result<DensityMatrix> {
    for (name, v) in [("u_c", u_c), ("q1", q1), ("q2", q2)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { name, value: v });
        }
    }
    let d = rho.dim();
    let df = d as f64;
    let alpha = u_c;
    let seq = depolarize(&depolarize(rho, q2)?, q1)?;
    let a00 = seq.matrix().mapv(|z| z * alpha);
    let a11 = seq.matrix().mapv(|z| z * (1.0 - alpha));
    let coh = (alpha * (1.0 - alpha)).sqrt();
    let a01 = rho.matrix().mapv(|z| z * (coh * (q1 * q2 / (df * df) + (1.0 - q1) * (1.0 - q2))))
        + identity(d).mapv(|z| z * (coh * (q1 + q2 - 2.0 * q1 * q2) / df));
    let mut out = CMatrix::zeros((2 * d, 2 * d));
    for i in 0..d {
        for j in 0..d {
            out[[2 * i, 2 * j]] = a00[[i, j]];
            out[[2 * i, 2 * j + 1]] = a01[[i, j]];
            out[[2 * i + 1, 2 * j]] = a01[[i, j]];
            out[[2 * i + 1, 2 * j + 1]] = a11[[i, j]];
        }
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// Switch target `S(Ω_{n−d_c}, Ω_{n−d_t})(β_{n−d_t} ⊗ β_{n−d_c})`.
pub fn temporal_switch_target(stream: &InputStream, d_c: usize, d_t: usize, n: usize) -> Result<DensityMatrix> {
    let required = d_c.max(d_t);
    if n < required {
        return Err(Error::UndefinedPrefix { index: n, required });
    }
    quantum_switch_output(&stream.beta[n - d_t], stream.u[n - d_c], stream.p[n - d_c], stream.p[n - d_t])
}

/// Entangler target at time `n`.
pub fn entangler_target(stream: &InputStream, d1: usize, d2: usize, params: &EntanglerParams, n: usize) -> Result<DensityMatrix> {
    let required = d1.max(d2);
    if n < required {
        return Err(Error::UndefinedPrefix { index: n, required });
    }
    let a = channel_output(stream, n - d1)?;
    let b = channel_output(stream, n - d2)?;
    if a.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: a.dim() });
    }
    let joint = DensityMatrix::new_unchecked(kron(a.matrix(), b.matrix()));
    Ok(joint.conjugate_by(&params.unitary()?))
}

/// `(|0, b2> + (−1)^{b1} |1, 1−b2>) / sqrt(2)` with `b1 = bits[n−d1]`, `b2 = bits[n−d2]`.
pub fn bell_target(bits: &[u8], d1: usize, d2: usize, n: usize) -> Result<DensityMatrix> {
    let required = d1.max(d2);
    if n < required {
        return Err(Error::UndefinedPrefix { index: n, required });
    }
    bell_state(bits[n - d1], bits[n - d2])
}

/// Bell state for the bit pair `(b1, b2)`; basis index of `|a, b>` is `2a + b`.
pub fn bell_state(b1: u8, b2: u8) -> Result<DensityMatrix> {
    if b1 > 1 || b2 > 1 {
        return Err(Error::OutOfRange { name: "bit", value: f64::from(b1.max(b2)) });
    }
    let h = 1.0 / 2f64.sqrt();
    let sign = if b1 == 0 { 1.0 } else { -1.0 };
    let mut psi = Array1::from(vec![c(0.0, 0.0); 4]);
    psi[b2 as usize] = c(h, 0.0);
    psi[2 + (1 - b2) as usize] = c(sign * h, 0.0);
    DensityMatrix::pure(&psi)
}
