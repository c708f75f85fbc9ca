//! Density matrices, observables, tensor operations, state metrics and sampling.

pub mod linalg;

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use linalg::{c, dagger, frobenius, identity, C64, CMatrix, SqrtFactor};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates and wraps `data`.
    pub fn new(data: CMatrix) -> Result<Self> {
        validate_density(&data)?;
        Ok(DensityMatrix { data })
    }

    /// Wraps `data` without validation. The caller guarantees the invariants.
    pub fn new_unchecked(data: CMatrix) -> Self {
        DensityMatrix { data }
    }

    /// `|psi><psi|` for the normalized `psi`.
    pub fn pure(psi: &Array1<C64>) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi.mapv(|z| z / norm);
        let n = v.len();
        let data = Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj());
        Ok(DensityMatrix { data })
    }

    /// Computational basis projector `|k><k|`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, max: dim.saturating_sub(1) });
        }
        let mut data = CMatrix::zeros((dim, dim));
        data[[k, k]] = c(1.0, 0.0);
        Ok(DensityMatrix { data })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix { data: identity(dim).mapv(|z| z / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Re-checks the invariants (useful after unchecked construction).
    pub fn validate(&self) -> Result<()> {
        validate_density(&self.data)
    }

    /// `U rho U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> DensityMatrix {
        DensityMatrix { data: u.dot(&self.data).dot(&dagger(u)) }
    }
}

fn validate_density(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidState(format!("shape {:?} is not square", m.shape())));
    }
    let herm = linalg::hermiticity_defect(m);
    if herm > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!("hermiticity defect {herm:e}")));
    }
    let tr = linalg::trace(m);
    if (tr - c(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let min = linalg::eigvalsh(&linalg::hermitize(m))?[0];
    if min < -PSD_TOL {
        return Err(Error::InvalidState(format!("minimum eigenvalue {min:e}")));
    }
    Ok(())
}

/// A Hermitian observable with a label such as `sz_3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    data: CMatrix,
    label: String,
}

impl Observable {
    pub fn new(data: CMatrix, label: impl Into<String>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidState("observable is not square".into()));
        }
        if linalg::hermiticity_defect(&data) > 1e-12 {
            return Err(Error::InvalidState("observable is not Hermitian".into()));
        }
        Ok(Observable { data, label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Re tr(O rho)`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        let (o, r) = (&self.data, rho.matrix());
        let n = o.nrows();
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += o[[i, j]] * r[[j, i]];
            }
        }
        acc.re
    }
}

/// Seeded random stream (ChaCha20, 20 rounds). Every random draw in the crate goes through it.
#[derive(Clone, Debug)]
pub struct PrngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl PrngStream {
    pub const ALGORITHM: &'static str = "chacha20";

    pub fn new(seed: u64) -> Self {
        PrngStream { seed, rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random::<bool>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Single-qubit Pauli matrix.
pub fn pauli(axis: Axis) -> CMatrix {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match axis {
        Axis::X => ndarray::array![[o, l], [l, o]],
        Axis::Y => ndarray::array![[o, -i], [i, o]],
        Axis::Z => ndarray::array![[l, o], [o, -l]],
    }
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMatrix::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                .assign(&b.mapv(|z| z * aij));
        }
    }
    out
}

/// Pauli operator on qubit `site` (1-based, qubit 1 leftmost) of an `n_qubits` register.
pub fn pauli_on_site(axis: Axis, site: usize, n_qubits: usize) -> Result<Observable> {
    if site == 0 || site > n_qubits {
        return Err(Error::IndexOutOfRange { index: site, max: n_qubits });
    }
    let mut m = identity(1);
    for q in 1..=n_qubits {
        let factor = if q == site { pauli(axis) } else { identity(2) };
        m = kron(&m, &factor);
    }
    let name = match axis {
        Axis::X => "sx",
        Axis::Y => "sy",
        Axis::Z => "sz",
    };
    Observable::new(m, format!("{name}_{site}"))
}

/// Partial trace over the right tensor factor of a `dim_s * dim_e` matrix.
pub fn partial_trace_env_matrix(m: &CMatrix, dim_s: usize, dim_e: usize) -> Result<CMatrix> {
    let n = dim_s * dim_e;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
    }
    Ok(Array2::from_shape_fn((dim_s, dim_s), |(i, j)| {
        (0..dim_e).map(|e| m[[i * dim_e + e, j * dim_e + e]]).sum()
    }))
}

/// `Tr_E` of a state on `S (left) ⊗ E (right)`.
pub fn partial_trace_env(rho_se: &DensityMatrix, dim_s: usize, dim_e: usize) -> Result<DensityMatrix> {
    partial_trace_env_matrix(rho_se.matrix(), dim_s, dim_e).map(DensityMatrix::new_unchecked)
}

/// Uhlmann fidelity `tr sqrt(sqrt(sigma) rho sqrt(sigma))`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let a = SqrtFactor::new(rho.matrix())?;
    let b = SqrtFactor::new(sigma.matrix())?;
    Ok(a.fidelity_with(&b))
}

/// Trace norm of `rho - sigma`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    trace_norm_hermitian(&(rho.matrix() - sigma.matrix()))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> Result<f64> {
    Ok(linalg::eigvalsh(&linalg::hermitize(m))?.iter().map(|x| x.abs()).sum())
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("NaN in simplex projection"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Frobenius-nearest density matrix to the Hermitian part of `a`.
pub fn project_spectrahedron(a: &CMatrix) -> Result<DensityMatrix> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::InvalidState(format!("shape {:?} is not square", a.shape())));
    }
    let (w, v) = linalg::eigh(&linalg::hermitize(a))?;
    let p = Array1::from(simplex_projection(w.as_slice().expect("contiguous")));
    let mut data = linalg::reassemble(&p, &v);
    // Symmetrize rounding so the output is exactly Hermitian.
    data = linalg::hermitize(&data);
    Ok(DensityMatrix::new_unchecked(data))
}

/// Partial transpose over the left factor of dimension `dim_a`.
pub fn partial_transpose_a(m: &CMatrix, dim_a: usize) -> Result<CMatrix> {
    let n = m.nrows();
    if dim_a == 0 || n % dim_a != 0 {
        return Err(Error::DimensionMismatch { expected: dim_a, found: n });
    }
    let dim_b = n / dim_a;
    Ok(Array2::from_shape_fn((n, n), |(r, col)| {
        let (i, k) = (r / dim_b, r % dim_b);
        let (j, l) = (col / dim_b, col % dim_b);
        m[[j * dim_b + k, i * dim_b + l]]
    }))
}

/// `(‖rho^{T_A}‖₁ − 1) / 2`.
pub fn negativity(rho: &DensityMatrix, dim_a: usize) -> Result<f64> {
    let pt = partial_transpose_a(rho.matrix(), dim_a)?;
    Ok(((trace_norm_hermitian(&pt)? - 1.0) / 2.0).max(0.0))
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn haar_random_pure(dim: usize, rng: &mut PrngStream) -> DensityMatrix {
    assert!(dim >= 1, "dimension must be positive");
    let psi: Array1<C64> = (0..dim).map(|_| c(rng.normal(), rng.normal())).collect();
    DensityMatrix::pure(&psi).expect("gaussian vector is nonzero almost surely")
}

/// Random full-rank mixed state `A A† / tr(A A†)` with complex Gaussian `A`.
pub fn random_mixed(dim: usize, rng: &mut PrngStream) -> DensityMatrix {
    let a = CMatrix::from_shape_fn((dim, dim), |_| c(rng.normal(), rng.normal()));
    let m = a.dot(&dagger(&a));
    let tr = linalg::trace(&m).re;
    DensityMatrix::new_unchecked(linalg::hermitize(&m.mapv(|z| z / tr)))
}

/// Haar-random unitary via QR of a complex Ginibre matrix, with phase fix.
pub fn haar_random_unitary(dim: usize, rng: &mut PrngStream) -> CMatrix {
    use ndarray_linalg::QR;
    let a = CMatrix::from_shape_fn((dim, dim), |_| c(rng.normal(), rng.normal()));
    let (q, r) = a.qr().expect("QR of a Ginibre matrix");
    let mut q = q;
    for j in 0..dim {
        let d = r[[j, j]];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        q.column_mut(j).mapv_inplace(|z| z * ph);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        frobenius(&(a - b)) <= tol
    }

    #[test]
    fn kron_examples() {
        assert!(close(&kron(&identity(2), &identity(2)), &identity(4), 0.0));
        let d1 = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(2.0, 0.0)]));
        let d2 = Array2::from_diag(&ndarray::arr1(&[c(3.0, 0.0), c(4.0, 0.0)]));
        let want = Array2::from_diag(&ndarray::arr1(&[3.0, 4.0, 6.0, 8.0].map(|x| c(x, 0.0))));
        assert!(close(&kron(&d1, &d2), &want, 0.0));
    }

    #[test]
    fn kron_matches_index_loop() {
        let (x, z) = (pauli(Axis::X), pauli(Axis::Z));
        let k = kron(&x, &z);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[[2 * i + p, 2 * j + q]], x[[i, j]] * z[[p, q]]);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let h = 1.0 / 2f64.sqrt();
        let psi = ndarray::arr1(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]);
        let bell = DensityMatrix::pure(&psi).unwrap();
        let red = partial_trace_env(&bell, 2, 2).unwrap();
        assert!(close(red.matrix(), DensityMatrix::maximally_mixed(2).matrix(), 1e-15));
        assert!(partial_trace_env(&bell, 3, 2).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = PrngStream::new(1);
        let a = random_mixed(3, &mut rng);
        let b = random_mixed(2, &mut rng);
        let joint = DensityMatrix::new_unchecked(kron(a.matrix(), b.matrix()));
        assert!(close(partial_trace_env(&joint, 3, 2).unwrap().matrix(), a.matrix(), 1e-14));
    }

    #[test]
    fn fidelity_examples() {
        let z0 = DensityMatrix::basis(2, 0).unwrap();
        let z1 = DensityMatrix::basis(2, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(fidelity(&z0, &z1).unwrap(), 0.0);
        assert!((fidelity(&z0, &mixed).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        let mut rng = PrngStream::new(2);
        let r = random_mixed(4, &mut rng);
        assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&r, &mixed).is_err());
    }

    #[test]
    fn fidelity_against_eigen_route() {
        // tr sqrt(sqrt(s) r sqrt(s)) by explicit matrix square roots.
        let mut rng = PrngStream::new(4);
        for _ in 0..30 {
            let r = random_mixed(3, &mut rng);
            let s = random_mixed(3, &mut rng);
            let (w, v) = linalg::eigh(s.matrix()).unwrap();
            let sq = linalg::reassemble(&w.mapv(|x| x.max(0.0).sqrt()), &v);
            let inner = sq.dot(r.matrix()).dot(&sq);
            let want: f64 = linalg::eigvalsh(&linalg::hermitize(&inner))
                .unwrap()
                .iter()
                .map(|x| x.max(0.0).sqrt())
                .sum();
            assert!((fidelity(&r, &s).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_distance_examples() {
        let z0 = DensityMatrix::basis(2, 0).unwrap();
        let z1 = DensityMatrix::basis(2, 1).unwrap();
        assert!((trace_distance(&z0, &z1).unwrap() - 2.0).abs() < 1e-14);
        assert!(trace_distance(&z0, &z0).unwrap() < 1e-15);
    }

    #[test]
    fn simplex_projection_example() {
        let p = simplex_projection(&[1.2, -0.2]);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        let q = simplex_projection(&[0.25, 0.25, 0.5]);
        assert_eq!(q, vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn projection_examples() {
        let a = Array2::from_diag(&ndarray::arr1(&[c(1.2, 0.0), c(-0.2, 0.0)]));
        let p = project_spectrahedron(&a).unwrap();
        assert!(close(p.matrix(), DensityMatrix::basis(2, 0).unwrap().matrix(), 1e-14));
        let zero = CMatrix::zeros((3, 3));
        let p0 = project_spectrahedron(&zero).unwrap();
        assert!(close(p0.matrix(), DensityMatrix::maximally_mixed(3).matrix(), 1e-14));
        let mut rng = PrngStream::new(8);
        let r = random_mixed(4, &mut rng);
        assert!(close(project_spectrahedron(r.matrix()).unwrap().matrix(), r.matrix(), 1e-12));
    }

    #[test]
    fn negativity_examples() {
        let h = 1.0 / 2f64.sqrt();
        let psi = ndarray::arr1(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]);
        let bell = DensityMatrix::pure(&psi).unwrap();
        assert!((negativity(&bell, 2).unwrap() - 0.5).abs() < 1e-12);
        let mut rng = PrngStream::new(11);
        let a = random_mixed(2, &mut rng);
        let b = random_mixed(2, &mut rng);
        let prod = DensityMatrix::new_unchecked(kron(a.matrix(), b.matrix()));
        assert!(negativity(&prod, 2).unwrap() < 1e-12);
        assert!(negativity(&bell, 3).is_err());
    }

    #[test]
    fn pauli_on_site_examples() {
        let z = pauli_on_site(Axis::Z, 1, 1).unwrap();
        assert!(close(z.matrix(), &pauli(Axis::Z), 0.0));
        let x2 = pauli_on_site(Axis::X, 2, 2).unwrap();
        assert!(close(x2.matrix(), &kron(&identity(2), &pauli(Axis::X)), 0.0));
        assert_eq!(x2.label(), "sx_2");
        for n in 1..=4 {
            for j in 1..=n {
                let o = pauli_on_site(Axis::Z, j, n).unwrap();
                assert!(close(&o.matrix().dot(o.matrix()), &identity(1 << n), 0.0));
            }
        }
        assert!(pauli_on_site(Axis::Z, 0, 2).is_err());
        assert!(pauli_on_site(Axis::Z, 3, 2).is_err());
    }

    #[test]
    fn haar_state_properties() {
        let mut rng = PrngStream::new(21);
        let s = haar_random_pure(4, &mut rng);
        assert!((s.purity() - 1.0).abs() < 1e-10);
        s.validate().unwrap();
        let again = haar_random_pure(4, &mut PrngStream::new(21));
        assert_eq!(s, again);
    }

    #[test]
    fn haar_mean_is_maximally_mixed() {
        let mut rng = PrngStream::new(33);
        let n = 10_000;
        let mut acc = CMatrix::zeros((2, 2));
        for _ in 0..n {
            acc = acc + haar_random_pure(2, &mut rng).matrix();
        }
        let mean = acc.mapv(|z| z / n as f64);
        let target = DensityMatrix::maximally_mixed(2);
        for (a, b) in mean.iter().zip(target.matrix().iter()) {
            assert!((a - b).norm() < 0.02);
        }
    }

    #[test]
    fn validation_rejects_bad_states() {
        let bad_trace = identity(2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let neg = Array2::from_diag(&ndarray::arr1(&[c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityMatrix::new(neg).is_err());
        let mut nonherm = DensityMatrix::maximally_mixed(2).into_matrix();
        nonherm[[0, 1]] = c(0.1, 0.0);
        assert!(DensityMatrix::new(nonherm).is_err());
    }
}
