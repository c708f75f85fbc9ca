//! Small dense linear-algebra helpers on complex matrices.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eigh, EigValsh, UPLO};
use num_complex::Complex64;

use crate::error::Result;

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;

/// Eigenvalues below this are treated as exact zeros when taking square roots.
pub const SQRT_EIG_FLOOR: f64 = 1e-14;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn identity(dim: usize) -> CMatrix {
    Array2::from_diag_elem(dim, c(1.0, 0.0))
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + &dagger(m)).mapv(|z| z * 0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().sum()
}

/// Largest elementwise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> Result<(Array1<f64>, CMatrix)> {
    // ndarray-linalg 0.18 hands back the complex conjugate of the eigenvectors.
    let (w, v) = m.eigh(UPLO::Lower)?;
    Ok((w, v.mapv(|z| z.conj())))
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn eigvalsh(m: &CMatrix) -> Result<Array1<f64>> {
    Ok(m.eigvalsh(UPLO::Lower)?)
}

/// `V diag(w) V†`.
pub fn reassemble(w: &Array1<f64>, v: &CMatrix) -> CMatrix {
    let mut scaled = v.clone();
    for (mut col, &x) in scaled.axis_iter_mut(Axis(1)).zip(w.iter()) {
        col.mapv_inplace(|z| z * x);
    }
    scaled.dot(&dagger(v))
}

/// Eigenvalues of a small Hermitian matrix stored row-major, by cyclic Jacobi rotations.
///
/// The buffer is overwritten. Intended for dimensions up to a few tens where a
/// LAPACK call costs more in setup than in arithmetic.
pub fn jacobi_eigvalsh(a: &mut [C64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let tol = scale * 1e-32;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let phase = apq / mag;
                // Q = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on (p, q); A <- Q† A Q.
                let qpp = c(cs, 0.0);
                let qpq = c(sn, 0.0);
                let qqp = -phase.conj() * sn;
                let qqq = phase.conj() * cs;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * qpp + akq * qqp;
                    a[k * n + q] = akp * qpq + akq * qqq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = qpp.conj() * apk + qqp.conj() * aqk;
                    a[q * n + k] = qpq.conj() * apk + qqq.conj() * aqk;
                }
                a[p * n + q] = c(0.0, 0.0);
                a[q * n + p] = c(0.0, 0.0);
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
            }
        }
    }
    (0..n).map(|i| a[i * n + i].re).collect()
}

/// Sum of square roots of the eigenvalues of a PSD Hermitian `n x n` matrix (row-major).
pub fn trace_sqrt_psd(gram: &mut [C64], n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => gram[0].re.max(0.0).sqrt(),
        2 => {
            let t = gram[0].re + gram[3].re;
            let det = gram[0].re * gram[3].re - gram[1].norm_sqr();
            (t.max(0.0) + 2.0 * det.max(0.0).sqrt()).sqrt()
        }
        _ => jacobi_eigvalsh(gram, n)
            .into_iter()
            .map(|x| x.max(0.0).sqrt())
            .sum(),
    }
}

/// Factor `G` (stored column-major, `dim x rank`) with `G G† = rho`, dropping
/// eigenvalues below [`SQRT_EIG_FLOOR`].
#[derive(Clone, Debug)]
pub struct SqrtFactor {
    dim: usize,
    rank: usize,
    cols: Vec<C64>,
}

impl SqrtFactor {
    pub fn new(rho: &CMatrix) -> Result<Self> {
        let (w, v) = eigh(rho)?;
        let dim = rho.nrows();
        let mut cols = Vec::with_capacity(dim * dim);
        let mut rank = 0;
        for (k, &lam) in w.iter().enumerate() {
            if lam > SQRT_EIG_FLOOR {
                let s = lam.sqrt();
                cols.extend(v.column(k).iter().map(|z| z * s));
                rank += 1;
            }
        }
        Ok(SqrtFactor { dim, rank, cols })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `tr sqrt(sqrt(b) a sqrt(b))`, evaluated as the nuclear norm of `G_a† G_b`.
    pub fn fidelity_with(&self, other: &SqrtFactor) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let (ra, rb, d) = (self.rank, other.rank, self.dim);
        if ra == 0 || rb == 0 {
            return 0.0;
        }
        // cmat[i * rb + j] = <g_a_i, g_b_j>
        let mut cmat = vec![c(0.0, 0.0); ra * rb];
        for i in 0..ra {
            let gi = &self.cols[i * d..(i + 1) * d];
            for j in 0..rb {
                let gj = &other.cols[j * d..(j + 1) * d];
                let mut acc = c(0.0, 0.0);
                for k in 0..d {
                    acc += gi[k].conj() * gj[k];
                }
                cmat[i * rb + j] = acc;
            }
        }
        if ra == 1 || rb == 1 {
            return cmat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().min(1.0);
        }
        let f = if ra <= rb {
            let mut gram = vec![c(0.0, 0.0); ra * ra];
            for i in 0..ra {
                for j in 0..ra {
                    let mut acc = c(0.0, 0.0);
                    for k in 0..rb {
                        acc += cmat[i * rb + k] * cmat[j * rb + k].conj();
                    }
                    gram[i * ra + j] = acc;
                }
            }
            trace_sqrt_psd(&mut gram, ra)
        } else {
            let mut gram = vec![c(0.0, 0.0); rb * rb];
            for i in 0..rb {
                for j in 0..rb {
                    let mut acc = c(0.0, 0.0);
                    for k in 0..ra {
                        acc += cmat[k * rb + i].conj() * cmat[k * rb + j];
                    }
                    gram[i * rb + j] = acc;
                }
            }
            trace_sqrt_psd(&mut gram, rb)
        };
        f.clamp(0.0, 1.0)
    }
}
