//! Linear readout: target vectorization, ridge regression, and state reconstruction.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use ndarray_linalg::{JobSvd, SVDDC};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c, project_spectrahedron, CMatrix, DensityMatrix};
use crate::reservoir::FeatureMatrix;

/// Default ridge coefficient.
pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Real parts row-major, then imaginary parts row-major.
pub fn vectorize_density(rho: &DensityMatrix) -> Array1<f64> {
    let m = rho.matrix();
    let n = m.len();
    let mut v = Array1::zeros(2 * n);
    for (k, z) in m.iter().enumerate() {
        v[k] = z.re;
        v[n + k] = z.im;
    }
    v
}

/// Inverse of [`vectorize_density`] followed by projection onto the density matrices.
pub fn devectorize_density(v: ArrayView1<'_, f64>, d_out: usize) -> Result<DensityMatrix> {
    let n = d_out * d_out;
    if v.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: v.len() });
    }
    let m = CMatrix::from_shape_fn((d_out, d_out), |(i, j)| {
        let k = i * d_out + j;
        c(v[k], v[n + k])
    });
    project_spectrahedron(&m)
}

/// Stacks vectorized states as rows.
pub fn target_matrix(states: &[DensityMatrix]) -> Array2<f64> {
    let width = states.first().map_or(0, |s| 2 * s.dim() * s.dim());
    let mut out = Array2::zeros((states.len(), width));
    for (mut row, s) in out.rows_mut().into_iter().zip(states) {
        row.assign(&vectorize_density(s));
    }
    out
}

/// Trained weights mapping a feature row to a vectorized output state.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutModel {
    /// `feature_dim x 2 d_out^2`.
    pub weights: Array2<f64>,
    pub d_out: usize,
    pub ridge: f64,
}

/// Flat serialized layout of a [`ReadoutModel`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadoutFile {
    feature_dim: usize,
    output_dim: usize,
    d_out: usize,
    ridge: f64,
    /// Row-major `feature_dim x output_dim`.
    weights: Vec<f64>,
}

impl ReadoutModel {
    pub fn feature_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ReadoutFile {
            feature_dim: self.weights.nrows(),
            output_dim: self.weights.ncols(),
            d_out: self.d_out,
            ridge: self.ridge,
            weights: self.weights.iter().copied().collect(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ReadoutFile = serde_json::from_str(s).map_err(|e| Error::Serde(e.to_string()))?;
        if f.output_dim != 2 * f.d_out * f.d_out {
            return Err(Error::DimensionMismatch { expected: 2 * f.d_out * f.d_out, found: f.output_dim });
        }
        let weights = Array2::from_shape_vec((f.feature_dim, f.output_dim), f.weights)
            .map_err(|e| Error::Serde(e.to_string()))?;
        Ok(ReadoutModel { weights, d_out: f.d_out, ridge: f.ridge })
    }
}

/// Ridge regression `W = (XᵀX + ηI)⁻¹ XᵀY`, evaluated through the thin SVD of `X`.
pub fn fit_ridge(features: &FeatureMatrix, targets: &Array2<f64>, ridge: f64) -> Result<ReadoutModel> {
    let w = ridge_solve(features.data(), targets, ridge)?;
    let out = targets.ncols();
    let d_out = ((out / 2) as f64).sqrt().round() as usize;
    if 2 * d_out * d_out != out {
        return Err(Error::DimensionMismatch { expected: 2 * d_out * d_out, found: out });
    }
    Ok(ReadoutModel { weights: w, d_out, ridge })
}

/// Solves the ridge problem for a generic design matrix.
pub fn ridge_solve(x: &Array2<f64>, y: &Array2<f64>, ridge: f64) -> Result<Array2<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.nrows() });
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::OutOfRange { name: "ridge", value: ridge });
    }
    let f = x.ncols();
    if x.nrows() == 0 {
        if ridge == 0.0 {
            return Err(Error::SingularSystem);
        }
        return Ok(Array2::zeros((f, y.ncols())));
    }
    let (u, s, vt) = x.svddc(JobSvd::Some)?;
    let (u, vt) = (u.expect("thin U requested"), vt.expect("thin Vt requested"));
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let rank_tol = smax * (x.nrows().max(f) as f64) * f64::EPSILON;
    if ridge == 0.0 && (s.len() < f || s.iter().any(|&v| v <= rank_tol)) {
        return Err(Error::SingularSystem);
    }
    let gain = s.mapv(|v| v / (v * v + ridge));
    let mut uty = u.t().dot(y);
    for (mut row, g) in uty.axis_iter_mut(Axis(0)).zip(gain.iter()) {
        row.mapv_inplace(|z| z * g);
    }
    Ok(vt.t().dot(&uty))
}

/// Raw predictions `X W` (one vectorized state per row).
pub fn predict_vectors(model: &ReadoutModel, features: &FeatureMatrix) -> Result<Array2<f64>> {
    if features.n_cols() != model.feature_dim() {
        return Err(Error::DimensionMismatch { expected: model.feature_dim(), found: features.n_cols() });
    }
    Ok(features.data().dot(&model.weights))
}

/// Predicted states, projected onto the density matrices.
pub fn predict_states(model: &ReadoutModel, features: &FeatureMatrix) -> Result<Vec<DensityMatrix>> {
    let raw = predict_vectors(model, features)?;
    raw.rows().into_iter().map(|r| devectorize_density(r, model.d_out)).collect()
}

/// Memoryless features: the vectorized input state plus bias.
pub fn baseline_features(inputs: &[DensityMatrix]) -> FeatureMatrix {
    FeatureMatrix::from_measurements(target_matrix(inputs))
}
