//! Scores: RMSF, state angles, distance correlation, memory capacity, negativity error.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{fidelity, negativity, DensityMatrix, SqrtFactor};
use crate::readout::{fit_ridge, predict_states, target_matrix};
use crate::reservoir::FeatureMatrix;

/// Self-covariances at or below this make the distance correlation zero.
pub const DEGENERATE_COVARIANCE: f64 = 1e-14;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// Per-step fidelities.
pub fn fidelities(targets: &[DensityMatrix], predictions: &[DensityMatrix]) -> Result<Vec<f64>> {
    check_lengths(targets.len(), predictions.len())?;
    targets.iter().zip(predictions).map(|(t, p)| fidelity(p, t)).collect()
}

/// Root mean square of fidelities.
pub fn rmsf(targets: &[DensityMatrix], predictions: &[DensityMatrix]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InvalidState("rmsf of an empty sequence".into()));
    }
    Ok(rmsf_from_fidelities(&fidelities(targets, predictions)?))
}

pub fn rmsf_from_fidelities(f: &[f64]) -> f64 {
    (f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt()
}

/// `arccos F(rho, sigma)`.
pub fn state_angle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(fidelity(rho, sigma)?.clamp(0.0, 1.0).acos())
}

fn factors(states: &[DensityMatrix]) -> Result<Vec<SqrtFactor>> {
    states.iter().map(|s| SqrtFactor::new(s.matrix())).collect()
}

/// Pairwise angle matrix with an exact zero diagonal.
pub fn angle_matrix(states: &[DensityMatrix]) -> Result<Array2<f64>> {
    Ok(angle_matrix_from_factors(&factors(states)?))
}

fn angle_matrix_from_factors(f: &[SqrtFactor]) -> Array2<f64> {
    let n = f.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| (0..n).map(|k| if k > j { f[j].fidelity_with(&f[k]).clamp(0.0, 1.0).acos() } else { 0.0 }).collect())
        .collect();
    let mut a = Array2::zeros((n, n));
    for j in 0..n {
        for k in (j + 1)..n {
            a[[j, k]] = rows[j][k];
            a[[k, j]] = rows[j][k];
        }
    }
    a
}

fn double_center(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows() as f64;
    let row = a.sum_axis(ndarray::Axis(1)) / n;
    let col = a.sum_axis(ndarray::Axis(0)) / n;
    let grand = row.sum() / n;
    Array2::from_shape_fn(a.dim(), |(j, k)| a[[j, k]] - row[j] - col[k] + grand)
}

fn v2(r: &Array2<f64>, s: &Array2<f64>) -> f64 {
    let n = r.nrows() as f64;
    r.iter().zip(s.iter()).map(|(a, b)| a * b).sum::<f64>() / (n * n)
}

/// Squared distance correlation of two distance matrices, clamped to `[0, 1]`.
pub fn distance_correlation_from_distances(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_lengths(a.nrows(), b.nrows())?;
    if a.nrows() < 2 {
        return Err(Error::InvalidState("distance correlation needs at least two samples".into()));
    }
    let (r, s) = (double_center(a), double_center(b));
    let (vab, vaa, vbb) = (v2(&r, &s), v2(&r, &r), v2(&s, &s));
    if vaa <= DEGENERATE_COVARIANCE || vbb <= DEGENERATE_COVARIANCE {
        return Ok(0.0);
    }
    let raw = vab / (vaa * vbb).sqrt();
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&raw), "R² = {raw} outside [0, 1]");
    Ok(raw.clamp(0.0, 1.0))
}

/// `R²` between two state sequences using the angle metric.
pub fn distance_correlation_sq(seq_a: &[DensityMatrix], seq_b: &[DensityMatrix]) -> Result<f64> {
    check_lengths(seq_a.len(), seq_b.len())?;
    distance_correlation_from_distances(&angle_matrix(seq_a)?, &angle_matrix(seq_b)?)
}

/// Time windows of a run, in steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub washout: usize,
    pub train: usize,
    pub eval: usize,
}

impl Split {
    pub fn total(&self) -> usize {
        self.washout + self.train + self.eval
    }

    pub fn train_range(&self) -> std::ops::Range<usize> {
        self.washout..self.washout + self.train
    }

    pub fn eval_range(&self) -> std::ops::Range<usize> {
        self.washout + self.train..self.total()
    }
}

/// Per-delay reconstruction scores and their sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryProfile {
    /// `r2_by_delay[d]` is `R²(d)`.
    pub r2_by_delay: Vec<f64>,
    pub qmc: f64,
    pub d_max: usize,
}

impl MemoryProfile {
    pub fn from_scores(r2_by_delay: Vec<f64>) -> Self {
        let d_max = r2_by_delay.len().saturating_sub(1);
        let qmc = r2_by_delay.iter().sum();
        MemoryProfile { r2_by_delay, qmc, d_max }
    }
}

/// Trains one readout per delay `d <= d_max` on `β_{n−d}` over the train window and scores
/// the eval window by `R²` between predictions and targets. One feature pass serves all delays.
pub fn memory_profile(
    features: &FeatureMatrix,
    inputs: &[DensityMatrix],
    split: Split,
    d_max: usize,
    ridge: f64,
) -> Result<MemoryProfile> {
    if features.n_rows() != split.total() || inputs.len() != split.total() {
        return Err(Error::DimensionMismatch { expected: split.total(), found: features.n_rows().min(inputs.len()) });
    }
    if d_max > split.washout {
        return Err(Error::config("memory.d_max", format!("{d_max} exceeds the washout {}", split.washout)));
    }
    if split.eval < 2 {
        return Err(Error::config("stream.eval", "memory profiles need at least two eval steps"));
    }
    let (tr, ev) = (split.train_range(), split.eval_range());
    let train_x = features.rows(tr.clone());
    let eval_x = features.rows(ev.clone());
    // Angles of the inputs over the union of all delayed eval windows.
    let lo = ev.start - d_max;
    let input_angles = angle_matrix(&inputs[lo..ev.end])?;
    let scores = (0..=d_max)
        .map(|d| {
            let train_y = target_matrix(&inputs[tr.start - d..tr.end - d]);
            let model = fit_ridge(&train_x, &train_y, ridge)?;
            let pred = predict_states(&model, &eval_x)?;
            let off = ev.start - d - lo;
            let t = input_angles.slice(ndarray::s![off..off + split.eval, off..off + split.eval]).to_owned();
            distance_correlation_from_distances(&angle_matrix(&pred)?, &t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MemoryProfile::from_scores(scores))
}

/// Root-mean-square difference of per-step negativities.
pub fn negativity_rmse(targets: &[DensityMatrix], predictions: &[DensityMatrix], dim_a: usize) -> Result<f64> {
    check_lengths(targets.len(), predictions.len())?;
    if targets.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (t, p) in targets.iter().zip(predictions) {
        let d = negativity(t, dim_a)? - negativity(p, dim_a)?;
        acc += d * d;
    }
    Ok((acc / targets.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{haar_random_pure, random_mixed, PrngStream};

    #[test]
    fn rmsf_examples() {
        let mut rng = PrngStream::new(1);
        let s: Vec<_> = (0..5).map(|_| random_mixed(3, &mut rng)).collect();
        assert!((rmsf(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!((rmsf_from_fidelities(&[0.6, 0.8]) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(rmsf(&[], &[]).is_err());
        let other: Vec<_> = (0..5).map(|_| random_mixed(3, &mut rng)).collect();
        let f: Vec<f64> = s.iter().zip(&other).map(|(a, b)| fidelity(b, a).unwrap()).collect();
        let want = (f.iter().map(|x| x * x).sum::<f64>() / 5.0).sqrt();
        assert!((rmsf(&s, &other).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn angle_examples() {
        let z0 = DensityMatrix::basis(2, 0).unwrap();
        let z1 = DensityMatrix::basis(2, 1).unwrap();
        assert_eq!(state_angle(&z0, &z0).unwrap(), 0.0);
        assert!((state_angle(&z0, &z1).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let mut rng = PrngStream::new(2);
        let (a, b) = (random_mixed(2, &mut rng), random_mixed(2, &mut rng));
        assert!((state_angle(&a, &b).unwrap() - state_angle(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn angle_matrix_matches_pairwise_angles() {
        let mut rng = PrngStream::new(3);
        let s: Vec<_> = (0..6).map(|k| if k % 2 == 0 { random_mixed(4, &mut rng) } else { haar_random_pure(4, &mut rng) }).collect();
        let m = angle_matrix(&s).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let want = if j == k { 0.0 } else { state_angle(&s[j], &s[k]).unwrap() };
                assert!((m[[j, k]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distance_correlation_examples() {
        let mut rng = PrngStream::new(4);
        let s: Vec<_> = (0..50).map(|_| haar_random_pure(2, &mut rng)).collect();
        assert!((distance_correlation_sq(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        let constant = vec![DensityMatrix::maximally_mixed(2); 50];
        assert_eq!(distance_correlation_sq(&constant, &s).unwrap(), 0.0);
    }

    #[test]
    fn profile_helpers() {
        let p = MemoryProfile::from_scores(vec![1.0, 0.5, 0.25]);
        assert_eq!(p.d_max, 2);
        assert!((p.qmc - 1.75).abs() < 1e-15);
    }

    #[test]
    fn negativity_rmse_examples() {
        let bell = crate::channels::bell_state(0, 0).unwrap();
        let prod = DensityMatrix::basis(4, 0).unwrap();
        assert_eq!(negativity_rmse(&[bell.clone()], &[bell.clone()], 2).unwrap(), 0.0);
        assert!((negativity_rmse(&[bell.clone(), bell.clone()], &[prod.clone(), prod], 2).unwrap() - 0.5).abs() < 1e-12);
    }
}
