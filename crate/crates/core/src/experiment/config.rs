//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{InputEnsemble, TemporalMapSpec};
use crate::error::{Error, Result};
use crate::metrics::Split;
use crate::readout::DEFAULT_RIDGE;
use crate::reservoir::{ObservableSet, ReservoirConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    pub washout: usize,
    pub train: usize,
    pub eval: usize,
    #[serde(default = "one")]
    pub hold_steps: usize,
    /// Distribution of inputs when `n_e > 1`.
    #[serde(default)]
    pub input_ensemble: InputEnsemble,
    /// One trial per seed.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn one() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl StreamConfig {
    pub fn split(&self) -> Split {
        Split { washout: self.washout, train: self.train, eval: self.eval }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateKind {
    /// `|0...0>`.
    #[default]
    Zero,
    /// Haar-random pure state drawn from the trial stream.
    Haar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryConfig {
    #[serde(default = "default_d_max")]
    pub d_max: usize,
}

fn default_d_max() -> usize {
    10
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig { d_max: default_d_max() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    /// Haar-random inputs per grid point.
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    /// Also write every eigenvalue.
    #[serde(default)]
    pub dump_eigenvalues: bool,
    /// Steps for the empirical convergence ratio; skipped when absent.
    #[serde(default)]
    pub convergence_steps: Option<usize>,
    #[serde(default = "default_pairs")]
    pub convergence_pairs: usize,
}

fn default_ensemble() -> usize {
    100
}

fn default_pairs() -> usize {
    10
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { ensemble: default_ensemble(), dump_eigenvalues: false, convergence_steps: None, convergence_pairs: default_pairs() }
    }
}

/// Optional grid; each absent axis keeps the base reservoir value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub tau_b: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub j_over_b: Option<Vec<f64>>,
    #[serde(default)]
    pub n_m: Option<Vec<usize>>,
    #[serde(default)]
    pub n_e: Option<Vec<usize>>,
    #[serde(default)]
    pub multiplexity: Option<Vec<usize>>,
    #[serde(default)]
    pub observables: Option<Vec<ObservableSet>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub task: Option<TemporalMapSpec>,
    pub reservoir: ReservoirConfig,
    pub stream: StreamConfig,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default)]
    pub initial_state: InitialStateKind,
    /// Replace reservoir features by the vectorized input state.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub memory: MemoryConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn task(&self) -> Result<&TemporalMapSpec> {
        self.task.as_ref().ok_or_else(|| Error::config("task", "this experiment needs a task"))
    }

    /// Checks everything that does not depend on the experiment kind.
    pub fn validate(&self) -> Result<()> {
        for p in self.grid()? {
            p.reservoir.validate()?;
            if let Some(task) = &self.task {
                task.validate(p.reservoir.n_e)?;
            }
        }
        let s = &self.stream;
        if s.train == 0 {
            return Err(Error::config("stream.train", "must be >= 1"));
        }
        if s.eval == 0 {
            return Err(Error::config("stream.eval", "must be >= 1"));
        }
        if s.hold_steps == 0 {
            return Err(Error::config("stream.hold_steps", "must be >= 1"));
        }
        if s.seeds.is_empty() {
            return Err(Error::config("stream.seeds", "must list at least one seed"));
        }
        if let Some(task) = &self.task {
            if s.washout < task.max_delay() {
                return Err(Error::config("stream.washout", format!("must be >= the largest delay {}", task.max_delay())));
            }
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::config("ridge", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Expanded grid in the fixed axis order tau_b, alpha, j_over_b, n_m, n_e, multiplexity, observables.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let base = &self.reservoir;
        let sw = self.sweep.clone().unwrap_or_default();
        fn axis<T: Clone>(name: &str, v: Option<Vec<T>>, base: T) -> Result<Vec<T>> {
            match v {
                Some(v) if v.is_empty() => Err(Error::config(format!("sweep.{name}"), "must not be empty")),
                Some(v) => Ok(v),
                None => Ok(vec![base]),
            }
        }
        let taus = axis("tau_b", sw.tau_b, base.tau_b)?;
        let alphas = axis("alpha", sw.alpha, base.alpha)?;
        let jbs = axis("j_over_b", sw.j_over_b, base.j_strength / base.b_field)?;
        let nms = axis("n_m", sw.n_m, base.n_m)?;
        let nes = axis("n_e", sw.n_e, base.n_e)?;
        let mms = axis("multiplexity", sw.multiplexity, base.multiplexity)?;
        let obs = axis("observables", sw.observables, base.observables)?;
        let mut out = Vec::new();
        for &tau_b in &taus {
            for &alpha in &alphas {
                for &jb in &jbs {
                    for &n_m in &nms {
                        for &n_e in &nes {
                            for &m in &mms {
                                for &o in &obs {
                                    let reservoir = ReservoirConfig {
                                        n_m,
                                        n_e,
                                        alpha,
                                        j_strength: jb * base.b_field,
                                        b_field: base.b_field,
                                        tau_b,
                                        multiplexity: m,
                                        observables: o,
                                    };
                                    out.push(GridPoint { index: out.len(), j_over_b: jb, reservoir });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub j_over_b: f64,
    pub reservoir: ReservoirConfig,
}
