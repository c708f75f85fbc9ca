//! Config-driven experiments: tomography trials, memory-capacity sweeps and spectral sweeps.

mod config;
mod emit;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, GridPoint, InitialStateKind, MemoryConfig, SpectralConfig, StreamConfig, SweepConfig};
pub use emit::{emit_results, read_steps_csv, StepRow};

use crate::channels::{apply_temporal_map, generate_bit_stream, generate_input_stream_with, InputStream, TemporalMapSpec};
use crate::error::{Error, Result};
use crate::metrics::{fidelities, memory_profile, negativity_rmse, rmsf_from_fidelities, MemoryProfile};
use crate::qcore::{negativity, DensityMatrix, PrngStream};
use crate::readout::{baseline_features, fit_ridge, predict_states, target_matrix};
use crate::reservoir::{FeatureMatrix, Reservoir, ReservoirConfig, ReservoirState};
use crate::spectral::{convergence_ratio, spectral_ensemble, EnsembleStats, SpectralReport};

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanSd { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 { (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        MeanSd { mean, sd }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 0-based time index in the full stream.
    pub step: usize,
    pub fidelity: f64,
    pub negativity_target: Option<f64>,
    pub negativity_pred: Option<f64>,
}

/// Outcome of one tomography trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub grid: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub rmsf: f64,
    pub error: f64,
    pub negativity_rmse: Option<f64>,
    /// Task with any randomly drawn parameters filled in.
    pub task: TemporalMapSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyPoint {
    pub grid: GridPoint,
    pub trials: usize,
    pub rmsf: MeanSd,
    pub error: MeanSd,
    pub negativity_rmse: Option<MeanSd>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryPoint {
    pub grid: GridPoint,
    pub seeds: Vec<u64>,
    pub profiles: Vec<MemoryProfile>,
    pub r2_mean: Vec<f64>,
    pub r2_sd: Vec<f64>,
    pub qmc: MeanSd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub grid: GridPoint,
    pub stats: EnsembleStats,
    pub convergence_ratio: Option<f64>,
    #[serde(skip)]
    pub reports: Vec<SpectralReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunResults {
    Tomography { trials: Vec<TrialResult>, points: Vec<TomographyPoint> },
    Memory(Vec<MemoryPoint>),
    Spectral(Vec<SpectralPoint>),
}

/// Everything produced by one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub command: String,
    pub config: ExperimentConfig,
    pub results: RunResults,
    /// Measured but never written to output files.
    pub wall_time_s: f64,
}

fn make_stream(task: Option<&TemporalMapSpec>, cfg: &ExperimentConfig, n_e: usize, rng: &mut PrngStream) -> Result<InputStream> {
    let len = cfg.stream.split().total();
    if task.is_some_and(|t| t.uses_bits()) {
        generate_bit_stream(len, cfg.stream.hold_steps, rng)
    } else {
        generate_input_stream_with(len, n_e, cfg.stream.hold_steps, cfg.stream.input_ensemble, rng)
    }
}

fn initial_state(kind: InitialStateKind, n_m: usize, rng: &mut PrngStream) -> ReservoirState {
    match kind {
        InitialStateKind::Zero => ReservoirState::zero(n_m),
        InitialStateKind::Haar => ReservoirState::haar(n_m, rng),
    }
}

fn features_for(cfg: &ExperimentConfig, reservoir: &ReservoirConfig, stream: &InputStream, rng: &mut PrngStream) -> Result<FeatureMatrix> {
    // The initial state is drawn in both modes so that the stream of random draws is identical.
    let init = initial_state(cfg.initial_state, reservoir.n_m, rng);
    if cfg.baseline {
        Ok(baseline_features(&stream.beta))
    } else {
        Ok(Reservoir::new(reservoir)?.run_sequence(&stream.beta, &init)?.0)
    }
}

/// One tomography trial on the base reservoir.
pub fn run_tomography(config: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
    config.validate()?;
    run_tomography_at(config, &config.reservoir, 0, seed)
}

/// One tomography trial on a given reservoir (grid point `grid`).
pub fn run_tomography_at(config: &ExperimentConfig, reservoir: &ReservoirConfig, grid: usize, seed: u64) -> Result<TrialResult> {
    let spec = config.task()?;
    spec.validate(reservoir.n_e)?;
    let split = config.stream.split();
    let mut rng = PrngStream::new(seed);
    let stream = make_stream(Some(spec), config, reservoir.n_e, &mut rng)?;
    let task = spec.resolve(&mut rng);
    let features = features_for(config, reservoir, &stream, &mut rng)?;

    let targets = |range: std::ops::Range<usize>| -> Result<Vec<DensityMatrix>> {
        range.map(|n| apply_temporal_map(&task, &stream, n)).collect()
    };
    let train_targets = targets(split.train_range())?;
    let eval_targets = targets(split.eval_range())?;
    let model = fit_ridge(&features.rows(split.train_range()), &target_matrix(&train_targets), config.ridge)?;
    let preds = predict_states(&model, &features.rows(split.eval_range()))?;
    let fid = fidelities(&eval_targets, &preds)?;
    let rmsf = rmsf_from_fidelities(&fid);

    let dim_a = task.bipartite_dim_a();
    let mut steps = Vec::with_capacity(fid.len());
    for (i, (n, f)) in split.eval_range().zip(fid.iter()).enumerate() {
        let (nt, np) = match dim_a {
            Some(a) => (Some(negativity(&eval_targets[i], a)?), Some(negativity(&preds[i], a)?)),
            None => (None, None),
        };
        steps.push(StepRecord { step: n, fidelity: *f, negativity_target: nt, negativity_pred: np });
    }
    let negativity_rmse = match dim_a {
        Some(a) => Some(negativity_rmse(&eval_targets, &preds, a)?),
        None => None,
    };
    Ok(TrialResult { grid, seed, steps, rmsf, error: 1.0 - rmsf, negativity_rmse, task })
}

fn jobs(config: &ExperimentConfig) -> Result<Vec<(GridPoint, u64)>> {
    let grid = config.grid()?;
    Ok(grid.into_iter().flat_map(|g| config.stream.seeds.iter().map(move |&s| (g.clone(), s))).collect())
}

/// All grid points and seeds; trials run in parallel, results stay in (grid, seed) order.
pub fn run_tomography_trials(config: &ExperimentConfig) -> Result<(Vec<TrialResult>, Vec<TomographyPoint>)> {
    config.validate()?;
    config.task()?;
    let jobs = jobs(config)?;
    let trials: Vec<TrialResult> = jobs
        .par_iter()
        .map(|(g, s)| run_tomography_at(config, &g.reservoir, g.index, *s))
        .collect::<Result<_>>()?;
    let points = config
        .grid()?
        .into_iter()
        .map(|g| {
            let mine: Vec<&TrialResult> = trials.iter().filter(|t| t.grid == g.index).collect();
            let rm: Vec<f64> = mine.iter().map(|t| t.rmsf).collect();
            let er: Vec<f64> = mine.iter().map(|t| t.error).collect();
            let neg: Option<Vec<f64>> = mine.iter().map(|t| t.negativity_rmse).collect();
            TomographyPoint { grid: g, trials: mine.len(), rmsf: MeanSd::of(&rm), error: MeanSd::of(&er), negativity_rmse: neg.map(|v| MeanSd::of(&v)) }
        })
        .collect();
    Ok((trials, points))
}

/// Memory profile of one trial: random inputs, one feature pass, one readout per delay.
pub fn run_memory_trial(config: &ExperimentConfig, reservoir: &ReservoirConfig, seed: u64) -> Result<MemoryProfile> {
    let mut rng = PrngStream::new(seed);
    let stream = make_stream(None, config, reservoir.n_e, &mut rng)?;
    let features = features_for(config, reservoir, &stream, &mut rng)?;
    memory_profile(&features, &stream.beta, config.stream.split(), config.memory.d_max, config.ridge)
}

/// Memory profiles averaged over seeds at every grid point.
pub fn run_memory_sweep(config: &ExperimentConfig) -> Result<Vec<MemoryPoint>> {
    config.validate()?;
    if config.memory.d_max > config.stream.washout {
        return Err(Error::config("memory.d_max", "must not exceed stream.washout"));
    }
    let jobs = jobs(config)?;
    let profiles: Vec<MemoryProfile> = jobs
        .par_iter()
        .map(|(g, s)| run_memory_trial(config, &g.reservoir, *s))
        .collect::<Result<_>>()?;
    let per = config.stream.seeds.len();
    Ok(config
        .grid()?
        .into_iter()
        .zip(profiles.chunks(per))
        .map(|(g, chunk)| {
            let d = config.memory.d_max + 1;
            let col = |k: usize| chunk.iter().map(|p| p.r2_by_delay[k]).collect::<Vec<f64>>();
            let stats: Vec<MeanSd> = (0..d).map(|k| MeanSd::of(&col(k))).collect();
            let qmc: Vec<f64> = chunk.iter().map(|p| p.qmc).collect();
            MemoryPoint {
                grid: g,
                seeds: config.stream.seeds.clone(),
                profiles: chunk.to_vec(),
                r2_mean: stats.iter().map(|s| s.mean).collect(),
                r2_sd: stats.iter().map(|s| s.sd).collect(),
                qmc: MeanSd::of(&qmc),
            }
        })
        .collect())
}

/// Spectral statistics over Haar-random inputs at every grid point. The first seed drives
/// the ensemble, so every grid point sees the same input draws.
pub fn run_spectral_sweep(config: &ExperimentConfig) -> Result<Vec<SpectralPoint>> {
    config.validate()?;
    let seed = config.stream.seeds[0];
    let sc = &config.spectral;
    if sc.ensemble == 0 {
        return Err(Error::config("spectral.ensemble", "must be >= 1"));
    }
    let grid = config.grid()?;
    for g in &grid {
        if g.reservoir.n_m > crate::spectral::MAX_SPECTRAL_QUBITS {
            return Err(Error::config("reservoir.n_m", format!("spectral analysis supports n_m <= {}", crate::spectral::MAX_SPECTRAL_QUBITS)));
        }
    }
    grid.into_par_iter()
        .map(|g| {
            let mut rng = PrngStream::new(seed);
            let (reports, stats) = spectral_ensemble(&g.reservoir, sc.ensemble, &mut rng)?;
            let conv = match sc.convergence_steps {
                Some(n) => Some(convergence_ratio(&g.reservoir, n, sc.convergence_pairs, &mut rng)?),
                None => None,
            };
            let reports = if sc.dump_eigenvalues { reports } else { Vec::new() };
            Ok(SpectralPoint { grid: g, stats, convergence_ratio: conv, reports })
        })
        .collect()
}

/// Experiment kinds exposed by the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Tomography,
    Memory,
    Spectral,
    Switch,
    Entangler,
    Bell,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tomography => "tomography",
            Command::Memory => "memory",
            Command::Spectral => "spectral",
            Command::Switch => "switch",
            Command::Entangler => "entangler",
            Command::Bell => "bell",
        }
    }

    fn check_task(self, config: &ExperimentConfig) -> Result<()> {
        let task = config.task.as_ref();
        let ok = match self {
            Command::Switch => matches!(task, Some(TemporalMapSpec::QuantumSwitch { .. })),
            Command::Entangler => matches!(task, Some(TemporalMapSpec::Entangler { .. })),
            Command::Bell => matches!(task, Some(TemporalMapSpec::BellCreator { .. })),
            Command::Tomography => task.is_some(),
            Command::Memory | Command::Spectral => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("task", format!("`{}` needs a matching task kind", self.name())))
        }
    }
}

/// Validates and runs `command` on `config`.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    command.check_task(config)?;
    let start = Instant::now();
    let results = match command {
        Command::Memory => RunResults::Memory(run_memory_sweep(config)?),
        Command::Spectral => RunResults::Spectral(run_spectral_sweep(config)?),
        _ => {
            let (trials, points) = run_tomography_trials(config)?;
            RunResults::Tomography { trials, points }
        }
    };
    Ok(RunResult { command: command.name().to_string(), config: config.clone(), results, wall_time_s: start.elapsed().as_secs_f64() })
}
