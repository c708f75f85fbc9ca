//! Output files: CSV tables plus a `run.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentConfig, GridPoint, RunResult, RunResults, StepRecord};
use crate::error::{Error, Result};
use crate::reservoir::ObservableSet;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => Error::Serde(format!("{}: {other:?}", path.display())),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn obs_name(o: ObservableSet) -> &'static str {
    match o {
        ObservableSet::Z => "z",
        ObservableSet::ZZz => "z_zz",
    }
}

const GRID_HEADER: [&str; 8] = ["grid", "tau_b", "alpha", "j_over_b", "n_m", "n_e", "multiplexity", "observables"];

fn grid_cells(g: &GridPoint) -> Vec<String> {
    let r = &g.reservoir;
    vec![
        g.index.to_string(),
        num(r.tau_b),
        num(r.alpha),
        num(g.j_over_b),
        r.n_m.to_string(),
        r.n_e.to_string(),
        r.multiplexity.to_string(),
        obs_name(r.observables).to_string(),
    ]
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: AsRef<str>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(&self.header).map_err(|e| csv_err(path, e))?;
        for r in &self.rows {
            debug_assert_eq!(r.len(), self.header.len());
            w.write_record(r).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(io_err(path))
    }
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    command: &'a str,
    library_version: &'static str,
    rng_algorithm: &'static str,
    seeds: &'a [u64],
    config: &'a ExperimentConfig,
    results: T,
}

/// Writes all files for `run` into directory `dir` (created if missing) and returns their paths.
/// Output is a pure function of the run's results; wall-clock time is never written.
pub fn emit_results(run: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tables: Vec<(&str, Table)> = Vec::new();
    let sidecar_results = match &run.results {
        RunResults::Tomography { trials, points } => {
            let neg = trials.first().is_some_and(|t| t.negativity_rmse.is_some());
            let mut steps = Table::new(if neg {
                vec!["step", "fidelity", "negativity_target", "negativity_pred", "seed", "grid"]
            } else {
                vec!["step", "fidelity", "seed", "grid"]
            });
            let mut tr = Table::new(if neg {
                vec!["grid", "seed", "rmsf", "error", "negativity_rmse"]
            } else {
                vec!["grid", "seed", "rmsf", "error"]
            });
            for t in trials {
                for s in &t.steps {
                    let mut row = vec![s.step.to_string(), num(s.fidelity)];
                    if neg {
                        row.push(opt(s.negativity_target));
                        row.push(opt(s.negativity_pred));
                    }
                    row.push(t.seed.to_string());
                    row.push(t.grid.to_string());
                    steps.rows.push(row);
                }
                let mut row = vec![t.grid.to_string(), t.seed.to_string(), num(t.rmsf), num(t.error)];
                if neg {
                    row.push(opt(t.negativity_rmse));
                }
                tr.rows.push(row);
            }
            let mut header: Vec<&str> = GRID_HEADER.to_vec();
            header.extend(["trials", "rmsf_mean", "rmsf_sd", "error_mean", "error_sd"]);
            if neg {
                header.extend(["negativity_rmse_mean", "negativity_rmse_sd"]);
            }
            let mut summary = Table::new(header);
            for p in points {
                let mut row = grid_cells(&p.grid);
                row.extend([p.trials.to_string(), num(p.rmsf.mean), num(p.rmsf.sd), num(p.error.mean), num(p.error.sd)]);
                if neg {
                    row.push(opt(p.negativity_rmse.map(|m| m.mean)));
                    row.push(opt(p.negativity_rmse.map(|m| m.sd)));
                }
                summary.rows.push(row);
            }
            tables.push(("steps.csv", steps));
            tables.push(("trials.csv", tr));
            tables.push(("summary.csv", summary));
            serde_json::to_value(points)
        }
        RunResults::Memory(points) => {
            let mut header: Vec<&str> = GRID_HEADER.to_vec();
            header.extend(["d", "r2_mean", "r2_sd"]);
            let mut mem = Table::new(header);
            let mut tr = Table::new(["grid", "seed", "d", "r2"]);
            let mut header: Vec<&str> = GRID_HEADER.to_vec();
            header.extend(["trials", "qmc_mean", "qmc_sd"]);
            let mut summary = Table::new(header);
            for p in points {
                for (d, (m, s)) in p.r2_mean.iter().zip(&p.r2_sd).enumerate() {
                    let mut row = grid_cells(&p.grid);
                    row.extend([d.to_string(), num(*m), num(*s)]);
                    mem.rows.push(row);
                }
                for (seed, prof) in p.seeds.iter().zip(&p.profiles) {
                    for (d, r) in prof.r2_by_delay.iter().enumerate() {
                        tr.rows.push(vec![p.grid.index.to_string(), seed.to_string(), d.to_string(), num(*r)]);
                    }
                }
                let mut row = grid_cells(&p.grid);
                row.extend([p.profiles.len().to_string(), num(p.qmc.mean), num(p.qmc.sd)]);
                summary.rows.push(row);
            }
            tables.push(("memory.csv", mem));
            tables.push(("trials.csv", tr));
            tables.push(("summary.csv", summary));
            serde_json::to_value(points)
        }
        RunResults::Spectral(points) => {
            let mut header: Vec<&str> = GRID_HEADER.to_vec();
            header.extend([
                "samples",
                "inv_lambda2_median",
                "inv_lambda2_mean",
                "inv_lambda2_sd",
                "ratio_mean_median",
                "ratio_mean_mean",
                "ratio_mean_sd",
                "convergence_ratio",
            ]);
            let mut spec = Table::new(header);
            let mut eig = Table::new(["grid", "sample", "k", "re", "im", "modulus"]);
            for p in points {
                let s = &p.stats;
                let mut row = grid_cells(&p.grid);
                row.extend([
                    s.samples.to_string(),
                    num(s.inv_lambda2.median),
                    num(s.inv_lambda2.mean),
                    num(s.inv_lambda2.sd),
                    num(s.ratio_mean.median),
                    num(s.ratio_mean.mean),
                    num(s.ratio_mean.sd),
                    opt(p.convergence_ratio),
                ]);
                spec.rows.push(row);
                for (i, r) in p.reports.iter().enumerate() {
                    for (k, z) in r.eigenvalues.iter().enumerate() {
                        eig.rows.push(vec![p.grid.index.to_string(), i.to_string(), k.to_string(), num(z.re), num(z.im), num(z.norm())]);
                    }
                }
            }
            tables.push(("spectral.csv", spec));
            if run.config.spectral.dump_eigenvalues {
                tables.push(("eigenvalues.csv", eig));
            }
            serde_json::to_value(points)
        }
    }
    .map_err(|e| Error::Serde(e.to_string()))?;

    let mut written = Vec::new();
    for (name, t) in &tables {
        let path = dir.join(name);
        t.write(&path)?;
        written.push(path);
    }
    let sidecar = Sidecar {
        command: &run.command,
        library_version: env!("CARGO_PKG_VERSION"),
        rng_algorithm: crate::qcore::PrngStream::ALGORITHM,
        seeds: &run.config.stream.seeds,
        config: &run.config,
        results: sidecar_results,
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Serde(e.to_string()))?;
    let path = dir.join("run.json");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

/// One parsed row of `steps.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRow {
    pub grid: usize,
    pub seed: u64,
    pub record: StepRecord,
}

/// Reads a `steps.csv` written by [`emit_results`].
pub fn read_steps_csv(path: &Path) -> Result<Vec<StepRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let bad = |what: &str| Error::Serde(format!("{}: {what}", path.display()));
    let (step, fid, seed, grid) = match (col("step"), col("fidelity"), col("seed"), col("grid")) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return Err(bad("missing steps.csv columns")),
    };
    let (nt, np) = (col("negativity_target"), col("negativity_pred"));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let get = |i: usize| rec.get(i).ok_or_else(|| bad("short row"));
        let float = |i: Option<usize>| -> Result<Option<f64>> {
            match i {
                Some(i) => get(i)?.parse().map(Some).map_err(|_| bad("bad number")),
                None => Ok(None),
            }
        };
        out.push(StepRow {
            grid: get(grid)?.parse().map_err(|_| bad("bad grid"))?,
            seed: get(seed)?.parse().map_err(|_| bad("bad seed"))?,
            record: StepRecord {
                step: get(step)?.parse().map_err(|_| bad("bad step"))?,
                fidelity: float(Some(fid))?.unwrap_or_default(),
                negativity_target: float(nt)?,
                negativity_pred: float(np)?,
            },
        });
    }
    Ok(out)
}
