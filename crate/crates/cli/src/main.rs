use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtomo::experiment::{emit_results, run, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "qtomo", version, about = "Quantum reservoir tomography experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Reconstruct a temporal map of the input stream.
    Tomography(Opts),
    /// Memory capacity profile R²(d) and its sum.
    Memory(Opts),
    /// Spectrum of the reservoir channel over random inputs.
    Spectral(Opts),
    /// Tomography of the quantum-switch map.
    Switch(Opts),
    /// Tomography of the two-qubit entangler map.
    Entangler(Opts),
    /// Tomography of the Bell-state creator.
    Bell(Opts),
}

#[derive(Args)]
struct Opts {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_path` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single trial with this seed instead of the configured seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the memoryless input-state features instead of the reservoir.
    #[arg(long)]
    baseline: bool,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

fn classify(e: qtomo::Error) -> Failure {
    if e.is_validation() {
        Failure::Validation(e.to_string())
    } else {
        Failure::Runtime(e.to_string())
    }
}

fn execute(command: Command, opts: &Opts) -> Result<(), Failure> {
    let mut config = ExperimentConfig::from_file(&opts.config).map_err(classify)?;
    if let Some(seed) = opts.seed {
        config.stream.seeds = vec![seed];
    }
    if opts.baseline {
        config.baseline = true;
    }
    let out = match (&opts.out, &config.output_path) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(Failure::Validation("no output directory: pass --out or set output_path".into())),
    };
    let result = run(command, &config).map_err(classify)?;
    let files = emit_results(&result, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
    for f in files {
        println!("{}", f.display());
    }
    eprintln!("{} finished in {:.2} s", result.command, result.wall_time_s);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Sub::Tomography(o) => (Command::Tomography, o),
        Sub::Memory(o) => (Command::Memory, o),
        Sub::Spectral(o) => (Command::Spectral, o),
        Sub::Switch(o) => (Command::Switch, o),
        Sub::Entangler(o) => (Command::Entangler, o),
        Sub::Bell(o) => (Command::Bell, o),
    };
    match execute(command, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
