use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rank1_thermo_cli::{diff_runs, run_experiment, CliError, ExperimentConfig, ExperimentName};

/// Thermodynamic formalism experiments for rank-one geodesic flows.
#[derive(Parser)]
#[command(name = "rank1-thermo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long, env = "RANK1_THERMO_THREADS")]
        threads: Option<usize>,
    },
    /// Compare the artifacts of two run directories.
    Diff {
        a: PathBuf,
        b: PathBuf,
        /// Relative tolerance for numeric fields.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// List the available experiments.
    ListExperiments,
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, threads: Option<usize>) -> Result<i32, CliError> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set out".into()))?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let outcome = run_experiment(&cfg, &out)?;
    for a in &outcome.summary.assertions {
        println!(
            "{} {} (measured {:e}, tolerance {:e})",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.measured,
            a.tolerance
        );
    }
    println!(
        "{}: {} in {:.2} s, artifacts in {}",
        cfg.experiment.as_str(),
        outcome.manifest.status,
        outcome.manifest.wall_time_seconds,
        out.display()
    );
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => match run(config, out, seed, threads) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => fail(e),
        },
        Command::Diff { a, b, tol } => match diff_runs(&a, &b, tol) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
                ExitCode::from(if report.is_empty() { 0 } else { 1 })
            }
            Err(e) => fail(e),
        },
        Command::ListExperiments => {
            for e in ExperimentName::ALL {
                println!("{:<18} {}", e.as_str(), e.description());
            }
            ExitCode::SUCCESS
        }
    }
}
