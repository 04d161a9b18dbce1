use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qneat::runner::{self, resolve_output_dir, summarize, ExperimentConfig};
use qneat::Error;

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "qneat", version, about = "Evolve variational quantum circuits and compare them with QAOA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to `runs/<config name>-s<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root that relative output directories are resolved against.
        #[arg(long, env = "QNEAT_OUTPUT_ROOT")]
        output_root: Option<PathBuf>,
    },
    /// Print the champion's circuit for every generation of a finished run.
    Trace { dir: PathBuf },
    /// Compare finished runs (run directories or history.csv files).
    Summarize {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Report the first generation whose top-5 mean reaches this value.
        #[arg(long)]
        threshold: Option<f64>,
        /// Emit CSV instead of an aligned table.
        #[arg(long)]
        csv: bool,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => CONFIG_ERROR,
        _ => RUNTIME_ERROR,
    }
}

fn run(config_path: &Path, seed: Option<u64>, out: Option<&Path>, root: Option<&Path>) -> Result<(), u8> {
    let mut config = ExperimentConfig::from_file(config_path).map_err(|e| {
        eprintln!("error: {}: {e}", config_path.display());
        CONFIG_ERROR
    })?;
    if let Some(seed) = seed {
        config = config.with_seed(seed);
    }
    if let Err(e) = config.validate() {
        eprintln!("error: {}: {e}", config_path.display());
        return Err(CONFIG_ERROR);
    }
    let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    let name = format!("{stem}-s{}", config.seed());
    let dir = resolve_output_dir(out, &config, root, &name);
    eprintln!("running {} ({}) into {}", config.experiment.task, config.tag(), dir.display());
    match runner::run_experiment(&config, &dir) {
        Ok(outcome) => {
            let best = &outcome.best;
            println!("best fitness {:.4} with {} gates", best.fitness, best.gate_count);
            if let Some(mean) = best.reevaluated_mean {
                println!("re-evaluated mean return {mean:.2} over {} episodes", best.reevaluation_episodes.unwrap_or(0));
            }
            if let Some(m) = &best.maxcut {
                println!("accuracy {:.2} (optimum {}, best sampled cut {})", m.accuracy, m.optimal_value, m.best_sampled_cut);
            }
            println!("{}", dir.display());
            Ok(())
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(exit_code(&e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CONFIG_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, seed, out, output_root } => run(&config, seed, out.as_deref(), output_root.as_deref()),
        Command::Trace { dir } => runner::replay_trace(&dir).map(|text| print!("{text}")).map_err(|e| {
            eprintln!("error: {e}");
            RUNTIME_ERROR
        }),
        Command::Summarize { files, threshold, csv } => summarize(&files, threshold)
            .and_then(|s| if csv { s.to_csv() } else { Ok(s.to_text()) })
            .map(|text| print!("{text}"))
            .map_err(|e| {
                eprintln!("error: {e}");
                RUNTIME_ERROR
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
