use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vqoco::experiment::{
    compare_table, parse_config, parse_summary_csv, run_experiment, summary_row, validate_runs, write_csv,
    write_plot_script, ExperimentConfig, RunOptions,
};
use vqoco::Error;

/// Online convex optimization with long-term, time-varying constraints:
/// experiment runner.
#[derive(Parser)]
#[command(name = "vqoco", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, horizon, seed) tuple of a config and write CSVs.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Only run algorithms whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Print a comparison table from one or more summary.csv files.
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_TUPLE: u8 = 2;

fn load(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    validate_runs(&cfg)?;
    Ok(cfg)
}

fn run(config: PathBuf, out: Option<PathBuf>, jobs: Option<usize>, filter: Option<String>) -> ExitCode {
    let cfg = match load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if jobs == Some(0) {
        eprintln!("--jobs must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    let opts = RunOptions { filter, jobs };
    let results = match run_experiment(&cfg, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if results.is_empty() {
        eprintln!("warning: the filter matched no algorithm");
    }
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let mut written = match write_csv(&results, &dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_TUPLE);
        }
    };
    if cfg.plot_script {
        match write_plot_script(&dir) {
            Ok(p) => written.push(p),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(EXIT_TUPLE);
            }
        }
    }
    let rows: Vec<_> = results.iter().map(summary_row).collect();
    print!("{}", compare_table(&rows));
    println!("wrote {} files to {}", written.len(), dir.display());

    let failed: Vec<_> = results.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        let k = &r.key;
        eprintln!(
            "failed: {} T={} seed={}: {}",
            k.algorithm,
            k.horizon,
            k.seed,
            r.outcome.as_ref().err().map(String::as_str).unwrap_or("")
        );
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TUPLE)
    }
}

fn compare(summaries: Vec<PathBuf>) -> ExitCode {
    let mut rows = Vec::new();
    for path in &summaries {
        let parsed = fs::read_to_string(path)
            .map_err(|e| Error::Config(e.to_string()))
            .and_then(|t| parse_summary_csv(&t));
        match parsed {
            Ok(r) => rows.extend(r),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    if rows.is_empty() {
        eprintln!("no result rows to compare");
        return ExitCode::from(EXIT_CONFIG);
    }
    print!("{}", compare_table(&rows));
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    // clap would exit with 2 on usage errors, which here means a failed tuple
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            filter,
        } => run(config, out, jobs, filter),
        Command::Compare { summaries } => compare(summaries),
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                let tuples = cfg.algorithms.len() * cfg.horizons.len() * cfg.seeds.len();
                println!(
                    "{}: ok ({} environment, {tuples} tuples)",
                    config.display(),
                    cfg.environment.kind()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
