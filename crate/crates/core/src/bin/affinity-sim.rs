use std::path::PathBuf;
use std::process::ExitCode;

use affinity_sim::harness::{compare, run_experiment, validate_regex, ExperimentConfig};
use affinity_sim::workload::generate_trace;
use affinity_sim::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Affinity-grouping cluster simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write records, summary, store dumps and run logs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the config's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several experiments over the same traces and plot them side by side.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the affinity keys of a pool table.
    ValidateRegex {
        #[arg(long)]
        table: PathBuf,
    },
    /// Write the actor trace of a config's first repetition.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let Some(out) = out.or_else(|| cfg.out_dir.clone()) else {
                return Err(Error::BadConfig("no --out given and the config has no out_dir".into()));
            };
            let report = run_experiment(&cfg)?;
            report.write_to(&out)?;
            print!("{}", report.summary_csv());
        }
        Command::Compare { configs, out } => {
            let cfgs = configs
                .iter()
                .map(ExperimentConfig::load)
                .collect::<Result<Vec<_>, _>>()?;
            let cmp = compare(&cfgs)?;
            cmp.write_to(&out)?;
            print!("{}", cmp.table_csv());
        }
        Command::ValidateRegex { table } => {
            let report = validate_regex(&table)?;
            println!("{report}");
            if !report.is_clean() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Trace { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let trace = generate_trace(&cfg.workload_for(cfg.seed))?;
            let file = std::fs::File::create(&out).map_err(|e| Error::Io {
                path: out.display().to_string(),
                message: e.to_string(),
            })?;
            trace.write_csv(std::io::BufWriter::new(file))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
