use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fieldlab::runner::{run, split_overrides, Experiment, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "fieldlab", version, about = "Second-quantized measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment. Extra `--key value` pairs override `[parameters]`.
    Run {
        /// two_slit, which_path, epr, chsh, weyl, thermal, decohere, cat or oracle
        experiment: Option<String>,
        /// TOML config file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default out/<experiment>)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available experiments.
    List,
}

const RUN_FLAGS: &[&str] = &["--config", "--out", "--seed", "--help", "--version"];

fn execute() -> Result<(), RunError> {
    let args: Vec<String> = std::env::args().collect();
    let (args, overrides) = if args.get(1).map(String::as_str) == Some("run") {
        split_overrides(&args, RUN_FLAGS)?
    } else {
        (args, Default::default())
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => return Err(RunError::Config(e.to_string().trim_end().to_owned())),
        Err(e) => {
            print!("{e}");
            return Ok(());
        }
    };
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{e}");
            }
            Ok(())
        }
        Command::Run {
            experiment,
            config,
            out,
            seed,
        } => {
            let mut cfg = match (&config, &experiment) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(name)) => ExperimentConfig::new(Experiment::parse(name)?),
                (None, None) => return Err(RunError::Config("give an experiment name or --config".into())),
            };
            if let (Some(_), Some(name)) = (&config, &experiment) {
                let named = Experiment::parse(name)?;
                if named != cfg.experiment {
                    return Err(RunError::Config(format!(
                        "experiment `{named}` does not match config experiment `{}`",
                        cfg.experiment
                    )));
                }
            }
            if let Some(out) = out {
                cfg.output = Some(out);
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            for (k, v) in &overrides {
                cfg.set_parameter(k, v);
            }
            let summary = run(&cfg)?;
            for a in &summary.artifacts {
                println!("{}  {}", a.sha256, summary.output.join(&a.name).display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fieldlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
