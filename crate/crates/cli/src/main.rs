//! `simulate`: steady-state cavity-QED scans for one or two trapped atoms,
//! as preset experiments or custom key=value configs, emitting deterministic
//! CSV datasets.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod experiment;
mod runner;

use experiment::CliOverrides;

#[derive(Debug, Parser)]
#[command(
    name = "simulate",
    version,
    about = "Photon emission and correlation scans for one or two atoms in a cavity",
    after_help = "Presets: fig3a, fig3b, fig4b, fig4c, figS3, figS4, figS5, single_atom_baseline"
)]
struct Cli {
    /// Preset experiment name; mutually exclusive with --config.
    preset: Option<String>,

    /// Key=value configuration file describing the experiment.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Photon-number truncation override applied to every curve.
    #[arg(long = "n-max", value_name = "K")]
    n_max: Option<usize>,

    /// Drop thermal and pumping imperfections from every curve.
    #[arg(long)]
    ideal: bool,

    /// Worker threads for scan points (default: one per CPU).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Seed recorded in the output metadata.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

enum Failure {
    /// Bad preset, config file, or flag combination → exit 2.
    Config(String),
    /// Output could not be written → exit 1.
    Io(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("simulate: {failure}");
            match failure {
                Failure::Config(_) => ExitCode::from(2),
                Failure::Io(_) => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let overrides = CliOverrides {
        n_max: cli.n_max,
        ideal: cli.ideal,
        threads: cli.threads,
        seed: cli.seed,
        output: cli.out,
    };

    let mut exp = match (&cli.preset, &cli.config) {
        (Some(name), None) => experiment::preset(name).map_err(|e| Failure::Config(e.to_string()))?,
        (None, Some(path)) => {
            let label = path.display();
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{label}: {e}")))?;
            let mut raw =
                config::parse(&text).map_err(|e| Failure::Config(format!("{label}: {e}")))?;
            experiment::from_raw(&mut raw)
                .map_err(|e| Failure::Config(format!("{label}: {e}")))?
        }
        (None, None) => {
            return Err(Failure::Config(
                "nothing to run; give a preset name or --config <path>".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects preset together with --config"),
    };
    experiment::apply_cli(&mut exp, &overrides).map_err(|e| Failure::Config(e.to_string()))?;

    if let Some(threads) = exp.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }

    let outcome = match exp.output.clone() {
        Some(path) => {
            let file = fs::File::create(&path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let mut out = io::BufWriter::new(file);
            let outcome = runner::run(&exp, &mut out)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            out.flush().map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            outcome
        }
        None => {
            let stdout = io::stdout();
            let mut out = io::BufWriter::new(stdout.lock());
            let outcome =
                runner::run(&exp, &mut out).map_err(|e| Failure::Io(format!("stdout: {e}")))?;
            out.flush().map_err(|e| Failure::Io(format!("stdout: {e}")))?;
            outcome
        }
    };

    if outcome.failed_points > 0 {
        eprintln!(
            "simulate: solver errors at {} of {} scan points (see error column)",
            outcome.failed_points, outcome.points
        );
        if outcome.mostly_failed() {
            return Ok(ExitCode::from(3));
        }
    }
    Ok(ExitCode::SUCCESS)
}
