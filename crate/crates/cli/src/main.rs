use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use projlab_cli::analyze::{analyze_file, AnalyzeOptions};
use projlab_cli::export::{curves_csv, flat_csv, paths_csv};
use projlab_cli::lemmas_cmd::{replay_case, run_lemmas};
use projlab_cli::{CliError, CliResult};
use projlab_core::GalleryChain;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "projlab", version, about = "Projective-condition diagnostics for finite Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a chain-spec file.
    Analyze {
        spec: PathBuf,
        #[arg(long, default_value_t = 4096)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        paths: usize,
        /// Cases per lemma campaign to include in the report.
        #[arg(long, default_value_t = 0)]
        lemma_cases: u64,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write `n, var_seq, eta2_curve, theta2_curve` here.
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Also write the per-path simulation table here.
        #[arg(long)]
        paths_csv: Option<PathBuf>,
    },
    /// Write a chain-spec file for a named example chain.
    Gallery {
        #[arg(value_parser = ["iid", "two-state", "cycle-walk", "birth-death", "random-dense"])]
        name: String,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomized lemma campaigns.
    Lemmas {
        /// Cases per campaign; each campaign's default when omitted.
        #[arg(long)]
        cases: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Replay a single case, given as LEMMA_ID:SEED, instead of running campaigns.
        #[arg(long)]
        replay: Option<String>,
    },
}

fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_report<T: Serialize>(report: &T, out: Option<&Path>, format: Format) -> CliResult<()> {
    let mut w = sink(out)?;
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Output(e.to_string()))?;
            writeln!(w, "{text}").map_err(|e| CliError::Output(e.to_string()))?;
        }
        Format::Csv => flat_csv(report, &mut w)?,
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze { spec, horizon, seed, paths, lemma_cases, out, format, curves, paths_csv: per_path } => {
            let opts = AnalyzeOptions { horizon, seed, n_paths: paths, lemma_cases };
            let analysis = analyze_file(&spec, &opts)?;
            write_report(&analysis.report, out.as_deref(), format)?;
            if let Some(p) = curves {
                curves_csv(&analysis, sink(Some(&p))?)?;
            }
            if let Some(p) = per_path {
                paths_csv(&analysis, sink(Some(&p))?)?;
            }
            Ok(())
        }
        Command::Gallery { name, size, p, seed, out } => {
            let chain = GalleryChain::from_name(&name, size, p, seed)?;
            let text = chain.spec()?.to_json();
            std::fs::write(&out, text + "\n").map_err(|e| CliError::Output(format!("{}: {e}", out.display())))
        }
        Command::Lemmas { cases, seed, out, format, replay } => {
            if let Some(arg) = replay {
                let (lemma, seed, outcome) = replay_case(&arg)?;
                let value = serde_json::json!({
                    "lemma_id": lemma,
                    "seed": seed,
                    "outcome": outcome,
                });
                return write_report(&value, out.as_deref(), format);
            }
            let report = run_lemmas(cases, seed)?;
            write_report(&report, out.as_deref(), format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
