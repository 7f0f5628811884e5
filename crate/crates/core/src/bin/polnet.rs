use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use polnet::certify::certify_config;
use polnet::scenario::{compare_renewable, run_figure, run_scenario, OutputFormat, ScenarioConfig};
use polnet::{Error, Result};

#[derive(Parser)]
#[command(name = "polnet", version, about = "Optimal green and brown investment on pollution networks")]
struct Cli {
    /// Output format for tables.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(clap::Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "POLNET_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config against the model assumptions.
    Validate { config: PathBuf },
    /// Run a config and write its tables.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Reproduce a built-in figure scenario.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
        id: u8,
        #[command(flatten)]
        out: OutDir,
    },
    /// Per-node changes against the same config without green investment.
    CompareRenewable { config: PathBuf },
    /// Long-run pollution under the optimal constant emissions.
    SteadyState { config: PathBuf },
    /// Certify the closed-form policies against the brute-force optimizer.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_written(paths: &[PathBuf]) -> Result<()> {
    let mut out = io::stdout().lock();
    for p in paths {
        writeln!(out, "{}", p.display())?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::load(path)
}

fn execute(cli: Cli) -> Result<bool> {
    let format = cli.format;
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let n = cfg.resolve()?.n();
            match format {
                Format::Csv => writeln!(stdout, "ok {} ({n} nodes)", cfg.name)?,
                Format::Json => writeln!(
                    stdout,
                    "{}",
                    serde_json::json!({ "valid": true, "name": cfg.name, "nodes": n })
                )?,
            }
        }
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let result = run_scenario(&cfg)?;
            drop(stdout);
            print_written(&result.write_outputs(&out.out, &cfg.name, format.into())?)?;
        }
        Command::Figure { id, out } => {
            let result = run_figure(id)?;
            drop(stdout);
            print_written(&result.write_outputs(&out.out, format.into())?)?;
        }
        Command::CompareRenewable { config } => {
            let cmp = compare_renewable(&load(&config)?)?;
            match format {
                Format::Csv => cmp.write_csv(&mut stdout)?,
                Format::Json => {
                    writeln!(stdout, "{}", serde_json::to_string_pretty(&cmp.rows)?)?
                }
            }
        }
        Command::SteadyState { config } => {
            let result = run_scenario(&load(&config)?)?;
            match format {
                Format::Csv => result.steady.write_csv(&mut stdout)?,
                Format::Json => {
                    let rows: Vec<_> = result
                        .steady
                        .values
                        .iter()
                        .zip(result.steady.node_residuals.iter())
                        .enumerate()
                        .map(|(k, (p, r))| serde_json::json!({ "node": k + 1, "P_inf": p, "residual": r }))
                        .collect();
                    writeln!(stdout, "{}", serde_json::to_string_pretty(&rows)?)?;
                }
            }
        }
        Command::Oracle {
            config,
            samples,
            seed,
        } => {
            let report = certify_config(&load(&config)?, samples, seed)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn report_error(e: &Error) {
    let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "oracle_failed", "message": "closed form disagrees with the oracle" })
            );
            ExitCode::FAILURE
        }
        Err(e) => {
            report_error(&e);
            ExitCode::FAILURE
        }
    }
}
