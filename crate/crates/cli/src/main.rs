use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use mpemba_cli::config::{self, ExperimentConfig, Format, Overrides};
use mpemba_cli::{output, run, validate};

#[derive(Debug, Parser)]
#[command(name = "mpemba", version, about = "Relaxation crossings of a quantum dot and a two-site system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Significant digits of numeric fields (6..=17).
    #[arg(long, global = true)]
    precision: Option<usize>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trajectories of every configured initial state.
    Evolve,
    /// Boundary, threshold, crossing-time or region-map scan.
    Scan,
    /// Invariant suite; exits nonzero on any failure.
    Validate,
}

fn load(common: &Common) -> Result<Option<ExperimentConfig>> {
    let Some(path) = &common.config else { return Ok(None) };
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(&Overrides {
        out: common.out.clone(),
        format: common.format,
        precision: common.precision,
    });
    cfg.validate()?;
    Ok(Some(cfg))
}

fn metadata(command: &str, cfg: Option<&ExperimentConfig>) -> Result<serde_json::Value> {
    let echo = match cfg {
        Some(c) => {
            let mut c = c.clone();
            c.output.path = None;
            serde_json::to_value(c)?
        }
        None => serde_json::Value::Null,
    };
    Ok(json!({
        "engine": "mpemba",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": echo,
    }))
}

fn emit(bytes: &[u8], path: Option<&str>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {p}")),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let cfg = load(&cli.common)?;
    let (format, precision, path) = match &cfg {
        Some(c) => (c.output.format, c.output.precision, c.output.path.clone()),
        None => {
            let p = cli.common.precision.unwrap_or(12);
            if !config::PRECISION_RANGE.contains(&p) {
                return Err(config::ConfigError::field("output.precision", format!("must be within 6..=17, got {p}")).into());
            }
            (cli.common.format.unwrap_or_default(), p, cli.common.out.clone())
        }
    };
    let (name, table, summary, ok) = match cli.command {
        Command::Evolve | Command::Scan => {
            let cfg = cfg.as_ref().context("--config is required for this subcommand")?;
            let is_scan = matches!(cli.command, Command::Scan);
            let out = mpemba_core::scan::with_threads(cli.common.threads, || {
                if is_scan {
                    run::run_scan(cfg)
                } else {
                    run::evolve(cfg)
                }
            })??;
            (if is_scan { "scan" } else { "evolve" }, out.table, out.summary, true)
        }
        Command::Validate => {
            let report = validate::run(cfg.as_ref())?;
            eprintln!("validate: {} checks, {} failed", report.table.rows.len(), report.failures);
            ("validate", report.table, None, report.failures == 0)
        }
    };
    if let (Some(s), Format::Csv) = (&summary, format) {
        eprintln!("{}", serde_json::to_string(s)?);
    }
    let bytes = output::render(&table, format, precision, metadata(name, cfg.as_ref())?, summary)?;
    emit(&bytes, path.as_deref())?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
