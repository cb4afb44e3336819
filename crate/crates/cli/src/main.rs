//! `anw`: scenario runner for arrays of nonlinear waveguides.

mod commands;
mod config;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use commands::{Output, RunOptions};
use config::{Format, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "anw",
    version,
    about = "Squeezing and entanglement in arrays of nonlinear waveguides"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the optimizer seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps and fitness evaluation.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Evaluate everything on one thread.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Linear supermodes: propagation constants and profiles.
    Supermodes,
    /// Squeezing per mode in the three bases along z.
    Propagate,
    /// Van Loock-Furusawa inequalities, optionally optimized.
    Vlf,
    /// Cluster-state synthesis or replay.
    Cluster,
    /// Certification of explicit parameters.
    Verify,
    /// Cross-check of the propagators.
    OracleCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Supermodes => "supermodes",
            Self::Propagate => "propagate",
            Self::Vlf => "vlf",
            Self::Cluster => "cluster",
            Self::Verify => "verify",
            Self::OracleCheck => "oracle-check",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) if out.failed_certification => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Output> {
    let path = cli.config.as_ref().context("--config is required")?;
    let cfg = ScenarioConfig::load(path)?;
    let threads = if cli.deterministic {
        Some(1)
    } else {
        cli.parallel
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .context("starting the worker pool")?;
    }
    let opts = RunOptions {
        seed: cli.seed,
        parallel: !cli.deterministic && cli.parallel.is_some_and(|t| t > 1),
    };
    let out = match cli.command {
        Command::Supermodes => commands::supermodes(&cfg)?,
        Command::Propagate => commands::propagate(&cfg, opts)?,
        Command::Vlf => commands::vlf(&cfg, opts)?,
        Command::Cluster => commands::cluster(&cfg, opts)?,
        Command::Verify => commands::verify(&cfg, opts)?,
        Command::OracleCheck => commands::oracle_check(&cfg)?,
    };
    let section = cfg.output.as_ref();
    let format = cli
        .format
        .or(section.and_then(|o| o.format))
        .unwrap_or(match cli.command {
            Command::Cluster | Command::Verify | Command::OracleCheck => Format::Json,
            _ => Format::Csv,
        });
    let dir = cli
        .out
        .clone()
        .or_else(|| section.and_then(|o| o.dir.clone()).map(PathBuf::from));
    write(&out, format, dir, cli.command.name())?;
    Ok(out)
}

fn write(out: &Output, format: Format, dir: Option<PathBuf>, name: &str) -> anyhow::Result<()> {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&out.json)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&out.header)?;
            for r in &out.rows {
                w.write_record(r)?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    match dir {
        Some(d) => {
            std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
            let ext = match format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            let path = d.join(format!("{name}.{ext}"));
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
