use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use windtree::commands;
use windtree::config::RunConfig;
use windtree::error::CliError;

#[derive(Parser)]
#[command(name = "windtree", about = "Invariant sets of periodic wind-tree billiards")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the enclosure depth of every command.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Enumerate Rauzy loops and periodic wind-tree records.
    Search,
    /// Spectrum, transfer data and invariance certificate of a record.
    Analyze,
    /// Raster of the invariant function over a window of the plane.
    Plot,
    /// Hausdorff dimension bound for level sets.
    Hdim,
    /// Billiard trajectory as a CSV polyline.
    Simulate,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::parse(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(d) = cli.depth {
        cfg.analyze.depth = d;
        cfg.plot.depth = d;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let out = &cli.out;
    match cli.cmd {
        Cmd::Search => commands::cmd_search(&cfg, out),
        Cmd::Analyze => commands::cmd_analyze(&cfg, out),
        Cmd::Plot => commands::cmd_plot(&cfg, out),
        Cmd::Hdim => commands::cmd_hdim(&cfg, out),
        Cmd::Simulate => commands::cmd_simulate(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error family={} code={}\nmessage={}", e.family(), e.exit_code(), e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
