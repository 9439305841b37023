//! Command-line driver: parses a flat `key = value` config plus flag overrides,
//! runs one command and writes provenance-stamped result files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use kdv_actions::format::KeyValues;
use kdv_actions::Error;

use crate::commands::Failure;
use crate::config::RunConfig;
use crate::output::Writer;

#[derive(Debug, Parser)]
#[command(
    name = "kdv-actions",
    version,
    about = "Band gaps, action variables and KdV flows of periodic potentials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of gaps; fixes the truncation instead of choosing it adaptively.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Slack on inequality margins.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Inline potential, e.g. `cos:1:0.5 + sin:3:0.1`.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    /// Potential file with `modes N` and `n re im` lines.
    #[arg(long, global = true)]
    pub potential_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Band edges, critical points, heights and gap lengths.
    Spectrum,
    /// Action variables, moments and both forms of Q0.
    Actions,
    /// Forward and inverse Riccati map with roundtrip residual.
    Riccati,
    /// KdV trajectory with conserved-quantity and action diagnostics.
    Evolve,
    /// Identity and inequality reports on a potential or a seeded battery.
    Verify,
    /// Plot-ready series from the files in the output directory.
    Plotdata,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Actions => "actions",
            Command::Riccati => "riccati",
            Command::Evolve => "evolve",
            Command::Verify => "verify",
            Command::Plotdata => "plotdata",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let (mut kv, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (KeyValues::parse(&text)?, base)
        }
        None => (KeyValues::default(), PathBuf::new()),
    };
    if let Some(o) = &cli.out {
        kv.set("out", o.display().to_string());
    }
    if let Some(s) = cli.seed {
        kv.set("seed", s.to_string());
    }
    if let Some(n) = cli.nmax {
        kv.set("n_max", n.to_string());
    }
    if let Some(t) = cli.tol {
        kv.set("tol", format!("{t:e}"));
    }
    if let Some(p) = &cli.potential {
        kv.entries.retain(|(k, _)| k != "potential_file");
        kv.set("potential", p.clone());
    }
    if let Some(p) = &cli.potential_file {
        kv.entries.retain(|(k, _)| k != "potential");
        let abs = std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.clone());
        kv.set("potential_file", abs.display().to_string());
    }
    Ok(RunConfig::from_key_values(kv, &base)?)
}

/// Runs the parsed command; returns the process exit status.
pub fn run(cli: &Cli) -> u8 {
    let result = load(cli).and_then(|cfg| {
        let dir = match cli.command {
            Command::Plotdata => cfg.out.join("plot"),
            _ => cfg.out.clone(),
        };
        let mut w = Writer::new(&dir, cli.command.name(), &cfg.raw)?;
        match cli.command {
            Command::Spectrum => commands::spectrum(&cfg, &mut w),
            Command::Actions => commands::actions(&cfg, &mut w),
            Command::Riccati => commands::riccati(&cfg, &mut w),
            Command::Evolve => commands::evolve_cmd(&cfg, &mut w),
            Command::Verify => commands::verify(&cfg, &mut w),
            Command::Plotdata => commands::plotdata(&cfg, &cfg.out, &mut w),
        }
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("kdv-actions {}: {f}", cli.command.name());
            f.exit_code()
        }
    }
}
