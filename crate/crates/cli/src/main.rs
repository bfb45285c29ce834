mod commands;
mod config;
mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};

use commands::Artifact;
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "phasemod", version, about = "Phase-modulated two-level atom experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Ensemble seed (overrides ensemble.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles and scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Potential-surface crossings and the complex gap map.
    Pes,
    /// Stroboscopic sections for each configured variant.
    Poincare,
    /// First-order frequency curve and resonance locations.
    Resonances,
    /// Split-operator wave-packet evolution with localization fits.
    Quantum,
    /// Sections of several variants from identical initial conditions.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Pes => "pes",
            Command::Poincare => "poincare",
            Command::Resonances => "resonances",
            Command::Quantum => "quantum",
            Command::Compare => "compare",
        }
    }
}

#[derive(Serialize)]
struct FileEntry<'a> {
    name: &'a str,
    rows: usize,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    wall_time_s: f64,
    files: Vec<FileEntry<'a>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phasemod: {}: {e}", e.label());
            e.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.ensemble.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.to_string_lossy().into_owned());
    }
    let dir = PathBuf::from(
        cfg.output
            .dir
            .clone()
            .ok_or_else(|| CliError::Validation("output.dir: missing (set it or pass --out)".into()))?,
    );
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads: must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }

    let artifacts = match cli.command {
        Command::Pes => commands::pes(&cfg)?,
        Command::Poincare => commands::poincare(&cfg, false)?,
        Command::Compare => commands::poincare(&cfg, true)?,
        Command::Resonances => commands::resonances(&cfg)?,
        Command::Quantum => commands::quantum(&cfg)?,
    };
    write_outputs(&dir, cli.command.name(), &cfg, &artifacts, start)?;
    info!("wrote {} files to {}", artifacts.len() + 2, dir.display());
    Ok(())
}

/// Data files first, then the effective config, then the manifest.
fn write_outputs(
    dir: &Path,
    command: &'static str,
    cfg: &RunConfig,
    artifacts: &[Artifact],
    start: Instant,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        fs::remove_file(&manifest_path)?;
    }
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
    }
    let config_text = cfg.to_toml();
    fs::write(dir.join("config.toml"), &config_text)?;

    let mut files: Vec<FileEntry> = artifacts
        .iter()
        .map(|a| FileEntry {
            name: &a.name,
            rows: a.rows,
        })
        .collect();
    files.push(FileEntry {
        name: "config.toml",
        rows: config_text.lines().count(),
    });
    let manifest = RunManifest {
        tool: "phasemod",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_hash: hex::encode(Sha256::digest(config_text.as_bytes())),
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    fs::write(manifest_path, bytes)?;
    Ok(())
}
