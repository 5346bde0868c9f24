mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Outputs;
use config::{ConfigError, Mode, RunConfig};
use ringcav::io::atomic_write;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
const DEFAULT_OUTPUT_DIR: &str = "ringcav-output";

#[derive(Parser)]
#[command(name = "ringcav", version, about = "Quantum and mean-field ring-cavity simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration's `output_dir`.
    #[arg(long, global = true, env = "RINGCAV_OUTPUT_DIR")]
    output: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `dotted.key=value` applied on top of the configuration file.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Quantum master-equation dynamics from the ground state.
    Dynamics,
    /// Mean-field (CARL) dynamics.
    Meanfield,
    /// Steady-state η sweeps for each configured pump angle.
    Sweep,
    /// Steady-state Wigner functions of both modes.
    Wigner,
    /// Quantum and mean-field dynamics on a shared time grid.
    Compare,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Dynamics => Mode::QuantumDynamics,
            Command::Meanfield => Mode::MeanfieldDynamics,
            Command::Sweep => Mode::SteadySweep,
            Command::Wigner => Mode::Wigner,
            Command::Compare => Mode::Compare,
        }
    }
}

enum Failure {
    Config(String),
    Core(ringcav::Error),
    Truncation(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<ringcav::Error> for Failure {
    fn from(e: ringcav::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use ringcav::Error as E;
        match self {
            Failure::Config(_) => 2,
            Failure::Truncation(_) => 4,
            Failure::Core(e) => match e {
                E::InvalidAngle { .. }
                | E::InvalidLattice(_)
                | E::DimensionMismatch { .. }
                | E::AngleMismatch { .. }
                | E::InvalidParameter(_) => 2,
                E::StepUnderflow { .. } | E::TraceDrift { .. } | E::NotConverged { .. } | E::Eigensolver(_) => 3,
                E::SupportViolation { .. } | E::CutoffTooSmall { .. } => 4,
                E::Io(_) | E::Parse(_) => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("configuration error: {m}"),
            Failure::Truncation(m) => format!("truncation check failed: {m}"),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn manifest(mode: Mode, cfg: &RunConfig, out: &Outputs, passed: bool) -> String {
    let mut resolved = cfg.clone();
    resolved.mode = Some(mode);
    resolved.output_dir = None;
    let mut files: Vec<_> = out
        .files
        .iter()
        .map(|(name, text)| json!({ "name": name, "bytes": text.len() }))
        .collect();
    files.sort_by(|a, b| a["name"].as_str().cmp(&b["name"].as_str()));
    let doc = json!({
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "program": "ringcav",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": mode.name(),
        "config": resolved,
        "diagnostics": out.diagnostics,
        "checks": {
            "boundary_limit": cfg.checks.boundary_limit,
            "boundary_max": out.boundary,
            "passed": passed,
        },
        "files": files,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
    text.push('\n');
    text
}

fn write_outputs(dir: &Path, out: &Outputs, manifest: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(ringcav::Error::from)?;
    for (name, text) in &out.files {
        atomic_write(&dir.join(name), text.as_bytes())?;
    }
    atomic_write(&dir.join("manifest.json"), manifest.as_bytes())?;
    Ok(())
}

fn run(cli: Cli) -> Result<PathBuf, Failure> {
    let mode = cli.command.mode();
    let path = cli
        .config
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    let cfg = config::load(&path, &cli.overrides)?;
    cfg.validate(mode)?;
    let dir = output_dir(cli.output, &cfg);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Config(format!("cannot start thread pool: {e}")))?;
    let out = pool.install(|| match cli.command {
        Command::Dynamics => commands::dynamics(&cfg),
        Command::Meanfield => commands::meanfield(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Wigner => commands::wigner_maps(&cfg),
        Command::Compare => commands::compare(&cfg),
    })?;

    let passed = out.boundary < cfg.checks.boundary_limit;
    write_outputs(&dir, &out, &manifest(mode, &cfg, &out, passed))?;
    if !passed {
        return Err(Failure::Truncation(format!(
            "boundary population {:e} reaches the limit {:e}; outputs written to {}",
            out.boundary,
            cfg.checks.boundary_limit,
            dir.display()
        )));
    }
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("ringcav: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
