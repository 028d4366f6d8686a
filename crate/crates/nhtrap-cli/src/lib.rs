//! Experiment runner for the `nhtrap` model: configuration, stages, plots.

pub mod config;
pub mod stages;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{ConfigError, ExperimentConfig};
use stages::{Context, Stage, StageOutput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Library(#[from] nhtrap::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("records: {0}")]
    Records(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nhtrap", version, about = "Commutant, norm and resolvent experiments near a normally hyperbolic trapped set")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file of `section.key = value` lines; defaults apply to absent keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated `h` values, overriding `sweep.h`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    /// Overrides `run.seed`
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the sweep, overriding `run.threads`
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pointwise commutant decomposition, cutoff identities, trapped set.
    VerifySymbols,
    /// Quantization invariants and the operator-level remainder.
    VerifyOperators,
    /// Symbol-level b-decompositions and the parabolic threshold.
    VerifyBsymbols,
    /// Norm equivalence for the isotropic frame and its broken control.
    Norms,
    /// Resolvent norms over the `h` sweep, with fits.
    Scaling,
    /// Merge artifacts into report.json and draw plots.
    Report,
    /// Every stage in order.
    All,
    /// Print the effective config.
    Config,
}

impl Command {
    fn stages(&self) -> Vec<Stage> {
        match self {
            Command::VerifySymbols => vec![Stage::VerifySymbols],
            Command::VerifyOperators => vec![Stage::VerifyOperators],
            Command::VerifyBsymbols => vec![Stage::VerifyBsymbols],
            Command::Norms => vec![Stage::Norms],
            Command::Scaling => vec![Stage::Scaling],
            Command::Report => vec![Stage::Report],
            Command::All => Stage::ALL.to_vec(),
            Command::Config => Vec::new(),
        }
    }
}

/// Config file plus command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.display().to_string();
    }
    if let Some(h) = &cli.h_list {
        cfg.sweep_h = h.clone();
    }
    if let Some(s) = cli.seed {
        cfg.run_seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.run_threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run the command; the return value is the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match effective_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if cli.command == Command::Config {
        print!("{}", cfg.serialize());
        return 0;
    }
    let ctx = Context { out: PathBuf::from(&cfg.output_dir), cfg, strict: cli.strict };
    match run_stages(&ctx, &cli.command.stages()) {
        Ok(outputs) => {
            let failures: Vec<String> = outputs.iter().flat_map(|o| o.failures(ctx.strict)).collect();
            for o in &outputs {
                if !ctx.strict {
                    for w in &o.warnings {
                        eprintln!("warning: {}: {w}", o.stage.name());
                    }
                }
            }
            if failures.is_empty() {
                0
            } else {
                for f in &failures {
                    eprintln!("FAILED {f}");
                }
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run_stages(ctx: &Context, stages: &[Stage]) -> Result<Vec<StageOutput>, CliError> {
    stages::write_config(ctx)?;
    let mut out = Vec::new();
    for &s in stages {
        let t = Instant::now();
        let o = stages::run_stage(ctx, s)?;
        stages::log_line(s, t.elapsed().as_secs_f64(), o.passed(ctx.strict));
        out.push(o);
    }
    Ok(out)
}
