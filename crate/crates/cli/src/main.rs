//! Experiment runner: ground states of normalized Schrödinger systems by
//! minimization over the mass ball, plus the associated inequality checks.

mod config;
mod runner;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use runner::{run, Outcome, RunContext};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "massball",
    about = "Ground states of normalized Schrödinger systems over the L² mass ball",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Random seed; fixed seed + fixed config gives bit-identical artifacts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallelizable scans (0 = automatic).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sharp interpolation constant and soliton data for dimension N.
    GnConst {
        /// Spatial dimension (may come from the config instead).
        #[arg(long = "N")]
        n_dim: Option<usize>,
    },
    /// Minimize the energy over the mass ball.
    Minimize,
    /// Ground-state energy map over a grid of mass tuples.
    ScanM,
    /// Subadditivity of the energy map under Pythagorean mass combination.
    Subadd,
    /// Rearrangement and merge property suite on random fields.
    RearrangeTest,
    /// Growth limits of the nonlinearity (catalogue and estimate).
    EtaLimits,
    /// Split-step time evolution on a periodic box.
    Evolve,
    /// Minimize, then check every ground-state conclusion.
    Verify,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let path = match (&cli.command, &cli.config) {
        (Command::GnConst { n_dim: Some(n) }, None) => {
            return Ok(ExperimentConfig::GnConst(config::GnConstConfig {
                n_dim: *n,
                soliton: Default::default(),
            }));
        }
        (_, Some(path)) => path.clone(),
        (Command::GnConst { n_dim: None }, None) => {
            return Err("gn-const needs --N or --config".into())
        }
        _ => return Err("missing --config".into()),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    // accept either the tagged experiment document or the bare payload of
    // the invoked subcommand
    let tagged: Result<ExperimentConfig, _> = serde_json::from_str(&text);
    let cfg = match tagged {
        Ok(cfg) => cfg,
        Err(_) => {
            let retag = |payload_err: serde_json::Error| {
                format!(
                    "config parse error at line {} column {}: {}",
                    payload_err.line(),
                    payload_err.column(),
                    payload_err
                )
            };
            match &cli.command {
                Command::GnConst { .. } => ExperimentConfig::GnConst(
                    serde_json::from_str(&text).map_err(retag)?,
                ),
                Command::Minimize => ExperimentConfig::Minimize(
                    serde_json::from_str(&text).map_err(retag)?,
                ),
                Command::ScanM => {
                    ExperimentConfig::ScanM(serde_json::from_str(&text).map_err(retag)?)
                }
                Command::Subadd => {
                    ExperimentConfig::Subadd(serde_json::from_str(&text).map_err(retag)?)
                }
                Command::RearrangeTest => ExperimentConfig::RearrangeTest(
                    serde_json::from_str(&text).map_err(retag)?,
                ),
                Command::EtaLimits => ExperimentConfig::EtaLimits(
                    serde_json::from_str(&text).map_err(retag)?,
                ),
                Command::Evolve => {
                    ExperimentConfig::Evolve(serde_json::from_str(&text).map_err(retag)?)
                }
                Command::Verify => {
                    ExperimentConfig::Verify(serde_json::from_str(&text).map_err(retag)?)
                }
            }
        }
    };
    // the tag, when present, must agree with the invoked subcommand
    let expected = match cli.command {
        Command::GnConst { .. } => "gn-const",
        Command::Minimize => "minimize",
        Command::ScanM => "scan-m",
        Command::Subadd => "subadd",
        Command::RearrangeTest => "rearrange-test",
        Command::EtaLimits => "eta-limits",
        Command::Evolve => "evolve",
        Command::Verify => "verify",
    };
    if cfg.subcommand_name() != expected {
        return Err(format!(
            "config is for `{}` but the `{expected}` subcommand was invoked",
            cfg.subcommand_name()
        ));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    let ctx = RunContext {
        out_dir: cli.out.clone(),
        seed: cli.seed,
        threads: cli.threads,
    };
    match run(&cfg, &ctx) {
        Ok(outcome) => {
            let code = outcome.exit_code();
            if outcome == Outcome::Pass {
                println!("all checks passed");
            }
            ExitCode::from(code as u8)
        }
        Err(err) => {
            // configuration-level failures exit 2, everything else 1
            if let Some(lib) = err.downcast_ref::<massball::Error>() {
                match lib {
                    massball::Error::Config(_)
                    | massball::Error::Json(_)
                    | massball::Error::InvalidDomain(_)
                    | massball::Error::InvalidNonlinearity(_)
                    | massball::Error::FormViolation(_)
                    | massball::Error::InvalidMass { .. } => {
                        eprintln!("config error: {err}");
                        return ExitCode::from(2);
                    }
                    _ => {}
                }
            }
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
