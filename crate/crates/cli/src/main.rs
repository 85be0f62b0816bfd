//! Command-line front end for the pseudospectral iteration engine.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/config error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{EXIT_USAGE, EXIT_VERIFICATION};
use nsr2d_core::EngineError;

#[derive(Parser)]
#[command(name = "nsr2d", version, about = "Intermittent jet perturbation engine for the 2D Navier-Stokes-Reynolds system")]
struct Cli {
    /// Cap the worker thread pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the nine admissibility conditions for (gamma, p, r).
    CheckParams {
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        r: String,
    },
    /// Re-verify the operator identities on random inputs.
    VerifyOps {
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Build a semigroup trajectory pair and verify its residual.
    Init {
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 8)]
        bandwidth: usize,
        #[arg(long, default_value_t = 1.2)]
        decay: f64,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long = "nu-visc", default_value_t = 1.0)]
        nu_visc: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one full iteration step from a config file.
    Iterate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sweep one concentration knob and fit the scaling slopes.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Knob to vary: mu | nu | kappa | sigma | omega.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated sweep values (>= 3).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report artifacts.
    #[arg(long, default_value = "nsr2d-out")]
    out: PathBuf,
    // knob overrides
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    sigma: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Working interval as "a,b".
    #[arg(long, value_delimiter = ',', num_args = 2)]
    interval: Option<Vec<f64>>,
    /// Seed for randomized baselines (rough baseline only).
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<config::RunConfig> {
        let mut cfg = config::load_config(&self.config)?;
        let s = &mut cfg.scheme;
        if let Some(v) = &self.gamma {
            s.gamma = v.clone();
        }
        if let Some(v) = &self.p {
            s.p = v.clone();
        }
        if let Some(v) = &self.r {
            s.r = v.clone();
        }
        if let Some(v) = self.sigma {
            s.sigma = v;
        }
        if let Some(v) = self.kappa {
            s.kappa = v;
        }
        if let Some(v) = self.nu {
            s.nu = v;
        }
        if let Some(v) = self.mu {
            s.mu = v;
        }
        if let Some(v) = self.omega {
            s.omega = v;
        }
        if let Some(v) = self.grid {
            s.grid_n = v;
        }
        if let Some(v) = self.delta {
            s.delta = v;
        }
        if let Some(iv) = &self.interval {
            s.interval = (iv[0], iv[1]);
        }
        if let Some(seed) = self.seed {
            if let config::BaselineConfig::Rough { seed: ref mut sd, .. } = cfg.baseline {
                *sd = seed;
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    match cli.command {
        Command::CheckParams { gamma, p, r } => commands::cmd_check_params(&gamma, &p, &r),
        Command::VerifyOps { grid, count, seed } => commands::cmd_verify_ops(grid, count, seed),
        Command::Init { grid, bandwidth, decay, alpha, nu_visc, seed, samples, out } => {
            commands::cmd_init(
                grid,
                bandwidth,
                decay,
                alpha,
                nu_visc,
                seed,
                samples,
                out.as_deref(),
            )
        }
        Command::Iterate { run } => {
            let cfg = run.load()?;
            commands::cmd_iterate(&cfg, &run.out)
        }
        Command::Sweep { run, axis, values } => {
            let cfg = run.load()?;
            let (axis, values) = match (&axis, &values[..], &cfg.sweep) {
                (Some(a), vs, _) if !vs.is_empty() => (a.clone(), vs.to_vec()),
                (None, [], Some(sw)) => (sw.axis.clone(), sw.values.clone()),
                (Some(a), [], Some(sw)) => (a.clone(), sw.values.clone()),
                _ => {
                    eprintln!("sweep needs --axis and --values, or a [sweep] config section");
                    return Ok(EXIT_USAGE);
                }
            };
            commands::cmd_sweep(&cfg, &axis, &values, &run.out)
        }
    }
}

/// Map an error to the exit-code contract: mathematical failures are
/// verification failures (1); bad inputs, unresolvable configurations and
/// I/O problems are usage errors (2).
fn classify(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<EngineError>() {
        Some(EngineError::Verification(_)) | Some(EngineError::Precondition(_)) => {
            EXIT_VERIFICATION
        }
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err) as u8)
        }
    }
}
