use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ergopath::pricing::Payoff;
use ergopath_cli::commands::{self, CliError, CliResult, Runtime};
use ergopath_cli::config::{RawConfig, RunConfig};

/// Ergodic Monte Carlo pricing in stationary stochastic volatility models.
#[derive(Parser, Debug)]
#[command(name = "ergopath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of iterations `n` of the ergodic estimator.
    #[arg(long, global = true)]
    iters: Option<usize>,

    /// Output CSV path; standard output if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Use call–put parity variance reduction (`true` or `false`).
    #[arg(long, global = true)]
    parity: Option<bool>,

    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Append wall-clock seconds to price rows (breaks byte-for-byte
    /// reproducibility).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asian prices over the strike and maturity grid.
    PriceAsian,
    /// European prices over the strike and maturity grid.
    PriceEuropean,
    /// European prices and Black–Scholes implied volatilities.
    VolSurface,
    /// Weighted moments (and optional histogram) of the variance marginal.
    StationaryStats,
    /// Diagnostics of the step and weight sequences.
    CheckSchedule,
    /// Brute-force references: `cir-asian`, `ou` or `levy-moment`.
    Oracle { which: String },
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    for pair in &cli.set {
        raw.set_pair(pair)?;
    }
    if let Some(s) = cli.seed {
        raw.set("seed", &s.to_string())?;
    }
    if let Some(n) = cli.iters {
        raw.set("iters", &n.to_string())?;
    }
    if let Some(p) = cli.parity {
        raw.set("parity", &p.to_string())?;
    }
    Ok(RunConfig::from_raw(&raw)?)
}

fn write_out(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load(cli)?;
    for w in commands::warn_about(&cfg) {
        eprintln!("{w}");
    }
    let rt = Runtime {
        threads: cli.threads,
        timing: cli.timing,
    };
    let text = match &cli.command {
        Command::PriceAsian => commands::cmd_price(&cfg, Payoff::Asian, rt)?,
        Command::PriceEuropean => commands::cmd_price(&cfg, Payoff::European, rt)?,
        Command::VolSurface => commands::cmd_vol_surface(&cfg, rt)?,
        Command::StationaryStats => {
            let (main, hist) = commands::cmd_stationary_stats(&cfg)?;
            if let (Some(h), Some(path)) = (hist, &cfg.histogram_out) {
                std::fs::write(path, h)?;
            }
            main
        }
        Command::CheckSchedule => commands::cmd_check_schedule(&cfg)?,
        Command::Oracle { which } => commands::cmd_oracle(which, &cfg, rt)?,
    };
    let out = cli.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from));
    write_out(out.as_ref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code: CliError = e;
            ExitCode::from(code.exit_code() as u8)
        }
    }
}
