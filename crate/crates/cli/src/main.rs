use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use qsteer_cli::commands::{mc_report, randomness_report, witness_report};
use qsteer_cli::optics::{builtin_sources, format_outcome};
use qsteer_cli::{run_optics_verify, run_sweep, Mode, SweepConfig};

#[derive(Parser)]
#[command(name = "qsteer", version, about = "MDI steering simulation, randomness certification and optics checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate S, W_QRS and H_min over a grid of p; writes CSV.
    Sweep(SweepArgs),
    /// Steering witnesses at one point, by the steering and MDI routes.
    Witness(PointArgs),
    /// Guessing-probability SDP at one point.
    Randomness(RandomnessArgs),
    /// Verify optical networks against their targets.
    OpticsVerify(OpticsArgs),
    /// Poisson Monte Carlo error bars at one point.
    Mc(PointArgs),
}

/// Overrides applied on top of the config file.
#[derive(Args)]
struct Common {
    /// TOML config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=4))]
    d: Option<u64>,
    #[arg(long)]
    visibility: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    sdp_tol: Option<f64>,
    #[arg(long)]
    counts_per_cell: Option<f64>,
    #[arg(long)]
    x_star: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<SweepConfig> {
        let mut c = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        if let Some(d) = self.d {
            c.d = d as usize;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(visibility, seed, trials, mode, sdp_tol, counts_per_cell, x_star, workers);
        Ok(c)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    grid: Option<usize>,
    /// CSV output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: f64,
}

#[derive(Args)]
struct RandomnessArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Write the SDP in text dump format.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Write the solver certificate (values and dual multipliers) as JSON.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args)]
struct OpticsArgs {
    /// Network files or built-in names; all built-ins when empty.
    networks: Vec<String>,
    /// Seed for the angle solver on networks with open plates.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut c = args.common.config()?;
    if args.p_min.is_some() || args.p_max.is_some() || args.grid.is_some() {
        c.points = None;
    }
    c.p_min = args.p_min.unwrap_or(c.p_min);
    c.p_max = args.p_max.unwrap_or(c.p_max);
    c.grid = args.grid.unwrap_or(c.grid);
    let run = run_sweep(&c)?;
    let csv = run.csv()?;
    match &args.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.report {
        write(path, &serde_json::to_string_pretty(&run.report())?)?;
    }
    for row in &run.rows {
        if let Some(e) = row.error() {
            eprintln!("p = {}: {e}", row.p);
        }
    }
    Ok(if run.errors() == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep(args) => return sweep(args),
        Command::Witness(a) => print!("{}", witness_report(&a.common.config()?, a.p)?),
        Command::Mc(a) => print!("{}", mc_report(&a.common.config()?, a.p)?),
        Command::Randomness(a) => {
            let out = randomness_report(&a.point.common.config()?, a.point.p)?;
            print!("{}", out.summary);
            if let Some(path) = &a.dump {
                write(path, &out.dump)?;
            }
            if let Some(path) = &a.certificate {
                write(path, &serde_json::to_string_pretty(&out.certificate)?)?;
            }
        }
        Command::OpticsVerify(a) => {
            let sources = if a.networks.is_empty() { builtin_sources() } else { a.networks };
            let mut ok = true;
            for s in &sources {
                let o = run_optics_verify(s, a.seed);
                print!("{}", format_outcome(&o));
                ok &= o.passed();
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
