use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use asymflow_harness::config::{parse_modes, ModeSel};
use asymflow_harness::{init_threads, report, run, Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "asymflow",
    version,
    about = "Far-field asymptotics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Poisson inversion against far-field oracles.
    Poisson(RunArgs),
    /// Moment identities for random and generic data.
    Moments(RunArgs),
    /// Write the generic initial data to field containers.
    Gendata(RunArgs),
    /// Evolve 2D Euler and track far-field coefficients.
    Evolve(RunArgs),
    /// Initial growth rate of the leading coefficient.
    Slopes(RunArgs),
    /// Inversion of random near-identity maps.
    Diffeo(RunArgs),
    /// Aggregate manifests into a pass/fail table.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Tracked modes as `k:l,k:l,...`.
    #[arg(long, value_parser = parse_mode_list)]
    modes: Option<Vec<ModeSel>>,
}

#[derive(Args)]
struct ReportArgs {
    /// Manifest files or run directories.
    paths: Vec<PathBuf>,
    /// Directory for `summary.json` and `summary.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON instead of the table.
    #[arg(long)]
    json: bool,
}

fn parse_mode_list(s: &str) -> Result<Vec<ModeSel>, String> {
    parse_modes(s).map_err(|e| e.to_string())
}

fn run_command(kind: &str, a: RunArgs) -> Result<bool> {
    let mut config = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default_for(kind)?,
    };
    if config.kind() != kind {
        bail!("config describes a `{}` run, not `{kind}`", config.kind());
    }
    Overrides {
        out: a.out,
        seed: a.seed,
        grid_n: a.grid_n,
        extent: a.extent,
        dt: a.dt,
        tau: a.tau,
        modes: a.modes,
    }
    .apply(&mut config);
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| asymflow_harness::experiments::default_out(&config));
    config.out = Some(out.clone());
    run(&config)?;
    let summary = report(&[out])?;
    print!("{}", summary.render());
    Ok(summary.passed)
}

fn report_command(a: ReportArgs) -> Result<bool> {
    let summary = report(&a.paths)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        asymflow::fields::io::write_atomic(
            &dir.join("summary.json"),
            summary.to_json()?.as_bytes(),
        )?;
        asymflow::fields::io::write_atomic(&dir.join("summary.txt"), summary.render().as_bytes())?;
    }
    if a.json {
        println!("{}", summary.to_json()?);
    } else {
        print!("{}", summary.render());
    }
    Ok(summary.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match cli.command {
        Command::Poisson(a) => run_command("poisson", a),
        Command::Moments(a) => run_command("moments", a),
        Command::Gendata(a) => run_command("gendata", a),
        Command::Evolve(a) => run_command("evolve", a),
        Command::Slopes(a) => run_command("slopes", a),
        Command::Diffeo(a) => run_command("diffeo", a),
        Command::Report(a) => report_command(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
