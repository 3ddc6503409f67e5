use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use epsim::cli::{
    error_json, execute, exit_code, merge_value, parse_set_override, preset, validate_config,
    OutputFormat, RunCommand,
};
use epsim::{Error, Result};

#[derive(Parser)]
#[command(name = "epsim", version, about = "Four-level non-Hermitian band simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON config file; merged over the preset, under --set overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set spec.g_khz=2.0 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shortcut for --set seed=N.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (default epsim-<command>.<ext> in the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Base config preset: fig1-bands, fig3-pipeline or fig4-coalescence.
    #[arg(long)]
    preset: Option<String>,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Complex band structure along a parameter axis.
    Bands(CommonArgs),
    /// Locate degeneracies on a 1-d parameter scan.
    EpScan(CommonArgs),
    /// Trace an analytic twofold-degeneracy branch in the (J1, J2) plane.
    EpCurve(CommonArgs),
    /// Pump rates from a polarization mix.
    Rates(CommonArgs),
    /// Polarization mix realizing target pump rates.
    SolvePol(CommonArgs),
    /// Synthesize a shot-sampled population time series.
    Simulate(CommonArgs),
    /// Fit the dissipation scale to a dataset.
    Fit(CommonArgs),
    /// Simulate and fit in one pass.
    Pipeline(CommonArgs),
}

impl Command {
    fn split(&self) -> (RunCommand, &CommonArgs) {
        match self {
            Command::Bands(a) => (RunCommand::Bands, a),
            Command::EpScan(a) => (RunCommand::EpScan, a),
            Command::EpCurve(a) => (RunCommand::EpCurve, a),
            Command::Rates(a) => (RunCommand::Rates, a),
            Command::SolvePol(a) => (RunCommand::SolvePol, a),
            Command::Simulate(a) => (RunCommand::Simulate, a),
            Command::Fit(a) => (RunCommand::Fit, a),
            Command::Pipeline(a) => (RunCommand::Pipeline, a),
        }
    }
}

fn assemble_raw(command: RunCommand, args: &CommonArgs) -> Result<Value> {
    let mut raw = match &args.preset {
        Some(name) => {
            let (preset_command, value) = preset(name)?;
            if preset_command != command {
                return Err(Error::Config(format!(
                    "preset {name:?} belongs to a different subcommand"
                )));
            }
            value
        }
        None => Value::Object(Default::default()),
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let file: Value = serde_json::from_str(&text)?;
        let obj = file
            .as_object()
            .ok_or_else(|| Error::Config("config file must hold a JSON object".into()))?;
        for (k, v) in obj {
            merge_value(&mut raw, k, v.clone())?;
        }
    }
    for s in &args.set {
        let (key, value) = parse_set_override(s)?;
        merge_value(&mut raw, &key, value)?;
    }
    if let Some(seed) = args.seed {
        merge_value(&mut raw, "seed", Value::from(seed))?;
    }
    Ok(raw)
}

fn run(command: RunCommand, args: &CommonArgs) -> Result<()> {
    let format = OutputFormat::parse(&args.format)?;
    let raw = assemble_raw(command, args)?;
    let config = validate_config(command, &raw)?;
    let outcome = execute(&config, args.out.as_deref(), format)?;
    if !args.quiet {
        println!("{} -> {}", outcome.summary, outcome.path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
