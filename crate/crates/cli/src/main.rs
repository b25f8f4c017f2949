//! `oversmooth`: batch runs of attention diffusion experiments.
//!
//! Every subcommand reads an optional JSON config, applies `--set key=value`
//! overrides, and writes its files to `<out>/<command>-<config hash>/`.

mod commands;
mod config;
mod output;
mod plot;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigError;

#[derive(Parser)]
#[command(
    name = "oversmooth",
    version,
    about = "Attention diffusion, oversmoothing and Markov chain experiments"
)]
struct Cli {
    /// Output root; defaults to $OVERSMOOTH_OUT, then `runs`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the (linear, broken, killed or nonlinear) diffusion and trace its energy.
    Diffuse(ConfigArgs),
    /// Spectrum, invariant measure and ergodicity of the generator.
    Spectrum(ConfigArgs),
    /// Monte Carlo estimate of the semigroup from sampled jump paths.
    Ctmc(ConfigArgs),
    /// Grid of diffuse runs with a long-form CSV and plots.
    Sweep(ConfigArgs),
    /// Generate (or load) a graph and write it as an edge list.
    GenGraph(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; omitted keys take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set dynamics.kappa=0.5`. Values parse as JSON, else as strings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Command {
    fn args(&self) -> &ConfigArgs {
        match self {
            Command::Diffuse(a)
            | Command::Spectrum(a)
            | Command::Ctmc(a)
            | Command::Sweep(a)
            | Command::GenGraph(a) => a,
        }
    }
}

/// 1 for invalid input, 2 for numerical failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<oversmooth_core::Error>() {
            return if e.is_numerical() { 2 } else { 1 };
        }
    }
    1
}

fn run(cli: &Cli) -> anyhow::Result<commands::Outcome> {
    let args = cli.command.args();
    let tree = config::load_tree(args.config.as_deref(), &args.overrides)?;
    let root = output::output_root(cli.out.as_deref());
    match cli.command {
        Command::Diffuse(_) => commands::diffuse(&tree, &root),
        Command::Spectrum(_) => commands::spectrum(&tree, &root),
        Command::Ctmc(_) => commands::ctmc(&tree, &root),
        Command::Sweep(_) => commands::sweep(&tree, &root),
        Command::GenGraph(_) => commands::gen_graph(&tree, &root),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.dir.display());
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
