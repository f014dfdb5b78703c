use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use goalshift_core::experiment::{
    cmd_evaluate, cmd_evolve, cmd_sweep, cmd_train_predictor, Artifacts, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "goalshift",
    version,
    about = "Train a measurement predictor, evolve goal networks, evaluate and sweep them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the predictor on the original scenario with random goals.
    TrainPredictor(Common),
    /// Evolve a goal network against a frozen predictor.
    Evolve(Common),
    /// Evaluate goal providers and compare them pairwise.
    Evaluate(Common),
    /// Activate an evolved goal network over a measurement grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Plain-text `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Suppress progress output.
    #[arg(long, short)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn print_paths(a: &Artifacts) {
    for f in &a.files {
        println!("{}", f.display());
    }
    println!("{}", a.manifest.display());
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (Command::TrainPredictor(c) | Command::Evolve(c) | Command::Evaluate(c) | Command::Sweep(c)) = &cli.command;
    let cfg = c.load()?;
    let quiet = c.quiet;
    let mut progress = |m: &str| {
        if !quiet {
            eprintln!("{m}");
        }
    };
    let out: &Path = &c.out;
    let artifacts = match &cli.command {
        Command::TrainPredictor(_) => cmd_train_predictor(&cfg, out, &mut progress)?.artifacts,
        Command::Evolve(_) => cmd_evolve(&cfg, out, &mut progress)?.artifacts,
        Command::Evaluate(_) => cmd_evaluate(&cfg, out, &mut progress)?.artifacts,
        Command::Sweep(_) => cmd_sweep(&cfg, out, &mut progress)?.artifacts,
    };
    print_paths(&artifacts);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
