//! Thin command-line front end over the experiment module.

use clap::{Parser, Subcommand};
use deltaprime::experiment::{
    cmd_converge, cmd_design, cmd_diagnose, cmd_verify, exit_code_for, ExperimentConfig,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "deltaprime",
    version,
    about = "Delta-prime interactions from rank-two perturbations"
)]
struct Cli {
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the eps sweeps (1 = sequential).
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the pair hypotheses, kernel residuals and BVP consistency.
    Verify,
    /// Synthesize the coupling potential for the target interaction.
    Design,
    /// Measure the norm-resolvent gap across the eps sweep and fit the rate.
    Converge,
    /// Build the approximate solution and report jumps, residuals, defects.
    Diagnose,
}

fn main() {
    let cli = Cli::parse();

    let mut config = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                std::process::exit(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    let out_dir = config.out_dir.clone();
    let parallel = cli.parallel > 1;
    if parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.parallel)
            .build_global()
            .ok();
    }

    let result = match cli.command {
        Command::Verify => cmd_verify(&config, &out_dir),
        Command::Design => cmd_design(&config, &out_dir),
        Command::Converge => cmd_converge(&config, &out_dir, parallel),
        Command::Diagnose => cmd_diagnose(&config, &out_dir, parallel),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code_for(&e));
        }
    }
}
