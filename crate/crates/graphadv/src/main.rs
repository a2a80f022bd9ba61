use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graphadv::config::ExperimentConfig;
use graphadv::error::Result;
use graphadv::formats::Stamp;
use graphadv::pipeline;

#[derive(Parser)]
#[command(name = "graphadv", version, about = "Adversarial edge-modification attacks on graph neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the datasets and their manifests.
    GenData,
    /// Train the target models and report clean accuracy.
    Train,
    /// Run the attack sweep and write outcome logs and tables.
    Attack,
    /// Retrain with edge drop and compare attacked accuracy.
    Defend,
    /// Re-render tables and graph diffs from the outcome logs.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    cfg.validate()?;
    let stamp = Stamp { config_hash: cfg.hash(), seed: cfg.seed };
    match cli.command {
        Command::GenData => {
            for d in pipeline::gen_data(&cfg)? {
                println!(
                    "{}: {} graphs, {} instances (train {}, test_I {}, test_II {})",
                    d.bucket, d.graphs, d.instances, d.train, d.test_i, d.test_ii
                );
            }
        }
        Command::Train => {
            for c in pipeline::train(&cfg)? {
                println!(
                    "{} K={}: train {:.2}%  test_I {:.2}%  test_II {:.2}%",
                    c.bucket,
                    c.depth,
                    100.0 * c.train,
                    100.0 * c.test_i,
                    100.0 * c.test_ii
                );
            }
        }
        Command::Attack => print!("{}", pipeline::attack(&cfg)?.to_text(&stamp)),
        Command::Defend => {
            for r in pipeline::defend(&cfg)? {
                println!("{} K={}", r.bucket, r.depth);
                print!("{}", r.to_text(&stamp));
            }
        }
        Command::Report => print!("{}", pipeline::report(&cfg.out)?.to_text(&stamp)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
