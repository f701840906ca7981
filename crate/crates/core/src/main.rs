use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grnn::cli::{bench, gradcheck, synth, with_threads, ExperimentConfig, ModeSelection, Overrides};

#[derive(Parser)]
#[command(name = "grnn", version, about = "Train and evaluate graph recurrent networks on dynamic graphs")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeSelection>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Graph adding task sweep.
    Synth,
    /// Link-ranking benchmark on a JODIE-schema CSV.
    Bench,
    /// Finite-difference gradient checks.
    Gradcheck,
}

fn run(args: Args) -> grnn::Result<()> {
    let flags = Overrides { out: args.out, seed: args.seed, mode: args.mode, threads: args.threads };
    let config = ExperimentConfig::resolve(args.config.as_deref(), std::env::vars(), &flags)?;
    config.write_effective(&config.out)?;
    with_threads(config.threads, || match args.command {
        Command::Synth => synth::cmd_synth(&config),
        Command::Bench => bench::cmd_bench(&config),
        Command::Gradcheck => gradcheck::cmd_gradcheck(&config),
    })?
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
