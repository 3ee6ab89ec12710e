use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ionforce_runner::{run, Command, Format, Invocation};

#[derive(Parser)]
#[command(
    name = "ionforce",
    version,
    about = "Trapped-ion Doppler velocimetry force-detection simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to `output.dir` or `out/<spec name>`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Table format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Sub {
    /// Photon events, arrival histogram, background fit and spectrum.
    Simulate(Common),
    /// Response map and amplitude proxy versus drive frequency.
    SweepFrequency(Common),
    /// Spectra and sensitivity reports over a force ladder.
    SweepForce(Common),
    /// Analytic projected-sensitivity table.
    SensitivityBudget(Common),
    /// Field and force calibration.
    Calibrate(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::SweepFrequency(c) => (Command::SweepFrequency, c),
        Sub::SweepForce(c) => (Command::SweepForce, c),
        Sub::SensitivityBudget(c) => (Command::SensitivityBudget, c),
        Sub::Calibrate(c) => (Command::Calibrate, c),
    };
    let inv = Invocation {
        spec: common.spec,
        seed: common.seed,
        workers: common.workers,
        out_dir: common.out_dir,
        format: common.format,
    };
    match run(command, &inv) {
        Ok(manifest) => {
            eprintln!("{}: wrote {} files", command.name(), manifest.outputs.len() + 1);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
