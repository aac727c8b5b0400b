use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jct::{load_config, presets, run_with_threads, write_outputs, CliResult, Command};

#[derive(Parser)]
#[command(
    name = "jct",
    version,
    about = "Spectra, exceptional points and dynamics of a non-Hermitian Jaynes-Cummings triangle"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Eigenvalues over a two-parameter grid
    Spectrum(RunArgs),
    /// Eigenvalues along one parameter, with continuous branch labels
    Slice(RunArgs),
    /// Critical phase of the third-order line over coupling and hopping ratios
    Surface(RunArgs),
    /// Report the kind of a single point
    Classify(RunArgs),
    /// Eigenvalue response to a detuning ladder, with power-law fits
    Perturb(RunArgs),
    /// Biorthogonal fidelity along the gain/loss axis
    Fidelity(RunArgs),
    /// Loschmidt echo after a gain/loss quench
    Quench(RunArgs),
    /// List presets
    Presets,
    /// Print the resolved configuration as TOML
    ShowConfig(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in parameter set
    #[arg(long)]
    preset: Option<String>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// Override a config value, e.g. `--set params.theta=0.785`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write a JSON mirror of every table
    #[arg(long)]
    json: bool,
}

fn execute(cmd: Command, args: &RunArgs) -> CliResult<()> {
    let cfg = load_config(
        args.config.as_deref(),
        args.preset.as_deref(),
        &args.overrides,
    )?;
    let outputs = run_with_threads(cmd, &cfg, args.threads)?;
    if cmd == Command::Classify {
        let record: serde_json::Value =
            serde_json::from_str(&outputs[0].table.to_json()).expect("table json");
        println!("{record}");
    }
    for path in write_outputs(&outputs, &args.out, args.json)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Sub::Spectrum(a) => execute(Command::Spectrum, a),
        Sub::Slice(a) => execute(Command::Slice, a),
        Sub::Surface(a) => execute(Command::Surface, a),
        Sub::Classify(a) => execute(Command::Classify, a),
        Sub::Perturb(a) => execute(Command::Perturb, a),
        Sub::Fidelity(a) => execute(Command::Fidelity, a),
        Sub::Quench(a) => execute(Command::Quench, a),
        Sub::Presets => {
            for name in presets::PRESETS {
                println!("{name}");
            }
            Ok(())
        }
        Sub::ShowConfig(a) => load_config(a.config.as_deref(), a.preset.as_deref(), &a.overrides)
            .map(|c| print!("{}", c.to_toml())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
