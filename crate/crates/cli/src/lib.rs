//! Sweep engine behind the `jct` binary: configuration, presets, the
//! subcommands and deterministic table output.

pub mod commands;
pub mod config;
pub mod error;
pub mod presets;
pub mod table;

use std::path::{Path, PathBuf};

pub use commands::{run, Command, Output};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

/// Reads a config file or a preset and applies `key=value` overrides.
pub fn load_config(
    file: Option<&Path>,
    preset: Option<&str>,
    overrides: &[String],
) -> CliResult<RunConfig> {
    let mut value = match (file, preset) {
        (Some(path), None) => RunConfig::load(path)?,
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset '{name}'; available: {}",
                    presets::PRESETS.join(", ")
                ))
            })?
            .to_value(),
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "use either --config or --preset, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of --config or --preset is required".into(),
            ))
        }
    };
    config::apply_overrides(&mut value, overrides)?;
    RunConfig::from_value(value)
}

/// Writes `<dir>/<stem>.csv` (and `.json` when asked) for every table.
pub fn write_outputs(outputs: &[Output], dir: &Path, json: bool) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for o in outputs {
        let csv = dir.join(format!("{}.csv", o.stem));
        std::fs::write(&csv, o.table.to_csv())?;
        written.push(csv);
        if json {
            let js = dir.join(format!("{}.json", o.stem));
            std::fs::write(&js, o.table.to_json())?;
            written.push(js);
        }
    }
    Ok(written)
}

/// Runs `cmd` inside a pool of `threads` workers (rayon's default when
/// `None`).
pub fn run_with_threads(
    cmd: Command,
    cfg: &RunConfig,
    threads: Option<usize>,
) -> CliResult<Vec<Output>> {
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            pool.install(|| run(cmd, cfg))
        }
        None => run(cmd, cfg),
    }
}
