//! `qjl <subcommand> --config path [overrides]`.

use std::path::{Path, PathBuf};

use crate::config::{Experiment, ExperimentConfig, OutputFormat, Overrides};
use crate::error::{QjlError, Result};
use crate::experiments::{execute, ExperimentRecord};

/// Default output directory when the config and flags name none.
pub const OUT_DIR_ENV: &str = "QJL_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_VIOLATED: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

/// Loads the config for `subcommand`, applies overrides and validates it.
pub fn load_config(subcommand: &str, path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let expected = Experiment::from_name(subcommand)
        .ok_or_else(|| QjlError::InvalidParameter(format!("unknown experiment {subcommand}")))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| QjlError::InvalidParameter(format!("reading {}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_json_str(&text)?;
    if config.experiment != expected {
        return Err(QjlError::InvalidParameter(format!(
            "config is for {}, not {subcommand}",
            config.experiment.name()
        )));
    }
    config.apply_overrides(overrides)?;
    config.resolved_params()?;
    Ok(config)
}

pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .output
        .dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Writes `<experiment>-<seed>.json`, plus `.csv` when requested.
pub fn write_outputs(config: &ExperimentConfig, record: &ExperimentRecord) -> Result<Vec<PathBuf>> {
    let dir = output_dir(config);
    let io = |e: std::io::Error| QjlError::InvalidParameter(format!("writing to {}: {e}", dir.display()));
    std::fs::create_dir_all(&dir).map_err(io)?;
    let stem = format!("{}-{}", record.experiment, record.seed);
    let json = dir.join(format!("{stem}.json"));
    std::fs::write(&json, record.to_json_string()).map_err(io)?;
    let mut written = vec![json];
    if config.output.format == OutputFormat::Csv {
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, record.table.to_csv()).map_err(io)?;
        written.push(csv);
    }
    Ok(written)
}

/// Full run; returns the process exit code.
pub fn run(subcommand: &str, config_path: &Path, overrides: &Overrides) -> i32 {
    let config = match load_config(subcommand, config_path, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG_ERROR;
        }
    };
    let record = match execute(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("experiment error: {e}");
            return EXIT_CONFIG_ERROR;
        }
    };
    let written = match write_outputs(&config, &record) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG_ERROR;
        }
    };
    for p in &written {
        println!("wrote {}", p.display());
    }
    if record.passed {
        println!("{}: passed", record.experiment);
        EXIT_OK
    } else {
        for f in &record.failures {
            println!("FAILED: {f}");
        }
        EXIT_BOUND_VIOLATED
    }
}
