//! Command-line front end for the `sqzamp` noise model: single operating
//! points, parameter sweeps, figure datasets and Monte Carlo checks.
//!
//! Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 oracle check failed.

pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod presets;
pub mod report;
pub mod sweep;

use std::io::Write;
use std::path::Path;

use sqzamp_core::OracleConfig;

use crate::cli::{Cli, Command, Format};
use crate::config::ConfigFile;
pub use crate::error::CliError;
use crate::presets::{run_figure, PresetId, RangeOverrides};
use crate::sweep::{run_sweep, write_csv, write_json, Axis, AxisConfig, Metric, SweepSpec};

const DEFAULT_SAMPLES: u64 = 1_000_000;
const DEFAULT_SEED: u64 = 42;

/// Runs one parsed command line, writing reports to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let print = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| CliError::io("writing to stdout", e))
    };

    match &cli.command {
        Command::Point(args) => {
            let params = file.setup.clone().overlay(args.to_config()).resolve()?;
            let report = report::run_point(&params)?;
            match cli.format {
                Some(Format::Json) => print(stdout, &to_json(&report)?)?,
                _ => print(stdout, &report.to_text())?,
            }
            if let Some(path) = &cli.out {
                let text = match cli.format {
                    Some(Format::Csv) => {
                        let (names, values): (Vec<_>, Vec<_>) = report.fields().into_iter().unzip();
                        let table = sweep::Table {
                            columns: names.into_iter().map(String::from).collect(),
                            rows: vec![values],
                        };
                        let mut buf = Vec::new();
                        write_csv(&table, &mut buf)?;
                        String::from_utf8(buf).expect("CSV output is UTF-8")
                    }
                    _ => to_json(&report)?,
                };
                write_file(path, &text)?;
            }
        }
        Command::Sweep {
            setup,
            axis1,
            axis2,
            outputs,
        } => {
            let params = file.setup.clone().overlay(setup.to_config()).resolve()?;
            let spec = sweep_spec(&file, axis1.as_deref(), axis2.as_deref(), outputs.as_deref())?;
            let table = run_sweep(&params, &spec)?;
            let mut buf = Vec::new();
            match cli.format {
                Some(Format::Json) => write_json(&table, &mut buf)?,
                _ => write_csv(&table, &mut buf)?,
            }
            match &cli.out {
                Some(path) => write_file(path, std::str::from_utf8(&buf).expect("UTF-8"))?,
                None => stdout
                    .write_all(&buf)
                    .map_err(|e| CliError::io("writing to stdout", e))?,
            }
        }
        Command::Figure {
            id,
            count,
            theta_max,
        } => {
            let id: PresetId = id.parse()?;
            let defaults = RangeOverrides::default();
            let ranges = RangeOverrides {
                count: count.unwrap_or(defaults.count),
                theta_max: theta_max.unwrap_or(defaults.theta_max),
            };
            let dir = cli.out.as_deref().unwrap_or(Path::new("."));
            let (csv_path, json_path) = run_figure(id, ranges, dir)?;
            print(
                stdout,
                &format!("wrote {}\nwrote {}\n", csv_path.display(), json_path.display()),
            )?;
        }
        Command::OracleCheck {
            setup,
            batch_size,
            corrupt,
        } => {
            let params = file.setup.clone().overlay(setup.to_config()).resolve()?;
            let mut cfg = OracleConfig::new(
                cli.samples.or(file.oracle.samples).unwrap_or(DEFAULT_SAMPLES),
                cli.seed.or(file.oracle.seed).unwrap_or(DEFAULT_SEED),
            )
            .with_mode(params.phase_noise_mode);
            if let Some(b) = batch_size.or(file.oracle.batch_size) {
                cfg = cfg.with_batch_size(b);
            }
            cfg.validate()
                .map_err(|e| CliError::validation(e.to_string()))?;
            let check = report::oracle_check(&params, &cfg, *corrupt)?;
            match cli.format {
                Some(Format::Json) => print(stdout, &to_json(&check)?)?,
                _ => print(stdout, &check.to_text())?,
            }
            if let Some(path) = &cli.out {
                write_file(path, &to_json(&check)?)?;
            }
            if !check.passed {
                return Err(CliError::OracleFailure(format!(
                    "|z| = ({:.2}, {:.2}) not below {}",
                    check.z_minus.abs(),
                    check.z_plus.abs(),
                    report::Z_LIMIT
                )));
            }
        }
    }
    Ok(())
}

fn sweep_spec(
    file: &ConfigFile,
    axis1: Option<&str>,
    axis2: Option<&str>,
    outputs: Option<&[String]>,
) -> Result<SweepSpec, CliError> {
    let axis = |flag: Option<&str>, from_file: &Option<AxisConfig>, label: &str| {
        let cfg = match flag {
            Some(text) => Some(text.parse::<AxisConfig>()?),
            None => from_file.clone(),
        };
        cfg.map(|c| Axis::from_config(&c, label)).transpose()
    };
    let axis1 = axis(axis1, &file.sweep.axis1, "axis1")?
        .ok_or_else(|| CliError::validation("axis1: a sweep needs at least one axis"))?;
    let axis2 = axis(axis2, &file.sweep.axis2, "axis2")?;
    let names = outputs
        .map(<[String]>::to_vec)
        .or_else(|| file.sweep.outputs.clone())
        .ok_or_else(|| CliError::validation("outputs: name at least one metric"))?;
    let outputs = names
        .iter()
        .map(|n| n.trim().parse::<Metric>())
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SweepSpec {
        axis1,
        axis2,
        outputs,
    };
    spec.validate()?;
    Ok(spec)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io("serializing JSON", e.into()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}
