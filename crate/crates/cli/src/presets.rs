//! Dataset presets for the standard plots.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::config::Params;
use crate::error::CliError;
use crate::sweep::{run_sweep, write_csv, Axis, Metric, Parameter, SweepSpec};

/// OPO gain of the high-squeezing presets (about 11 dB at the OPO).
pub const G_OPO_HIGH: f64 = 5.2;
/// OPA gains drawn as separate curves.
pub const G_OPA_CURVES: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 50.0];
pub const DEFAULT_COUNT: usize = 101;
/// Upper end of the phase-noise axis, in radians.
pub const DEFAULT_THETA_MAX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetId {
    Fig3,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig5a,
    Fig5b,
    Fig5c,
    Fig6,
}

impl PresetId {
    pub const ALL: [PresetId; 8] = [
        PresetId::Fig3,
        PresetId::Fig4a,
        PresetId::Fig4b,
        PresetId::Fig4c,
        PresetId::Fig5a,
        PresetId::Fig5b,
        PresetId::Fig5c,
        PresetId::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Fig3 => "fig3",
            PresetId::Fig4a => "fig4a",
            PresetId::Fig4b => "fig4b",
            PresetId::Fig4c => "fig4c",
            PresetId::Fig5a => "fig5a",
            PresetId::Fig5b => "fig5b",
            PresetId::Fig5c => "fig5c",
            PresetId::Fig6 => "fig6",
        }
    }
}

impl FromStr for PresetId {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PresetId::ALL.iter().map(|p| p.name()).collect();
                CliError::validation(format!(
                    "unknown figure '{s}'; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Range overrides accepted by every preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeOverrides {
    pub count: usize,
    pub theta_max: f64,
}

impl Default for RangeOverrides {
    fn default() -> Self {
        RangeOverrides {
            count: DEFAULT_COUNT,
            theta_max: DEFAULT_THETA_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigurePreset {
    pub id: PresetId,
    pub description: &'static str,
    /// Values of every parameter not swept.
    pub fixed: Params,
    pub sweep: SweepSpec,
}

pub fn preset(id: PresetId, ranges: RangeOverrides) -> FigurePreset {
    let n = ranges.count;
    let l_det = Axis::grid(Parameter::LDet, 0.0, 1.0, n);
    let efficiency_grid = |g_opa: f64, description| FigurePreset {
        id,
        description,
        fixed: Params {
            g_opa: Some(g_opa),
            ..Params::realistic(crate::config::DEFAULT_G_OPO)
        },
        sweep: SweepSpec {
            axis1: Axis::grid(Parameter::EtaOpa, 0.0, 1.0, n),
            axis2: Some(Axis::grid(Parameter::EtaDet, 0.0, 1.0, n)),
            outputs: vec![Metric::EtaEff],
        },
    };
    let phase_noise = |g_opa: f64, theta: Parameter, description| FigurePreset {
        id,
        description,
        fixed: Params {
            g_opa: Some(g_opa),
            ..Params::realistic(G_OPO_HIGH)
        },
        sweep: SweepSpec {
            axis1: l_det.clone(),
            axis2: Some(Axis::grid(theta, 0.0, ranges.theta_max, n)),
            outputs: vec![Metric::VEffDb],
        },
    };
    let gain_curves = |metric, description| FigurePreset {
        id,
        description,
        fixed: Params::realistic(G_OPO_HIGH),
        sweep: SweepSpec {
            axis1: l_det.clone(),
            axis2: Some(Axis::list(Parameter::GOpa, &G_OPA_CURVES)),
            outputs: vec![metric],
        },
    };
    match id {
        PresetId::Fig3 => gain_curves(
            Metric::VEffDb,
            "effective measurable squeezing versus detection loss for several OPA gains",
        ),
        PresetId::Fig4a => efficiency_grid(1.0, "effective detection efficiency, G_opa = 1"),
        PresetId::Fig4b => efficiency_grid(10.0, "effective detection efficiency, G_opa = 10"),
        PresetId::Fig4c => efficiency_grid(
            f64::INFINITY,
            "effective detection efficiency, analytic G_opa -> infinity limit",
        ),
        PresetId::Fig5a => phase_noise(
            1.0,
            Parameter::ThetaOpo,
            "effective squeezing versus detection loss and OPO phase noise, no amplification",
        ),
        PresetId::Fig5b => phase_noise(
            G_OPO_HIGH,
            Parameter::ThetaOpo,
            "effective squeezing versus detection loss and OPO phase noise, G_opa = 5.2",
        ),
        PresetId::Fig5c => phase_noise(
            G_OPO_HIGH,
            Parameter::ThetaOpa,
            "effective squeezing versus detection loss and OPA phase noise, G_opa = 5.2",
        ),
        PresetId::Fig6 => gain_curves(
            Metric::EpsilonDb,
            "SNR enhancement of amplified over conventional detection versus detection loss",
        ),
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    preset: PresetId,
    description: &'a str,
    model_version: &'a str,
    code_version: &'a str,
    fixed: &'a Params,
    sweep: &'a SweepSpec,
    ranges: RangeOverrides,
    dataset: String,
}

/// Writes `<id>.csv` and `<id>.json` into `out_dir` and returns their paths.
pub fn run_figure(
    id: PresetId,
    ranges: RangeOverrides,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), CliError> {
    if ranges.count < 2 {
        return Err(CliError::validation(format!(
            "count = {} must be at least 2",
            ranges.count
        )));
    }
    if !(ranges.theta_max.is_finite() && ranges.theta_max > 0.0) {
        return Err(CliError::validation(format!(
            "theta_max = {} must be positive",
            ranges.theta_max
        )));
    }
    let p = preset(id, ranges);
    let table = run_sweep(&p.fixed, &p.sweep)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    let csv_path = out_dir.join(format!("{}.csv", id.name()));
    let json_path = out_dir.join(format!("{}.json", id.name()));
    let create = |path: &Path| {
        std::fs::File::create(path)
            .map_err(|e| CliError::io(format!("creating {}", path.display()), e))
    };
    write_csv(&table, std::io::BufWriter::new(create(&csv_path)?))?;

    let meta = Metadata {
        preset: id,
        description: p.description,
        model_version: sqzamp_core::VERSION,
        code_version: env!("CARGO_PKG_VERSION"),
        fixed: &p.fixed,
        sweep: &p.sweep,
        ranges,
        dataset: format!("{}.csv", id.name()),
    };
    let mut text = serde_json::to_string_pretty(&meta)
        .map_err(|e| CliError::io("serializing metadata", e.into()))?;
    text.push('\n');
    std::fs::write(&json_path, text)
        .map_err(|e| CliError::io(format!("writing {}", json_path.display()), e))?;
    Ok((csv_path, json_path))
}
