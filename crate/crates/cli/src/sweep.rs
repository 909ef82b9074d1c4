//! One- and two-dimensional parameter sweeps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sqzamp_core::{
    chain_variance, effective_efficiency, effective_squeezing_infinite_gain,
    effective_squeezing_with_noise, snr_amplified, snr_conventional, snr_enhancement,
};

use crate::config::{Params, Point};
use crate::error::CliError;
use crate::format::{db, sig9};

macro_rules! closed_set {
    ($(#[$meta:meta])* $name:ident, $what:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = CliError;
            fn from_str(s: &str) -> Result<Self, CliError> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(CliError::validation(format!(
                        "unknown {} '{}'; expected one of {}",
                        $what,
                        s,
                        Self::ALL.iter().map(|p| p.name()).collect::<Vec<_>>().join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }
    };
}

closed_set!(
    /// Parameters that can be swept.
    Parameter, "parameter" {
        EtaDet => "eta_det",
        EtaProp => "eta_prop",
        EtaOpo => "eta_opo",
        EtaOpa => "eta_opa",
        GOpo => "g_opo",
        GOpa => "g_opa",
        ThetaOpo => "theta_opo",
        ThetaOpa => "theta_opa",
        LDet => "l_det",
    }
);

closed_set!(
    /// Quantities a sweep can report.
    Metric, "output" {
        VMinus => "v_minus",
        VPlus => "v_plus",
        VMinusDb => "v_minus_db",
        VPlusDb => "v_plus_db",
        VMinusConv => "v_minus_conv",
        VMinusConvDb => "v_minus_conv_db",
        SnrConv => "snr_conv",
        SnrConvDb => "snr_conv_db",
        SnrAmp => "snr_amp",
        SnrAmpDb => "snr_amp_db",
        Epsilon => "epsilon",
        EpsilonDb => "epsilon_db",
        VEff => "v_eff",
        VEffDb => "v_eff_db",
        EtaEff => "eta_eff",
    }
);

impl Parameter {
    pub fn apply(self, params: &mut Params, v: f64) {
        match self {
            Parameter::EtaDet => params.eta_det = v,
            Parameter::EtaProp => params.eta_prop = v,
            Parameter::EtaOpo => params.eta_opo = v,
            Parameter::EtaOpa => params.eta_opa = v,
            Parameter::GOpo => params.g_opo = v,
            Parameter::GOpa => params.g_opa = Some(v),
            Parameter::ThetaOpo => params.theta_opo = v,
            Parameter::ThetaOpa => params.theta_opa = v,
            Parameter::LDet => params.eta_det = 1.0 - v,
        }
    }
}

impl Metric {
    pub fn evaluate(self, point: &Point) -> sqzamp_core::Result<f64> {
        let setup = &point.setup;
        let conv = setup.without_amplifier();
        let needs_opa = || {
            if setup.opa.is_none() {
                Err(sqzamp_core::Error::Misuse(format!("output {self} requires g_opa")))
            } else {
                Ok(())
            }
        };
        let needs_finite = || {
            if point.infinite_gain {
                Err(sqzamp_core::Error::Misuse(format!(
                    "output {self} has no infinite-gain limit"
                )))
            } else {
                Ok(())
            }
        };
        Ok(match self {
            Metric::VMinus | Metric::VMinusDb | Metric::VPlus | Metric::VPlusDb => {
                needs_finite()?;
                let v = chain_variance(setup)?;
                match self {
                    Metric::VMinus => v.v_minus,
                    Metric::VMinusDb => db(v.v_minus),
                    Metric::VPlus => v.v_plus,
                    _ => db(v.v_plus),
                }
            }
            Metric::VMinusConv => chain_variance(&conv)?.v_minus,
            Metric::VMinusConvDb => db(chain_variance(&conv)?.v_minus),
            Metric::SnrConv => snr_conventional(&conv, &point.signal)?,
            Metric::SnrConvDb => db(snr_conventional(&conv, &point.signal)?),
            Metric::SnrAmp | Metric::SnrAmpDb | Metric::Epsilon | Metric::EpsilonDb => {
                needs_opa()?;
                needs_finite()?;
                let v = match self {
                    Metric::SnrAmp | Metric::SnrAmpDb => snr_amplified(setup, &point.signal)?,
                    _ => snr_enhancement(setup)?,
                };
                if matches!(self, Metric::SnrAmpDb | Metric::EpsilonDb) {
                    db(v)
                } else {
                    v
                }
            }
            Metric::VEff | Metric::VEffDb => {
                needs_opa()?;
                let v = if point.infinite_gain {
                    effective_squeezing_infinite_gain(setup)?
                } else {
                    effective_squeezing_with_noise(setup)?
                };
                if self == Metric::VEffDb {
                    db(v)
                } else {
                    v
                }
            }
            Metric::EtaEff => {
                needs_opa()?;
                let opa = setup.opa.expect("checked above");
                if point.infinite_gain {
                    opa.eta()
                } else {
                    effective_efficiency(&opa, setup.efficiencies.eta_det).value()
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// Axis as written in a configuration file: either a grid
/// (`start`, `stop`, `count`, optional `scale`) or an explicit `values` list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub parameter: String,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    pub scale: Option<Scale>,
    pub values: Option<Vec<f64>>,
}

impl FromStr for AxisConfig {
    type Err = CliError;

    /// Parses the flag form `name:start:stop:count[:linear|log]`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(CliError::validation(format!(
                "axis '{s}': expected name:start:stop:count[:linear|log]"
            )));
        }
        let num = |field: &str, text: &str| {
            text.parse::<f64>()
                .map_err(|_| CliError::validation(format!("axis {field}: '{text}' is not a number")))
        };
        let scale = match parts.get(4) {
            None | Some(&"linear") => Scale::Linear,
            Some(&"log") => Scale::Log,
            Some(other) => {
                return Err(CliError::validation(format!(
                    "axis scale: '{other}' must be linear or log"
                )))
            }
        };
        Ok(AxisConfig {
            parameter: parts[0].to_string(),
            start: Some(num("start", parts[1])?),
            stop: Some(num("stop", parts[2])?),
            count: Some(parts[3].parse().map_err(|_| {
                CliError::validation(format!("axis count: '{}' is not an integer", parts[3]))
            })?),
            scale: Some(scale),
            values: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisValues {
    Grid {
        start: f64,
        stop: f64,
        count: usize,
        scale: Scale,
    },
    List { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub parameter: Parameter,
    #[serde(flatten)]
    pub values: AxisValues,
}

impl Axis {
    pub fn grid(parameter: Parameter, start: f64, stop: f64, count: usize) -> Self {
        Axis {
            parameter,
            values: AxisValues::Grid {
                start,
                stop,
                count,
                scale: Scale::Linear,
            },
        }
    }

    pub fn list(parameter: Parameter, values: &[f64]) -> Self {
        Axis {
            parameter,
            values: AxisValues::List {
                values: values.to_vec(),
            },
        }
    }

    pub fn from_config(cfg: &AxisConfig, label: &str) -> Result<Self, CliError> {
        let parameter: Parameter = cfg.parameter.parse()?;
        let values = match (&cfg.values, cfg.start, cfg.stop, cfg.count) {
            (Some(values), None, None, None) if cfg.scale.is_none() => AxisValues::List {
                values: values.clone(),
            },
            (None, Some(start), Some(stop), Some(count)) => AxisValues::Grid {
                start,
                stop,
                count,
                scale: cfg.scale.unwrap_or_default(),
            },
            _ => {
                return Err(CliError::validation(format!(
                    "{label}: give either start, stop and count, or values"
                )))
            }
        };
        let axis = Axis { parameter, values };
        axis.validate(label)?;
        Ok(axis)
    }

    pub fn validate(&self, label: &str) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::validation(format!("{label}.{msg}")));
        match &self.values {
            AxisValues::Grid {
                start,
                stop,
                count,
                scale,
            } => {
                if *count < 2 {
                    return bad(format!("count = {count} must be at least 2"));
                }
                if !(start.is_finite() && stop.is_finite()) {
                    return bad("start/stop must be finite".to_string());
                }
                if start >= stop {
                    return bad(format!("start = {start} must be less than stop = {stop}"));
                }
                if *scale == Scale::Log && *start <= 0.0 {
                    return bad(format!("start = {start} must be positive on a log scale"));
                }
            }
            AxisValues::List { values } => {
                if values.is_empty() {
                    return bad("values must not be empty".to_string());
                }
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        match &self.values {
            AxisValues::List { values } => values.clone(),
            AxisValues::Grid {
                start,
                stop,
                count,
                scale,
            } => {
                let last = (*count - 1) as f64;
                (0..*count)
                    .map(|i| {
                        let t = i as f64 / last;
                        match scale {
                            Scale::Linear => start + (stop - start) * t,
                            Scale::Log => start * (stop / start).powf(t),
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub outputs: Vec<Metric>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        self.axis1.validate("axis1")?;
        if let Some(a) = &self.axis2 {
            a.validate("axis2")?;
            if a.parameter == self.axis1.parameter {
                return Err(CliError::validation("axis2 must sweep a different parameter than axis1"));
            }
        }
        if self.outputs.is_empty() {
            return Err(CliError::validation("outputs must name at least one metric"));
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec![self.axis1.parameter.to_string()];
        if let Some(a) = &self.axis2 {
            cols.push(a.parameter.to_string());
        }
        cols.extend(self.outputs.iter().map(|m| m.to_string()));
        cols
    }
}

/// Sweep result; rows are in axis-major order (axis1 outermost).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Evaluates every grid point. Points are computed in parallel and collected
/// in grid order.
pub fn run_sweep(base: &Params, spec: &SweepSpec) -> Result<Table, CliError> {
    spec.validate()?;
    let xs = spec.axis1.points();
    let ys = spec.axis2.as_ref().map(Axis::points);
    let coords: Vec<Vec<f64>> = match &ys {
        None => xs.iter().map(|&x| vec![x]).collect(),
        Some(ys) => xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| vec![x, y]))
            .collect(),
    };
    let rows = coords
        .par_iter()
        .map(|coord| evaluate_row(base, spec, coord))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table {
        columns: spec.columns(),
        rows,
    })
}

fn evaluate_row(base: &Params, spec: &SweepSpec, coord: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut params = *base;
    let axes = std::iter::once(&spec.axis1).chain(spec.axis2.as_ref());
    for (axis, &v) in axes.zip(coord) {
        axis.parameter.apply(&mut params, v);
    }
    let at = || {
        spec.columns()
            .iter()
            .zip(coord)
            .map(|(c, v)| format!("{c}={}", sig9(*v)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let point = params.build().map_err(|e| match e {
        CliError::Validation(msgs) => {
            CliError::Validation(msgs.into_iter().map(|m| format!("at {}: {m}", at())).collect())
        }
        other => other,
    })?;
    let mut row = coord.to_vec();
    for m in &spec.outputs {
        row.push(
            m.evaluate(&point)
                .map_err(|e| CliError::validation(format!("at {}: {e}", at())))?,
        );
    }
    Ok(row)
}

/// Writes a table as CSV: header row, LF line endings, 9 significant digits.
pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| CliError::io("writing CSV", e.into());
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| sig9(*v))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io("writing CSV", e))?;
    Ok(())
}

/// Writes a table as JSON with `columns` and `rows` arrays.
pub fn write_json<W: Write>(table: &Table, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, table)
        .map_err(|e| CliError::io("writing JSON", e.into()))?;
    out.write_all(b"\n").map_err(|e| CliError::io("writing JSON", e))
}
