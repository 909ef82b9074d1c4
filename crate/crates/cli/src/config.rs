//! Configuration file grammar and parameter resolution.
//!
//! A configuration is a TOML document with up to three tables:
//!
//! ```toml
//! [setup]
//! g_opo = 1.8
//! eta_opo = 0.98
//! g_opa = 2.4            # omit for the conventional scheme, `inf` for the G → ∞ limit
//! eta_opa = 0.98
//! eta_prop = 0.99
//! eta_det = 0.7          # or l_det = 0.3, never both
//! theta_opo = 0.0        # rad
//! theta_opa = 0.0        # rad
//! phase_noise_mode = "deterministic"   # or "gaussian_rms"
//! p_sig = 1.2589254118
//!
//! [sweep]
//! outputs = ["v_eff_db", "epsilon_db"]
//! axis1 = { parameter = "l_det", start = 0.0, stop = 1.0, count = 101 }
//! axis2 = { parameter = "g_opa", values = [1.0, 2.0, 5.0, 10.0, 50.0] }
//!
//! [oracle]
//! samples = 1000000
//! seed = 42
//! batch_size = 65536
//! ```
//!
//! Command-line flags are layered on top and win over file values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sqzamp_core::{
    defaults, metrics::DEFAULT_SIGNAL_POWER, CavityParams, ChainSetup, NonlinearGain,
    PhaseNoiseMode, SignalModel,
};

use crate::error::{field_error, CliError};
use crate::sweep::AxisConfig;

/// OPO gain used when a configuration does not give one.
pub const DEFAULT_G_OPO: f64 = 1.8;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub setup: SetupConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub oracle: OracleSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("config: {}", e.message())))
    }
}

/// Partially specified setup. Unset fields fall back to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupConfig {
    pub g_opo: Option<f64>,
    pub eta_opo: Option<f64>,
    pub g_opa: Option<f64>,
    pub eta_opa: Option<f64>,
    pub eta_prop: Option<f64>,
    pub eta_det: Option<f64>,
    pub l_det: Option<f64>,
    pub theta_opo: Option<f64>,
    pub theta_opa: Option<f64>,
    pub phase_noise_mode: Option<PhaseNoiseMode>,
    pub p_sig: Option<f64>,
}

impl SetupConfig {
    /// Layers `over` on top of `self`. `eta_det` and `l_det` share one slot:
    /// setting either in the upper layer replaces both from the lower one.
    pub fn overlay(self, over: SetupConfig) -> SetupConfig {
        let detection_overridden = over.eta_det.is_some() || over.l_det.is_some();
        SetupConfig {
            g_opo: over.g_opo.or(self.g_opo),
            eta_opo: over.eta_opo.or(self.eta_opo),
            g_opa: over.g_opa.or(self.g_opa),
            eta_opa: over.eta_opa.or(self.eta_opa),
            eta_prop: over.eta_prop.or(self.eta_prop),
            eta_det: if detection_overridden { over.eta_det } else { self.eta_det },
            l_det: if detection_overridden { over.l_det } else { self.l_det },
            theta_opo: over.theta_opo.or(self.theta_opo),
            theta_opa: over.theta_opa.or(self.theta_opa),
            phase_noise_mode: over.phase_noise_mode.or(self.phase_noise_mode),
            p_sig: over.p_sig.or(self.p_sig),
        }
    }

    pub fn resolve(&self) -> Result<Params, CliError> {
        let mut eta_det = self.eta_det.unwrap_or(defaults::ETA_DET);
        match (self.eta_det, self.l_det) {
            (Some(_), Some(_)) => {
                return Err(CliError::validation(
                    "eta_det and l_det are both set; give only one",
                ))
            }
            (None, Some(l)) => {
                if !(0.0..=1.0).contains(&l) {
                    return Err(CliError::validation(format!(
                        "l_det = {l} is out of range: must lie in [0, 1]"
                    )));
                }
                eta_det = 1.0 - l;
            }
            _ => {}
        }
        let params = Params {
            g_opo: self.g_opo.unwrap_or(DEFAULT_G_OPO),
            eta_opo: self.eta_opo.unwrap_or(defaults::ETA_OPO),
            g_opa: self.g_opa,
            eta_opa: self.eta_opa.unwrap_or(defaults::ETA_OPA),
            eta_prop: self.eta_prop.unwrap_or(defaults::ETA_PROP),
            eta_det,
            theta_opo: self.theta_opo.unwrap_or(0.0),
            theta_opa: self.theta_opa.unwrap_or(0.0),
            phase_noise_mode: self.phase_noise_mode.unwrap_or_default(),
            p_sig: self.p_sig.unwrap_or(DEFAULT_SIGNAL_POWER),
        };
        params.build()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis1: Option<AxisConfig>,
    pub axis2: Option<AxisConfig>,
    pub outputs: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub batch_size: Option<u64>,
}

/// Fully resolved operating point, in plain numbers. `g_opa = None` selects
/// the conventional scheme; `g_opa = inf` selects the analytic infinite-gain
/// limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub g_opo: f64,
    pub eta_opo: f64,
    #[serde(serialize_with = "serialize_gain")]
    pub g_opa: Option<f64>,
    pub eta_opa: f64,
    pub eta_prop: f64,
    pub eta_det: f64,
    pub theta_opo: f64,
    pub theta_opa: f64,
    pub phase_noise_mode: PhaseNoiseMode,
    pub p_sig: f64,
}

impl Params {
    /// Default efficiencies, no phase noise, conventional scheme.
    pub fn realistic(g_opo: f64) -> Self {
        Params {
            g_opo,
            eta_opo: defaults::ETA_OPO,
            g_opa: None,
            eta_opa: defaults::ETA_OPA,
            eta_prop: defaults::ETA_PROP,
            eta_det: defaults::ETA_DET,
            theta_opo: 0.0,
            theta_opa: 0.0,
            phase_noise_mode: PhaseNoiseMode::Deterministic,
            p_sig: DEFAULT_SIGNAL_POWER,
        }
    }

    pub fn infinite_gain(&self) -> bool {
        self.g_opa == Some(f64::INFINITY)
    }

    /// Validates every field and builds the model inputs. All problems are
    /// reported together.
    pub fn build(&self) -> Result<Point, CliError> {
        let mut errors = Vec::new();
        let mut check = |field: &str, r: sqzamp_core::Result<()>| {
            if let Err(e) = r {
                errors.push(field_error(field, e));
            }
        };
        let efficiency = |v: f64| sqzamp_core::Efficiency::new(v).map(|_| ());
        check("eta_opo", efficiency(self.eta_opo));
        check("eta_opa", efficiency(self.eta_opa));
        check("eta_prop", efficiency(self.eta_prop));
        check("eta_det", efficiency(self.eta_det));
        check("g_opo", NonlinearGain::new(self.g_opo).map(|_| ()));
        if let Some(g) = self.g_opa.filter(|g| *g != f64::INFINITY) {
            check("g_opa", NonlinearGain::new(g).map(|_| ()));
        }
        check("theta_opo", sqzamp_core::PhaseNoiseAngle::new(self.theta_opo).map(|_| ()));
        check("theta_opa", sqzamp_core::PhaseNoiseAngle::new(self.theta_opa).map(|_| ()));
        check("p_sig", SignalModel::new(self.p_sig).map(|_| ()));
        if !errors.is_empty() {
            return Err(CliError::Validation(errors));
        }

        let build = || -> sqzamp_core::Result<Point> {
            let opo = CavityParams::new(self.eta_opo, self.g_opo)?;
            let setup = match self.g_opa {
                None => ChainSetup::conventional(opo, self.eta_det)?,
                Some(g) => {
                    // The analytic limit only reads the escape efficiency.
                    let g = if g.is_infinite() { 1.0 } else { g };
                    let opa = CavityParams::new(self.eta_opa, g)?;
                    ChainSetup::amplified(opo, opa, self.eta_prop, self.eta_det)?
                        .with_theta_opa(self.theta_opa)?
                }
            };
            Ok(Point {
                setup: setup
                    .with_theta_opo(self.theta_opo)?
                    .with_mode(self.phase_noise_mode),
                signal: SignalModel::new(self.p_sig)?,
                infinite_gain: self.infinite_gain(),
            })
        };
        build().map_err(|e| CliError::validation(e.to_string()))
    }
}

// JSON has no infinity, so the analytic limit is written as the string "inf".
fn serialize_gain<S: serde::Serializer>(g: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match g {
        Some(g) if g.is_infinite() => s.serialize_str("inf"),
        other => other.serialize(s),
    }
}

/// Model inputs for one operating point.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub setup: ChainSetup,
    pub signal: SignalModel,
    pub infinite_gain: bool,
}
