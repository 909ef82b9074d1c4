//! Single-point reports and Monte Carlo checks.

use std::fmt::Write as _;

use serde::Serialize;
use sqzamp_core::{
    amplified_variance, chain_variance, conventional_variance, estimate_variance, metrics_report,
    MetricsReport, OracleConfig, OracleEstimate, QuadVariance,
};

use crate::config::Params;
use crate::error::CliError;
use crate::format::sig9;

/// Agreement threshold for the oracle check.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub setup: Params,
    pub metrics: MetricsReport,
}

pub fn run_point(params: &Params) -> Result<PointReport, CliError> {
    let point = params.build()?;
    let metrics = metrics_report(&point.setup, &point.signal, point.infinite_gain)
        .map_err(|e| CliError::validation(e.to_string()))?;
    Ok(PointReport {
        setup: *params,
        metrics,
    })
}

impl PointReport {
    /// Metric names and values in a fixed order; absent metrics are skipped.
    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        let m = &self.metrics;
        let mut out = vec![
            ("v_minus_conv", m.v_minus_conv),
            ("v_plus_conv", m.v_plus_conv),
            ("v_minus_conv_db", m.v_minus_conv_db),
            ("snr_conv", m.snr_conv),
            ("snr_conv_db", m.snr_conv_db),
        ];
        if let Some(a) = &m.amplified {
            let optional = [
                ("v_minus_amp", a.v_minus),
                ("v_plus_amp", a.v_plus),
                ("snr_amp", a.snr_amp),
                ("snr_amp_db", a.snr_amp_db),
                ("epsilon", a.epsilon),
                ("epsilon_db", a.epsilon_db),
            ];
            out.extend(optional.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
            out.extend([("v_eff", a.v_eff), ("v_eff_db", a.v_eff_db), ("eta_eff", a.eta_eff)]);
        }
        out
    }

    /// Human-readable summary; dB values are rounded to two decimals.
    pub fn to_text(&self) -> String {
        let m = &self.metrics;
        let mut s = String::new();
        let scheme = match self.setup.g_opa {
            None => "conventional".to_string(),
            Some(g) if g.is_infinite() => "amplified (G_opa -> inf, analytic limit)".to_string(),
            Some(g) => format!("amplified (G_opa = {g})"),
        };
        let _ = writeln!(s, "scheme            {scheme}");
        let _ = writeln!(
            s,
            "V- conventional   {:<12} {:>8.2} dB",
            sig9(m.v_minus_conv),
            m.v_minus_conv_db
        );
        let _ = writeln!(s, "V+ conventional   {}", sig9(m.v_plus_conv));
        let _ = writeln!(s, "snr_conv          {:<12} {:>8.2} dB", sig9(m.snr_conv), m.snr_conv_db);
        if let Some(a) = &m.amplified {
            if let (Some(vm), Some(vp)) = (a.v_minus, a.v_plus) {
                let _ = writeln!(s, "V- amplified      {}", sig9(vm));
                let _ = writeln!(s, "V+ amplified      {}", sig9(vp));
            }
            if let (Some(v), Some(d)) = (a.snr_amp, a.snr_amp_db) {
                let _ = writeln!(s, "snr_amp           {:<12} {d:>8.2} dB", sig9(v));
            }
            if let (Some(v), Some(d)) = (a.epsilon, a.epsilon_db) {
                let _ = writeln!(s, "epsilon           {:<12} {d:>8.2} dB", sig9(v));
            }
            let _ = writeln!(s, "v_eff             {:<12} {:>8.2} dB", sig9(a.v_eff), a.v_eff_db);
            let _ = writeln!(s, "eta_eff           {}", sig9(a.eta_eff));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub setup: Params,
    pub n_samples: u64,
    pub seed: u64,
    pub expected: QuadVariance,
    pub estimate: OracleEstimate,
    pub z_minus: f64,
    pub z_plus: f64,
    pub passed: bool,
}

/// Compares the Monte Carlo estimate with the analytic variance. `corrupt`
/// is added to the analytic `V₋` and exists to exercise the failure path.
pub fn oracle_check(params: &Params, cfg: &OracleConfig, corrupt: f64) -> Result<OracleCheck, CliError> {
    if params.infinite_gain() {
        return Err(CliError::validation(
            "g_opa: the oracle needs a finite gain",
        ));
    }
    let point = params.build()?;
    let setup = point.setup.with_mode(cfg.phase_noise_mode);
    let model = |e: sqzamp_core::Error| CliError::validation(e.to_string());
    let mut expected = if setup.has_phase_noise() {
        chain_variance(&setup)
    } else if setup.is_conventional() {
        conventional_variance(&setup)
    } else {
        amplified_variance(&setup)
    }
    .map_err(model)?;
    expected.v_minus += corrupt;
    let estimate = estimate_variance(&setup, cfg).map_err(model)?;
    let (z_minus, z_plus) = estimate.z_scores(&expected);
    Ok(OracleCheck {
        setup: *params,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        expected,
        estimate,
        z_minus,
        z_plus,
        passed: z_minus.abs() < Z_LIMIT && z_plus.abs() < Z_LIMIT,
    })
}

impl OracleCheck {
    pub fn to_text(&self) -> String {
        let e = &self.estimate;
        let mut s = String::new();
        let _ = writeln!(s, "samples {}  seed {}", self.n_samples, self.seed);
        let _ = writeln!(
            s,
            "V-  expected {:<12} estimate {:<12} stderr {:<12} z {:+.2}",
            sig9(self.expected.v_minus),
            sig9(e.v_minus_hat),
            sig9(e.stderr_minus),
            self.z_minus
        );
        let _ = writeln!(
            s,
            "V+  expected {:<12} estimate {:<12} stderr {:<12} z {:+.2}",
            sig9(self.expected.v_plus),
            sig9(e.v_plus_hat),
            sig9(e.stderr_plus),
            self.z_plus
        );
        let _ = writeln!(s, "{}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}
