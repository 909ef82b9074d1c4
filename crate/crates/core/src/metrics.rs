//! Figures of merit: effective detection efficiency, effective measurable
//! squeezing, signal-to-noise ratios and the SNR enhancement of amplified over
//! conventional detection.

use serde::{Deserialize, Serialize};

use crate::chain::{chain_variance, conventional_variance, ChainSetup};
use crate::error::{domain, Error, Result};
use crate::quadrature::{CavityParams, Efficiency};

/// Default signal: 1 dB above the vacuum level.
pub const DEFAULT_SIGNAL_POWER: f64 = 1.258_925_411_794_167_2;

/// Signal power in vacuum-variance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub p_sig: f64,
}

impl SignalModel {
    pub fn new(p_sig: f64) -> Result<Self> {
        if !(p_sig.is_finite() && p_sig > 0.0) {
            return Err(domain("p_sig", p_sig, "must be positive and finite"));
        }
        Ok(Self { p_sig })
    }
}

impl Default for SignalModel {
    fn default() -> Self {
        Self {
            p_sig: DEFAULT_SIGNAL_POWER,
        }
    }
}

/// `10·log₁₀(v)`.
pub fn to_decibels(v: f64) -> Result<f64> {
    if v <= 0.0 || !v.is_finite() {
        return Err(domain("value", v, "decibels need a positive finite value"));
    }
    Ok(10.0 * v.log10())
}

pub fn from_decibels(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Effective detection efficiency of the OPA followed by detection loss:
/// `η_det (2η_opa + x − 1)² / ((1 − x)² + 4x η_det η_opa)`.
pub fn effective_efficiency(opa: &CavityParams, eta_det: Efficiency) -> Efficiency {
    let x = opa.x();
    let eta_opa = opa.eta();
    let eta_det = eta_det.value();
    let den = (1.0 - x).powi(2) + 4.0 * x * eta_det * eta_opa;
    if den == 0.0 {
        // x = 0 and η_det = 0: nothing reaches the detector.
        return Efficiency::new(0.0).expect("zero is a valid efficiency");
    }
    let eff = eta_det * (2.0 * eta_opa + x - 1.0).powi(2) / den;
    Efficiency::new(eff.clamp(0.0, 1.0)).expect("clamped into [0, 1]")
}

/// The infinite-gain limit of [`effective_efficiency`]: the OPA escape
/// efficiency, independent of detection loss.
pub fn effective_efficiency_infinite_gain(eta_opa: Efficiency) -> Efficiency {
    eta_opa
}

/// Effective measurable squeezing `1 − 4x η̃_sqz η_eff / (1 + x)²`.
///
/// This is `V₋` of the amplified chain referenced to the same chain with a
/// vacuum seed. Requires an OPA and zero phase-noise angles.
pub fn effective_squeezing(setup: &ChainSetup) -> Result<f64> {
    let opa = setup
        .opa
        .ok_or_else(|| Error::Misuse("effective squeezing requires an OPA".to_string()))?;
    if setup.has_phase_noise() {
        return Err(Error::Misuse(
            "closed-form effective squeezing is rotation-free; use effective_squeezing_with_noise"
                .to_string(),
        ));
    }
    let eta_eff = effective_efficiency(&opa, setup.efficiencies.eta_det).value();
    Ok(squeezing_with_efficiency(setup, eta_eff))
}

/// [`effective_squeezing`] evaluated in the `G_opa → ∞` limit, where
/// `η_eff = η_opa`. The setup's own OPA gain is ignored.
pub fn effective_squeezing_infinite_gain(setup: &ChainSetup) -> Result<f64> {
    let opa = setup
        .opa
        .ok_or_else(|| Error::Misuse("effective squeezing requires an OPA".to_string()))?;
    Ok(squeezing_with_efficiency(setup, opa.eta()))
}

fn squeezing_with_efficiency(setup: &ChainSetup, eta_eff: f64) -> f64 {
    let x = setup.opo.x();
    1.0 - 4.0 * x * setup.eta_sqz_tilde() * eta_eff / (1.0 + x).powi(2)
}

/// Effective squeezing from the rotated chain: `V₋` of the setup divided by
/// `V₋` of the same chain with a vacuum seed and no OPO phase noise.
pub fn effective_squeezing_with_noise(setup: &ChainSetup) -> Result<f64> {
    if setup.opa.is_none() {
        return Err(Error::Misuse("effective squeezing requires an OPA".to_string()));
    }
    let mut reference = setup.vacuum_seeded();
    reference.theta_opo = Default::default();
    Ok(chain_variance(setup)?.v_minus / chain_variance(&reference)?.v_minus)
}

/// Squeezed-quadrature variance of the conventional scheme, using the closed
/// form when there is no phase noise and the chain otherwise.
fn conventional_v_minus(setup: &ChainSetup) -> Result<f64> {
    if setup.has_phase_noise() {
        Ok(chain_variance(setup)?.v_minus)
    } else {
        Ok(conventional_variance(setup)?.v_minus)
    }
}

fn amplified_v_minus(setup: &ChainSetup) -> Result<f64> {
    match setup.opa {
        Some(opa) if !setup.has_phase_noise() => {
            Ok(crate::chain::amplified_v_minus(setup, &opa))
        }
        Some(_) => Ok(chain_variance(setup)?.v_minus),
        None => Err(Error::Misuse("amplified scheme requires an OPA".to_string())),
    }
}

/// Power amplification of the `X₋` signal by the OPA, `(2η_opa/(1 − x) − 1)²`.
pub fn signal_gain(opa: &CavityParams) -> f64 {
    (2.0 * opa.eta() / (1.0 - opa.x()) - 1.0).powi(2)
}

/// `η_det P_sig / V₋^conv`.
pub fn snr_conventional(setup: &ChainSetup, sig: &SignalModel) -> Result<f64> {
    if setup.opa.is_some() {
        return Err(Error::Misuse(
            "conventional SNR requires the OPA to be absent".to_string(),
        ));
    }
    SignalModel::new(sig.p_sig)?;
    Ok(setup.eta_det() * sig.p_sig / conventional_v_minus(setup)?)
}

/// `η_prop η_det (2η_opa/(1 − x) − 1)² P_sig / V₋^amp`.
pub fn snr_amplified(setup: &ChainSetup, sig: &SignalModel) -> Result<f64> {
    let opa = setup
        .opa
        .ok_or_else(|| Error::Misuse("amplified SNR requires an OPA".to_string()))?;
    SignalModel::new(sig.p_sig)?;
    Ok(setup.eta_prop() * setup.eta_det() * signal_gain(&opa) * sig.p_sig
        / amplified_v_minus(setup)?)
}

/// SNR enhancement `ε = η_prop (2η_opa/(1 − x) − 1)² V₋^conv / V₋^amp`,
/// with the conventional reference sharing the OPO, detection efficiency and
/// OPO phase noise.
pub fn snr_enhancement(setup: &ChainSetup) -> Result<f64> {
    let opa = setup
        .opa
        .ok_or_else(|| Error::Misuse("SNR enhancement requires an OPA".to_string()))?;
    let v_conv = conventional_v_minus(&setup.without_amplifier())?;
    Ok(setup.eta_prop() * signal_gain(&opa) * v_conv / amplified_v_minus(setup)?)
}

/// How the OPA gain entered a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainEvaluation {
    /// The configured finite gain.
    Finite,
    /// The analytic `G_opa → ∞` limit.
    AnalyticLimit,
}

/// Metrics for the amplified scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifiedMetrics {
    pub gain_evaluation: GainEvaluation,
    pub v_minus: Option<f64>,
    pub v_plus: Option<f64>,
    pub v_eff: f64,
    pub v_eff_db: f64,
    pub eta_eff: f64,
    pub snr_amp: Option<f64>,
    pub snr_amp_db: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon_db: Option<f64>,
}

/// Everything a single operating point produces. Amplified fields are absent
/// for the conventional scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub v_minus_conv: f64,
    pub v_plus_conv: f64,
    pub v_minus_conv_db: f64,
    pub snr_conv: f64,
    pub snr_conv_db: f64,
    pub amplified: Option<AmplifiedMetrics>,
}

/// Evaluates every metric for a setup. With `infinite_gain` the amplified
/// metrics use the analytic `G_opa → ∞` limit; SNR-type quantities have no
/// finite limit there and are left empty.
pub fn metrics_report(
    setup: &ChainSetup,
    sig: &SignalModel,
    infinite_gain: bool,
) -> Result<MetricsReport> {
    let conv = setup.without_amplifier();
    let v_conv = chain_variance(&conv)?;
    let snr_conv = snr_conventional(&conv, sig)?;
    let amplified = match setup.opa {
        None => None,
        Some(opa) if infinite_gain => {
            if setup.has_phase_noise() {
                return Err(Error::Misuse(
                    "the infinite-gain limit is only available without phase noise".to_string(),
                ));
            }
            let v_eff = effective_squeezing_infinite_gain(setup)?;
            Some(AmplifiedMetrics {
                gain_evaluation: GainEvaluation::AnalyticLimit,
                v_minus: None,
                v_plus: None,
                v_eff,
                v_eff_db: to_decibels(v_eff)?,
                eta_eff: effective_efficiency_infinite_gain(opa.escape_efficiency).value(),
                snr_amp: None,
                snr_amp_db: None,
                epsilon: None,
                epsilon_db: None,
            })
        }
        Some(opa) => {
            let v = chain_variance(setup)?;
            let v_eff = effective_squeezing_with_noise(setup)?;
            let snr_amp = snr_amplified(setup, sig)?;
            let epsilon = snr_enhancement(setup)?;
            Some(AmplifiedMetrics {
                gain_evaluation: GainEvaluation::Finite,
                v_minus: Some(v.v_minus),
                v_plus: Some(v.v_plus),
                v_eff,
                v_eff_db: to_decibels(v_eff)?,
                eta_eff: effective_efficiency(&opa, setup.efficiencies.eta_det).value(),
                snr_amp: Some(snr_amp),
                snr_amp_db: Some(to_decibels(snr_amp)?),
                epsilon: Some(epsilon),
                epsilon_db: Some(to_decibels(epsilon)?),
            })
        }
    };
    Ok(MetricsReport {
        v_minus_conv: v_conv.v_minus,
        v_plus_conv: v_conv.v_plus,
        v_minus_conv_db: to_decibels(v_conv.v_minus)?,
        snr_conv,
        snr_conv_db: to_decibels(snr_conv)?,
        amplified,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::chain::amplified_variance;
    use approx::assert_relative_eq;

    fn eff(eta_opa: f64, g: f64, eta_det: f64) -> f64 {
        effective_efficiency(
            &CavityParams::new(eta_opa, g).unwrap(),
            Efficiency::new(eta_det).unwrap(),
        )
        .value()
    }

    fn amp(g_opo: f64, g_opa: f64, eta_det: f64) -> ChainSetup {
        ChainSetup::amplified(
            CavityParams::new(0.98, g_opo).unwrap(),
            CavityParams::new(0.98, g_opa).unwrap(),
            0.99,
            eta_det,
        )
        .unwrap()
    }

    #[test]
    fn decibel_examples() {
        assert_eq!(to_decibels(1.0).unwrap(), 0.0);
        assert_relative_eq!(to_decibels(0.1063).unwrap(), -9.734667354767032, max_relative = 1e-13);
        assert_relative_eq!(to_decibels(DEFAULT_SIGNAL_POWER).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(DEFAULT_SIGNAL_POWER, 10f64.powf(0.1), max_relative = 1e-16);
        assert!(to_decibels(0.0).is_err());
        assert!(to_decibels(-1.0).is_err());
        for v in [1e-6, 0.3, 1.0, 17.0, 4e5] {
            assert_relative_eq!(from_decibels(to_decibels(v).unwrap()), v, max_relative = 1e-12);
        }
    }

    #[test]
    fn effective_efficiency_examples() {
        assert_eq!(eff(0.5, 1.0, 0.7), 0.0);
        assert!((eff(0.98, 1e8, 0.7) - 0.98).abs() < 1e-3);
        assert_relative_eq!(eff(0.98, 10.0, 0.7), 0.957050424983028389, max_relative = 1e-13);
        // x = 0, η_det = 0 has a 0/0 form; nothing is detected.
        assert_eq!(eff(0.7, 1.0, 0.0), 0.0);
    }

    #[test]
    fn effective_squeezing_examples() {
        assert_eq!(effective_squeezing(&amp(1.0, 10.0, 0.7)).unwrap(), 1.0);
        let lim = effective_squeezing_infinite_gain(&amp(5.2, 10.0, 0.7)).unwrap();
        assert_relative_eq!(lim, 0.124196211682125494, max_relative = 1e-13);
        let v = effective_squeezing(&amp(5.2, 10.0, 0.7)).unwrap();
        assert_relative_eq!(v, 0.144705726723093847, max_relative = 1e-13);
        assert_relative_eq!(to_decibels(v).unwrap(), -8.395142813548722, max_relative = 1e-12);
    }

    #[test]
    fn effective_squeezing_is_variance_ratio() {
        let s = amp(5.2, 10.0, 0.7);
        let ratio = amplified_variance(&s).unwrap().v_minus
            / amplified_variance(&s.vacuum_seeded()).unwrap().v_minus;
        assert_relative_eq!(effective_squeezing(&s).unwrap(), ratio, max_relative = 1e-12);
        assert_relative_eq!(
            effective_squeezing_with_noise(&s).unwrap(),
            ratio,
            max_relative = 1e-12
        );
    }

    #[test]
    fn noisy_effective_squeezing_without_gain_is_projection() {
        // G_opa = 1: the OPA is a lossy mirror with reflectivity (2η_opa − 1)².
        let theta = 0.04;
        let s = amp(5.2, 1.0, 0.7).with_theta_opo(theta).unwrap();
        let eta_equiv = 0.99 * 0.7 * (2.0f64 * 0.98 - 1.0).powi(2);
        let x = s.opo.x();
        let k = 4.0 * x * 0.98 * eta_equiv;
        let v = crate::chain::QuadVariance::new(1.0 - k / (1.0 + x).powi(2), 1.0 + k / (1.0 - x).powi(2))
            .unwrap();
        let projected = crate::chain::phase_noise_projection(
            &v,
            crate::quadrature::PhaseNoiseAngle::new(theta).unwrap(),
        );
        assert_relative_eq!(
            effective_squeezing_with_noise(&s).unwrap(),
            projected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn opa_phase_noise_barely_moves_effective_squeezing() {
        let s = amp(5.2, 5.2, 0.7);
        let base = to_decibels(effective_squeezing_with_noise(&s).unwrap()).unwrap();
        let noisy = to_decibels(
            effective_squeezing_with_noise(&s.with_theta_opa(0.05).unwrap()).unwrap(),
        )
        .unwrap();
        assert!((noisy - base).abs() < 0.2);
    }

    #[test]
    fn snr_examples() {
        let sig = SignalModel::default();
        let lossless = ChainSetup::conventional(CavityParams::new(0.98, 1.8).unwrap(), 1.0).unwrap();
        let s = snr_conventional(&lossless, &sig).unwrap();
        assert_relative_eq!(s, 3.440911769233808300, max_relative = 1e-13);
        let lossy = lossless.with_eta_det(0.7).unwrap();
        assert_relative_eq!(
            snr_conventional(&lossy, &sig).unwrap(),
            1.584667939714630525,
            max_relative = 1e-13
        );
        let tiny = SignalModel::new(1e-300).unwrap();
        assert!(snr_conventional(&lossy, &tiny).unwrap() < 1e-299);
        assert!(SignalModel::new(0.0).is_err());
        assert!(snr_conventional(&lossy, &SignalModel { p_sig: -1.0 }).is_err());

        assert_relative_eq!(
            snr_amplified(&amp(1.8, 2.4, 1.0), &sig).unwrap(),
            2.984638990567894248,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            snr_amplified(&amp(1.8, 2.4, 0.7), &sig).unwrap(),
            2.392528570138257213,
            max_relative = 1e-13
        );
    }

    #[test]
    fn amplifier_off_reduces_to_conventional() {
        let sig = SignalModel::default();
        let s = ChainSetup::amplified(
            CavityParams::new(0.98, 1.8).unwrap(),
            CavityParams::passive_lossless(),
            1.0,
            0.7,
        )
        .unwrap();
        let conv = snr_conventional(&s.without_amplifier(), &sig).unwrap();
        assert_relative_eq!(snr_amplified(&s, &sig).unwrap(), conv, max_relative = 1e-13);
        assert_relative_eq!(snr_enhancement(&s).unwrap(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn enhancement_examples() {
        let e = snr_enhancement(&amp(5.2, 10.0, 0.7)).unwrap();
        assert_relative_eq!(e, 3.443184191190314517, max_relative = 1e-12);
        // Fully lossy detector: ratio of residual variances, above 1 with gain.
        for g in [2.0, 10.0, 50.0] {
            let e = snr_enhancement(&amp(5.2, g, 1e-9)).unwrap();
            assert!(e.is_finite() && e > 1.0, "G_opa={g}: {e}");
        }
    }

    #[test]
    fn report_shapes() {
        let sig = SignalModel::default();
        let conv = ChainSetup::conventional(CavityParams::new(0.98, 1.8).unwrap(), 0.7).unwrap();
        assert!(metrics_report(&conv, &sig, false).unwrap().amplified.is_none());
        let r = metrics_report(&amp(1.8, 2.4, 0.7), &sig, false).unwrap();
        let a = r.amplified.unwrap();
        assert_relative_eq!(a.epsilon.unwrap(), a.snr_amp.unwrap() / r.snr_conv, max_relative = 1e-12);
        assert_relative_eq!(a.snr_amp_db.unwrap(), 3.788571325635347, max_relative = 1e-12);
        let lim = metrics_report(&amp(5.2, 2.4, 0.7), &sig, true).unwrap().amplified.unwrap();
        assert_eq!(lim.gain_evaluation, GainEvaluation::AnalyticLimit);
        assert_eq!(lim.eta_eff, 0.98);
    }
}
