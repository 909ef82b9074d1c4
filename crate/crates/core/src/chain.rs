//! Detection chains: vacuum entry ports, their transfer matrices to the
//! photodetector, and the resulting quadrature variances.
//!
//! Every loss point couples in a vacuum field with unit variance per
//! quadrature, uncorrelated with every other port. The detected variance of a
//! quadrature is therefore the sum of squared transfer entries over all ports.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{
    conjugate_rotation, opa_matrices, opo_matrices, CavityParams, Efficiency, NonlinearGain,
    PhaseNoiseAngle, TransferMatrix2, MINUS, PLUS,
};

/// Grid size per angle for the exact Gaussian phase average. Chain variances
/// are trigonometric polynomials of degree 4 in each angle, so 16 nodes
/// resolve every harmonic exactly.
const HARMONIC_NODES: usize = 16;

/// How the phase-noise angles of a setup are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseNoiseMode {
    /// The angle is a fixed rotation of the squeezing ellipse.
    #[default]
    Deterministic,
    /// The angle is the RMS of zero-mean Gaussian jitter; variances are
    /// averaged over it.
    GaussianRms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEfficiencies {
    pub eta_prop: Efficiency,
    pub eta_det: Efficiency,
}

impl ChannelEfficiencies {
    pub fn new(eta_prop: f64, eta_det: f64) -> Result<Self> {
        Ok(Self {
            eta_prop: Efficiency::new(eta_prop)?,
            eta_det: Efficiency::new(eta_det)?,
        })
    }
}

/// A complete experiment: squeezer, optional amplifier, losses and phase noise.
///
/// Without an OPA the setup describes conventional detection and `eta_prop`
/// and `theta_opa` are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSetup {
    pub opo: CavityParams,
    pub opa: Option<CavityParams>,
    pub efficiencies: ChannelEfficiencies,
    pub theta_opo: PhaseNoiseAngle,
    pub theta_opa: PhaseNoiseAngle,
    pub phase_noise_mode: PhaseNoiseMode,
}

impl ChainSetup {
    pub fn conventional(opo: CavityParams, eta_det: f64) -> Result<Self> {
        Ok(Self {
            opo,
            opa: None,
            efficiencies: ChannelEfficiencies::new(1.0, eta_det)?,
            theta_opo: PhaseNoiseAngle::ZERO,
            theta_opa: PhaseNoiseAngle::ZERO,
            phase_noise_mode: PhaseNoiseMode::Deterministic,
        })
    }

    pub fn amplified(
        opo: CavityParams,
        opa: CavityParams,
        eta_prop: f64,
        eta_det: f64,
    ) -> Result<Self> {
        Ok(Self {
            opo,
            opa: Some(opa),
            efficiencies: ChannelEfficiencies::new(eta_prop, eta_det)?,
            theta_opo: PhaseNoiseAngle::ZERO,
            theta_opa: PhaseNoiseAngle::ZERO,
            phase_noise_mode: PhaseNoiseMode::Deterministic,
        })
    }

    pub fn with_theta_opo(mut self, theta: f64) -> Result<Self> {
        self.theta_opo = PhaseNoiseAngle::new(theta)?;
        Ok(self)
    }

    pub fn with_theta_opa(mut self, theta: f64) -> Result<Self> {
        self.theta_opa = PhaseNoiseAngle::new(theta)?;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: PhaseNoiseMode) -> Self {
        self.phase_noise_mode = mode;
        self
    }

    pub fn with_eta_det(mut self, eta_det: f64) -> Result<Self> {
        self.efficiencies.eta_det = Efficiency::new(eta_det)?;
        Ok(self)
    }

    pub fn eta_det(&self) -> f64 {
        self.efficiencies.eta_det.value()
    }

    pub fn eta_prop(&self) -> f64 {
        self.efficiencies.eta_prop.value()
    }

    /// `η_opo · η_det`, the efficiency seen by the squeezing in conventional
    /// detection.
    pub fn eta_sqz(&self) -> f64 {
        self.opo.eta() * self.eta_det()
    }

    /// `η_opo · η_prop`, the efficiency seen by the squeezing before the OPA.
    pub fn eta_sqz_tilde(&self) -> f64 {
        self.opo.eta() * self.eta_prop()
    }

    pub fn is_conventional(&self) -> bool {
        self.opa.is_none()
    }

    pub fn has_phase_noise(&self) -> bool {
        let opa_noise = self.opa.is_some() && !self.theta_opa.is_zero();
        !self.theta_opo.is_zero() || opa_noise
    }

    /// The same chain with the OPO pump switched off (vacuum seed).
    pub fn vacuum_seeded(&self) -> Self {
        let mut s = *self;
        s.opo.gain = NonlinearGain::OFF;
        s
    }

    /// The same source and detector without the amplifier.
    pub fn without_amplifier(&self) -> Self {
        let mut s = *self;
        s.opa = None;
        s
    }

    fn require_amplifier(&self) -> Result<CavityParams> {
        self.opa
            .ok_or_else(|| Error::Misuse("amplified scheme requires an OPA".to_string()))
    }

    fn require_conventional(&self) -> Result<()> {
        if self.opa.is_some() {
            return Err(Error::Misuse(
                "conventional scheme requires the OPA to be absent".to_string(),
            ));
        }
        Ok(())
    }

    fn require_no_phase_noise(&self) -> Result<()> {
        if self.has_phase_noise() {
            return Err(Error::Misuse(
                "closed form is rotation-free; use chain_variance or phase_noise_projection for nonzero angles"
                    .to_string(),
            ));
        }
        Ok(())
    }
}

/// Vacuum entry port of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortLabel {
    /// OPO input (reflection) port.
    In,
    /// OPO intracavity loss.
    Lo,
    /// Propagation loss between OPO and OPA.
    Prop,
    /// OPA intracavity loss.
    La,
    /// Detection loss.
    Det,
}

impl PortLabel {
    pub const ALL: [PortLabel; 5] = [
        PortLabel::In,
        PortLabel::Lo,
        PortLabel::Prop,
        PortLabel::La,
        PortLabel::Det,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTransfer {
    pub port: PortLabel,
    pub matrix: TransferMatrix2,
}

impl ChannelTransfer {
    pub fn new(port: PortLabel, matrix: TransferMatrix2) -> Self {
        Self { port, matrix }
    }
}

/// Detected variances `(V₋, V₊)` in vacuum units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadVariance {
    pub v_minus: f64,
    pub v_plus: f64,
}

impl QuadVariance {
    pub fn new(v_minus: f64, v_plus: f64) -> Result<Self> {
        for v in [v_minus, v_plus] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Misuse(format!(
                    "variance must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { v_minus, v_plus })
    }

    pub fn vacuum() -> Self {
        Self {
            v_minus: 1.0,
            v_plus: 1.0,
        }
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.v_minus * self.v_plus
    }
}

fn conventional_channels(
    setup: &ChainSetup,
    theta_opo: PhaseNoiseAngle,
) -> Vec<ChannelTransfer> {
    let eta_det = setup.eta_det();
    let (m_in, m_l) = opo_matrices(&setup.opo);
    let s = eta_det.sqrt();
    vec![
        ChannelTransfer::new(PortLabel::In, conjugate_rotation(&m_in, theta_opo).scale(s)),
        ChannelTransfer::new(PortLabel::Lo, conjugate_rotation(&m_l, theta_opo).scale(s)),
        ChannelTransfer::new(
            PortLabel::Det,
            TransferMatrix2::identity().scale((1.0 - eta_det).sqrt()),
        ),
    ]
}

fn amplified_channels(
    setup: &ChainSetup,
    opa: &CavityParams,
    theta_opo: PhaseNoiseAngle,
    theta_opa: PhaseNoiseAngle,
) -> Vec<ChannelTransfer> {
    let eta_det = setup.eta_det();
    let eta_prop = setup.eta_prop();
    let (o_in, o_l) = opo_matrices(&setup.opo);
    let (a_in, a_l) = opa_matrices(opa);
    let a_in_rot = conjugate_rotation(&a_in, theta_opa);
    // R_opa · M_in^opa · R_opo · M · R_opo⁻¹ · R_opa⁻¹ is the conjugation of
    // M_in^opa · (R_opo M R_opo⁻¹) by R_opa.
    let through_opa =
        |m: &TransferMatrix2| conjugate_rotation(&(a_in * conjugate_rotation(m, theta_opo)), theta_opa);
    let squeezed = (eta_prop * eta_det).sqrt();
    vec![
        ChannelTransfer::new(PortLabel::In, through_opa(&o_in).scale(squeezed)),
        ChannelTransfer::new(PortLabel::Lo, through_opa(&o_l).scale(squeezed)),
        ChannelTransfer::new(
            PortLabel::Prop,
            a_in_rot.scale(((1.0 - eta_prop) * eta_det).sqrt()),
        ),
        ChannelTransfer::new(
            PortLabel::La,
            conjugate_rotation(&a_l, theta_opa).scale(eta_det.sqrt()),
        ),
        ChannelTransfer::new(
            PortLabel::Det,
            TransferMatrix2::identity().scale((1.0 - eta_det).sqrt()),
        ),
    ]
}

/// Channels for the conventional scheme: `in`, `lo`, `det`.
///
/// `theta_opo` is applied as a fixed rotation.
pub fn conventional_chain(setup: &ChainSetup) -> Result<Vec<ChannelTransfer>> {
    setup.require_conventional()?;
    Ok(conventional_channels(setup, setup.theta_opo))
}

/// Channels for the amplified scheme: `in`, `lo`, `prop`, `la`, `det`.
///
/// Both angles are applied as fixed rotations.
pub fn amplified_chain(setup: &ChainSetup) -> Result<Vec<ChannelTransfer>> {
    let opa = setup.require_amplifier()?;
    Ok(amplified_channels(setup, &opa, setup.theta_opo, setup.theta_opa))
}

/// Channels of whichever scheme the setup describes, with the given angles
/// standing in for the setup's own.
pub fn chain_with_angles(
    setup: &ChainSetup,
    theta_opo: PhaseNoiseAngle,
    theta_opa: PhaseNoiseAngle,
) -> Vec<ChannelTransfer> {
    match &setup.opa {
        None => conventional_channels(setup, theta_opo),
        Some(opa) => amplified_channels(setup, opa, theta_opo, theta_opa),
    }
}

/// Sums `|m_ij|²` over all channels, assuming unit-variance, mutually
/// uncorrelated vacuum at every port.
pub fn variance_from_chain(channels: &[ChannelTransfer]) -> Result<QuadVariance> {
    if channels.is_empty() {
        return Err(Error::Misuse("empty channel list".to_string()));
    }
    let mut seen = [false; 5];
    for c in channels {
        if std::mem::replace(&mut seen[c.port.index()], true) {
            return Err(Error::Misuse(format!("duplicate port {:?}", c.port)));
        }
        if !c.matrix.is_finite() {
            return Err(Error::Misuse(format!("non-finite transfer on port {:?}", c.port)));
        }
    }
    let (v_minus, v_plus) = raw_variance(channels);
    QuadVariance::new(v_minus, v_plus)
}

fn raw_variance(channels: &[ChannelTransfer]) -> (f64, f64) {
    channels.iter().fold((0.0, 0.0), |(m, p), c| {
        (m + c.matrix.row_power(MINUS), p + c.matrix.row_power(PLUS))
    })
}

fn harmonic_weights(sigma: f64) -> Vec<(f64, f64)> {
    if sigma == 0.0 {
        return vec![(0.0, 1.0)];
    }
    let n = HARMONIC_NODES;
    let damp: Vec<f64> = (1..n / 2)
        .map(|m| (-0.5 * (m as f64 * sigma).powi(2)).exp())
        .collect();
    (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            let w = 1.0
                + 2.0
                    * damp
                        .iter()
                        .enumerate()
                        .map(|(i, d)| d * ((i + 1) as f64 * phi).cos())
                        .sum::<f64>();
            (phi, w / n as f64)
        })
        .collect()
}

/// Detected variances of the setup, honouring its phase-noise mode.
///
/// In deterministic mode the angles are fixed rotations. In Gaussian mode the
/// result is the exact expectation over independent zero-mean normal angles
/// with the given RMS values.
pub fn chain_variance(setup: &ChainSetup) -> Result<QuadVariance> {
    match setup.phase_noise_mode {
        PhaseNoiseMode::Deterministic => {
            variance_from_chain(&chain_with_angles(setup, setup.theta_opo, setup.theta_opa))
        }
        PhaseNoiseMode::GaussianRms => {
            let opa_sigma = if setup.opa.is_some() {
                setup.theta_opa.radians()
            } else {
                0.0
            };
            let w_opo = harmonic_weights(setup.theta_opo.radians());
            let w_opa = harmonic_weights(opa_sigma);
            let (mut v_minus, mut v_plus) = (0.0, 0.0);
            for &(phi_o, wo) in &w_opo {
                for &(phi_a, wa) in &w_opa {
                    let chain = chain_with_angles(
                        setup,
                        PhaseNoiseAngle::new(phi_o)?,
                        PhaseNoiseAngle::new(phi_a)?,
                    );
                    let (m, p) = raw_variance(&chain);
                    v_minus += wo * wa * m;
                    v_plus += wo * wa * p;
                }
            }
            QuadVariance::new(v_minus, v_plus)
        }
    }
}

/// Closed-form conventional variances,
/// `V∓ = 1 ∓ 4x η_sqz / (1 ± x)²` with `η_sqz = η_opo η_det`.
pub fn conventional_variance(setup: &ChainSetup) -> Result<QuadVariance> {
    setup.require_conventional()?;
    setup.require_no_phase_noise()?;
    let x = setup.opo.x();
    let k = 4.0 * x * setup.eta_sqz();
    QuadVariance::new(1.0 - k / (1.0 + x).powi(2), 1.0 + k / (1.0 - x).powi(2))
}

/// Closed-form `V₋` of the amplified scheme. `V₊` has no closed form and is
/// taken from the chain.
pub fn amplified_variance(setup: &ChainSetup) -> Result<QuadVariance> {
    let opa = setup.require_amplifier()?;
    setup.require_no_phase_noise()?;
    let v_minus = amplified_v_minus(setup, &opa);
    let v_plus = variance_from_chain(&amplified_chain(setup)?)?.v_plus;
    QuadVariance::new(v_minus, v_plus)
}

pub(crate) fn amplified_v_minus(setup: &ChainSetup, opa: &CavityParams) -> f64 {
    let xo = setup.opo.x();
    let xa = opa.x();
    let eta_det = setup.eta_det();
    let eta_opa = opa.eta();
    let added = 4.0 * xa * eta_det * eta_opa / (1.0 - xa).powi(2);
    let squeeze = 4.0 * xo * setup.eta_sqz_tilde() / (1.0 + xo).powi(2);
    let transfer = eta_det * (2.0 * eta_opa + xa - 1.0).powi(2) / (1.0 - xa).powi(2);
    1.0 + added - squeeze * transfer
}

/// Variance seen in the measurement quadrature when the ellipse is rotated by
/// `θ`: `V₋ cos²θ + V₊ sin²θ`.
pub fn phase_noise_projection(v: &QuadVariance, theta: PhaseNoiseAngle) -> f64 {
    let (s, c) = theta.radians().sin_cos();
    v.v_minus * c * c + v.v_plus * s * s
}

/// Expectation of [`phase_noise_projection`] over `θ ~ N(0, θ̃²)`:
/// `V₋(1 + e^{−2θ̃²})/2 + V₊(1 − e^{−2θ̃²})/2`.
pub fn gaussian_phase_average(v: &QuadVariance, theta_rms: PhaseNoiseAngle) -> f64 {
    let d = (-2.0 * theta_rms.radians().powi(2)).exp();
    0.5 * (v.v_minus * (1.0 + d) + v.v_plus * (1.0 - d))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn realistic_conv(g_opo: f64) -> ChainSetup {
        ChainSetup::conventional(CavityParams::new(0.98, g_opo).unwrap(), 0.7).unwrap()
    }

    fn realistic_amp(g_opo: f64, g_opa: f64) -> ChainSetup {
        ChainSetup::amplified(
            CavityParams::new(0.98, g_opo).unwrap(),
            CavityParams::new(0.98, g_opa).unwrap(),
            0.99,
            0.7,
        )
        .unwrap()
    }

    fn port(chain: &[ChannelTransfer], p: PortLabel) -> TransferMatrix2 {
        chain.iter().find(|c| c.port == p).unwrap().matrix
    }

    #[test]
    fn identity_conventional_chain() {
        let s = ChainSetup::conventional(CavityParams::passive_lossless(), 1.0).unwrap();
        let chain = conventional_chain(&s).unwrap();
        assert_eq!(chain.len(), 3);
        assert_eq!(port(&chain, PortLabel::In), TransferMatrix2::identity());
        assert_eq!(port(&chain, PortLabel::Lo), TransferMatrix2::zero());
        assert_eq!(port(&chain, PortLabel::Det), TransferMatrix2::zero());
    }

    #[test]
    fn conventional_in_channel_entry() {
        let chain = conventional_chain(&realistic_conv(1.8)).unwrap();
        assert_relative_eq!(
            port(&chain, PortLabel::In).m[0][0].re,
            0.470367020344555830,
            max_relative = 1e-13
        );
    }

    #[test]
    fn opaque_detector() {
        let s = ChainSetup::conventional(CavityParams::new(0.9, 3.0).unwrap(), 0.0).unwrap();
        let chain = conventional_chain(&s).unwrap();
        assert_eq!(port(&chain, PortLabel::In), TransferMatrix2::zero());
        assert_eq!(port(&chain, PortLabel::Lo), TransferMatrix2::zero());
        assert_eq!(port(&chain, PortLabel::Det), TransferMatrix2::identity());
        assert_eq!(variance_from_chain(&chain).unwrap(), QuadVariance::vacuum());
    }

    #[test]
    fn scheme_misuse_errors() {
        assert!(conventional_chain(&realistic_amp(1.8, 2.4)).is_err());
        assert!(amplified_chain(&realistic_conv(1.8)).is_err());
        assert!(conventional_variance(&realistic_amp(1.8, 2.4)).is_err());
        assert!(amplified_variance(&realistic_conv(1.8)).is_err());
        let noisy = realistic_conv(1.8).with_theta_opo(0.01).unwrap();
        assert!(matches!(conventional_variance(&noisy), Err(Error::Misuse(_))));
        let noisy = realistic_amp(1.8, 2.4).with_theta_opa(0.01).unwrap();
        assert!(amplified_variance(&noisy).is_err());
    }

    #[test]
    fn identity_amplified_chain() {
        let s = ChainSetup::amplified(
            CavityParams::passive_lossless(),
            CavityParams::passive_lossless(),
            1.0,
            1.0,
        )
        .unwrap();
        let chain = amplified_chain(&s).unwrap();
        assert_eq!(chain.len(), 5);
        assert_eq!(port(&chain, PortLabel::In), TransferMatrix2::identity());
        for p in [PortLabel::Lo, PortLabel::Prop, PortLabel::La, PortLabel::Det] {
            assert_eq!(port(&chain, p), TransferMatrix2::zero());
        }
        assert_eq!(variance_from_chain(&chain).unwrap(), QuadVariance::vacuum());
    }

    #[test]
    fn amplified_chain_is_diagonal_without_rotation() {
        let chain = amplified_chain(&realistic_amp(5.2, 10.0)).unwrap();
        assert!(chain.iter().all(|c| c.matrix.is_diagonal()));
        let chain = amplified_chain(&realistic_amp(1.8, 2.4)).unwrap();
        assert_relative_eq!(
            port(&chain, PortLabel::In).m[0][0].re,
            0.953062955492614948,
            max_relative = 1e-13
        );
    }

    #[test]
    fn variance_from_chain_examples() {
        let det_only = [ChannelTransfer::new(PortLabel::Det, TransferMatrix2::identity())];
        assert_eq!(variance_from_chain(&det_only).unwrap(), QuadVariance::vacuum());
        assert!(variance_from_chain(&[]).is_err());
        let dup = [det_only[0], det_only[0]];
        assert!(variance_from_chain(&dup).is_err());

        let v = variance_from_chain(&conventional_chain(&realistic_conv(1.8)).unwrap()).unwrap();
        assert_relative_eq!(v.v_minus, 0.556108801200719391, max_relative = 1e-12);
        assert_relative_eq!(v.v_plus, 2.257737681844346320, max_relative = 1e-12);
        let v = variance_from_chain(&amplified_chain(&realistic_amp(1.8, 2.4)).unwrap()).unwrap();
        assert_relative_eq!(v.v_minus, 1.512203917169148057, max_relative = 1e-12);
    }

    #[test]
    fn conventional_closed_form_examples() {
        let lossless = ChainSetup::conventional(CavityParams::new(0.98, 1.8).unwrap(), 1.0).unwrap();
        let v = conventional_variance(&lossless).unwrap();
        assert_relative_eq!(v.v_minus, 0.365869716001027701, max_relative = 1e-13);
        assert_relative_eq!(v.v_plus, 2.796768116920494743, max_relative = 1e-13);
        let v = conventional_variance(&realistic_conv(1.8)).unwrap();
        assert_relative_eq!(v.v_minus, 0.556108801200719391, max_relative = 1e-13);
        assert_eq!(conventional_variance(&realistic_conv(1.0)).unwrap(), QuadVariance::vacuum());
    }

    #[test]
    fn amplified_closed_form_examples() {
        let v = amplified_variance(&realistic_amp(1.8, 2.4)).unwrap();
        assert_relative_eq!(v.v_minus, 1.512203917169148057, max_relative = 1e-13);
        let chain = variance_from_chain(&amplified_chain(&realistic_amp(1.8, 2.4)).unwrap()).unwrap();
        assert_relative_eq!(v.v_plus, chain.v_plus, max_relative = 1e-15);

        // Vacuum seed: only the amplified OPA noise remains.
        let s = realistic_amp(1.0, 2.4);
        let xa = 1.0 - 1.0 / 2.4f64.sqrt();
        let expected = 1.0 + 4.0 * xa * 0.7 * 0.98 / (1.0 - xa).powi(2);
        assert_relative_eq!(amplified_variance(&s).unwrap().v_minus, expected, max_relative = 1e-14);
    }

    #[test]
    fn lossless_equal_gains_are_minimum_uncertainty() {
        for g in [1.0, 1.8, 5.2, 10.0] {
            let p = CavityParams::new(1.0, g).unwrap();
            let s = ChainSetup::amplified(p, p, 1.0, 1.0).unwrap();
            let v = amplified_variance(&s).unwrap();
            assert_relative_eq!(v.uncertainty_product(), 1.0, max_relative = 1e-12);
            // Lossless OPA undoes the lossless OPO exactly.
            assert_relative_eq!(v.v_minus, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let v = QuadVariance::new(0.1063, 9.9987).unwrap();
        assert_eq!(phase_noise_projection(&v, PhaseNoiseAngle::ZERO), 0.1063);
        let quarter = phase_noise_projection(&v, PhaseNoiseAngle::new(PI / 2.0).unwrap());
        assert_relative_eq!(quarter, 9.9987, max_relative = 1e-15);
        let t = PhaseNoiseAngle::new(0.02).unwrap();
        assert_relative_eq!(phase_noise_projection(&v, t), 0.110256432433470912, max_relative = 1e-13);
    }

    #[test]
    fn gaussian_average_examples() {
        let v = QuadVariance::new(0.1063, 9.9987).unwrap();
        assert_eq!(gaussian_phase_average(&v, PhaseNoiseAngle::ZERO), 0.1063);
        let wide = gaussian_phase_average(&v, PhaseNoiseAngle::new(50.0).unwrap());
        assert_relative_eq!(wide, (0.1063 + 9.9987) / 2.0, max_relative = 1e-15);
        let t = PhaseNoiseAngle::new(0.02).unwrap();
        let g = gaussian_phase_average(&v, t);
        assert_relative_eq!(g, 0.110255377637991332, max_relative = 1e-13);
        assert!((g - phase_noise_projection(&v, t)).abs() < 2e-5);
    }

    #[test]
    fn harmonic_average_matches_projection_for_conventional_chain() {
        // Rotation of a diagonal OPO output collapses to the projection form.
        let s = realistic_conv(5.2)
            .with_theta_opo(0.05)
            .unwrap()
            .with_mode(PhaseNoiseMode::GaussianRms);
        let base = conventional_variance(&realistic_conv(5.2)).unwrap();
        let exact = chain_variance(&s).unwrap().v_minus;
        assert_relative_eq!(
            exact,
            gaussian_phase_average(&base, PhaseNoiseAngle::new(0.05).unwrap()),
            max_relative = 1e-12
        );
    }

    #[test]
    fn harmonic_average_matches_brute_quadrature() {
        // Independent check: Gauss–Hermite-free midpoint quadrature over ±8σ.
        let sigma = 0.3;
        let s = realistic_amp(5.2, 5.2)
            .with_theta_opa(sigma)
            .unwrap()
            .with_mode(PhaseNoiseMode::GaussianRms);
        let exact = chain_variance(&s).unwrap();
        let n = 20_000;
        let (lo, hi) = (-8.0 * sigma, 8.0 * sigma);
        let h = (hi - lo) / n as f64;
        let (mut m, mut p) = (0.0, 0.0);
        for i in 0..n {
            let t = lo + (i as f64 + 0.5) * h;
            let pdf = (-0.5 * (t / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
            let v = variance_from_chain(&chain_with_angles(
                &s,
                PhaseNoiseAngle::ZERO,
                PhaseNoiseAngle::new(t).unwrap(),
            ))
            .unwrap();
            m += pdf * h * v.v_minus;
            p += pdf * h * v.v_plus;
        }
        assert_relative_eq!(exact.v_minus, m, max_relative = 1e-9);
        assert_relative_eq!(exact.v_plus, p, max_relative = 1e-9);
    }

    #[test]
    fn conventional_variance_non_increasing_in_detection_efficiency() {
        let mut last = 0.0;
        for i in (0..=100).rev() {
            let s = realistic_conv(5.2).with_eta_det(i as f64 / 100.0).unwrap();
            let v = conventional_variance(&s).unwrap().v_minus;
            assert!(v >= last - 1e-15);
            last = v;
        }
    }

    #[test]
    fn rotation_sandwich_consistency() {
        let theta = PhaseNoiseAngle::new(0.07).unwrap();
        let opa = CavityParams::new(0.95, 5.2).unwrap();
        let s = ChainSetup::amplified(CavityParams::passive_lossless(), opa, 1.0, 0.8)
            .unwrap()
            .with_theta_opa(theta.radians())
            .unwrap();
        let rotated = variance_from_chain(&amplified_chain(&s).unwrap()).unwrap();
        let mut plain = s;
        plain.theta_opa = PhaseNoiseAngle::ZERO;
        let conj: Vec<_> = amplified_chain(&plain)
            .unwrap()
            .into_iter()
            .map(|c| ChannelTransfer::new(c.port, conjugate_rotation(&c.matrix, theta)))
            .collect();
        let sandwich = variance_from_chain(&conj).unwrap();
        assert!((rotated.v_minus - sandwich.v_minus).abs() < 1e-12);
        assert!((rotated.v_plus - sandwich.v_plus).abs() < 1e-12);
    }

    #[test]
    fn signal_amplification_matches_in_channel() {
        let s = realistic_amp(1.8, 2.4);
        let chain = amplified_chain(&s).unwrap();
        let entry = port(&chain, PortLabel::In).m[0][0].re;
        let o_in = opo_matrices(&s.opo).0.m[0][0].re;
        let xa = s.opa.unwrap().x();
        let expected = (2.0 * 0.98 / (1.0 - xa) - 1.0).powi(2);
        assert_relative_eq!(
            (entry / o_in).powi(2) / (0.99 * 0.7),
            expected,
            max_relative = 1e-13
        );
    }
}
