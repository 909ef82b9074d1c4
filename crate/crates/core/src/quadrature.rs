//! Quadrature-space building blocks for a single nonlinear cavity.
//!
//! Every matrix in this crate acts on the column vector `(X₋, X₊)`: the phase
//! quadrature first, the amplitude quadrature second. Variances are normalised
//! so that a vacuum input has unit variance in each quadrature.
//!
//! A cavity is described either by its escape efficiency and nonlinear gain
//! ([`CavityParams`]) or by its decay rates and coupling ([`CavityRates`]).
//! The zero-frequency transfer matrices ([`opo_matrices`], [`opa_matrices`])
//! are closed forms; [`freq_output_transfer`] solves the linearised cavity at
//! an arbitrary sideband frequency and reduces to them at `Ω = 0`.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Index of the phase quadrature `X₋`.
pub const MINUS: usize = 0;
/// Index of the amplitude quadrature `X₊`.
pub const PLUS: usize = 1;

/// Largest accepted pump parameter. Closer to threshold the transfer matrices
/// blow up and the request is rejected instead.
pub const MAX_PUMP: f64 = 1.0 - 1e-9;

/// Condition number above which the frequency-domain solve is refused.
const MAX_CONDITION: f64 = 1e12;

/// Nonlinear (parametric) gain of a cavity. A gain of 1 means the pump is off.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NonlinearGain(f64);

impl NonlinearGain {
    pub const OFF: NonlinearGain = NonlinearGain(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(domain("gain", value, "must be finite"));
        }
        if value < 1.0 {
            return Err(domain("gain", value, "must be >= 1"));
        }
        if 1.0 - 1.0 / value.sqrt() > MAX_PUMP {
            return Err(domain("gain", value, "too close to oscillation threshold"));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for NonlinearGain {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<NonlinearGain> for f64 {
    fn from(g: NonlinearGain) -> f64 {
        g.0
    }
}

/// Normalised pump parameter `x = |q|/κ`, below threshold.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PumpParameter(f64);

impl PumpParameter {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(domain("pump parameter", value, "must be finite"));
        }
        if value < 0.0 {
            return Err(domain("pump parameter", value, "must be >= 0"));
        }
        if value >= 1.0 {
            return Err(domain(
                "pump parameter",
                value,
                "at or above oscillation threshold",
            ));
        }
        if value > MAX_PUMP {
            return Err(domain(
                "pump parameter",
                value,
                "too close to oscillation threshold",
            ));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A power efficiency (escape, propagation or detection) in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Efficiency(f64);

impl Efficiency {
    pub const UNIT: Efficiency = Efficiency(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(domain("efficiency", value, "must lie in [0, 1]"));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The complementary loss `1 − η`.
    pub fn loss(self) -> f64 {
        1.0 - self.0
    }
}

impl TryFrom<f64> for Efficiency {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Efficiency> for f64 {
    fn from(e: Efficiency) -> f64 {
        e.0
    }
}

/// Converts a nonlinear gain to the pump parameter, `x = 1 − 1/√G`.
pub fn pump_from_gain(g: NonlinearGain) -> PumpParameter {
    // NonlinearGain already guarantees the result is below the cap.
    PumpParameter(1.0 - 1.0 / g.0.sqrt())
}

/// Inverse of [`pump_from_gain`], `G = 1/(1 − x)²`.
pub fn gain_from_pump(x: PumpParameter) -> NonlinearGain {
    let r = 1.0 - x.0;
    NonlinearGain(1.0 / (r * r))
}

/// Escape efficiency and gain of one cavity (OPO or OPA).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub escape_efficiency: Efficiency,
    pub gain: NonlinearGain,
}

impl CavityParams {
    pub fn new(escape_efficiency: f64, gain: f64) -> Result<Self> {
        Ok(Self {
            escape_efficiency: Efficiency::new(escape_efficiency)?,
            gain: NonlinearGain::new(gain)?,
        })
    }

    /// A lossless cavity with its pump switched off: a perfect mirror.
    pub fn passive_lossless() -> Self {
        Self {
            escape_efficiency: Efficiency::UNIT,
            gain: NonlinearGain::OFF,
        }
    }

    pub fn pump(&self) -> PumpParameter {
        pump_from_gain(self.gain)
    }

    pub fn eta(&self) -> f64 {
        self.escape_efficiency.value()
    }

    pub fn x(&self) -> f64 {
        self.pump().value()
    }
}

/// Which quadrature a cavity de-amplifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeOrientation {
    /// Squeezes `X₋`, anti-squeezes `X₊` (the OPO convention).
    Squeezer,
    /// Amplifies `X₋`, orthogonal to the squeezer (the OPA convention).
    Amplifier,
}

/// Decay rates and nonlinear coupling of a cavity.
///
/// Rates share one unit; the default normalisation is `kappa_total = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityRates {
    pub kappa_in: f64,
    pub kappa_l: f64,
    pub kappa_total: f64,
    pub coupling_q: f64,
    /// Always zero; kept so the pump phase is visible in serialised setups.
    pub pump_phase: f64,
}

impl CavityRates {
    pub fn new(kappa_in: f64, kappa_l: f64, coupling_q: f64, pump_phase: f64) -> Result<Self> {
        for (name, v) in [
            ("kappa_in", kappa_in),
            ("kappa_l", kappa_l),
            ("coupling_q", coupling_q),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(domain(name, v, "must be finite and >= 0"));
            }
        }
        if pump_phase != 0.0 {
            return Err(domain("pump_phase", pump_phase, "only a zero pump phase is modelled"));
        }
        let kappa_total = kappa_in + kappa_l;
        if kappa_total <= 0.0 {
            return Err(domain("kappa_total", kappa_total, "must be > 0"));
        }
        if coupling_q / kappa_total > MAX_PUMP {
            return Err(domain(
                "coupling_q",
                coupling_q,
                "at or above oscillation threshold",
            ));
        }
        Ok(Self {
            kappa_in,
            kappa_l,
            kappa_total,
            coupling_q,
            pump_phase,
        })
    }

    pub fn escape_efficiency(&self) -> f64 {
        self.kappa_in / self.kappa_total
    }

    pub fn pump(&self) -> f64 {
        self.coupling_q / self.kappa_total
    }
}

/// Maps `(η, x)` onto rates with the given total decay rate.
pub fn cavity_rates_from_params(p: &CavityParams, kappa_total: f64) -> Result<CavityRates> {
    if !kappa_total.is_finite() || kappa_total <= 0.0 {
        return Err(domain("kappa_total", kappa_total, "must be finite and > 0"));
    }
    let eta = p.eta();
    Ok(CavityRates {
        kappa_in: eta * kappa_total,
        kappa_l: (1.0 - eta) * kappa_total,
        kappa_total,
        coupling_q: p.x() * kappa_total,
        pump_phase: 0.0,
    })
}

/// Sideband angular frequency `Ω`, in the same units as the cavity rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrequencyOffset(pub f64);

/// Phase-noise angle in radians: a fixed offset or an RMS jitter, depending on
/// the [`crate::chain::PhaseNoiseMode`] it is used with.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PhaseNoiseAngle(f64);

impl PhaseNoiseAngle {
    pub const ZERO: PhaseNoiseAngle = PhaseNoiseAngle(0.0);

    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(domain("theta", theta, "must be finite"));
        }
        Ok(Self(theta))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// Whether the small-angle treatment of phase noise is meaningful.
    pub fn is_small_angle(self) -> bool {
        self.0.abs() < std::f64::consts::FRAC_PI_2
    }
}

impl TryFrom<f64> for PhaseNoiseAngle {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PhaseNoiseAngle> for f64 {
    fn from(t: PhaseNoiseAngle) -> f64 {
        t.0
    }
}

/// Complex 2×2 matrix on `(X₋, X₊)`, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix2 {
    pub m: [[Complex64; 2]; 2],
}

impl TransferMatrix2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        let c = |v: f64| Complex64::new(v, 0.0);
        Self::new([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn diag(minus: f64, plus: f64) -> Self {
        Self::from_real([[minus, 0.0], [0.0, plus]])
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::diag(0.0, 0.0)
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    /// Real part of every entry.
    pub fn re(&self) -> [[f64; 2]; 2] {
        [
            [self.m[0][0].re, self.m[0][1].re],
            [self.m[1][0].re, self.m[1][1].re],
        ]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let [[a, b], [c, e]] = self.m;
        Some(Self::new([[e / d, -b / d], [-c / d, a / d]]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ_j |m_ij|²`: the variance row `i` collects from unit-variance,
    /// uncorrelated inputs.
    pub fn row_power(&self, row: usize) -> f64 {
        self.m[row].iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn is_diagonal(&self) -> bool {
        self.m[0][1] == Complex64::new(0.0, 0.0) && self.m[1][0] == Complex64::new(0.0, 0.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for TransferMatrix2 {
    type Output = TransferMatrix2;
    fn mul(self, rhs: TransferMatrix2) -> TransferMatrix2 {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        TransferMatrix2::new(out)
    }
}

impl Add for TransferMatrix2 {
    type Output = TransferMatrix2;
    fn add(self, rhs: TransferMatrix2) -> TransferMatrix2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

fn cavity_diagonals(p: &CavityParams) -> ([f64; 2], [f64; 2]) {
    let eta = p.eta();
    let x = p.x();
    let leak = 2.0 * (eta * (1.0 - eta)).sqrt();
    // Entries for the de-amplified and amplified quadrature, in that order.
    (
        [2.0 * eta / (1.0 + x) - 1.0, 2.0 * eta / (1.0 - x) - 1.0],
        [leak / (1.0 + x), leak / (1.0 - x)],
    )
}

/// Input-port (reflection) and loss-port (transmission) matrices of the OPO
/// at zero sideband frequency. The OPO squeezes `X₋`.
pub fn opo_matrices(p: &CavityParams) -> (TransferMatrix2, TransferMatrix2) {
    let (input, loss) = cavity_diagonals(p);
    (
        TransferMatrix2::diag(input[0], input[1]),
        TransferMatrix2::diag(loss[0], loss[1]),
    )
}

/// Same as [`opo_matrices`] with the squeezing axis turned by 90°, so the OPA
/// amplifies `X₋`.
pub fn opa_matrices(p: &CavityParams) -> (TransferMatrix2, TransferMatrix2) {
    let (input, loss) = cavity_diagonals(p);
    (
        TransferMatrix2::diag(input[1], input[0]),
        TransferMatrix2::diag(loss[1], loss[0]),
    )
}

/// Cavity matrices for the given orientation.
pub fn cavity_matrices(
    p: &CavityParams,
    orientation: SqueezeOrientation,
) -> (TransferMatrix2, TransferMatrix2) {
    match orientation {
        SqueezeOrientation::Squeezer => opo_matrices(p),
        SqueezeOrientation::Amplifier => opa_matrices(p),
    }
}

/// Rotation of the quadrature frame by `θ`.
pub fn rotation(theta: PhaseNoiseAngle) -> TransferMatrix2 {
    let (s, c) = theta.0.sin_cos();
    TransferMatrix2::from_real([[c, -s], [s, c]])
}

/// `R(θ) · m · R(θ)⁻¹`.
pub fn conjugate_rotation(m: &TransferMatrix2, theta: PhaseNoiseAngle) -> TransferMatrix2 {
    if theta.is_zero() {
        return *m;
    }
    rotation(theta) * *m * rotation(PhaseNoiseAngle(-theta.0))
}

/// Field-to-quadrature conversion `Γ`, rows `(X₋, X₊)` over `(δA, δA†)`.
fn gamma() -> TransferMatrix2 {
    TransferMatrix2::new([
        [Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0)],
        [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
    ])
}

/// Quadrature transfer matrices of one cavity at sideband frequency `Ω`,
/// returned as `(input port, loss port)`.
///
/// Solves the linearised cavity in the field basis and converts to
/// quadratures: `M_in Γ (iΩ − M_a)⁻¹ M_in Γ⁻¹ − I` for the reflected input and
/// `M_in Γ (iΩ − M_a)⁻¹ M_l Γ⁻¹` for the loss port. The amplifier orientation
/// is obtained by flipping the sign of the coupling inside the solve.
pub fn freq_output_transfer(
    r: &CavityRates,
    omega: FrequencyOffset,
    orientation: SqueezeOrientation,
) -> Result<(TransferMatrix2, TransferMatrix2)> {
    if !omega.0.is_finite() {
        return Err(domain("omega", omega.0, "must be finite"));
    }
    if r.pump_phase != 0.0 {
        return Err(domain("pump_phase", r.pump_phase, "only a zero pump phase is modelled"));
    }
    if r.coupling_q >= r.kappa_total {
        return Err(domain(
            "coupling_q",
            r.coupling_q,
            "at or above oscillation threshold",
        ));
    }
    let q = match orientation {
        SqueezeOrientation::Squeezer => r.coupling_q,
        SqueezeOrientation::Amplifier => -r.coupling_q,
    };
    let kappa = r.kappa_total;
    // iΩI − M_a with M_a = [[−κ, q], [q, −κ]].
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let resolvent_arg = TransferMatrix2::new([[c(kappa, omega.0), c(-q, 0.0)], [c(-q, 0.0), c(kappa, omega.0)]]);
    let resolvent = resolvent_arg.inverse().ok_or_else(|| {
        Error::Numerical("cavity resolvent is singular".to_string())
    })?;
    let condition = resolvent_arg.frobenius_norm() * resolvent.frobenius_norm();
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::Numerical(format!(
            "cavity resolvent condition number {condition:.3e} exceeds {MAX_CONDITION:.0e}"
        )));
    }

    let g = gamma();
    let g_inv = g.inverse().expect("Γ is invertible");
    let in_coupling = (2.0 * r.kappa_in).sqrt();
    let loss_coupling = (2.0 * r.kappa_l).sqrt();
    let core = g * resolvent * g_inv;
    let input = core.scale(in_coupling * in_coupling) + TransferMatrix2::identity().scale(-1.0);
    let loss = core.scale(in_coupling * loss_coupling);
    Ok((input, loss))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(eta: f64, gain: f64) -> CavityParams {
        CavityParams::new(eta, gain).unwrap()
    }

    #[test]
    fn pump_gain_examples() {
        let x = |g: f64| pump_from_gain(NonlinearGain::new(g).unwrap()).value();
        assert_eq!(x(1.0), 0.0);
        // mpmath, 30 digits
        assert_relative_eq!(x(1.8), 0.254644007500070110, max_relative = 1e-14);
        assert_relative_eq!(x(5.2), 0.561470990346485400, max_relative = 1e-14);

        let g = |x: f64| gain_from_pump(PumpParameter::new(x).unwrap()).value();
        assert_eq!(g(0.0), 1.0);
        assert_eq!(g(0.5), 4.0);
        assert_relative_eq!(g(0.683772), 9.99998520162189923, max_relative = 1e-12);
    }

    #[test]
    fn gain_and_pump_domain_errors() {
        assert!(NonlinearGain::new(0.99).is_err());
        assert!(NonlinearGain::new(f64::NAN).is_err());
        assert!(NonlinearGain::new(f64::INFINITY).is_err());
        assert!(NonlinearGain::new(1e19).is_err());
        assert!(NonlinearGain::new(1e17).is_ok());
        assert!(PumpParameter::new(1.0).is_err());
        assert!(PumpParameter::new(-0.1).is_err());
        assert!(PumpParameter::new(1.0 - 1e-10).is_err());
        assert!(PumpParameter::new(1.0 - 1e-8).is_ok());
        assert!(Efficiency::new(1.2).is_err());
        assert!(Efficiency::new(-0.0).is_ok());
    }

    #[test]
    fn lossless_passive_mirror() {
        let (input, loss) = opo_matrices(&params(1.0, 1.0));
        assert_eq!(input, TransferMatrix2::identity());
        assert_eq!(loss, TransferMatrix2::zero());
        let (input, loss) = opa_matrices(&params(1.0, 1.0));
        assert_eq!(input, TransferMatrix2::identity());
        assert_eq!(loss, TransferMatrix2::zero());
    }

    #[test]
    fn impedance_matched_passive_cavity_reflects_nothing() {
        let (input, _) = opo_matrices(&params(0.5, 1.0));
        assert_eq!(input, TransferMatrix2::zero());
    }

    #[test]
    fn opo_matrix_values() {
        let (input, loss) = opo_matrices(&params(0.98, 1.8));
        assert_relative_eq!(input.m[0][0].re, 0.562196119603185905, max_relative = 1e-13);
        assert_relative_eq!(input.m[1][1].re, 1.629615941539752715, max_relative = 1e-13);
        assert_relative_eq!(loss.m[0][0].re, 0.223170874229026558, max_relative = 1e-13);
        assert_relative_eq!(loss.m[1][1].re, 0.375659420219964674, max_relative = 1e-13);
        assert!(input.is_diagonal() && loss.is_diagonal());
    }

    #[test]
    fn opa_matrix_values() {
        let (input, _) = opa_matrices(&params(0.98, 2.4));
        assert_relative_eq!(input.m[0][0].re, 2.036418943426614782, max_relative = 1e-13);
        assert_relative_eq!(input.m[1][1].re, 0.447025458537978482, max_relative = 1e-13);
        assert_relative_eq!(input.m[0][0].re.powi(2), 4.147002113146770095, max_relative = 1e-13);
    }

    #[test]
    fn opa_impedance_matched_under_gain() {
        let x = 1.0 - 1.0 / 10f64.sqrt();
        let eta = (1.0 - x) / 2.0;
        assert_relative_eq!(eta, 0.158113883008418967, max_relative = 1e-14);
        let (input, _) = opa_matrices(&params(eta, 10.0));
        assert!(input.m[0][0].norm() < 1e-14);
        // With the rounded value the entry is small but not zero.
        let (input, _) = opa_matrices(&params(0.1581, 10.0));
        assert!(input.m[0][0].norm() < 1e-4);
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(PhaseNoiseAngle::ZERO), TransferMatrix2::identity());
        let quarter = rotation(PhaseNoiseAngle::new(std::f64::consts::FRAC_PI_2).unwrap()).re();
        assert!(quarter[0][0].abs() < 1e-16 && quarter[1][1].abs() < 1e-16);
        assert_eq!(quarter[0][1], -1.0);
        assert_eq!(quarter[1][0], 1.0);

        let r = rotation(PhaseNoiseAngle::new(0.01).unwrap()).re();
        assert_relative_eq!(r[0][0], 0.999950000416665278, max_relative = 1e-15);
        assert_relative_eq!(r[0][1], -0.009999833334166665, max_relative = 1e-14);
        assert_relative_eq!(r[1][0], 0.009999833334166665, max_relative = 1e-14);
    }

    #[test]
    fn conjugation_examples() {
        let m = TransferMatrix2::from_real([[0.3, -1.2], [0.7, 2.0]]);
        assert_eq!(conjugate_rotation(&m, PhaseNoiseAngle::ZERO), m);
        let id = conjugate_rotation(&TransferMatrix2::identity(), PhaseNoiseAngle::new(0.4).unwrap());
        assert!(id.max_abs_diff(&TransferMatrix2::identity()) < 1e-15);

        // Explicit R·diag(a, b)·Rᵀ written out by hand.
        let (a, b, t) = (0.5622, 1.6306, 0.05f64);
        let (s, c) = t.sin_cos();
        let expected = [
            [a * c * c + b * s * s, (a - b) * c * s],
            [(a - b) * c * s, a * s * s + b * c * c],
        ];
        let got = conjugate_rotation(&TransferMatrix2::diag(a, b), PhaseNoiseAngle::new(t).unwrap()).re();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(got[i][j], expected[i][j], max_relative = 1e-14);
            }
        }
        assert_relative_eq!(-got[0][1], 0.053331011172735599, max_relative = 1e-12);
    }

    #[test]
    fn rates_from_params_examples() {
        let r = cavity_rates_from_params(&params(0.98, 1.0), 1.0).unwrap();
        assert_relative_eq!(r.kappa_in, 0.98);
        assert_relative_eq!(r.kappa_l, 0.02, max_relative = 1e-14);
        assert_eq!(r.coupling_q, 0.0);

        let p = CavityParams::new(1.0, 4.0).unwrap();
        let r = cavity_rates_from_params(&p, 2.0).unwrap();
        assert_eq!((r.kappa_in, r.kappa_l, r.coupling_q), (2.0, 0.0, 1.0));

        let r = cavity_rates_from_params(&params(0.5, 1.8), 1.0).unwrap();
        assert_eq!((r.kappa_in, r.kappa_l), (0.5, 0.5));
        assert_relative_eq!(r.coupling_q, 0.254644007500070110, max_relative = 1e-14);
        assert!(cavity_rates_from_params(&params(0.5, 1.8), 0.0).is_err());
    }

    #[test]
    fn rates_reject_nonzero_pump_phase() {
        assert!(CavityRates::new(1.0, 0.0, 0.2, 0.1).is_err());
        assert!(CavityRates::new(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(CavityRates::new(0.9, 0.1, 0.5, 0.0).is_ok());
    }

    #[test]
    fn frequency_solver_reduces_to_closed_form() {
        let p = params(0.98, 1.8);
        let r = cavity_rates_from_params(&p, 1.0).unwrap();
        let (input, loss) =
            freq_output_transfer(&r, FrequencyOffset(0.0), SqueezeOrientation::Squeezer).unwrap();
        let (ci, cl) = opo_matrices(&p);
        assert!(input.max_abs_diff(&ci) < 1e-12);
        assert!(loss.max_abs_diff(&cl) < 1e-12);
    }

    #[test]
    fn frequency_solver_passive_lossless_is_identity() {
        let r = CavityRates::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let (input, loss) =
            freq_output_transfer(&r, FrequencyOffset(0.0), SqueezeOrientation::Squeezer).unwrap();
        assert!(input.max_abs_diff(&TransferMatrix2::identity()) < 1e-15);
        assert!(loss.max_abs_diff(&TransferMatrix2::zero()) < 1e-15);
    }

    #[test]
    fn frequency_solver_far_off_resonance() {
        let r = cavity_rates_from_params(&params(0.9, 5.2), 1.0).unwrap();
        let (input, loss) =
            freq_output_transfer(&r, FrequencyOffset(1e7), SqueezeOrientation::Squeezer).unwrap();
        assert!(input.max_abs_diff(&TransferMatrix2::identity().scale(-1.0)) < 1e-6);
        assert!(loss.frobenius_norm() < 1e-6);
    }

    #[test]
    fn frequency_solver_rejects_bad_inputs() {
        let r = cavity_rates_from_params(&params(0.9, 5.2), 1.0).unwrap();
        assert!(freq_output_transfer(&r, FrequencyOffset(f64::NAN), SqueezeOrientation::Squeezer).is_err());
        let mut bad = r;
        bad.pump_phase = 0.3;
        assert!(freq_output_transfer(&bad, FrequencyOffset(0.0), SqueezeOrientation::Squeezer).is_err());
    }
}
