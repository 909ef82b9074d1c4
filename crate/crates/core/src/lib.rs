//! Noise-budget model for squeezed light generated by an OPO and read out
//! either directly or after phase-sensitive amplification in an OPA.
//!
//! - [`quadrature`]: gains, pump parameters, cavity transfer matrices,
//!   rotations and the frequency-domain single-cavity solver.
//! - [`chain`]: vacuum entry ports, detection chains and their variances.
//! - [`metrics`]: effective efficiency and squeezing, SNRs, enhancement.
//! - [`oracle`]: Monte Carlo cross-check of every variance.

pub mod chain;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod quadrature;

pub use chain::{
    amplified_chain, amplified_variance, chain_variance, chain_with_angles, conventional_chain,
    conventional_variance, gaussian_phase_average, phase_noise_projection, variance_from_chain,
    ChainSetup, ChannelEfficiencies, ChannelTransfer, PhaseNoiseMode, PortLabel, QuadVariance,
};
pub use error::{Error, Result};
pub use metrics::{
    effective_efficiency, effective_efficiency_infinite_gain, effective_squeezing,
    effective_squeezing_infinite_gain, effective_squeezing_with_noise, from_decibels,
    metrics_report, snr_amplified, snr_conventional, snr_enhancement, to_decibels,
    MetricsReport, SignalModel,
};
pub use oracle::{convergence_report, estimate_variance, OracleConfig, OracleEstimate};
pub use quadrature::{
    cavity_rates_from_params, conjugate_rotation, freq_output_transfer, gain_from_pump,
    opa_matrices, opo_matrices, pump_from_gain, rotation, CavityParams, CavityRates, Efficiency,
    FrequencyOffset, NonlinearGain, PhaseNoiseAngle, PumpParameter, SqueezeOrientation,
    TransferMatrix2,
};

/// Version of the model, recorded in dataset metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameter values used throughout unless a figure overrides them.
pub mod defaults {
    pub const ETA_OPO: f64 = 0.98;
    pub const ETA_OPA: f64 = 0.98;
    pub const ETA_PROP: f64 = 0.99;
    pub const ETA_DET: f64 = 0.7;
}
