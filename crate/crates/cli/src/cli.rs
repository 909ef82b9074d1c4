use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sqzamp_core::PhaseNoiseMode;

use crate::config::SetupConfig;

#[derive(Debug, Parser)]
#[command(name = "sqzamp", version, about = "Noise budgets for amplified squeezed light")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (point, sweep, oracle-check) or directory (figure).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every metric at one operating point.
    Point(SetupArgs),
    /// Evaluate metrics over a 1D or 2D parameter grid.
    Sweep {
        #[command(flatten)]
        setup: SetupArgs,
        /// First axis, `name:start:stop:count[:linear|log]`.
        #[arg(long)]
        axis1: Option<String>,
        /// Optional second axis, same syntax.
        #[arg(long)]
        axis2: Option<String>,
        /// Comma-separated metric names.
        #[arg(long, value_delimiter = ',')]
        outputs: Option<Vec<String>>,
    },
    /// Write the dataset and metadata for a figure preset.
    Figure {
        /// fig3, fig4a, fig4b, fig4c, fig5a, fig5b, fig5c or fig6.
        id: String,
        /// Points per grid axis.
        #[arg(long)]
        count: Option<usize>,
        /// Upper end of the phase-noise axis in rad.
        #[arg(long)]
        theta_max: Option<f64>,
    },
    /// Compare a Monte Carlo estimate with the analytic variances.
    OracleCheck {
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long)]
        batch_size: Option<u64>,
        /// Added to the analytic V- before comparison.
        #[arg(long, hide = true, default_value_t = 0.0)]
        corrupt: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Deterministic,
    GaussianRms,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SetupArgs {
    #[arg(long)]
    pub g_opo: Option<f64>,
    #[arg(long)]
    pub eta_opo: Option<f64>,
    /// OPA gain; `inf` for the analytic limit. Omit for conventional detection.
    #[arg(long)]
    pub g_opa: Option<f64>,
    #[arg(long)]
    pub eta_opa: Option<f64>,
    #[arg(long)]
    pub eta_prop: Option<f64>,
    #[arg(long, conflicts_with = "l_det")]
    pub eta_det: Option<f64>,
    /// Detection loss, sets eta_det = 1 - l_det.
    #[arg(long)]
    pub l_det: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_opo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_opa: Option<f64>,
    #[arg(long, value_enum)]
    pub phase_noise_mode: Option<ModeArg>,
    #[arg(long)]
    pub p_sig: Option<f64>,
}

impl SetupArgs {
    pub fn to_config(&self) -> SetupConfig {
        SetupConfig {
            g_opo: self.g_opo,
            eta_opo: self.eta_opo,
            g_opa: self.g_opa,
            eta_opa: self.eta_opa,
            eta_prop: self.eta_prop,
            eta_det: self.eta_det,
            l_det: self.l_det,
            theta_opo: self.theta_opo,
            theta_opa: self.theta_opa,
            phase_noise_mode: self.phase_noise_mode.map(|m| match m {
                ModeArg::Deterministic => PhaseNoiseMode::Deterministic,
                ModeArg::GaussianRms => PhaseNoiseMode::GaussianRms,
            }),
            p_sig: self.p_sig,
        }
    }
}
