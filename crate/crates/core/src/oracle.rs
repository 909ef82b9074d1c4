//! Monte Carlo estimator of chain variances.
//!
//! Vacuum noise at each port is sampled as independent standard-normal
//! quadrature pairs, pushed through the transfer matrices, and the output
//! variances are estimated from the samples. It shares nothing with the
//! closed forms except the transfer matrices themselves, so it serves as the
//! cross-check for every analytic variance in the crate.
//!
//! # Random streams
//!
//! Numbers come from ChaCha8 keyed by the seed. Each vacuum port reads its own
//! stream (stream id = port index, `in`=0 … `det`=4) and the phase-noise
//! angles read stream 5. Sample `i` always occupies words `4i..4i+4` of every
//! stream, so a sample's noise depends only on `(seed, port, i)`. Samples are
//! grouped into fixed batches of `batch_size`, evaluated in parallel, and the
//! batch sums are merged in batch order. The worker count therefore cannot
//! change any bit of the result.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{chain_with_angles, ChainSetup, PhaseNoiseMode, PortLabel, QuadVariance};
use crate::error::{Error, Result};
use crate::quadrature::PhaseNoiseAngle;

/// Fewest samples accepted for a variance estimate.
pub const MIN_SAMPLES: u64 = 10_000;

const PHASE_STREAM: u64 = 5;
const WORDS_PER_SAMPLE: u128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub phase_noise_mode: PhaseNoiseMode,
    pub batch_size: u64,
}

impl OracleConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            phase_noise_mode: PhaseNoiseMode::Deterministic,
            batch_size: 1 << 16,
        }
    }

    pub fn with_mode(mut self, mode: PhaseNoiseMode) -> Self {
        self.phase_noise_mode = mode;
        self
    }

    pub fn with_batch_size(mut self, batch_size: u64) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::Config(format!(
                "n_samples = {} is below the minimum of {MIN_SAMPLES}",
                self.n_samples
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".to_string()));
        }
        Ok(())
    }
}

/// Sample variances of the detected quadratures with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub v_minus_hat: f64,
    pub v_plus_hat: f64,
    pub stderr_minus: f64,
    pub stderr_plus: f64,
    pub n_used: u64,
}

impl OracleEstimate {
    /// `(v̂ − v) / stderr` for both quadratures.
    pub fn z_scores(&self, expected: &QuadVariance) -> (f64, f64) {
        (
            (self.v_minus_hat - expected.v_minus) / self.stderr_minus,
            (self.v_plus_hat - expected.v_plus) / self.stderr_plus,
        )
    }
}

/// Power sums `Σy, Σy², Σy³, Σy⁴` per quadrature.
#[derive(Debug, Clone, Copy, Default)]
struct PowerSums {
    n: u64,
    s: [[f64; 4]; 2],
}

impl PowerSums {
    fn push(&mut self, y: [f64; 2]) {
        self.n += 1;
        for (q, &v) in y.iter().enumerate() {
            let v2 = v * v;
            let s = &mut self.s[q];
            s[0] += v;
            s[1] += v2;
            s[2] += v2 * v;
            s[3] += v2 * v2;
        }
    }
}

/// Neumaier-compensated merge of batch sums.
#[derive(Debug, Default)]
struct Accumulator {
    n: u64,
    sum: [[f64; 4]; 2],
    comp: [[f64; 4]; 2],
}

impl Accumulator {
    fn merge(&mut self, b: &PowerSums) {
        self.n += b.n;
        for q in 0..2 {
            for k in 0..4 {
                let x = b.s[q][k];
                let t = self.sum[q][k] + x;
                if self.sum[q][k].abs() >= x.abs() {
                    self.comp[q][k] += (self.sum[q][k] - t) + x;
                } else {
                    self.comp[q][k] += (x - t) + self.sum[q][k];
                }
                self.sum[q][k] = t;
            }
        }
    }

    /// Unbiased variance and its standard error for quadrature `q`.
    fn variance(&self, q: usize) -> (f64, f64) {
        let n = self.n as f64;
        let raw: Vec<f64> = (0..4).map(|k| (self.sum[q][k] + self.comp[q][k]) / n).collect();
        let mean = raw[0];
        let m2 = raw[1] - mean * mean;
        let m4 = raw[3] - 4.0 * mean * raw[2] + 6.0 * mean * mean * raw[1] - 3.0 * mean.powi(4);
        let var = m2 * n / (n - 1.0);
        let spread = (m4 - var * var * (n - 3.0) / (n - 1.0)).max(0.0);
        (var, (spread / n).sqrt())
    }
}

fn stream(seed: u64, id: u64, first_sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng.set_word_pos(first_sample as u128 * WORDS_PER_SAMPLE);
    rng
}

fn unit_open(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Box–Muller pair; consumes exactly two words.
fn normal_pair(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    [r * c, r * s]
}

type RealChain = Vec<(usize, [[f64; 2]; 2])>;

fn real_chain(setup: &ChainSetup, theta_opo: f64, theta_opa: f64) -> Result<RealChain> {
    let chain = chain_with_angles(
        setup,
        PhaseNoiseAngle::new(theta_opo)?,
        PhaseNoiseAngle::new(theta_opa)?,
    );
    Ok(chain
        .into_iter()
        .map(|c| (c.port.index(), c.matrix.re()))
        .collect())
}

fn apply(chain: &RealChain, noise: &[[f64; 2]; 5]) -> [f64; 2] {
    let mut y = [0.0; 2];
    for (port, m) in chain {
        let xi = noise[*port];
        y[0] += m[0][0] * xi[0] + m[0][1] * xi[1];
        y[1] += m[1][0] * xi[0] + m[1][1] * xi[1];
    }
    y
}

fn run_batch(
    setup: &ChainSetup,
    cfg: &OracleConfig,
    fixed: Option<&RealChain>,
    start: u64,
    end: u64,
) -> Result<PowerSums> {
    let ports: Vec<usize> = match setup.opa {
        None => vec![PortLabel::In, PortLabel::Lo, PortLabel::Det],
        Some(_) => PortLabel::ALL.to_vec(),
    }
    .into_iter()
    .map(PortLabel::index)
    .collect();
    let mut rngs: Vec<(usize, ChaCha8Rng)> = ports
        .iter()
        .map(|&p| (p, stream(cfg.seed, p as u64, start)))
        .collect();
    let mut phase_rng = stream(cfg.seed, PHASE_STREAM, start);
    let sigma_opo = setup.theta_opo.radians();
    let sigma_opa = setup.theta_opa.radians();

    let mut sums = PowerSums::default();
    let mut noise = [[0.0; 2]; 5];
    for _ in start..end {
        for (p, rng) in rngs.iter_mut() {
            noise[*p] = normal_pair(rng);
        }
        let y = match fixed {
            Some(chain) => apply(chain, &noise),
            None => {
                let z = normal_pair(&mut phase_rng);
                let chain = real_chain(setup, sigma_opo * z[0], sigma_opa * z[1])?;
                apply(&chain, &noise)
            }
        };
        sums.push(y);
    }
    Ok(sums)
}

fn estimate_prefix(setup: &ChainSetup, cfg: &OracleConfig, n: u64) -> Result<OracleEstimate> {
    let fixed = match cfg.phase_noise_mode {
        PhaseNoiseMode::Deterministic => Some(real_chain(
            setup,
            setup.theta_opo.radians(),
            setup.theta_opa.radians(),
        )?),
        PhaseNoiseMode::GaussianRms => None,
    };
    let batches = n.div_ceil(cfg.batch_size);
    let partial: Vec<PowerSums> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * cfg.batch_size;
            let end = (start + cfg.batch_size).min(n);
            run_batch(setup, cfg, fixed.as_ref(), start, end)
        })
        .collect::<Result<_>>()?;
    let mut acc = Accumulator::default();
    for p in &partial {
        acc.merge(p);
    }
    let (v_minus_hat, stderr_minus) = acc.variance(0);
    let (v_plus_hat, stderr_plus) = acc.variance(1);
    Ok(OracleEstimate {
        v_minus_hat,
        v_plus_hat,
        stderr_minus,
        stderr_plus,
        n_used: acc.n,
    })
}

/// Estimates the detected variances of `setup` by sampling.
///
/// The phase-noise interpretation comes from `cfg`: in Gaussian mode both
/// angles are redrawn for every sample from `N(0, θ̃²)`; in deterministic mode
/// the setup's angles are used as fixed rotations.
pub fn estimate_variance(setup: &ChainSetup, cfg: &OracleConfig) -> Result<OracleEstimate> {
    cfg.validate()?;
    estimate_prefix(setup, cfg, cfg.n_samples)
}

/// Estimates over the first `c` samples of one stream for each checkpoint `c`.
/// The last checkpoint equal to `n_samples` reproduces [`estimate_variance`]
/// exactly.
pub fn convergence_report(
    setup: &ChainSetup,
    cfg: &OracleConfig,
    checkpoints: &[u64],
) -> Result<Vec<OracleEstimate>> {
    cfg.validate()?;
    if checkpoints.is_empty() {
        return Err(Error::Misuse("no checkpoints given".to_string()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Misuse("checkpoints must be strictly ascending".to_string()));
    }
    if checkpoints[0] < 2 {
        return Err(Error::Misuse("checkpoints need at least two samples".to_string()));
    }
    if *checkpoints.last().expect("non-empty") > cfg.n_samples {
        return Err(Error::Misuse(format!(
            "checkpoint exceeds n_samples = {}",
            cfg.n_samples
        )));
    }
    checkpoints
        .iter()
        .map(|&c| estimate_prefix(setup, cfg, c))
        .collect()
}
