//! Monte Carlo engine: end-to-end detection trials, empirical BER with
//! confidence intervals, block-energy histograms, threshold sweeps, and
//! single-axis experiment sweeps.
//!
//! Trials are independent work units. Each owns a PRNG substream derived
//! from the master seed and its trial index, so results are bit-identical
//! regardless of execution order or thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytics::{ideal_params, iq_params, threshold_ideal, threshold_iq};
use crate::error::{Error, Result};
use crate::estimator;
use crate::model::{
    differential_encode, sample_channels, sample_interference_state, ChannelSet, ImbalanceMode,
    InterferenceState, IqImbalance, ResamplePolicy, SystemConfig,
};
use crate::waveform::{synthesize_energy, ReceiverModel};

/// How the detection threshold is chosen for each trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// Closed-form ideal-transceiver threshold (requires CSI).
    Ideal,
    /// Closed-form IQ-aware threshold (requires CSI and IQ parameters).
    IqAware,
    /// Blind moment-matching estimate from the trial's own K statistics.
    Blind,
    /// A caller-supplied constant.
    Fixed(f64),
}

/// Channel handling across trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelPolicy {
    /// Every trial reuses the same realization.
    Fixed(ChannelSet),
    /// Fresh CN(0,1) draws; the count is the number of realizations, each
    /// run `trials` times.
    Ensemble(usize),
}

/// Full description of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub system: SystemConfig,
    pub iq: IqImbalance,
    pub threshold_policy: ThresholdPolicy,
    pub channel_policy: ChannelPolicy,
    /// Trials per channel realization.
    pub trials: usize,
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter {
                name: "trials",
                value: 0.0,
                legal: "an integer >= 1",
            });
        }
        if let ThresholdPolicy::Fixed(g) = self.threshold_policy {
            if !(g >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "threshold",
                    value: g,
                    legal: "a fixed threshold >= 0",
                });
            }
        }
        Ok(())
    }

    fn total_trials(&self) -> usize {
        match self.channel_policy {
            ChannelPolicy::Fixed(_) => self.trials,
            ChannelPolicy::Ensemble(draws) => draws * self.trials,
        }
    }
}

/// Aggregated empirical bit error rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    pub errors: u64,
    pub bits: u64,
    /// Half-width of the normal-approximation 95% binomial interval.
    pub ci95: f64,
}

impl BerEstimate {
    fn from_counts(errors: u64, bits: u64) -> Self {
        let ber = errors as f64 / bits as f64;
        let ci95 = 1.96 * (ber * (1.0 - ber) / bits as f64).sqrt();
        Self { ber, errors, bits, ci95 }
    }
}

/// Decisions and raw test statistics for one block of K symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    /// The pre-encoded symbols A(1..K).
    pub truth: Vec<bool>,
    pub decisions: Vec<bool>,
    pub t_values: Vec<f64>,
}

/// Simulate one transmission block and return the symbols with their test
/// statistics; no decisions taken yet.
///
/// Draws A(1..K) equiprobably, differentially encodes from B(0) = 0,
/// synthesizes K + 1 bit blocks, and differences consecutive energies.
pub fn simulate_t_values<R: Rng + ?Sized>(
    system: &SystemConfig,
    channels: &ChannelSet,
    iq: &IqImbalance,
    model: ReceiverModel,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<f64>)> {
    system.validate()?;
    let k = system.k_symbols;
    let truth: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
    let encoded = differential_encode(&truth, false).encoded;
    let tx = iq.kappa_tx();
    let rx = iq.kappa_rx();
    let block_state = match system.resample_policy {
        ResamplePolicy::PerBlock => {
            Some(sample_interference_state(system.q, system.v, rng)?)
        }
        ResamplePolicy::PerSymbol => None,
    };
    let mut gammas = Vec::with_capacity(k + 1);
    for &bit in &encoded {
        let state = match block_state {
            Some(s) => s,
            None => sample_interference_state(system.q, system.v, rng)?,
        };
        gammas.push(synthesize_energy(system, channels, &tx, &rx, state, bit, model, rng));
    }
    let t_values = gammas.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((truth, t_values))
}

/// Threshold decisions: symbol 1 iff `|T| >= gamma` (boundary decides 1).
pub fn decide(t_values: &[f64], gamma: f64) -> Vec<bool> {
    t_values.iter().map(|t| t.abs() >= gamma).collect()
}

/// Run one block end to end at a fixed threshold.
pub fn run_block<R: Rng + ?Sized>(
    system: &SystemConfig,
    channels: &ChannelSet,
    iq: &IqImbalance,
    threshold: f64,
    rng: &mut R,
) -> Result<BlockResult> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "threshold",
            value: threshold,
            legal: "a threshold >= 0",
        });
    }
    let (truth, t_values) = simulate_t_values(system, channels, iq, ReceiverModel::IqImpaired, rng)?;
    let decisions = decide(&t_values, threshold);
    Ok(BlockResult { truth, decisions, t_values })
}

/// PRNG substream for one trial of a run. Stream separation keeps trials
/// independent under any execution order.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

fn run_trial(config: &TrialConfig, trial: usize) -> Result<(u64, u64)> {
    let mut rng = trial_rng(config.system.seed, trial);
    let channels = match config.channel_policy {
        ChannelPolicy::Fixed(ch) => ch,
        ChannelPolicy::Ensemble(_) => sample_channels(&mut rng),
    };
    let (truth, t_values) =
        simulate_t_values(&config.system, &channels, &config.iq, ReceiverModel::IqImpaired, &mut rng)?;
    // CSI-dependent thresholds are recomputed per realization; the blind
    // policy estimates from this trial's own statistics.
    let gamma = match config.threshold_policy {
        ThresholdPolicy::Fixed(g) => g,
        ThresholdPolicy::Ideal => threshold_ideal(&ideal_params(&channels, &config.system)?)?,
        ThresholdPolicy::IqAware => {
            threshold_iq(&iq_params(&channels, &config.iq, &config.system)?)?
        }
        ThresholdPolicy::Blind => estimator::estimate_threshold(&t_values)?.gamma,
    };
    let errors = decide(&t_values, gamma)
        .iter()
        .zip(&truth)
        .filter(|(d, t)| d != t)
        .count() as u64;
    Ok((errors, truth.len() as u64))
}

/// Empirical BER over `trials` x K symbols under the configured policies.
pub fn empirical_ber(config: &TrialConfig) -> Result<BerEstimate> {
    config.validate()?;
    let counts: Result<Vec<(u64, u64)>> = (0..config.total_trials())
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect();
    let counts = counts?;
    let (errors, bits) = counts
        .iter()
        .fold((0u64, 0u64), |(e, b), &(de, db)| (e + de, b + db));
    Ok(BerEstimate::from_counts(errors, bits))
}

/// Normalized histogram of block energies under one fixed condition.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaHistogram {
    /// Bin edges, length `bins + 1`.
    pub edges: Vec<f64>,
    /// Probability density per bin.
    pub density: Vec<f64>,
    pub mean: f64,
    pub count: usize,
    /// Raw samples, kept for distribution-fit statistics.
    pub samples: Vec<f64>,
}

/// Histogram of the block energy for a fixed channel, interference state,
/// and tag bit.
pub fn empirical_pdf_gamma(
    system: &SystemConfig,
    channels: &ChannelSet,
    iq: &IqImbalance,
    state: InterferenceState,
    bit_m: bool,
    blocks: usize,
    bins: usize,
) -> Result<GammaHistogram> {
    system.validate()?;
    if bins < 10 {
        return Err(Error::InvalidParameter {
            name: "bins",
            value: bins as f64,
            legal: "an integer >= 10",
        });
    }
    let tx = iq.kappa_tx();
    let rx = iq.kappa_rx();
    let mut rng = ChaCha8Rng::seed_from_u64(system.seed);
    let mut samples = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        samples.push(synthesize_energy(
            system,
            channels,
            &tx,
            &rx,
            state,
            bit_m,
            ReceiverModel::IqImpaired,
            &mut rng,
        ));
    }
    let mean = samples.iter().sum::<f64>() / blocks as f64;
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &g in &samples {
        let idx = (((g - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let density = counts
        .iter()
        .map(|&c| c as f64 / (blocks as f64 * width))
        .collect();
    Ok(GammaHistogram { edges, density, mean, count: blocks, samples })
}

/// BER per threshold on a grid, from one shared set of simulated statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub gammas: Vec<f64>,
    pub bers: Vec<f64>,
    pub argmin_gamma: f64,
}

/// Sweep the decision threshold over `gamma_grid` for a fixed channel. All
/// grid points are evaluated on identical trials, so the curve is free of
/// inter-point Monte Carlo jitter.
pub fn threshold_sweep(
    system: &SystemConfig,
    channels: &ChannelSet,
    iq: &IqImbalance,
    gamma_grid: &[f64],
    trials: usize,
) -> Result<ThresholdSweep> {
    if gamma_grid.is_empty() || gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "gamma grid must be non-empty and strictly increasing".into(),
        ));
    }
    let counts: Result<Vec<(Vec<u64>, u64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(system.seed, trial);
            let (truth, t_values) =
                simulate_t_values(system, channels, iq, ReceiverModel::IqImpaired, &mut rng)?;
            let per_gamma = gamma_grid
                .iter()
                .map(|&g| {
                    decide(&t_values, g)
                        .iter()
                        .zip(&truth)
                        .filter(|(d, t)| d != t)
                        .count() as u64
                })
                .collect();
            Ok((per_gamma, truth.len() as u64))
        })
        .collect();
    let counts = counts?;
    let bits: u64 = counts.iter().map(|(_, b)| b).sum();
    let bers: Vec<f64> = (0..gamma_grid.len())
        .map(|i| counts.iter().map(|(e, _)| e[i]).sum::<u64>() as f64 / bits as f64)
        .collect();
    let argmin = bers
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| gamma_grid[i])
        .unwrap();
    Ok(ThresholdSweep { gammas: gamma_grid.to_vec(), bers, argmin_gamma: argmin })
}

/// The single swept axis of an experiment; all other parameters come from
/// the base configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    SnrDb(Vec<f64>),
    NSamples(Vec<usize>),
    KSymbols(Vec<usize>),
    /// IQ deviation percentages, applied through the percent ladder.
    IqPercent { values: Vec<f64>, mode: ImbalanceMode },
    /// `(q, v)` pairs.
    Presence(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: TrialConfig,
    pub axis: SweepAxis,
}

/// One row of a sweep result table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub ber: BerEstimate,
}

/// Run the sweep: one BER estimate per axis point, reproducible under a
/// fixed seed (all points share the master seed, so channel draws pair up
/// across points).
pub fn sweep_experiment(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let push = |rows: &mut Vec<SweepRow>, axis: &str, value: String, cfg: &TrialConfig| {
        empirical_ber(cfg).map(|ber| {
            rows.push(SweepRow { axis: axis.to_string(), value, ber });
        })
    };
    match &spec.axis {
        SweepAxis::SnrDb(values) => {
            for &snr in values {
                let mut cfg = spec.base;
                cfg.system = cfg.system.with_snr(snr);
                push(&mut rows, "snr_db", format!("{snr}"), &cfg)?;
            }
        }
        SweepAxis::NSamples(values) => {
            for &n in values {
                let mut cfg = spec.base;
                cfg.system.n_samples = n;
                push(&mut rows, "n_samples", format!("{n}"), &cfg)?;
            }
        }
        SweepAxis::KSymbols(values) => {
            for &k in values {
                let mut cfg = spec.base;
                cfg.system.k_symbols = k;
                push(&mut rows, "k_symbols", format!("{k}"), &cfg)?;
            }
        }
        SweepAxis::IqPercent { values, mode } => {
            for &pct in values {
                let mut cfg = spec.base;
                cfg.iq = IqImbalance::from_percent(pct, *mode)?;
                push(&mut rows, "iq_percent", format!("{pct}"), &cfg)?;
            }
        }
        SweepAxis::Presence(values) => {
            for &(q, v) in values {
                let mut cfg = spec.base;
                cfg.system.q = q;
                cfg.system.v = v;
                cfg.system.validate()?;
                push(&mut rows, "q_v", format!("{q}/{v}"), &cfg)?;
            }
        }
    }
    Ok(rows)
}
