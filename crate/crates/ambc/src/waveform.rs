//! Baseband sample synthesis: TX-distorted signals, backscattered signals,
//! received samples under IQ imbalance or an ideal transceiver, and per-bit
//! block energies.
//!
//! Everything here is baseband-equivalent: no carrier, no pulse shaping.
//! A block is the N consecutive samples spanning one tag bit; its average
//! power is the quantity the energy-difference detector works from.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    sample_cn, ChannelSet, InterferenceState, IqImbalance, KappaPair, SystemConfig,
};

/// N complex baseband samples for one tag bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub samples: Vec<Complex64>,
}

/// Average power of one block (linear units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEnergy {
    pub gamma: f64,
}

/// Which receiver chain produced the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverModel {
    /// Full IQ-impairment chain.
    IqImpaired,
    /// Ideal transceiver; image-channel draws are still consumed so that the
    /// two models see identical PRNG streams.
    Ideal,
}

/// TX image leakage: mixes the mirror channel's conjugate into each signal.
///
/// Returns `(s_m, s_im)` with `s_m = k1 p_m + k2 xi conj(p_im)` and
/// `s_im = k1 xi p_im + k2 conj(p_m)`.
#[inline]
pub fn tx_distorted_pair(
    p_m: Complex64,
    p_im: Complex64,
    xi: bool,
    tx: &KappaPair,
) -> (Complex64, Complex64) {
    let xi = xi as u8 as f64;
    let s_m = tx.k1 * p_m + tx.k2 * (xi * p_im.conj());
    let s_im = tx.k1 * (xi * p_im) + tx.k2 * p_m.conj();
    (s_m, s_im)
}

/// Tag reflection: `mu * s` when the tag bit is 1, zero otherwise.
#[inline]
pub fn backscatter(s: Complex64, mu: Complex64, bit: bool) -> Complex64 {
    if bit {
        mu * s
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// One received sample of channel `m` under TX and RX IQ imbalance, composed
/// from the distorted TX pair, the two backscatter reflections, and the
/// image-conjugating RX combination.
#[inline]
pub fn rx_sample_iq(
    channels: &ChannelSet,
    tx: &KappaPair,
    rx: &KappaPair,
    state: InterferenceState,
    bit_m: bool,
    p_m: Complex64,
    p_im: Complex64,
    w_m: Complex64,
    w_im: Complex64,
) -> Complex64 {
    let (s_m, s_im) = tx_distorted_pair(p_m, p_im, state.xi, tx);
    let b_m = backscatter(s_m, channels.mu_m, bit_m);
    // The image tag's activity and bit are already folded into eta.
    let b_im = backscatter(s_im, channels.mu_im, state.eta);
    let branch_m = channels.h_m * s_m + channels.g_m * b_m + w_m;
    let branch_im = channels.h_im * s_im + channels.g_im * b_im + w_im;
    rx.k1 * branch_m + rx.k2 * branch_im.conj()
}

/// The same sample via the expanded two-coefficient form
/// `y = (I1 d + I2) p_m + (I3 d + I4) xi conj(p_im) + k1 w_m + k2 conj(w_im)`
/// with `d` the effective channel-m gain. Kept as an independent algebraic
/// route for cross-checking [`rx_sample_iq`].
pub fn rx_sample_expanded(
    channels: &ChannelSet,
    tx: &KappaPair,
    rx: &KappaPair,
    state: InterferenceState,
    bit_m: bool,
    p_m: Complex64,
    p_im: Complex64,
    w_m: Complex64,
    w_im: Complex64,
) -> Complex64 {
    let direct = if bit_m {
        channels.h_m + channels.mu_m * channels.g_m
    } else {
        channels.h_m
    };
    let image = channels.image_gain(state.eta).conj();
    let a = rx.k1 * tx.k1 * direct + rx.k2 * tx.k2.conj() * image;
    let c = rx.k1 * tx.k2 * direct + rx.k2 * tx.k1.conj() * image;
    let xi = state.xi as u8 as f64;
    a * p_m + c * (xi * p_im.conj()) + rx.k1 * w_m + rx.k2 * w_im.conj()
}

/// One received sample of channel `m` under the ideal transceiver:
/// direct link, backscatter link, and noise.
#[inline]
pub fn rx_sample_ideal(
    channels: &ChannelSet,
    bit_m: bool,
    p_m: Complex64,
    w_m: Complex64,
) -> Complex64 {
    channels.h_m * p_m + channels.g_m * backscatter(p_m, channels.mu_m, bit_m) + w_m
}

/// Average power `(1/N) sum |y(n)|^2` of a block.
pub fn block_energy(block: &SampleBlock) -> Result<BlockEnergy> {
    if block.samples.is_empty() {
        return Err(Error::InvalidInput("block energy of an empty block".into()));
    }
    let gamma =
        block.samples.iter().map(|y| y.norm_sqr()).sum::<f64>() / block.samples.len() as f64;
    Ok(BlockEnergy { gamma })
}

/// Synthesize the N samples of one tag bit with fresh i.i.d. signal and noise
/// draws, returning the block and its energy.
///
/// Draw order per sample is `p_m, p_im, w_m, w_im` regardless of `model`, so
/// the two receiver models can be compared on a shared PRNG stream.
pub fn synthesize_block<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &ChannelSet,
    iq: &IqImbalance,
    state: InterferenceState,
    bit_m: bool,
    model: ReceiverModel,
    rng: &mut R,
) -> Result<(SampleBlock, BlockEnergy)> {
    config.validate()?;
    let tx = iq.kappa_tx();
    let rx = iq.kappa_rx();
    let mut samples = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        samples.push(next_sample(config, channels, &tx, &rx, state, bit_m, model, rng));
    }
    let block = SampleBlock { samples };
    let energy = block_energy(&block)?;
    Ok((block, energy))
}

/// Energy-only variant of [`synthesize_block`]; identical draws, no
/// sample buffer.
pub fn synthesize_energy<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &ChannelSet,
    tx: &KappaPair,
    rx: &KappaPair,
    state: InterferenceState,
    bit_m: bool,
    model: ReceiverModel,
    rng: &mut R,
) -> f64 {
    let mut acc = 0.0;
    for _ in 0..config.n_samples {
        acc += next_sample(config, channels, tx, rx, state, bit_m, model, rng).norm_sqr();
    }
    acc / config.n_samples as f64
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn next_sample<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &ChannelSet,
    tx: &KappaPair,
    rx: &KappaPair,
    state: InterferenceState,
    bit_m: bool,
    model: ReceiverModel,
    rng: &mut R,
) -> Complex64 {
    let p_m = sample_cn(config.p_s, rng);
    let p_im = sample_cn(config.p_s, rng);
    let w_m = sample_cn(config.sigma_w2, rng);
    let w_im = sample_cn(config.sigma_w2, rng);
    match model {
        ReceiverModel::IqImpaired => {
            rx_sample_iq(channels, tx, rx, state, bit_m, p_m, p_im, w_m, w_im)
        }
        ReceiverModel::Ideal => rx_sample_ideal(channels, bit_m, p_m, w_m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use crate::model::{sample_channels, ResamplePolicy};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn off() -> InterferenceState {
        InterferenceState::OFF
    }

    #[test]
    fn tx_pair_ideal_and_gated() {
        let ideal = crate::model::kappa_tx(1.0, 0.0).unwrap();
        let p = Complex64::new(0.3, -0.7);
        let pi = Complex64::new(-1.1, 0.2);
        let (s, si) = tx_distorted_pair(p, pi, true, &ideal);
        assert_eq!(s, p);
        assert_eq!(si, pi);
        // xi = 0: no image leakage into channel m.
        let tx = crate::model::kappa_tx(0.9, 0.3).unwrap();
        let (s, _) = tx_distorted_pair(p, pi, false, &tx);
        assert_eq!(s, tx.k1 * p);
    }

    #[test]
    fn tx_pair_direct_arithmetic() {
        let tx = crate::model::kappa_tx(0.9, std::f64::consts::PI / 18.0).unwrap();
        let (s, _) = tx_distorted_pair(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), true, &tx);
        let want = tx.k1 + tx.k2 * Complex64::new(0.0, -1.0);
        assert!((s - want).norm() < 1e-15);
    }

    #[test]
    fn backscatter_cases() {
        let s = Complex64::new(2.0, 0.0);
        assert_eq!(backscatter(s, Complex64::new(0.5, 0.0), false), Complex64::new(0.0, 0.0));
        assert_eq!(backscatter(s, Complex64::new(1.0, 0.0), true), s);
        assert_eq!(backscatter(s, Complex64::new(0.0, 0.5), true), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn degeneracy_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let iq = IqImbalance::ideal();
        let tx = iq.kappa_tx();
        let rx = iq.kappa_rx();
        for _ in 0..1000 {
            let ch = sample_channels(&mut rng);
            let p = sample_cn(2.0, &mut rng);
            let pi = sample_cn(2.0, &mut rng);
            let w = sample_cn(1.0, &mut rng);
            let wi = sample_cn(1.0, &mut rng);
            for bit in [false, true] {
                let y_iq = rx_sample_iq(&ch, &tx, &rx, off(), bit, p, pi, w, wi);
                let y_ideal = rx_sample_ideal(&ch, bit, p, w);
                assert_eq!(y_iq, y_ideal);
            }
        }
    }

    #[test]
    fn composition_matches_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let ch = sample_channels(&mut rng);
            let iq = IqImbalance::new(
                0.5 + rng.gen::<f64>(),
                rng.gen::<f64>() - 0.5,
                0.5 + rng.gen::<f64>(),
                rng.gen::<f64>() - 0.5,
            )
            .unwrap();
            let (tx, rx) = (iq.kappa_tx(), iq.kappa_rx());
            let state = InterferenceState { xi: rng.gen(), eta: rng.gen() };
            let bit = rng.gen();
            let p = sample_cn(3.0, &mut rng);
            let pi = sample_cn(3.0, &mut rng);
            let w = sample_cn(1.0, &mut rng);
            let wi = sample_cn(1.0, &mut rng);
            let a = rx_sample_iq(&ch, &tx, &rx, state, bit, p, pi, w, wi);
            let b = rx_sample_expanded(&ch, &tx, &rx, state, bit, p, pi, w, wi);
            let scale = a.norm().max(1.0);
            assert!((a - b).norm() / scale < 1e-12, "mismatch: {a} vs {b}");
        }
    }

    #[test]
    fn block_energy_basics() {
        assert!(block_energy(&SampleBlock { samples: vec![] }).is_err());
        let zero = SampleBlock { samples: vec![Complex64::new(0.0, 0.0); 8] };
        assert_eq!(block_energy(&zero).unwrap().gamma, 0.0);
        let two = SampleBlock { samples: vec![Complex64::new(2.0, 0.0); 10] };
        assert_eq!(block_energy(&two).unwrap().gamma, 4.0);
    }

    #[test]
    fn block_energy_chi_square_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma2 = 2.5;
        let mut acc = 0.0;
        let blocks = 10_000;
        for _ in 0..blocks {
            let block = SampleBlock {
                samples: (0..32).map(|_| sample_cn(sigma2, &mut rng)).collect(),
            };
            acc += block_energy(&block).unwrap().gamma;
        }
        assert_relative_eq!(acc / blocks as f64, sigma2, epsilon = 0.02 * sigma2);
    }

    #[test]
    fn synthesize_is_deterministic() {
        let cfg = SystemConfig::default_experiment(1);
        let ch = sample_channels(&mut ChaCha8Rng::seed_from_u64(2));
        let iq = IqImbalance::joint(0.9, 0.1).unwrap();
        let a = synthesize_block(
            &cfg, &ch, &iq, off(), true, ReceiverModel::IqImpaired,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        let b = synthesize_block(
            &cfg, &ch, &iq, off(), true, ReceiverModel::IqImpaired,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.gamma, b.1.gamma);
    }

    #[test]
    fn ideal_block_energy_means() {
        let cfg = SystemConfig::from_snr(5.0, 1.0, 64, 100, 0.0, 0.0, 0, ResamplePolicy::PerBlock)
            .unwrap();
        let ch = sample_channels(&mut ChaCha8Rng::seed_from_u64(9));
        let iq = IqImbalance::ideal();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let blocks = 10_000;
        let mut mean = [0.0f64; 2];
        for _ in 0..blocks {
            for (slot, bit) in mean.iter_mut().zip([false, true]) {
                let (_, e) = synthesize_block(
                    &cfg, &ch, &iq, off(), bit, ReceiverModel::Ideal, &mut rng,
                )
                .unwrap();
                *slot += e.gamma / blocks as f64;
            }
        }
        let want0 = ch.h_m.norm_sqr() * cfg.p_s + cfg.sigma_w2;
        let want1 = (ch.h_m + ch.mu_m * ch.g_m).norm_sqr() * cfg.p_s + cfg.sigma_w2;
        assert_relative_eq!(mean[0], want0, epsilon = 0.02 * want0);
        assert_relative_eq!(mean[1], want1, epsilon = 0.02 * want1);
    }

    #[test]
    fn iq_block_moments_match_closed_form() {
        // Empirical mean and variance of the block energy against the
        // conditional-moment formulas, one fixed condition.
        let cfg = SystemConfig::from_snr(10.0, 1.0, 50, 100, 0.5, 0.5, 0, ResamplePolicy::PerBlock)
            .unwrap();
        let ch = sample_channels(&mut ChaCha8Rng::seed_from_u64(20));
        let iq = IqImbalance::joint(0.9, std::f64::consts::PI / 18.0).unwrap();
        let state = InterferenceState { xi: true, eta: true };
        let moments = analytics::conditional_moments(&ch, &iq, state.xi, state.eta, &cfg).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let blocks = 20_000;
        let (tx, rx) = (iq.kappa_tx(), iq.kappa_rx());
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..blocks {
            let g = synthesize_energy(&cfg, &ch, &tx, &rx, state, true, ReceiverModel::IqImpaired, &mut rng);
            sum += g;
            sumsq += g * g;
        }
        let emp_mean = sum / blocks as f64;
        let emp_var = sumsq / blocks as f64 - emp_mean * emp_mean;
        // 3 Monte Carlo standard errors.
        let se_mean = (moments.var_b1 / blocks as f64).sqrt();
        assert!((emp_mean - moments.mean_b1).abs() < 3.0 * se_mean);
        let se_var = moments.var_b1 * (2.0 / blocks as f64).sqrt();
        assert!((emp_var - moments.var_b1).abs() < 3.0 * se_var);
    }
}
