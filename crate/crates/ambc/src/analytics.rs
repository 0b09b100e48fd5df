//! Closed-form statistics of the energy-difference detector: conditional and
//! marginal block-energy moments, test-statistic distribution parameters,
//! mixture PDFs, near-optimal thresholds, and BER for both the IQ-impaired
//! and the ideal transceiver.
//!
//! The test statistic `T = Gamma_k - Gamma_{k-1}` is, for large N, a
//! two-branch Gaussian mixture under symbol 0 and a symmetric
//! `+/- theta` mixture under symbol 1. All tail probabilities go through a
//! single erfc-based Q function.

use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf;

use crate::error::{Error, Result};
use crate::model::{ChannelSet, IqImbalance, SystemConfig};

/// Expected block energy and its variance, conditioned on the interference
/// state and the tag bit. Variances follow the `mean^2 / N` structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments {
    pub mean_b0: f64,
    pub mean_b1: f64,
    pub var_b0: f64,
    pub var_b1: f64,
}

/// Case-averaged block-energy moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalMoments {
    pub e0: f64,
    pub e1: f64,
    pub d0: f64,
    pub d1: f64,
}

/// Parameters of the test-statistic mixture: mean separation `theta` and the
/// two branch variances, with `delta_plus_sq = delta0_sq + delta1_sq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub theta: f64,
    pub delta0_sq: f64,
    pub delta1_sq: f64,
    pub delta_plus_sq: f64,
}

impl GaussianParams {
    pub fn delta_plus(&self) -> f64 {
        self.delta_plus_sq.sqrt()
    }
}

/// Ideal-transceiver counterparts: mean separation `delta_ideal` and the
/// cross-term variances of the two hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealParams {
    pub delta_ideal: f64,
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
}

impl IdealParams {
    /// View through the generic parameter shape so the threshold and BER
    /// formulas can be shared.
    pub fn as_gaussian(&self) -> GaussianParams {
        GaussianParams {
            theta: self.delta_ideal,
            delta0_sq: self.sigma0_sq,
            delta1_sq: self.sigma1_sq,
            delta_plus_sq: self.sigma0_sq + self.sigma1_sq,
        }
    }
}

/// Conditional moments of the block energy for a fixed interference state.
///
/// Built from the image-leakage products `I1 = k1r k1t`,
/// `I2 = k2r conj(k2t) conj(h_im + eta mu_im g_im)`, `I3 = k1r k2t`,
/// `I4 = k2r conj(k1t) conj(h_im + eta mu_im g_im)`, and
/// `I5 = |k1r|^2 + |k2r|^2`.
pub fn conditional_moments(
    channels: &ChannelSet,
    iq: &IqImbalance,
    xi: bool,
    eta: bool,
    config: &SystemConfig,
) -> Result<ConditionalMoments> {
    config.validate()?;
    let tx = iq.kappa_tx();
    let rx = iq.kappa_rx();
    let image = channels.image_gain(eta).conj();
    let i1 = rx.k1 * tx.k1;
    let i2 = rx.k2 * tx.k2.conj() * image;
    let i3 = rx.k1 * tx.k2;
    let i4 = rx.k2 * tx.k1.conj() * image;
    let i5 = rx.k1.norm_sqr() + rx.k2.norm_sqr();
    let xi = xi as u8 as f64;

    let mean_for = |direct: Complex64| {
        (i1 * direct + i2).norm_sqr() * config.p_s
            + (i3 * direct + i4).norm_sqr() * xi * config.p_s
            + i5 * config.sigma_w2
    };
    let mean_b0 = mean_for(channels.h_m);
    let mean_b1 = mean_for(channels.h_m + channels.mu_m * channels.g_m);
    let n = config.n_samples as f64;
    Ok(ConditionalMoments {
        mean_b0,
        mean_b1,
        var_b0: mean_b0 * mean_b0 / n,
        var_b1: mean_b1 * mean_b1 / n,
    })
}

/// Joint probabilities of the four interference cases, ordered
/// `(xi, eta) = (0,0), (0,1), (1,0), (1,1)`. Always sums to 1.
pub fn case_probabilities(q: f64, v: f64) -> Result<[f64; 4]> {
    for (name, p) in [("q", q), ("v", v)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: if name == "q" { "q" } else { "v" },
                value: p,
                legal: "a probability in [0, 1]",
            });
        }
    }
    let e = v / 2.0;
    Ok([
        (1.0 - q) * (1.0 - e),
        (1.0 - q) * e,
        q * (1.0 - e),
        q * e,
    ])
}

/// Block-energy moments averaged over the interference cases weighted by
/// their probabilities; variances follow the `E^2 / N` approximation.
pub fn marginal_moments(
    channels: &ChannelSet,
    iq: &IqImbalance,
    q: f64,
    v: f64,
    config: &SystemConfig,
) -> Result<MarginalMoments> {
    let probs = case_probabilities(q, v)?;
    let cases = [(false, false), (false, true), (true, false), (true, true)];
    let mut e0 = 0.0;
    let mut e1 = 0.0;
    for (&p, &(xi, eta)) in probs.iter().zip(&cases) {
        let m = conditional_moments(channels, iq, xi, eta, config)?;
        e0 += p * m.mean_b0;
        e1 += p * m.mean_b1;
    }
    let n = config.n_samples as f64;
    Ok(MarginalMoments { e0, e1, d0: e0 * e0 / n, d1: e1 * e1 / n })
}

/// Assemble the test-statistic parameters from the marginal moments.
pub fn gaussian_params(e0: f64, e1: f64, d0: f64, d1: f64) -> Result<GaussianParams> {
    for (name, d) in [("d0", d0), ("d1", d1)] {
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::InvalidParameter {
                name: if name == "d0" { "d0" } else { "d1" },
                value: d,
                legal: "a finite variance > 0",
            });
        }
    }
    Ok(GaussianParams {
        theta: e1 - e0,
        delta0_sq: d0,
        delta1_sq: d1,
        delta_plus_sq: d0 + d1,
    })
}

/// Full closed-form pipeline for the IQ-impaired link, using the presence
/// probabilities carried by `config`.
pub fn iq_params(
    channels: &ChannelSet,
    iq: &IqImbalance,
    config: &SystemConfig,
) -> Result<GaussianParams> {
    let m = marginal_moments(channels, iq, config.q, config.v, config)?;
    gaussian_params(m.e0, m.e1, m.d0, m.d1)
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-z * z / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// PDF of the test statistic under the given hypothesis: an equal mixture of
/// `N(0, 2 delta0^2)` and `N(0, 2 delta1^2)` for symbol 0, of
/// `N(+/- theta, delta_plus^2)` for symbol 1.
pub fn pdf_t(x: f64, params: &GaussianParams, hypothesis: bool) -> f64 {
    if hypothesis {
        0.5 * normal_pdf(x, params.theta, params.delta_plus_sq)
            + 0.5 * normal_pdf(x, -params.theta, params.delta_plus_sq)
    } else {
        0.5 * normal_pdf(x, 0.0, 2.0 * params.delta0_sq)
            + 0.5 * normal_pdf(x, 0.0, 2.0 * params.delta1_sq)
    }
}

/// Draw one test statistic from the mixture, returning the symbol and the
/// value. Branches within a symbol are equiprobable.
pub fn sample_t<R: Rng + ?Sized>(params: &GaussianParams, rng: &mut R) -> (bool, f64) {
    use rand_distr::{Distribution, StandardNormal};
    let a: bool = rng.gen();
    let z: f64 = StandardNormal.sample(rng);
    let t = if a {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        sign * params.theta + params.delta_plus() * z
    } else {
        let var = if rng.gen::<bool>() { 2.0 * params.delta0_sq } else { 2.0 * params.delta1_sq };
        var.sqrt() * z
    };
    (a, t)
}

/// Standard Gaussian tail probability `Q(x) = erfc(x / sqrt(2)) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erf::erfc(x / std::f64::consts::SQRT_2)
}

fn threshold_from(theta: f64, delta_plus_sq: f64) -> Result<f64> {
    if theta == 0.0 {
        return Err(Error::DegenerateSeparation);
    }
    if !(delta_plus_sq > 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta_plus_sq",
            value: delta_plus_sq,
            legal: "a variance > 0",
        });
    }
    let t = theta.abs();
    let ratio = theta * theta / delta_plus_sq;
    Ok(t / 2.0 + delta_plus_sq / t * (1.0 + (1.0 - (-ratio).exp()).sqrt()).ln())
}

/// Near-optimal detection threshold for the IQ-impaired link:
/// `|theta| / 2 + (delta_plus^2 / |theta|) ln(1 + sqrt(1 - exp(-theta^2 / delta_plus^2)))`.
pub fn threshold_iq(params: &GaussianParams) -> Result<f64> {
    threshold_from(params.theta, params.delta_plus_sq)
}

/// Closed-form BER of the `|T| >= gamma` decision rule.
pub fn ber_iq(gamma: f64, params: &GaussianParams) -> f64 {
    let dp = params.delta_plus();
    0.5 * q_function(gamma / (2.0 * params.delta0_sq).sqrt())
        + 0.5 * q_function(gamma / (2.0 * params.delta1_sq).sqrt())
        - 0.5 * q_function((gamma + params.theta) / dp)
        + 0.5 * q_function((-gamma + params.theta) / dp)
}

/// Mean separation and hypothesis variances of the ideal transceiver:
/// `delta = (|h + mu g|^2 - |h|^2) P_s`, `sigma_b^2 = (2/N) |gain_b|^2 P_s sigma_w^2`.
pub fn ideal_params(channels: &ChannelSet, config: &SystemConfig) -> Result<IdealParams> {
    config.validate()?;
    let g0 = channels.h_m.norm_sqr();
    let g1 = (channels.h_m + channels.mu_m * channels.g_m).norm_sqr();
    let n = config.n_samples as f64;
    Ok(IdealParams {
        delta_ideal: (g1 - g0) * config.p_s,
        sigma0_sq: 2.0 / n * g0 * config.p_s * config.sigma_w2,
        sigma1_sq: 2.0 / n * g1 * config.p_s * config.sigma_w2,
    })
}

/// Near-optimal threshold for the ideal transceiver.
pub fn threshold_ideal(p: &IdealParams) -> Result<f64> {
    threshold_from(p.delta_ideal, p.sigma0_sq + p.sigma1_sq)
}

/// Closed-form BER for the ideal transceiver at threshold `gamma`.
pub fn ber_ideal(gamma: f64, p: &IdealParams) -> f64 {
    ber_iq(gamma, &p.as_gaussian())
}

/// Folded-normal approximation of `E|T|`:
/// `sqrt(3/(8 pi)) Delta+ + (Delta+/sqrt(2 pi)) exp(-theta^2/(2 Delta+^2)) + (theta/2) erf(theta/(sqrt(2) Delta+))`,
/// where the last term is the error-function form of the truncated Gaussian
/// integral.
pub fn folded_mean_abs_t(params: &GaussianParams) -> f64 {
    let dp = params.delta_plus();
    let theta = params.theta;
    let ratio = theta / dp;
    (3.0 / (8.0 * std::f64::consts::PI)).sqrt() * dp
        + dp / (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * ratio * ratio).exp()
        + 0.5 * theta * erf::erf(ratio / std::f64::consts::SQRT_2)
}

/// Variance of the test statistic over the full mixture:
/// `Delta+^2 + theta^2 / 2` (its mean is zero).
pub fn var_t(params: &GaussianParams) -> f64 {
    params.delta_plus_sq + 0.5 * params.theta * params.theta
}
