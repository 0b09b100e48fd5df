//! Parameter types, IQ coefficient computation, channel and interference
//! sampling, and differential encoding for the multi-channel AmBC link.
//!
//! A direct-conversion transceiver with local-oscillator amplitude error
//! `rho` and phase error `phi` leaks a conjugated copy of the image
//! channel's signal into each channel. The leakage is captured by a pair of
//! complex coefficients; the ideal setting `(rho, phi) = (1, 0)` collapses
//! the pair to `(1, 0)` and the model to the ideal transceiver.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Amplitude/phase local-oscillator error pairs for TX and RX.
///
/// `rho` is dimensionless in `(0, 1]`, `phi` is in radians. The ideal
/// transceiver is `(1, 0, 1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqImbalance {
    pub rho_t: f64,
    pub phi_t: f64,
    pub rho_r: f64,
    pub phi_r: f64,
}

impl IqImbalance {
    pub fn new(rho_t: f64, phi_t: f64, rho_r: f64, phi_r: f64) -> Result<Self> {
        check_rho("rho_t", rho_t)?;
        check_rho("rho_r", rho_r)?;
        if !phi_t.is_finite() || !phi_r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: if phi_t.is_finite() { phi_r } else { phi_t },
                legal: "a finite angle in radians",
            });
        }
        Ok(Self { rho_t, phi_t, rho_r, phi_r })
    }

    /// Ideal transceiver: no amplitude or phase error on either side.
    pub fn ideal() -> Self {
        Self { rho_t: 1.0, phi_t: 0.0, rho_r: 1.0, phi_r: 0.0 }
    }

    /// Same error on both TX and RX.
    pub fn joint(rho: f64, phi: f64) -> Result<Self> {
        Self::new(rho, phi, rho, phi)
    }

    /// TX-side error only; RX ideal.
    pub fn tx_only(rho: f64, phi: f64) -> Result<Self> {
        Self::new(rho, phi, 1.0, 0.0)
    }

    /// RX-side error only; TX ideal.
    pub fn rx_only(rho: f64, phi: f64) -> Result<Self> {
        Self::new(1.0, 0.0, rho, phi)
    }

    /// Build the `percent`-deviation setting used throughout the experiments:
    /// amplitude deviation `(1 - rho) * 100%` and phase deviation
    /// `2 phi / pi * 100%`, both moved together, so `percent` degrees of
    /// phase error pair with `rho = 1 - percent / 100`.
    pub fn from_percent(percent: f64, mode: ImbalanceMode) -> Result<Self> {
        if !(0.0..100.0).contains(&percent) {
            return Err(Error::InvalidParameter {
                name: "percent",
                value: percent,
                legal: "a deviation percentage in [0, 100)",
            });
        }
        let rho = 1.0 - percent / 100.0;
        let phi = percent * std::f64::consts::PI / 180.0;
        match mode {
            ImbalanceMode::Joint => Self::joint(rho, phi),
            ImbalanceMode::TxOnly => Self::tx_only(rho, phi),
            ImbalanceMode::RxOnly => Self::rx_only(rho, phi),
        }
    }

    pub fn kappa_tx(&self) -> KappaPair {
        kappa_tx(self.rho_t, self.phi_t).expect("validated at construction")
    }

    pub fn kappa_rx(&self) -> KappaPair {
        kappa_rx(self.rho_r, self.phi_r).expect("validated at construction")
    }
}

/// Which side of the link carries the imbalance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImbalanceMode {
    Joint,
    TxOnly,
    RxOnly,
}

fn check_rho(name: &'static str, rho: f64) -> Result<()> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value: rho,
            legal: "a finite amplitude > 0",
        });
    }
    Ok(())
}

/// A pair of complex image-leakage coefficients.
///
/// The TX pair satisfies `k1 + k2 = 1`; the RX pair satisfies
/// `k1 + conj(k2) = 1`. Both satisfy `|k1|^2 + |k2|^2 = (1 + rho^2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaPair {
    pub k1: Complex64,
    pub k2: Complex64,
}

/// TX coefficients: `k1 = (1 + rho e^{j phi}) / 2`, `k2 = (1 - rho e^{j phi}) / 2`.
pub fn kappa_tx(rho_t: f64, phi_t: f64) -> Result<KappaPair> {
    check_rho("rho_t", rho_t)?;
    let e = Complex64::from_polar(rho_t, phi_t);
    Ok(KappaPair {
        k1: (Complex64::new(1.0, 0.0) + e) / 2.0,
        k2: (Complex64::new(1.0, 0.0) - e) / 2.0,
    })
}

/// RX coefficients: `k1 = (1 + rho e^{-j phi}) / 2`, `k2 = (1 - rho e^{+j phi}) / 2`.
///
/// Note the conjugate asymmetry relative to the TX pair.
pub fn kappa_rx(rho_r: f64, phi_r: f64) -> Result<KappaPair> {
    check_rho("rho_r", rho_r)?;
    let e_neg = Complex64::from_polar(rho_r, -phi_r);
    let e_pos = Complex64::from_polar(rho_r, phi_r);
    Ok(KappaPair {
        k1: (Complex64::new(1.0, 0.0) + e_neg) / 2.0,
        k2: (Complex64::new(1.0, 0.0) - e_pos) / 2.0,
    })
}

/// The six complex gains of a channel pair: direct (TX->RX), TX->tag, and
/// tag->RX for channel `m` and its image `-m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub h_m: Complex64,
    pub mu_m: Complex64,
    pub g_m: Complex64,
    pub h_im: Complex64,
    pub mu_im: Complex64,
    pub g_im: Complex64,
}

impl ChannelSet {
    /// Effective image-channel gain `h_{-m} + eta * mu_{-m} g_{-m}`:
    /// the direct image path plus, when the image tag reflects, its
    /// backscatter path.
    pub fn image_gain(&self, eta: bool) -> Complex64 {
        if eta {
            self.h_im + self.mu_im * self.g_im
        } else {
            self.h_im
        }
    }
}

/// Draw a circularly-symmetric complex Gaussian `CN(0, variance)`:
/// independent real and imaginary parts, each `N(0, variance / 2)`.
#[inline]
pub fn sample_cn<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draw all six gains i.i.d. from `CN(0, 1)`.
pub fn sample_channels<R: Rng + ?Sized>(rng: &mut R) -> ChannelSet {
    ChannelSet {
        h_m: sample_cn(1.0, rng),
        mu_m: sample_cn(1.0, rng),
        g_m: sample_cn(1.0, rng),
        h_im: sample_cn(1.0, rng),
        mu_im: sample_cn(1.0, rng),
        g_im: sample_cn(1.0, rng),
    }
}

/// How often the interference state is redrawn during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResamplePolicy {
    /// One draw held constant across all K symbols of a transmission block.
    PerBlock,
    /// A fresh draw for every symbol.
    PerSymbol,
}

impl FromStr for ResamplePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-block" => Ok(Self::PerBlock),
            "per-symbol" => Ok(Self::PerSymbol),
            _ => Err(Error::InvalidSpec(format!(
                "unknown resample policy `{s}` (expected per-block or per-symbol)"
            ))),
        }
    }
}

/// Link and experiment parameters.
///
/// `p_s = sigma_w2 * 10^(snr_db / 10)` is maintained as an invariant:
/// construct through [`SystemConfig::from_snr`] or keep the three fields
/// consistent by hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// TX signal power (linear).
    pub p_s: f64,
    /// Noise variance (linear).
    pub sigma_w2: f64,
    /// Samples per tag bit (N).
    pub n_samples: usize,
    /// Symbols per block (K).
    pub k_symbols: usize,
    /// Presence probability of the image-channel TX signal.
    pub q: f64,
    /// Active probability of the image-channel tag.
    pub v: f64,
    /// Signal-to-noise ratio in dB.
    pub snr_db: f64,
    /// Master PRNG seed.
    pub seed: u64,
    pub resample_policy: ResamplePolicy,
}

impl SystemConfig {
    pub fn from_snr(
        snr_db: f64,
        sigma_w2: f64,
        n_samples: usize,
        k_symbols: usize,
        q: f64,
        v: f64,
        seed: u64,
        resample_policy: ResamplePolicy,
    ) -> Result<Self> {
        let cfg = Self {
            p_s: sigma_w2 * 10f64.powf(snr_db / 10.0),
            sigma_w2,
            n_samples,
            k_symbols,
            q,
            v,
            snr_db,
            seed,
            resample_policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Baseline experiment parameters: N = 100, K = 100, unit noise,
    /// SNR = 15 dB, q = v = 0.5.
    pub fn default_experiment(seed: u64) -> Self {
        Self::from_snr(15.0, 1.0, 100, 100, 0.5, 0.5, seed, ResamplePolicy::PerBlock)
            .expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("q", self.q)?;
        check_probability("v", self.v)?;
        if !self.sigma_w2.is_finite() || self.sigma_w2 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "sigma_w2",
                value: self.sigma_w2,
                legal: "a finite variance > 0",
            });
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter {
                name: "n_samples",
                value: self.n_samples as f64,
                legal: "an integer >= 2",
            });
        }
        if self.k_symbols < 2 {
            return Err(Error::InvalidParameter {
                name: "k_symbols",
                value: self.k_symbols as f64,
                legal: "an integer >= 2",
            });
        }
        let expected = self.sigma_w2 * 10f64.powf(self.snr_db / 10.0);
        if !self.p_s.is_finite() || (self.p_s - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::InvalidParameter {
                name: "p_s",
                value: self.p_s,
                legal: "sigma_w2 * 10^(snr_db / 10)",
            });
        }
        Ok(())
    }

    /// Copy with a new SNR, keeping `p_s` consistent.
    pub fn with_snr(&self, snr_db: f64) -> Self {
        Self {
            snr_db,
            p_s: self.sigma_w2 * 10f64.powf(snr_db / 10.0),
            ..*self
        }
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name,
            value: p,
            legal: "a probability in [0, 1]",
        });
    }
    Ok(())
}

/// Presence indicators for the image channel: `xi` for the TX signal,
/// `eta` for the backscattered signal. Sampled independently with
/// `Pr(xi = 1) = q` and `Pr(eta = 1) = v / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterferenceState {
    pub xi: bool,
    pub eta: bool,
}

impl InterferenceState {
    /// Both indicators off; the IQ model degenerates toward the ideal one.
    pub const OFF: Self = Self { xi: false, eta: false };
}

pub fn sample_interference_state<R: Rng + ?Sized>(
    q: f64,
    v: f64,
    rng: &mut R,
) -> Result<InterferenceState> {
    check_probability("q", q)?;
    check_probability("v", v)?;
    Ok(InterferenceState {
        xi: rng.gen::<f64>() < q,
        eta: rng.gen::<f64>() < v / 2.0,
    })
}

/// A differentially encoded tag bit stream: `encoded[k] = pre[k] XOR encoded[k-1]`
/// with one reference bit `encoded[0]` ahead of the K data symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    pub pre_encoded: Vec<bool>,
    pub encoded: Vec<bool>,
}

/// Differentially encode `pre` starting from the reference bit `b0`.
pub fn differential_encode(pre: &[bool], b0: bool) -> BitSequence {
    let mut encoded = Vec::with_capacity(pre.len() + 1);
    encoded.push(b0);
    let mut prev = b0;
    for &a in pre {
        prev ^= a;
        encoded.push(prev);
    }
    BitSequence { pre_encoded: pre.to_vec(), encoded }
}

/// Recover the pre-encoded symbols: `a[k] = b[k] XOR b[k-1]`.
///
/// Round-trips with [`differential_encode`] for either reference bit.
pub fn differential_decode(encoded: &[bool]) -> Result<Vec<bool>> {
    if encoded.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "differential decode needs at least 2 bits, got {}",
            encoded.len()
        )));
    }
    Ok(encoded.windows(2).map(|w| w[0] ^ w[1]).collect())
}
