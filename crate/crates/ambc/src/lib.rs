//! Link-level toolkit for symbol detection in multi-channel, multi-tag
//! ambient backscatter under transmitter and receiver IQ imbalance.
//!
//! The crate provides three parallel routes to the same detector
//! performance figures and cross-validates them against each other:
//!
//! - [`waveform`] + [`montecarlo`]: sample-level simulation of the
//!   impaired link, energy-difference detection, and empirical BER.
//! - [`analytics`]: closed-form block-energy moments, the Gaussian mixture
//!   of the test statistic, near-optimal thresholds (ideal-transceiver and
//!   IQ-aware variants), and analytic BER.
//! - [`estimator`]: blind threshold recovery from sample moments of the
//!   test statistic alone, without channel or impairment knowledge.
//!
//! Start with the `examples/` directory; each example exercises one of
//! these capabilities end to end. The `ambc` binary exposes the same
//! functionality as subcommands for scripted runs.

pub mod analytics;
pub mod error;
pub mod estimator;
pub mod model;
pub mod montecarlo;
pub mod waveform;

pub use error::{Error, Result};
pub use model::{
    ChannelSet, ImbalanceMode, InterferenceState, IqImbalance, ResamplePolicy, SystemConfig,
};
pub use waveform::ReceiverModel;
