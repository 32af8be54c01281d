//! Sequential statistical inference for a continuously monitored spin-noise
//! magnetometer.
//!
//! The sensor output is modeled as a two-component Ornstein-Uhlenbeck spin
//! process observed through shot noise: the photocurrent record is a
//! stationary Gaussian time series whose power spectrum is a Lorentzian of
//! width `gamma` centered at the Larmor frequency `omega_l`, on top of a
//! flat shot-noise floor. Two hypotheses differing in `omega_l` are compared
//! through the log-likelihood ratio (LLR) of the record, which this crate
//! computes three independent ways:
//!
//! * streaming, through a pair of hybrid Kalman filters ([`kalman`]),
//! * exactly, through dense Toeplitz Gaussian algebra ([`oracle`]),
//! * asymptotically, through frequency-domain rate integrals ([`bounds`]).
//!
//! On top of the LLR sit the decision layers ([`sequential`]): fixed-sample
//! likelihood-ratio tests, Wald's sequential probability ratio test, and
//! CUSUM quickest change-point detection. [`spectral`] provides periodogram
//! and Whittle-likelihood calibration of the model parameters together with
//! Fisher-information error bars, and [`harness`] orchestrates the Monte
//! Carlo campaigns that exercise all of it end to end.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod io;
pub mod kalman;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod prefilter;
pub mod presets;
pub mod sequential;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{HypothesisPair, ModelParams, PairConfig};
pub use sim::Trace;
