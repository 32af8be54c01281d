//! Calibrated example configurations.

use crate::model::{HypothesisPair, PairConfig};

/// Calibration of a rubidium vapor-cell magnetometer sampled at 200 kSa/s,
/// with the two hypotheses split by about 437 Hz around 50.3 kHz. Used as
/// the default worked example throughout the tests and the CLI docs.
pub fn rubidium_config() -> PairConfig {
    PairConfig {
        gamma_hz: 330.90,
        omega_l0_hz: 50114.03,
        omega_l1_hz: 50550.88,
        s_at: 31.768,
        s_ph: 13.0457,
        delta_s: 5e-6,
    }
}

pub fn rubidium_pair() -> HypothesisPair {
    rubidium_config().to_pair().expect("preset config is valid")
}

/// High-pass strength used in the worked example pipeline.
pub const EXAMPLE_FILTER_ALPHA: f64 = 0.91;
