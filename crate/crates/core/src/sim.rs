//! Synthetic photocurrent traces.
//!
//! The spin propagates with the exact discretization `J_{k+1} = Phi J_k + w_k`,
//! `w_k ~ N(0, Qd)`, so simulated records have exactly the Toeplitz covariance
//! the likelihood machinery assumes; there is no integrator error to budget
//! for. Each trace owns one ChaCha stream seeded from a 64-bit value, and
//! batch drivers derive per-trace seeds with [`derive_seed`], so results do
//! not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::model::{HypothesisPair, ModelParams};

/// A finite, uniformly sampled signal record.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<f64>,
    /// Sampling period, seconds.
    pub delta: f64,
    /// Seed that generated the trace (0 for records loaded from hardware).
    pub seed: u64,
    /// Index of the first post-change sample, when a change was injected.
    pub true_change_index: Option<usize>,
    /// Hypothesis id the trace was generated under, when known.
    pub label: Option<u8>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.delta
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::config("trace must contain at least one sample"));
        }
        if self.samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("trace contains non-finite samples"));
        }
        if let Some(nu) = self.true_change_index {
            if nu > self.samples.len() {
                return Err(Error::config("change index exceeds trace length"));
            }
        }
        Ok(())
    }
}

/// Transverse spin state `(J_y, J_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinState {
    pub j: Vec2,
}

/// Initial condition for the hidden spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Draw `J_0 ~ N(0, (Q / 2 gamma) I)`.
    SteadyState,
    Fixed(SpinState),
}

/// SplitMix64 step; derives statistically independent per-trace seeds from a
/// master seed and a trace index. Documented so external tools can reproduce
/// any single trajectory of a batch.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Simulates `n` photocurrent samples under a single hypothesis.
pub fn simulate(params: &ModelParams, n: usize, seed: u64, initial: InitialState) -> Result<Trace> {
    let pair = SwitchSpec {
        pre: *params,
        post: *params,
        nu: n,
    };
    simulate_switched(&pair, n, seed, initial, None)
}

/// Simulates a record that follows `pair.h0` for samples `k < nu` and
/// `pair.h1` for `k >= nu`. The spin state is continuous across the switch.
pub fn simulate_with_change(pair: &HypothesisPair, n: usize, nu: usize, seed: u64) -> Result<Trace> {
    if nu > n {
        return Err(Error::config(format!("change index {nu} exceeds trace length {n}")));
    }
    let spec = SwitchSpec {
        pre: pair.h0,
        post: pair.h1,
        nu,
    };
    let mut trace = simulate_switched(&spec, n, seed, InitialState::SteadyState, None)?;
    trace.true_change_index = Some(nu);
    Ok(trace)
}

/// Simulates under a relaxation rate drawn once per trace,
/// `gamma~ = gamma + dgamma` with `dgamma ~ N(0, sigma_dgamma^2)`, rescaling
/// the drive so the total spin-noise power `s_at * gamma` stays fixed.
///
/// `sigma_dgamma` larger than `gamma / 3` is clamped to keep the rate
/// positive at three sigma; a draw at or below zero is still an error.
pub fn simulate_fluctuating_gamma(
    params: &ModelParams,
    n: usize,
    sigma_dgamma: f64,
    seed: u64,
) -> Result<Trace> {
    if sigma_dgamma < 0.0 || !sigma_dgamma.is_finite() {
        return Err(Error::config("sigma_dgamma must be >= 0"));
    }
    let sigma = sigma_dgamma.min(params.gamma / 3.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dgamma: f64 = if sigma > 0.0 {
        sigma * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    };
    let gamma_eff = params.gamma + dgamma;
    if gamma_eff <= 0.0 {
        return Err(Error::numeric(format!(
            "drawn relaxation rate {gamma_eff} is not positive"
        )));
    }
    let effective = params.with_gamma_rescaled(gamma_eff)?;
    let spec = SwitchSpec {
        pre: effective,
        post: effective,
        nu: n,
    };
    simulate_switched(&spec, n, seed, InitialState::SteadyState, Some(rng))
}

struct SwitchSpec {
    pre: ModelParams,
    post: ModelParams,
    nu: usize,
}

/// Common core: one RNG stream, draw order `J_0`, then per sample
/// `(w_y, w_z, xi)`. `simulate_with_change` at `nu = 0` or `nu = n` is
/// bit-identical to `simulate` under the corresponding hypothesis.
fn simulate_switched(
    spec: &SwitchSpec,
    n: usize,
    seed: u64,
    initial: InitialState,
    rng: Option<ChaCha12Rng>,
) -> Result<Trace> {
    if n == 0 {
        return Err(Error::config("trace length must be at least 1"));
    }
    let mut rng = rng.unwrap_or_else(|| ChaCha12Rng::seed_from_u64(seed));
    let (phi_pre, qd_pre) = spec.pre.discrete_transition();
    let (phi_post, qd_post) = spec.post.discrete_transition();
    let sd_w_pre = qd_pre[0][0].sqrt();
    let sd_w_post = qd_post[0][0].sqrt();
    let sd_xi_pre = spec.pre.shot_noise_var().sqrt();
    let sd_xi_post = spec.post.shot_noise_var().sqrt();

    let mut j: Vec2 = match initial {
        InitialState::SteadyState => {
            let sd = spec.pre.steady_state_var().sqrt();
            [
                sd * rng.sample::<f64, _>(StandardNormal),
                sd * rng.sample::<f64, _>(StandardNormal),
            ]
        }
        InitialState::Fixed(s) => s.j,
    };

    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let (phi, sd_w, sd_xi) = if k < spec.nu {
            (&phi_pre, sd_w_pre, sd_xi_pre)
        } else {
            (&phi_post, sd_w_post, sd_xi_post)
        };
        let wy: f64 = rng.sample(StandardNormal);
        let wz: f64 = rng.sample(StandardNormal);
        let next = [
            phi[0][0] * j[0] + phi[0][1] * j[1] + sd_w * wy,
            phi[1][0] * j[0] + phi[1][1] * j[1] + sd_w * wz,
        ];
        j = next;
        let xi: f64 = rng.sample(StandardNormal);
        samples.push(j[1] + sd_xi * xi);
    }

    Ok(Trace {
        samples,
        delta: spec.pre.delta,
        seed,
        true_change_index: None,
        label: None,
    })
}
