//! Parametric model of the spin-noise sensor.
//!
//! The transverse spin `J = (J_y, J_z)` follows a two-dimensional
//! Ornstein-Uhlenbeck process with relaxation rate `gamma` and Larmor
//! precession at `omega_l`; the photocurrent samples `I_k = J_z(t_k) + xi_k`
//! add white shot noise of spectral density `s_ph`. Everything downstream
//! (simulator, Kalman filters, Toeplitz oracles, rate integrals) derives its
//! quantities from [`ModelParams`]:
//!
//! * drive strength `Q = 2 gamma^2 s_at`, so the atomic peak of the power
//!   spectrum is exactly `s_at`,
//! * steady-state spin covariance `(Q / 2 gamma) I = gamma s_at I`,
//! * exact one-step transition `Phi = e^{-gamma Delta} R(omega_l Delta)` with
//!   isotropic process noise `Qd = gamma s_at (1 - e^{-2 gamma Delta}) I`.
//!
//! All internal frequencies are angular (rad/s). Configuration files carry
//! plain Hz and are converted on load; see [`PairConfig`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Physical and statistical parameters of one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Transverse relaxation rate, rad/s.
    pub gamma: f64,
    /// Larmor angular frequency, rad/s.
    pub omega_l: f64,
    /// Atomic spectral density at the Lorentzian peak, signal-units^2/Hz.
    pub s_at: f64,
    /// Photon shot-noise spectral density, signal-units^2/Hz.
    pub s_ph: f64,
    /// Sampling period, seconds.
    pub delta: f64,
}

impl ModelParams {
    pub fn new(gamma: f64, omega_l: f64, s_at: f64, s_ph: f64, delta: f64) -> Result<Self> {
        let p = ModelParams {
            gamma,
            omega_l,
            s_at,
            s_ph,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds params from frequencies given in Hz (the unit used in config
    /// files and calibration tables).
    pub fn from_hz(gamma_hz: f64, omega_l_hz: f64, s_at: f64, s_ph: f64, delta: f64) -> Result<Self> {
        Self::new(
            2.0 * std::f64::consts::PI * gamma_hz,
            2.0 * std::f64::consts::PI * omega_l_hz,
            s_at,
            s_ph,
            delta,
        )
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.omega_l > 0.0 && self.omega_l.is_finite()) {
            return Err(Error::config(format!(
                "omega_l must be > 0, got {}",
                self.omega_l
            )));
        }
        if !(self.s_at >= 0.0 && self.s_at.is_finite()) {
            return Err(Error::config(format!("s_at must be >= 0, got {}", self.s_at)));
        }
        if !(self.s_ph > 0.0 && self.s_ph.is_finite()) {
            return Err(Error::config(format!("s_ph must be > 0, got {}", self.s_ph)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.omega_l * self.delta >= std::f64::consts::PI {
            return Err(Error::config(format!(
                "omega_l * delta = {:.4} exceeds the Nyquist bound pi",
                self.omega_l * self.delta
            )));
        }
        Ok(())
    }

    /// Wiener drive strength `Q = 2 gamma^2 s_at`.
    pub fn q(&self) -> f64 {
        2.0 * self.gamma * self.gamma * self.s_at
    }

    /// Shot-noise variance per sample, `G = s_ph / delta`.
    pub fn shot_noise_var(&self) -> f64 {
        self.s_ph / self.delta
    }

    /// Steady-state variance of each spin component, `Q / 2 gamma`.
    pub fn steady_state_var(&self) -> f64 {
        self.gamma * self.s_at
    }

    /// Power spectral density of the photocurrent, signal-units^2/Hz.
    ///
    /// Even in `omega`; approaches `s_ph` far from the Larmor peaks.
    pub fn psd(&self, omega: f64) -> f64 {
        let g2 = self.gamma * self.gamma;
        let dm = g2 + (omega - self.omega_l).powi(2);
        let dp = g2 + (omega + self.omega_l).powi(2);
        self.s_at * (g2 / dm + g2 / dp) + self.s_ph
    }

    /// Gradient of `psd` with respect to `(gamma, omega_l, s_at, s_ph)`.
    pub fn psd_grad(&self, omega: f64) -> [f64; 4] {
        let g = self.gamma;
        let g2 = g * g;
        let xm = omega - self.omega_l;
        let xp = omega + self.omega_l;
        let dm = g2 + xm * xm;
        let dp = g2 + xp * xp;
        let d_gamma = self.s_at * (2.0 * g * xm * xm / (dm * dm) + 2.0 * g * xp * xp / (dp * dp));
        let d_omega = self.s_at * (2.0 * g2 * xm / (dm * dm) - 2.0 * g2 * xp / (dp * dp));
        let d_s_at = g2 / dm + g2 / dp;
        [d_gamma, d_omega, d_s_at, 1.0]
    }

    /// Spectral density of the sampled process (the Toeplitz symbol times
    /// `delta`), signal-units^2/Hz. Includes all aliasing of the Lorentzian
    /// tails; converges to [`Self::psd`] as `delta -> 0`.
    pub fn sampled_psd(&self, omega: f64) -> f64 {
        let theta = omega * self.delta;
        let gd = self.gamma * self.delta;
        let a = self.gamma * self.s_at * gd.sinh();
        let half = 0.5
            * (a / (gd.cosh() - (theta - self.omega_l * self.delta).cos())
                + a / (gd.cosh() - (theta + self.omega_l * self.delta).cos()));
        half * self.delta + self.s_ph
    }

    /// Stationary autocovariance of the photocurrent at integer lag `k`.
    pub fn autocovariance(&self, k: i64) -> f64 {
        let ak = k.unsigned_abs() as f64;
        let spin = self.steady_state_var()
            * (-self.gamma * ak * self.delta).exp()
            * (ak * self.omega_l * self.delta).cos();
        if k == 0 {
            spin + self.shot_noise_var()
        } else {
            spin
        }
    }

    /// Steady-state mean and covariance of the spin vector.
    pub fn steady_state_moments(&self) -> (Vec2, Mat2) {
        let v = self.steady_state_var();
        ([0.0, 0.0], [[v, 0.0], [0.0, v]])
    }

    /// Exact one-step transition matrix and process-noise covariance.
    pub fn discrete_transition(&self) -> (Mat2, Mat2) {
        let e = (-self.gamma * self.delta).exp();
        let (s, c) = (self.omega_l * self.delta).sin_cos();
        let phi = [[e * c, e * s], [-e * s, e * c]];
        let qv = self.steady_state_var() * (1.0 - (-2.0 * self.gamma * self.delta).exp());
        let qd = [[qv, 0.0], [0.0, qv]];
        (phi, qd)
    }

    /// Same dynamics with relaxation rate `new_gamma`, rescaling the drive so
    /// that `s_at * gamma` (the total spin-noise power) is unchanged.
    pub fn with_gamma_rescaled(&self, new_gamma: f64) -> Result<Self> {
        Self::new(
            new_gamma,
            self.omega_l,
            self.s_at * self.gamma / new_gamma,
            self.s_ph,
            self.delta,
        )
    }
}

/// A pair of hypotheses to discriminate.
///
/// In the baseline scenario both share everything except the Larmor
/// frequency; [`HypothesisPair::new`] enforces that, while
/// [`HypothesisPair::new_relaxed`] admits arbitrary pairs (used by the
/// local-limit diagnostics that perturb other parameters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisPair {
    pub h0: ModelParams,
    pub h1: ModelParams,
}

impl HypothesisPair {
    pub fn new(h0: ModelParams, h1: ModelParams) -> Result<Self> {
        if h0.gamma != h1.gamma
            || h0.s_at != h1.s_at
            || h0.s_ph != h1.s_ph
            || h0.delta != h1.delta
        {
            return Err(Error::config(
                "hypotheses must share gamma, s_at, s_ph and delta (use new_relaxed to override)",
            ));
        }
        let p = HypothesisPair { h0, h1 };
        p.validate_shape()?;
        Ok(p)
    }

    /// Admits hypotheses that differ in parameters other than `omega_l`.
    pub fn new_relaxed(h0: ModelParams, h1: ModelParams) -> Result<Self> {
        if h0.delta != h1.delta {
            return Err(Error::config("hypotheses must share the sampling period"));
        }
        Ok(HypothesisPair { h0, h1 })
    }

    fn validate_shape(&self) -> Result<()> {
        if self.c_a() <= 0.0 {
            return Err(Error::config("hypotheses have identical omega_l (c_a = 0)"));
        }
        if self.c_b() <= 0.0 {
            return Err(Error::config("s_at = 0 gives no signal to discriminate (c_b = 0)"));
        }
        Ok(())
    }

    pub fn params(&self, h: usize) -> &ModelParams {
        if h == 0 {
            &self.h0
        } else {
            &self.h1
        }
    }

    pub fn delta(&self) -> f64 {
        self.h0.delta
    }

    /// Center frequency `(omega_l0 + omega_l1) / 2`, rad/s.
    pub fn omega_c(&self) -> f64 {
        0.5 * (self.h0.omega_l + self.h1.omega_l)
    }

    /// Larmor splitting `omega_l0 - omega_l1`, rad/s (sign preserved).
    pub fn delta_omega(&self) -> f64 {
        self.h0.omega_l - self.h1.omega_l
    }

    /// Splitting-to-linewidth ratio `|delta_omega| / gamma`.
    pub fn c_a(&self) -> f64 {
        self.delta_omega().abs() / self.h0.gamma
    }

    /// Peak-to-floor ratio `s_at / s_ph`.
    pub fn c_b(&self) -> f64 {
        self.h0.s_at / self.h0.s_ph
    }

    pub fn swapped(&self) -> Self {
        HypothesisPair {
            h0: self.h1,
            h1: self.h0,
        }
    }
}

/// On-disk configuration for a hypothesis pair. Frequencies in Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairConfig {
    pub gamma_hz: f64,
    pub omega_l0_hz: f64,
    pub omega_l1_hz: f64,
    pub s_at: f64,
    pub s_ph: f64,
    pub delta_s: f64,
}

impl PairConfig {
    pub fn to_pair(&self) -> Result<HypothesisPair> {
        let h0 = ModelParams::from_hz(self.gamma_hz, self.omega_l0_hz, self.s_at, self.s_ph, self.delta_s)?;
        let h1 = ModelParams::from_hz(self.gamma_hz, self.omega_l1_hz, self.s_at, self.s_ph, self.delta_s)?;
        HypothesisPair::new(h0, h1)
    }
}
