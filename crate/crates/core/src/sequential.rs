//! Decision layer: fixed-sample tests, the sequential probability ratio
//! test, and CUSUM change detection, all driven by the running LLR
//! `L = log p_1 / p_0`.
//!
//! SPRT thresholds come from the Bayesian stopping rule "stop when the
//! posterior for the accepted hypothesis reaches `1 - eps`":
//! accept hypothesis 1 at `L >= a1 = ln(pi0 (1-eps1) / (pi1 eps1))`, accept
//! hypothesis 0 at `L <= -a0 = -ln(pi1 (1-eps0) / (pi0 eps0))`. Wald's
//! relations map the same thresholds to frequentist error rates.
//!
//! CUSUM is provided in both common forms: the max recursion
//! `M <- max(M, 0) + dL` (the running maximum over candidate change times)
//! and the positive-part accumulator `L+ <- L+ + max(0, dL)`. They are not
//! pathwise identical; both alarm at `M >= a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a decision rule at some sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Continue,
    AcceptH0,
    AcceptH1,
    Alarm,
}

/// Fixed-sample likelihood-ratio test: accept hypothesis 1 iff the final
/// LLR exceeds `a` (ties go to hypothesis 0). `a = 0` is the
/// maximum-likelihood rule for equal priors.
pub fn fixed_sample_test(llr_final: f64, a: f64) -> Verdict {
    if llr_final > a {
        Verdict::AcceptH1
    } else {
        Verdict::AcceptH0
    }
}

/// SPRT configuration with Bayesian-calibrated thresholds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SprtConfig {
    pub eps0: f64,
    pub eps1: f64,
    pub pi0: f64,
    pub pi1: f64,
    /// Accept hypothesis 0 at `L <= -a0`.
    pub a0: f64,
    /// Accept hypothesis 1 at `L >= a1`.
    pub a1: f64,
}

impl SprtConfig {
    pub fn new(eps0: f64, eps1: f64, pi0: f64) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 < 0.5 && eps1 > 0.0 && eps1 < 0.5) {
            return Err(Error::config("error targets must lie in (0, 1/2)"));
        }
        if !(pi0 > 0.0 && pi0 < 1.0) {
            return Err(Error::config("prior pi0 must lie in (0, 1)"));
        }
        let pi1 = 1.0 - pi0;
        let a0 = (pi1 * (1.0 - eps0) / (pi0 * eps0)).ln();
        let a1 = (pi0 * (1.0 - eps1) / (pi1 * eps1)).ln();
        if !(a0 > 0.0 && a1 > 0.0) {
            return Err(Error::config("derived thresholds must be positive"));
        }
        Ok(SprtConfig {
            eps0,
            eps1,
            pi0,
            pi1,
            a0,
            a1,
        })
    }

    /// Equal priors, equal error targets.
    pub fn symmetric(eps: f64) -> Result<Self> {
        Self::new(eps, eps, 0.5)
    }

    /// Symmetric test specified directly by its threshold `a` (in nats).
    pub fn from_threshold(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::config("threshold must be positive"));
        }
        let eps = 1.0 / (1.0 + a.exp());
        Self::symmetric(eps)
    }
}

/// One SPRT decision on the current cumulative LLR. Thresholds are closed:
/// equality stops.
pub fn sprt_step(cfg: &SprtConfig, cumulative_llr: f64) -> Verdict {
    if cumulative_llr >= cfg.a1 {
        Verdict::AcceptH1
    } else if cumulative_llr <= -cfg.a0 {
        Verdict::AcceptH0
    } else {
        Verdict::Continue
    }
}

/// Wald's error rates for a test that stops exactly on its thresholds:
/// `alpha0` = probability of accepting hypothesis 0 under hypothesis 1,
/// `alpha1` = probability of accepting hypothesis 1 under hypothesis 0.
pub fn wald_errors(a0: f64, a1: f64) -> (f64, f64) {
    let alpha0 = (1.0 - (-a1).exp()) / (a0.exp() - (-a1).exp());
    let alpha1 = (1.0 - (-a0).exp()) / (a1.exp() - (-a0).exp());
    (alpha0, alpha1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CusumVariant {
    /// `M <- max(M, 0) + dL`, the exact running maximum over change times.
    MaxForm,
    /// `L+ <- L+ + max(0, dL)`: accumulates only positive evidence.
    PositivePart,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CusumConfig {
    /// Alarm threshold in nats.
    pub a: f64,
    pub variant: CusumVariant,
}

impl CusumConfig {
    pub fn new(a: f64, variant: CusumVariant) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::config("alarm threshold must be positive"));
        }
        Ok(CusumConfig { a, variant })
    }

    /// Threshold guaranteeing a mean false-alarm time of at least
    /// `t_fa_target` seconds: `a = ln(t_fa / delta)`.
    pub fn from_false_alarm_time(t_fa_target: f64, delta: f64, variant: CusumVariant) -> Result<Self> {
        if !(t_fa_target > delta) {
            return Err(Error::config("false-alarm target must exceed the sampling period"));
        }
        Self::new((t_fa_target / delta).ln(), variant)
    }
}

/// CUSUM statistic state.
#[derive(Debug, Clone, Copy, Default)]
pub struct CusumState {
    pub stat: f64,
}

impl CusumState {
    /// Advances the statistic with one LLR increment; returns true on alarm
    /// (closed threshold). The caller decides whether to reset and continue
    /// or to stop the stream.
    pub fn step(&mut self, cfg: &CusumConfig, delta_llr: f64) -> bool {
        self.stat = match cfg.variant {
            CusumVariant::MaxForm => self.stat.max(0.0) + delta_llr,
            CusumVariant::PositivePart => self.stat + delta_llr.max(0.0),
        };
        self.stat >= cfg.a
    }

    pub fn reset(&mut self) {
        self.stat = 0.0;
    }
}

/// Maximum-likelihood change-point estimate at alarm time: the index of the
/// minimum of the cumulative LLR history, ties broken toward the earliest
/// index.
pub fn change_point_estimate(cumulative_llr: &[f64]) -> Result<usize> {
    if cumulative_llr.is_empty() {
        return Err(Error::config("empty LLR history"));
    }
    let mut best = 0usize;
    let mut best_val = cumulative_llr[0];
    for (k, &v) in cumulative_llr.iter().enumerate().skip(1) {
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    Ok(best)
}

/// Summary of one monitored run for delay statistics.
#[derive(Debug, Clone, Copy)]
pub struct CusumRun {
    /// First alarm index, if the run alarmed before exhausting its data.
    pub alarm_index: Option<usize>,
    /// True change index, `None` for pure-noise (false alarm) runs.
    pub true_change: Option<usize>,
    /// Samples observed.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DelayStats {
    /// Mean of `(T - nu) delta` over change runs that alarmed at `T >= nu`.
    pub mean_delay_s: f64,
    pub delay_runs: usize,
    /// Mean alarm time over no-change runs that alarmed.
    pub mean_false_alarm_s: f64,
    pub false_alarm_runs: usize,
    /// Runs that never alarmed (excluded from the means).
    pub censored: usize,
}

/// Aggregates detection delay over change runs (conditioned on the alarm
/// landing at or after the change) and false-alarm time over no-change runs.
pub fn delay_and_false_alarm_stats(runs: &[CusumRun], delta: f64) -> Result<DelayStats> {
    let mut out = DelayStats::default();
    let mut delay_sum = 0.0;
    let mut fa_sum = 0.0;
    for run in runs {
        match (run.alarm_index, run.true_change) {
            (Some(t), Some(nu)) if t >= nu => {
                delay_sum += (t - nu) as f64 * delta;
                out.delay_runs += 1;
            }
            (Some(t), None) => {
                fa_sum += (t + 1) as f64 * delta;
                out.false_alarm_runs += 1;
            }
            (Some(_), Some(_)) => {
                // alarmed before the change: a false alarm within a change
                // run; excluded from both means
                out.censored += 1;
            }
            (None, _) => out.censored += 1,
        }
    }
    if out.delay_runs == 0 && out.false_alarm_runs == 0 {
        return Err(Error::config("no completed runs"));
    }
    if out.delay_runs > 0 {
        out.mean_delay_s = delay_sum / out.delay_runs as f64;
    }
    if out.false_alarm_runs > 0 {
        out.mean_false_alarm_s = fa_sum / out.false_alarm_runs as f64;
    }
    Ok(out)
}

/// Per-sample streaming decision record (JSONL-friendly).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub n: usize,
    pub t: f64,
    pub llr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cusum: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub change_estimate: Option<usize>,
}
