//! Hybrid continuous-discrete Kalman filtering, used here to compute
//! likelihoods rather than state estimates.
//!
//! Each hypothesis runs its own filter. The chain rule turns the product of
//! one-step predictive densities `N(mu_k, sigma_k^2)` into the joint record
//! likelihood, so the running LLR is just the accumulated difference of
//! predictive log-densities of the two filters:
//!
//! `dL_k = log(sigma_{k,0}/sigma_{k,1})
//!        + (y - mu_{k,0})^2 / (2 sigma_{k,0}^2)
//!        - (y - mu_{k,1})^2 / (2 sigma_{k,1}^2)`
//!
//! with the convention `L = log p_1 / p_0` (positive values favor
//! hypothesis 1). Filters start from the steady-state prior, which makes
//! them exact from the first sample, and the covariance update uses the
//! Joseph form so that million-step streams keep a symmetric PSD covariance.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::model::{HypothesisPair, ModelParams};
use crate::sim::Trace;

/// Per-hypothesis filter constants.
#[derive(Debug, Clone, Copy)]
pub struct KalmanFilter {
    phi: Mat2,
    qd: Mat2,
    /// Shot-noise variance per sample, `sigma_k^2` can never go below this.
    shot_var: f64,
    init_var: f64,
}

/// Filter state: filtered spin estimate plus the latest innovation stats.
#[derive(Debug, Clone, Copy)]
pub struct KalmanState {
    pub mean: Vec2,
    pub cov: Mat2,
    /// Predicted measurement for the last processed sample.
    pub last_mu: f64,
    /// Innovation variance for the last processed sample.
    pub last_sigma2: f64,
}

/// Outputs of one predict/update step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutput {
    pub mu: f64,
    pub sigma2: f64,
    /// `log N(y; mu, sigma2)`.
    pub log_pred_density: f64,
}

impl KalmanFilter {
    pub fn new(params: &ModelParams) -> Self {
        let (phi, qd) = params.discrete_transition();
        KalmanFilter {
            phi,
            qd,
            shot_var: params.shot_noise_var(),
            init_var: params.steady_state_var(),
        }
    }

    /// Steady-state prior: zero mean, isotropic covariance `Q / 2 gamma`.
    pub fn init(&self) -> KalmanState {
        KalmanState {
            mean: [0.0, 0.0],
            cov: [[self.init_var, 0.0], [0.0, self.init_var]],
            last_mu: 0.0,
            last_sigma2: self.shot_var + self.init_var,
        }
    }

    /// One prediction + measurement update; returns the predictive moments
    /// and log-density of `y`.
    pub fn predict_update(&self, state: &mut KalmanState, y: f64) -> Result<StepOutput> {
        if !y.is_finite() {
            return Err(Error::config(format!("non-finite sample {y}")));
        }
        let p = &self.phi;
        let (m, c) = (&state.mean, &state.cov);

        // predict: mean = Phi m, cov = Phi C Phi^T + Qd
        let mp = [
            p[0][0] * m[0] + p[0][1] * m[1],
            p[1][0] * m[0] + p[1][1] * m[1],
        ];
        // A = Phi C
        let a00 = p[0][0] * c[0][0] + p[0][1] * c[1][0];
        let a01 = p[0][0] * c[0][1] + p[0][1] * c[1][1];
        let a10 = p[1][0] * c[0][0] + p[1][1] * c[1][0];
        let a11 = p[1][0] * c[0][1] + p[1][1] * c[1][1];
        let cp = [
            [
                a00 * p[0][0] + a01 * p[0][1] + self.qd[0][0],
                a00 * p[1][0] + a01 * p[1][1],
            ],
            [
                a10 * p[0][0] + a11 * p[0][1],
                a10 * p[1][0] + a11 * p[1][1] + self.qd[1][1],
            ],
        ];

        // measurement row is C = (0, 1): mu = (C mp), sigma2 = G + Cp[1][1]
        let mu = mp[1];
        let sigma2 = self.shot_var + cp[1][1];
        let innovation = y - mu;
        let gain = [cp[0][1] / sigma2, cp[1][1] / sigma2];

        state.mean = [mp[0] + gain[0] * innovation, mp[1] + gain[1] * innovation];
        // Joseph form: (I - K C) Cp (I - K C)^T + K G K^T
        let ikc = [[1.0, -gain[0]], [0.0, 1.0 - gain[1]]];
        let b00 = ikc[0][0] * cp[0][0] + ikc[0][1] * cp[1][0];
        let b01 = ikc[0][0] * cp[0][1] + ikc[0][1] * cp[1][1];
        let b10 = ikc[1][0] * cp[0][0] + ikc[1][1] * cp[1][0];
        let b11 = ikc[1][0] * cp[0][1] + ikc[1][1] * cp[1][1];
        let mut cov = [
            [
                b00 * ikc[0][0] + b01 * ikc[0][1] + gain[0] * gain[0] * self.shot_var,
                b00 * ikc[1][0] + b01 * ikc[1][1] + gain[0] * gain[1] * self.shot_var,
            ],
            [
                b10 * ikc[0][0] + b11 * ikc[0][1] + gain[1] * gain[0] * self.shot_var,
                b10 * ikc[1][0] + b11 * ikc[1][1] + gain[1] * gain[1] * self.shot_var,
            ],
        ];
        // enforce exact symmetry against rounding drift
        let off = 0.5 * (cov[0][1] + cov[1][0]);
        cov[0][1] = off;
        cov[1][0] = off;
        state.cov = cov;
        state.last_mu = mu;
        state.last_sigma2 = sigma2;

        let log_pred_density =
            -0.5 * ((2.0 * std::f64::consts::PI * sigma2).ln() + innovation * innovation / sigma2);
        Ok(StepOutput {
            mu,
            sigma2,
            log_pred_density,
        })
    }

    /// Fixed point of the innovation variance (discrete Riccati recursion),
    /// iterated to relative `1e-14`.
    pub fn stationary_innovation_variance(&self) -> f64 {
        let mut state = self.init();
        let mut prev = f64::INFINITY;
        for _ in 0..1_000_000 {
            // feed the predictive recursion only; the observed value is
            // irrelevant to the variance sequence
            let _ = self.predict_update(&mut state, 0.0);
            let s = state.last_sigma2;
            if (s - prev).abs() <= 1e-14 * s {
                return s;
            }
            prev = s;
        }
        prev
    }
}

/// Running LLR accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct LlrAccumulator {
    pub llr: f64,
    pub n: usize,
}

/// LLR increment from the two filters' predictive moments for one sample.
pub fn llr_increment(out0: &StepOutput, out1: &StepOutput, y: f64) -> f64 {
    let r0 = y - out0.mu;
    let r1 = y - out1.mu;
    0.5 * (out0.sigma2 / out1.sigma2).ln() + r0 * r0 / (2.0 * out0.sigma2)
        - r1 * r1 / (2.0 * out1.sigma2)
}

impl LlrAccumulator {
    pub fn step(&mut self, out0: &StepOutput, out1: &StepOutput, y: f64) -> f64 {
        let dl = llr_increment(out0, out1, y);
        self.llr += dl;
        self.n += 1;
        dl
    }
}

/// Dual-filter streaming LLR engine.
#[derive(Debug, Clone)]
pub struct DualLlr {
    pub f0: KalmanFilter,
    pub f1: KalmanFilter,
    pub s0: KalmanState,
    pub s1: KalmanState,
    pub acc: LlrAccumulator,
}

impl DualLlr {
    pub fn new(pair: &HypothesisPair) -> Self {
        let f0 = KalmanFilter::new(&pair.h0);
        let f1 = KalmanFilter::new(&pair.h1);
        let s0 = f0.init();
        let s1 = f1.init();
        DualLlr {
            f0,
            f1,
            s0,
            s1,
            acc: LlrAccumulator::default(),
        }
    }

    /// Feeds one sample to both filters; returns the LLR increment.
    pub fn step(&mut self, y: f64) -> Result<f64> {
        let o0 = self.f0.predict_update(&mut self.s0, y)?;
        let o1 = self.f1.predict_update(&mut self.s1, y)?;
        Ok(self.acc.step(&o0, &o1, y))
    }

    pub fn llr(&self) -> f64 {
        self.acc.llr
    }

    pub fn n(&self) -> usize {
        self.acc.n
    }
}

/// Batch driver: per-sample LLR increments and cumulative values.
pub fn run_dual(pair: &HypothesisPair, trace: &Trace) -> Result<Vec<(f64, f64)>> {
    if (trace.delta - pair.delta()).abs() > 1e-12 * pair.delta() {
        return Err(Error::config(format!(
            "trace sampling period {} does not match model {}",
            trace.delta,
            pair.delta()
        )));
    }
    let mut dual = DualLlr::new(pair);
    let mut out = Vec::with_capacity(trace.len());
    for &y in &trace.samples {
        let dl = dual.step(y)?;
        out.push((dl, dual.llr()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::oracle::LlrOracle;
    use crate::presets;
    use crate::sim::{derive_seed, simulate, InitialState};

    #[test]
    fn init_state_matches_steady_state() {
        let p = presets::rubidium_pair().h0;
        let f = KalmanFilter::new(&p);
        let st = f.init();
        assert_eq!(st.mean, [0.0, 0.0]);
        assert_eq!(st.cov[0][1], 0.0);
        assert!((st.cov[0][0] - p.steady_state_var()).abs() < 1e-9);

        let zero = ModelParams::new(p.gamma, p.omega_l, 0.0, p.s_ph, p.delta).unwrap();
        let st = KalmanFilter::new(&zero).init();
        assert_eq!(st.cov, [[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn pure_noise_model_predicts_shot_noise() {
        let p = presets::rubidium_pair().h0;
        let zero = ModelParams::new(p.gamma, p.omega_l, 0.0, p.s_ph, p.delta).unwrap();
        let f = KalmanFilter::new(&zero);
        let mut st = f.init();
        let trace = simulate(&p, 200, 4, InitialState::SteadyState).unwrap();
        for &y in &trace.samples {
            let out = f.predict_update(&mut st, y).unwrap();
            assert_eq!(out.mu, 0.0);
            assert!((out.sigma2 - zero.shot_noise_var()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_finite_samples() {
        let p = presets::rubidium_pair().h0;
        let f = KalmanFilter::new(&p);
        let mut st = f.init();
        assert!(f.predict_update(&mut st, f64::NAN).is_err());
    }

    /// The innovation variance decreases monotonically to the Riccati fixed
    /// point and never drops below the shot-noise floor.
    #[test]
    fn innovation_variance_converges() {
        let p = presets::rubidium_pair().h0;
        let f = KalmanFilter::new(&p);
        let mut st = f.init();
        let mut prev = f64::INFINITY;
        let mut fixed = 0.0;
        for k in 0..20_000 {
            f.predict_update(&mut st, 0.0).unwrap();
            let s = st.last_sigma2;
            assert!(s >= p.shot_noise_var() - 1e-9, "floor violated at step {k}");
            assert!(s <= prev + 1e-9 * s, "not monotone at step {k}");
            if (s - prev).abs() < 1e-12 * s {
                fixed = s;
                break;
            }
            prev = s;
        }
        assert!(fixed > 0.0, "did not converge");
        let stationary = f.stationary_innovation_variance();
        assert!((stationary - fixed).abs() < 1e-9 * fixed);
    }

    /// Product of innovation variances equals the Toeplitz determinant: the
    /// two factorizations of the same Gaussian.
    #[test]
    fn innovation_variances_factor_determinant() {
        let pair = presets::rubidium_pair();
        let n = 500;
        let f = KalmanFilter::new(&pair.h0);
        let mut st = f.init();
        let mut logdet_kf = 0.0;
        for _ in 0..n {
            f.predict_update(&mut st, 0.0).unwrap();
            logdet_kf += st.last_sigma2.ln();
        }
        let t = crate::oracle::build_cov(&pair.h0, n).unwrap().to_dense();
        let chol = crate::oracle::dense::Chol::factor(&t).unwrap();
        let logdet_chol = chol.logdet();
        assert!(
            ((logdet_kf - logdet_chol) / logdet_chol).abs() < 1e-10,
            "kf {logdet_kf} chol {logdet_chol}"
        );
    }

    #[test]
    fn llr_zero_when_hypotheses_agree() {
        let pair = presets::rubidium_pair();
        let same = crate::model::HypothesisPair::new_relaxed(pair.h0, pair.h0).unwrap();
        let trace = simulate(&pair.h0, 300, 21, InitialState::SteadyState).unwrap();
        let steps = run_dual(&same, &trace).unwrap();
        for (dl, _) in steps {
            assert_eq!(dl, 0.0);
        }
    }

    #[test]
    fn llr_negates_under_hypothesis_swap() {
        let pair = presets::rubidium_pair();
        let trace = simulate(&pair.h0, 400, 8, InitialState::SteadyState).unwrap();
        let fwd = run_dual(&pair, &trace).unwrap();
        let rev = run_dual(&pair.swapped(), &trace).unwrap();
        for ((d1, _), (d2, _)) in fwd.iter().zip(&rev) {
            assert!((d1 + d2).abs() < 1e-12 * d1.abs().max(1e-12));
        }
    }

    #[test]
    fn single_sample_stream() {
        let pair = presets::rubidium_pair();
        let trace = simulate(&pair.h0, 1, 77, InitialState::SteadyState).unwrap();
        let steps = run_dual(&pair, &trace).unwrap();
        assert_eq!(steps.len(), 1);
    }

    #[test]
    fn rejects_delta_mismatch() {
        let pair = presets::rubidium_pair();
        let mut trace = simulate(&pair.h0, 10, 1, InitialState::SteadyState).unwrap();
        trace.delta *= 2.0;
        assert!(run_dual(&pair, &trace).is_err());
    }

    /// Streaming LLR equals the dense Toeplitz value to high relative
    /// accuracy; checked thoroughly in the acceptance suite, spot-checked
    /// here.
    #[test]
    fn llr_matches_dense_gaussian_oracle() {
        let pair = presets::rubidium_pair();
        let n = 400;
        let oracle = LlrOracle::new(&pair, n).unwrap();
        for i in 0..5u64 {
            let trace = simulate(&pair.h0, n, derive_seed(2024, i), InitialState::SteadyState)
                .unwrap();
            let stream = run_dual(&pair, &trace).unwrap().last().unwrap().1;
            let exact = oracle.llr(&trace.samples).unwrap();
            assert!(
                (stream - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                "stream {stream} exact {exact}"
            );
        }
    }

    /// Chain rule: summed predictive log-densities equal the joint Gaussian
    /// log-density.
    #[test]
    fn chain_rule_matches_joint_density() {
        let pair = presets::rubidium_pair();
        let n = 350;
        let trace = simulate(&pair.h0, n, 123, InitialState::SteadyState).unwrap();
        let f = KalmanFilter::new(&pair.h0);
        let mut st = f.init();
        let mut sum = 0.0;
        for &y in &trace.samples {
            sum += f.predict_update(&mut st, y).unwrap().log_pred_density;
        }
        let oracle = LlrOracle::new(&pair, n).unwrap();
        let joint = oracle.log_density(&trace.samples, 0).unwrap();
        assert!(
            ((sum - joint) / joint).abs() < 1e-10,
            "chain {sum} joint {joint}"
        );
    }

    /// Under the true hypothesis the standardized innovations are white.
    #[test]
    fn innovations_are_white_under_true_model() {
        let pair = presets::rubidium_pair();
        let n = 40_000;
        let trace = simulate(&pair.h0, n, 31415, InitialState::SteadyState).unwrap();
        let f = KalmanFilter::new(&pair.h0);
        let mut st = f.init();
        let mut z = Vec::with_capacity(n);
        for &y in &trace.samples {
            let out = f.predict_update(&mut st, y).unwrap();
            z.push((y - out.mu) / out.sigma2.sqrt());
        }
        let nf = n as f64;
        let mean = z.iter().sum::<f64>() / nf;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let lag1 = (0..n - 1).map(|k| z[k] * z[k + 1]).sum::<f64>() / (nf - 1.0);
        assert!(mean.abs() < 3.0 / nf.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 3.0 * (2.0 / nf).sqrt(), "var {var}");
        assert!(lag1.abs() < 3.0 / nf.sqrt(), "lag1 {lag1}");
    }
}
