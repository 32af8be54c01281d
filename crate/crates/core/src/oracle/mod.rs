//! Exact dense-matrix reference implementations.
//!
//! The photocurrent record under hypothesis `h` is `N(0, T_h)` with Toeplitz
//! covariance built from the model autocovariance, so the log-likelihood
//! ratio, its cumulants, and their long-record rates can all be computed
//! exactly (at `O(n^3)` cost) and serve as ground truth for the streaming
//! Kalman implementation and the frequency-domain bounds:
//!
//! * `L = (1/2) log det(T_0)/det(T_1) + (1/2) x^T (T_0^{-1} - T_1^{-1}) x`,
//! * `kappa_m = ((m-1)!/2) Tr((D T_h)^m) + [m = 1] (1/2) log det(T_0)/det(T_1)`
//!   with `D = T_0^{-1} - T_1^{-1}`,
//! * `kappa_m / t -> ((m-1)!/2pi) int_0^inf (S_h/S_0 - S_h/S_1)^m domega`
//!   plus the `m = 1` log-ratio term, which the adaptive quadrature in
//!   [`quad`] evaluates directly from the Lorentzian spectra.

pub mod dense;
pub mod quad;

use dense::{Chol, DMat};

use crate::error::{Error, Result};
use crate::model::{HypothesisPair, ModelParams};
use crate::sim::Trace;

/// Hard cap on dense oracle sizes; above this the `O(n^3)` algebra stops
/// being a convenient test backbone.
pub const DENSE_LIMIT: usize = 4096;

/// Toeplitz covariance of `n` consecutive samples.
#[derive(Debug, Clone)]
pub struct ToeplitzCov {
    pub first_row: Vec<f64>,
    pub n: usize,
}

pub fn build_cov(params: &ModelParams, n: usize) -> Result<ToeplitzCov> {
    if n == 0 {
        return Err(Error::config("covariance dimension must be >= 1"));
    }
    if n > DENSE_LIMIT {
        return Err(Error::config(format!(
            "n = {n} exceeds the dense oracle limit {DENSE_LIMIT}"
        )));
    }
    let first_row = (0..n as i64).map(|k| params.autocovariance(k)).collect();
    Ok(ToeplitzCov { first_row, n })
}

impl ToeplitzCov {
    pub fn to_dense(&self) -> DMat {
        DMat::from_toeplitz(&self.first_row)
    }
}

/// Factored pair of covariances for repeated exact LLR evaluations on
/// records of a fixed length.
pub struct LlrOracle {
    chol0: Chol,
    chol1: Chol,
    half_logdet_ratio: f64,
    pub n: usize,
}

impl LlrOracle {
    pub fn new(pair: &HypothesisPair, n: usize) -> Result<Self> {
        let t0 = build_cov(&pair.h0, n)?.to_dense();
        let t1 = build_cov(&pair.h1, n)?.to_dense();
        let chol0 = Chol::factor(&t0)?;
        let chol1 = Chol::factor(&t1)?;
        let half_logdet_ratio = 0.5 * (chol0.logdet() - chol1.logdet());
        Ok(LlrOracle {
            chol0,
            chol1,
            half_logdet_ratio,
            n,
        })
    }

    /// Exact `log p_1(x) / p_0(x)` via Cholesky solves.
    pub fn llr(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.n {
            return Err(Error::config(format!(
                "record length {} does not match oracle dimension {}",
                samples.len(),
                self.n
            )));
        }
        let q0 = self.chol0.inv_quadratic_form(samples);
        let q1 = self.chol1.inv_quadratic_form(samples);
        Ok(self.half_logdet_ratio + 0.5 * (q0 - q1))
    }

    /// Joint Gaussian log-density of the record under hypothesis `h`.
    pub fn log_density(&self, samples: &[f64], h: usize) -> Result<f64> {
        if samples.len() != self.n {
            return Err(Error::config("record length mismatch"));
        }
        let (chol, _) = if h == 0 {
            (&self.chol0, ())
        } else {
            (&self.chol1, ())
        };
        let q = chol.inv_quadratic_form(samples);
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        Ok(-0.5 * (self.n as f64 * ln2pi + chol.logdet() + q))
    }
}

/// Exact LLR of a trace (see [`LlrOracle`] to amortize the factorization).
pub fn exact_llr(pair: &HypothesisPair, trace: &Trace) -> Result<f64> {
    LlrOracle::new(pair, trace.len())?.llr(&trace.samples)
}

/// Exact `m`-th cumulant of the LLR after `n` samples under hypothesis `h`.
pub fn exact_cumulant(pair: &HypothesisPair, h: usize, m: usize, n: usize) -> Result<f64> {
    if !(1..=3).contains(&m) {
        return Err(Error::config("cumulant order must be 1, 2 or 3"));
    }
    let t0 = build_cov(&pair.h0, n)?.to_dense();
    let t1 = build_cov(&pair.h1, n)?.to_dense();
    let chol0 = Chol::factor(&t0)?;
    let chol1 = Chol::factor(&t1)?;
    let d = chol0.inverse().sub(&chol1.inverse());
    let th = if h == 0 { &t0 } else { &t1 };
    let a = d.mul(th);
    let factorial = [1.0, 1.0, 2.0][m - 1];
    let tr = match m {
        1 => a.trace(),
        2 => a.trace_product(&a),
        _ => {
            let a2 = a.mul(&a);
            a2.trace_product(&a)
        }
    };
    let mut kappa = 0.5 * factorial * tr;
    if m == 1 {
        kappa += 0.5 * (chol0.logdet() - chol1.logdet());
    }
    Ok(kappa)
}

/// Long-record cumulant rate (per second) from the frequency-domain
/// integral over the Lorentzian spectra.
pub fn asymptotic_cumulant_rate(pair: &HypothesisPair, h: usize, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::config("cumulant order must be >= 1"));
    }
    let ph = *pair.params(h);
    let p0 = pair.h0;
    let p1 = pair.h1;
    let factorial: f64 = (1..m as u64).product::<u64>().max(1) as f64;
    let pts = quad::rate_breakpoints(pair);
    let mut body = |w: f64| {
        let sh = ph.psd(w);
        let s0 = p0.psd(w);
        let s1 = p1.psd(w);
        let diff = sh / s0 - sh / s1;
        let mut v = diff.powi(m as i32);
        if m == 1 {
            v += (s0 / s1).ln();
        }
        v
    };
    let r = quad::integrate_segments(&mut body, &pts, 1e-10);
    if !r.converged && r.abs_err > 1e-6 * r.value.abs().max(1e-12) {
        return Err(Error::numeric(format!(
            "cumulant-rate quadrature did not converge (err {:.2e} on value {:.2e})",
            r.abs_err, r.value
        )));
    }
    Ok(factorial * r.value / (2.0 * std::f64::consts::PI))
}

/// One row of the finite-size convergence report.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub n: usize,
    pub kappa: f64,
    /// `kappa_m(n) - n delta rate`: bounded in `n` when the trace
    /// functionals have only constant corrections.
    pub residual: f64,
}

/// Checks that `kappa_m(n)` grows linearly with the record length, leaving a
/// bounded residual against the asymptotic rate.
pub fn toeplitz_convergence_report(
    pair: &HypothesisPair,
    h: usize,
    m: usize,
    n_grid: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    let rate = asymptotic_cumulant_rate(pair, h, m)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let kappa = exact_cumulant(pair, h, m, n)?;
        let residual = kappa - n as f64 * pair.delta() * rate;
        rows.push(ConvergenceRow { n, kappa, residual });
    }
    Ok(rows)
}

pub fn max_residual(rows: &[ConvergenceRow]) -> f64 {
    rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
}
