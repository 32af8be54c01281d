//! Adaptive Gauss-Kronrod quadrature shared by every frequency integral in
//! the crate (rate constants, filter-error cumulants, Fisher information).
//!
//! The integrands here are smooth with a handful of sharp Lorentzian peaks
//! whose locations are known, so callers pass explicit breakpoints and the
//! engine bisects the worst interval until the summed Kronrod error estimate
//! meets the tolerance.

use crate::model::HypothesisPair;

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights, with
// the embedded 7-point Gauss weights on the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Kronrod error estimate summed over intervals.
    pub abs_err: f64,
    pub converged: bool,
    pub evals: usize,
}

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Integrates `f` over `[a, b]`, bisecting adaptively until the summed error
/// estimate is below `rel_tol * |integral|` (with a tiny absolute floor for
/// integrals that vanish).
pub fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> QuadResult {
    integrate_segments(f, &[a, b], rel_tol)
}

/// Adaptive integration over a pre-broken domain; `points` must be sorted
/// and include both endpoints.
pub fn integrate_segments(
    f: &mut dyn FnMut(f64) -> f64,
    points: &[f64],
    rel_tol: f64,
) -> QuadResult {
    const MAX_INTERVALS: usize = 20_000;
    #[derive(Debug)]
    struct Seg {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let mut segs: Vec<Seg> = Vec::new();
    let mut evals = 0usize;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (val, err) = gk15(f, w[0], w[1]);
        evals += 15;
        segs.push(Seg { a: w[0], b: w[1], val, err });
    }
    loop {
        let value: f64 = segs.iter().map(|s| s.val).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let tol = rel_tol * value.abs().max(1e-300);
        if err <= tol || segs.len() >= MAX_INTERVALS {
            return QuadResult {
                value,
                abs_err: err,
                converged: err <= tol,
                evals,
            };
        }
        // split the interval with the largest error estimate
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("at least one segment");
        let seg = segs.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval at floating-point resolution; keep as converged-enough
            segs.push(seg);
            let value: f64 = segs.iter().map(|s| s.val).sum();
            let err: f64 = segs.iter().map(|s| s.err).sum();
            return QuadResult {
                value,
                abs_err: err,
                converged: false,
                evals,
            };
        }
        let (v1, e1) = gk15(f, seg.a, mid);
        let (v2, e2) = gk15(f, mid, seg.b);
        evals += 30;
        segs.push(Seg { a: seg.a, b: mid, val: v1, err: e1 });
        segs.push(Seg { a: mid, b: seg.b, val: v2, err: e2 });
    }
}

/// Upper integration limit for spectral rate integrals: beyond
/// `omega_c + 50 max(gamma, |delta_omega|)` the difference integrands decay
/// at least like `omega^-4` and contribute below the working tolerance.
pub fn rate_domain_end(pair: &HypothesisPair) -> f64 {
    pair.omega_c() + 50.0 * pair.h0.gamma.max(pair.delta_omega().abs()).max(pair.h1.gamma)
}

/// Breakpoints covering both Lorentzian peaks for rate integrands.
pub fn rate_breakpoints(pair: &HypothesisPair) -> Vec<f64> {
    let end = rate_domain_end(pair);
    let g = pair.h0.gamma.max(pair.h1.gamma);
    let mut pts = vec![0.0];
    let mut lo = pair.h0.omega_l.min(pair.h1.omega_l);
    let mut hi = pair.h0.omega_l.max(pair.h1.omega_l);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    for p in [
        lo - 20.0 * g,
        lo - 4.0 * g,
        lo,
        0.5 * (lo + hi),
        hi,
        hi + 4.0 * g,
        hi + 20.0 * g,
    ] {
        if p > 0.0 && p < end {
            pts.push(p);
        }
    }
    pts.push(end);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Crude power-law tail estimate `int_X^inf f` from samples at `X` and `2X`.
/// Used only to confirm the truncated tail is negligible.
pub fn tail_estimate(f: &mut dyn FnMut(f64) -> f64, x: f64) -> f64 {
    let f1 = f(x).abs();
    let f2 = f(2.0 * x).abs();
    if f1 <= 0.0 || f2 <= 0.0 || f2 >= f1 {
        // no clean decay; bound by f1 * x as a conservative scale
        return f1 * x;
    }
    let p = (f1 / f2).log2(); // decay exponent
    if p <= 1.0 {
        return f1 * x;
    }
    f1 * x / (p - 1.0)
}
