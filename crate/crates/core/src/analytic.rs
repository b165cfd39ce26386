//! Closed-form single-video service curves and the fixed-whole copy optimizer.
//!
//! Everything here is graph independent: values are expectations over the
//! random topology (fixed whole) or deterministic (fixed fractional).

use rand::Rng;

use crate::error::{param, Error, Result};
use crate::rng::{self, Stream};

/// Convergence tolerance on `Σα − K` for [`optimize_alpha`].
pub const ALPHA_TOLERANCE: f64 = 1e-9;
const ALPHA_MAX_ITERS: usize = 200;

/// Randomized-rounding view of a (possibly fractional) number of copies.
///
/// `copies = floor(copies) + theta`; the placement stores `floor(copies)` copies
/// with probability `1 - theta` and one more with probability `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissModel {
    pub num_caches: usize,
    pub degree: usize,
    pub copies: f64,
    pub alpha: f64,
    pub theta: f64,
}

impl MissModel {
    pub fn new(num_caches: usize, degree: usize, copies: f64) -> Result<Self> {
        if num_caches == 0 || degree == 0 || degree > num_caches {
            return param(format!("need 1 <= degree ({degree}) <= caches ({num_caches})"));
        }
        if !(0.0..=num_caches as f64).contains(&copies) {
            return param(format!("copies {copies} outside [0, {num_caches}]"));
        }
        Ok(Self {
            num_caches,
            degree,
            copies,
            alpha: copies / num_caches as f64,
            theta: copies - copies.floor(),
        })
    }

    pub fn pmiss(&self) -> f64 {
        pmiss_randomized(self.num_caches, self.degree, self.copies)
    }

    /// `(1 - alpha)^L`, which never undershoots [`MissModel::pmiss`].
    pub fn pmiss_bound(&self) -> f64 {
        pmiss_bound(self.num_caches, self.degree, self.copies)
    }
}

/// Probability that a peer with `degree` random connections misses all of the
/// `copies` caches holding the video: `C(H-C, L) / C(H, L)`.
pub fn pmiss_exact(num_caches: usize, degree: usize, copies: usize) -> f64 {
    assert!(copies <= num_caches, "copies {copies} > caches {num_caches}");
    let h = num_caches as f64;
    let c = copies as f64;
    let mut p = 1.0;
    for i in 0..degree {
        let i = i as f64;
        let num = h - c - i;
        if num <= 0.0 {
            return 0.0;
        }
        p *= num / (h - i);
    }
    p
}

/// Miss probability when `copies` is realized by minimum-variance rounding.
pub fn pmiss_randomized(num_caches: usize, degree: usize, copies: f64) -> f64 {
    assert!(
        (0.0..=num_caches as f64).contains(&copies),
        "copies {copies} outside [0, {num_caches}]"
    );
    let lo = copies.floor();
    let theta = copies - lo;
    let lo = lo as usize;
    let base = pmiss_exact(num_caches, degree, lo);
    if theta == 0.0 {
        base
    } else {
        (1.0 - theta) * base + theta * pmiss_exact(num_caches, degree, lo + 1)
    }
}

pub fn pmiss_bound(num_caches: usize, degree: usize, copies: f64) -> f64 {
    (1.0 - copies / num_caches as f64).powi(degree as i32)
}

/// Expected number of the `requesters` served under fixed whole placement.
pub fn fw_curve(num_caches: usize, degree: usize, requesters: f64, copies: f64) -> f64 {
    requesters * (1.0 - pmiss_randomized(num_caches, degree, copies))
}

/// Lower bound on [`fw_curve`] obtained from `(1 - alpha)^L`.
pub fn fw_lower_bound(num_caches: usize, degree: usize, requesters: f64, copies: f64) -> f64 {
    requesters * (1.0 - pmiss_bound(num_caches, degree, copies))
}

/// Rate served under uniform fractional placement: every cache holds
/// `copies / H` of the video, so each peer downloads `min(L C / H, 1)`.
pub fn ff_curve(num_caches: usize, degree: usize, requesters: f64, copies: f64) -> f64 {
    requesters * (degree as f64 * copies / num_caches as f64).min(1.0)
}

/// Copies at which [`ff_curve`] saturates.
pub fn ff_saturation(num_caches: usize, degree: usize) -> f64 {
    num_caches as f64 / degree as f64
}

/// First-moment upper bound on the expected coverage of the best `copies`
/// caches for a video with `requesters` requesters:
///
/// `Σ_{τ=1}^{n} min(C(H, C) · P[Bin(n, q) ≥ τ], 1)` with `q = 1 - pmiss`.
pub fn aw_upper_bound(num_caches: usize, degree: usize, requesters: usize, copies: usize) -> f64 {
    assert!(copies <= num_caches, "copies {copies} > caches {num_caches}");
    let n = requesters;
    if n == 0 || copies == 0 {
        return 0.0;
    }
    let q = 1.0 - pmiss_exact(num_caches, degree, copies);
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return n as f64;
    }
    let ln_fact = ln_factorials(n.max(num_caches));
    let ln_choose = |a: usize, b: usize| ln_fact[a] - ln_fact[b] - ln_fact[a - b];
    let ln_subsets = ln_choose(num_caches, copies);
    let (ln_q, ln_1q) = (q.ln(), (1.0 - q).ln());

    // tail[τ] = ln P[X >= τ], accumulated from k = n downwards.
    let mut total = 0.0;
    let mut ln_tail = f64::NEG_INFINITY;
    let mut terms = vec![0.0; n + 1];
    for k in (1..=n).rev() {
        let ln_pmf = ln_choose(n, k) + k as f64 * ln_q + (n - k) as f64 * ln_1q;
        ln_tail = log_add(ln_tail, ln_pmf);
        terms[k] = (ln_subsets + ln_tail).min(0.0).exp();
    }
    for t in &terms[1..] {
        total += t;
    }
    total
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Per-video cache-presence probabilities minimizing `Σ p(m)(1 - α(m))^L`
/// subject to `Σ α(m) = K`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSolution {
    pub alpha: Vec<f64>,
    /// Lagrange constant `c` in `α(m) = (1 - c / p(m)^{1/(L-1)})_+`.
    pub lagrange: f64,
    pub iterations: usize,
}

pub fn optimize_alpha(popularity: &[f64], degree: usize, per_cache_capacity: f64) -> Result<AlphaSolution> {
    if degree < 2 {
        return param("alpha optimization needs degree >= 2");
    }
    let videos = popularity.len() as f64;
    if !(per_cache_capacity > 0.0) {
        return param(format!("per-cache capacity must be positive, got {per_cache_capacity}"));
    }
    if per_cache_capacity >= videos {
        return Err(Error::Infeasible(format!(
            "capacity {per_cache_capacity} per cache needs alpha >= 1 with only {videos} videos"
        )));
    }
    let exponent = 1.0 / (degree as f64 - 1.0);
    let roots: Vec<f64> = popularity.iter().map(|&p| p.powf(exponent)).collect();
    let alpha_at = |c: f64| -> Vec<f64> { roots.iter().map(|&r| (1.0 - c / r).max(0.0)).collect() };
    let sum_at = |c: f64| -> f64 { roots.iter().rev().map(|&r| (1.0 - c / r).max(0.0)).sum() };

    let (mut lo, mut hi) = (0.0, roots.iter().cloned().fold(0.0, f64::max));
    for iter in 1..=ALPHA_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let s = sum_at(mid);
        if (s - per_cache_capacity).abs() < ALPHA_TOLERANCE {
            return Ok(AlphaSolution {
                alpha: alpha_at(mid),
                lagrange: mid,
                iterations: iter,
            });
        }
        // Σα is decreasing in c
        if s > per_cache_capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        what: "alpha bisection".into(),
        iterations: ALPHA_MAX_ITERS,
    })
}

/// Rounds `α(m)·H` to integers preserving each mean and the exact total.
pub fn dependent_rounding(alpha: &[f64], num_caches: usize, seed: u64) -> Result<Vec<usize>> {
    let values: Vec<f64> = alpha.iter().map(|a| a * num_caches as f64).collect();
    let offset: f64 = rng::stream(seed, Stream::Rounding).gen();
    systematic_round(&values, offset)
}

/// Systematic sampling over cumulative fractional parts: value `m` is rounded
/// up iff an integer translate of `offset` falls in its slice of the cumulative
/// sum. Requires `Σ values` to be an integer (within 1e-6).
pub fn systematic_round(values: &[f64], offset: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&offset) {
        return param(format!("offset {offset} outside [0, 1)"));
    }
    if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return param("values must be finite and nonnegative");
    }
    let total: f64 = values.iter().sum();
    if (total - total.round()).abs() > 1e-6 {
        return param(format!("values sum to {total}, not an integer"));
    }
    let mut floors = Vec::with_capacity(values.len());
    let mut fracs = Vec::with_capacity(values.len());
    for &v in values {
        let snapped = if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
        let f = snapped.floor();
        floors.push(f as usize);
        fracs.push(snapped - f);
    }
    let target_extra = total.round() as usize - floors.iter().sum::<usize>();

    let mut cum: Vec<f64> = fracs
        .iter()
        .scan(0.0, |acc, f| {
            *acc += f;
            Some(*acc)
        })
        .collect();
    // pin the last cumulative value to the integer it should be
    if let Some(&last) = cum.last() {
        if last > 0.0 {
            let scale = target_extra as f64 / last;
            cum.iter_mut().for_each(|c| *c *= scale);
        }
        if let Some(l) = cum.last_mut() {
            *l = target_extra as f64;
        }
    }
    let mut out = floors;
    let mut prev = 0usize;
    for (m, c) in cum.iter().enumerate() {
        // integers k >= 0 with offset + k < c
        let count = (c - offset).ceil().max(0.0) as usize;
        out[m] += count - prev;
        prev = count;
    }
    Ok(out)
}
