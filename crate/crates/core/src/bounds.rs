//! Tail bound for the completion time.
//!
//! With `t = ceil(n ln n + cn)`, a union bound over the events "sticker `k`
//! is missing after `t` purchases" gives
//!
//! ```text
//! P(tau > t) <= n (1 - 1/n)^t <= n e^{-t/n} <= e^{-c}
//! ```
//!
//! where the middle step uses `(1 - 1/n)^n < e^{-1}`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundQuery {
    n: usize,
    c: f64,
}

impl BoundQuery {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBound("album size must be at least 1".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidBound(format!(
                "slack c = {c} must be a positive real"
            )));
        }
        Ok(Self { n, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    /// Purchase count `ceil(n ln n + cn)`.
    pub threshold_t: u64,
    /// `e^{-c}`.
    pub bound: f64,
    /// `n (1 - 1/n)^{threshold_t}`, the union-bound value before relaxing
    /// to `e^{-c}`.
    pub union_bound: f64,
}

/// Smallest integer strictly greater than `n ln n + cn`.
///
/// At non-integer arguments this is the usual ceiling; at integer arguments
/// it is one more.
pub fn threshold(query: &BoundQuery) -> u64 {
    let n = query.n as f64;
    let a = n * n.ln() + query.c * n;
    a.floor() as u64 + 1
}

/// `n (1 - 1/n)^t`.
pub(crate) fn union_bound(n: usize, t: u64) -> f64 {
    let nf = n as f64;
    let direct = nf * (1.0 - 1.0 / nf).powf(t as f64);
    if direct.is_normal() || direct == 0.0 && n == 1 {
        direct
    } else {
        (nf.ln() + t as f64 * (-1.0 / nf).ln_1p()).exp()
    }
}

pub fn tail_bound(query: &BoundQuery) -> BoundResult {
    let threshold_t = threshold(query);
    BoundResult {
        threshold_t,
        bound: (-query.c).exp(),
        union_bound: union_bound(query.n, threshold_t),
    }
}

/// Slack `c = -ln(failure_prob)` so that `e^{-c}` equals the requested
/// failure probability.
pub fn invert_confidence(n: usize, failure_prob: f64) -> Result<BoundQuery> {
    if !(failure_prob > 0.0 && failure_prob < 1.0) {
        return Err(Error::InvalidProbability(failure_prob));
    }
    BoundQuery::new(n, -failure_prob.ln())
}

/// Returns `(1 - 1/n)^n` and its distance below `e^{-1}`.
pub fn monotone_convergence_check(n: usize) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidBound(format!(
            "convergence check needs n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let value = (nf * (-1.0 / nf).ln_1p()).exp();
    Ok((value, (-1.0f64).exp() - value))
}
