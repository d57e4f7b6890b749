//! Scalar proximity operators
//! `prox(y; lambda, a) = argmin_x 0.5 (y - x)^2 + lambda phi(x; a)`.
//!
//! For `a lambda <= 1` the scalar objective is convex and the minimizer is a
//! continuous threshold function: zero on `|y| <= lambda`, and otherwise the
//! unique root of `x + lambda phi'(x) = |y|` on `[|y| - lambda, |y|]`,
//! carrying the sign of `y`.

use crate::error::{Error, Result};
use crate::penalty::{self, PenaltyKind};

/// Slack on the `a lambda <= 1` test, absorbing rounding in `a = 1/lambda`.
pub(crate) const BOUNDARY_SLACK: f64 = 1e-12;

const MAX_ITER: usize = 200;

/// A validated query `(y, lambda, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxQuery {
    y: f64,
    lambda: f64,
    a: f64,
}

impl ProxQuery {
    /// Rejects `lambda <= 0`, `a < 0`, non-finite values and `a lambda > 1`.
    /// The boundary `a lambda = 1` is accepted; see [`ProxQuery::is_boundary`].
    pub fn new(y: f64, lambda: f64, a: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::NonFinite("prox input"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "threshold lambda must be finite and > 0, got {lambda}"
            )));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::ParameterDomain(format!(
                "non-convexity parameter must be finite and >= 0, got {a}"
            )));
        }
        if a * lambda > 1.0 + BOUNDARY_SLACK {
            return Err(Error::ConvexityViolation(format!(
                "a * lambda = {} exceeds 1; scalar prox objective is not convex",
                a * lambda
            )));
        }
        Ok(ProxQuery { y, lambda, a })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// True when `a lambda = 1`: the scalar objective is convex but not
    /// strictly so.
    pub fn is_boundary(&self) -> bool {
        self.a * self.lambda >= 1.0 - BOUNDARY_SLACK
    }
}

/// Soft thresholding `sign(y) max(|y| - lambda, 0)`.
pub fn prox_abs(y: f64, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "threshold lambda must be finite and > 0, got {lambda}"
        )));
    }
    Ok(soft(y, lambda))
}

#[inline]
pub(crate) fn soft(y: f64, lambda: f64) -> f64 {
    let t = y.abs() - lambda;
    if t > 0.0 {
        t.copysign(y)
    } else {
        0.0
    }
}

/// Proximity operator of `lambda phi(.; a)` at `y`.
pub fn prox_penalty(q: &ProxQuery, kind: PenaltyKind) -> f64 {
    threshold(kind, q.y, q.lambda, q.a)
}

/// Unchecked threshold kernel. Callers guarantee `lambda > 0`, `a >= 0` and
/// `a lambda <= 1`.
#[inline]
pub(crate) fn threshold(kind: PenaltyKind, y: f64, lambda: f64, a: f64) -> f64 {
    debug_assert!(lambda > 0.0 && a >= 0.0 && a * lambda <= 1.0 + BOUNDARY_SLACK);
    let t = y.abs();
    if t <= lambda {
        return 0.0;
    }
    if a == 0.0 || kind == PenaltyKind::Abs {
        return (t - lambda).copysign(y);
    }
    positive_root(kind, t, lambda, a).copysign(y)
}

/// Root of `g(x) = x + lambda phi'(x) - t` for `t > lambda`.
///
/// `g` is increasing on `(0, t]` whenever `a lambda <= 1`, with
/// `g(t - lambda) <= 0 < g(t)`. Newton from the right end, falling back to
/// bisection whenever a step leaves the current bracket.
fn positive_root(kind: PenaltyKind, t: f64, lambda: f64, a: f64) -> f64 {
    let g = |x: f64| x + lambda * penalty::dphi(kind, x, a) - t;
    let tol = 1e-12 * t.max(1.0);

    let mut lo = t - lambda;
    let mut hi = t;
    let g_lo = g(lo);
    if g_lo >= 0.0 {
        return lo;
    }
    let mut x = hi;
    for _ in 0..MAX_ITER {
        let gx = g(x);
        if gx.abs() < tol {
            return x;
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        let slope = 1.0 + lambda * penalty::d2phi(kind, x, a);
        let newton = x - gx / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    // Bracket collapsed below resolution: take the endpoint with the
    // smaller residual, preferring the upper one on ties.
    if g(lo).abs() < g(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Scalar prox objective `0.5 (y - x)^2 + lambda phi(x; a)`.
pub fn prox_objective(q: &ProxQuery, kind: PenaltyKind, x: f64) -> f64 {
    let r = q.y - x;
    0.5 * r * r + q.lambda * penalty::phi(kind, x.abs(), q.a)
}

/// Brute-force grid minimizer of the prox objective over `[lo, hi]` with
/// spacing `step`. Intended as a test oracle.
pub fn oracle_prox(q: &ProxQuery, kind: PenaltyKind, range: (f64, f64), step: f64) -> Result<f64> {
    let (lo, hi) = range;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "grid step must be > 0, got {step}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::ParameterDomain(format!(
            "empty grid range [{lo}, {hi}]"
        )));
    }
    let count = ((hi - lo) / step).floor() as usize;
    let mut best_x = lo;
    let mut best = prox_objective(q, kind, lo);
    for k in 1..=count {
        let x = lo + k as f64 * step;
        let v = prox_objective(q, kind, x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    Ok(best_x)
}
