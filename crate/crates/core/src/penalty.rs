//! Scalar sparsity penalties `phi(x; a)` and the smooth residual
//! `s(x; a) = phi(x; a) - |x|`.
//!
//! Every non-convex penalty here is symmetric, increasing and concave on
//! `x > 0`, has unit slope at `0+` and curvature `-a` at `0+`, and reduces to
//! `|x|` when `a = 0`. [`check_assumption1`] verifies those properties
//! numerically on a sample grid.
//!
//! Closed forms for `t = |x| > 0`:
//!
//! | kind     | phi                                             | phi'                 |
//! |----------|-------------------------------------------------|----------------------|
//! | Abs      | `t`                                             | `1`                  |
//! | Rational | `t / (1 + a t / 2)`                             | `1 / (1 + a t / 2)^2` |
//! | Log      | `ln(1 + a t) / a`                               | `1 / (1 + a t)`      |
//! | Atan     | `2 / (a sqrt3) (atan((1 + 2 a t) / sqrt3) - pi/6)` | `1 / (1 + a t + a^2 t^2)` |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Penalty family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    Abs,
    Rational,
    Log,
    Atan,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::Abs,
        PenaltyKind::Rational,
        PenaltyKind::Log,
        PenaltyKind::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Abs => "abs",
            PenaltyKind::Rational => "rational",
            PenaltyKind::Log => "log",
            PenaltyKind::Atan => "atan",
        }
    }

    /// `phi(x; a)`.
    pub fn eval(self, x: f64, a: PenaltyParam) -> f64 {
        phi(self, x.abs(), a.0)
    }

    /// `phi'(x; a)` for `x != 0`.
    pub fn deriv(self, x: f64, a: PenaltyParam) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::Kink);
        }
        Ok(x.signum() * dphi(self, x.abs(), a.0))
    }

    /// `phi''(x; a)` for `x != 0`. Even in `x`.
    pub fn second_deriv(self, x: f64, a: PenaltyParam) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::Kink);
        }
        Ok(d2phi(self, x.abs(), a.0))
    }

    /// `s(x; a) = phi(x; a) - |x|`, which is C^2 and concave.
    pub fn s_eval(self, x: f64, a: PenaltyParam) -> f64 {
        let t = x.abs();
        phi(self, t, a.0) - t
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abs" | "l1" => Ok(PenaltyKind::Abs),
            "rational" => Ok(PenaltyKind::Rational),
            "log" => Ok(PenaltyKind::Log),
            "atan" | "arctan" => Ok(PenaltyKind::Atan),
            other => Err(Error::Config(format!("unknown penalty '{other}'"))),
        }
    }
}

/// Non-convexity parameter `a >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PenaltyParam(f64);

impl PenaltyParam {
    pub const ZERO: PenaltyParam = PenaltyParam(0.0);

    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a >= 0.0 {
            Ok(PenaltyParam(a))
        } else {
            Err(Error::ParameterDomain(format!(
                "non-convexity parameter must be finite and >= 0, got {a}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

// The unchecked kernels below take `t = |x| >= 0` and a validated `a`.
// They are shared with the prox root-finder and the solver hot loop.

#[inline]
pub(crate) fn phi(kind: PenaltyKind, t: f64, a: f64) -> f64 {
    if a == 0.0 {
        return t;
    }
    match kind {
        PenaltyKind::Abs => t,
        PenaltyKind::Rational => t / (1.0 + 0.5 * a * t),
        PenaltyKind::Log => (a * t).ln_1p() / a,
        // atan(p) - atan(1/sqrt3) rewritten as a single atan to avoid
        // cancellation for small a*t.
        PenaltyKind::Atan => {
            let at = a * t;
            2.0 / (a * SQRT_3) * (SQRT_3 * at / (2.0 + at)).atan()
        }
    }
}

#[inline]
pub(crate) fn dphi(kind: PenaltyKind, t: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 1.0;
    }
    match kind {
        PenaltyKind::Abs => 1.0,
        PenaltyKind::Rational => {
            let q = 1.0 + 0.5 * a * t;
            1.0 / (q * q)
        }
        PenaltyKind::Log => 1.0 / (1.0 + a * t),
        PenaltyKind::Atan => {
            let at = a * t;
            1.0 / (1.0 + at + at * at)
        }
    }
}

#[inline]
pub(crate) fn d2phi(kind: PenaltyKind, t: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    match kind {
        PenaltyKind::Abs => 0.0,
        PenaltyKind::Rational => {
            let q = 1.0 + 0.5 * a * t;
            -a / (q * q * q)
        }
        PenaltyKind::Log => {
            let q = 1.0 + a * t;
            -a / (q * q)
        }
        PenaltyKind::Atan => {
            let at = a * t;
            let q = 1.0 + at + at * at;
            -a * (1.0 + 2.0 * at) / (q * q)
        }
    }
}

/// Sample grid for [`check_assumption1`]: log-spaced points on
/// `[x_min, x_max]` plus their negatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            x_min: 1e-4,
            x_max: 50.0,
            points: 400,
        }
    }
}

impl SampleGrid {
    pub fn positive_points(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (lo, hi) = (self.x_min.ln(), self.x_max.ln());
        (0..n)
            .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// Relative tolerance on finite-difference cross-checks.
pub const FD_TOLERANCE: f64 = 1e-5;

fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation observed (0 when every sample is inside its bound).
    pub worst: f64,
    pub detail: String,
}

/// Report of [`check_assumption1`]: items 1 through 6 in order, followed by
/// the bound `-a <= s'' <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub kind: PenaltyKind,
    pub a: f64,
    pub items: Vec<PropertyCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.items.iter().filter(|c| !c.passed)
    }
}

struct Tracker {
    worst: f64,
    at: f64,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            worst: 0.0,
            at: f64::NAN,
        }
    }

    fn record(&mut self, violation: f64, x: f64) {
        if violation > self.worst || violation.is_nan() {
            self.worst = violation;
            self.at = x;
        }
    }

    fn finish(self, name: &'static str) -> PropertyCheck {
        let passed = self.worst <= 0.0;
        let detail = if passed {
            "ok".to_string()
        } else {
            format!("violation {:.3e} at x = {:.6e}", self.worst, self.at)
        };
        PropertyCheck {
            name,
            passed,
            worst: self.worst.max(0.0),
            detail,
        }
    }
}

/// Numerically verifies the penalty assumptions for `kind` at parameter `a`.
///
/// Items 2 to 5 are checked both on the closed-form derivatives and on
/// centered finite differences (step `1e-5 max(1, |x|)`, tolerance
/// [`FD_TOLERANCE`] relative). The final entry samples `s''` by finite
/// differences on the grid and at the origin and checks
/// `s'' in [-a - tol, tol]`.
pub fn check_assumption1(
    kind: PenaltyKind,
    a: PenaltyParam,
    grid: &SampleGrid,
) -> AssumptionReport {
    let av = a.value();
    let xs = grid.positive_points();
    let f = |x: f64| kind.eval(x, a);
    let df = |t: f64| dphi(kind, t, av);
    let d2f = |t: f64| d2phi(kind, t, av);
    let tol_rel = |scale: f64| FD_TOLERANCE * scale.abs().max(1.0);

    let mut items = Vec::with_capacity(7);

    // 1. continuity, symmetry, twice differentiable away from 0.
    let mut t1 = Tracker::new();
    for &x in &xs {
        t1.record(
            if f(-x) == f(x) {
                0.0
            } else {
                (f(-x) - f(x)).abs()
            },
            x,
        );
        let h = fd_step(x);
        let fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
        t1.record((fd1 - df(x)).abs() - tol_rel(df(x)), x);
        let fd2 = (df(x + h) - df(x - h)) / (2.0 * h);
        t1.record((fd2 - d2f(x)).abs() - tol_rel(av), x);
    }
    for &h in &[1e-6, 1e-9, 1e-12] {
        // |phi(h) - phi(0)| <= h since 0 < phi' <= 1.
        t1.record(f(h) - f(0.0) - h, h);
        t1.record(f(-h) - f(0.0) - h, -h);
    }
    t1.record(f(0.0).abs(), 0.0);
    items.push(t1.finish("1: continuous, symmetric, C2 off zero"));

    // 2. phi' > 0 for x > 0.
    let mut t2 = Tracker::new();
    for &x in &xs {
        let d = df(x);
        t2.record(if d > 0.0 { 0.0 } else { -d + f64::MIN_POSITIVE }, x);
        let h = fd_step(x);
        let fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
        t2.record(
            if fd1 > 0.0 {
                0.0
            } else {
                -fd1 + f64::MIN_POSITIVE
            },
            x,
        );
    }
    items.push(t2.finish("2: phi' > 0 on x > 0"));

    // 3. phi'' <= 0 for x > 0.
    let mut t3 = Tracker::new();
    for &x in &xs {
        t3.record(d2f(x), x);
        let h = fd_step(x);
        let fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        t3.record(fd2 - tol_rel(av), x);
    }
    items.push(t3.finish("3: phi'' <= 0 on x > 0"));

    // 4. phi'(0+) = 1.
    let mut t4 = Tracker::new();
    let h0 = 1e-8;
    t4.record((df(h0) - 1.0).abs() - FD_TOLERANCE, h0);
    let slope = (f(2.0 * h0) - f(h0)) / h0;
    t4.record((slope - 1.0).abs() - FD_TOLERANCE, h0);
    items.push(t4.finish("4: phi'(0+) = 1"));

    // 5. inf phi'' = phi''(0+) = -a.
    let mut t5 = Tracker::new();
    t5.record((d2f(h0) + av).abs() - tol_rel(av), h0);
    let hd = 1e-6;
    let curv0 = (df(2.0 * hd) - df(hd)) / hd;
    t5.record((curv0 + av).abs() - tol_rel(av) * 10.0, hd);
    for &x in &xs {
        t5.record(-av - d2f(x) - 1e-12 * av.max(1.0), x);
    }
    items.push(t5.finish("5: inf phi'' = phi''(0+) = -a"));

    // 6. phi(x; 0) = |x|.
    let mut t6 = Tracker::new();
    for &x in &xs {
        for &v in &[x, -x] {
            t6.record((kind.eval(v, PenaltyParam::ZERO) - v.abs()).abs(), v);
        }
    }
    items.push(t6.finish("6: phi(x; 0) = |x|"));

    // Residual curvature bound on s, sampled through the origin.
    let mut ts = Tracker::new();
    let s = |x: f64| kind.s_eval(x, a);
    let mut sample: Vec<f64> = xs.iter().flat_map(|&x| [x, -x]).collect();
    sample.push(0.0);
    for &x in &sample {
        let h = fd_step(x);
        let s2 = (s(x + h) - 2.0 * s(x) + s(x - h)) / (h * h);
        ts.record(s2 - FD_TOLERANCE, x);
        ts.record(-av - FD_TOLERANCE - s2, x);
    }
    items.push(ts.finish("s'' in [-a, 0]"));

    AssumptionReport { kind, a: av, items }
}
