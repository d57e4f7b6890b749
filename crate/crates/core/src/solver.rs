//! Analysis-prior denoising objective
//!
//! `F(x) = 0.5 ||y - x||^2 + sum_i lambda_i phi([A x]_i; a_i)`
//!
//! with its convexity guard and the ADMM solver. `F` is strictly convex when
//! `a_i < 1 / (r lambda_i)` for every coefficient, and ADMM with
//! `mu > 1/r` then converges to its global minimizer.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::frame::{norm, Frame};
use crate::penalty::{self, PenaltyKind};
use crate::prox::{self, BOUNDARY_SLACK};

/// A full denoising instance.
#[derive(Clone, Copy)]
pub struct ProblemSpec<'a> {
    y: &'a [f64],
    frame: &'a dyn Frame,
    penalty: PenaltyKind,
    lambda: &'a [f64],
    a: &'a [f64],
}

impl std::fmt::Debug for ProblemSpec<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("n", &self.y.len())
            .field("m", &self.lambda.len())
            .field("r", &self.frame.frame_constant())
            .field("penalty", &self.penalty)
            .finish()
    }
}

impl<'a> ProblemSpec<'a> {
    /// Validates dimensions and parameter domains.
    ///
    /// `lambda_i = 0` is allowed and leaves coefficient `i` unpenalized
    /// (used for the coarse wavelet band).
    pub fn new(
        y: &'a [f64],
        frame: &'a dyn Frame,
        penalty: PenaltyKind,
        lambda: &'a [f64],
        a: &'a [f64],
    ) -> Result<Self> {
        let (n, m) = (frame.input_len(), frame.coeff_len());
        for (what, expected, actual) in [
            ("observation length", n, y.len()),
            ("lambda length", m, lambda.len()),
            ("a length", m, a.len()),
        ] {
            if expected != actual {
                return Err(Error::DimensionMismatch {
                    what,
                    expected,
                    actual,
                });
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::ParameterDomain(format!(
                "lambda_i must be finite and >= 0, got {l}"
            )));
        }
        if let Some(v) = a.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::ParameterDomain(format!(
                "a_i must be finite and >= 0, got {v}"
            )));
        }
        Ok(ProblemSpec {
            y,
            frame,
            penalty,
            lambda,
            a,
        })
    }

    pub fn y(&self) -> &'a [f64] {
        self.y
    }

    pub fn frame(&self) -> &'a dyn Frame {
        self.frame
    }

    pub fn penalty(&self) -> PenaltyKind {
        self.penalty
    }

    pub fn lambda(&self) -> &'a [f64] {
        self.lambda
    }

    pub fn a(&self) -> &'a [f64] {
        self.a
    }
}

/// `F(x)`.
pub fn objective(x: &[f64], spec: &ProblemSpec<'_>) -> f64 {
    let ax = spec.frame.analyze(x);
    objective_with_coeffs(x, &ax, spec)
}

fn objective_with_coeffs(x: &[f64], ax: &[f64], spec: &ProblemSpec<'_>) -> f64 {
    let data: f64 = spec
        .y
        .iter()
        .zip(x)
        .map(|(y, x)| (y - x).powi(2))
        .sum::<f64>()
        * 0.5;
    let reg: f64 = ax
        .iter()
        .zip(spec.lambda.iter().zip(spec.a))
        .filter(|(_, (l, _))| **l > 0.0)
        .map(|(c, (l, a))| l * penalty::phi(spec.penalty, c.abs(), *a))
        .sum();
    data + reg
}

/// Largest non-convexity parameter keeping `F` convex: `1 / (r lambda)`.
pub fn critical_a(lambda: f64, r: f64) -> f64 {
    1.0 / (r * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convexity {
    /// Every `a_i < 1 / (r lambda_i)`.
    StrictlyConvex,
    /// No coefficient exceeds the critical value and at least one sits on it.
    BoundaryConvex,
    NonConvex,
}

impl Convexity {
    pub fn is_convex(self) -> bool {
        !matches!(self, Convexity::NonConvex)
    }
}

/// Classifies a spec by the worst ratio `a_i r lambda_i`. Ratios within
/// `1e-12` of one count as the boundary.
pub fn validate_convexity(spec: &ProblemSpec<'_>) -> Convexity {
    let r = spec.frame.frame_constant();
    let ratio = spec
        .a
        .iter()
        .zip(spec.lambda)
        .map(|(a, l)| if *l > 0.0 { a * r * l } else { 0.0 })
        .fold(0.0, f64::max);
    if ratio > 1.0 + BOUNDARY_SLACK {
        Convexity::NonConvex
    } else if ratio >= 1.0 - BOUNDARY_SLACK {
        Convexity::BoundaryConvex
    } else {
        Convexity::StrictlyConvex
    }
}

/// Checks the convergence guard `mu > 1/r` (strict).
pub fn validate_mu(mu: f64, r: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0 && r > 0.0) {
        return Err(Error::Config(format!(
            "mu and r must be positive, got mu = {mu}, r = {r}"
        )));
    }
    if mu > 1.0 / r {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "augmented Lagrangian parameter mu = {mu} must exceed 1/r = {}",
            1.0 / r
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Augmented Lagrangian parameter. `None` selects `2 / r`.
    pub mu: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub record_trace: bool,
    /// Run even when `mu <= 1/r`.
    pub allow_invalid_mu: bool,
    /// Run non-convex specs; the result is then only a stationary point.
    pub allow_nonconvex: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: None,
            max_iter: 2000,
            tol: 1e-8,
            record_trace: false,
            allow_invalid_mu: false,
            allow_nonconvex: false,
        }
    }
}

impl SolverConfig {
    pub fn mu_for(&self, r: f64) -> f64 {
        self.mu.unwrap_or(2.0 / r)
    }
}

/// ADMM iterate: signal estimate `x`, split variable `u ~ A x` and scaled
/// dual `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

impl AdmmState {
    pub fn zeros(n: usize, m: usize) -> Self {
        AdmmState {
            x: vec![0.0; n],
            u: vec![0.0; m],
            d: vec![0.0; m],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub state: AdmmState,
    pub iterations: usize,
    pub converged: bool,
    pub convexity: Convexity,
    pub mu: f64,
    /// `F(x_k)` per iteration, when requested.
    pub objective_trace: Vec<f64>,
    /// `||u_k - A x_k||` per iteration.
    pub residual_trace: Vec<f64>,
}

impl SolveResult {
    pub fn x(&self) -> &[f64] {
        &self.state.x
    }

    pub fn u(&self) -> &[f64] {
        &self.state.u
    }

    pub fn d(&self) -> &[f64] {
        &self.state.d
    }

    pub fn into_x(self) -> Vec<f64> {
        self.state.x
    }
}

/// One ADMM sweep in place; returns `A x` of the new iterate.
///
/// ```text
/// x <- (y + mu A^T (u - d)) / (1 + mu r)
/// u_i <- prox([A x + d]_i; lambda_i / mu, a_i)
/// d <- d - (u - A x)
/// ```
pub fn admm_step(spec: &ProblemSpec<'_>, mu: f64, state: &mut AdmmState) -> Vec<f64> {
    let mut work = Workspace::new(spec.frame);
    step_with(spec, mu, state, &mut work);
    work.ax
}

struct Workspace {
    diff: Vec<f64>,
    back: Vec<f64>,
    ax: Vec<f64>,
}

impl Workspace {
    fn new(frame: &dyn Frame) -> Self {
        Workspace {
            diff: vec![0.0; frame.coeff_len()],
            back: vec![0.0; frame.input_len()],
            ax: vec![0.0; frame.coeff_len()],
        }
    }
}

fn step_with(spec: &ProblemSpec<'_>, mu: f64, state: &mut AdmmState, work: &mut Workspace) {
    let frame = spec.frame;
    let r = frame.frame_constant();
    let scale = 1.0 / (1.0 + mu * r);

    for ((o, u), d) in work.diff.iter_mut().zip(&state.u).zip(&state.d) {
        *o = u - d;
    }
    frame.adjoint_into(&work.diff, &mut work.back);
    for ((x, y), b) in state.x.iter_mut().zip(spec.y).zip(&work.back) {
        *x = scale * (y + mu * b);
    }

    frame.analyze_into(&state.x, &mut work.ax);
    for (i, (u, d)) in state.u.iter_mut().zip(&mut state.d).enumerate() {
        let ax = work.ax[i];
        let v = ax + *d;
        let l = spec.lambda[i];
        *u = if l > 0.0 {
            prox::threshold(spec.penalty, v, l / mu, spec.a[i])
        } else {
            v
        };
        *d -= *u - ax;
    }
}

/// Minimizes `F` by ADMM from `u = d = 0`.
///
/// Stops once `||u - A x|| <= tol (1 + ||u||)` and
/// `||x_k - x_{k-1}|| <= tol (1 + ||x_k||)`, or after `max_iter` sweeps.
pub fn admm_solve(spec: &ProblemSpec<'_>, config: &SolverConfig) -> Result<SolveResult> {
    let frame = spec.frame;
    let r = frame.frame_constant();
    let mu = config.mu_for(r);

    if let Err(e) = validate_mu(mu, r) {
        if !(config.allow_invalid_mu && mu.is_finite() && mu > 0.0) {
            return Err(e);
        }
        warn!("running ADMM with mu = {mu} <= 1/r; convergence is not guaranteed");
    }
    if !(config.tol > 0.0) || config.max_iter == 0 {
        return Err(Error::Config(
            "solver needs tol > 0 and max_iter >= 1".into(),
        ));
    }

    let convexity = validate_convexity(spec);
    match convexity {
        Convexity::StrictlyConvex => {}
        Convexity::BoundaryConvex => {
            debug!("objective is convex but not strictly; the minimizer may not be unique");
        }
        Convexity::NonConvex => {
            if !config.allow_nonconvex {
                return Err(Error::ConvexityViolation(
                    "some a_i exceed 1/(r lambda_i); enable allow_nonconvex to run anyway".into(),
                ));
            }
            warn!("objective is non-convex; ADMM returns a stationary point only");
        }
    }

    // The u-subproblem needs a_i lambda_i / mu <= 1. This follows from
    // convexity and mu > 1/r, and must be checked otherwise.
    let sub_ok = spec
        .a
        .iter()
        .zip(spec.lambda)
        .all(|(a, l)| a * l / mu <= 1.0 + BOUNDARY_SLACK);
    if !sub_ok {
        if convexity.is_convex() && mu > 1.0 / r {
            unreachable!("convex spec with mu > 1/r yields convex prox subproblems");
        }
        return Err(Error::ConvexityViolation(format!(
            "prox subproblem is non-convex at mu = {mu}; increase mu"
        )));
    }

    let (n, m) = (frame.input_len(), frame.coeff_len());
    let mut state = AdmmState::zeros(n, m);
    let mut prev_x = vec![0.0; n];
    let mut work = Workspace::new(frame);
    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=config.max_iter {
        prev_x.copy_from_slice(&state.x);
        step_with(spec, mu, &mut state, &mut work);
        let ax = &work.ax;
        iterations = k;

        let residual = state
            .u
            .iter()
            .zip(ax)
            .map(|(u, c)| (u - c).powi(2))
            .sum::<f64>()
            .sqrt();
        residual_trace.push(residual);
        if config.record_trace {
            objective_trace.push(objective_with_coeffs(&state.x, ax, spec));
        }
        let dx = state
            .x
            .iter()
            .zip(&prev_x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= config.tol * (1.0 + norm(&state.u))
            && dx <= config.tol * (1.0 + norm(&state.x))
        {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        state,
        iterations,
        converged,
        convexity,
        mu,
        objective_trace,
        residual_trace,
    })
}
