//! Built-in self-checks: frame tightness, penalty assumptions, the convexity
//! boundary of the toy frame, the `mu` guard and ADMM oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{num, ExperimentConfig};
use crate::error::{Error, Result};
use crate::frame::{verify_parseval, Frame, IdentityFrame, MatrixFrame, Udwt1d, Udwt2d};
use crate::penalty::{check_assumption1, PenaltyKind, PenaltyParam, SampleGrid};
use crate::prox::{self, ProxQuery};
use crate::solver::{
    admm_solve, objective, validate_convexity, validate_mu, Convexity, ProblemSpec, SolverConfig,
};

const PARSEVAL_TOL: f64 = 1e-10;
const PARSEVAL_TRIALS: usize = 20;
const ORACLE_TOL: f64 = 1e-6;
const GRID_STEP: f64 = 1e-3;
const GRID_SLACK: f64 = 1e-4;
const SEED: u64 = 0x7e51_f1ed;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        value: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) {
        self.checks.push(VerifyCheck {
            name: name.into(),
            passed,
            value,
            threshold,
            detail: detail.into(),
        });
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "passed", "value", "threshold", "detail"])?;
        for c in &self.checks {
            w.write_record([
                c.name.as_str(),
                if c.passed { "true" } else { "false" },
                num(c.value).as_str(),
                num(c.threshold).as_str(),
                c.detail.as_str(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv is not UTF-8: {e}")))
    }
}

/// Runs the suite; `cfg.verify_mu` and `cfg.verify_toy_a` add checks for
/// user-supplied values.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    parseval_checks(cfg, &mut report)?;
    assumption_checks(&mut report)?;
    convexity_checks(cfg, &mut report)?;
    mu_checks(cfg, &mut report);
    identity_oracle(cfg, &mut report)?;
    toy_oracle(&mut report)?;
    Ok(report)
}

fn parseval_checks(cfg: &ExperimentConfig, report: &mut VerifyReport) -> Result<()> {
    let toy = MatrixFrame::toy();
    let frames: Vec<(&str, Box<dyn Frame>)> = vec![
        ("identity_16", Box::new(IdentityFrame::new(16)?)),
        ("toy_4x2", Box::new(toy.clone())),
        ("udwt1d_256_j4", Box::new(Udwt1d::new(256, 4, cfg.wavelet)?)),
        (
            "udwt2d_64x64_j3",
            Box::new(Udwt2d::new(64, 64, 3, cfg.wavelet)?),
        ),
    ];
    for (name, frame) in &frames {
        let p = verify_parseval(frame.as_ref(), PARSEVAL_TRIALS, PARSEVAL_TOL);
        report.push(
            format!("parseval_{name}"),
            p.passed(),
            p.max_parseval_error.max(p.max_adjoint_error),
            PARSEVAL_TOL,
            format!("r = {}", p.r),
        );
    }
    let r = toy.frame_constant();
    report.push("toy_frame_constant", r == 4.0, r, 4.0, "expects exactly 4");
    Ok(())
}

fn assumption_checks(report: &mut VerifyReport) -> Result<()> {
    let grid = SampleGrid::default();
    let mut cases = vec![(PenaltyKind::Abs, 0.0)];
    for kind in [PenaltyKind::Rational, PenaltyKind::Log, PenaltyKind::Atan] {
        cases.extend([0.1, 0.5, 1.0, 5.0].map(|a| (kind, a)));
    }
    for (kind, a) in cases {
        let rep = check_assumption1(kind, PenaltyParam::new(a)?, &grid);
        let worst = rep.items.iter().map(|c| c.worst).fold(0.0, f64::max);
        let failed: Vec<&str> = rep.failures().map(|c| c.name).collect();
        report.push(
            format!("assumption1_{kind}_a={a}"),
            rep.all_passed(),
            worst,
            0.0,
            if failed.is_empty() {
                "all properties hold".to_string()
            } else {
                format!("failed: {}", failed.join("; "))
            },
        );
    }
    Ok(())
}

fn toy_status(a: f64) -> Result<(Convexity, f64)> {
    let frame = MatrixFrame::toy();
    let y = [0.0, 0.0];
    let lambda = [1.0; 4];
    let a = [a; 4];
    let spec = ProblemSpec::new(&y, &frame, PenaltyKind::Atan, &lambda, &a)?;
    Ok((validate_convexity(&spec), a[0] * frame.frame_constant()))
}

fn convexity_checks(cfg: &ExperimentConfig, report: &mut VerifyReport) -> Result<()> {
    for (a, expected) in [
        (0.25, Convexity::BoundaryConvex),
        (0.3, Convexity::NonConvex),
    ] {
        let (status, arl) = toy_status(a)?;
        report.push(
            format!("toy_convexity_a={a}"),
            status == expected,
            arl,
            1.0,
            format!("{status:?}, expected {expected:?}"),
        );
    }
    if let Some(a) = cfg.verify_toy_a {
        let (status, arl) = toy_status(a)?;
        report.push(
            format!("toy_convexity_injected_a={a}"),
            status.is_convex(),
            arl,
            1.0,
            format!("{status:?}"),
        );
    }
    Ok(())
}

fn mu_checks(cfg: &ExperimentConfig, report: &mut VerifyReport) {
    for r in [1.0, 4.0] {
        let default_ok = validate_mu(2.0 / r, r).is_ok();
        let edge_rejected = validate_mu(1.0 / r, r).is_err();
        report.push(
            format!("mu_guard_r={r}"),
            default_ok && edge_rejected,
            1.0 / r,
            1.0 / r,
            "mu = 2/r accepted, mu = 1/r rejected",
        );
        if let Some(mu) = cfg.verify_mu {
            let res = validate_mu(mu, r);
            report.push(
                format!("mu_guard_injected_mu={mu}_r={r}"),
                res.is_ok(),
                mu,
                1.0 / r,
                match res {
                    Ok(()) => "accepted".to_string(),
                    Err(e) => e.to_string(),
                },
            );
        }
    }
}

fn oracle_config(cfg: &ExperimentConfig, r: f64) -> SolverConfig {
    SolverConfig {
        mu: cfg.verify_mu.filter(|&mu| validate_mu(mu, r).is_ok()),
        tol: 1e-12,
        max_iter: 20_000,
        ..SolverConfig::default()
    }
}

fn identity_oracle(cfg: &ExperimentConfig, report: &mut VerifyReport) -> Result<()> {
    let n = 64;
    let frame = IdentityFrame::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
    let lambda = vec![1.0; n];
    for a in [0.0, 0.5, 0.99] {
        let av = vec![a; n];
        let spec = ProblemSpec::new(&y, &frame, PenaltyKind::Rational, &lambda, &av)?;
        let res = admm_solve(&spec, &oracle_config(cfg, 1.0))?;
        let mut err: f64 = 0.0;
        for (x, &yi) in res.x().iter().zip(&y) {
            let q = ProxQuery::new(yi, 1.0, a)?;
            err = err.max((x - prox::prox_penalty(&q, PenaltyKind::Rational)).abs());
        }
        report.push(
            format!("admm_identity_rational_a={a}"),
            err <= ORACLE_TOL,
            err,
            ORACLE_TOL,
            format!("{} iterations", res.iterations),
        );
    }
    Ok(())
}

/// Brute-force minimum of `F` over a square grid.
pub(crate) fn grid_minimum(spec: &ProblemSpec<'_>, half_width: f64, step: f64) -> (f64, [f64; 2]) {
    let k = (half_width / step).ceil() as i64;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in -k..=k {
        for j in -k..=k {
            let x = [i as f64 * step, j as f64 * step];
            let f = objective(&x, spec);
            if f < best.0 {
                best = (f, x);
            }
        }
    }
    best
}

fn toy_oracle(report: &mut VerifyReport) -> Result<()> {
    let frame = MatrixFrame::toy();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let y = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
    let lambda = [1.0; 4];
    let a = [0.2; 4];
    let spec = ProblemSpec::new(&y, &frame, PenaltyKind::Atan, &lambda, &a)?;
    let res = admm_solve(
        &spec,
        &SolverConfig {
            tol: 1e-12,
            max_iter: 20_000,
            ..SolverConfig::default()
        },
    )?;
    let f_admm = objective(res.x(), &spec);
    let r = 2.0 * y[0].abs().max(y[1].abs());
    let (f_grid, _) = grid_minimum(&spec, r, GRID_STEP);
    report.push(
        "admm_toy_global_atan_a=0.2",
        f_admm <= f_grid + GRID_SLACK,
        f_admm - f_grid,
        GRID_SLACK,
        format!("F_admm = {f_admm}, F_grid = {f_grid}"),
    );
    Ok(())
}
