//! Experiment harness: single denoising runs, noise and regularization
//! sweeps, method comparisons and a verification suite, all reported as CSV.
//!
//! Every trial `t` draws its noise from seed `seed + t`, so the same
//! realizations are shared by all methods and, up to scaling, all noise
//! levels. When a method's `beta` is not fixed in the config it is tuned by
//! a log-grid search on the first `tune_trials` realizations.

mod config;
mod verify;

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::{debug, info};
use rayon::prelude::*;

use crate::baselines::{direct_threshold, l1_denoise, reweighted_l1, ReweightConfig};
use crate::error::{io_error, Error, Result};
use crate::frame::{Frame, Udwt1d, Udwt2d};
use crate::signals::{
    add_awgn, boundary_a, generate, psnr, read_pgm, rmse, synthetic_image, write_pgm, GrayImage,
    LambdaSchedule, NoiseSpec,
};
use crate::solver::{admm_solve, ProblemSpec, SolverConfig};

pub use config::{
    logspace, parse_entries, ExperimentConfig, ImageSchedule, MethodBetas, Mode, Source,
};
pub use verify::{run_verify, VerifyCheck, VerifyReport};

/// Peak value for 8-bit images.
pub const PEAK: f64 = 255.0;

/// Noise level used for the schedule when `sigma = 0`.
const SIGMA_FLOOR: f64 = 1e-6;

/// Refinement points placed between the best coarse-grid neighbours.
const REFINE_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    L1Admm,
    NonconvexAdmm,
    DirectThreshold,
    ReweightedL1,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::L1Admm,
        Method::NonconvexAdmm,
        Method::DirectThreshold,
        Method::ReweightedL1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::L1Admm => "l1_admm",
            Method::NonconvexAdmm => "nonconvex_admm",
            Method::DirectThreshold => "direct_threshold",
            Method::ReweightedL1 => "reweighted_l1",
        }
    }

    fn fixed_beta(self, betas: &MethodBetas) -> Option<f64> {
        match self {
            Method::L1Admm => betas.l1,
            Method::NonconvexAdmm => betas.nonconvex,
            Method::DirectThreshold => betas.threshold,
            Method::ReweightedL1 => betas.reweighted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Rmse,
    PsnrDb,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Rmse => "rmse",
            MetricKind::PsnrDb => "psnr_db",
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            MetricKind::Rmse => a < b,
            MetricKind::PsnrDb => a > b,
        }
    }

    fn worst(self) -> f64 {
        match self {
            MetricKind::Rmse => f64::INFINITY,
            MetricKind::PsnrDb => f64::NEG_INFINITY,
        }
    }
}

/// Clean data plus the frame it is denoised in.
pub struct Problem {
    pub clean: Vec<f64>,
    pub frame: Box<dyn Frame>,
    pub metric: MetricKind,
    /// `(height, width)`; signals are `(1, n)`.
    pub shape: (usize, usize),
    pub image_schedule: ImageSchedule,
}

impl Problem {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let scales = cfg.scales();
        match &cfg.source {
            Source::Signal(kind) => Ok(Problem {
                clean: generate(*kind, cfg.n)?,
                frame: Box::new(Udwt1d::new(cfg.n, scales, cfg.wavelet)?),
                metric: MetricKind::Rmse,
                shape: (1, cfg.n),
                image_schedule: cfg.image_schedule,
            }),
            Source::SyntheticImage => Self::image(
                synthetic_image(cfg.height, cfg.width),
                cfg.height,
                cfg.width,
                cfg,
            ),
            Source::ImageFile(path) => {
                let img = read_pgm(path)?;
                Self::image(img.to_f64(), img.height, img.width, cfg)
            }
        }
    }

    fn image(clean: Vec<f64>, height: usize, width: usize, cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Problem {
            clean,
            frame: Box::new(Udwt2d::new(height, width, cfg.scales(), cfg.wavelet)?),
            metric: MetricKind::PsnrDb,
            shape: (height, width),
            image_schedule: cfg.image_schedule,
        })
    }

    pub fn is_image(&self) -> bool {
        self.metric == MetricKind::PsnrDb
    }

    pub fn noisy(&self, sigma: f64, seed: u64) -> Result<Vec<f64>> {
        Ok(add_awgn(&self.clean, NoiseSpec::new(sigma, seed)?))
    }

    /// Per-coefficient regularization for `(beta, sigma)`.
    pub fn lambda(&self, beta: f64, sigma: f64) -> Result<Vec<f64>> {
        let schedule = LambdaSchedule::new(beta, sigma.max(SIGMA_FLOOR))?;
        let layout = self.frame.layout();
        Ok(match (self.is_image(), self.image_schedule) {
            (false, _) => schedule.per_scale(layout),
            (true, ImageSchedule::Normalized) => schedule.per_scale_2d(layout),
            (true, ImageSchedule::Uniform) => schedule.uniform(layout),
        })
    }

    pub fn score(&self, estimate: &[f64]) -> Result<f64> {
        match self.metric {
            MetricKind::Rmse => rmse(&self.clean, estimate),
            MetricKind::PsnrDb => psnr(&self.clean, estimate, PEAK).map(|p| p.db()),
        }
    }

    fn size_label(&self) -> String {
        match self.shape {
            (1, n) => n.to_string(),
            (h, w) => format!("{h}x{w}"),
        }
    }
}

pub fn solver_config(cfg: &ExperimentConfig) -> SolverConfig {
    SolverConfig {
        mu: cfg.mu,
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        ..SolverConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub x: Vec<f64>,
    /// ADMM iterations (summed over outer passes; 0 for direct thresholding).
    pub iterations: usize,
}

/// Runs `method` on `y` with the schedule for `(beta, sigma)`.
pub fn denoise(
    problem: &Problem,
    method: Method,
    y: &[f64],
    beta: f64,
    sigma: f64,
    cfg: &ExperimentConfig,
) -> Result<Estimate> {
    let frame = problem.frame.as_ref();
    let lambda = problem.lambda(beta, sigma)?;
    let solver = solver_config(cfg);
    match method {
        Method::L1Admm => {
            let res = l1_denoise(y, frame, &lambda, &solver)?;
            Ok(Estimate {
                iterations: res.iterations,
                x: res.into_x(),
            })
        }
        Method::NonconvexAdmm => {
            let a = boundary_a(&lambda, frame.frame_constant());
            let spec = ProblemSpec::new(y, frame, cfg.penalty, &lambda, &a)?;
            let res = admm_solve(&spec, &solver)?;
            Ok(Estimate {
                iterations: res.iterations,
                x: res.into_x(),
            })
        }
        Method::DirectThreshold => {
            let a = boundary_a(&lambda, frame.frame_constant());
            Ok(Estimate {
                x: direct_threshold(y, frame, &lambda, &a, cfg.penalty)?,
                iterations: 0,
            })
        }
        Method::ReweightedL1 => {
            let rw = ReweightConfig {
                epsilon: cfg.epsilon_factor * sigma.max(SIGMA_FLOOR),
                outer_iters: cfg.outer_iters,
                inner: solver,
            };
            let res = reweighted_l1(y, frame, &lambda, &rw)?;
            Ok(Estimate {
                x: res.x,
                iterations: res.iterations,
            })
        }
    }
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Mean metric of `method` at `beta` over the given noisy inputs; failures
/// score as the worst possible value.
fn mean_score(
    problem: &Problem,
    method: Method,
    inputs: &[Vec<f64>],
    beta: f64,
    sigma: f64,
    cfg: &ExperimentConfig,
) -> f64 {
    let scores: Vec<f64> = inputs
        .iter()
        .map(|y| {
            denoise(problem, method, y, beta, sigma, cfg)
                .and_then(|e| problem.score(&e.x))
                .unwrap_or(problem.metric.worst())
        })
        .collect();
    mean(&scores)
}

/// Best `beta` for `method` at noise level `sigma`: coarse log grid, then a
/// finer log grid between the neighbours of the coarse winner.
pub fn tune_beta(
    problem: &Problem,
    method: Method,
    sigma: f64,
    cfg: &ExperimentConfig,
) -> Result<f64> {
    let inputs = (0..cfg.tune_trials)
        .map(|t| problem.noisy(sigma, trial_seed(cfg.seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut grid = cfg.tune_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let evaluate = |betas: &[f64]| -> Vec<f64> {
        betas
            .par_iter()
            .map(|&b| mean_score(problem, method, &inputs, b, sigma, cfg))
            .collect()
    };
    let pick = |betas: &[f64], scores: &[f64]| -> (f64, f64) {
        let mut best = (betas[0], scores[0]);
        for (&b, &s) in betas.iter().zip(scores).skip(1) {
            if problem.metric.better(s, best.1) {
                best = (b, s);
            }
        }
        best
    };

    let coarse = evaluate(&grid);
    let (b0, s0) = pick(&grid, &coarse);
    let k = grid.iter().position(|&b| b == b0).unwrap_or(0);
    let below = if k > 0 {
        grid[k - 1]
    } else {
        grid[0] * grid[0] / grid.get(1).copied().unwrap_or(2.0 * grid[0])
    };
    let above = match grid.get(k + 1) {
        Some(&b) => b,
        None if k > 0 => grid[k] * grid[k] / grid[k - 1],
        None => 2.0 * grid[k],
    };
    let fine: Vec<f64> = logspace(below, above, REFINE_POINTS + 2)[1..=REFINE_POINTS]
        .iter()
        .copied()
        .filter(|&b| b != b0)
        .collect();
    let (b1, s1) = pick(&fine, &evaluate(&fine));
    let beta = if problem.metric.better(s1, s0) {
        b1
    } else {
        b0
    };
    debug!("tuned beta for {} at sigma {sigma}: {beta}", method.name());
    Ok(beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChosenBeta {
    pub method: Method,
    pub beta: f64,
    pub tuned: bool,
}

fn choose_betas(
    problem: &Problem,
    methods: &[Method],
    sigma: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<ChosenBeta>> {
    methods
        .iter()
        .map(|&method| {
            Ok(match method.fixed_beta(&cfg.betas) {
                Some(beta) => ChosenBeta {
                    method,
                    beta,
                    tuned: false,
                },
                None => ChosenBeta {
                    method,
                    beta: tune_beta(problem, method, sigma, cfg)?,
                    tuned: true,
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub sigma: f64,
    pub method: Method,
    pub beta: f64,
    pub beta_tuned: bool,
    /// Worst possible value when `error` is set.
    pub metric: f64,
    pub iterations: usize,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

/// `trials` realizations at `sigma`, every method on each; rows ordered by
/// `(trial, method)`.
pub fn run_trials(
    problem: &Problem,
    betas: &[ChosenBeta],
    sigma: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<TrialRow>> {
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<TrialRow>> {
            let y = problem.noisy(sigma, trial_seed(cfg.seed, trial))?;
            Ok(betas
                .iter()
                .map(|chosen| {
                    let start = Instant::now();
                    let outcome = denoise(problem, chosen.method, &y, chosen.beta, sigma, cfg)
                        .and_then(|e| problem.score(&e.x).map(|m| (m, e.iterations)));
                    let wall = if cfg.timestamp {
                        start.elapsed().as_secs_f64() * 1e3
                    } else {
                        0.0
                    };
                    let (metric, iterations, error) = match outcome {
                        Ok((m, it)) => (m, it, None),
                        Err(e) => (problem.metric.worst(), 0, Some(e.to_string())),
                    };
                    TrialRow {
                        trial,
                        sigma,
                        method: chosen.method,
                        beta: chosen.beta,
                        beta_tuned: chosen.tuned,
                        metric,
                        iterations,
                        wall_time_ms: wall,
                        error,
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<TrialRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.trial, r.method));
    Ok(rows)
}

/// Config echo appended to every CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Echo(Vec<(&'static str, String)>);

impl Echo {
    fn new(cfg: &ExperimentConfig, problem: &Problem) -> Self {
        let r = problem.frame.frame_constant();
        Echo(vec![
            ("source", cfg.source.label()),
            ("size", problem.size_label()),
            ("scales", cfg.scales().to_string()),
            ("wavelet", cfg.wavelet.to_string()),
            (
                "image_schedule",
                if problem.is_image() {
                    cfg.image_schedule.to_string()
                } else {
                    "-".into()
                },
            ),
            ("penalty", cfg.penalty.to_string()),
            ("mu", num(solver_config(cfg).mu_for(r))),
            ("tol", num(cfg.tol)),
            ("max_iter", cfg.max_iter.to_string()),
            ("trials", cfg.trials.to_string()),
            ("seed", cfg.seed.to_string()),
        ])
    }
}

pub(crate) fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_csv(
    header: &[&str],
    echo: &Echo,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().copied().chain(echo.0.iter().map(|(k, _)| *k)))?;
    for row in rows {
        w.write_record(
            row.iter()
                .map(String::as_str)
                .chain(echo.0.iter().map(|(_, v)| v.as_str())),
        )?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv is not UTF-8: {e}")))
}

fn beta_source(tuned: bool) -> String {
    if tuned { "tuned" } else { "fixed" }.to_string()
}

/// Per-trial results of `compare` (and single `denoise` runs).
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub metric: MetricKind,
    pub rows: Vec<TrialRow>,
    pub echo: Echo,
}

impl CompareReport {
    pub fn to_csv(&self) -> Result<String> {
        let header = [
            "trial",
            "sigma",
            "method",
            "beta",
            "beta_source",
            "metric_name",
            "metric",
            "iterations",
            "wall_time_ms",
            "error",
        ];
        write_csv(
            &header,
            &self.echo,
            self.rows.iter().map(|r| {
                vec![
                    r.trial.to_string(),
                    num(r.sigma),
                    r.method.name().to_string(),
                    num(r.beta),
                    beta_source(r.beta_tuned),
                    self.metric.name().to_string(),
                    num(r.metric),
                    r.iterations.to_string(),
                    format!("{:.3}", r.wall_time_ms),
                    r.error.clone().unwrap_or_default(),
                ]
            }),
        )
    }

    /// Mean metric of `method` over its successful rows.
    pub fn mean_metric(&self, method: Method) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.error.is_none())
            .map(|r| r.metric)
            .collect();
        (!v.is_empty()).then(|| mean(&v))
    }
}

/// Runs every method for `cfg.trials` realizations at `cfg.sigma`.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    run_compare_methods(cfg, &Method::ALL)
}

/// [`run_compare`] restricted to `methods`.
pub fn run_compare_methods(cfg: &ExperimentConfig, methods: &[Method]) -> Result<CompareReport> {
    let problem = Problem::from_config(cfg)?;
    let betas = choose_betas(&problem, methods, cfg.sigma, cfg)?;
    let rows = run_trials(&problem, &betas, cfg.sigma, cfg)?;
    Ok(CompareReport {
        metric: problem.metric,
        rows,
        echo: Echo::new(cfg, &problem),
    })
}

/// One realization denoised by every method, with the estimates kept.
pub struct DenoiseReport {
    pub compare: CompareReport,
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
    pub estimates: Vec<(Method, Vec<f64>)>,
    pub shape: (usize, usize),
}

pub fn run_denoise(cfg: &ExperimentConfig) -> Result<DenoiseReport> {
    let problem = Problem::from_config(cfg)?;
    let betas = choose_betas(&problem, &Method::ALL, cfg.sigma, cfg)?;
    let noisy = problem.noisy(cfg.sigma, trial_seed(cfg.seed, 0))?;
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for chosen in &betas {
        let start = Instant::now();
        let est = denoise(&problem, chosen.method, &noisy, chosen.beta, cfg.sigma, cfg)?;
        let wall = if cfg.timestamp {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        rows.push(TrialRow {
            trial: 0,
            sigma: cfg.sigma,
            method: chosen.method,
            beta: chosen.beta,
            beta_tuned: chosen.tuned,
            metric: problem.score(&est.x)?,
            iterations: est.iterations,
            wall_time_ms: wall,
            error: None,
        });
        estimates.push((chosen.method, est.x));
    }
    let mut echo = Echo::new(cfg, &problem);
    echo.0.retain(|(k, _)| *k != "trials");
    Ok(DenoiseReport {
        compare: CompareReport {
            metric: problem.metric,
            rows,
            echo,
        },
        clean: problem.clean,
        noisy,
        estimates,
        shape: problem.shape,
    })
}

impl DenoiseReport {
    /// Per-sample CSV: index, clean, noisy and one column per method.
    pub fn samples_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index", "clean", "noisy"];
        header.extend(self.estimates.iter().map(|(m, _)| m.name()));
        w.write_record(&header)?;
        for i in 0..self.clean.len() {
            let mut row = vec![i.to_string(), num(self.clean[i]), num(self.noisy[i])];
            row.extend(self.estimates.iter().map(|(_, x)| num(x[i])));
            w.write_record(&row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv is not UTF-8: {e}")))
    }

    /// Writes `<stem>_noisy.pgm` and `<stem>_<method>.pgm` beside `base`.
    pub fn write_images(&self, base: &Path) -> Result<()> {
        let (h, w) = self.shape;
        let stem = base
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("denoised");
        let dir = base.parent().unwrap_or(Path::new(""));
        let mut outputs = vec![("noisy", &self.noisy)];
        outputs.extend(self.estimates.iter().map(|(m, x)| (m.name(), x)));
        for (label, values) in outputs {
            let path = dir.join(format!("{stem}_{label}.pgm"));
            write_pgm(&path, &GrayImage::from_f64(w, h, values)?)?;
            info!("wrote {}", path.display());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub method: Method,
    pub beta: f64,
    pub beta_tuned: bool,
    pub mean_metric: f64,
    pub std_metric: f64,
    pub successes: usize,
    pub failures: usize,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSigmaReport {
    pub metric: MetricKind,
    pub trials: Vec<TrialRow>,
    pub summary: Vec<SigmaSummary>,
    pub echo: Echo,
}

impl SweepSigmaReport {
    pub fn to_csv(&self) -> Result<String> {
        let header = [
            "sigma",
            "method",
            "beta",
            "beta_source",
            "metric_name",
            "mean_metric",
            "std_metric",
            "successes",
            "failures",
            "mean_iterations",
        ];
        write_csv(
            &header,
            &self.echo,
            self.summary.iter().map(|s| {
                vec![
                    num(s.sigma),
                    s.method.name().to_string(),
                    num(s.beta),
                    beta_source(s.beta_tuned),
                    self.metric.name().to_string(),
                    num(s.mean_metric),
                    num(s.std_metric),
                    s.successes.to_string(),
                    s.failures.to_string(),
                    num(s.mean_iterations),
                ]
            }),
        )
    }

    pub fn mean_metric(&self, sigma: f64, method: Method) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.sigma == sigma && s.method == method)
            .map(|s| s.mean_metric)
    }
}

fn summarize(
    rows: &[TrialRow],
    metric: MetricKind,
    sigma: f64,
    chosen: &ChosenBeta,
) -> SigmaSummary {
    let ok: Vec<&TrialRow> = rows
        .iter()
        .filter(|r| r.method == chosen.method && r.error.is_none())
        .collect();
    let failures = rows.iter().filter(|r| r.method == chosen.method).count() - ok.len();
    let metrics: Vec<f64> = ok.iter().map(|r| r.metric).collect();
    let iterations: Vec<f64> = ok.iter().map(|r| r.iterations as f64).collect();
    SigmaSummary {
        sigma,
        method: chosen.method,
        beta: chosen.beta,
        beta_tuned: chosen.tuned,
        mean_metric: if metrics.is_empty() {
            metric.worst()
        } else {
            mean(&metrics)
        },
        std_metric: sample_std(&metrics),
        successes: ok.len(),
        failures,
        mean_iterations: if iterations.is_empty() {
            0.0
        } else {
            mean(&iterations)
        },
    }
}

/// Mean metric per `(sigma, method)` over `cfg.sigmas`, betas tuned per
/// noise level.
pub fn run_sweep_sigma(cfg: &ExperimentConfig) -> Result<SweepSigmaReport> {
    run_sweep_sigma_methods(cfg, &Method::ALL)
}

pub fn run_sweep_sigma_methods(
    cfg: &ExperimentConfig,
    methods: &[Method],
) -> Result<SweepSigmaReport> {
    let problem = Problem::from_config(cfg)?;
    let mut trials = Vec::new();
    let mut summary = Vec::new();
    for &sigma in &cfg.sigmas {
        let betas = choose_betas(&problem, methods, sigma, cfg)?;
        let rows = run_trials(&problem, &betas, sigma, cfg)?;
        for chosen in &betas {
            summary.push(summarize(&rows, problem.metric, sigma, chosen));
        }
        info!("sigma {sigma}: {} trial rows", rows.len());
        trials.extend(rows);
    }
    Ok(SweepSigmaReport {
        metric: problem.metric,
        trials,
        summary,
        echo: Echo::new(cfg, &problem),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub beta: f64,
    /// `l1_admm` for the convex setting, `nonconvex_admm` otherwise.
    pub method: Method,
    /// Largest lambda in the schedule (finest detail scale).
    pub lambda_max: f64,
    pub mean_metric: f64,
    pub std_metric: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepLambdaReport {
    pub metric: MetricKind,
    pub sigma: f64,
    pub penalty: String,
    pub rows: Vec<LambdaRow>,
    pub echo: Echo,
}

impl SweepLambdaReport {
    pub fn to_csv(&self) -> Result<String> {
        let header = [
            "beta",
            "setting",
            "method_penalty",
            "a_rule",
            "lambda_max",
            "sigma",
            "metric_name",
            "mean_metric",
            "std_metric",
            "failures",
        ];
        write_csv(
            &header,
            &self.echo,
            self.rows.iter().map(|r| {
                let (setting, penalty, rule) = match r.method {
                    Method::L1Admm => ("convex", "abs".to_string(), "a=0"),
                    _ => ("nonconvex", self.penalty.clone(), "a=1/(r*lambda)"),
                };
                vec![
                    num(r.beta),
                    setting.to_string(),
                    penalty,
                    rule.to_string(),
                    num(r.lambda_max),
                    num(self.sigma),
                    self.metric.name().to_string(),
                    num(r.mean_metric),
                    num(r.std_metric),
                    r.failures.to_string(),
                ]
            }),
        )
    }
}

/// Metric versus `beta` over `cfg.beta_grid` for the convex (`a = 0`) and
/// non-convex (`a = 1/(r lambda)`) settings at `cfg.sigma`.
pub fn run_sweep_lambda(cfg: &ExperimentConfig) -> Result<SweepLambdaReport> {
    let problem = Problem::from_config(cfg)?;
    let inputs = (0..cfg.trials)
        .map(|t| problem.noisy(cfg.sigma, trial_seed(cfg.seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let cases: Vec<(f64, Method)> = cfg
        .beta_grid
        .iter()
        .flat_map(|&b| [(b, Method::L1Admm), (b, Method::NonconvexAdmm)])
        .collect();
    let rows = cases
        .par_iter()
        .map(|&(beta, method)| -> Result<LambdaRow> {
            let lambda_max = problem
                .lambda(beta, cfg.sigma)?
                .iter()
                .copied()
                .fold(0.0, f64::max);
            let outcomes: Vec<Result<f64>> = inputs
                .iter()
                .map(|y| {
                    denoise(&problem, method, y, beta, cfg.sigma, cfg)
                        .and_then(|e| problem.score(&e.x))
                })
                .collect();
            let metrics: Vec<f64> = outcomes
                .iter()
                .filter_map(|o| o.as_ref().ok().copied())
                .collect();
            Ok(LambdaRow {
                beta,
                method,
                lambda_max,
                mean_metric: if metrics.is_empty() {
                    problem.metric.worst()
                } else {
                    mean(&metrics)
                },
                std_metric: sample_std(&metrics),
                failures: outcomes.len() - metrics.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepLambdaReport {
        metric: problem.metric,
        sigma: cfg.sigma,
        penalty: cfg.penalty.to_string(),
        rows,
        echo: Echo::new(cfg, &problem),
    })
}

/// CSV text of a finished run and whether every check succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub success: bool,
}

/// Prefixes the timestamp comment line when enabled.
pub fn render(cfg: &ExperimentConfig, body: String) -> String {
    if !cfg.timestamp {
        return body;
    }
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("# frameshrink {} generated_unix={secs}\n{body}", cfg.mode)
}

/// Dispatches on `cfg.mode`, writing auxiliary outputs requested by the
/// config. The CSV itself is returned, not written.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let (body, success) = match cfg.mode {
        Mode::Denoise1d | Mode::Denoise2d => {
            let report = run_denoise(cfg)?;
            if let Some(path) = &cfg.output_signal {
                std::fs::write(path, report.samples_csv()?).map_err(io_error(path))?;
            }
            if let Some(path) = &cfg.output_image {
                if report.shape.0 > 1 {
                    report.write_images(path)?;
                } else {
                    return Err(Error::Config("output_image needs an image source".into()));
                }
            }
            (report.compare.to_csv()?, true)
        }
        Mode::Compare => {
            let report = run_compare(cfg)?;
            let ok = report.rows.iter().all(|r| r.error.is_none());
            (report.to_csv()?, ok)
        }
        Mode::SweepSigma => {
            let report = run_sweep_sigma(cfg)?;
            let ok = report.summary.iter().all(|s| s.failures == 0);
            (report.to_csv()?, ok)
        }
        Mode::SweepLambda => {
            let report = run_sweep_lambda(cfg)?;
            let ok = report.rows.iter().all(|r| r.failures == 0);
            (report.to_csv()?, ok)
        }
        Mode::Verify => {
            let report = run_verify(cfg)?;
            (report.to_csv()?, report.passed())
        }
    };
    Ok(RunOutput {
        csv: render(cfg, body),
        success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(mode);
        cfg.n = 128;
        cfg.scales = Some(3);
        cfg.trials = 2;
        cfg.tune_trials = 1;
        cfg.tune_grid = logspace(0.5, 4.0, 4);
        cfg.max_iter = 100;
        cfg.timestamp = false;
        cfg
    }

    #[test]
    fn compare_rows_ordered_and_complete() {
        let report = run_compare(&small(Mode::Compare)).unwrap();
        assert_eq!(report.rows.len(), 8);
        let keys: Vec<(usize, Method)> = report.rows.iter().map(|r| (r.trial, r.method)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(report
            .rows
            .iter()
            .all(|r| r.error.is_none() && r.metric.is_finite()));
        let csv = report.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("trial,sigma,method,beta,beta_source,metric_name,metric"));
    }

    #[test]
    fn fixed_beta_is_reported() {
        let mut cfg = small(Mode::Compare);
        cfg.betas.l1 = Some(1.25);
        let report = run_compare_methods(&cfg, &[Method::L1Admm]).unwrap();
        assert!(report.rows.iter().all(|r| r.beta == 1.25 && !r.beta_tuned));
    }

    #[test]
    fn noiseless_small_lambda_is_near_perfect() {
        let mut cfg = small(Mode::Compare);
        cfg.sigma = 0.0;
        cfg.trials = 1;
        cfg.betas = MethodBetas {
            l1: Some(1.0),
            nonconvex: Some(1.0),
            threshold: Some(1.0),
            reweighted: Some(1.0),
        };
        let report = run_compare(&cfg).unwrap();
        for r in &report.rows {
            assert!(r.metric < 1e-4, "{:?}", r);
        }
    }

    #[test]
    fn sweep_sigma_mean_matches_trials() {
        let mut cfg = small(Mode::SweepSigma);
        cfg.sigmas = vec![1.0, 2.0];
        let report = run_sweep_sigma(&cfg).unwrap();
        assert_eq!(report.summary.len(), 8);
        for s in &report.summary {
            let v: Vec<f64> = report
                .trials
                .iter()
                .filter(|r| r.sigma == s.sigma && r.method == s.method)
                .map(|r| r.metric)
                .collect();
            assert!((mean(&v) - s.mean_metric).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_lambda_shape() {
        let mut cfg = small(Mode::SweepLambda);
        cfg.beta_grid = vec![0.5, 1.0, 2.0];
        cfg.trials = 1;
        let report = run_sweep_lambda(&cfg).unwrap();
        assert_eq!(report.rows.len(), 6);
        let csv = report.to_csv().unwrap();
        assert!(csv.contains("a=1/(r*lambda)") && csv.contains("a=0"));
    }

    #[test]
    fn image_problem_uses_psnr() {
        let mut cfg = ExperimentConfig::new(Mode::Denoise2d);
        cfg.height = 16;
        cfg.width = 16;
        cfg.scales = Some(2);
        let p = Problem::from_config(&cfg).unwrap();
        assert_eq!(p.metric, MetricKind::PsnrDb);
        assert_eq!(p.frame.coeff_len(), 7 * 256);
        let lam = p.lambda(1.0, 2.0).unwrap();
        assert!(lam[..3 * 256].iter().all(|&l| l == 1.0));
        assert!(lam[3 * 256..6 * 256].iter().all(|&l| l == 0.5));
        assert!(lam[6 * 256..].iter().all(|&l| l == 0.0));
        cfg.image_schedule = ImageSchedule::Uniform;
        let lam = Problem::from_config(&cfg)
            .unwrap()
            .lambda(1.0, 2.0)
            .unwrap();
        assert!(lam[..6 * 256].iter().all(|&l| l == 2.0));
    }

    #[test]
    fn render_timestamp_toggle() {
        let mut cfg = small(Mode::Compare);
        assert_eq!(render(&cfg, "a\n".into()), "a\n");
        cfg.timestamp = true;
        let out = render(&cfg, "a\n".into());
        assert!(out.starts_with("# frameshrink compare generated_unix="));
        assert!(out.ends_with("\na\n"));
    }

    #[test]
    fn metric_direction() {
        assert!(MetricKind::Rmse.better(1.0, 2.0));
        assert!(MetricKind::PsnrDb.better(2.0, 1.0));
    }
}
