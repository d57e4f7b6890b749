//! Plain-text `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{io_error, Error, Result};
use crate::frame::Wavelet;
use crate::penalty::PenaltyKind;
use crate::signals::SignalKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Denoise1d,
    Denoise2d,
    SweepSigma,
    SweepLambda,
    Compare,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Denoise1d => "denoise1d",
            Mode::Denoise2d => "denoise2d",
            Mode::SweepSigma => "sweep_sigma",
            Mode::SweepLambda => "sweep_lambda",
            Mode::Compare => "compare",
            Mode::Verify => "verify",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "denoise1d" => Ok(Mode::Denoise1d),
            "denoise2d" => Ok(Mode::Denoise2d),
            "sweep_sigma" => Ok(Mode::SweepSigma),
            "sweep_lambda" => Ok(Mode::SweepLambda),
            "compare" => Ok(Mode::Compare),
            "verify" => Ok(Mode::Verify),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// Where the clean data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Signal(SignalKind),
    SyntheticImage,
    ImageFile(PathBuf),
}

impl Source {
    pub fn is_image(&self) -> bool {
        !matches!(self, Source::Signal(_))
    }

    pub fn label(&self) -> String {
        match self {
            Source::Signal(kind) => kind.name().to_string(),
            Source::SyntheticImage => "synthetic".to_string(),
            Source::ImageFile(p) => p.display().to_string(),
        }
    }
}

/// Regularization layout for images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImageSchedule {
    /// `lambda_j = beta sigma 2^(-j)`, the per-coefficient noise level.
    #[default]
    Normalized,
    /// `beta sigma` on every detail subband.
    Uniform,
}

impl FromStr for ImageSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normalized" => Ok(ImageSchedule::Normalized),
            "uniform" => Ok(ImageSchedule::Uniform),
            other => Err(Error::Config(format!("unknown image_schedule '{other}'"))),
        }
    }
}

impl fmt::Display for ImageSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImageSchedule::Normalized => "normalized",
            ImageSchedule::Uniform => "uniform",
        })
    }
}

/// Fixed `beta` per method; `None` means tune by grid search.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MethodBetas {
    pub l1: Option<f64>,
    pub nonconvex: Option<f64>,
    pub threshold: Option<f64>,
    pub reweighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub source: Source,
    pub n: usize,
    pub height: usize,
    pub width: usize,
    /// Wavelet scales; `None` picks 4 for signals and 3 for images.
    pub scales: Option<usize>,
    pub wavelet: Wavelet,
    pub image_schedule: ImageSchedule,
    pub sigma: f64,
    pub sigmas: Vec<f64>,
    pub betas: MethodBetas,
    /// Candidate `beta` values for `sweep_lambda`.
    pub beta_grid: Vec<f64>,
    /// Coarse grid for automatic `beta` tuning.
    pub tune_grid: Vec<f64>,
    pub penalty: PenaltyKind,
    pub mu: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub trials: usize,
    /// Realizations averaged when tuning `beta`.
    pub tune_trials: usize,
    pub seed: u64,
    /// Reweighting stabilizer as a multiple of sigma.
    pub epsilon_factor: f64,
    pub outer_iters: usize,
    pub out: Option<PathBuf>,
    pub output_image: Option<PathBuf>,
    /// Per-sample CSV written by `denoise1d`.
    pub output_signal: Option<PathBuf>,
    /// Emit the timestamp comment line and wall-clock timings.
    pub timestamp: bool,
    /// Guard values checked by `verify` in addition to the built-in suite.
    pub verify_mu: Option<f64>,
    pub verify_toy_a: Option<f64>,
}

pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        let source = match mode {
            Mode::Denoise2d => Source::SyntheticImage,
            _ => Source::Signal(SignalKind::Blocks),
        };
        ExperimentConfig {
            mode,
            source,
            n: 1024,
            height: 64,
            width: 64,
            scales: None,
            wavelet: Wavelet::Sym3,
            image_schedule: ImageSchedule::Normalized,
            sigma: 4.0,
            sigmas: vec![1.0, 2.0, 3.0, 4.0],
            betas: MethodBetas::default(),
            beta_grid: logspace(0.25, 4.0, 10),
            tune_grid: logspace(0.02, 8.0, 16),
            penalty: PenaltyKind::Atan,
            mu: None,
            max_iter: 500,
            tol: 1e-6,
            trials: 15,
            tune_trials: 3,
            seed: 0,
            epsilon_factor: 0.1,
            outer_iters: 4,
            out: None,
            output_image: None,
            output_signal: None,
            timestamp: true,
            verify_mu: None,
            verify_toy_a: None,
        }
    }

    pub fn scales(&self) -> usize {
        self.scales
            .unwrap_or(if self.source.is_image() { 3 } else { 4 })
    }

    /// Reads a config file and applies `overrides` (later wins).
    pub fn load(mode: Mode, path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut entries = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(io_error(p))?;
                parse_entries(&text)?
            }
            None => Vec::new(),
        };
        entries.extend(overrides.iter().cloned());
        Self::from_entries(mode, &entries)
    }

    pub fn from_entries(mode: Mode, entries: &[(String, String)]) -> Result<Self> {
        let mut cfg = ExperimentConfig::new(mode);
        let mut image: Option<String> = None;
        let mut signal: Option<String> = None;
        for (key, value) in entries {
            let v = value.trim();
            match key.trim() {
                "signal" => signal = Some(v.to_string()),
                "image" => image = Some(v.to_string()),
                "n" => cfg.n = parse(key, v)?,
                "height" => cfg.height = parse(key, v)?,
                "width" => cfg.width = parse(key, v)?,
                "size" => {
                    let s: usize = parse(key, v)?;
                    cfg.height = s;
                    cfg.width = s;
                }
                "scales" => cfg.scales = Some(parse(key, v)?),
                "wavelet" => cfg.wavelet = v.parse()?,
                "image_schedule" => cfg.image_schedule = v.parse()?,
                "sigma" => cfg.sigma = parse(key, v)?,
                "sigmas" => cfg.sigmas = parse_list(key, v)?,
                "beta" => {
                    let b = Some(parse(key, v)?);
                    cfg.betas = MethodBetas {
                        l1: b,
                        nonconvex: b,
                        threshold: b,
                        reweighted: b,
                    };
                }
                "beta_l1" => cfg.betas.l1 = Some(parse(key, v)?),
                "beta_nonconvex" => cfg.betas.nonconvex = Some(parse(key, v)?),
                "beta_threshold" => cfg.betas.threshold = Some(parse(key, v)?),
                "beta_reweighted" => cfg.betas.reweighted = Some(parse(key, v)?),
                "betas" => cfg.beta_grid = parse_list(key, v)?,
                "tune_grid" => cfg.tune_grid = parse_list(key, v)?,
                "penalty" => cfg.penalty = v.parse()?,
                "mu" => cfg.mu = Some(parse(key, v)?),
                "max_iter" => cfg.max_iter = parse(key, v)?,
                "tol" => cfg.tol = parse(key, v)?,
                "trials" => cfg.trials = parse(key, v)?,
                "tune_trials" => cfg.tune_trials = parse(key, v)?,
                "seed" => cfg.seed = parse(key, v)?,
                "epsilon_factor" => cfg.epsilon_factor = parse(key, v)?,
                "outer_iters" => cfg.outer_iters = parse(key, v)?,
                "out" => cfg.out = Some(PathBuf::from(v)),
                "output_image" => cfg.output_image = Some(PathBuf::from(v)),
                "output_signal" => cfg.output_signal = Some(PathBuf::from(v)),
                "timestamp" => cfg.timestamp = parse(key, v)?,
                "verify_mu" => cfg.verify_mu = Some(parse(key, v)?),
                "verify_toy_a" => cfg.verify_toy_a = Some(parse(key, v)?),
                other => return Err(Error::Config(format!("unknown config key '{other}'"))),
            }
        }
        cfg.source = match (image, signal) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either 'signal' or 'image', not both".into(),
                ))
            }
            (Some(img), None) if img == "synthetic" => Source::SyntheticImage,
            (Some(img), None) => Source::ImageFile(PathBuf::from(img)),
            (None, Some(sig)) => Source::Signal(sig.parse()?),
            (None, None) => cfg.source,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match (self.mode, &self.source) {
            (Mode::Denoise1d, s) if s.is_image() => {
                return bad("denoise1d needs a 'signal' source".into())
            }
            (Mode::Denoise2d, Source::Signal(_)) => {
                return bad("denoise2d needs an 'image' source".into())
            }
            _ => {}
        }
        if self.trials == 0 || self.tune_trials == 0 {
            return bad("trials and tune_trials must be >= 1".into());
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sigmas must be a non-empty list of values >= 0".into());
        }
        for (name, grid) in [("betas", &self.beta_grid), ("tune_grid", &self.tune_grid)] {
            if grid.is_empty() || grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                return bad(format!("{name} must be a non-empty list of values > 0"));
            }
        }
        let b = self.betas;
        for v in [b.l1, b.nonconvex, b.threshold, b.reweighted]
            .into_iter()
            .flatten()
        {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("beta must be > 0, got {v}"));
            }
        }
        if let Some(mu) = self.mu {
            if !(mu.is_finite() && mu > 0.0) {
                return bad(format!("mu must be > 0, got {mu}"));
            }
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return bad("max_iter must be >= 1 and tol > 0".into());
        }
        if !(self.epsilon_factor > 0.0) || self.outer_iters == 0 {
            return bad("epsilon_factor must be > 0 and outer_iters >= 1".into());
        }
        if self.scales() == 0 {
            return bad("scales must be >= 1".into());
        }
        Ok(())
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            ))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn file_then_overrides() {
        let text = "# comment\nsignal = bumps\nsigma = 2.5  # inline\nsigmas = 1, 2\n\ntrials=3\n";
        let mut entries = parse_entries(text).unwrap();
        entries.extend(kv(&[("sigma", "3.0")]));
        let cfg = ExperimentConfig::from_entries(Mode::Compare, &entries).unwrap();
        assert_eq!(cfg.source, Source::Signal(SignalKind::Bumps));
        assert_eq!(cfg.sigma, 3.0);
        assert_eq!(cfg.sigmas, vec![1.0, 2.0]);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.scales(), 4);
    }

    #[test]
    fn image_sources() {
        let cfg =
            ExperimentConfig::from_entries(Mode::Compare, &kv(&[("image", "synthetic")])).unwrap();
        assert_eq!(cfg.source, Source::SyntheticImage);
        assert_eq!(cfg.scales(), 3);
        let cfg =
            ExperimentConfig::from_entries(Mode::Denoise2d, &kv(&[("image", "a.pgm")])).unwrap();
        assert_eq!(cfg.source, Source::ImageFile(PathBuf::from("a.pgm")));
        assert!(
            ExperimentConfig::from_entries(Mode::Denoise2d, &kv(&[("signal", "blocks")])).is_err()
        );
        assert!(ExperimentConfig::from_entries(
            Mode::Compare,
            &kv(&[("signal", "blocks"), ("image", "synthetic")])
        )
        .is_err());
    }

    #[test]
    fn rejects_invalid() {
        for pairs in [
            vec![("trials", "0")],
            vec![("sigmas", "")],
            vec![("sigma", "-1")],
            vec![("beta", "0")],
            vec![("mu", "-2")],
            vec![("colour", "red")],
            vec![("n", "many")],
        ] {
            assert!(
                ExperimentConfig::from_entries(Mode::Compare, &kv(&pairs)).is_err(),
                "{pairs:?}"
            );
        }
        assert!(parse_entries("no equals sign").is_err());
        assert!("plot".parse::<Mode>().is_err());
    }

    #[test]
    fn beta_applies_to_every_method() {
        let cfg = ExperimentConfig::from_entries(
            Mode::Compare,
            &kv(&[("beta", "1.5"), ("beta_l1", "2")]),
        )
        .unwrap();
        assert_eq!(cfg.betas.l1, Some(2.0));
        assert_eq!(cfg.betas.reweighted, Some(1.5));
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(0.5, 8.0, 5);
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[4] - 8.0).abs() < 1e-12);
        assert!((g[2] - 2.0).abs() < 1e-12);
    }
}
