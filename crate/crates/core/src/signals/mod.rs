//! Test signals, seeded noise, error metrics, regularization schedules and
//! PGM image I/O.

mod metrics;
mod pgm;
mod schedule;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub use metrics::{mse, psnr, rmse, Psnr};
pub use pgm::{read_pgm, write_pgm, GrayImage};
pub use schedule::{boundary_a, LambdaSchedule};

/// Donoho-Johnstone test signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    Blocks,
    Bumps,
    HeaviSine,
    Doppler,
}

impl SignalKind {
    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Blocks => "blocks",
            SignalKind::Bumps => "bumps",
            SignalKind::HeaviSine => "heavisine",
            SignalKind::Doppler => "doppler",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blocks" => Ok(SignalKind::Blocks),
            "bumps" => Ok(SignalKind::Bumps),
            "heavisine" => Ok(SignalKind::HeaviSine),
            "doppler" => Ok(SignalKind::Doppler),
            other => Err(Error::Config(format!("unknown signal '{other}'"))),
        }
    }
}

const JUMP_POS: [f64; 11] = [
    0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Samples `kind` at `t_k = (k + 1) / n`, `k = 0..n`.
pub fn generate(kind: SignalKind, n: usize) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(Error::InvalidSize(format!(
            "test signals need n >= 16, got {n}"
        )));
    }
    let sample = |t: f64| -> f64 {
        match kind {
            SignalKind::Blocks => JUMP_POS
                .iter()
                .zip(BLOCK_HEIGHTS)
                .map(|(p, h)| h * (1.0 + sgn(t - p)) / 2.0)
                .sum(),
            SignalKind::Bumps => JUMP_POS
                .iter()
                .zip(BUMP_HEIGHTS.iter().zip(BUMP_WIDTHS))
                .map(|(p, (h, w))| h * (1.0 + ((t - p) / w).abs()).powi(-4))
                .sum(),
            SignalKind::HeaviSine => 4.0 * (4.0 * PI * t).sin() - sgn(t - 0.3) - sgn(0.72 - t),
            SignalKind::Doppler => (t * (1.0 - t)).sqrt() * (2.0 * PI * 1.05 / (t + 0.05)).sin(),
        }
    };
    Ok((1..=n).map(|k| sample(k as f64 / n as f64)).collect())
}

/// Additive white Gaussian noise with a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::ParameterDomain(format!(
                "noise sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(NoiseSpec { sigma, seed })
    }
}

/// `x + sigma z` with `z` standard normal from a ChaCha8 stream seeded by
/// `spec.seed`.
pub fn add_awgn(x: &[f64], spec: NoiseSpec) -> Vec<f64> {
    if spec.sigma == 0.0 {
        return x.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    x.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + spec.sigma * z
        })
        .collect()
}

/// Piecewise-smooth 8-bit-range test image: a shaded background with a
/// rectangle, a disk and a textured band. Row-major, values in `[0, 255]`.
pub fn synthetic_image(height: usize, width: usize) -> Vec<f64> {
    let mut img = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let u = (c as f64 + 0.5) / width as f64;
            let v = (r as f64 + 0.5) / height as f64;
            let mut val = 60.0 + 50.0 * u + 30.0 * v;
            if (0.15..0.55).contains(&u) && (0.2..0.5).contains(&v) {
                val = 200.0;
            }
            let (du, dv) = (u - 0.68, v - 0.62);
            if du * du + dv * dv < 0.22 * 0.22 {
                val = 150.0 + 60.0 * (1.0 - (du * du + dv * dv).sqrt() / 0.22);
            }
            if (0.78..0.92).contains(&v) {
                val = 90.0 + 40.0 * (2.0 * PI * 3.0 * u).sin();
            }
            img.push(val.clamp(0.0, 255.0));
        }
    }
    img
}
