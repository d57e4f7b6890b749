use crate::error::{Error, Result};

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "metric operands",
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

pub fn mse(x: &[f64], xhat: &[f64]) -> Result<f64> {
    check_len(x, xhat)?;
    Ok(x.iter()
        .zip(xhat)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / x.len() as f64)
}

pub fn rmse(x: &[f64], xhat: &[f64]) -> Result<f64> {
    mse(x, xhat).map(f64::sqrt)
}

/// Peak signal-to-noise ratio in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Db(f64),
    /// Zero error.
    Perfect,
}

impl Psnr {
    /// Decibels, `+inf` for [`Psnr::Perfect`].
    pub fn db(self) -> f64 {
        match self {
            Psnr::Db(v) => v,
            Psnr::Perfect => f64::INFINITY,
        }
    }
}

/// `10 log10(peak^2 / MSE)`.
pub fn psnr(img: &[f64], imghat: &[f64], peak: f64) -> Result<Psnr> {
    if !(peak > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "peak must be > 0, got {peak}"
        )));
    }
    let e = mse(img, imghat)?;
    if e == 0.0 {
        Ok(Psnr::Perfect)
    } else {
        Ok(Psnr::Db(10.0 * (peak * peak / e).log10()))
    }
}
