use crate::error::{Error, Result};
use crate::frame::SubbandLayout;

/// Per-scale regularization `lambda_j = beta sigma 2^(-j/2)`.
///
/// Every coefficient of detail scale `j` gets `lambda_j`; coarse-band
/// coefficients get `coarse` (zero by default, i.e. unpenalized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub beta: f64,
    pub sigma: f64,
    pub coarse: f64,
}

impl LambdaSchedule {
    pub fn new(beta: f64, sigma: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0 && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "schedule needs beta, sigma > 0, got beta = {beta}, sigma = {sigma}"
            )));
        }
        Ok(LambdaSchedule {
            beta,
            sigma,
            coarse: 0.0,
        })
    }

    pub fn scale_lambda(&self, scale: usize) -> f64 {
        self.beta * self.sigma * 2f64.powf(-(scale as f64) / 2.0)
    }

    /// Scale-dependent vector over `layout`.
    pub fn per_scale(&self, layout: &SubbandLayout) -> Vec<f64> {
        self.fill(layout, |scale| self.scale_lambda(scale))
    }

    /// Noise-normalized image schedule `lambda_j = beta sigma 2^(-j)`: the
    /// noise level of a scale-`j` coefficient of a separable 2D UDWT.
    pub fn per_scale_2d(&self, layout: &SubbandLayout) -> Vec<f64> {
        self.fill(layout, |scale| {
            self.beta * self.sigma * 2f64.powi(-(scale as i32))
        })
    }

    /// Same `beta sigma` for every detail subband.
    pub fn uniform(&self, layout: &SubbandLayout) -> Vec<f64> {
        self.fill(layout, |_| self.beta * self.sigma)
    }

    fn fill(&self, layout: &SubbandLayout, detail: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; layout.coeff_len()];
        for band in layout.bands() {
            let v = band.detail_scale().map_or(self.coarse, &detail);
            out[band.range.clone()].fill(v);
        }
        out
    }
}

/// Maximal convexity-preserving parameters `a_i = 1 / (r lambda_i)`, and
/// `a_i = 0` where `lambda_i = 0`.
pub fn boundary_a(lambda: &[f64], r: f64) -> Vec<f64> {
    lambda
        .iter()
        .map(|&l| if l > 0.0 { 1.0 / (r * l) } else { 0.0 })
        .collect()
}
