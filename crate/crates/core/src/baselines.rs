//! Reference denoisers: l1-analysis ADMM, direct thresholding of frame
//! coefficients, and reweighted l1.

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::penalty::PenaltyKind;
use crate::prox::{self, ProxQuery};
use crate::solver::{admm_solve, ProblemSpec, SolveResult, SolverConfig};

/// `argmin 0.5 ||y - x||^2 + sum lambda_i |[A x]_i|`.
pub fn l1_denoise(
    y: &[f64],
    frame: &dyn Frame,
    lambda: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult> {
    let a = vec![0.0; frame.coeff_len()];
    let spec = ProblemSpec::new(y, frame, PenaltyKind::Abs, lambda, &a)?;
    admm_solve(&spec, config)
}

/// Thresholds the analysis coefficients of `y` once and reconstructs with
/// `A^T / r`. Coefficients with `lambda_i = 0` pass through unchanged.
pub fn direct_threshold(
    y: &[f64],
    frame: &dyn Frame,
    lambda: &[f64],
    a: &[f64],
    kind: PenaltyKind,
) -> Result<Vec<f64>> {
    let m = frame.coeff_len();
    if y.len() != frame.input_len() {
        return Err(Error::DimensionMismatch {
            what: "observation length",
            expected: frame.input_len(),
            actual: y.len(),
        });
    }
    for (what, v) in [("lambda length", lambda), ("a length", a)] {
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                what,
                expected: m,
                actual: v.len(),
            });
        }
    }
    let mut c = frame.analyze(y);
    for i in 0..m {
        if lambda[i] == 0.0 {
            continue;
        }
        let q = ProxQuery::new(c[i], lambda[i], a[i])?;
        c[i] = prox::prox_penalty(&q, kind);
    }
    let r = frame.frame_constant();
    let mut x = frame.adjoint(&c);
    x.iter_mut().for_each(|v| *v /= r);
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReweightConfig {
    /// Weight stabilizer in `w_i = 1 / (|[A x]_i| + epsilon)`.
    pub epsilon: f64,
    pub outer_iters: usize,
    pub inner: SolverConfig,
}

impl ReweightConfig {
    /// Defaults tied to the noise level: `epsilon = 0.1 sigma`, four outer
    /// passes.
    pub fn for_noise(sigma: f64) -> Self {
        ReweightConfig {
            epsilon: 0.1 * sigma,
            outer_iters: 4,
            inner: SolverConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.outer_iters == 0 {
            return Err(Error::Config("outer_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReweightResult {
    pub x: Vec<f64>,
    /// Weights used on each outer pass; the first pass uses all ones.
    pub weights: Vec<Vec<f64>>,
    /// Total inner ADMM iterations.
    pub iterations: usize,
}

/// Reweighted l1 in analysis form: alternate weighted l1 denoising with
/// `w_i <- 1 / (|[A x]_i| + epsilon)`.
pub fn reweighted_l1(
    y: &[f64],
    frame: &dyn Frame,
    lambda: &[f64],
    rw: &ReweightConfig,
) -> Result<ReweightResult> {
    rw.validate()?;
    let m = frame.coeff_len();
    let mut w = vec![1.0; m];
    let mut history = Vec::with_capacity(rw.outer_iters);
    let mut x = Vec::new();
    let mut iterations = 0;
    for pass in 0..rw.outer_iters {
        let weighted: Vec<f64> = lambda.iter().zip(&w).map(|(l, w)| l * w).collect();
        let res = l1_denoise(y, frame, &weighted, &rw.inner)?;
        iterations += res.iterations;
        history.push(std::mem::take(&mut w));
        x = res.into_x();
        if pass + 1 < rw.outer_iters {
            w = frame
                .analyze(&x)
                .iter()
                .map(|c| 1.0 / (c.abs() + rw.epsilon))
                .collect();
        }
    }
    Ok(ReweightResult {
        x,
        weights: history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{IdentityFrame, MatrixFrame, Udwt1d, Wavelet};
    use crate::signals::{generate, rmse, SignalKind};

    #[test]
    fn identity_l1_is_soft_threshold() {
        let frame = IdentityFrame::new(4).unwrap();
        let y = [2.0, -0.3, 0.8, -1.6];
        let cfg = SolverConfig {
            tol: 1e-11,
            max_iter: 5000,
            ..SolverConfig::default()
        };
        let res = l1_denoise(&y, &frame, &[0.5; 4], &cfg).unwrap();
        for (x, yi) in res.x().iter().zip(&y) {
            assert!((x - prox::soft(*yi, 0.5)).abs() < 1e-8);
        }
    }

    #[test]
    fn tiny_lambda_returns_observation() {
        let frame = MatrixFrame::toy();
        let y = [1.3, -0.7];
        let res = l1_denoise(&y, &frame, &[1e-9; 4], &SolverConfig::default()).unwrap();
        assert!((res.x()[0] - 1.3).abs() < 1e-7);
        assert!((res.x()[1] + 0.7).abs() < 1e-7);
    }

    #[test]
    fn direct_threshold_passthrough_and_identity() {
        let frame = Udwt1d::new(32, 3, Wavelet::Sym3).unwrap();
        let y: Vec<f64> = (0..32).map(|k| (k as f64 * 0.37).sin()).collect();
        let x = direct_threshold(
            &y,
            &frame,
            &vec![0.0; 128],
            &vec![0.0; 128],
            PenaltyKind::Atan,
        )
        .unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        let id = IdentityFrame::new(3).unwrap();
        let y = [3.0, 0.5, -2.0];
        let x = direct_threshold(&y, &id, &[1.0; 3], &[0.5; 3], PenaltyKind::Rational).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let q = ProxQuery::new(*yi, 1.0, 0.5).unwrap();
            assert_eq!(*xi, prox::prox_penalty(&q, PenaltyKind::Rational));
        }
    }

    #[test]
    fn direct_threshold_noiseless_blocks() {
        let n = 256;
        let frame = Udwt1d::new(n, 4, Wavelet::Sym3).unwrap();
        let x0 = generate(SignalKind::Blocks, n).unwrap();
        let mut lambda = vec![1e-3; frame.coeff_len()];
        lambda[4 * n..].fill(0.0);
        let a: Vec<f64> = lambda
            .iter()
            .map(|l| if *l > 0.0 { 1.0 / l } else { 0.0 })
            .collect();
        let x = direct_threshold(&x0, &frame, &lambda, &a, PenaltyKind::Atan).unwrap();
        assert!(rmse(&x0, &x).unwrap() < 1e-2);
    }

    #[test]
    fn direct_threshold_rejects_excess_nonconvexity() {
        let id = IdentityFrame::new(2).unwrap();
        assert!(
            direct_threshold(&[3.0, 1.0], &id, &[1.0; 2], &[2.0; 2], PenaltyKind::Log).is_err()
        );
        assert!(direct_threshold(&[3.0], &id, &[1.0; 2], &[0.0; 2], PenaltyKind::Log).is_err());
    }

    #[test]
    fn single_pass_reweighting_equals_l1() {
        let frame = MatrixFrame::toy();
        let y = [0.8, -1.9];
        let lambda = [0.4; 4];
        let mut rw = ReweightConfig::for_noise(1.0);
        rw.outer_iters = 1;
        let a = reweighted_l1(&y, &frame, &lambda, &rw).unwrap();
        let b = l1_denoise(&y, &frame, &lambda, &rw.inner).unwrap();
        assert_eq!(a.x, b.state.x);
        assert_eq!(a.weights, vec![vec![1.0; 4]]);
    }

    #[test]
    fn weights_positive_and_finite() {
        let frame = Udwt1d::new(64, 3, Wavelet::Sym3).unwrap();
        let y: Vec<f64> = (0..64)
            .map(|k| if k < 30 { 2.0 } else { -1.0 } + 0.1 * (k as f64).cos())
            .collect();
        let lambda = vec![0.3; frame.coeff_len()];
        let res = reweighted_l1(&y, &frame, &lambda, &ReweightConfig::for_noise(0.5)).unwrap();
        assert_eq!(res.weights.len(), 4);
        for w in &res.weights {
            assert!(w.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }

    #[test]
    fn large_epsilon_keeps_relative_weights_uniform() {
        let frame = MatrixFrame::toy();
        let y = [0.8, -1.9];
        let lambda = [0.4; 4];
        let mut rw = ReweightConfig::for_noise(1.0);
        rw.epsilon = 1e9;
        rw.outer_iters = 3;
        let res = reweighted_l1(&y, &frame, &lambda, &rw).unwrap();
        for w in &res.weights[1..] {
            let spread = w.iter().cloned().fold(f64::MIN, f64::max)
                / w.iter().cloned().fold(f64::MAX, f64::min);
            assert!((spread - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn reweight_config_validation() {
        let frame = IdentityFrame::new(2).unwrap();
        let mut rw = ReweightConfig::for_noise(0.0);
        assert!(reweighted_l1(&[1.0, 2.0], &frame, &[0.1; 2], &rw).is_err());
        rw.epsilon = 0.1;
        rw.outer_iters = 0;
        assert!(reweighted_l1(&[1.0, 2.0], &frame, &[0.1; 2], &rw).is_err());
    }
}
