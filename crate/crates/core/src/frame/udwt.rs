//! Undecimated (a trous) wavelet transforms with periodic boundaries.
//!
//! At level `j` the analysis filters are the orthonormal two-channel pair
//! scaled by `1/sqrt(2)` and dilated by `2^(j-1)`. Because the scaled pair
//! satisfies `|H(w)|^2 + |G(w)|^2 = 1` at every frequency, each level is a
//! Parseval map and the whole transform has `A^T A = I`.
//!
//! Coefficients are ordered fine to coarse: detail scale 1, ..., detail
//! scale J, then the coarse band. In 2D each scale holds three subbands
//! (horizontal, vertical, diagonal), each stored row-major.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use super::{BandKind, Frame, Orientation, SubbandLayout};
use crate::error::{Error, Result};

/// Orthonormal wavelet filter family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Wavelet {
    Haar,
    /// Daubechies least-asymmetric filter with three vanishing moments
    /// (6 taps). For three vanishing moments the least-asymmetric filter is
    /// the extremal-phase Daubechies filter reversed.
    #[default]
    Sym3,
}

impl Wavelet {
    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::Sym3 => "sym3",
        }
    }

    /// Scaling (low-pass) filter with `sum h = sqrt(2)`, `sum h^2 = 1`.
    pub fn scaling_filter(self) -> Vec<f64> {
        match self {
            Wavelet::Haar => vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            Wavelet::Sym3 => {
                // Closed form of the 3-vanishing-moment Daubechies filter
                // (Daubechies, Ten Lectures on Wavelets, Table 6.1 values
                // 0.3326705529500826, 0.8068915093110925, ...).
                let z = 10f64.sqrt();
                let w = (5.0 + 2.0 * z).sqrt();
                let s = std::f64::consts::SQRT_2 / 32.0;
                vec![
                    (1.0 + z + w) * s,
                    (5.0 + z + 3.0 * w) * s,
                    (10.0 - 2.0 * z + 2.0 * w) * s,
                    (10.0 - 2.0 * z - 2.0 * w) * s,
                    (5.0 + z - 3.0 * w) * s,
                    (1.0 + z - w) * s,
                ]
            }
        }
    }

    /// Quadrature-mirror high-pass filter `g_k = (-1)^k h_{L-1-k}`.
    pub fn wavelet_filter(self) -> Vec<f64> {
        let h = self.scaling_filter();
        let l = h.len();
        (0..l)
            .map(|k| {
                if k % 2 == 0 {
                    h[l - 1 - k]
                } else {
                    -h[l - 1 - k]
                }
            })
            .collect()
    }

    pub fn vanishing_moments(self) -> usize {
        match self {
            Wavelet::Haar => 1,
            Wavelet::Sym3 => 3,
        }
    }

    /// Filter pair scaled for the undecimated Parseval bank.
    fn undecimated_pair(self) -> (Vec<f64>, Vec<f64>) {
        let lo = self
            .scaling_filter()
            .iter()
            .map(|v| v * FRAC_1_SQRT_2)
            .collect();
        let hi = self
            .wavelet_filter()
            .iter()
            .map(|v| v * FRAC_1_SQRT_2)
            .collect();
        (lo, hi)
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Wavelet::Haar),
            "sym3" | "daub3vm" | "la6" => Ok(Wavelet::Sym3),
            other => Err(Error::Config(format!("unknown wavelet '{other}'"))),
        }
    }
}

fn check_size(len: usize, scales: usize, what: &str) -> Result<()> {
    if scales == 0 {
        return Err(Error::InvalidSize("UDWT needs at least one scale".into()));
    }
    if !len.is_power_of_two() || scales >= usize::BITS as usize || len < (1usize << scales) {
        return Err(Error::InvalidSize(format!(
            "{what} = {len} must be a power of two >= 2^{scales}"
        )));
    }
    Ok(())
}

/// Circular convolution with a filter dilated by `step`:
/// `out[k] = sum_t f[t] x[(k - t step) mod n]`, over a strided lane.
#[inline]
fn filter_lane(
    f: &[f64],
    step: usize,
    src: &[f64],
    base: usize,
    stride: usize,
    len: usize,
    dst: &mut [f64],
) {
    for k in 0..len {
        dst[base + k * stride] = 0.0;
    }
    for (t, &ft) in f.iter().enumerate() {
        let o = (t * step) % len;
        for k in o..len {
            dst[base + k * stride] += ft * src[base + (k - o) * stride];
        }
        for k in 0..o {
            dst[base + k * stride] += ft * src[base + (k + len - o) * stride];
        }
    }
}

/// Adjoint of [`filter_lane`] (circular correlation), accumulated into `dst`.
#[inline]
fn filter_lane_adjoint(
    f: &[f64],
    step: usize,
    src: &[f64],
    base: usize,
    stride: usize,
    len: usize,
    dst: &mut [f64],
) {
    for (t, &ft) in f.iter().enumerate() {
        let o = (t * step) % len;
        for k in 0..len - o {
            dst[base + k * stride] += ft * src[base + (k + o) * stride];
        }
        for k in len - o..len {
            dst[base + k * stride] += ft * src[base + (k + o - len) * stride];
        }
    }
}

/// 1D undecimated wavelet transform, `m = (J + 1) n`, `r = 1`.
#[derive(Debug, Clone)]
pub struct Udwt1d {
    n: usize,
    scales: usize,
    wavelet: Wavelet,
    lo: Vec<f64>,
    hi: Vec<f64>,
    layout: SubbandLayout,
}

impl Udwt1d {
    pub fn new(n: usize, scales: usize, wavelet: Wavelet) -> Result<Self> {
        check_size(n, scales, "signal length")?;
        let (lo, hi) = wavelet.undecimated_pair();
        let layout = SubbandLayout::from_lengths(
            (1..=scales)
                .map(|scale| {
                    (
                        BandKind::Detail {
                            scale,
                            orientation: Orientation::None,
                        },
                        n,
                    )
                })
                .chain(std::iter::once((BandKind::Coarse { scale: scales }, n))),
        );
        Ok(Udwt1d {
            n,
            scales,
            wavelet,
            lo,
            hi,
            layout,
        })
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn wavelet(&self) -> Wavelet {
        self.wavelet
    }
}

impl Frame for Udwt1d {
    fn input_len(&self) -> usize {
        self.n
    }

    fn coeff_len(&self) -> usize {
        (self.scales + 1) * self.n
    }

    fn frame_constant(&self) -> f64 {
        1.0
    }

    fn analyze_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut approx = x.to_vec();
        let mut next = vec![0.0; n];
        for j in 0..self.scales {
            let step = 1 << j;
            filter_lane(
                &self.hi,
                step,
                &approx,
                0,
                1,
                n,
                &mut out[j * n..(j + 1) * n],
            );
            filter_lane(&self.lo, step, &approx, 0, 1, n, &mut next);
            std::mem::swap(&mut approx, &mut next);
        }
        out[self.scales * n..].copy_from_slice(&approx);
    }

    fn adjoint_into(&self, c: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut approx = c[self.scales * n..].to_vec();
        let mut prev = vec![0.0; n];
        for j in (0..self.scales).rev() {
            let step = 1 << j;
            prev.fill(0.0);
            filter_lane_adjoint(&self.lo, step, &approx, 0, 1, n, &mut prev);
            filter_lane_adjoint(&self.hi, step, &c[j * n..(j + 1) * n], 0, 1, n, &mut prev);
            std::mem::swap(&mut approx, &mut prev);
        }
        out.copy_from_slice(&approx);
    }

    fn layout(&self) -> &SubbandLayout {
        &self.layout
    }
}

/// Separable 2D undecimated wavelet transform on a row-major `h x w`
/// image, `m = (3J + 1) h w`, `r = 1`.
#[derive(Debug, Clone)]
pub struct Udwt2d {
    height: usize,
    width: usize,
    scales: usize,
    wavelet: Wavelet,
    lo: Vec<f64>,
    hi: Vec<f64>,
    layout: SubbandLayout,
}

impl Udwt2d {
    pub fn new(height: usize, width: usize, scales: usize, wavelet: Wavelet) -> Result<Self> {
        check_size(height, scales, "image height")?;
        check_size(width, scales, "image width")?;
        let (lo, hi) = wavelet.undecimated_pair();
        let area = height * width;
        let mut bands = Vec::with_capacity(3 * scales + 1);
        for scale in 1..=scales {
            for orientation in [
                Orientation::Horizontal,
                Orientation::Vertical,
                Orientation::Diagonal,
            ] {
                bands.push((BandKind::Detail { scale, orientation }, area));
            }
        }
        bands.push((BandKind::Coarse { scale: scales }, area));
        Ok(Udwt2d {
            height,
            width,
            scales,
            wavelet,
            lo,
            hi,
            layout: SubbandLayout::from_lengths(bands),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn wavelet(&self) -> Wavelet {
        self.wavelet
    }

    fn rows(&self, f: &[f64], step: usize, src: &[f64], dst: &mut [f64]) {
        for r in 0..self.height {
            filter_lane(f, step, src, r * self.width, 1, self.width, dst);
        }
    }

    fn cols(&self, f: &[f64], step: usize, src: &[f64], dst: &mut [f64]) {
        for c in 0..self.width {
            filter_lane(f, step, src, c, self.width, self.height, dst);
        }
    }

    fn rows_adjoint(&self, f: &[f64], step: usize, src: &[f64], dst: &mut [f64]) {
        for r in 0..self.height {
            filter_lane_adjoint(f, step, src, r * self.width, 1, self.width, dst);
        }
    }

    fn cols_adjoint(&self, f: &[f64], step: usize, src: &[f64], dst: &mut [f64]) {
        for c in 0..self.width {
            filter_lane_adjoint(f, step, src, c, self.width, self.height, dst);
        }
    }
}

impl Frame for Udwt2d {
    fn input_len(&self) -> usize {
        self.height * self.width
    }

    fn coeff_len(&self) -> usize {
        (3 * self.scales + 1) * self.height * self.width
    }

    fn frame_constant(&self) -> f64 {
        1.0
    }

    fn analyze_into(&self, x: &[f64], out: &mut [f64]) {
        let area = self.height * self.width;
        let mut approx = x.to_vec();
        let mut row_lo = vec![0.0; area];
        let mut row_hi = vec![0.0; area];
        for j in 0..self.scales {
            let step = 1 << j;
            self.rows(&self.lo, step, &approx, &mut row_lo);
            self.rows(&self.hi, step, &approx, &mut row_hi);
            let base = 3 * j * area;
            self.cols(&self.lo, step, &row_hi, &mut out[base..base + area]);
            self.cols(
                &self.hi,
                step,
                &row_lo,
                &mut out[base + area..base + 2 * area],
            );
            self.cols(
                &self.hi,
                step,
                &row_hi,
                &mut out[base + 2 * area..base + 3 * area],
            );
            self.cols(&self.lo, step, &row_lo, &mut approx);
        }
        out[3 * self.scales * area..].copy_from_slice(&approx);
    }

    fn adjoint_into(&self, c: &[f64], out: &mut [f64]) {
        let area = self.height * self.width;
        let mut approx = c[3 * self.scales * area..].to_vec();
        let mut row_lo = vec![0.0; area];
        let mut row_hi = vec![0.0; area];
        for j in (0..self.scales).rev() {
            let step = 1 << j;
            let base = 3 * j * area;
            row_lo.fill(0.0);
            row_hi.fill(0.0);
            self.cols_adjoint(&self.lo, step, &approx, &mut row_lo);
            self.cols_adjoint(
                &self.hi,
                step,
                &c[base + area..base + 2 * area],
                &mut row_lo,
            );
            self.cols_adjoint(&self.lo, step, &c[base..base + area], &mut row_hi);
            self.cols_adjoint(
                &self.hi,
                step,
                &c[base + 2 * area..base + 3 * area],
                &mut row_hi,
            );
            approx.fill(0.0);
            self.rows_adjoint(&self.lo, step, &row_lo, &mut approx);
            self.rows_adjoint(&self.hi, step, &row_hi, &mut approx);
        }
        out.copy_from_slice(&approx);
    }

    fn layout(&self) -> &SubbandLayout {
        &self.layout
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{norm, verify_parseval};

    #[test]
    fn sym3_filter_is_orthonormal_with_three_moments() {
        let h = Wavelet::Sym3.scaling_filter();
        assert!((h[0] - 0.332_670_552_950_082_6).abs() < 1e-12);
        assert!((h[1] - 0.806_891_509_311_092_5).abs() < 1e-12);
        assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-14);
        for shift in [0usize, 2, 4] {
            let c: f64 = (0..h.len() - shift).map(|k| h[k] * h[k + shift]).sum();
            let target = if shift == 0 { 1.0 } else { 0.0 };
            assert!((c - target).abs() < 1e-14, "shift {shift}: {c}");
        }
        let g = Wavelet::Sym3.wavelet_filter();
        for p in 0..3 {
            let moment: f64 = g
                .iter()
                .enumerate()
                .map(|(k, v)| v * (k as f64).powi(p))
                .sum();
            assert!(moment.abs() < 1e-12, "moment {p}: {moment}");
        }
    }

    #[test]
    fn parseval_1d() {
        for (n, j) in [(256, 4), (128, 3), (16, 4), (8, 1)] {
            for wavelet in [Wavelet::Haar, Wavelet::Sym3] {
                let f = Udwt1d::new(n, j, wavelet).unwrap();
                let rep = verify_parseval(&f, 20, 1e-10);
                assert!(rep.passed(), "{n} {j} {wavelet}: {rep:?}");
            }
        }
    }

    #[test]
    fn constants_have_no_detail() {
        let f = Udwt1d::new(64, 4, Wavelet::Sym3).unwrap();
        let c = f.analyze(&vec![3.0; 64]);
        assert!(c[..4 * 64].iter().all(|v| v.abs() < 1e-12));
        // coarse band carries the constant with unit gain
        assert!(c[4 * 64..].iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn quadratics_have_no_detail_away_from_wrap() {
        // Three vanishing moments annihilate polynomials of degree 2.
        let n = 128;
        let f = Udwt1d::new(n, 1, Wavelet::Sym3).unwrap();
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64;
                0.5 * t * t - 3.0 * t + 1.0
            })
            .collect();
        let c = f.analyze(&x);
        for (k, v) in c.iter().enumerate().take(n).skip(8) {
            assert!(v.abs() < 1e-9, "k={k}: {v}");
        }
    }

    #[test]
    fn parseval_2d() {
        let f = Udwt2d::new(64, 64, 3, Wavelet::Sym3).unwrap();
        assert_eq!(f.coeff_len(), 10 * 64 * 64);
        assert!(verify_parseval(&f, 3, 1e-10).passed());
        let g = Udwt2d::new(16, 32, 2, Wavelet::Haar).unwrap();
        assert!(verify_parseval(&g, 5, 1e-10).passed());
    }

    #[test]
    fn zero_image_and_atom_norms() {
        let f = Udwt2d::new(16, 16, 2, Wavelet::Sym3).unwrap();
        assert!(f.analyze(&vec![0.0; 256]).iter().all(|&v| v == 0.0));
        for idx in [0, 17, 300, 256 * 6 + 5] {
            let mut e = vec![0.0; f.coeff_len()];
            e[idx] = 1.0;
            let atom = f.adjoint(&e);
            assert!(norm(&atom) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn size_validation() {
        assert!(Udwt1d::new(100, 2, Wavelet::Sym3).is_err());
        assert!(Udwt1d::new(8, 4, Wavelet::Sym3).is_err());
        assert!(Udwt1d::new(8, 0, Wavelet::Sym3).is_err());
        assert!(Udwt2d::new(64, 48, 2, Wavelet::Sym3).is_err());
        assert!(Udwt2d::new(4, 64, 3, Wavelet::Sym3).is_err());
    }

    #[test]
    fn layout_orders_fine_to_coarse() {
        let f = Udwt1d::new(32, 3, Wavelet::Sym3).unwrap();
        let bands = f.layout().bands();
        assert_eq!(bands.len(), 4);
        assert_eq!(bands[0].detail_scale(), Some(1));
        assert_eq!(bands[2].detail_scale(), Some(3));
        assert!(bands[3].is_coarse());
        assert!(f.layout().is_partition());
        let g = Udwt2d::new(16, 16, 2, Wavelet::Sym3).unwrap();
        assert_eq!(g.layout().bands().len(), 7);
        assert_eq!(g.layout().coeff_len(), g.coeff_len());
    }
}
