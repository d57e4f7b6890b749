//! Tight-frame analysis operators: `A: R^n -> R^m` with `A^T A = r I`.

mod matrix;
mod udwt;

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use matrix::MatrixFrame;
pub use udwt::{Udwt1d, Udwt2d, Wavelet};

/// A linear analysis operator with its adjoint and frame constant.
///
/// Implementations are immutable; `analyze` and `adjoint` may be called
/// concurrently.
pub trait Frame: Send + Sync {
    /// Signal dimension `n`.
    fn input_len(&self) -> usize;

    /// Coefficient dimension `m >= n`.
    fn coeff_len(&self) -> usize;

    /// Frame constant `r` in `A^T A = r I`.
    fn frame_constant(&self) -> f64;

    /// `out = A x`.
    fn analyze_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = A^T c`.
    fn adjoint_into(&self, c: &[f64], out: &mut [f64]);

    fn layout(&self) -> &SubbandLayout;

    fn analyze(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.coeff_len()];
        self.analyze_into(x, &mut out);
        out
    }

    fn adjoint(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.input_len()];
        self.adjoint_into(c, &mut out);
        out
    }
}

/// Orientation of a subband.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// 1D bands and bands of non-wavelet frames.
    None,
    /// High-pass along rows, low-pass along columns.
    Horizontal,
    /// Low-pass along rows, high-pass along columns.
    Vertical,
    Diagonal,
}

/// Role of a subband.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandKind {
    /// Detail coefficients at scale `j >= 1` (1 is finest).
    Detail {
        scale: usize,
        orientation: Orientation,
    },
    /// Low-pass residual after `scale` levels.
    Coarse { scale: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subband {
    pub id: usize,
    pub kind: BandKind,
    pub range: Range<usize>,
}

impl Subband {
    /// Detail scale, or `None` for the coarse band.
    pub fn detail_scale(&self) -> Option<usize> {
        match self.kind {
            BandKind::Detail { scale, .. } => Some(scale),
            BandKind::Coarse { .. } => None,
        }
    }

    pub fn is_coarse(&self) -> bool {
        matches!(self.kind, BandKind::Coarse { .. })
    }
}

/// Mapping from coefficient indices to subbands. Ranges partition `[0, m)`
/// in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandLayout {
    bands: Vec<Subband>,
}

impl SubbandLayout {
    /// Builds a layout from consecutive band lengths.
    pub fn from_lengths(kinds_and_lengths: impl IntoIterator<Item = (BandKind, usize)>) -> Self {
        let mut start = 0;
        let bands = kinds_and_lengths
            .into_iter()
            .enumerate()
            .map(|(id, (kind, len))| {
                let band = Subband {
                    id,
                    kind,
                    range: start..start + len,
                };
                start += len;
                band
            })
            .collect();
        SubbandLayout { bands }
    }

    /// One detail band covering all `m` coefficients.
    pub fn single(m: usize) -> Self {
        Self::from_lengths([(
            BandKind::Detail {
                scale: 1,
                orientation: Orientation::None,
            },
            m,
        )])
    }

    pub fn bands(&self) -> &[Subband] {
        &self.bands
    }

    pub fn coeff_len(&self) -> usize {
        self.bands.last().map_or(0, |b| b.range.end)
    }

    /// Number of detail scales.
    pub fn max_scale(&self) -> usize {
        self.bands
            .iter()
            .filter_map(Subband::detail_scale)
            .max()
            .unwrap_or(0)
    }

    /// Checks that ranges are contiguous and start at zero.
    pub fn is_partition(&self) -> bool {
        let mut next = 0;
        for b in &self.bands {
            if b.range.start != next || b.range.end < b.range.start {
                return false;
            }
            next = b.range.end;
        }
        true
    }
}

/// Degenerate frame `A = I`, `r = 1`.
#[derive(Debug, Clone)]
pub struct IdentityFrame {
    n: usize,
    layout: SubbandLayout,
}

impl IdentityFrame {
    pub fn new(n: usize) -> crate::Result<Self> {
        if n == 0 {
            return Err(crate::Error::InvalidSize(
                "identity frame needs n >= 1".into(),
            ));
        }
        Ok(IdentityFrame {
            n,
            layout: SubbandLayout::single(n),
        })
    }
}

impl Frame for IdentityFrame {
    fn input_len(&self) -> usize {
        self.n
    }

    fn coeff_len(&self) -> usize {
        self.n
    }

    fn frame_constant(&self) -> f64 {
        1.0
    }

    fn analyze_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn adjoint_into(&self, c: &[f64], out: &mut [f64]) {
        out.copy_from_slice(c);
    }

    fn layout(&self) -> &SubbandLayout {
        &self.layout
    }
}

/// Result of [`verify_parseval`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParsevalReport {
    pub trials: usize,
    pub r: f64,
    /// `max ||A^T A x - r x|| / ||x||`.
    pub max_parseval_error: f64,
    /// `max |<Ax, c> - <x, A^T c>| / (||Ax|| ||c||)`.
    pub max_adjoint_error: f64,
    pub tol: f64,
}

impl ParsevalReport {
    pub fn passed(&self) -> bool {
        self.max_parseval_error <= self.tol && self.max_adjoint_error <= self.tol
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Probes `A^T A = r I` and the adjoint identity on `trials` random vectors
/// drawn from a fixed seed.
pub fn verify_parseval(frame: &dyn Frame, trials: usize, tol: f64) -> ParsevalReport {
    verify_parseval_seeded(frame, trials, tol, 0x5eed_f4a3)
}

pub fn verify_parseval_seeded(
    frame: &dyn Frame,
    trials: usize,
    tol: f64,
    seed: u64,
) -> ParsevalReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = frame.frame_constant();
    let (n, m) = (frame.input_len(), frame.coeff_len());
    let mut max_parseval_error: f64 = 0.0;
    let mut max_adjoint_error: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ax = frame.analyze(&x);
        let atax = frame.adjoint(&ax);
        let diff: f64 = atax
            .iter()
            .zip(&x)
            .map(|(u, v)| (u - r * v).powi(2))
            .sum::<f64>()
            .sqrt();
        max_parseval_error = max_parseval_error.max(diff / norm(&x));
        let atc = frame.adjoint(&c);
        let lhs = dot(&ax, &c);
        let rhs = dot(&x, &atc);
        max_adjoint_error = max_adjoint_error.max((lhs - rhs).abs() / (norm(&ax) * norm(&c)));
    }
    ParsevalReport {
        trials: trials.max(1),
        r,
        max_parseval_error,
        max_adjoint_error,
        tol,
    }
}
