use super::{Frame, SubbandLayout};
use crate::error::{Error, Result};

/// Tightness tolerance on `||A^T A - r I||_F / r`.
const TIGHT_TOL: f64 = 1e-10;

/// Dense `m x n` frame given by its rows.
#[derive(Debug, Clone)]
pub struct MatrixFrame {
    n: usize,
    m: usize,
    r: f64,
    // row-major m x n
    data: Vec<f64>,
    layout: SubbandLayout,
}

impl MatrixFrame {
    /// Builds the frame and detects `r = trace(A^T A) / n`. Fails unless
    /// `A^T A = r I` to relative tolerance `1e-10`.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 {
            return Err(Error::InvalidSize(
                "matrix frame needs at least one row and column".into(),
            ));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "matrix row length",
                expected: n,
                actual: bad.len(),
            });
        }
        if m < n {
            return Err(Error::InvalidSize(format!(
                "frame needs m >= n, got {m} x {n}"
            )));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }

        let mut gram = vec![0.0; n * n];
        for row in rows {
            for i in 0..n {
                for j in 0..n {
                    gram[i * n + j] += row[i] * row[j];
                }
            }
        }
        let r = (0..n).map(|i| gram[i * n + i]).sum::<f64>() / n as f64;
        let deviation = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let target = if i == j { r } else { 0.0 };
                (gram[i * n + j] - target).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        if !(r > 0.0) || deviation > TIGHT_TOL * r {
            return Err(Error::NotTight { deviation, r });
        }
        Ok(MatrixFrame {
            n,
            m,
            r,
            data,
            layout: SubbandLayout::single(m),
        })
    }

    /// The 4 x 2 frame with `A^T = [1 1 1 1; 1 1 -1 -1]`, `r = 4`.
    pub fn toy() -> Self {
        Self::new(&[
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, -1.0],
        ])
        .expect("toy frame is tight")
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl Frame for MatrixFrame {
    fn input_len(&self) -> usize {
        self.n
    }

    fn coeff_len(&self) -> usize {
        self.m
    }

    fn frame_constant(&self) -> f64 {
        self.r
    }

    fn analyze_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn adjoint_into(&self, c: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &ci) in c.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * ci;
            }
        }
    }

    fn layout(&self) -> &SubbandLayout {
        &self.layout
    }
}
