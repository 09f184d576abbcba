//! Orthogonal frames with a prescribed first column, built from a single
//! Householder reflection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A d-by-d orthogonal matrix stored row-major; the first column is the
/// orientation the frame was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    dim: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for k in 0..dim {
            data[k * dim + k] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    /// First column of the matrix.
    pub fn orientation(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.entry(r, 0)).collect()
    }

    /// `M y`: map weight-frame coordinates back to ambient coordinates.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for r in 0..d {
            let mut acc = 0.0;
            for c in 0..d {
                acc += self.data[r * d + c] * y[c];
            }
            out[r] = acc;
        }
        out
    }

    /// `M^T x`: express an ambient point in weight-frame coordinates.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for c in 0..d {
            let mut acc = 0.0;
            for r in 0..d {
                acc += self.data[r * d + c] * x[r];
            }
            out[c] = acc;
        }
        out
    }

    /// Maximum absolute entry of `M^T M - I`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for r in 0..d {
                    acc += self.entry(r, i) * self.entry(r, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }
}

/// Deterministic orthogonal completion of a unit vector into a frame whose
/// first column equals that vector.
///
/// The frame is the reflection across the bisector of `e1` and `theta`
/// (identity when `theta = e1`); when `theta` points into the half-space
/// `theta_1 > 0` the reflection through `e1 + theta` composed with a sign flip
/// of the first column is used instead, which keeps the construction well
/// conditioned on the whole sphere.
pub fn orthogonal_frame(theta: &[f64]) -> Result<Frame> {
    let d = theta.len();
    if d < 1 {
        return Err(Error::Domain("empty orientation vector".into()));
    }
    let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return Err(Error::Domain("orientation vector must be nonzero".into()));
    }
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "orientation must be a unit vector within 1e-9 (|theta| = {norm})"
        )));
    }
    let unit: Vec<f64> = theta.iter().map(|t| t / norm).collect();

    let mut frame = Frame::identity(d);
    if unit[0] <= 0.0 {
        // reflection across the bisector of e1 and theta maps e1 to theta
        let mut w: Vec<f64> = unit.iter().map(|&t| -t).collect();
        w[0] += 1.0;
        householder_into(&mut frame, &w);
    } else {
        // reflect e1 onto -theta, then flip the sign of the first column
        let mut w = unit.clone();
        w[0] += 1.0;
        householder_into(&mut frame, &w);
        for r in 0..d {
            frame.data[r * d] = -frame.data[r * d];
        }
    }
    Ok(frame)
}

fn householder_into(frame: &mut Frame, w: &[f64]) {
    let d = frame.dim;
    let nsq: f64 = w.iter().map(|x| x * x).sum();
    if nsq == 0.0 {
        return;
    }
    let scale = 2.0 / nsq;
    for r in 0..d {
        for c in 0..d {
            let id = if r == c { 1.0 } else { 0.0 };
            frame.data[r * d + c] = id - scale * w[r] * w[c];
        }
    }
}
