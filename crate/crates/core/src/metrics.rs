//! Evaluation metrics for scalar and per-pixel predictions.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarPair {
    pub truth: f64,
    pub prediction: f64,
}

impl ScalarPair {
    pub fn new(truth: f64, prediction: f64) -> Self {
        Self { truth, prediction }
    }
}

/// Mean absolute error and mean relative error `|y − ŷ| / |y|`.
pub fn mae_mre(pairs: &[ScalarPair]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::Parameter("no pairs to score".into()));
    }
    let (mut abs, mut rel) = (0.0, 0.0);
    for p in pairs {
        if !(p.truth.is_finite() && p.prediction.is_finite()) {
            return Err(Error::Domain(format!("non-finite pair {p:?}")));
        }
        if p.truth == 0.0 {
            return Err(Error::Domain("relative error undefined for a zero truth value".into()));
        }
        let e = (p.truth - p.prediction).abs();
        abs += e;
        rel += e / p.truth.abs();
    }
    let n = pairs.len() as f64;
    Ok((abs / n, rel / n))
}

pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    pub truth: Array2<f64>,
    pub prediction: Array2<f64>,
    pub binarize_threshold: f64,
}

impl MaskPair {
    pub fn new(truth: Array2<f64>, prediction: Array2<f64>) -> Result<Self> {
        if truth.dim() != prediction.dim() {
            return Err(Error::Shape(format!(
                "mask dimensions differ: {:?} vs {:?}",
                truth.dim(),
                prediction.dim()
            )));
        }
        Ok(Self {
            truth,
            prediction,
            binarize_threshold: DEFAULT_BINARIZE_THRESHOLD,
        })
    }
}

/// Intersection over union after thresholding both masks (`v >= threshold`).
/// Two empty masks score 1.
pub fn iou(m: &MaskPair) -> f64 {
    let t = m.binarize_threshold;
    let (mut inter, mut union) = (0usize, 0usize);
    for (a, b) in m.truth.iter().zip(m.prediction.iter()) {
        let (a, b) = (*a >= t, *b >= t);
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn mse_image(m: &MaskPair) -> f64 {
    let n = m.truth.len();
    if n == 0 {
        return 0.0;
    }
    m.truth
        .iter()
        .zip(m.prediction.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n as f64
}

/// Counts per half-open bin `[edges[i], edges[i+1])`; values outside are ignored.
pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Vec<usize>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter(
            "histogram needs at least two strictly increasing edges".into(),
        ));
    }
    let mut counts = vec![0; edges.len() - 1];
    for &v in values {
        if !(v >= edges[0] && v < edges[edges.len() - 1]) {
            continue;
        }
        // index of the last edge <= v
        let k = edges.partition_point(|&e| e <= v) - 1;
        counts[k] += 1;
    }
    Ok(counts)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
