//! Scores model predictions against a generated dataset's labels.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autofocus::{ssim_global, SsimParams};
use crate::error::{Error, Result};
use crate::metrics::{iou, mae_mre, mean_std, mse_image, MaskPair, ScalarPair};
use crate::store::{read_grid, DatasetManifest, Predictions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarScore {
    pub truth: f64,
    pub prediction: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl ScalarScore {
    fn new(truth: f64, prediction: f64) -> Self {
        let abs_error = (truth - prediction).abs();
        Self {
            truth,
            prediction,
            abs_error,
            rel_error: abs_error / truth.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskScore {
    pub mse: f64,
    pub ssim: f64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub id: String,
    pub eps_medium: Option<ScalarScore>,
    pub eps_defect: Option<ScalarScore>,
    pub mask: Option<MaskScore>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ScalarSummary {
    pub count: usize,
    pub mae: f64,
    pub mre: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MaskSummary {
    pub count: usize,
    pub mse: f64,
    pub ssim: f64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Means {
    pub eps_medium: Option<ScalarSummary>,
    pub eps_defect: Option<ScalarSummary>,
    pub mask: Option<MaskSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<SampleRow>,
    pub means: Means,
    /// Manifest ids without a prediction.
    pub missing: Vec<String>,
    /// Prediction ids not in the manifest.
    pub unknown: Vec<String>,
}

impl EvaluationReport {
    /// Every manifest sample was predicted and nothing unexpected was seen.
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.unknown.is_empty() && !self.rows.is_empty()
    }
}

fn summarize(scores: &[ScalarScore]) -> Result<Option<ScalarSummary>> {
    if scores.is_empty() {
        return Ok(None);
    }
    let pairs: Vec<ScalarPair> = scores.iter().map(|s| ScalarPair::new(s.truth, s.prediction)).collect();
    let (mae, mre) = mae_mre(&pairs)?;
    Ok(Some(ScalarSummary {
        count: scores.len(),
        mae,
        mre,
    }))
}

/// Medium-permittivity predictions are scored against the SSIM-autofocus
/// label; predicted masks against the rasterized defect mask.
pub fn evaluate(
    manifest: &DatasetManifest,
    dataset_root: &Path,
    predictions: &Predictions,
    predictions_root: &Path,
) -> Result<EvaluationReport> {
    let ssim_params = SsimParams::default();
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for sample in &manifest.samples {
        let Some(pred) = predictions.predictions.get(&sample.id) else {
            missing.push(sample.id.clone());
            continue;
        };
        let mask = match &pred.mask {
            Some(rel) => {
                let truth = read_grid(dataset_root.join(&sample.files.defect_mask))?.to_array2()?;
                let guess = read_grid(predictions_root.join(rel))?.to_array2()?;
                let pair = MaskPair::new(truth, guess)
                    .map_err(|e| Error::Manifest(format!("sample {}: {e}", sample.id)))?;
                Some(MaskScore {
                    mse: mse_image(&pair),
                    ssim: ssim_global(&pair.truth, &pair.prediction, &ssim_params)?,
                    iou: iou(&pair),
                })
            }
            None => None,
        };
        rows.push(SampleRow {
            id: sample.id.clone(),
            eps_medium: pred
                .eps_medium
                .map(|p| ScalarScore::new(sample.labels.eps_medium_ssim, p)),
            eps_defect: pred.eps_defect.map(|p| ScalarScore::new(sample.labels.eps_defect, p)),
            mask,
        });
    }
    let unknown = predictions
        .predictions
        .keys()
        .filter(|id| manifest.sample(id).is_none())
        .cloned()
        .collect();

    let medium: Vec<ScalarScore> = rows.iter().filter_map(|r| r.eps_medium).collect();
    let defect: Vec<ScalarScore> = rows.iter().filter_map(|r| r.eps_defect).collect();
    let masks: Vec<MaskScore> = rows.iter().filter_map(|r| r.mask).collect();
    let mean_of = |f: fn(&MaskScore) -> f64| {
        mean_std(&masks.iter().map(f).collect::<Vec<_>>()).map(|(m, _)| m).unwrap_or(0.0)
    };
    let means = Means {
        eps_medium: summarize(&medium)?,
        eps_defect: summarize(&defect)?,
        mask: (!masks.is_empty()).then(|| MaskSummary {
            count: masks.len(),
            mse: mean_of(|m| m.mse),
            ssim: mean_of(|m| m.ssim),
            iou: mean_of(|m| m.iou),
        }),
    };
    Ok(EvaluationReport {
        rows,
        means,
        missing,
        unknown,
    })
}
