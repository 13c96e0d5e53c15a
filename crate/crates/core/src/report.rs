//! Score report structures shared by the evaluation pipeline, the
//! serializers in [`crate::io`] and the CLI renderers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metrics::PrCurve;
use crate::Real;

/// Formats a score in [0, 1] as a percentage with one decimal, the
/// rounding used by leaderboard tables.
pub fn percent_1dp(score: Real) -> String {
    format!("{:.1}", score * 100.0)
}

/// Recall or AP at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScore {
    /// Threshold in grid units (diameter fraction, px at 640 width,
    /// VSD ratio, or IoU depending on the error function).
    pub threshold: Real,
    /// Misalignment tolerance as a diameter fraction; VSD only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Real>,
    pub value: Real,
}

/// PR curve recorded for one object at one grid threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveAtThreshold {
    pub threshold: Real,
    pub curve: PrCurve,
}

/// Scores of a single pose-error function (or box IoU) on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFnScores {
    /// AR or AP for this error function.
    pub score: Real,
    pub percent_1dp: String,
    pub per_threshold: Vec<ThresholdScore>,
    pub per_object: BTreeMap<u32, Real>,
    /// PR curves per object and threshold; detection tasks only.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub curves: BTreeMap<u32, Vec<CurveAtThreshold>>,
}

/// Scores of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetScores {
    /// AR_d or AP_d.
    pub score: Real,
    pub percent_1dp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_image_time_s: Option<Real>,
    pub num_targeted_images: usize,
    pub num_eligible_gts: usize,
    pub num_predictions: usize,
    pub per_error: BTreeMap<String, ErrorFnScores>,
    /// Per-object score averaged over the error functions.
    pub per_object: BTreeMap<u32, Real>,
}

/// Full evaluation result: per-dataset scores plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// "loc6d", "det6d" or "det2d".
    pub task: String,
    /// "ar" for localization, "ap" for the detection tasks.
    pub score_kind: String,
    /// Mean of the per-dataset scores.
    pub overall: Real,
    pub overall_percent_1dp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_image_time_s: Option<Real>,
    pub datasets: BTreeMap<String, DatasetScores>,
}
