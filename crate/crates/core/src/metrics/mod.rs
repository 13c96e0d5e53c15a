//! Matching of predictions to ground truth and AR/AP aggregation.

mod aggregate;
mod matching;
mod types;

pub use aggregate::{
    ap_dataset, ap_dataset_6d, ap_from_curve, ap_object, ap_overall, ar_dataset, ar_overall,
    average_recall, mean_image_time, RecallCounts,
};
pub use matching::{
    build_pr_curve, cap_detections_per_image, correctness, match_localization, LocalizationMatch,
    SweepDetection,
};
pub use types::{
    default_grid, Detection2D, GtInstance, PoseEstimate, PrCurve, TargetEntry, TargetList,
    ThresholdGrid, MAX_DETECTIONS_PER_IMAGE, MIN_VISIB_FRACT,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },
    #[error("no eligible ground-truth instances in the dataset")]
    EmptyGroundTruth,
    #[error("invalid threshold grid: {reason}")]
    InvalidGrid { reason: String },
}
