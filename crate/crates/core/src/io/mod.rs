//! Parsers and writers for the on-disk formats: PLY models, JSON scene
//! annotations and targets, submission CSVs, 16-bit depth PNGs and
//! score reports.
//!
//! All parsers are pure per file and never normalize numeric values
//! beyond the explicit depth-scale application; writers produce
//! deterministic bytes so a write→parse→write cycle is bit-identical.

mod dataset;
mod depth_png;
mod models;
mod ply;
mod report_file;
mod scene;
mod submission;
mod targets;

pub use dataset::{load_dataset, Dataset, DatasetPaths, LoadOptions, SceneAnnotations};
pub use depth_png::{load_depth, write_depth, DepthPngError};
pub use models::{
    parse_models_info, write_models_info, ModelInfo, ModelsError, ModelsInfo,
};
pub use ply::{parse_ply, write_ply, PlyError};
pub use report_file::{parse_report, write_report, ReportError, ReportFormat};
pub use scene::{
    combine_scene_annotations, parse_scene_camera, parse_scene_gt, parse_scene_gt_info,
    write_scene_camera, write_scene_gt, write_scene_gt_info, RawGtEntry, RawGtInfoEntry,
    SceneCameraEntry, SceneError,
};
pub use submission::{
    parse_detection_submission, parse_pose_submission, write_detection_submission,
    write_pose_submission, RowError, RowErrorKind, SubmissionError, DETECTION_HEADER, POSE_HEADER,
};
pub use targets::{parse_targets, write_targets, TargetsError};

use std::path::PathBuf;

use thiserror::Error;

/// Umbrella error for dataset loading: a format error tagged with the
/// file it came from, or a plain filesystem error.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<IoError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ply(#[from] PlyError),
    #[error(transparent)]
    Models(#[from] ModelsError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Targets(#[from] TargetsError),
    #[error(transparent)]
    Submission(#[from] SubmissionError),
    #[error(transparent)]
    Depth(#[from] DepthPngError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl IoError {
    /// Tags an error with the path of the file being processed.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        IoError::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|e| IoError::from(e).in_file(path))
}
