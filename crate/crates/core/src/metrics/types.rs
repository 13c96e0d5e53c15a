use std::collections::BTreeMap;

use super::MetricsError;
use crate::pose_error::PoseErrorKind;
use crate::{Box2, Pose, Real};

/// Ground-truth instances visible from less than this fraction are
/// excluded from recall denominators and act as ignore regions in
/// detection matching.
pub const MIN_VISIB_FRACT: Real = 0.1;

/// At most this many detections per image are scored, most confident
/// first.
pub const MAX_DETECTIONS_PER_IMAGE: usize = 100;

/// One annotated object instance in one image.
#[derive(Debug, Clone, PartialEq)]
pub struct GtInstance {
    /// Position of the instance in the scene_gt file for its image.
    pub gt_id: usize,
    pub obj_id: u32,
    pub pose: Pose,
    pub visib_fract: Real,
    pub bbox: Box2,
}

impl GtInstance {
    pub fn is_eligible(&self) -> bool {
        self.visib_fract >= MIN_VISIB_FRACT
    }
}

/// One pose prediction from a submission.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub scene_id: u32,
    pub im_id: u32,
    pub obj_id: u32,
    pub pose: Pose,
    pub score: Real,
    pub time_s: Real,
}

/// One 2D detection from a submission.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection2D {
    pub scene_id: u32,
    pub im_id: u32,
    pub obj_id: u32,
    pub bbox: Box2,
    pub score: Real,
    pub time_s: Real,
}

/// One (object, instance count) entry of an image's target list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetEntry {
    pub obj_id: u32,
    pub inst_count: u32,
}

/// The evaluation targets: per (scene, image), which objects are to be
/// evaluated and how many instances of each are visible enough.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetList {
    per_image: BTreeMap<(u32, u32), Vec<TargetEntry>>,
}

impl TargetList {
    pub fn new(per_image: BTreeMap<(u32, u32), Vec<TargetEntry>>) -> Self {
        Self { per_image }
    }

    pub fn images(&self) -> impl Iterator<Item = (&(u32, u32), &Vec<TargetEntry>)> {
        self.per_image.iter()
    }

    pub fn image_keys(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.per_image.keys().copied()
    }

    pub fn contains_image(&self, scene_id: u32, im_id: u32) -> bool {
        self.per_image.contains_key(&(scene_id, im_id))
    }

    pub fn entries(&self, scene_id: u32, im_id: u32) -> &[TargetEntry] {
        self.per_image
            .get(&(scene_id, im_id))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn num_images(&self) -> usize {
        self.per_image.len()
    }

    /// Scene ids referenced by the targets, deduplicated and ordered.
    pub fn scene_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.per_image.keys().map(|k| k.0).collect();
        ids.dedup();
        ids
    }

    /// Union of targeted object ids over all images, ordered.
    pub fn object_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .per_image
            .values()
            .flatten()
            .map(|e| e.obj_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Correctness thresholds for one pose-error function.
///
/// Threshold units depend on the kind: fractions of the object diameter
/// for MSSD and VSD's `taus`, pixels at a 640-wide image for MSPD
/// (scaled by `width/640` per image), absolute ratios for VSD, IoU
/// values for 2D boxes. `taus` is non-empty only for VSD.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid {
    pub kind: PoseErrorKind,
    pub thresholds: Vec<Real>,
    pub taus: Vec<Real>,
}

impl ThresholdGrid {
    pub fn new(
        kind: PoseErrorKind,
        thresholds: Vec<Real>,
        taus: Vec<Real>,
    ) -> Result<Self, MetricsError> {
        let check = |name: &str, v: &[Real]| -> Result<(), MetricsError> {
            if v.is_empty() {
                return Err(MetricsError::InvalidGrid {
                    reason: format!("{name} list is empty"),
                });
            }
            if v.iter().any(|t| !t.is_finite() || *t <= 0.0) {
                return Err(MetricsError::InvalidGrid {
                    reason: format!("{name} values must be positive and finite"),
                });
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(MetricsError::InvalidGrid {
                    reason: format!("{name} values must be strictly increasing"),
                });
            }
            Ok(())
        };
        check("threshold", &thresholds)?;
        match kind {
            PoseErrorKind::Vsd => check("tau", &taus)?,
            _ => {
                if !taus.is_empty() {
                    return Err(MetricsError::InvalidGrid {
                        reason: format!("taus are only valid for vsd, not {kind}"),
                    });
                }
            }
        }
        Ok(Self {
            kind,
            thresholds,
            taus,
        })
    }

    /// Number of (threshold [, tau]) combinations.
    pub fn combinations(&self) -> usize {
        self.thresholds.len() * self.taus.len().max(1)
    }
}

/// Published-comparable default grid for each error function.
pub fn default_grid(kind: PoseErrorKind) -> ThresholdGrid {
    let steps_5_to_50 = vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50];
    match kind {
        PoseErrorKind::Mssd => ThresholdGrid {
            kind,
            thresholds: steps_5_to_50,
            taus: vec![],
        },
        PoseErrorKind::Mspd => ThresholdGrid {
            kind,
            thresholds: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0],
            taus: vec![],
        },
        PoseErrorKind::Vsd => ThresholdGrid {
            kind,
            thresholds: steps_5_to_50.clone(),
            taus: steps_5_to_50,
        },
        PoseErrorKind::Iou2d => ThresholdGrid {
            kind,
            thresholds: vec![0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95],
            taus: vec![],
        },
    }
}

/// Precision-recall curve accumulated over a score-ordered sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrCurve {
    /// (recall, precision) after each counted detection; recall is
    /// non-decreasing.
    pub points: Vec<(Real, Real)>,
    pub num_tp: usize,
    pub num_fp: usize,
    pub num_gt: usize,
}

impl PrCurve {
    pub fn empty(num_gt: usize) -> Self {
        Self {
            points: Vec::new(),
            num_tp: 0,
            num_fp: 0,
            num_gt,
        }
    }
}
