//! Per-scene annotation files: scene_gt.json (poses), scene_gt_info.json
//! (visibility and boxes) and scene_camera.json (intrinsics and depth
//! scale). All three are JSON objects keyed by image id.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Matrix3, RigidPose, Vector3};
use crate::metrics::GtInstance;
use crate::pose_error::Box2D;
use crate::{Camera, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("json: {0}")]
    Json(String),
    #[error("image key {key:?} is not a numeric image id")]
    BadImageKey { key: String },
    #[error("image {im_id}: gt has {gt} entries but gt_info has {gt_info}")]
    LengthMismatch { im_id: u32, gt: usize, gt_info: usize },
    #[error("image {im_id}, gt {gt_index}: bad rotation: {detail}")]
    BadRotation {
        im_id: u32,
        gt_index: usize,
        detail: String,
    },
    #[error("image {im_id}, gt {gt_index}: visib_fract {value} outside [0,1]")]
    BadVisibility {
        im_id: u32,
        gt_index: usize,
        value: Real,
    },
    #[error("image {im_id}, gt {gt_index}: bad bbox: {detail}")]
    BadBox {
        im_id: u32,
        gt_index: usize,
        detail: String,
    },
    #[error("image {im_id}: bad camera: {detail}")]
    BadCamera { im_id: u32, detail: String },
}

/// One entry of scene_gt.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGtEntry {
    #[serde(rename = "cam_R_m2c")]
    pub cam_r_m2c: Vec<Real>,
    pub cam_t_m2c: Vec<Real>,
    pub obj_id: u32,
}

/// One entry of scene_gt_info.json. `bbox_visib` is the box of the
/// visible silhouette part and is the box the evaluation matches 2D
/// detections against; `bbox_obj` (amodal) is carried through when
/// present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGtInfoEntry {
    pub visib_fract: Real,
    pub bbox_visib: [Real; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox_obj: Option<[Real; 4]>,
}

/// Per-image camera: intrinsics plus the depth-image scale factor
/// (millimeters per stored unit).
#[derive(Debug, Clone, PartialEq)]
pub struct SceneCameraEntry {
    pub camera: Camera,
    pub depth_scale: Real,
}

fn parse_keyed<T: serde::de::DeserializeOwned>(
    bytes: &[u8],
) -> Result<BTreeMap<u32, T>, SceneError> {
    let raw: BTreeMap<String, T> =
        serde_json::from_slice(bytes).map_err(|e| SceneError::Json(e.to_string()))?;
    let mut out = BTreeMap::new();
    for (key, value) in raw {
        let im_id: u32 = key
            .parse()
            .map_err(|_| SceneError::BadImageKey { key: key.clone() })?;
        out.insert(im_id, value);
    }
    Ok(out)
}

/// Parses scene_gt.json into raw per-image pose annotations.
pub fn parse_scene_gt(bytes: &[u8]) -> Result<BTreeMap<u32, Vec<RawGtEntry>>, SceneError> {
    parse_keyed(bytes)
}

/// Parses scene_gt_info.json into raw per-image visibility info.
pub fn parse_scene_gt_info(
    bytes: &[u8],
) -> Result<BTreeMap<u32, Vec<RawGtInfoEntry>>, SceneError> {
    parse_keyed(bytes)
}

#[derive(Deserialize)]
struct RawCamera {
    #[serde(rename = "cam_K")]
    cam_k: Vec<Real>,
    depth_scale: Real,
    width: u32,
    height: u32,
}

/// Parses scene_camera.json. Entries carry cam_K (9 values, row-major),
/// depth_scale, and the image size (width/height are required by this
/// layout; MSPD thresholds and rendering need them).
pub fn parse_scene_camera(
    bytes: &[u8],
) -> Result<BTreeMap<u32, SceneCameraEntry>, SceneError> {
    let raw: BTreeMap<u32, RawCamera> = parse_keyed(bytes)?;
    let mut out = BTreeMap::new();
    for (im_id, cam) in raw {
        let detail = |d: &str| SceneError::BadCamera {
            im_id,
            detail: d.to_string(),
        };
        if cam.cam_k.len() != 9 {
            return Err(detail(&format!("cam_K has {} values, expected 9", cam.cam_k.len())));
        }
        if !(cam.depth_scale > 0.0 && cam.depth_scale.is_finite()) {
            return Err(detail("depth_scale must be positive"));
        }
        let k = &cam.cam_k;
        let camera = Camera::new(k[0], k[4], k[2], k[5], cam.width, cam.height)
            .map_err(|e| detail(&e.to_string()))?;
        out.insert(
            im_id,
            SceneCameraEntry {
                camera,
                depth_scale: cam.depth_scale,
            },
        );
    }
    Ok(out)
}

/// Positionally aligns scene_gt with scene_gt_info into validated
/// instances: gt index i in the file becomes gt_id i.
pub fn combine_scene_annotations(
    gt: &BTreeMap<u32, Vec<RawGtEntry>>,
    gt_info: &BTreeMap<u32, Vec<RawGtInfoEntry>>,
) -> Result<BTreeMap<u32, Vec<GtInstance>>, SceneError> {
    let mut out = BTreeMap::new();
    for (&im_id, entries) in gt {
        let infos = gt_info.get(&im_id).map(Vec::as_slice).unwrap_or(&[]);
        if infos.len() != entries.len() {
            return Err(SceneError::LengthMismatch {
                im_id,
                gt: entries.len(),
                gt_info: infos.len(),
            });
        }
        let mut instances = Vec::with_capacity(entries.len());
        for (gt_index, (entry, info)) in entries.iter().zip(infos).enumerate() {
            if entry.cam_r_m2c.len() != 9 || entry.cam_t_m2c.len() != 3 {
                return Err(SceneError::BadRotation {
                    im_id,
                    gt_index,
                    detail: format!(
                        "cam_R_m2c has {} values and cam_t_m2c has {}, expected 9 and 3",
                        entry.cam_r_m2c.len(),
                        entry.cam_t_m2c.len()
                    ),
                });
            }
            let mut r = [0.0; 9];
            r.copy_from_slice(&entry.cam_r_m2c);
            let rot = Matrix3::from_row_major(r);
            let t = Vector3::new(entry.cam_t_m2c[0], entry.cam_t_m2c[1], entry.cam_t_m2c[2]);
            let pose = RigidPose::new(rot, t).map_err(|e| SceneError::BadRotation {
                im_id,
                gt_index,
                detail: e.to_string(),
            })?;
            if !(0.0..=1.0).contains(&info.visib_fract) {
                return Err(SceneError::BadVisibility {
                    im_id,
                    gt_index,
                    value: info.visib_fract,
                });
            }
            let b = info.bbox_visib;
            let bbox = Box2D::new(b[0], b[1], b[2], b[3]).map_err(|e| SceneError::BadBox {
                im_id,
                gt_index,
                detail: e.to_string(),
            })?;
            instances.push(GtInstance {
                gt_id: gt_index,
                obj_id: entry.obj_id,
                pose,
                visib_fract: info.visib_fract,
                bbox,
            });
        }
        out.insert(im_id, instances);
    }
    Ok(out)
}

fn write_keyed<T: Serialize>(map: &BTreeMap<u32, T>) -> Vec<u8> {
    use serde_json::{Map, Value};
    let mut root = Map::new();
    for (im_id, value) in map {
        root.insert(
            im_id.to_string(),
            serde_json::to_value(value).expect("json serialization"),
        );
    }
    let mut out = serde_json::to_vec_pretty(&Value::Object(root)).expect("json serialization");
    out.push(b'\n');
    out
}

pub fn write_scene_gt(gt: &BTreeMap<u32, Vec<RawGtEntry>>) -> Vec<u8> {
    write_keyed(gt)
}

pub fn write_scene_gt_info(info: &BTreeMap<u32, Vec<RawGtInfoEntry>>) -> Vec<u8> {
    write_keyed(info)
}

pub fn write_scene_camera(cameras: &BTreeMap<u32, SceneCameraEntry>) -> Vec<u8> {
    use serde_json::json;
    let raw: BTreeMap<u32, serde_json::Value> = cameras
        .iter()
        .map(|(&im_id, entry)| {
            let c = &entry.camera;
            (
                im_id,
                json!({
                    "cam_K": [c.fx, 0.0, c.cx, 0.0, c.fy, c.cy, 0.0, 0.0, 1.0],
                    "depth_scale": entry.depth_scale,
                    "width": c.width,
                    "height": c.height,
                }),
            )
        })
        .collect();
    write_keyed(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GT: &[u8] = br#"{"3": [
        {"cam_R_m2c": [1,0,0, 0,1,0, 0,0,1], "cam_t_m2c": [0.0, 0.0, 800.0], "obj_id": 1}
    ]}"#;

    #[test]
    fn gt_and_info_combine() {
        let gt = parse_scene_gt(GT).unwrap();
        let info = parse_scene_gt_info(
            br#"{"3": [{"visib_fract": 0.95, "bbox_visib": [10, 20, 30, 40]}]}"#,
        )
        .unwrap();
        let combined = combine_scene_annotations(&gt, &info).unwrap();
        let inst = &combined[&3][0];
        assert_eq!(inst.gt_id, 0);
        assert_eq!(inst.obj_id, 1);
        assert!(inst.is_eligible());
        assert_eq!(inst.bbox.w, 30.0);
    }

    #[test]
    fn low_visibility_loads_but_is_ineligible() {
        let gt = parse_scene_gt(GT).unwrap();
        let info = parse_scene_gt_info(
            br#"{"3": [{"visib_fract": 0.05, "bbox_visib": [10, 20, 30, 40]}]}"#,
        )
        .unwrap();
        let combined = combine_scene_annotations(&gt, &info).unwrap();
        let inst = &combined[&3][0];
        assert!(!inst.is_eligible());
        assert_eq!(inst.visib_fract, 0.05);
    }

    #[test]
    fn length_mismatch_rejected() {
        let gt = parse_scene_gt(
            br#"{"3": [
            {"cam_R_m2c": [1,0,0, 0,1,0, 0,0,1], "cam_t_m2c": [0, 0, 800], "obj_id": 1},
            {"cam_R_m2c": [1,0,0, 0,1,0, 0,0,1], "cam_t_m2c": [0, 0, 900], "obj_id": 2}
        ]}"#,
        )
        .unwrap();
        let info = parse_scene_gt_info(
            br#"{"3": [{"visib_fract": 0.9, "bbox_visib": [0, 0, 1, 1]}]}"#,
        )
        .unwrap();
        assert!(matches!(
            combine_scene_annotations(&gt, &info),
            Err(SceneError::LengthMismatch {
                im_id: 3,
                gt: 2,
                gt_info: 1
            })
        ));
    }

    #[test]
    fn bad_rotation_rejected() {
        let gt = parse_scene_gt(
            br#"{"3": [{"cam_R_m2c": [2,0,0, 0,1,0, 0,0,1], "cam_t_m2c": [0, 0, 800], "obj_id": 1}]}"#,
        )
        .unwrap();
        let info = parse_scene_gt_info(
            br#"{"3": [{"visib_fract": 0.9, "bbox_visib": [0, 0, 1, 1]}]}"#,
        )
        .unwrap();
        assert!(matches!(
            combine_scene_annotations(&gt, &info),
            Err(SceneError::BadRotation { im_id: 3, .. })
        ));
    }

    #[test]
    fn camera_parses_and_validates() {
        let cams = parse_scene_camera(
            br#"{"7": {"cam_K": [200, 0, 80, 0, 200, 60, 0, 0, 1], "depth_scale": 0.1,
                      "width": 160, "height": 120}}"#,
        )
        .unwrap();
        let entry = &cams[&7];
        assert_eq!(entry.camera.fx, 200.0);
        assert_eq!(entry.camera.width, 160);
        assert_eq!(entry.depth_scale, 0.1);

        assert!(parse_scene_camera(
            br#"{"7": {"cam_K": [200, 0, 80, 0, 200, 60, 0, 0, 1], "depth_scale": 0.0,
                      "width": 160, "height": 120}}"#,
        )
        .is_err());
        // width/height are required by this layout.
        assert!(parse_scene_camera(
            br#"{"7": {"cam_K": [200, 0, 80, 0, 200, 60, 0, 0, 1], "depth_scale": 0.1}}"#,
        )
        .is_err());
    }

    #[test]
    fn scene_files_roundtrip() {
        let gt = parse_scene_gt(GT).unwrap();
        let bytes1 = write_scene_gt(&gt);
        let reparsed = parse_scene_gt(&bytes1).unwrap();
        assert_eq!(reparsed, gt);
        assert_eq!(write_scene_gt(&reparsed), bytes1);
    }
}
