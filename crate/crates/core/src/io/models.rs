//! models_info.json: per-object diameter plus symmetry annotations.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::geom::{AxisSymmetry, Matrix3, RigidPose, Vector3, AXIS_TOL};
use crate::{Real, Symmetries};

const MATRIX_ROW_TOL: Real = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelsError {
    #[error("json: {0}")]
    Json(String),
    #[error("object {obj_id}: key is not a numeric object id")]
    BadObjectKey { obj_id: String },
    #[error("object {obj_id}: diameter is missing or not positive")]
    MissingDiameter { obj_id: u32 },
    #[error("object {obj_id}: bad symmetry matrix {index}: {reason}")]
    BadSymmetryMatrix {
        obj_id: u32,
        index: usize,
        reason: String,
    },
    #[error("object {obj_id}: symmetry axis {index} has norm {norm}, expected 1")]
    NonUnitAxis {
        obj_id: u32,
        index: usize,
        norm: Real,
    },
}

/// Diameter and symmetries of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInfo {
    pub diameter: Real,
    pub symmetries: Symmetries,
}

/// Contents of models_info.json, keyed by object id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelsInfo {
    map: BTreeMap<u32, ModelInfo>,
}

impl ModelsInfo {
    pub fn new(map: BTreeMap<u32, ModelInfo>) -> Self {
        Self { map }
    }

    pub fn get(&self, obj_id: u32) -> Option<&ModelInfo> {
        self.map.get(&obj_id)
    }

    pub fn contains(&self, obj_id: u32) -> bool {
        self.map.contains_key(&obj_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &ModelInfo)> {
        self.map.iter()
    }

    pub fn object_ids(&self) -> Vec<u32> {
        self.map.keys().copied().collect()
    }
}

#[derive(Deserialize)]
struct RawAxis {
    axis: [Real; 3],
    offset: [Real; 3],
}

#[derive(Deserialize)]
struct RawInfo {
    diameter: Option<Real>,
    #[serde(default)]
    symmetries_discrete: Vec<Vec<Real>>,
    #[serde(default)]
    symmetries_continuous: Vec<RawAxis>,
}

/// Parses models_info.json. Discrete symmetries are flattened 4×4
/// row-major matrices in millimeters whose bottom row must be
/// [0,0,0,1]; continuous symmetries carry a unit axis and an offset.
/// Unknown keys (min_x, size_x, ...) are ignored.
pub fn parse_models_info(bytes: &[u8]) -> Result<ModelsInfo, ModelsError> {
    let raw: BTreeMap<String, RawInfo> =
        serde_json::from_slice(bytes).map_err(|e| ModelsError::Json(e.to_string()))?;

    let mut map = BTreeMap::new();
    for (key, info) in raw {
        let obj_id: u32 = key.parse().map_err(|_| ModelsError::BadObjectKey {
            obj_id: key.clone(),
        })?;
        let diameter = match info.diameter {
            Some(d) if d > 0.0 && d.is_finite() => d,
            _ => return Err(ModelsError::MissingDiameter { obj_id }),
        };

        let mut discrete = Vec::new();
        for (index, m) in info.symmetries_discrete.iter().enumerate() {
            if m.len() != 16 {
                return Err(ModelsError::BadSymmetryMatrix {
                    obj_id,
                    index,
                    reason: format!("expected 16 entries, got {}", m.len()),
                });
            }
            let bottom_ok = (m[12]).abs() <= MATRIX_ROW_TOL
                && (m[13]).abs() <= MATRIX_ROW_TOL
                && (m[14]).abs() <= MATRIX_ROW_TOL
                && (m[15] - 1.0).abs() <= MATRIX_ROW_TOL;
            if !bottom_ok {
                return Err(ModelsError::BadSymmetryMatrix {
                    obj_id,
                    index,
                    reason: "bottom row is not [0,0,0,1]".into(),
                });
            }
            let rot = Matrix3::from_row_major([
                m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10],
            ]);
            let trans = Vector3::new(m[3], m[7], m[11]);
            let pose = RigidPose::new(rot, trans).map_err(|e| ModelsError::BadSymmetryMatrix {
                obj_id,
                index,
                reason: e.to_string(),
            })?;
            discrete.push(pose);
        }

        let mut continuous = Vec::new();
        for (index, raw_axis) in info.symmetries_continuous.iter().enumerate() {
            let axis = Vector3::from_array(raw_axis.axis);
            let norm = axis.norm();
            if (norm - 1.0).abs() > AXIS_TOL {
                return Err(ModelsError::NonUnitAxis {
                    obj_id,
                    index,
                    norm,
                });
            }
            continuous.push(AxisSymmetry {
                axis,
                offset: Vector3::from_array(raw_axis.offset),
            });
        }

        map.insert(
            obj_id,
            ModelInfo {
                diameter,
                symmetries: Symmetries {
                    discrete,
                    continuous,
                },
            },
        );
    }
    Ok(ModelsInfo { map })
}

/// Serializes models_info.json deterministically (objects in numeric
/// order, full-precision floats).
pub fn write_models_info(info: &ModelsInfo) -> Vec<u8> {
    use serde_json::{json, Map, Value};
    let mut root = Map::new();
    for (obj_id, m) in info.iter() {
        let mut entry = Map::new();
        entry.insert("diameter".into(), json!(m.diameter));
        if !m.symmetries.discrete.is_empty() {
            let mats: Vec<Value> = m
                .symmetries
                .discrete
                .iter()
                .map(|p| {
                    let r = p.rotation().to_row_major();
                    let t = p.translation().to_array();
                    json!([
                        r[0], r[1], r[2], t[0], r[3], r[4], r[5], t[1], r[6], r[7], r[8], t[2],
                        0.0, 0.0, 0.0, 1.0
                    ])
                })
                .collect();
            entry.insert("symmetries_discrete".into(), Value::Array(mats));
        }
        if !m.symmetries.continuous.is_empty() {
            let axes: Vec<Value> = m
                .symmetries
                .continuous
                .iter()
                .map(|a| json!({"axis": a.axis.to_array(), "offset": a.offset.to_array()}))
                .collect();
            entry.insert("symmetries_continuous".into(), Value::Array(axes));
        }
        root.insert(obj_id.to_string(), Value::Object(entry));
    }
    let mut out = serde_json::to_vec_pretty(&Value::Object(root)).expect("json serialization");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_entry() {
        let info = parse_models_info(br#"{"1": {"diameter": 100.0}}"#).unwrap();
        let m = info.get(1).unwrap();
        assert_eq!(m.diameter, 100.0);
        assert!(m.symmetries.is_empty());
    }

    #[test]
    fn discrete_symmetry_decodes() {
        let json = br#"{"3": {"diameter": 50.0, "symmetries_discrete": [
            [-1, 0, 0, 0,  0, -1, 0, 0,  0, 0, 1, 0,  0, 0, 0, 1]
        ]}}"#;
        let info = parse_models_info(json).unwrap();
        let syms = &info.get(3).unwrap().symmetries;
        assert_eq!(syms.discrete.len(), 1);
        let r = syms.discrete[0].rotation().rows;
        assert_eq!(r[0][0], -1.0);
        assert_eq!(r[2][2], 1.0);
    }

    #[test]
    fn continuous_symmetry_decodes() {
        let json = br#"{"2": {"diameter": 80.0, "symmetries_continuous": [
            {"axis": [0, 0, 1], "offset": [0, 0, 0]}
        ]}}"#;
        let info = parse_models_info(json).unwrap();
        assert_eq!(info.get(2).unwrap().symmetries.continuous.len(), 1);
    }

    #[test]
    fn missing_diameter_rejected() {
        assert!(matches!(
            parse_models_info(br#"{"1": {"min_x": -5.0}}"#),
            Err(ModelsError::MissingDiameter { obj_id: 1 })
        ));
    }

    #[test]
    fn bad_bottom_row_rejected() {
        let json = br#"{"1": {"diameter": 10.0, "symmetries_discrete": [
            [1, 0, 0, 0,  0, 1, 0, 0,  0, 0, 1, 0,  0, 0, 0.5, 1]
        ]}}"#;
        assert!(matches!(
            parse_models_info(json),
            Err(ModelsError::BadSymmetryMatrix { .. })
        ));
    }

    #[test]
    fn non_unit_axis_rejected() {
        let json = br#"{"1": {"diameter": 10.0, "symmetries_continuous": [
            {"axis": [0, 0, 2], "offset": [0, 0, 0]}
        ]}}"#;
        assert!(matches!(
            parse_models_info(json),
            Err(ModelsError::NonUnitAxis { norm, .. }) if norm == 2.0
        ));
    }

    #[test]
    fn roundtrip_is_bit_identical() {
        let json = br#"{"1": {"diameter": 69.28203230275509},
                        "3": {"diameter": 30.0, "symmetries_discrete": [
                          [0, -1, 0, 0,  1, 0, 0, 0,  0, 0, 1, 0,  0, 0, 0, 1]
                        ]}}"#;
        let parsed = parse_models_info(json).unwrap();
        let bytes1 = write_models_info(&parsed);
        let reparsed = parse_models_info(&bytes1).unwrap();
        assert_eq!(reparsed, parsed);
        assert_eq!(write_models_info(&reparsed), bytes1);
    }
}
