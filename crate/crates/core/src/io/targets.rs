//! The evaluation target list: a JSON array of
//! {scene_id, im_id, obj_id, inst_count} rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{TargetEntry, TargetList};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TargetsError {
    #[error("json: {0}")]
    Json(String),
    #[error("duplicate target for scene {scene_id}, image {im_id}, object {obj_id}")]
    DuplicateTarget {
        scene_id: u32,
        im_id: u32,
        obj_id: u32,
    },
    #[error("non-positive inst_count for scene {scene_id}, image {im_id}, object {obj_id}")]
    NonPositiveCount {
        scene_id: u32,
        im_id: u32,
        obj_id: u32,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTarget {
    scene_id: u32,
    im_id: u32,
    obj_id: u32,
    inst_count: i64,
}

/// Parses a target list, grouping rows by (scene, image) and keeping
/// per-image object order as in the file.
pub fn parse_targets(bytes: &[u8]) -> Result<TargetList, TargetsError> {
    let raw: Vec<RawTarget> =
        serde_json::from_slice(bytes).map_err(|e| TargetsError::Json(e.to_string()))?;
    let mut per_image: BTreeMap<(u32, u32), Vec<TargetEntry>> = BTreeMap::new();
    for row in raw {
        if row.inst_count <= 0 {
            return Err(TargetsError::NonPositiveCount {
                scene_id: row.scene_id,
                im_id: row.im_id,
                obj_id: row.obj_id,
            });
        }
        let entries = per_image.entry((row.scene_id, row.im_id)).or_default();
        if entries.iter().any(|e| e.obj_id == row.obj_id) {
            return Err(TargetsError::DuplicateTarget {
                scene_id: row.scene_id,
                im_id: row.im_id,
                obj_id: row.obj_id,
            });
        }
        entries.push(TargetEntry {
            obj_id: row.obj_id,
            inst_count: row.inst_count as u32,
        });
    }
    Ok(TargetList::new(per_image))
}

/// Serializes a target list as a JSON array ordered by (scene, image,
/// file order of objects).
pub fn write_targets(targets: &TargetList) -> Vec<u8> {
    let rows: Vec<RawTarget> = targets
        .images()
        .flat_map(|(&(scene_id, im_id), entries)| {
            entries.iter().map(move |e| RawTarget {
                scene_id,
                im_id,
                obj_id: e.obj_id,
                inst_count: e.inst_count as i64,
            })
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&rows).expect("json serialization");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_rows_per_image() {
        let json = br#"[
            {"scene_id": 1, "im_id": 3, "obj_id": 5, "inst_count": 2},
            {"scene_id": 1, "im_id": 3, "obj_id": 6, "inst_count": 1},
            {"scene_id": 1, "im_id": 4, "obj_id": 5, "inst_count": 1}
        ]"#;
        let targets = parse_targets(json).unwrap();
        assert_eq!(targets.num_images(), 2);
        assert_eq!(targets.entries(1, 3).len(), 2);
        assert_eq!(targets.entries(1, 4).len(), 1);
        assert_eq!(targets.object_ids(), vec![5, 6]);
    }

    #[test]
    fn zero_count_rejected() {
        let json = br#"[{"scene_id": 1, "im_id": 3, "obj_id": 5, "inst_count": 0}]"#;
        assert!(matches!(
            parse_targets(json),
            Err(TargetsError::NonPositiveCount { obj_id: 5, .. })
        ));
    }

    #[test]
    fn duplicate_rejected() {
        let json = br#"[
            {"scene_id": 1, "im_id": 3, "obj_id": 5, "inst_count": 1},
            {"scene_id": 1, "im_id": 3, "obj_id": 5, "inst_count": 2}
        ]"#;
        assert!(matches!(
            parse_targets(json),
            Err(TargetsError::DuplicateTarget { obj_id: 5, .. })
        ));
    }

    #[test]
    fn roundtrip() {
        let json = br#"[
            {"scene_id": 1, "im_id": 3, "obj_id": 5, "inst_count": 2},
            {"scene_id": 2, "im_id": 1, "obj_id": 6, "inst_count": 1}
        ]"#;
        let targets = parse_targets(json).unwrap();
        let bytes1 = write_targets(&targets);
        let reparsed = parse_targets(&bytes1).unwrap();
        assert_eq!(reparsed, targets);
        assert_eq!(write_targets(&reparsed), bytes1);
    }
}
