//! Dataset directory layout and loader.
//!
//! ```text
//! <dataset>/
//!   models/
//!     models_info.json
//!     obj_000001.ply ...
//!   test/
//!     000001/                 scene id, zero-padded to 6 digits
//!       scene_gt.json
//!       scene_gt_info.json
//!       scene_camera.json
//!       depth/000000.png ...  image id, 16-bit grayscale
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{
    combine_scene_annotations, parse_models_info, parse_ply, parse_scene_camera, parse_scene_gt,
    parse_scene_gt_info, read_file, IoError, ModelsInfo, SceneCameraEntry,
};
use crate::metrics::{GtInstance, TargetList};
use crate::Mesh;

/// Well-known file locations inside a dataset directory.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    root: PathBuf,
}

impl DatasetPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Dataset name: the directory's file name.
    pub fn name(&self) -> String {
        self.root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn models_info(&self) -> PathBuf {
        self.models_dir().join("models_info.json")
    }

    pub fn model_ply(&self, obj_id: u32) -> PathBuf {
        self.models_dir().join(format!("obj_{obj_id:06}.ply"))
    }

    pub fn scene_dir(&self, scene_id: u32) -> PathBuf {
        self.root.join("test").join(format!("{scene_id:06}"))
    }

    pub fn scene_gt(&self, scene_id: u32) -> PathBuf {
        self.scene_dir(scene_id).join("scene_gt.json")
    }

    pub fn scene_gt_info(&self, scene_id: u32) -> PathBuf {
        self.scene_dir(scene_id).join("scene_gt_info.json")
    }

    pub fn scene_camera(&self, scene_id: u32) -> PathBuf {
        self.scene_dir(scene_id).join("scene_camera.json")
    }

    pub fn depth_png(&self, scene_id: u32, im_id: u32) -> PathBuf {
        self.scene_dir(scene_id)
            .join("depth")
            .join(format!("{im_id:06}.png"))
    }
}

/// Parsed annotations of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneAnnotations {
    pub gts: BTreeMap<u32, Vec<GtInstance>>,
    pub cameras: BTreeMap<u32, SceneCameraEntry>,
}

/// A dataset loaded for evaluation: models plus the targeted scenes.
/// Depth images are loaded lazily by the pipeline, per image.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub paths: DatasetPaths,
    pub models: ModelsInfo,
    pub meshes: BTreeMap<u32, Mesh>,
    pub scenes: BTreeMap<u32, SceneAnnotations>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Load PLY meshes of the targeted objects (needed for the 6D
    /// tasks; 2D detection only needs annotations).
    pub load_meshes: bool,
}

/// Loads models_info, the targeted objects' meshes and the targeted
/// scenes' annotations. Errors carry the offending file path.
pub fn load_dataset(
    root: &Path,
    targets: &TargetList,
    options: LoadOptions,
) -> Result<Dataset, IoError> {
    let paths = DatasetPaths::new(root);

    let models_path = paths.models_info();
    let models = parse_models_info(&read_file(&models_path)?)
        .map_err(|e| IoError::from(e).in_file(&models_path))?;

    let mut meshes = BTreeMap::new();
    if options.load_meshes {
        for obj_id in targets.object_ids() {
            let path = paths.model_ply(obj_id);
            let mesh =
                parse_ply(&read_file(&path)?).map_err(|e| IoError::from(e).in_file(&path))?;
            meshes.insert(obj_id, mesh);
        }
    }

    let mut scenes = BTreeMap::new();
    for scene_id in targets.scene_ids() {
        let gt_path = paths.scene_gt(scene_id);
        let gt = parse_scene_gt(&read_file(&gt_path)?)
            .map_err(|e| IoError::from(e).in_file(&gt_path))?;
        let info_path = paths.scene_gt_info(scene_id);
        let gt_info = parse_scene_gt_info(&read_file(&info_path)?)
            .map_err(|e| IoError::from(e).in_file(&info_path))?;
        let gts = combine_scene_annotations(&gt, &gt_info)
            .map_err(|e| IoError::from(e).in_file(&gt_path))?;
        let cam_path = paths.scene_camera(scene_id);
        let cameras = parse_scene_camera(&read_file(&cam_path)?)
            .map_err(|e| IoError::from(e).in_file(&cam_path))?;
        scenes.insert(scene_id, SceneAnnotations { gts, cameras });
    }

    Ok(Dataset {
        name: paths.name(),
        paths,
        models,
        meshes,
        scenes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_follow_layout() {
        let p = DatasetPaths::new("/data/fixture");
        assert_eq!(p.name(), "fixture");
        assert_eq!(
            p.model_ply(3),
            PathBuf::from("/data/fixture/models/obj_000003.ply")
        );
        assert_eq!(
            p.scene_gt(1),
            PathBuf::from("/data/fixture/test/000001/scene_gt.json")
        );
        assert_eq!(
            p.depth_png(1, 12),
            PathBuf::from("/data/fixture/test/000001/depth/000012.png")
        );
    }
}
