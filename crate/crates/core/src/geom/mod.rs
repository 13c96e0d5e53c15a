//! Core geometric types: poses, camera intrinsics, triangle meshes and
//! object symmetries, plus their elementary transforms.
//!
//! All lengths are in millimeters and all types are immutable values;
//! every operation here is a pure function.

mod camera;
mod linalg;
mod mesh;
mod pose;
mod symmetry;

pub use camera::{project, CameraIntrinsics};
pub use linalg::{Matrix3, Vector3};
pub use mesh::TriMesh;
pub use pose::{transform_points, RigidPose};
pub use symmetry::{discretize_symmetries, AxisSymmetry, SymmetrySet, SymmetrySpec};

use thiserror::Error;

/// Tolerance on ‖RᵀR−I‖∞ for accepting a rotation matrix.
pub const ROTATION_TOL: f64 = 1e-6;
/// Tolerance on |‖axis‖−1| for accepting a continuous symmetry axis.
pub const AXIS_TOL: f64 = 1e-6;

/// Errors produced by geometric constructors and operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("matrix is not a rotation: ‖RᵀR−I‖∞ = {deviation:e} exceeds {ROTATION_TOL:e} or det ≤ 0")]
    InvalidRotation { deviation: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("point {index} has non-positive depth z = {z}")]
    NonPositiveDepth { index: usize, z: f64 },
    #[error("camera intrinsics invalid: {reason}")]
    InvalidIntrinsics { reason: &'static str },
    #[error("mesh has no vertices")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    TriangleIndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("symmetry axis has norm {norm}, expected unit length within {AXIS_TOL:e}")]
    NonUnitAxis { norm: f64 },
    #[error("invalid symmetry spec: {reason}")]
    InvalidSpec { reason: String },
}
