//! Evaluation engine for 6D object localization, 6D object detection and
//! 2D object detection on BOP-format datasets.
//!
//! The crate is organized around the stages of a benchmark evaluation:
//!
//! * [`geom`] — poses, camera intrinsics, triangle meshes and discretized
//!   object symmetries.
//! * [`render`] — a software depth rasterizer and visibility masks.
//! * [`pose_error`] — the pose-error functions (MSSD, MSPD, VSD) and the
//!   2D bounding-box IoU.
//! * [`metrics`] — prediction-to-ground-truth matching, recall/precision
//!   accumulation and AR/AP aggregation.
//! * [`io`] — parsers and writers for the on-disk formats (PLY models,
//!   scene annotations, 16-bit depth PNGs, submission CSVs, reports).
//! * [`eval`] — the end-to-end pipeline tying the above together.
//! * [`fixtures`] — a seeded generator for small synthetic datasets used
//!   by the test suites and for smoke-testing submissions.
//!
//! Geometry and error functions are generic over the floating-point
//! scalar (see [`Scalar`]); the pipeline itself runs on [`Real`].

pub mod eval;
pub mod fixtures;
pub mod geom;
pub mod io;
pub mod metrics;
pub mod pose_error;
pub mod render;
pub mod report;
mod scalar;

pub use scalar::Scalar;

/// Scalar type used by the evaluation pipeline.
pub type Real = f64;

/// 3-vector over [`Real`].
pub type Vec3 = geom::Vector3<Real>;
/// 3×3 matrix over [`Real`].
pub type Mat3 = geom::Matrix3<Real>;
/// Rigid pose over [`Real`].
pub type Pose = geom::RigidPose<Real>;
/// Pinhole camera over [`Real`].
pub type Camera = geom::CameraIntrinsics<Real>;
/// Triangle mesh over [`Real`].
pub type Mesh = geom::TriMesh<Real>;
/// Symmetry annotation over [`Real`].
pub type Symmetries = geom::SymmetrySpec<Real>;
/// Discretized symmetry set over [`Real`].
pub type SymmetrySet = geom::SymmetrySet<Real>;
/// Depth image over [`Real`].
pub type Depth = render::DepthMap<Real>;
/// 2D bounding box over [`Real`].
pub type Box2 = pose_error::Box2D<Real>;
