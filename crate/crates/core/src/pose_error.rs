//! Pose-error functions and the 2D overlap measure: MSSD, MSPD, VSD and
//! bounding-box IoU. All functions are pure and never clamp their
//! inputs; invalid geometry is an error, not a warning.

use thiserror::Error;

use crate::geom::{project, CameraIntrinsics, GeomError, RigidPose, SymmetrySet, TriMesh, Vector3};
use crate::render::{rasterize_depth, visibility_mask, DepthMap, RenderError};
use crate::Scalar;

/// Which error function a value or threshold belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PoseErrorKind {
    Mssd,
    Mspd,
    Vsd,
    Iou2d,
}

impl PoseErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            PoseErrorKind::Mssd => "mssd",
            PoseErrorKind::Mspd => "mspd",
            PoseErrorKind::Vsd => "vsd",
            PoseErrorKind::Iou2d => "iou2d",
        }
    }
}

impl std::fmt::Display for PoseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoseErrorError {
    #[error("vertex set is empty")]
    EmptyVertexSet,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Axis-aligned 2D box: top-left corner plus extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D<S> {
    pub x: S,
    pub y: S,
    pub w: S,
    pub h: S,
}

impl<S: Scalar> Box2D<S> {
    /// Extents must be non-negative.
    pub fn new(x: S, y: S, w: S, h: S) -> Result<Self, PoseErrorError> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(GeomError::NonFinite { what: "box" }.into());
        }
        if w < S::zero() || h < S::zero() {
            return Err(GeomError::InvalidSpec {
                reason: "box extents must be non-negative".into(),
            }
            .into());
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> S {
        self.w * self.h
    }
}

/// Maximum Symmetry-Aware Surface Distance:
/// min over S ∈ syms of max over x ∈ vertices of ‖est·x − (gt∘S)·x‖.
pub fn mssd<S: Scalar>(
    est: &RigidPose<S>,
    gt: &RigidPose<S>,
    vertices: &[Vector3<S>],
    syms: &SymmetrySet<S>,
) -> Result<S, PoseErrorError> {
    if vertices.is_empty() {
        return Err(PoseErrorError::EmptyVertexSet);
    }
    let est_pts: Vec<Vector3<S>> = vertices.iter().map(|&v| est.transform_point(v)).collect();
    // Work in squared distances; sqrt is monotone so min/max commute
    // with it and the final result is unchanged.
    let mut best = S::infinity();
    for sym in syms.transforms() {
        let gt_sym = gt.compose(sym);
        let mut worst = S::zero();
        for (&v, &e) in vertices.iter().zip(est_pts.iter()) {
            let d = (e - gt_sym.transform_point(v)).norm_squared();
            if d > worst {
                worst = d;
                if worst >= best {
                    break; // this symmetry can no longer win the min
                }
            }
        }
        if worst < best {
            best = worst;
        }
    }
    Ok(best.sqrt())
}

/// Maximum Symmetry-Aware Projection Distance:
/// min over S of max over x of ‖π(est·x) − π((gt∘S)·x)‖ in pixels.
///
/// Every transformed point under every symmetry must project (z > 0);
/// otherwise [`GeomError::NonPositiveDepth`] is propagated.
pub fn mspd<S: Scalar>(
    est: &RigidPose<S>,
    gt: &RigidPose<S>,
    vertices: &[Vector3<S>],
    syms: &SymmetrySet<S>,
    k: &CameraIntrinsics<S>,
) -> Result<S, PoseErrorError> {
    if vertices.is_empty() {
        return Err(PoseErrorError::EmptyVertexSet);
    }
    let est_cam: Vec<Vector3<S>> = vertices.iter().map(|&v| est.transform_point(v)).collect();
    let est_px = project(k, &est_cam)?;
    let mut best = S::infinity();
    for sym in syms.transforms() {
        let gt_sym = gt.compose(sym);
        let cam: Vec<Vector3<S>> = vertices.iter().map(|&v| gt_sym.transform_point(v)).collect();
        let px = project(k, &cam)?;
        let mut worst = S::zero();
        for (a, b) in est_px.iter().zip(px.iter()) {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            worst = worst.max(dx * dx + dy * dy);
        }
        best = best.min(worst);
    }
    Ok(best.sqrt())
}

/// Visible Surface Discrepancy computed from already-rendered depth
/// maps. `d_est`/`d_gt` are renders of the estimated and ground-truth
/// poses; `scene` is the measured scene depth.
///
/// The ground-truth visibility V̄ follows the occlusion rule of
/// [`visibility_mask`]; the estimate's visibility V̂ is additionally
/// extended with pixels of V̄ where the estimate has a surface, so a
/// pose is not penalized in regions the scene occludes. The error is
/// the fraction of pixels in V̂ ∪ V̄ that are not depth-consistent
/// within `tau`; an empty union scores 1 (an invisible object cannot
/// be verified).
pub fn vsd_from_depths<S: Scalar>(
    d_est: &DepthMap<S>,
    d_gt: &DepthMap<S>,
    scene: &DepthMap<S>,
    delta: S,
    tau: S,
) -> Result<S, PoseErrorError> {
    Ok(vsd_from_depths_multi(d_est, d_gt, scene, delta, &[tau])?[0])
}

/// [`vsd_from_depths`] evaluated for several tolerances `taus` in one
/// pass over the pixels; renders and masks are shared.
pub fn vsd_from_depths_multi<S: Scalar>(
    d_est: &DepthMap<S>,
    d_gt: &DepthMap<S>,
    scene: &DepthMap<S>,
    delta: S,
    taus: &[S],
) -> Result<Vec<S>, PoseErrorError> {
    let v_gt = visibility_mask(d_gt, scene, delta)?;
    let v_est_raw = visibility_mask(d_est, scene, delta)?;

    let mut union = 0_u64;
    let mut inter_diffs: Vec<S> = Vec::new();
    for i in 0..v_gt.bits().len() {
        let e_depth = d_est.values()[i];
        let g_depth = d_gt.values()[i];
        let in_gt = v_gt.bits()[i];
        let in_est = v_est_raw.bits()[i] || (in_gt && e_depth > S::zero());
        if in_est || in_gt {
            union += 1;
            if in_est && in_gt {
                inter_diffs.push((e_depth - g_depth).abs());
            }
        }
    }

    if union == 0 {
        return Ok(vec![S::one(); taus.len()]);
    }
    let union_s = S::from_f64(union as f64);
    Ok(taus
        .iter()
        .map(|&tau| {
            let matched = inter_diffs.iter().filter(|&&d| d < tau).count();
            let mism = union - matched as u64;
            S::from_f64(mism as f64) / union_s
        })
        .collect())
}

/// Visible Surface Discrepancy: renders the mesh under both poses and
/// compares the visible parts against the scene depth.
pub fn vsd<S: Scalar>(
    est: &RigidPose<S>,
    gt: &RigidPose<S>,
    mesh: &TriMesh<S>,
    k: &CameraIntrinsics<S>,
    scene: &DepthMap<S>,
    delta: S,
    tau: S,
) -> Result<S, PoseErrorError> {
    Ok(vsd_multi(est, gt, mesh, k, scene, delta, &[tau])?[0])
}

/// [`vsd`] for several `taus`, sharing the two renders.
#[allow(clippy::too_many_arguments)]
pub fn vsd_multi<S: Scalar>(
    est: &RigidPose<S>,
    gt: &RigidPose<S>,
    mesh: &TriMesh<S>,
    k: &CameraIntrinsics<S>,
    scene: &DepthMap<S>,
    delta: S,
    taus: &[S],
) -> Result<Vec<S>, PoseErrorError> {
    let d_est = rasterize_depth(mesh, est, k);
    let d_gt = rasterize_depth(mesh, gt, k);
    vsd_from_depths_multi(&d_est, &d_gt, scene, delta, taus)
}

/// Intersection over union of two boxes; 0 when the union is empty.
pub fn iou_2d<S: Scalar>(a: &Box2D<S>, b: &Box2D<S>) -> S {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    let inter = ix.max(S::zero()) * iy.max(S::zero());
    let union = a.area() + b.area() - inter;
    if union <= S::zero() {
        S::zero()
    } else {
        inter / union
    }
}
