use super::{GeomError, Vector3};
use crate::Scalar;

/// Pinhole camera intrinsics with the image size they are valid for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<S> {
    pub fx: S,
    pub fy: S,
    pub cx: S,
    pub cy: S,
    pub width: u32,
    pub height: u32,
}

impl<S: Scalar> CameraIntrinsics<S> {
    pub fn new(fx: S, fy: S, cx: S, cy: S, width: u32, height: u32) -> Result<Self, GeomError> {
        if !(fx.is_finite() && fy.is_finite() && cx.is_finite() && cy.is_finite()) {
            return Err(GeomError::NonFinite { what: "intrinsics" });
        }
        if fx <= S::zero() || fy <= S::zero() {
            return Err(GeomError::InvalidIntrinsics {
                reason: "focal lengths must be positive",
            });
        }
        if width < 1 || height < 1 {
            return Err(GeomError::InvalidIntrinsics {
                reason: "image dimensions must be at least 1",
            });
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Projects one camera-space point; the caller guarantees z > 0.
    #[inline]
    pub fn project_unchecked(&self, p: Vector3<S>) -> [S; 2] {
        [self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy]
    }
}

/// Projects camera-space points to pixel coordinates.
///
/// Fails with [`GeomError::NonPositiveDepth`] if any point lies at or
/// behind the camera plane, which signals a pose placing model points
/// behind the camera.
pub fn project<S: Scalar>(
    k: &CameraIntrinsics<S>,
    points_cam: &[Vector3<S>],
) -> Result<Vec<[S; 2]>, GeomError> {
    points_cam
        .iter()
        .enumerate()
        .map(|(index, &p)| {
            if p.z <= S::zero() {
                Err(GeomError::NonPositiveDepth {
                    index,
                    z: p.z.to_f64().unwrap_or(f64::NAN),
                })
            } else {
                Ok(k.project_unchecked(p))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let px = project(&cam(), &[Vector3::new(0.0, 0.0, 1000.0)]).unwrap();
        assert_eq!(px, vec![[320.0, 240.0]]);
    }

    #[test]
    fn offset_point() {
        // 500·100/1000 + 320 = 370
        let px = project(&cam(), &[Vector3::new(100.0, 0.0, 1000.0)]).unwrap();
        assert_eq!(px, vec![[370.0, 240.0]]);
    }

    #[test]
    fn behind_camera_is_an_error() {
        let err = project(&cam(), &[Vector3::new(0.0, 0.0, -5.0)]).unwrap_err();
        assert!(matches!(err, GeomError::NonPositiveDepth { index: 0, .. }));
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(CameraIntrinsics::new(0.0, 500.0, 320.0, 240.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 0, 480).is_err());
    }
}
