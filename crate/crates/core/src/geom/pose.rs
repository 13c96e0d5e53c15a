use super::{GeomError, Matrix3, Vector3, ROTATION_TOL};
use crate::Scalar;

/// Rigid transform from model space to camera space: x ↦ R·x + t.
///
/// The rotation must be orthonormal with determinant +1 within
/// [`ROTATION_TOL`]; inputs outside the tolerance are rejected rather
/// than re-orthonormalized so that scoring never silently alters a
/// submission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose<S> {
    rotation: Matrix3<S>,
    translation: Vector3<S>,
}

impl<S: Scalar> RigidPose<S> {
    pub fn new(rotation: Matrix3<S>, translation: Vector3<S>) -> Result<Self, GeomError> {
        if !rotation.is_finite() {
            return Err(GeomError::NonFinite { what: "rotation" });
        }
        if !translation.is_finite() {
            return Err(GeomError::NonFinite {
                what: "translation",
            });
        }
        let dev = rotation.orthonormality_deviation();
        let tol = S::from_f64(ROTATION_TOL);
        if dev > tol || rotation.det() <= S::zero() {
            return Err(GeomError::InvalidRotation {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zero(),
        }
    }

    pub fn rotation(&self) -> Matrix3<S> {
        self.rotation
    }

    pub fn translation(&self) -> Vector3<S> {
        self.translation
    }

    /// Applies the pose to a single point.
    pub fn transform_point(&self, p: Vector3<S>) -> Vector3<S> {
        self.rotation.mul_vec(p) + self.translation
    }

    /// `self ∘ other`: `other` is applied first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation.mul_vec(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -rt.mul_vec(self.translation),
        }
    }
}

/// Applies `pose` to each point.
pub fn transform_points<S: Scalar>(pose: &RigidPose<S>, points: &[Vector3<S>]) -> Vec<Vector3<S>> {
    points.iter().map(|&p| pose.transform_point(p)).collect()
}
