use super::{GeomError, Matrix3, RigidPose, Vector3, AXIS_TOL};
use crate::Scalar;

/// A continuous rotational symmetry: any rotation about `axis` through
/// the point `offset` maps the object onto itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSymmetry<S> {
    pub axis: Vector3<S>,
    pub offset: Vector3<S>,
}

/// Raw symmetry annotation of an object, as carried by models_info.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymmetrySpec<S> {
    pub discrete: Vec<RigidPose<S>>,
    pub continuous: Vec<AxisSymmetry<S>>,
}

impl<S: Scalar> SymmetrySpec<S> {
    pub fn none() -> Self {
        Self {
            discrete: Vec::new(),
            continuous: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.discrete.is_empty() && self.continuous.is_empty()
    }
}

/// Discretized symmetry transforms; the first element is always the
/// identity, and the set is duplicate-free.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrySet<S> {
    transforms: Vec<RigidPose<S>>,
}

impl<S: Scalar> SymmetrySet<S> {
    /// The trivial set containing only the identity.
    pub fn identity() -> Self {
        Self {
            transforms: vec![RigidPose::identity()],
        }
    }

    pub fn transforms(&self) -> &[RigidPose<S>] {
        &self.transforms
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: identity is always present
    }
}

/// Max angular sample count per continuous axis.
pub const MAX_CONTINUOUS_STEPS: usize = 64;

fn poses_match<S: Scalar>(a: &RigidPose<S>, b: &RigidPose<S>, tol: S) -> bool {
    let (ra, rb) = (a.rotation().rows, b.rotation().rows);
    for i in 0..3 {
        for j in 0..3 {
            if (ra[i][j] - rb[i][j]).abs() > tol {
                return false;
            }
        }
    }
    let d = a.translation() - b.translation();
    d.x.abs() <= tol && d.y.abs() <= tol && d.z.abs() <= tol
}

/// Expands a symmetry annotation into a finite transform set.
///
/// Continuous axes are sampled so that the chord displacement of a
/// surface point at radius `diameter/2` between neighboring samples
/// stays below `max_step_fraction·diameter`:
/// the step θ satisfies 2·(d/2)·sin(θ/2) ≤ max_step_fraction·d, i.e.
/// θ ≤ 2·asin(max_step_fraction), with the sample count capped at
/// [`MAX_CONTINUOUS_STEPS`]. Ordering is deterministic: identity, then
/// discrete transforms in annotation order, then per-axis samples in
/// increasing angle. Near-duplicates (all rotation entries and
/// translation components within 1e-9) are dropped.
pub fn discretize_symmetries<S: Scalar>(
    spec: &SymmetrySpec<S>,
    diameter: S,
    max_step_fraction: S,
) -> Result<SymmetrySet<S>, GeomError> {
    if diameter <= S::zero() || !diameter.is_finite() {
        return Err(GeomError::InvalidSpec {
            reason: format!("diameter must be positive, got {diameter}"),
        });
    }
    if max_step_fraction <= S::zero() || max_step_fraction > S::one() {
        return Err(GeomError::InvalidSpec {
            reason: format!("max_step_fraction must be in (0, 1], got {max_step_fraction}"),
        });
    }

    let dedupe_tol = S::from_f64(1e-9);
    let mut transforms = vec![RigidPose::identity()];
    let push_unique = |list: &mut Vec<RigidPose<S>>, cand: RigidPose<S>| {
        if !list.iter().any(|t| poses_match(t, &cand, dedupe_tol)) {
            list.push(cand);
        }
    };

    for t in &spec.discrete {
        push_unique(&mut transforms, *t);
    }

    let axis_tol = S::from_f64(AXIS_TOL);
    for sym in &spec.continuous {
        let norm = sym.axis.norm();
        if (norm - S::one()).abs() > axis_tol {
            return Err(GeomError::NonUnitAxis {
                norm: norm.to_f64().unwrap_or(f64::NAN),
            });
        }
        let theta_star = S::from_f64(2.0) * max_step_fraction.asin();
        let full_turn = S::from_f64(std::f64::consts::TAU);
        let steps = (full_turn / theta_star)
            .ceil()
            .to_usize()
            .unwrap_or(MAX_CONTINUOUS_STEPS)
            .clamp(1, MAX_CONTINUOUS_STEPS);
        for k in 1..steps {
            let angle = full_turn * S::from_f64(k as f64) / S::from_f64(steps as f64);
            let rot = Matrix3::rotation_about_axis(sym.axis, angle);
            // x ↦ R(x − offset) + offset
            let trans = sym.offset - rot.mul_vec(sym.offset);
            let pose = RigidPose::new(rot, trans).map_err(|_| GeomError::InvalidSpec {
                reason: "sampled symmetry rotation failed validation".into(),
            })?;
            push_unique(&mut transforms, pose);
        }
    }

    Ok(SymmetrySet { transforms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_gives_identity_only() {
        let set = discretize_symmetries(&SymmetrySpec::<f64>::none(), 100.0, 0.01).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.transforms()[0], RigidPose::identity());
    }

    #[test]
    fn one_discrete_symmetry_gives_two_transforms() {
        let rot = Matrix3::new([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        let spec = SymmetrySpec {
            discrete: vec![RigidPose::new(rot, Vector3::zero()).unwrap()],
            continuous: vec![],
        };
        let set = discretize_symmetries(&spec, 100.0, 0.01).unwrap();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn continuous_axis_step_count_follows_chord_bound() {
        let spec = SymmetrySpec {
            discrete: vec![],
            continuous: vec![AxisSymmetry {
                axis: Vector3::new(0.0, 0.0, 1.0),
                offset: Vector3::zero(),
            }],
        };
        let set = discretize_symmetries(&spec, 100.0, 0.01).unwrap();
        // Chord bound evaluated numerically: θ* = 2·asin(0.01), so
        // ceil(2π/θ*) = 315 which the 64-step cap takes over.
        let theta_star = 2.0 * 0.01_f64.asin();
        let uncapped = (std::f64::consts::TAU / theta_star).ceil() as usize;
        assert_eq!(uncapped, 315);
        let expected = uncapped.min(MAX_CONTINUOUS_STEPS);
        assert_eq!(set.len(), expected);
    }

    #[test]
    fn coarse_fraction_is_not_capped() {
        let spec = SymmetrySpec {
            discrete: vec![],
            continuous: vec![AxisSymmetry {
                axis: Vector3::new(0.0, 0.0, 1.0),
                offset: Vector3::zero(),
            }],
        };
        // θ* = 2·asin(0.5) = π/3 → 6 samples around the turn.
        let set = discretize_symmetries(&spec, 100.0, 0.5).unwrap();
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn duplicate_discrete_and_continuous_samples_collapse() {
        // 180° about z is both annotated discretely and hit by the
        // 2-sample continuous discretization.
        let rot = Matrix3::new([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        let spec = SymmetrySpec {
            discrete: vec![RigidPose::new(rot, Vector3::zero()).unwrap()],
            continuous: vec![AxisSymmetry {
                axis: Vector3::new(0.0, 0.0, 1.0),
                offset: Vector3::zero(),
            }],
        };
        let set = discretize_symmetries(&spec, 100.0, 1.0).unwrap();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn non_unit_axis_rejected() {
        let spec = SymmetrySpec {
            discrete: vec![],
            continuous: vec![AxisSymmetry {
                axis: Vector3::new(0.0, 0.0, 2.0),
                offset: Vector3::zero(),
            }],
        };
        assert!(matches!(
            discretize_symmetries(&spec, 100.0, 0.01),
            Err(GeomError::NonUnitAxis { .. })
        ));
    }

    #[test]
    fn offset_axis_fixes_the_offset_point() {
        let offset = Vector3::new(5.0, -2.0, 3.0);
        let spec = SymmetrySpec {
            discrete: vec![],
            continuous: vec![AxisSymmetry {
                axis: Vector3::new(0.0, 0.0, 1.0),
                offset,
            }],
        };
        let set = discretize_symmetries(&spec, 100.0, 0.3).unwrap();
        for t in set.transforms() {
            let moved = t.transform_point(offset);
            assert!((moved - offset).norm() < 1e-12);
        }
    }
}
