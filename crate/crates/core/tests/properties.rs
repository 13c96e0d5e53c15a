//! Property tests for the library invariants.

use proptest::prelude::*;

use pose_eval_core::eval::{evaluate_single, EvalOptions, SubmissionRows, Task};
use pose_eval_core::fixtures::generate_fixtures;
use pose_eval_core::geom::{
    discretize_symmetries, transform_points, AxisSymmetry, CameraIntrinsics, Matrix3, RigidPose,
    SymmetrySpec, TriMesh, Vector3,
};
use pose_eval_core::io::{load_dataset, parse_pose_submission, parse_targets, LoadOptions};
use pose_eval_core::metrics::{
    ap_from_curve, ap_overall, ar_overall, build_pr_curve, match_localization, PrCurve,
    SweepDetection,
};
use pose_eval_core::pose_error::{iou_2d, mssd, vsd_from_depths, Box2D};
use pose_eval_core::render::{rasterize_depth, DepthMap};
use pose_eval_core::{Mesh, Pose, Real, SymmetrySet, Vec3};

fn quat_rotation(q: [Real; 4]) -> Matrix3<Real> {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Matrix3::new([
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ])
}

fn arb_rotation() -> impl Strategy<Value = Matrix3<Real>> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero quaternion", |q| {
            q.iter().map(|c| c * c).sum::<Real>() > 1e-3
        })
        .prop_map(quat_rotation)
}

fn arb_pose() -> impl Strategy<Value = Pose> {
    (
        arb_rotation(),
        prop::array::uniform3(-500.0f64..500.0),
    )
        .prop_map(|(r, t)| RigidPose::new(r, Vector3::from_array(t)).unwrap())
}

fn arb_points(max: usize) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(prop::array::uniform3(-100.0f64..100.0), 1..max)
        .prop_map(|v| v.into_iter().map(Vector3::from_array).collect())
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn composition_matches_sequential_application(
        p1 in arb_pose(),
        p2 in arb_pose(),
        points in arb_points(8),
    ) {
        let once = transform_points(&p2.compose(&p1), &points);
        let twice = transform_points(&p2, &transform_points(&p1, &points));
        for (a, b) in once.iter().zip(&twice) {
            let d = (*a - *b).norm();
            let scale = a.norm().max(1.0);
            prop_assert!(d <= 1e-9 * scale, "relative deviation {}", d / scale);
        }
    }

    #[test]
    fn inverse_undoes_transform(p in arb_pose(), points in arb_points(8)) {
        let round = transform_points(&p.inverse(), &transform_points(&p, &points));
        for (a, b) in round.iter().zip(&points) {
            let d = (*a - *b).norm();
            prop_assert!(d <= 1e-9 * b.norm().max(1.0));
        }
    }

    #[test]
    fn discretization_contains_identity_without_duplicates(
        rotations in prop::collection::vec(arb_rotation(), 0..5),
        n_axes in 0usize..2,
        step in 0.05f64..0.9,
    ) {
        let spec = SymmetrySpec {
            discrete: rotations
                .into_iter()
                .map(|r| RigidPose::new(r, Vector3::zero()).unwrap())
                .collect(),
            continuous: (0..n_axes)
                .map(|i| AxisSymmetry {
                    axis: if i == 0 {
                        Vector3::new(0.0, 0.0, 1.0)
                    } else {
                        Vector3::new(1.0, 0.0, 0.0)
                    },
                    offset: Vector3::zero(),
                })
                .collect(),
        };
        let set = discretize_symmetries(&spec, 100.0, step).unwrap();
        prop_assert_eq!(set.transforms()[0], RigidPose::identity());
        for (i, a) in set.transforms().iter().enumerate() {
            for b in &set.transforms()[i + 1..] {
                let rot_dist = a
                    .rotation()
                    .to_row_major()
                    .iter()
                    .zip(b.rotation().to_row_major().iter())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                let t_dist = (a.translation() - b.translation()).norm();
                prop_assert!(
                    rot_dist > 1e-9 || t_dist > 1e-9,
                    "duplicate transforms in the set"
                );
            }
        }
    }

    #[test]
    fn projection_scale_covariant_in_depth(points in arb_points(8)) {
        // Doubling all depths halves pixel offsets from the principal
        // point.
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let near: Vec<Vec3> = points
            .iter()
            .map(|p| Vector3::new(p.x, p.y, p.z.abs() + 500.0))
            .collect();
        let far: Vec<Vec3> = near
            .iter()
            .map(|p| Vector3::new(p.x, p.y, 2.0 * p.z))
            .collect();
        let px_near = pose_eval_core::geom::project(&k, &near).unwrap();
        let px_far = pose_eval_core::geom::project(&k, &far).unwrap();
        for (a, b) in px_near.iter().zip(&px_far) {
            let off_near = [a[0] - 320.0, a[1] - 240.0];
            let off_far = [b[0] - 320.0, b[1] - 240.0];
            prop_assert!((off_near[0] - 2.0 * off_far[0]).abs() < 1e-9 * off_near[0].abs().max(1.0));
            prop_assert!((off_near[1] - 2.0 * off_far[1]).abs() < 1e-9 * off_near[1].abs().max(1.0));
        }
    }

    #[test]
    fn mssd_ground_truth_symmetry_invariance(
        est in arb_pose(),
        gt in arb_pose(),
        points in arb_points(10),
    ) {
        // Quarter-turn group about z: composing the ground truth with a
        // member permutes the min set exactly (0/±1 matrices keep the
        // arithmetic bit-exact).
        let q = Matrix3::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let spec = SymmetrySpec {
            discrete: vec![
                RigidPose::new(q, Vector3::zero()).unwrap(),
                RigidPose::new(q * q, Vector3::zero()).unwrap(),
                RigidPose::new(q * q * q, Vector3::zero()).unwrap(),
            ],
            continuous: vec![],
        };
        let syms = discretize_symmetries(&spec, 100.0, 0.01).unwrap();
        let base = mssd(&est, &gt, &points, &syms).unwrap();
        for sym in syms.transforms() {
            let composed = gt.compose(sym);
            let other = mssd(&est, &composed, &points, &syms).unwrap();
            prop_assert_eq!(base, other);
        }
    }

    #[test]
    fn mssd_symmetric_without_symmetries(
        a in arb_pose(),
        b in arb_pose(),
        points in arb_points(10),
    ) {
        let syms = SymmetrySet::identity();
        let ab = mssd(&a, &b, &points, &syms).unwrap();
        let ba = mssd(&b, &a, &points, &syms).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
    }

    #[test]
    fn vsd_monotone_in_tau_and_bounded(
        est in prop::collection::vec(prop::option::of(500.0f64..1500.0), 64),
        gt in prop::collection::vec(prop::option::of(500.0f64..1500.0), 64),
        tau1 in 1.0f64..100.0,
        tau2 in 1.0f64..100.0,
    ) {
        let to_map = |v: &[Option<Real>]| {
            DepthMap::new(8, 8, v.iter().map(|o| o.unwrap_or(0.0)).collect()).unwrap()
        };
        let d_est = to_map(&est);
        let d_gt = to_map(&gt);
        let scene = DepthMap::zeros(8, 8);
        let (lo, hi) = if tau1 <= tau2 { (tau1, tau2) } else { (tau2, tau1) };
        let e_lo = vsd_from_depths(&d_est, &d_gt, &scene, 15.0, lo).unwrap();
        let e_hi = vsd_from_depths(&d_est, &d_gt, &scene, 15.0, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&e_lo));
        prop_assert!((0.0..=1.0).contains(&e_hi));
        prop_assert!(e_hi <= e_lo, "vsd must be non-increasing in tau");
    }

    #[test]
    fn iou_identity_and_symmetry(
        // Quarter-pixel grid keeps the box arithmetic exact, which is
        // what real detections are anyway.
        ax in -200i32..200, ay in -200i32..200,
        aw in 0i32..160, ah in 0i32..160,
        bx in -200i32..200, by in -200i32..200,
        bw in 0i32..160, bh in 0i32..160,
    ) {
        let q = |v: i32| v as Real * 0.25;
        let a = Box2D::new(q(ax), q(ay), q(aw), q(ah)).unwrap();
        let b = Box2D::new(q(bx), q(by), q(bw), q(bh)).unwrap();
        prop_assert_eq!(iou_2d(&a, &b), iou_2d(&b, &a));
        let self_iou = iou_2d(&a, &a);
        if aw > 0 && ah > 0 {
            prop_assert_eq!(self_iou, 1.0);
        } else {
            prop_assert_eq!(self_iou, 0.0);
        }
        // IoU of 1 implies equal boxes with positive area.
        if iou_2d(&a, &b) == 1.0 {
            prop_assert!(a.area() > 0.0);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn matching_invariant_under_monotone_score_rescale(
        // Quantized scores: distinct values stay distinct under the
        // rescale and ties stay ties.
        raw_scores in prop::collection::vec(1u32..100, 1..6),
        raw_errors in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 3), 1..6),
        theta in 1.0f64..8.0,
    ) {
        let scores: Vec<Real> = raw_scores.iter().map(|&s| s as Real / 100.0).collect();
        let n = scores.len().min(raw_errors.len());
        let scores = &scores[..n];
        let errors = &raw_errors[..n];
        let base = match_localization(scores, errors, theta);
        // exp(3x + 1) is strictly monotone.
        let rescaled: Vec<Real> = scores.iter().map(|s| (3.0 * s + 1.0).exp()).collect();
        let same = match_localization(&rescaled, errors, theta);
        prop_assert_eq!(base, same);
    }

    #[test]
    fn pr_curve_invariant_under_monotone_score_rescale(
        raw_scores in prop::collection::vec(1u32..100, 0..6),
        errs in prop::collection::vec(0.0f64..10.0, 6),
        eligible in prop::collection::vec(any::<bool>(), 2),
        theta in 1.0f64..8.0,
    ) {
        let dets: Vec<SweepDetection> = raw_scores
            .iter()
            .enumerate()
            .map(|(i, &score)| SweepDetection {
                score: score as Real / 100.0,
                order: i,
                image: 0,
                errors: vec![errs[i % errs.len()], errs[(i + 1) % errs.len()]],
            })
            .collect();
        let gt = vec![eligible.clone()];
        let base = build_pr_curve(&dets, &gt, &[theta]);
        let rescaled: Vec<SweepDetection> = dets
            .iter()
            .map(|d| SweepDetection {
                score: (2.0 * d.score + 0.5).exp(),
                ..d.clone()
            })
            .collect();
        let same = build_pr_curve(&rescaled, &gt, &[theta]);
        prop_assert_eq!(&base.points, &same.points);
        prop_assert_eq!(ap_from_curve(&base), ap_from_curve(&same));
    }

    #[test]
    fn adding_a_correct_estimate_never_decreases_matches(
        // At most two estimates beforehand: with three instances the
        // top-n cap then never evicts anyone. (Under eviction the
        // greedy scheme can legitimately lose a match: the newcomer
        // both displaces a scoring estimate and steals a different
        // instance than the one it freed.)
        scores in prop::collection::vec(0.01f64..1.0, 1..3),
        raw_errors in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 3), 1..3),
        new_score in 0.01f64..1.0,
        theta in 2.0f64..8.0,
    ) {
        let n = scores.len().min(raw_errors.len());
        let mut scores = scores[..n].to_vec();
        let mut errors = raw_errors[..n].to_vec();
        let before = match_localization(&scores, &errors, theta).len();
        // The added estimate is correct for every instance.
        scores.push(new_score);
        errors.push(vec![theta * 0.5, theta * 0.4, theta * 0.3]);
        let after = match_localization(&scores, &errors, theta).len();
        prop_assert!(after >= before);
    }

    #[test]
    fn adding_an_incorrect_detection_never_increases_ap(
        scores in prop::collection::vec(0.01f64..1.0, 0..5),
        errs in prop::collection::vec(0.0f64..10.0, 5),
        new_score in 0.01f64..1.0,
        theta in 1.0f64..8.0,
    ) {
        let mut dets: Vec<SweepDetection> = scores
            .iter()
            .enumerate()
            .map(|(i, &score)| SweepDetection {
                score,
                order: i,
                image: 0,
                errors: vec![errs[i % errs.len()]],
            })
            .collect();
        let gt = vec![vec![true]];
        let before = ap_from_curve(&build_pr_curve(&dets, &gt, &[theta]));
        dets.push(SweepDetection {
            score: new_score,
            order: dets.len(),
            image: 0,
            errors: vec![theta + 1.0], // never passes
        });
        let after = ap_from_curve(&build_pr_curve(&dets, &gt, &[theta]));
        prop_assert!(after <= before + 1e-15);
    }

    #[test]
    fn overall_scores_commute_with_dataset_permutation(
        mut values in prop::collection::vec(0.0f64..1.0, 1..7),
    ) {
        let forward_ar = ar_overall(&values).unwrap();
        let forward_ap = ap_overall(&values).unwrap();
        values.reverse();
        // Mean over the reversed order agrees to within accumulation
        // rounding.
        prop_assert!((ar_overall(&values).unwrap() - forward_ar).abs() < 1e-12);
        prop_assert!((ap_overall(&values).unwrap() - forward_ap).abs() < 1e-12);
    }

    #[test]
    fn ap_from_curve_stays_in_unit_interval(
        points in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 0..20),
    ) {
        let mut sorted = points;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let curve = PrCurve {
            points: sorted,
            num_tp: 0,
            num_fp: 0,
            num_gt: 0,
        };
        let ap = ap_from_curve(&curve);
        prop_assert!((0.0..=1.0).contains(&ap));
    }
}

// ---------------------------------------------------------------------------
// Deterministic (non-proptest) invariants.
// ---------------------------------------------------------------------------

/// Rendered cube footprint must match the analytic silhouette (the
/// convex hull of the projected corners) to within one pixel of the
/// boundary.
#[test]
fn cube_footprint_matches_analytic_silhouette() {
    let k = CameraIntrinsics::new(200.0, 200.0, 80.0, 60.0, 160, 120).unwrap();
    let half = 30.0;
    let mut verts = Vec::new();
    for &z in &[-half, half] {
        for &y in &[-half, half] {
            for &x in &[-half, half] {
                verts.push(Vector3::new(x, y, z));
            }
        }
    }
    let tris = vec![
        [0u32, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    let mesh: Mesh = TriMesh::new(verts.clone(), tris).unwrap();
    let rot = quat_rotation([0.9, 0.2, -0.3, 0.15]);
    let pose = RigidPose::new(rot, Vector3::new(5.0, -8.0, 700.0)).unwrap();
    let depth = rasterize_depth(&mesh, &pose, &k);

    // Analytic silhouette: convex hull of the projected corners.
    let projected: Vec<[Real; 2]> = verts
        .iter()
        .map(|&v| {
            let p = pose.transform_point(v);
            [200.0 * p.x / p.z + 80.0, 200.0 * p.y / p.z + 60.0]
        })
        .collect();
    let hull = convex_hull(&projected);

    for py in 0..120u32 {
        for px in 0..160u32 {
            let c = [px as Real + 0.5, py as Real + 0.5];
            let dist = signed_distance_to_hull(&hull, c);
            let covered = depth.at(px, py) > 0.0;
            if dist < -1.0 {
                assert!(covered, "pixel {c:?} is {dist:.2}px inside but uncovered");
            }
            if dist > 1.0 {
                assert!(!covered, "pixel {c:?} is {dist:.2}px outside but covered");
            }
        }
    }
}

fn convex_hull(points: &[[Real; 2]]) -> Vec<[Real; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let cross = |o: [Real; 2], a: [Real; 2], b: [Real; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[Real; 2]> = Vec::new();
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Negative inside, positive outside, in pixels.
fn signed_distance_to_hull(hull: &[[Real; 2]], p: [Real; 2]) -> Real {
    let mut inside = true;
    let mut min_edge_dist = Real::INFINITY;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross < 0.0 {
            inside = false;
        }
        // Point-to-segment distance.
        let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
        let (wx, wy) = (p[0] - a[0], p[1] - a[1]);
        let t = ((wx * vx + wy * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
        let (dx, dy) = (wx - t * vx, wy - t * vy);
        min_edge_dist = min_edge_dist.min((dx * dx + dy * dy).sqrt());
    }
    if inside {
        -min_edge_dist
    } else {
        min_edge_dist
    }
}

/// Evaluating the ground truth as a submission scores 1.0 on a second
/// fixture seed as well.
#[test]
fn ground_truth_submission_is_perfect_on_other_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let summary = generate_fixtures(1234567, dir.path()).unwrap();
    let targets = parse_targets(&std::fs::read(&summary.targets_path).unwrap()).unwrap();
    let dataset = load_dataset(dir.path(), &targets, LoadOptions { load_meshes: true }).unwrap();
    let rows = SubmissionRows::Poses(
        parse_pose_submission(&std::fs::read(&summary.perfect_pose_path).unwrap()).unwrap(),
    );
    let report = evaluate_single(
        Task::Loc6d,
        &dataset,
        &targets,
        &rows,
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(report.overall, 1.0);
    let report = evaluate_single(
        Task::Det6d,
        &dataset,
        &targets,
        &rows,
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(report.overall, 1.0);
}
