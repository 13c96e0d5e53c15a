//! End-to-end evaluation pipeline: groups predictions with ground
//! truth, computes pose errors, runs the matching at every grid
//! threshold and aggregates AR/AP into a [`ScoreReport`].
//!
//! Work is partitioned per image; partitions run on a bounded rayon
//! pool and are reduced in a fixed order, so results are bit-identical
//! for any parallelism setting.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::discretize_symmetries;
use crate::io::{load_depth, Dataset, IoError, SceneCameraEntry};
use crate::metrics::{
    ap_dataset, ap_dataset_6d, ap_from_curve, ap_object, ap_overall, ar_dataset, ar_overall,
    average_recall, build_pr_curve, cap_detections_per_image, default_grid, match_localization,
    mean_image_time, Detection2D, GtInstance, MetricsError, PoseEstimate, RecallCounts,
    SweepDetection, TargetList, ThresholdGrid,
};
use crate::pose_error::{iou_2d, mspd, mssd, vsd_from_depths_multi, PoseErrorError, PoseErrorKind};
use crate::render::{rasterize_depth, DepthMap};
use crate::report::{
    percent_1dp, CurveAtThreshold, DatasetScores, ErrorFnScores, ScoreReport, ThresholdScore,
};
use crate::{Camera, Mesh, Pose, Real, SymmetrySet};

/// Occlusion tolerance for VSD visibility masks, in millimeters.
pub const DEFAULT_VSD_DELTA: Real = 15.0;
/// Continuous symmetries are discretized so that surface points move at
/// most this fraction of the diameter between neighboring samples.
pub const DEFAULT_SYM_STEP_FRACTION: Real = 0.01;
/// Reference image width the MSPD thresholds are defined at.
pub const MSPD_REF_WIDTH: Real = 640.0;

/// The three evaluation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Loc6d,
    Det6d,
    Det2d,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Loc6d => "loc6d",
            Task::Det6d => "det6d",
            Task::Det2d => "det2d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "loc6d" => Some(Task::Loc6d),
            "det6d" => Some(Task::Det6d),
            "det2d" => Some(Task::Det2d),
            _ => None,
        }
    }

    pub fn score_kind(self) -> &'static str {
        match self {
            Task::Loc6d => "ar",
            Task::Det6d | Task::Det2d => "ap",
        }
    }

    /// Whether the submission carries poses rather than 2D boxes.
    pub fn wants_poses(self) -> bool {
        !matches!(self, Task::Det2d)
    }
}

/// Threshold grids for every error function.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    pub vsd: ThresholdGrid,
    pub mssd: ThresholdGrid,
    pub mspd: ThresholdGrid,
    pub iou: ThresholdGrid,
}

impl Default for GridSet {
    fn default() -> Self {
        Self {
            vsd: default_grid(PoseErrorKind::Vsd),
            mssd: default_grid(PoseErrorKind::Mssd),
            mspd: default_grid(PoseErrorKind::Mspd),
            iou: default_grid(PoseErrorKind::Iou2d),
        }
    }
}

/// Pipeline knobs; the defaults reproduce leaderboard conventions.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub grids: GridSet,
    /// Worker threads; 0 uses the global rayon pool.
    pub jobs: usize,
    /// VSD occlusion tolerance in millimeters.
    pub vsd_delta: Real,
    /// Record per-object PR curves in the report (detection tasks).
    pub record_curves: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            grids: GridSet::default(),
            jobs: 0,
            vsd_delta: DEFAULT_VSD_DELTA,
            record_curves: true,
        }
    }
}

/// Rows of a parsed submission, matching the task's format.
#[derive(Debug, Clone)]
pub enum SubmissionRows {
    Poses(Vec<PoseEstimate>),
    Boxes(Vec<Detection2D>),
}

impl SubmissionRows {
    pub fn len(&self) -> usize {
        match self {
            SubmissionRows::Poses(v) => v.len(),
            SubmissionRows::Boxes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("validation: {0}")]
    Validation(String),
    #[error("scene {scene_id} image {im_id} object {obj_id}: {source}")]
    PoseError {
        scene_id: u32,
        im_id: u32,
        obj_id: u32,
        source: PoseErrorError,
    },
}

fn run_with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("rayon pool")
            .install(f)
    }
}

/// Estimates grouped by (scene, image, object), in submission order.
type GroupedEstimates = BTreeMap<(u32, u32, u32), Vec<(usize, PoseEstimate)>>;

/// One targeted image with everything per-image work needs.
struct ImageCtx<'a> {
    scene_id: u32,
    im_id: u32,
    camera: &'a SceneCameraEntry,
    gts: &'a [GtInstance],
    target_objs: Vec<u32>,
}

fn collect_images<'a>(
    dataset: &'a Dataset,
    targets: &TargetList,
) -> Result<Vec<ImageCtx<'a>>, EvalError> {
    let mut out = Vec::new();
    for (&(scene_id, im_id), entries) in targets.images() {
        let scene = dataset.scenes.get(&scene_id).ok_or_else(|| {
            EvalError::Validation(format!(
                "targets reference scene {scene_id} which is not in the dataset"
            ))
        })?;
        let camera = scene.cameras.get(&im_id).ok_or_else(|| {
            EvalError::Validation(format!(
                "scene {scene_id} has no camera for targeted image {im_id}"
            ))
        })?;
        let gts = scene.gts.get(&im_id).map(Vec::as_slice).ok_or_else(|| {
            EvalError::Validation(format!(
                "scene {scene_id} has no ground truth for targeted image {im_id}"
            ))
        })?;
        out.push(ImageCtx {
            scene_id,
            im_id,
            camera,
            gts,
            target_objs: entries.iter().map(|e| e.obj_id).collect(),
        });
    }
    Ok(out)
}

fn check_known_objects(
    dataset: &Dataset,
    obj_ids: impl Iterator<Item = u32>,
) -> Result<(), EvalError> {
    let mut unknown: Vec<u32> = obj_ids.filter(|id| !dataset.models.contains(*id)).collect();
    unknown.sort_unstable();
    unknown.dedup();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(EvalError::Validation(format!(
            "submission references object ids unknown to models_info: {unknown:?}"
        )))
    }
}

fn object_assets(dataset: &Dataset, obj_id: u32) -> Result<(Real, &Mesh, SymmetrySet), EvalError> {
    let info = dataset
        .models
        .get(obj_id)
        .ok_or_else(|| EvalError::Validation(format!("object {obj_id} missing in models_info")))?;
    let mesh = dataset
        .meshes
        .get(&obj_id)
        .ok_or_else(|| EvalError::Validation(format!("object {obj_id} mesh not loaded")))?;
    let syms = discretize_symmetries(&info.symmetries, info.diameter, DEFAULT_SYM_STEP_FRACTION)
        .map_err(|e| EvalError::Validation(format!("object {obj_id} symmetries: {e}")))?;
    Ok((info.diameter, mesh, syms))
}

/// Poses that put model points at or behind the camera can never be
/// correct; their projection errors become +inf instead of failing the
/// run. Ground-truth poses behind the camera are a dataset defect and
/// do fail it.
fn estimate_projects(pose: &Pose, mesh: &Mesh) -> bool {
    mesh.vertices().iter().all(|&v| pose.transform_point(v).z > 0.0)
}

fn pose_error_ctx(scene_id: u32, im_id: u32, obj_id: u32) -> impl Fn(PoseErrorError) -> EvalError {
    move |source| EvalError::PoseError {
        scene_id,
        im_id,
        obj_id,
        source,
    }
}

// ---------------------------------------------------------------------------
// 6D localization
// ---------------------------------------------------------------------------

const LOC_FNS: [PoseErrorKind; 3] = [PoseErrorKind::Vsd, PoseErrorKind::Mssd, PoseErrorKind::Mspd];

#[derive(Clone)]
struct ObjTally {
    eligible: usize,
    /// matched[fn][combo]
    matched: Vec<Vec<usize>>,
}

struct LocImageResult {
    per_object: Vec<(u32, ObjTally)>,
    times: Vec<Real>,
}

#[allow(clippy::too_many_arguments)]
fn loc_image(
    dataset: &Dataset,
    ctx: &ImageCtx,
    grouped: &GroupedEstimates,
    options: &EvalOptions,
    times: Vec<Real>,
) -> Result<LocImageResult, EvalError> {
    let camera: &Camera = &ctx.camera.camera;
    let width_factor = camera.width as Real / MSPD_REF_WIDTH;
    let grids = [&options.grids.vsd, &options.grids.mssd, &options.grids.mspd];

    // Scene depth is decoded once per image, and only when VSD has
    // pairs to score.
    let mut scene_depth: Option<DepthMap<Real>> = None;

    let mut per_object = Vec::new();
    for &obj_id in &ctx.target_objs {
        let err_ctx = pose_error_ctx(ctx.scene_id, ctx.im_id, obj_id);
        let (diameter, mesh, syms) = object_assets(dataset, obj_id)?;
        let eligible: Vec<&GtInstance> = ctx
            .gts
            .iter()
            .filter(|g| g.obj_id == obj_id && g.is_eligible())
            .collect();
        let ests = grouped
            .get(&(ctx.scene_id, ctx.im_id, obj_id))
            .map(Vec::as_slice)
            .unwrap_or(&[]);

        let mut tally = ObjTally {
            eligible: eligible.len(),
            matched: grids.iter().map(|g| vec![0; g.combinations()]).collect(),
        };

        if !eligible.is_empty() && !ests.is_empty() {
            let scores: Vec<Real> = ests.iter().map(|(_, e)| e.score).collect();

            let mut mssd_m = vec![vec![0.0; eligible.len()]; ests.len()];
            let mut mspd_m = vec![vec![0.0; eligible.len()]; ests.len()];
            for (i, (_, est)) in ests.iter().enumerate() {
                let projects = estimate_projects(&est.pose, mesh);
                for (j, gt) in eligible.iter().enumerate() {
                    mssd_m[i][j] =
                        mssd(&est.pose, &gt.pose, mesh.vertices(), &syms).map_err(&err_ctx)?;
                    mspd_m[i][j] = if projects {
                        mspd(&est.pose, &gt.pose, mesh.vertices(), &syms, camera)
                            .map_err(&err_ctx)?
                    } else {
                        Real::INFINITY
                    };
                }
            }

            if scene_depth.is_none() {
                let path = dataset.paths.depth_png(ctx.scene_id, ctx.im_id);
                let bytes = crate::io::read_file(&path)?;
                scene_depth = Some(
                    load_depth(&bytes, ctx.camera.depth_scale)
                        .map_err(|e| IoError::from(e).in_file(&path))?,
                );
            }
            let scene = scene_depth.as_ref().unwrap();
            let taus_mm: Vec<Real> = options.grids.vsd.taus.iter().map(|t| t * diameter).collect();
            let n_taus = taus_mm.len();
            let gt_renders: Vec<DepthMap<Real>> = eligible
                .iter()
                .map(|gt| rasterize_depth(mesh, &gt.pose, camera))
                .collect();
            let mut vsd_m = vec![vec![vec![0.0; eligible.len()]; ests.len()]; n_taus];
            for (i, (_, est)) in ests.iter().enumerate() {
                let est_render = rasterize_depth(mesh, &est.pose, camera);
                for (j, gt_render) in gt_renders.iter().enumerate() {
                    let per_tau = vsd_from_depths_multi(
                        &est_render,
                        gt_render,
                        scene,
                        options.vsd_delta,
                        &taus_mm,
                    )
                    .map_err(&err_ctx)?;
                    for (t, v) in per_tau.into_iter().enumerate() {
                        vsd_m[t][i][j] = v;
                    }
                }
            }

            for (t_idx, theta) in options.grids.vsd.thresholds.iter().enumerate() {
                for (tau_idx, matrix) in vsd_m.iter().enumerate() {
                    let combo = t_idx * n_taus + tau_idx;
                    tally.matched[0][combo] = match_localization(&scores, matrix, *theta).len();
                }
            }
            for (k, frac) in options.grids.mssd.thresholds.iter().enumerate() {
                tally.matched[1][k] = match_localization(&scores, &mssd_m, frac * diameter).len();
            }
            for (k, base) in options.grids.mspd.thresholds.iter().enumerate() {
                tally.matched[2][k] =
                    match_localization(&scores, &mspd_m, base * width_factor).len();
            }
        }
        per_object.push((obj_id, tally));
    }

    Ok(LocImageResult { per_object, times })
}

fn evaluate_localization(
    dataset: &Dataset,
    targets: &TargetList,
    estimates: &[PoseEstimate],
    options: &EvalOptions,
) -> Result<DatasetScores, EvalError> {
    check_known_objects(dataset, estimates.iter().map(|e| e.obj_id))?;
    let images = collect_images(dataset, targets)?;

    let mut grouped: GroupedEstimates = BTreeMap::new();
    let mut times_by_image: BTreeMap<(u32, u32), Vec<Real>> = BTreeMap::new();
    let mut rows_on_targets = 0usize;
    for (order, est) in estimates.iter().enumerate() {
        if !targets.contains_image(est.scene_id, est.im_id) {
            continue;
        }
        rows_on_targets += 1;
        times_by_image
            .entry((est.scene_id, est.im_id))
            .or_default()
            .push(est.time_s);
        // Estimates for objects outside the image's target list are
        // ignored: localization provides the list of what to estimate.
        if targets
            .entries(est.scene_id, est.im_id)
            .iter()
            .any(|t| t.obj_id == est.obj_id)
        {
            grouped
                .entry((est.scene_id, est.im_id, est.obj_id))
                .or_default()
                .push((order, est.clone()));
        }
    }

    let results: Vec<LocImageResult> = run_with_pool(options.jobs, || {
        images
            .par_iter()
            .map(|ctx| {
                let times = times_by_image
                    .get(&(ctx.scene_id, ctx.im_id))
                    .cloned()
                    .unwrap_or_default();
                loc_image(dataset, ctx, &grouped, options, times)
            })
            .collect::<Result<Vec<_>, EvalError>>()
    })?;

    // Integer tallies: reduction order cannot affect the result.
    let grids = [&options.grids.vsd, &options.grids.mssd, &options.grids.mspd];
    let mut matched: Vec<Vec<usize>> = grids.iter().map(|g| vec![0; g.combinations()]).collect();
    let mut eligible_total = 0usize;
    let mut per_object: BTreeMap<u32, ObjTally> = BTreeMap::new();
    let add_counts = |into: &mut [Vec<usize>], from: &[Vec<usize>]| {
        for (dst, src) in into.iter_mut().zip(from) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    };
    for result in &results {
        for (obj_id, tally) in &result.per_object {
            eligible_total += tally.eligible;
            add_counts(&mut matched, &tally.matched);
            let entry = per_object.entry(*obj_id).or_insert_with(|| ObjTally {
                eligible: 0,
                matched: grids.iter().map(|g| vec![0; g.combinations()]).collect(),
            });
            entry.eligible += tally.eligible;
            add_counts(&mut entry.matched, &tally.matched);
        }
    }

    let mut per_error = BTreeMap::new();
    let mut fn_scores = [0.0; 3];
    for (f, kind) in LOC_FNS.iter().enumerate() {
        let grid = grids[f];
        let score = average_recall(&RecallCounts {
            matched: matched[f].clone(),
            total_eligible: eligible_total,
        })?;
        fn_scores[f] = score;

        let mut per_threshold = Vec::with_capacity(grid.combinations());
        let taus: Vec<Option<Real>> = if grid.taus.is_empty() {
            vec![None]
        } else {
            grid.taus.iter().map(|&t| Some(t)).collect()
        };
        for (t_idx, &threshold) in grid.thresholds.iter().enumerate() {
            for (tau_idx, &tau) in taus.iter().enumerate() {
                let combo = t_idx * taus.len() + tau_idx;
                per_threshold.push(ThresholdScore {
                    threshold,
                    tau,
                    value: matched[f][combo] as Real / eligible_total as Real,
                });
            }
        }

        let mut per_object_scores = BTreeMap::new();
        for (&obj_id, tally) in &per_object {
            if tally.eligible > 0 {
                per_object_scores.insert(
                    obj_id,
                    average_recall(&RecallCounts {
                        matched: tally.matched[f].clone(),
                        total_eligible: tally.eligible,
                    })?,
                );
            }
        }

        per_error.insert(
            kind.name().to_string(),
            ErrorFnScores {
                score,
                percent_1dp: percent_1dp(score),
                per_threshold,
                per_object: per_object_scores,
                curves: BTreeMap::new(),
            },
        );
    }

    let score = ar_dataset(fn_scores[0], fn_scores[1], fn_scores[2]);
    let per_object_combined = combined_per_object(&per_error);
    let times: Vec<Vec<Real>> = results.iter().map(|r| r.times.clone()).collect();

    Ok(DatasetScores {
        score,
        percent_1dp: percent_1dp(score),
        mean_image_time_s: mean_image_time(&[times]),
        num_targeted_images: images.len(),
        num_eligible_gts: eligible_total,
        num_predictions: rows_on_targets,
        per_error,
        per_object: per_object_combined,
    })
}

fn combined_per_object(per_error: &BTreeMap<String, ErrorFnScores>) -> BTreeMap<u32, Real> {
    let mut sums: BTreeMap<u32, (Real, usize)> = BTreeMap::new();
    for scores in per_error.values() {
        for (&obj, &v) in &scores.per_object {
            let e = sums.entry(obj).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(obj, (sum, n))| (obj, sum / n as Real))
        .collect()
}

// ---------------------------------------------------------------------------
// Detection (6D and 2D)
// ---------------------------------------------------------------------------

/// One detection row in task-agnostic form.
struct DetRow {
    order: usize,
    obj_id: u32,
    score: Real,
    payload: DetPayload,
}

enum DetPayload {
    Pose(Pose),
    Box(crate::Box2),
}

/// Per (image slot, object): eligibility flags, per-fn resolved
/// thresholds and per-detection error vectors.
struct DetCell {
    gt_eligible: Vec<bool>,
    /// thetas[fn][grid index], resolved for this image.
    thetas: Vec<Vec<Real>>,
    /// detections in submission order: (score, order, errors[fn][gt])
    dets: Vec<(Real, usize, Vec<Vec<Real>>)>,
}

fn det_image(
    dataset: &Dataset,
    task: Task,
    ctx: &ImageCtx,
    rows: &[&DetRow],
    object_ids: &[u32],
    options: &EvalOptions,
) -> Result<Vec<DetCell>, EvalError> {
    let camera = &ctx.camera.camera;
    let width_factor = camera.width as Real / MSPD_REF_WIDTH;

    let mut cells = Vec::with_capacity(object_ids.len());
    for &obj_id in object_ids {
        let err_ctx = pose_error_ctx(ctx.scene_id, ctx.im_id, obj_id);
        let gts: Vec<&GtInstance> = ctx.gts.iter().filter(|g| g.obj_id == obj_id).collect();
        let gt_eligible: Vec<bool> = gts.iter().map(|g| g.is_eligible()).collect();
        let obj_rows: Vec<&&DetRow> = rows.iter().filter(|r| r.obj_id == obj_id).collect();

        let (thetas, dets) = match task {
            Task::Det6d => {
                let (diameter, mesh, syms) = object_assets(dataset, obj_id)?;
                let thetas = vec![
                    options
                        .grids
                        .mssd
                        .thresholds
                        .iter()
                        .map(|f| f * diameter)
                        .collect::<Vec<_>>(),
                    options
                        .grids
                        .mspd
                        .thresholds
                        .iter()
                        .map(|b| b * width_factor)
                        .collect::<Vec<_>>(),
                ];
                let mut dets = Vec::with_capacity(obj_rows.len());
                for row in &obj_rows {
                    let pose = match &row.payload {
                        DetPayload::Pose(p) => p,
                        DetPayload::Box(_) => unreachable!("pose task carries poses"),
                    };
                    let projects = estimate_projects(pose, mesh);
                    let mut mssd_errs = Vec::with_capacity(gts.len());
                    let mut mspd_errs = Vec::with_capacity(gts.len());
                    for gt in &gts {
                        mssd_errs.push(
                            mssd(pose, &gt.pose, mesh.vertices(), &syms).map_err(&err_ctx)?,
                        );
                        mspd_errs.push(if projects {
                            mspd(pose, &gt.pose, mesh.vertices(), &syms, camera)
                                .map_err(&err_ctx)?
                        } else {
                            Real::INFINITY
                        });
                    }
                    dets.push((row.score, row.order, vec![mssd_errs, mspd_errs]));
                }
                (thetas, dets)
            }
            Task::Det2d => {
                // Matching works on errors where lower is better, so an
                // IoU of v enters as 1 − v with thresholds 1 − θ.
                let thetas = vec![options
                    .grids
                    .iou
                    .thresholds
                    .iter()
                    .map(|t| 1.0 - t)
                    .collect::<Vec<_>>()];
                let mut dets = Vec::with_capacity(obj_rows.len());
                for row in &obj_rows {
                    let bbox = match &row.payload {
                        DetPayload::Box(b) => b,
                        DetPayload::Pose(_) => unreachable!("2D task carries boxes"),
                    };
                    let errs: Vec<Real> =
                        gts.iter().map(|gt| 1.0 - iou_2d(bbox, &gt.bbox)).collect();
                    dets.push((row.score, row.order, vec![errs]));
                }
                (thetas, dets)
            }
            Task::Loc6d => unreachable!("localization has its own path"),
        };
        cells.push(DetCell {
            gt_eligible,
            thetas,
            dets,
        });
    }
    Ok(cells)
}

fn evaluate_detection(
    dataset: &Dataset,
    targets: &TargetList,
    task: Task,
    rows: &SubmissionRows,
    options: &EvalOptions,
) -> Result<DatasetScores, EvalError> {
    // Normalize rows into a task-agnostic form, keeping file order.
    let all_rows: Vec<DetRow> = match rows {
        SubmissionRows::Poses(v) => v
            .iter()
            .enumerate()
            .map(|(order, e)| DetRow {
                order,
                obj_id: e.obj_id,
                score: e.score,
                payload: DetPayload::Pose(e.pose),
            })
            .collect(),
        SubmissionRows::Boxes(v) => v
            .iter()
            .enumerate()
            .map(|(order, d)| DetRow {
                order,
                obj_id: d.obj_id,
                score: d.score,
                payload: DetPayload::Box(d.bbox),
            })
            .collect(),
    };
    let keys: Vec<(u32, u32)> = match rows {
        SubmissionRows::Poses(v) => v.iter().map(|e| (e.scene_id, e.im_id)).collect(),
        SubmissionRows::Boxes(v) => v.iter().map(|d| (d.scene_id, d.im_id)).collect(),
    };
    let times: Vec<Real> = match rows {
        SubmissionRows::Poses(v) => v.iter().map(|e| e.time_s).collect(),
        SubmissionRows::Boxes(v) => v.iter().map(|d| d.time_s).collect(),
    };
    check_known_objects(dataset, all_rows.iter().map(|r| r.obj_id))?;

    let images = collect_images(dataset, targets)?;
    let image_slot: BTreeMap<(u32, u32), usize> = images
        .iter()
        .enumerate()
        .map(|(i, ctx)| ((ctx.scene_id, ctx.im_id), i))
        .collect();

    // Keep rows on targeted images, then apply the per-image cap of the
    // most confident detections across all objects.
    let mut targeted_idx: Vec<usize> = Vec::new();
    let mut times_by_slot: Vec<Vec<Real>> = vec![Vec::new(); images.len()];
    for (i, key) in keys.iter().enumerate() {
        if let Some(&slot) = image_slot.get(key) {
            targeted_idx.push(i);
            times_by_slot[slot].push(times[i]);
        }
    }
    let capped_keys: Vec<(u32, u32)> = targeted_idx.iter().map(|&i| keys[i]).collect();
    let capped_scores: Vec<Real> = targeted_idx.iter().map(|&i| all_rows[i].score).collect();
    let kept_local = cap_detections_per_image(&capped_keys, &capped_scores);
    let kept_idx: Vec<usize> = kept_local.iter().map(|&l| targeted_idx[l]).collect();

    // The object set under evaluation is the dataset's target list.
    let object_ids = targets.object_ids();
    let mut rows_by_slot: Vec<Vec<&DetRow>> = vec![Vec::new(); images.len()];
    for &i in &kept_idx {
        let slot = image_slot[&keys[i]];
        rows_by_slot[slot].push(&all_rows[i]);
    }

    // Heavy part: error matrices, parallel per image.
    let cells: Vec<Vec<DetCell>> = run_with_pool(options.jobs, || {
        images
            .par_iter()
            .enumerate()
            .map(|(slot, ctx)| {
                det_image(dataset, task, ctx, &rows_by_slot[slot], &object_ids, options)
            })
            .collect::<Result<Vec<_>, EvalError>>()
    })?;

    let (fn_kinds, grid_values): (Vec<PoseErrorKind>, Vec<&[Real]>) = match task {
        Task::Det6d => (
            vec![PoseErrorKind::Mssd, PoseErrorKind::Mspd],
            vec![&options.grids.mssd.thresholds, &options.grids.mspd.thresholds],
        ),
        Task::Det2d => (vec![PoseErrorKind::Iou2d], vec![&options.grids.iou.thresholds]),
        Task::Loc6d => unreachable!(),
    };

    // Per (object, fn): sweep every grid threshold.
    let mut per_error: BTreeMap<String, ErrorFnScores> = BTreeMap::new();
    let mut fn_dataset_scores = Vec::with_capacity(fn_kinds.len());
    let mut eligible_total = 0usize;
    for slot_cells in cells.iter() {
        for cell in slot_cells {
            eligible_total += cell.gt_eligible.iter().filter(|e| **e).count();
        }
    }

    for (f, kind) in fn_kinds.iter().enumerate() {
        let mut per_object_ap: BTreeMap<u32, Real> = BTreeMap::new();
        let mut curves_by_obj: BTreeMap<u32, Vec<CurveAtThreshold>> = BTreeMap::new();
        let mut ap_sum_per_threshold = vec![0.0; grid_values[f].len()];

        for (o_idx, &obj_id) in object_ids.iter().enumerate() {
            // Assemble the sweep inputs for this object.
            let mut sweep: Vec<SweepDetection> = Vec::new();
            let mut eligible: Vec<Vec<bool>> = Vec::new();
            for (slot, slot_cells) in cells.iter().enumerate() {
                let cell = &slot_cells[o_idx];
                eligible.push(cell.gt_eligible.clone());
                for (score, order, errors) in &cell.dets {
                    sweep.push(SweepDetection {
                        score: *score,
                        order: *order,
                        image: slot,
                        errors: errors[f].clone(),
                    });
                }
            }

            let mut ap_per_threshold = Vec::with_capacity(grid_values[f].len());
            let mut curves = Vec::new();
            for (k, &grid_value) in grid_values[f].iter().enumerate() {
                let thetas: Vec<Real> = cells
                    .iter()
                    .map(|slot_cells| slot_cells[o_idx].thetas[f][k])
                    .collect();
                let curve = build_pr_curve(&sweep, &eligible, &thetas);
                let ap = ap_from_curve(&curve);
                ap_sum_per_threshold[k] += ap;
                ap_per_threshold.push(ap);
                if options.record_curves {
                    curves.push(CurveAtThreshold {
                        threshold: grid_value,
                        curve,
                    });
                }
            }
            per_object_ap.insert(obj_id, ap_object(&ap_per_threshold)?);
            if options.record_curves {
                curves_by_obj.insert(obj_id, curves);
            }
        }

        let object_scores: Vec<Real> = per_object_ap.values().copied().collect();
        let score = ap_dataset(&object_scores)?;
        fn_dataset_scores.push(score);
        let per_threshold: Vec<ThresholdScore> = grid_values[f]
            .iter()
            .zip(&ap_sum_per_threshold)
            .map(|(&threshold, &sum)| ThresholdScore {
                threshold,
                tau: None,
                value: sum / object_ids.len() as Real,
            })
            .collect();
        per_error.insert(
            kind.name().to_string(),
            ErrorFnScores {
                score,
                percent_1dp: percent_1dp(score),
                per_threshold,
                per_object: per_object_ap,
                curves: curves_by_obj,
            },
        );
    }

    let score = match task {
        Task::Det6d => ap_dataset_6d(fn_dataset_scores[0], fn_dataset_scores[1]),
        Task::Det2d => fn_dataset_scores[0],
        Task::Loc6d => unreachable!(),
    };

    Ok(DatasetScores {
        score,
        percent_1dp: percent_1dp(score),
        mean_image_time_s: mean_image_time(&[times_by_slot]),
        num_targeted_images: images.len(),
        num_eligible_gts: eligible_total,
        num_predictions: targeted_idx.len(),
        per_object: combined_per_object(&per_error),
        per_error,
    })
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Evaluates one dataset and returns its scores.
pub fn evaluate_dataset(
    task: Task,
    dataset: &Dataset,
    targets: &TargetList,
    rows: &SubmissionRows,
    options: &EvalOptions,
) -> Result<DatasetScores, EvalError> {
    match (task, rows) {
        (Task::Loc6d, SubmissionRows::Poses(ests)) => {
            evaluate_localization(dataset, targets, ests, options)
        }
        (Task::Det6d, SubmissionRows::Poses(_)) => {
            evaluate_detection(dataset, targets, task, rows, options)
        }
        (Task::Det2d, SubmissionRows::Boxes(_)) => {
            evaluate_detection(dataset, targets, task, rows, options)
        }
        _ => Err(EvalError::Validation(format!(
            "submission format does not match task {}",
            task.name()
        ))),
    }
}

/// Combines per-dataset scores into a full report; the overall score is
/// the mean of the per-dataset scores.
pub fn build_report(
    task: Task,
    datasets: Vec<(String, DatasetScores)>,
) -> Result<ScoreReport, MetricsError> {
    let scores: Vec<Real> = datasets.iter().map(|(_, d)| d.score).collect();
    let overall = match task {
        Task::Loc6d => ar_overall(&scores)?,
        Task::Det6d | Task::Det2d => ap_overall(&scores)?,
    };
    let times: Vec<Real> = datasets
        .iter()
        .filter_map(|(_, d)| d.mean_image_time_s)
        .collect();
    let mean_time = if times.is_empty() {
        None
    } else {
        Some(times.iter().sum::<Real>() / times.len() as Real)
    };
    Ok(ScoreReport {
        task: task.name().to_string(),
        score_kind: task.score_kind().to_string(),
        overall,
        overall_percent_1dp: percent_1dp(overall),
        mean_image_time_s: mean_time,
        datasets: datasets.into_iter().collect(),
    })
}

/// Evaluates a single dataset and wraps it into a report.
pub fn evaluate_single(
    task: Task,
    dataset: &Dataset,
    targets: &TargetList,
    rows: &SubmissionRows,
    options: &EvalOptions,
) -> Result<ScoreReport, EvalError> {
    let scores = evaluate_dataset(task, dataset, targets, rows, options)?;
    Ok(build_report(task, vec![(dataset.name.clone(), scores)])?)
}
