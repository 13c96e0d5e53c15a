//! Seeded generator for a small synthetic dataset: three objects, two
//! scenes with rendered depth, exact visibility fractions, a target
//! list and reference submissions.
//!
//! The perturbed submission shifts every instance by 0.3·diameter along
//! camera x. The L-prism and the square prism have integer diameters
//! (50 and 30 mm) and dyadic vertex coordinates, and their ground-truth
//! rotations are signed permutation matrices, so the evaluated MSSD is
//! bitwise equal to the 0.30·d grid threshold — pinning the strict
//! e < θ correctness rule. The cube's diameter (40√3) is irrational, so
//! its offset carries a tiny guard factor placing its error strictly
//! between the 0.30·d and 0.35·d thresholds under any rounding.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Matrix3, RigidPose, Vector3};
use crate::io::{
    write_depth, write_detection_submission, write_models_info, write_ply, write_pose_submission,
    write_scene_camera, write_scene_gt, write_scene_gt_info, write_targets, DatasetPaths, IoError,
    ModelInfo, ModelsInfo, RawGtEntry, RawGtInfoEntry, SceneCameraEntry,
};
use crate::metrics::{Detection2D, PoseEstimate, TargetEntry, TargetList, MIN_VISIB_FRACT};
use crate::pose_error::Box2D;
use crate::render::{rasterize_depth, DepthMap};
use crate::{Camera, Mesh, Pose, Real, Symmetries};

/// Where the generator put everything.
#[derive(Debug, Clone)]
pub struct FixtureSummary {
    pub dataset_dir: PathBuf,
    pub targets_path: PathBuf,
    pub perfect_pose_path: PathBuf,
    pub perturbed_pose_path: PathBuf,
    pub perfect_det2d_path: PathBuf,
    pub num_images: usize,
    pub num_instances: usize,
    pub num_eligible: usize,
}

const SCENES: [u32; 2] = [1, 2];
const IMAGES_PER_SCENE: u32 = 12;
const WIDTH: u32 = 160;
const HEIGHT: u32 = 120;
const FOCAL: Real = 200.0;
const DEPTH_SCALE: Real = 0.1;
/// Minimum center distance between same-object instances, in object
/// diameters; keeps perturbed estimates closest to their own instance
/// at every grid threshold.
const SEPARATION_DIAMETERS: Real = 2.5;

struct FixtureObject {
    obj_id: u32,
    mesh: Mesh,
    diameter: Real,
    symmetries: Symmetries,
    /// Offset applied by the perturbed submission, along camera x.
    perturb_dx: Real,
    /// Bounding-sphere radius, for in-frame placement.
    radius: Real,
    /// Restrict ground-truth rotations to signed permutations so the
    /// perturbed error stays exact.
    exact_rotations: bool,
}

fn v(x: Real, y: Real, z: Real) -> Vector3<Real> {
    Vector3::new(x, y, z)
}

fn box_mesh(hx: Real, hy: Real, hz: Real) -> Mesh {
    let verts = vec![
        v(-hx, -hy, -hz),
        v(hx, -hy, -hz),
        v(hx, hy, -hz),
        v(-hx, hy, -hz),
        v(-hx, -hy, hz),
        v(hx, -hy, hz),
        v(hx, hy, hz),
        v(-hx, hy, hz),
    ];
    let tris = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    Mesh::new(verts, tris).unwrap()
}

fn l_prism_mesh() -> Mesh {
    // L cross-section; the far corner pair spans (24, 32, 30), so the
    // diameter is exactly 50.
    let poly = [
        (-12.0, -16.0),
        (12.0, -16.0),
        (12.0, -4.0),
        (-4.0, -4.0),
        (-4.0, 16.0),
        (-12.0, 16.0),
    ];
    let hz = 15.0;
    let mut verts = Vec::with_capacity(12);
    for &(x, y) in &poly {
        verts.push(v(x, y, -hz));
    }
    for &(x, y) in &poly {
        verts.push(v(x, y, hz));
    }
    let mut tris: Vec<[u32; 3]> = Vec::new();
    // The polygon is star-shaped from vertex 0: fan both faces.
    for i in 1..5u32 {
        tris.push([0, i + 1, i]);
        tris.push([6, 6 + i, 6 + i + 1]);
    }
    for i in 0..6u32 {
        let j = (i + 1) % 6;
        tris.push([i, j, 6 + j]);
        tris.push([i, 6 + j, 6 + i]);
    }
    Mesh::new(verts, tris).unwrap()
}

fn quarter_turn_z() -> Matrix3<Real> {
    Matrix3::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
}

fn fixture_objects() -> Vec<FixtureObject> {
    let cube = box_mesh(20.0, 20.0, 20.0);
    let cube_d = cube.diameter();
    // Guard factor: keeps the cube's perturbed error strictly above the
    // 0.30·d threshold despite its full-mantissa diameter.
    let cube_dx = 0.30 * cube_d * (1.0 + 2.0_f64.powi(-32));

    let l_prism = l_prism_mesh();
    let l_d = l_prism.diameter();
    assert_eq!(l_d, 50.0);
    let l_dx = 0.30 * l_d;
    assert_eq!(l_dx, 15.0);

    let prism = box_mesh(10.0, 10.0, 5.0);
    let prism_d = prism.diameter();
    assert_eq!(prism_d, 30.0);
    let prism_dx = 0.30 * prism_d;
    assert_eq!(prism_dx, 9.0);
    let q = quarter_turn_z();
    let prism_syms = Symmetries {
        discrete: vec![
            RigidPose::new(q, Vector3::zero()).unwrap(),
            RigidPose::new(q * q, Vector3::zero()).unwrap(),
            RigidPose::new(q * q * q, Vector3::zero()).unwrap(),
        ],
        continuous: vec![],
    };

    vec![
        FixtureObject {
            obj_id: 1,
            radius: cube_d / 2.0,
            diameter: cube_d,
            mesh: cube,
            symmetries: Symmetries::none(),
            perturb_dx: cube_dx,
            exact_rotations: false,
        },
        FixtureObject {
            obj_id: 2,
            radius: l_d / 2.0,
            diameter: l_d,
            mesh: l_prism,
            symmetries: Symmetries::none(),
            perturb_dx: l_dx,
            exact_rotations: true,
        },
        FixtureObject {
            obj_id: 3,
            radius: prism_d / 2.0,
            diameter: prism_d,
            mesh: prism,
            symmetries: prism_syms,
            perturb_dx: prism_dx,
            exact_rotations: true,
        },
    ]
}

/// The 24 proper signed permutation matrices, in a fixed order.
fn signed_permutations() -> Vec<Matrix3<Real>> {
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(24);
    for perm in perms {
        for bits in 0..8u32 {
            let mut rows = [[0.0; 3]; 3];
            for (r, &c) in perm.iter().enumerate() {
                rows[r][c] = if bits & (1 << r) != 0 { -1.0 } else { 1.0 };
            }
            let m = Matrix3::new(rows);
            if m.det() > 0.0 {
                out.push(m);
            }
        }
    }
    assert_eq!(out.len(), 24);
    out
}

/// Uniform random rotation via quaternion rejection sampling; uses only
/// integer draws, normalization and arithmetic (no trig) so results are
/// reproducible everywhere.
fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<Real> {
    const RANGE: i64 = 1 << 20;
    loop {
        let q: Vec<Real> = (0..4)
            .map(|_| rng.gen_range(-RANGE..=RANGE) as Real)
            .collect();
        let n2: Real = q.iter().map(|c| c * c).sum();
        if n2 == 0.0 || n2 > (RANGE * RANGE) as Real {
            continue;
        }
        let n = n2.sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        return Matrix3::new([
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
        ]);
    }
}

/// Samples a translation on the 0.25 mm grid whose whole bounding
/// sphere projects inside the frame.
fn random_translation(rng: &mut ChaCha8Rng, radius: Real) -> Vector3<Real> {
    let tz_steps = rng.gen_range(0..=2048i64);
    let tz = 600.0 + tz_steps as Real * 0.25; // 600..1112
    let margin_px = FOCAL * radius / (tz - radius) + 2.0;
    let x_bound = ((WIDTH as Real / 2.0 - margin_px) * tz / FOCAL).max(0.0);
    let y_bound = ((HEIGHT as Real / 2.0 - margin_px) * tz / FOCAL).max(0.0);
    let xs = (x_bound / 0.25).floor() as i64;
    let ys = (y_bound / 0.25).floor() as i64;
    let tx = rng.gen_range(-xs..=xs) as Real * 0.25;
    let ty = rng.gen_range(-ys..=ys) as Real * 0.25;
    v(tx, ty, tz)
}

struct Instance {
    obj_idx: usize,
    pose: Pose,
}

fn scripted_instances(scene_id: u32, im_id: u32) -> Option<Vec<Instance>> {
    let identity = Matrix3::identity();
    match (scene_id, im_id) {
        // A prism fully hidden behind the cube: an ineligible instance.
        (1, 0) => Some(vec![
            Instance {
                obj_idx: 0,
                pose: RigidPose::new(identity, v(0.0, 0.0, 600.0)).unwrap(),
            },
            Instance {
                obj_idx: 2,
                pose: RigidPose::new(identity, v(4.0, 0.0, 1000.0)).unwrap(),
            },
        ]),
        // A partially occluded L-prism: a mid-range visibility fraction.
        (1, 1) => Some(vec![
            Instance {
                obj_idx: 0,
                pose: RigidPose::new(identity, v(-10.0, 0.0, 600.0)).unwrap(),
            },
            Instance {
                obj_idx: 1,
                pose: RigidPose::new(identity, v(18.0, 0.0, 900.0)).unwrap(),
            },
        ]),
        _ => None,
    }
}

fn random_instances(
    rng: &mut ChaCha8Rng,
    objects: &[FixtureObject],
    perms: &[Matrix3<Real>],
) -> Vec<Instance> {
    let count = rng.gen_range(1..=5usize);
    let mut placed: Vec<Instance> = Vec::new();
    for _ in 0..count {
        let obj_idx = rng.gen_range(0..objects.len());
        let obj = &objects[obj_idx];
        let rotation = if obj.exact_rotations {
            perms[rng.gen_range(0..perms.len())]
        } else {
            random_rotation(rng)
        };
        // Keep same-object instances far apart; give up after a few
        // tries rather than loop forever.
        let mut accepted = None;
        for _ in 0..32 {
            let t = random_translation(rng, obj.radius);
            let min_sep = SEPARATION_DIAMETERS * obj.diameter;
            let ok = placed
                .iter()
                .filter(|p| p.obj_idx == obj_idx)
                .all(|p| (p.pose.translation() - t).norm_squared() > min_sep * min_sep);
            if ok {
                accepted = Some(t);
                break;
            }
        }
        if let Some(t) = accepted {
            placed.push(Instance {
                obj_idx,
                pose: RigidPose::new(rotation, t).unwrap(),
            });
        }
    }
    if placed.is_empty() {
        // Degenerate draw; place a single cube dead center.
        placed.push(Instance {
            obj_idx: 0,
            pose: RigidPose::new(random_rotation(rng), v(0.0, 0.0, 800.0)).unwrap(),
        });
    }
    placed
}

struct RenderedInstance {
    visib_fract: Real,
    bbox_visib: [Real; 4],
    bbox_obj: [Real; 4],
}

fn mask_bbox(covered: &[bool]) -> [Real; 4] {
    let (mut min_x, mut min_y) = (u32::MAX, u32::MAX);
    let (mut max_x, mut max_y) = (0u32, 0u32);
    let mut any = false;
    for y in 0..HEIGHT {
        for x in 0..WIDTH {
            if covered[(y * WIDTH + x) as usize] {
                any = true;
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
            }
        }
    }
    if !any {
        return [0.0, 0.0, 0.0, 0.0];
    }
    [
        min_x as Real,
        min_y as Real,
        (max_x - min_x + 1) as Real,
        (max_y - min_y + 1) as Real,
    ]
}

/// Composes per-instance renders into the scene depth and derives exact
/// per-instance visibility from the rendered masks.
fn compose_scene(renders: &[DepthMap<Real>]) -> (DepthMap<Real>, Vec<RenderedInstance>) {
    let n_px = (WIDTH * HEIGHT) as usize;
    let mut composed = vec![0.0; n_px];
    for render in renders {
        for (c, &r) in composed.iter_mut().zip(render.values()) {
            if r > 0.0 && (*c == 0.0 || r < *c) {
                *c = r;
            }
        }
    }
    let mut infos = Vec::with_capacity(renders.len());
    for render in renders {
        let mut all = 0usize;
        let mut visible = 0usize;
        let mut amodal_mask = vec![false; n_px];
        let mut visib_mask = vec![false; n_px];
        for (i, (&r, &c)) in render.values().iter().zip(&composed).enumerate() {
            if r > 0.0 {
                all += 1;
                amodal_mask[i] = true;
                if r <= c {
                    visible += 1;
                    visib_mask[i] = true;
                }
            }
        }
        let visib_fract = if all == 0 {
            0.0
        } else {
            visible as Real / all as Real
        };
        infos.push(RenderedInstance {
            visib_fract,
            bbox_visib: mask_bbox(&visib_mask),
            bbox_obj: mask_bbox(&amodal_mask),
        });
    }
    let composed = DepthMap::new(WIDTH, HEIGHT, composed).expect("composed scene depth");
    (composed, infos)
}

/// Generates the dataset, target list and reference submissions under
/// `out_dir`; the same seed always produces bit-identical trees.
pub fn generate_fixtures(seed: u64, out_dir: &Path) -> Result<FixtureSummary, IoError> {
    let objects = fixture_objects();
    let perms = signed_permutations();
    let camera = Camera::new(
        FOCAL,
        FOCAL,
        WIDTH as Real / 2.0,
        HEIGHT as Real / 2.0,
        WIDTH,
        HEIGHT,
    )
    .expect("fixture camera");

    let paths = DatasetPaths::new(out_dir);
    std::fs::create_dir_all(paths.models_dir())?;

    let mut models_map = BTreeMap::new();
    for obj in &objects {
        std::fs::write(paths.model_ply(obj.obj_id), write_ply(&obj.mesh))?;
        models_map.insert(
            obj.obj_id,
            ModelInfo {
                diameter: obj.diameter,
                symmetries: obj.symmetries.clone(),
            },
        );
    }
    let models_info = ModelsInfo::new(models_map);
    std::fs::write(paths.models_info(), write_models_info(&models_info))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets_map: BTreeMap<(u32, u32), Vec<TargetEntry>> = BTreeMap::new();
    let mut perfect_rows: Vec<PoseEstimate> = Vec::new();
    let mut perturbed_rows: Vec<PoseEstimate> = Vec::new();
    let mut det2d_rows: Vec<Detection2D> = Vec::new();
    let mut num_instances = 0usize;
    let mut num_eligible = 0usize;
    let mut perturbed_score = 0.9;

    for scene_id in SCENES {
        let scene_dir = paths.scene_dir(scene_id);
        std::fs::create_dir_all(scene_dir.join("depth"))?;
        let mut scene_gt: BTreeMap<u32, Vec<RawGtEntry>> = BTreeMap::new();
        let mut scene_info: BTreeMap<u32, Vec<RawGtInfoEntry>> = BTreeMap::new();
        let mut scene_cams: BTreeMap<u32, SceneCameraEntry> = BTreeMap::new();

        for im_id in 0..IMAGES_PER_SCENE {
            let instances = scripted_instances(scene_id, im_id)
                .unwrap_or_else(|| random_instances(&mut rng, &objects, &perms));
            num_instances += instances.len();

            let renders: Vec<DepthMap<Real>> = instances
                .iter()
                .map(|inst| rasterize_depth(&objects[inst.obj_idx].mesh, &inst.pose, &camera))
                .collect();
            let (composed, infos) = compose_scene(&renders);
            std::fs::write(
                paths.depth_png(scene_id, im_id),
                write_depth(&composed, DEPTH_SCALE)?,
            )?;

            let mut gt_rows = Vec::new();
            let mut info_rows = Vec::new();
            let mut eligible_count: BTreeMap<u32, u32> = BTreeMap::new();
            for (inst, info) in instances.iter().zip(&infos) {
                let obj = &objects[inst.obj_idx];
                gt_rows.push(RawGtEntry {
                    cam_r_m2c: inst.pose.rotation().to_row_major().to_vec(),
                    cam_t_m2c: inst.pose.translation().to_array().to_vec(),
                    obj_id: obj.obj_id,
                });
                info_rows.push(RawGtInfoEntry {
                    visib_fract: info.visib_fract,
                    bbox_visib: info.bbox_visib,
                    bbox_obj: Some(info.bbox_obj),
                });
                if info.visib_fract >= MIN_VISIB_FRACT {
                    num_eligible += 1;
                    *eligible_count.entry(obj.obj_id).or_insert(0) += 1;

                    let t = inst.pose.translation();
                    perfect_rows.push(PoseEstimate {
                        scene_id,
                        im_id,
                        obj_id: obj.obj_id,
                        pose: inst.pose,
                        score: 1.0,
                        time_s: 0.25,
                    });
                    let shifted =
                        RigidPose::new(inst.pose.rotation(), v(t.x + obj.perturb_dx, t.y, t.z))
                            .expect("perturbed pose");
                    perturbed_rows.push(PoseEstimate {
                        scene_id,
                        im_id,
                        obj_id: obj.obj_id,
                        pose: shifted,
                        score: perturbed_score,
                        time_s: 0.5,
                    });
                    perturbed_score -= 1e-5;
                    let b = info.bbox_visib;
                    det2d_rows.push(Detection2D {
                        scene_id,
                        im_id,
                        obj_id: obj.obj_id,
                        bbox: Box2D::new(b[0], b[1], b[2], b[3]).expect("visible bbox"),
                        score: 1.0,
                        time_s: 0.25,
                    });
                }
            }
            if !eligible_count.is_empty() {
                targets_map.insert(
                    (scene_id, im_id),
                    eligible_count
                        .into_iter()
                        .map(|(obj_id, inst_count)| TargetEntry { obj_id, inst_count })
                        .collect(),
                );
            }
            scene_gt.insert(im_id, gt_rows);
            scene_info.insert(im_id, info_rows);
            scene_cams.insert(
                im_id,
                SceneCameraEntry {
                    camera,
                    depth_scale: DEPTH_SCALE,
                },
            );
        }

        std::fs::write(paths.scene_gt(scene_id), write_scene_gt(&scene_gt))?;
        std::fs::write(
            paths.scene_gt_info(scene_id),
            write_scene_gt_info(&scene_info),
        )?;
        std::fs::write(paths.scene_camera(scene_id), write_scene_camera(&scene_cams))?;
    }

    let targets = TargetList::new(targets_map);
    let targets_path = out_dir.join("test_targets.json");
    std::fs::write(&targets_path, write_targets(&targets))?;

    let sub_dir = out_dir.join("submissions");
    std::fs::create_dir_all(&sub_dir)?;
    let perfect_pose_path = sub_dir.join("perfect_pose.csv");
    std::fs::write(&perfect_pose_path, write_pose_submission(&perfect_rows))?;
    let perturbed_pose_path = sub_dir.join("perturbed_pose.csv");
    std::fs::write(&perturbed_pose_path, write_pose_submission(&perturbed_rows))?;
    let perfect_det2d_path = sub_dir.join("perfect_det2d.csv");
    std::fs::write(&perfect_det2d_path, write_detection_submission(&det2d_rows))?;

    Ok(FixtureSummary {
        dataset_dir: out_dir.to_path_buf(),
        targets_path,
        perfect_pose_path,
        perturbed_pose_path,
        perfect_det2d_path,
        num_images: (SCENES.len() as u32 * IMAGES_PER_SCENE) as usize,
        num_instances,
        num_eligible,
    })
}
