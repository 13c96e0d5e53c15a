//! Command-line front end: evaluate submissions, validate them, build
//! fixture datasets and render reports.
//!
//! Exit codes: 0 on success, 1 on I/O failures, 2 on validation
//! failures (bad file content, submission errors, unclean validate).

mod svg;
mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use pose_eval_core::eval::{
    evaluate_single, EvalOptions, GridSet, SubmissionRows, Task,
};
use pose_eval_core::fixtures::generate_fixtures;
use pose_eval_core::io::{
    load_dataset, parse_detection_submission, parse_models_info, parse_pose_submission,
    parse_report, parse_targets, write_report, IoError, LoadOptions, ReportFormat,
    SubmissionError,
};
use pose_eval_core::metrics::{ThresholdGrid, MAX_DETECTIONS_PER_IMAGE};
use pose_eval_core::pose_error::PoseErrorKind;

#[derive(Parser)]
#[command(
    name = "pose-eval",
    version,
    about = "Evaluate 6D pose and 2D detection submissions on BOP-format datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a submission and write a score report.
    Eval {
        /// Task: loc6d, det6d or det2d.
        #[arg(long, value_parser = parse_task)]
        task: Task,
        /// Dataset directory (models/ + test/ layout).
        #[arg(long)]
        dataset: PathBuf,
        /// Targets JSON selecting the evaluated images.
        #[arg(long)]
        targets: PathBuf,
        /// Submission CSV.
        #[arg(long)]
        submission: PathBuf,
        /// Output directory for report files.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, env = "POSE_EVAL_JOBS", default_value_t = 0)]
        jobs: usize,
        /// JSON file overriding the threshold grids.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Report formats to write: json and/or csv.
        #[arg(long, value_delimiter = ',', default_value = "json")]
        format: Vec<String>,
    },
    /// Check a submission without scoring it.
    Validate {
        #[arg(long, value_parser = parse_task)]
        task: Task,
        #[arg(long)]
        submission: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Optional dataset directory for object-id checks against
        /// models_info.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Generate a synthetic fixture dataset with reference submissions.
    Fixtures {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a report as a table, optionally with PR-curve SVGs.
    Report {
        report: PathBuf,
        /// Emit one SVG per (object, threshold) PR curve.
        #[arg(long)]
        plots: bool,
        /// Where to put the SVGs (default: <report dir>/plots).
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
}

fn parse_task(s: &str) -> Result<Task, String> {
    Task::parse(s).ok_or_else(|| format!("unknown task {s:?}; expected loc6d, det6d or det2d"))
}

struct AppError {
    message: String,
    code: i32,
}

impl AppError {
    fn io(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 1,
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }
}

fn io_error_code(e: &IoError) -> i32 {
    match e {
        IoError::InFile { source, .. } => io_error_code(source),
        IoError::Io(_) => 1,
        _ => 2,
    }
}

impl From<IoError> for AppError {
    fn from(e: IoError) -> Self {
        Self {
            code: io_error_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<pose_eval_core::eval::EvalError> for AppError {
    fn from(e: pose_eval_core::eval::EvalError) -> Self {
        match e {
            pose_eval_core::eval::EvalError::Io(io) => io.into(),
            other => AppError::validation(other.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, AppError> {
    std::fs::read(path).map_err(|e| AppError::io(format!("{}: {e}", path.display())))
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Eval {
            task,
            dataset,
            targets,
            submission,
            out,
            jobs,
            grid,
            format,
        } => cmd_eval(task, &dataset, &targets, &submission, &out, jobs, grid, &format),
        Command::Validate {
            task,
            submission,
            targets,
            dataset,
        } => cmd_validate(task, &submission, &targets, dataset.as_deref()),
        Command::Fixtures { seed, out } => cmd_fixtures(seed, &out),
        Command::Report {
            report,
            plots,
            plot_dir,
        } => cmd_report(&report, plots, plot_dir),
    }
}

#[derive(serde::Deserialize)]
struct GridOverrides {
    mssd: Option<Vec<f64>>,
    mspd: Option<Vec<f64>>,
    vsd_thresholds: Option<Vec<f64>>,
    vsd_taus: Option<Vec<f64>>,
    iou: Option<Vec<f64>>,
}

fn load_grids(path: Option<PathBuf>) -> Result<GridSet, AppError> {
    let mut grids = GridSet::default();
    let Some(path) = path else {
        return Ok(grids);
    };
    let raw = read_file(&path)?;
    let overrides: GridOverrides = serde_json::from_slice(&raw)
        .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?;
    let rebuild = |kind, thresholds, taus| {
        ThresholdGrid::new(kind, thresholds, taus)
            .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))
    };
    if let Some(t) = overrides.mssd {
        grids.mssd = rebuild(PoseErrorKind::Mssd, t, vec![])?;
    }
    if let Some(t) = overrides.mspd {
        grids.mspd = rebuild(PoseErrorKind::Mspd, t, vec![])?;
    }
    let vsd_t = overrides.vsd_thresholds.unwrap_or(grids.vsd.thresholds.clone());
    let vsd_tau = overrides.vsd_taus.unwrap_or(grids.vsd.taus.clone());
    grids.vsd = rebuild(PoseErrorKind::Vsd, vsd_t, vsd_tau)?;
    if let Some(t) = overrides.iou {
        grids.iou = rebuild(PoseErrorKind::Iou2d, t, vec![])?;
    }
    Ok(grids)
}

fn parse_submission_rows(task: Task, bytes: &[u8]) -> Result<SubmissionRows, AppError> {
    let describe = |e: SubmissionError| AppError::validation(e.to_string());
    if task.wants_poses() {
        Ok(SubmissionRows::Poses(
            parse_pose_submission(bytes).map_err(describe)?,
        ))
    } else {
        Ok(SubmissionRows::Boxes(
            parse_detection_submission(bytes).map_err(describe)?,
        ))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    task: Task,
    dataset_dir: &Path,
    targets_path: &Path,
    submission_path: &Path,
    out: &Path,
    jobs: usize,
    grid: Option<PathBuf>,
    formats: &[String],
) -> Result<(), AppError> {
    let grids = load_grids(grid)?;
    let targets = parse_targets(&read_file(targets_path)?)
        .map_err(|e| AppError::validation(format!("{}: {e}", targets_path.display())))?;
    let rows = parse_submission_rows(task, &read_file(submission_path)?)
        .map_err(|e| AppError {
            message: format!("{}: {}", submission_path.display(), e.message),
            code: e.code,
        })?;
    let dataset = load_dataset(
        dataset_dir,
        &targets,
        LoadOptions {
            load_meshes: task != Task::Det2d,
        },
    )?;

    let options = EvalOptions {
        grids,
        jobs,
        ..EvalOptions::default()
    };
    let report = evaluate_single(task, &dataset, &targets, &rows, &options)?;

    std::fs::create_dir_all(out).map_err(|e| AppError::io(format!("{}: {e}", out.display())))?;
    for format in formats {
        let (name, fmt) = match format.as_str() {
            "json" => ("report.json", ReportFormat::Json),
            "csv" => ("report.csv", ReportFormat::Csv),
            other => {
                return Err(AppError::validation(format!(
                    "unknown report format {other:?}; expected json or csv"
                )))
            }
        };
        let path = out.join(name);
        std::fs::write(&path, write_report(&report, fmt))
            .map_err(|e| AppError::io(format!("{}: {e}", path.display())))?;
    }

    print!("{}", table::render_report(&report));
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_validate(
    task: Task,
    submission_path: &Path,
    targets_path: &Path,
    dataset_dir: Option<&Path>,
) -> Result<(), AppError> {
    let targets = parse_targets(&read_file(targets_path)?)
        .map_err(|e| AppError::validation(format!("{}: {e}", targets_path.display())))?;
    let rows = parse_submission_rows(task, &read_file(submission_path)?).map_err(|e| AppError {
        message: format!("{}: {}", submission_path.display(), e.message),
        code: e.code,
    })?;

    let known_objects: Vec<u32> = match dataset_dir {
        Some(dir) => {
            let path = dir.join("models").join("models_info.json");
            let info = parse_models_info(&read_file(&path)?)
                .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?;
            info.object_ids()
        }
        None => targets.object_ids(),
    };

    let (keys, objs, fingerprints): (Vec<(u32, u32)>, Vec<u32>, Vec<String>) = match &rows {
        SubmissionRows::Poses(v) => (
            v.iter().map(|e| (e.scene_id, e.im_id)).collect(),
            v.iter().map(|e| e.obj_id).collect(),
            v.iter()
                .map(|e| {
                    format!(
                        "{}/{}/{}/{}/{:?}/{:?}",
                        e.scene_id,
                        e.im_id,
                        e.obj_id,
                        e.score,
                        e.pose.rotation().to_row_major(),
                        e.pose.translation().to_array()
                    )
                })
                .collect(),
        ),
        SubmissionRows::Boxes(v) => (
            v.iter().map(|d| (d.scene_id, d.im_id)).collect(),
            v.iter().map(|d| d.obj_id).collect(),
            v.iter()
                .map(|d| {
                    format!(
                        "{}/{}/{}/{}/{:?}",
                        d.scene_id,
                        d.im_id,
                        d.obj_id,
                        d.score,
                        [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h]
                    )
                })
                .collect(),
        ),
    };

    let mut findings: Vec<String> = Vec::new();

    // Per-image row counts against the scoring cap.
    let mut per_image: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for key in &keys {
        *per_image.entry(*key).or_insert(0) += 1;
    }
    for (&(scene, im), &count) in &per_image {
        if count > MAX_DETECTIONS_PER_IMAGE {
            findings.push(format!(
                "scene {scene} image {im}: {count} rows; only the {MAX_DETECTIONS_PER_IMAGE} most confident detections per image are considered"
            ));
        }
    }

    // Unknown object ids.
    let mut unknown: Vec<u32> = objs
        .iter()
        .filter(|o| !known_objects.contains(o))
        .copied()
        .collect();
    unknown.sort_unstable();
    unknown.dedup();
    if !unknown.is_empty() {
        let source = if dataset_dir.is_some() {
            "models_info"
        } else {
            "the target list"
        };
        findings.push(format!("object ids unknown to {source}: {unknown:?}"));
    }

    // Targeted images with no predictions, and rows off the target set.
    let mut missing = 0usize;
    for (scene, im) in targets.image_keys() {
        if !per_image.contains_key(&(scene, im)) {
            missing += 1;
        }
    }
    if missing > 0 {
        findings.push(format!("{missing} targeted image(s) have no rows"));
    }
    let extraneous = keys
        .iter()
        .filter(|(s, i)| !targets.contains_image(*s, *i))
        .count();
    if extraneous > 0 {
        findings.push(format!(
            "{extraneous} row(s) reference images outside the target list and will not be scored"
        ));
    }

    // Exact duplicate rows.
    let mut seen = std::collections::BTreeMap::new();
    let mut duplicates = 0usize;
    for f in &fingerprints {
        let n = seen.entry(f.clone()).or_insert(0usize);
        *n += 1;
        if *n == 2 {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        findings.push(format!(
            "{duplicates} duplicated row group(s); duplicates are scored as distinct predictions"
        ));
    }

    println!("rows: {}", keys.len());
    if findings.is_empty() {
        println!("submission is clean");
        Ok(())
    } else {
        for finding in &findings {
            println!("warning: {finding}");
        }
        Err(AppError::validation(format!(
            "{} finding(s); see warnings above",
            findings.len()
        )))
    }
}

fn cmd_fixtures(seed: u64, out: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(out).map_err(|e| AppError::io(format!("{}: {e}", out.display())))?;
    let summary = generate_fixtures(seed, out)?;
    println!("dataset:    {}", summary.dataset_dir.display());
    println!("targets:    {}", summary.targets_path.display());
    println!("submissions:");
    println!("  perfect pose:  {}", summary.perfect_pose_path.display());
    println!("  perturbed:     {}", summary.perturbed_pose_path.display());
    println!("  perfect det2d: {}", summary.perfect_det2d_path.display());
    println!(
        "{} images, {} instances ({} above the visibility cutoff)",
        summary.num_images, summary.num_instances, summary.num_eligible
    );
    Ok(())
}

fn cmd_report(report_path: &Path, plots: bool, plot_dir: Option<PathBuf>) -> Result<(), AppError> {
    let bytes = read_file(report_path)?;
    let report = parse_report(&bytes)
        .map_err(|e| AppError::validation(format!("{}: {e}", report_path.display())))?;
    print!("{}", table::render_report(&report));

    if !plots {
        return Ok(());
    }
    let dir = plot_dir.unwrap_or_else(|| {
        report_path
            .parent()
            .unwrap_or(Path::new("."))
            .join("plots")
    });
    std::fs::create_dir_all(&dir).map_err(|e| AppError::io(format!("{}: {e}", dir.display())))?;
    let mut written = 0usize;
    for (ds_name, ds) in &report.datasets {
        for (fn_name, scores) in &ds.per_error {
            for (obj_id, curves) in &scores.curves {
                for (idx, entry) in curves.iter().enumerate() {
                    let file = dir.join(format!(
                        "pr_{ds_name}_{fn_name}_obj{obj_id:06}_t{idx:02}.svg"
                    ));
                    let title = format!(
                        "{ds_name} · {fn_name} · obj {obj_id} · threshold {}",
                        entry.threshold
                    );
                    let svg = svg::pr_curve_svg(&title, &entry.curve);
                    std::fs::write(&file, svg)
                        .map_err(|e| AppError::io(format!("{}: {e}", file.display())))?;
                    written += 1;
                }
            }
        }
    }
    println!("{written} plot(s) written to {}", dir.display());
    Ok(())
}
