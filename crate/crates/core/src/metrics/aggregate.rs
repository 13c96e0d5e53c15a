use super::types::PrCurve;
use super::MetricsError;
use crate::Real;

fn mean(values: &[Real]) -> Option<Real> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<Real>() / values.len() as Real)
    }
}

/// Matched/eligible tallies pooled over a dataset, one entry per
/// (threshold [, tau]) combination of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallCounts {
    pub matched: Vec<usize>,
    pub total_eligible: usize,
}

/// Average Recall for one error function: the mean over all grid
/// combinations of matched / eligible, with instance totals pooled over
/// the whole dataset rather than averaged per object first.
pub fn average_recall(counts: &RecallCounts) -> Result<Real, MetricsError> {
    if counts.total_eligible == 0 {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let recalls: Vec<Real> = counts
        .matched
        .iter()
        .map(|&m| m as Real / counts.total_eligible as Real)
        .collect();
    mean(&recalls).ok_or(MetricsError::EmptyInput {
        what: "recall grid",
    })
}

/// AR over one dataset: the mean of the three per-error-function ARs.
pub fn ar_dataset(ar_vsd: Real, ar_mssd: Real, ar_mspd: Real) -> Real {
    (ar_vsd + ar_mssd + ar_mspd) / 3.0
}

/// Overall AR: the mean of per-dataset AR scores.
pub fn ar_overall(per_dataset: &[Real]) -> Result<Real, MetricsError> {
    mean(per_dataset).ok_or(MetricsError::EmptyInput {
        what: "per-dataset AR",
    })
}

/// 101-point interpolated average precision: the mean over recall
/// levels r ∈ {0.00, 0.01, …, 1.00} of the best precision achieved at
/// recall ≥ r (0 where the curve never reaches r).
pub fn ap_from_curve(curve: &PrCurve) -> Real {
    let pts = &curve.points;
    if pts.is_empty() {
        return 0.0;
    }
    let n = pts.len();
    let mut envelope = vec![0.0; n];
    envelope[n - 1] = pts[n - 1].1;
    for i in (0..n - 1).rev() {
        envelope[i] = pts[i].1.max(envelope[i + 1]);
    }
    let mut sum = 0.0;
    for k in 0..=100 {
        let r = k as Real / 100.0;
        let idx = pts.partition_point(|p| p.0 < r);
        if idx < n {
            sum += envelope[idx];
        }
    }
    sum / 101.0
}

/// Per-object AP: the mean of the APs over the threshold grid.
pub fn ap_object(ap_per_threshold: &[Real]) -> Result<Real, MetricsError> {
    mean(ap_per_threshold).ok_or(MetricsError::EmptyInput {
        what: "per-threshold AP",
    })
}

/// Per-dataset AP for one error function: the mean over the objects in
/// the dataset's target list.
pub fn ap_dataset(per_object: &[Real]) -> Result<Real, MetricsError> {
    mean(per_object).ok_or(MetricsError::EmptyInput {
        what: "per-object AP",
    })
}

/// Per-dataset AP for 6D detection: MSSD and MSPD only; VSD never
/// enters 6D detection.
pub fn ap_dataset_6d(ap_mssd_d: Real, ap_mspd_d: Real) -> Real {
    (ap_mssd_d + ap_mspd_d) / 2.0
}

/// Overall AP: the mean of per-dataset AP scores.
pub fn ap_overall(per_dataset: &[Real]) -> Result<Real, MetricsError> {
    mean(per_dataset).ok_or(MetricsError::EmptyInput {
        what: "per-dataset AP",
    })
}

/// Mean prediction time per image: within an image, duplicate rows
/// contribute their maximum; images average within a dataset and
/// datasets average overall. Images without any row are skipped;
/// returns None when nothing carries a time.
pub fn mean_image_time(datasets: &[Vec<Vec<Real>>]) -> Option<Real> {
    let per_dataset: Vec<Real> = datasets
        .iter()
        .filter_map(|images| {
            let times: Vec<Real> = images
                .iter()
                .filter_map(|rows| rows.iter().copied().reduce(Real::max))
                .collect();
            mean(&times)
        })
        .collect();
    mean(&per_dataset)
}
