use super::types::{PrCurve, MAX_DETECTIONS_PER_IMAGE};
use crate::pose_error::PoseErrorKind;
use crate::Real;

/// A pose is correct wrt an error function iff its error is strictly
/// below the threshold. The rule is the same for every kind; IoU
/// matches are fed through as error = 1 − IoU with theta = 1 − θ_iou
/// so that lower is always better.
pub fn correctness(kind: PoseErrorKind, error_value: Real, theta: Real) -> bool {
    let _ = kind;
    error_value < theta
}

/// One estimate-to-instance match produced by localization matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationMatch {
    pub est: usize,
    pub gt: usize,
    pub error: Real,
}

/// Greedy matching for 6D localization on one (image, object) group.
///
/// `errors[e][g]` is the pose error of estimate `e` against eligible
/// ground-truth instance `g`. Only the top-n estimates by score are
/// considered, n being the number of eligible instances (score ties
/// broken by lower best-case error, then input order). Estimates are
/// processed in that order; each matches the not-yet-matched instance
/// with the smallest error among those passing the threshold, if any.
/// Unmatched estimates do not consume instances.
pub fn match_localization(
    scores: &[Real],
    errors: &[Vec<Real>],
    theta: Real,
) -> Vec<LocalizationMatch> {
    assert_eq!(scores.len(), errors.len());
    let num_gts = errors.first().map_or(0, Vec::len);
    if num_gts == 0 {
        return Vec::new();
    }

    let best_error = |e: usize| -> Real {
        errors[e]
            .iter()
            .copied()
            .fold(Real::INFINITY, Real::min)
    };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(best_error(a).total_cmp(&best_error(b)))
            .then(a.cmp(&b))
    });
    order.truncate(num_gts);

    let mut matched = vec![false; num_gts];
    let mut out = Vec::new();
    for &e in &order {
        let candidate = (0..num_gts)
            .filter(|&g| !matched[g] && correctness(PoseErrorKind::Mssd, errors[e][g], theta))
            .min_by(|&a, &b| errors[e][a].total_cmp(&errors[e][b]).then(a.cmp(&b)));
        if let Some(g) = candidate {
            matched[g] = true;
            out.push(LocalizationMatch {
                est: e,
                gt: g,
                error: errors[e][g],
            });
        }
    }
    out
}

/// Indices surviving the per-image cap of [`MAX_DETECTIONS_PER_IMAGE`],
/// in input order. The cap keeps the most confident detections of each
/// image across all objects; score ties keep earlier rows.
pub fn cap_detections_per_image(image_keys: &[(u32, u32)], scores: &[Real]) -> Vec<usize> {
    use std::collections::BTreeMap;
    assert_eq!(image_keys.len(), scores.len());
    let mut by_image: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (i, key) in image_keys.iter().enumerate() {
        by_image.entry(*key).or_default().push(i);
    }
    let mut keep = Vec::with_capacity(scores.len());
    for (_, mut idxs) in by_image {
        if idxs.len() > MAX_DETECTIONS_PER_IMAGE {
            idxs.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            idxs.truncate(MAX_DETECTIONS_PER_IMAGE);
        }
        keep.extend(idxs);
    }
    keep.sort_unstable();
    keep
}

/// One detection entering a PR sweep for a single object.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDetection {
    pub score: Real,
    /// Submission row order, used as the final tie-break.
    pub order: usize,
    /// Index of the image slot the detection belongs to.
    pub image: usize,
    /// Error against each ground-truth instance of this object in that
    /// image (lower is better; IoU matches are passed as 1 − IoU).
    pub errors: Vec<Real>,
}

/// Builds the precision-recall curve for one object at one grid
/// threshold. `thetas` holds the resolved threshold per image slot:
/// grid values that scale with the image (MSPD's width factor) stay
/// exact this way.
///
/// Detections are swept in descending score (ties by submission order).
/// Each detection is matched to the unmatched passing instance with the
/// lowest error, preferring instances above the visibility cutoff; if
/// its only passing matches are below the cutoff it is ignored — it
/// consumes the instance but is removed from counting entirely. A
/// detection with no passing match is a false positive. Recall
/// denominators count eligible instances only.
pub fn build_pr_curve(
    detections: &[SweepDetection],
    gt_eligible: &[Vec<bool>],
    thetas: &[Real],
) -> PrCurve {
    assert_eq!(gt_eligible.len(), thetas.len());
    let num_gt: usize = gt_eligible
        .iter()
        .map(|v| v.iter().filter(|e| **e).count())
        .sum();

    // Defensive per-image cap; the pipeline already applies it across
    // objects, which subsumes this one.
    let mut by_image: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, d) in detections.iter().enumerate() {
        by_image.entry(d.image).or_default().push(i);
    }
    let mut kept: Vec<usize> = Vec::with_capacity(detections.len());
    for (_, mut idxs) in by_image {
        if idxs.len() > MAX_DETECTIONS_PER_IMAGE {
            idxs.sort_by(|&a, &b| {
                detections[b]
                    .score
                    .total_cmp(&detections[a].score)
                    .then(detections[a].order.cmp(&detections[b].order))
            });
            idxs.truncate(MAX_DETECTIONS_PER_IMAGE);
        }
        kept.extend(idxs);
    }
    kept.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then(detections[a].order.cmp(&detections[b].order))
    });

    let mut matched: Vec<Vec<bool>> = gt_eligible.iter().map(|v| vec![false; v.len()]).collect();
    let mut curve = PrCurve::empty(num_gt);
    for &i in &kept {
        let det = &detections[i];
        let eligible = &gt_eligible[det.image];
        let theta = thetas[det.image];
        let pick = |want_eligible: bool, matched: &[bool]| -> Option<usize> {
            (0..det.errors.len())
                .filter(|&g| {
                    !matched[g]
                        && eligible[g] == want_eligible
                        && correctness(PoseErrorKind::Mssd, det.errors[g], theta)
                })
                .min_by(|&a, &b| det.errors[a].total_cmp(&det.errors[b]).then(a.cmp(&b)))
        };
        if let Some(g) = pick(true, &matched[det.image]) {
            matched[det.image][g] = true;
            curve.num_tp += 1;
        } else if let Some(g) = pick(false, &matched[det.image]) {
            // Ignore region: neither TP nor FP.
            matched[det.image][g] = true;
            continue;
        } else {
            curve.num_fp += 1;
        }
        let recall = if num_gt == 0 {
            0.0
        } else {
            curve.num_tp as Real / num_gt as Real
        };
        let precision = curve.num_tp as Real / (curve.num_tp + curve.num_fp) as Real;
        curve.points.push((recall, precision));
    }
    curve
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_threshold_rule() {
        assert!(correctness(PoseErrorKind::Mssd, 4.9, 5.0));
        assert!(!correctness(PoseErrorKind::Mssd, 5.0, 5.0));
        assert!(correctness(PoseErrorKind::Vsd, 0.0, 0.05));
    }

    #[test]
    fn single_perfect_estimate_matches() {
        let matches = match_localization(&[1.0], &[vec![0.0]], 5.0);
        assert_eq!(
            matches,
            vec![LocalizationMatch {
                est: 0,
                gt: 0,
                error: 0.0
            }]
        );
    }

    #[test]
    fn only_top_n_estimates_considered() {
        // Three estimates, two gts: the lowest-scored estimate would
        // match gt 1 perfectly but is cut by the top-2 rule.
        let scores = [0.9, 0.8, 0.1];
        let errors = vec![
            vec![1.0, 50.0],
            vec![50.0, 50.0],
            vec![50.0, 0.0],
        ];
        let matches = match_localization(&scores, &errors, 5.0);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].est, 0);
        assert_eq!(matches[0].gt, 0);
    }

    #[test]
    fn greedy_differs_from_optimal_assignment() {
        // Hand-built instance where greedy-by-score is suboptimal:
        //   est0 (score .9): errors [1.0, 1.1]
        //   est1 (score .5): errors [1.2, 9.9]
        // Greedy: est0 takes gt0 (1.0), est1 fails on gt1 (9.9 ≥ θ).
        // Optimal would pair est0−gt1, est1−gt0 for two matches; the
        // exhaustive check below documents that greedy yields one.
        let scores = [0.9, 0.5];
        let errors = vec![vec![1.0, 1.1], vec![1.2, 9.9]];
        let theta = 2.0;
        let matches = match_localization(&scores, &errors, theta);
        assert_eq!(matches.len(), 1);
        assert_eq!((matches[0].est, matches[0].gt), (0, 0));

        // Enumerate all one-to-one assignments to find the optimum.
        let mut best = 0;
        for perm in [[0usize, 1usize], [1, 0]] {
            let count = perm
                .iter()
                .enumerate()
                .filter(|(e, &g)| errors[*e][g] < theta)
                .count();
            best = best.max(count);
        }
        assert_eq!(best, 2, "the optimal assignment matches both");
    }

    #[test]
    fn failed_match_does_not_consume_instance() {
        // est0 scores higher but passes no threshold; gt0 must remain
        // available for est1.
        let scores = [0.9, 0.5];
        let errors = vec![vec![3.0, 100.0], vec![1.0, 100.0]];
        let matches = match_localization(&scores, &errors, 2.0);
        assert_eq!(matches.len(), 1);
        assert_eq!((matches[0].est, matches[0].gt), (1, 0));
    }

    #[test]
    fn score_tie_broken_by_lower_error_then_order() {
        let scores = [0.5, 0.5, 0.5];
        let errors = vec![vec![2.0], vec![1.0], vec![1.0]];
        // Top-1 cap: est1 wins the tie on lower error.
        let matches = match_localization(&scores, &errors, 5.0);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].est, 1);
    }

    #[test]
    fn no_gts_no_matches() {
        let matches = match_localization(&[1.0], &[vec![]], 5.0);
        assert!(matches.is_empty());
    }

    fn det(score: Real, order: usize, image: usize, errors: Vec<Real>) -> SweepDetection {
        SweepDetection {
            score,
            order,
            image,
            errors,
        }
    }

    #[test]
    fn single_detection_single_gt() {
        let curve = build_pr_curve(&[det(1.0, 0, 0, vec![0.0])], &[vec![true]], &[5.0]);
        assert_eq!(curve.points, vec![(1.0, 1.0)]);
        assert_eq!((curve.num_tp, curve.num_fp, curve.num_gt), (1, 0, 1));
    }

    #[test]
    fn fp_then_tp_sweep() {
        // Higher-scored detection misses, lower-scored one hits.
        let dets = [
            det(0.9, 0, 0, vec![50.0]),
            det(0.5, 1, 0, vec![0.0]),
        ];
        let curve = build_pr_curve(&dets, &[vec![true]], &[5.0]);
        assert_eq!(curve.points, vec![(0.0, 0.0), (1.0, 0.5)]);
    }

    #[test]
    fn low_visibility_match_is_ignored() {
        // The only matching instance is below the visibility cutoff:
        // neither TP nor FP, and the curve stays empty.
        let dets = [det(1.0, 0, 0, vec![0.0])];
        let curve = build_pr_curve(&dets, &[vec![false]], &[5.0]);
        assert!(curve.points.is_empty());
        assert_eq!((curve.num_tp, curve.num_fp, curve.num_gt), (0, 0, 0));
    }

    #[test]
    fn eligible_match_preferred_over_closer_ignored_one() {
        // An ignored instance has the smaller error, but an eligible one
        // also passes: the detection must count as a TP.
        let dets = [det(1.0, 0, 0, vec![1.0, 3.0])];
        let curve = build_pr_curve(&dets, &[vec![false, true]], &[5.0]);
        assert_eq!((curve.num_tp, curve.num_fp), (1, 0));
    }

    #[test]
    fn ignored_detection_consumes_instance() {
        let dets = [
            det(0.9, 0, 0, vec![1.0]),
            det(0.5, 1, 0, vec![1.0]),
        ];
        // First detection is absorbed by the ignore region; the second
        // finds nothing left to match and becomes an FP.
        let curve = build_pr_curve(&dets, &[vec![false]], &[5.0]);
        assert_eq!((curve.num_tp, curve.num_fp), (0, 1));
        assert_eq!(curve.points, vec![(0.0, 0.0)]);
    }

    #[test]
    fn per_image_cap_keeps_most_confident() {
        let mut keys = Vec::new();
        let mut scores = Vec::new();
        for i in 0..150 {
            keys.push((1u32, 1u32));
            scores.push(1.0 - i as Real / 1000.0);
        }
        keys.push((1, 2));
        scores.push(0.01);
        let kept = cap_detections_per_image(&keys, &scores);
        assert_eq!(kept.len(), 101); // 100 for image 1 + 1 for image 2
        assert!(kept.contains(&0));
        assert!(!kept.contains(&149));
        assert!(kept.contains(&150));
    }

    #[test]
    fn sweep_applies_own_cap() {
        let dets: Vec<SweepDetection> = (0..MAX_DETECTIONS_PER_IMAGE + 50)
            .map(|i| det(1.0 - i as Real / 1000.0, i, 0, vec![50.0]))
            .collect();
        let curve = build_pr_curve(&dets, &[vec![true]], &[5.0]);
        assert_eq!(curve.num_fp, MAX_DETECTIONS_PER_IMAGE);
    }

    #[test]
    fn detections_cannot_match_across_images() {
        let dets = [det(1.0, 0, 0, vec![50.0]), det(0.9, 1, 1, vec![0.0])];
        let curve = build_pr_curve(&dets, &[vec![true], vec![true]], &[5.0, 5.0]);
        assert_eq!((curve.num_tp, curve.num_fp, curve.num_gt), (1, 1, 2));
    }
}
