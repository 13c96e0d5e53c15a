//! Plain-text rendering of score reports, with the one-decimal percent
//! rounding used by leaderboard tables.

use pose_eval_core::report::ScoreReport;

pub fn render_report(report: &ScoreReport) -> String {
    let mut out = String::new();
    let kind = report.score_kind.to_uppercase();
    out.push_str(&format!("task: {}  ({kind})\n", report.task));

    // Column set: dataset, overall score, one column per error function.
    let fn_names: Vec<&String> = report
        .datasets
        .values()
        .next()
        .map(|d| d.per_error.keys().collect())
        .unwrap_or_default();

    let mut header = format!("{:<16} {:>8}", "dataset", kind);
    for name in &fn_names {
        header.push_str(&format!(" {:>8}", name));
    }
    header.push_str(&format!(
        " {:>7} {:>6} {:>6} {:>8}",
        "images", "gts", "rows", "s/img"
    ));
    out.push_str(&header);
    out.push('\n');

    for (name, ds) in &report.datasets {
        let mut line = format!("{:<16} {:>8}", name, ds.percent_1dp);
        for fn_name in &fn_names {
            let cell = ds
                .per_error
                .get(*fn_name)
                .map(|f| f.percent_1dp.clone())
                .unwrap_or_else(|| "-".into());
            line.push_str(&format!(" {cell:>8}"));
        }
        let time = ds
            .mean_image_time_s
            .map(|t| format!("{t:.3}"))
            .unwrap_or_else(|| "-".into());
        line.push_str(&format!(
            " {:>7} {:>6} {:>6} {:>8}",
            ds.num_targeted_images, ds.num_eligible_gts, ds.num_predictions, time
        ));
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str(&format!(
        "{:<16} {:>8}\n",
        "overall", report.overall_percent_1dp
    ));
    if let Some(t) = report.mean_image_time_s {
        out.push_str(&format!("mean image time: {t:.3} s\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pose_eval_core::report::{percent_1dp, DatasetScores, ErrorFnScores, ScoreReport};
    use std::collections::BTreeMap;

    #[test]
    fn renders_percent_rounding() {
        let mut per_error = BTreeMap::new();
        per_error.insert(
            "mssd".to_string(),
            ErrorFnScores {
                score: 0.4,
                percent_1dp: percent_1dp(0.4),
                per_threshold: vec![],
                per_object: BTreeMap::new(),
                curves: BTreeMap::new(),
            },
        );
        let report = ScoreReport {
            task: "loc6d".into(),
            score_kind: "ar".into(),
            overall: 0.8211428571428572,
            overall_percent_1dp: percent_1dp(0.8211428571428572),
            mean_image_time_s: None,
            datasets: BTreeMap::from([(
                "fixture".to_string(),
                DatasetScores {
                    score: 0.8211428571428572,
                    percent_1dp: percent_1dp(0.8211428571428572),
                    mean_image_time_s: None,
                    num_targeted_images: 24,
                    num_eligible_gts: 60,
                    num_predictions: 60,
                    per_error,
                    per_object: BTreeMap::new(),
                },
            )]),
        };
        let text = render_report(&report);
        assert!(text.contains("82.1"));
        assert!(text.contains("overall"));
        assert!(text.contains("mssd"));
    }
}
