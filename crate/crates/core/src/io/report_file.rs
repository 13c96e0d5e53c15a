//! Score report serialization: JSON (round-trippable) and a flat CSV
//! export.

use thiserror::Error;

use crate::report::ScoreReport;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Serializes a report deterministically: struct fields in declaration
/// order, maps sorted by key, shortest round-trip float formatting.
pub fn write_report(report: &ScoreReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out =
                serde_json::to_vec_pretty(report).expect("report serialization cannot fail");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("section,dataset,error_fn,object,key,value\n");
            use std::fmt::Write as _;
            let _ = writeln!(out, "summary,,,,task,{}", report.task);
            let _ = writeln!(out, "summary,,,,score_kind,{}", report.score_kind);
            let _ = writeln!(out, "summary,,,,overall,{}", report.overall);
            let _ = writeln!(
                out,
                "summary,,,,overall_percent_1dp,{}",
                report.overall_percent_1dp
            );
            if let Some(t) = report.mean_image_time_s {
                let _ = writeln!(out, "summary,,,,mean_image_time_s,{t}");
            }
            for (name, ds) in &report.datasets {
                let _ = writeln!(out, "dataset,{name},,,score,{}", ds.score);
                let _ = writeln!(out, "dataset,{name},,,percent_1dp,{}", ds.percent_1dp);
                if let Some(t) = ds.mean_image_time_s {
                    let _ = writeln!(out, "dataset,{name},,,mean_image_time_s,{t}");
                }
                for (fn_name, fs) in &ds.per_error {
                    let _ = writeln!(out, "error_fn,{name},{fn_name},,score,{}", fs.score);
                    for ts in &fs.per_threshold {
                        let key = match ts.tau {
                            Some(tau) => format!("theta={}:tau={}", ts.threshold, tau),
                            None => format!("theta={}", ts.threshold),
                        };
                        let _ =
                            writeln!(out, "threshold,{name},{fn_name},,{key},{}", ts.value);
                    }
                    for (obj, score) in &fs.per_object {
                        let _ =
                            writeln!(out, "object,{name},{fn_name},{obj},score,{score}");
                    }
                }
                for (obj, score) in &ds.per_object {
                    let _ = writeln!(out, "object,{name},,{obj},score,{score}");
                }
            }
            out.into_bytes()
        }
    }
}

/// Parses a JSON report produced by [`write_report`].
pub fn parse_report(bytes: &[u8]) -> Result<ScoreReport, ReportError> {
    serde_json::from_slice(bytes).map_err(|e| ReportError::Json(e.to_string()))
}
