//! Submission CSV files.
//!
//! Pose tasks use the header `scene_id,im_id,obj_id,score,R,t,time`
//! where R is nine space-separated values (row-major) and t three, in
//! millimeters. 2D detection uses `scene_id,im_id,obj_id,score,bbox,time`
//! with bbox as four space-separated values (x y w h, pixels). Rows
//! with invalid content are reported per line; nothing is repaired.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geom::{Matrix3, RigidPose, Vector3};
use crate::metrics::{Detection2D, PoseEstimate};
use crate::pose_error::Box2D;
use crate::Real;

pub const POSE_HEADER: &str = "scene_id,im_id,obj_id,score,R,t,time";
pub const DETECTION_HEADER: &str = "scene_id,im_id,obj_id,score,bbox,time";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubmissionError {
    #[error("bad header: expected {expected:?}, got {got:?}")]
    BadHeader { expected: String, got: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("{} invalid row(s):\n{}", rows.len(), format_rows(rows))]
    Rows { rows: Vec<RowError> },
}

fn format_rows(rows: &[RowError]) -> String {
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "  line {}: {}", row.line, row.kind);
    }
    out
}

/// A rejected submission row with its 1-based line number.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {kind}")]
pub struct RowError {
    pub line: u64,
    pub kind: RowErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RowErrorKind {
    #[error("expected {expected} comma-separated fields, got {got}")]
    BadFieldCount { expected: usize, got: usize },
    #[error("field {field} needs {expected} space-separated values, got {got}")]
    BadVectorLength {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("field {field}: {detail}")]
    BadNumber { field: &'static str, detail: String },
    #[error("score is not finite")]
    NonFiniteScore,
    #[error("invalid rotation: {detail}")]
    InvalidRotation { detail: String },
    #[error("invalid bbox: {detail}")]
    BadBox { detail: String },
}

struct RowReader<'a> {
    record: &'a csv::StringRecord,
    errors: Vec<RowErrorKind>,
}

impl RowReader<'_> {
    fn uint(&mut self, idx: usize, field: &'static str) -> u32 {
        match self.record.get(idx).unwrap_or("").trim().parse() {
            Ok(v) => v,
            Err(e) => {
                self.errors.push(RowErrorKind::BadNumber {
                    field,
                    detail: e.to_string(),
                });
                0
            }
        }
    }

    fn real(&mut self, idx: usize, field: &'static str) -> Real {
        match self.record.get(idx).unwrap_or("").trim().parse() {
            Ok(v) => v,
            Err(e) => {
                self.errors.push(RowErrorKind::BadNumber {
                    field,
                    detail: e.to_string(),
                });
                Real::NAN
            }
        }
    }

    fn vector(&mut self, idx: usize, field: &'static str, expected: usize) -> Vec<Real> {
        let raw = self.record.get(idx).unwrap_or("");
        let mut out = Vec::with_capacity(expected);
        for tok in raw.split_whitespace() {
            match tok.parse::<Real>() {
                Ok(v) => out.push(v),
                Err(e) => {
                    self.errors.push(RowErrorKind::BadNumber {
                        field,
                        detail: format!("{tok:?}: {e}"),
                    });
                    return out;
                }
            }
        }
        if out.len() != expected {
            self.errors.push(RowErrorKind::BadVectorLength {
                field,
                expected,
                got: out.len(),
            });
        }
        out
    }
}

fn read_rows<T>(
    bytes: &[u8],
    expected_header: &str,
    row: impl Fn(&mut RowReader) -> Option<T>,
) -> Result<Vec<T>, SubmissionError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| SubmissionError::Csv(e.to_string()))?;
    let got = headers.iter().collect::<Vec<_>>().join(",");
    if got.trim() != expected_header {
        return Err(SubmissionError::BadHeader {
            expected: expected_header.to_string(),
            got,
        });
    }
    let n_fields = expected_header.split(',').count();

    let mut out = Vec::new();
    let mut errors: Vec<RowError> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
                errors.push(RowError {
                    line,
                    kind: RowErrorKind::BadNumber {
                        field: "row",
                        detail: e.to_string(),
                    },
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        if record.len() != n_fields {
            errors.push(RowError {
                line,
                kind: RowErrorKind::BadFieldCount {
                    expected: n_fields,
                    got: record.len(),
                },
            });
            continue;
        }
        let mut rr = RowReader {
            record: &record,
            errors: Vec::new(),
        };
        let parsed = row(&mut rr);
        if rr.errors.is_empty() {
            if let Some(v) = parsed {
                out.push(v);
            }
        } else {
            errors.extend(rr.errors.into_iter().map(|kind| RowError { line, kind }));
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(SubmissionError::Rows { rows: errors })
    }
}

/// Parses a pose-task submission; every row must carry a valid rotation
/// and a finite score or the whole file is rejected with per-line
/// diagnostics.
pub fn parse_pose_submission(bytes: &[u8]) -> Result<Vec<PoseEstimate>, SubmissionError> {
    read_rows(bytes, POSE_HEADER, |rr| {
        let scene_id = rr.uint(0, "scene_id");
        let im_id = rr.uint(1, "im_id");
        let obj_id = rr.uint(2, "obj_id");
        let score = rr.real(3, "score");
        let r = rr.vector(4, "R", 9);
        let t = rr.vector(5, "t", 3);
        let time_s = rr.real(6, "time");
        if !rr.errors.is_empty() {
            return None;
        }
        if !score.is_finite() {
            rr.errors.push(RowErrorKind::NonFiniteScore);
            return None;
        }
        let mut r9 = [0.0; 9];
        r9.copy_from_slice(&r);
        let pose = match RigidPose::new(
            Matrix3::from_row_major(r9),
            Vector3::new(t[0], t[1], t[2]),
        ) {
            Ok(p) => p,
            Err(e) => {
                rr.errors.push(RowErrorKind::InvalidRotation {
                    detail: e.to_string(),
                });
                return None;
            }
        };
        Some(PoseEstimate {
            scene_id,
            im_id,
            obj_id,
            pose,
            score,
            time_s,
        })
    })
}

/// Parses a 2D-detection submission.
pub fn parse_detection_submission(bytes: &[u8]) -> Result<Vec<Detection2D>, SubmissionError> {
    read_rows(bytes, DETECTION_HEADER, |rr| {
        let scene_id = rr.uint(0, "scene_id");
        let im_id = rr.uint(1, "im_id");
        let obj_id = rr.uint(2, "obj_id");
        let score = rr.real(3, "score");
        let b = rr.vector(4, "bbox", 4);
        let time_s = rr.real(5, "time");
        if !rr.errors.is_empty() {
            return None;
        }
        if !score.is_finite() {
            rr.errors.push(RowErrorKind::NonFiniteScore);
            return None;
        }
        let bbox = match Box2D::new(b[0], b[1], b[2], b[3]) {
            Ok(b) => b,
            Err(e) => {
                rr.errors.push(RowErrorKind::BadBox {
                    detail: e.to_string(),
                });
                return None;
            }
        };
        Some(Detection2D {
            scene_id,
            im_id,
            obj_id,
            bbox,
            score,
            time_s,
        })
    })
}

fn join_reals(values: &[Real]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes a pose submission with LF line endings and shortest
/// round-trip float formatting.
pub fn write_pose_submission(rows: &[PoseEstimate]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(POSE_HEADER);
    out.push('\n');
    for e in rows {
        let r = e.pose.rotation().to_row_major();
        let t = e.pose.translation().to_array();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.scene_id,
            e.im_id,
            e.obj_id,
            e.score,
            join_reals(&r),
            join_reals(&t),
            e.time_s
        );
    }
    out.into_bytes()
}

/// Writes a 2D-detection submission.
pub fn write_detection_submission(rows: &[Detection2D]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(DETECTION_HEADER);
    out.push('\n');
    for d in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.scene_id,
            d.im_id,
            d.obj_id,
            d.score,
            join_reals(&[d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h]),
            d.time_s
        );
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID_POSE: &str = "scene_id,im_id,obj_id,score,R,t,time\n\
1,3,5,0.9,1 0 0 0 1 0 0 0 1,10 20 800,0.5\n";

    #[test]
    fn parses_valid_pose_row() {
        let rows = parse_pose_submission(VALID_POSE.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        let e = &rows[0];
        assert_eq!((e.scene_id, e.im_id, e.obj_id), (1, 3, 5));
        assert_eq!(e.score, 0.9);
        assert_eq!(e.pose.translation(), Vector3::new(10.0, 20.0, 800.0));
        assert_eq!(e.time_s, 0.5);
    }

    #[test]
    fn crlf_accepted() {
        let crlf = VALID_POSE.replace('\n', "\r\n");
        assert_eq!(parse_pose_submission(crlf.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn eight_value_rotation_is_reported_with_line() {
        let text = "scene_id,im_id,obj_id,score,R,t,time\n\
1,3,5,0.9,1 0 0 0 1 0 0 0,10 20 800,0.5\n";
        let err = parse_pose_submission(text.as_bytes()).unwrap_err();
        match err {
            SubmissionError::Rows { rows } => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].line, 2);
                assert!(matches!(
                    rows[0].kind,
                    RowErrorKind::BadVectorLength {
                        field: "R",
                        expected: 9,
                        got: 8
                    }
                ));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_rotation_matrix_rejected() {
        let text = "scene_id,im_id,obj_id,score,R,t,time\n\
1,3,5,0.9,2 0 0 0 1 0 0 0 1,10 20 800,0.5\n";
        let err = parse_pose_submission(text.as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            SubmissionError::Rows { ref rows }
                if matches!(rows[0].kind, RowErrorKind::InvalidRotation { .. })
        ));
    }

    #[test]
    fn non_finite_score_rejected() {
        let text = "scene_id,im_id,obj_id,score,R,t,time\n\
1,3,5,NaN,1 0 0 0 1 0 0 0 1,10 20 800,0.5\n";
        let err = parse_pose_submission(text.as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            SubmissionError::Rows { ref rows }
                if matches!(rows[0].kind, RowErrorKind::NonFiniteScore)
        ));
    }

    #[test]
    fn bad_header_rejected() {
        let text = "scene,im,obj,score,R,t,time\n";
        assert!(matches!(
            parse_pose_submission(text.as_bytes()),
            Err(SubmissionError::BadHeader { .. })
        ));
    }

    #[test]
    fn errors_collected_across_lines() {
        let text = "scene_id,im_id,obj_id,score,R,t,time\n\
1,3,5,0.9,1 0 0 0 1 0 0 0 1,10 20 800,0.5\n\
1,3,5,0.9,1 0 0 0 1 0 0 0,10 20 800,0.5\n\
1,3,5,0.9,1 0 0 0 1 0 0 0 1,10 20,0.5\n";
        let err = parse_pose_submission(text.as_bytes()).unwrap_err();
        match err {
            SubmissionError::Rows { rows } => {
                assert_eq!(rows.len(), 2);
                assert_eq!(rows[0].line, 3);
                assert_eq!(rows[1].line, 4);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn detection_rows_parse() {
        let text = "scene_id,im_id,obj_id,score,bbox,time\n\
1,3,5,0.9,10 20 30 40,0.5\n";
        let rows = parse_detection_submission(text.as_bytes()).unwrap();
        assert_eq!(rows[0].bbox.h, 40.0);
    }

    #[test]
    fn large_submission_roundtrips_identically() {
        use crate::geom::Matrix3;
        let mut rows = Vec::new();
        for i in 0..10_000u32 {
            let angle = i as Real * 0.001;
            let rot = Matrix3::rotation_about_axis(Vector3::new(0.0, 0.0, 1.0), angle);
            rows.push(PoseEstimate {
                scene_id: 1 + i % 3,
                im_id: i % 50,
                obj_id: 1 + i % 7,
                pose: RigidPose::new(rot, Vector3::new(0.1 * i as Real, -3.5, 700.0)).unwrap(),
                score: (i as Real * 0.37).sin(),
                time_s: 0.25,
            });
        }
        let bytes1 = write_pose_submission(&rows);
        let parsed = parse_pose_submission(&bytes1).unwrap();
        assert_eq!(parsed, rows);
        let bytes2 = write_pose_submission(&parsed);
        assert_eq!(bytes1, bytes2);
    }
}
