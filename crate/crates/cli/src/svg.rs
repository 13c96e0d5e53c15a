//! Self-contained, deterministic SVG rendering of precision-recall
//! curves: fixed canvas, fixed number formatting, no external assets.

use std::fmt::Write as _;

use pose_eval_core::metrics::PrCurve;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

fn x_px(recall: f64) -> f64 {
    MARGIN_L + recall * (W - MARGIN_L - MARGIN_R)
}

fn y_px(precision: f64) -> f64 {
    H - MARGIN_B - precision * (H - MARGIN_T - MARGIN_B)
}

/// Renders one PR curve. Output bytes are a pure function of the
/// inputs; an empty curve yields axes with no polyline.
pub fn pr_curve_svg(title: &str, curve: &PrCurve) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="monospace" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );

    // Gridlines and tick labels every 0.1.
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        let (gx, gy) = (x_px(v), y_px(v));
        let _ = writeln!(
            s,
            r##"<line x1="{gx:.2}" y1="{:.2}" x2="{gx:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            y_px(0.0),
            y_px(1.0)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{gy:.2}" x2="{:.2}" y2="{gy:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            x_px(0.0),
            x_px(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{gx:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="middle">{v:.1}</text>"#,
            y_px(0.0) + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="end">{v:.1}</text>"#,
            x_px(0.0) - 6.0,
            gy + 4.0
        );
    }

    // Axes.
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
        x_px(0.0),
        y_px(0.0),
        x_px(1.0),
        y_px(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
        x_px(0.0),
        y_px(0.0),
        x_px(0.0),
        y_px(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="12" text-anchor="middle">recall</text>"#,
        (x_px(0.0) + x_px(1.0)) / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="monospace" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">precision</text>"#,
        (y_px(0.0) + y_px(1.0)) / 2.0,
        (y_px(0.0) + y_px(1.0)) / 2.0
    );

    if !curve.points.is_empty() {
        let mut points = String::new();
        for &(r, p) in &curve.points {
            let _ = write!(points, "{:.4},{:.4} ", x_px(r), y_px(p));
        }
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f6fb2" stroke-width="2"/>"##,
            points.trim_end()
        );
        for &(r, p) in &curve.points {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.4}" cy="{:.4}" r="2.5" fill="#1f6fb2"/>"##,
                x_px(r),
                y_px(p)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="11" text-anchor="end">tp={} fp={} gt={}</text>"#,
        W - MARGIN_R,
        MARGIN_T - 6.0,
        curve.num_tp,
        curve.num_fp,
        curve.num_gt
    );
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
