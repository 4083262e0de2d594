//! Static SVG precision-recall plot.

use std::fmt::Write as _;

use patchvpr_core::PrPoint;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn x_px(recall: f64) -> f64 {
    MARGIN_LEFT + recall.clamp(0.0, 1.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
}

fn y_px(precision: f64) -> f64 {
    HEIGHT - MARGIN_BOTTOM - precision.clamp(0.0, 1.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
}

/// Renders one PR curve, starting at `(0, first precision)` like the AUC
/// integration, with the AUC in the legend.
pub fn pr_curve_svg(points: &[PrPoint], auc: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let (x, y) = (x_px(v), y_px(v));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            y_px(0.0),
            y_px(1.0)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            x_px(0.0),
            x_px(1.0)
        );
        let _ =
            writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#, y_px(0.0) + 16.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            x_px(0.0) - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x_px(0.0),
        y_px(1.0),
        x_px(1.0) - x_px(0.0),
        y_px(0.0) - y_px(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Recall</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Precision</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    if let Some(first) = points.first() {
        let mut coords = format!("{:.2},{:.2}", x_px(0.0), y_px(first.precision));
        for p in points {
            let _ = write!(coords, " {:.2},{:.2}", x_px(p.recall), y_px(p.precision));
        }
        let _ =
            writeln!(s, r##"<polyline points="{coords}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##);
    }

    let (lx, ly) = (x_px(1.0) - 150.0, y_px(1.0) + 16.0);
    let _ = writeln!(
        s,
        r##"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="#1f77b4" stroke-width="2"/>"##,
        lx + 24.0
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">AUC = {auc:.3}</text>"#, lx + 30.0, ly + 4.0);
    s.push_str("</svg>\n");
    s
}
