//! Minimal SVG line charts for the CSV tables the command-line tools emit.
//! CSV is the contract; these plots are a convenience for eyeballing runs.

use std::fmt::Write as _;

/// Render `(x, y)` series as a single polyline chart. Non-finite points
/// break the line. Returns a self-contained SVG document.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 56.0; // margin on every side

    let finite: Vec<(f64, f64)> =
        points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if finite.is_empty() {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-300 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>",
        W / 2.0,
        escape(title)
    );
    // Axes.
    let _ = writeln!(
        out,
        "<path d=\"M {m} {m} L {m} {b} L {r} {b}\" stroke=\"black\" fill=\"none\"/>",
        m = M,
        b = H - M,
        r = W - M
    );
    for (label, x, y, anchor) in [
        (format!("{x0:.3}"), M, H - M + 18.0, "middle"),
        (format!("{x1:.3}"), W - M, H - M + 18.0, "middle"),
        (format!("{y0:.3}"), M - 6.0, H - M, "end"),
        (format!("{y1:.3}"), M - 6.0, M, "end"),
    ] {
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" \
             font-family=\"sans-serif\" font-size=\"11\">{label}</text>"
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>",
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    // The polyline, split at non-finite points.
    let mut path = String::new();
    let mut pen_down = false;
    for &(x, y) in points {
        if !(x.is_finite() && y.is_finite()) {
            pen_down = false;
            continue;
        }
        let cmd = if pen_down { 'L' } else { 'M' };
        let _ = write!(path, "{cmd} {:.2} {:.2} ", sx(x), sy(y));
        pen_down = true;
    }
    if !path.is_empty() {
        let _ = writeln!(out, "<path d=\"{}\" stroke=\"#1f77b4\" stroke-width=\"1.5\" fill=\"none\"/>", path.trim_end());
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
