//! Standalone SVG line chart of actual vs predicted prices.

use std::fmt::Write;

use chrono::NaiveDate;

pub const ACTUAL_COLOR: &str = "green";
pub const PREDICTED_COLOR: &str = "red";

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const Y_TICKS: usize = 5;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn points(values: &[f64], x: impl Fn(usize) -> f64, y: impl Fn(f64) -> f64) -> String {
    let mut out = String::new();
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", x(i), y(v));
    }
    out
}

/// Renders both series against the sample index. `dates`, when it has one
/// entry per sample, labels the first and last x positions.
pub fn render_svg(title: &str, dates: &[NaiveDate], actual: &[f64], predicted: &[f64]) -> String {
    let finite = actual.iter().chain(predicted).copied().filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = actual.len().max(predicted.len());
    let x = |i: usize| LEFT + if n > 1 { plot_w * i as f64 / (n - 1) as f64 } else { plot_w / 2.0 };
    let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="gray"/>"#
    );
    for k in 0..=Y_TICKS {
        let v = lo + (hi - lo) * k as f64 / Y_TICKS as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0
        );
    }
    if dates.len() == n && n > 0 {
        let base = HEIGHT - BOTTOM + 18.0;
        let _ = writeln!(svg, r#"<text x="{LEFT}" y="{base}">{}</text>"#, dates[0]);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{base}" text-anchor="end">{}</text>"#,
            WIDTH - RIGHT,
            dates[n - 1]
        );
    }
    for (values, color, label) in [
        (actual, ACTUAL_COLOR, "actual"),
        (predicted, PREDICTED_COLOR, "predicted"),
    ] {
        let _ = writeln!(
            svg,
            r#"<polyline class="{label}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points(values, x, y)
        );
    }
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (row, (color, label)) in [(ACTUAL_COLOR, "Actual"), (PREDICTED_COLOR, "Predicted")].iter().enumerate() {
        let ly = TOP + 14.0 + 18.0 * row as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{label}</text>"#,
            LEFT + 10.0,
            LEFT + 34.0,
            LEFT + 40.0,
            ly + 4.0
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}
