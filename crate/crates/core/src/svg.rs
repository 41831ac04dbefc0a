//! Minimal SVG line and bar charts for run artifacts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64), x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<path d="M{x0} {y1} V{y0} H{x1}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{x0}" y="{}" text-anchor="start">{:.3}</text>"#,
        y0 + 15.0,
        x.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{x1}" y="{}" text-anchor="end">{:.3}</text>"#,
        y0 + 15.0,
        x.1
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{y0}" text-anchor="end">{:.3}</text>"#,
        x0 - 4.0,
        y.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        x0 - 4.0,
        y1 + 10.0,
        y.1
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn scale(v: f64, (lo, hi): (f64, f64), a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

/// Line chart. Each series gets its own vertical scale when `normalize` is
/// set, so curves of different magnitude stay readable.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], normalize: bool) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let x = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let shared = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let y_axis = if normalize { (0.0, 1.0) } else { shared };
    axes(&mut out, x, y_axis, x_label, y_label);
    for (n, s) in series.iter().enumerate() {
        let y = if normalize {
            range(s.points.iter().map(|p| p.1))
        } else {
            shared
        };
        let color = COLORS[n % COLORS.len()];
        let mut d = String::new();
        for &(px, py) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let cmd = if d.is_empty() { 'M' } else { 'L' };
            let _ = write!(
                d,
                "{cmd}{:.2} {:.2} ",
                scale(px, x, MARGIN, WIDTH - MARGIN),
                scale(py, y, HEIGHT - MARGIN, MARGIN)
            );
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            MARGIN + 14.0 * n as f64,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart with a zero baseline; bars may be negative. `None` values
/// are left blank.
pub fn bar_chart(title: &str, y_label: &str, bars: &[(String, Option<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (lo, hi) = range(bars.iter().filter_map(|b| b.1).chain([0.0]));
    axes(&mut out, (0.0, bars.len() as f64), (lo, hi), "", y_label);
    let zero = scale(0.0, (lo, hi), HEIGHT - MARGIN, MARGIN);
    let slot = (WIDTH - 2.0 * MARGIN) / bars.len().max(1) as f64;
    for (i, (label, value)) in bars.iter().enumerate() {
        let left = MARGIN + slot * i as f64;
        if let Some(v) = value {
            let top = scale(*v, (lo, hi), HEIGHT - MARGIN, MARGIN);
            let color = if *v >= 0.0 { COLORS[2] } else { COLORS[1] };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                left + slot * 0.1,
                top.min(zero),
                slot * 0.8,
                (top - zero).abs()
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="9">{}</text>"#,
            left + slot / 2.0,
            HEIGHT - MARGIN + 28.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_well_formed() {
        let pts = [(0.0, 1.0), (1.0, 0.5), (2.0, f64::NAN)];
        let svg = line_chart(
            "a < b",
            "y",
            "v",
            &[Series {
                label: "phi",
                points: &pts,
            }],
            true,
        );
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn bar_chart_handles_missing_and_negative() {
        let bars = vec![
            ("b0".to_string(), Some(-1.0)),
            ("b1".to_string(), None),
            ("b2".to_string(), Some(2.0)),
        ];
        let svg = bar_chart("delta", "mse", &bars);
        assert_eq!(svg.matches("<rect").count(), 3);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
