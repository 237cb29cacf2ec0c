//! Minimal SVG charts for the CSV outputs.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

fn frame(title: &str, x_label: &str, y_label: &str, body: &str, x_ticks: &[(f64, String)], y_max: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD / 2.0, PAD / 1.5);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for (x, label) in x_ticks {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 16.0, escape(label));
    }
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, short(v));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn short(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn scale(v: f64, max: f64) -> f64 {
    let (y0, y1) = (H - PAD, PAD / 1.5);
    if max <= 0.0 {
        y0
    } else {
        y0 - (y0 - y1) * v / max
    }
}

/// Polyline through evenly spaced categories.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(String, f64)]) -> String {
    let max = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let n = points.len().max(1);
    let step = (W - 1.5 * PAD) / n as f64;
    let xs: Vec<f64> = (0..n).map(|k| PAD + step * (k as f64 + 0.5)).collect();
    let mut body = String::from(r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points=""#);
    for (k, p) in points.iter().enumerate() {
        let _ = write!(body, "{:.1},{:.1} ", xs[k], scale(p.1, max));
    }
    body.push_str("\"/>\n");
    for (k, p) in points.iter().enumerate() {
        let _ = writeln!(body, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#, xs[k], scale(p.1, max));
    }
    let ticks: Vec<(f64, String)> = points.iter().enumerate().map(|(k, p)| (xs[k], p.0.clone())).collect();
    frame(title, x_label, y_label, &body, &ticks, max)
}

pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let max = bars.iter().map(|p| p.1).fold(0.0, f64::max);
    let n = bars.len().max(1);
    let step = (W - 1.5 * PAD) / n as f64;
    let mut body = String::new();
    let mut ticks = Vec::new();
    let every = n.div_ceil(12);
    for (k, (label, v)) in bars.iter().enumerate() {
        let x = PAD + step * k as f64 + step * 0.1;
        let y = scale(*v, max);
        let _ = writeln!(body, r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="steelblue"/>"#, step * 0.8, (H - PAD - y).max(0.0));
        if k % every == 0 {
            ticks.push((x + step * 0.4, label.clone()));
        }
    }
    frame(title, x_label, y_label, &body, &ticks, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_wellformed() {
        let s = line_chart("t", "x", "y", &[("a".into(), 1.0), ("b".into(), 2.0)]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
        let b = bar_chart("t & u", "x", "y", &[("0".into(), 0.0), ("1".into(), 3.0)]);
        assert!(b.contains("t &amp; u"));
        assert_eq!(b.matches("<rect").count(), 3);
    }
}
