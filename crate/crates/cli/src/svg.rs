//! Minimal self-contained SVG plots: a polyline chart for bifurcation
//! diagrams and a scatter chart for constant-vs-resolution summaries.
//! No external assets, deterministic output.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

struct Frame {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn from_points(points: &[(f64, f64)]) -> Frame {
        let mut xmin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for &(x, y) in points {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        if !xmin.is_finite() {
            (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: &mut f64, hi: &mut f64| {
            let span = (*hi - *lo).abs();
            let eps = if span == 0.0 { 0.5 + lo.abs() * 0.1 } else { span * 0.06 };
            *lo -= eps;
            *hi += eps;
        };
        pad(&mut xmin, &mut xmax);
        pad(&mut ymin, &mut ymax);
        Frame { xmin, xmax, ymin, ymax }
    }

    fn sx(&self, x: f64) -> f64 {
        ML + (x - self.xmin) / (self.xmax - self.xmin) * (W - ML - MR)
    }

    fn sy(&self, y: f64) -> f64 {
        H - MB - (y - self.ymin) / (self.ymax - self.ymin) * (H - MT - MB)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.abs().log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-12 * span.abs() {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn chart_shell(title: &str, xlabel: &str, ylabel: &str, frame: &Frame, header: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<!-- {header} -->");
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>",
        W / 2.0
    );
    // axes
    let _ = writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    );
    let _ = writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    );
    for t in ticks(frame.xmin, frame.xmax) {
        let x = frame.sx(t);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            H - MB + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(frame.ymin, frame.ymax) {
        let y = frame.sy(t);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{ML}\" y2=\"{y:.2}\" stroke=\"black\"/>",
            ML - 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            ML - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{xlabel}</text>",
        ML + (W - ML - MR) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{ylabel}</text>",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    );
    s
}

/// Polyline chart with optional marked points (drawn as filled circles).
pub fn line_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(f64, f64)],
    marks: &[(f64, f64)],
    header: &str,
) -> String {
    let all: Vec<(f64, f64)> = series.iter().chain(marks).copied().collect();
    let frame = Frame::from_points(&all);
    let mut s = chart_shell(title, xlabel, ylabel, &frame, header);
    if !series.is_empty() {
        let pts: Vec<String> = series
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.sx(x), frame.sy(y)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f5fa6\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
    }
    for &(x, y) in marks {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"#c23b22\"/>",
            frame.sx(x),
            frame.sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter chart.
pub fn scatter_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    points: &[(f64, f64)],
    header: &str,
) -> String {
    let frame = Frame::from_points(points);
    let mut s = chart_shell(title, xlabel, ylabel, &frame, header);
    for &(x, y) in points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f5fa6\" fill-opacity=\"0.6\"/>",
            frame.sx(x),
            frame.sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}
