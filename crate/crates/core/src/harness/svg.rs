//! Minimal SVG line charts for forecast plots. Output contains no
//! timestamps, so identical inputs give identical files.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 40.0;

/// Data of one forecast plot; every series is `(time_s, value)`.
#[derive(Debug, Clone, Default)]
pub struct ForecastPlot<'a> {
    pub title: &'a str,
    pub unit_label: &'a str,
    pub history: Vec<(f64, f64)>,
    pub truth: Vec<(f64, f64)>,
    pub mean: Vec<(f64, f64)>,
    pub lower: Vec<(f64, f64)>,
    pub upper: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Scale {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn points<'a>(&self, pts: impl Iterator<Item = &'a (f64, f64)>) -> String {
        pts.map(|&(t, v)| format!("{:.2},{:.2}", self.x(t), self.y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        if v.is_finite() {
            (lo.min(v), hi.max(v))
        } else {
            (lo, hi)
        }
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// History, truth and mean forecast as lines over a shaded band.
pub fn forecast_svg(plot: &ForecastPlot) -> String {
    let all = || {
        plot.history
            .iter()
            .chain(&plot.truth)
            .chain(&plot.mean)
            .chain(&plot.lower)
            .chain(&plot.upper)
    };
    let (x0, x1) = extent(all().map(|p| p.0));
    let (y0, y1) = extent(all().map(|p| p.1));
    let sc = Scale { x0, x1, y0, y1 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(plot.title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for (v, y) in [(y0, HEIGHT - BOTTOM), (y1, TOP)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.4}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            v
        );
    }
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{:.0} s</text>"#,
            sc.x(v),
            HEIGHT - BOTTOM + 16.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(plot.unit_label)
    );
    if !plot.upper.is_empty() {
        let band = sc.points(plot.upper.iter().chain(plot.lower.iter().rev()));
        let _ = writeln!(
            s,
            r##"<polygon points="{band}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##
        );
    }
    for (series, color, dash, label) in [
        (&plot.history, "#555555", "", "history"),
        (&plot.truth, "#000000", "", "truth"),
        (&plot.mean, "#1f77b4", r#" stroke-dasharray="6 3""#, "mean forecast"),
    ] {
        if series.is_empty() {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}><title>{label}</title></polyline>"#,
            sc.points(series.iter())
        );
    }
    let legend = [
        ("#555555", "history"),
        ("#000000", "truth"),
        ("#1f77b4", "mean forecast, 95% band"),
    ];
    for (i, (color, label)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = LEFT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            y - 4.0,
            x + 18.0,
            y - 4.0,
            x + 24.0,
            y
        );
    }
    s.push_str("</svg>\n");
    s
}
