//! Minimal SVG line and bar charts. Output depends only on the input
//! numbers: coordinates are printed with fixed precision and no font
//! metrics are consulted.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub categories: Vec<String>,
    /// One value per category for each named series.
    pub series: Vec<(String, Vec<f64>)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Rounded axis range covering `[lo, hi]` and its tick step.
fn nice_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if (hi - lo).abs() < 1e-12 {
        (
            lo - 0.5_f64.max(lo.abs() * 0.1),
            hi + 0.5_f64.max(hi.abs() * 0.1),
        )
    } else {
        (lo, hi)
    };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn y_axis(out: &mut String, frame: &Frame, step: f64, label: &str) {
    let mut y = frame.y0;
    while y <= frame.y1 + step * 1e-9 {
        let py = frame.py(y);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            tick_label(y)
        );
        y += step;
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (HEIGHT - BOTTOM + TOP) / 2.0,
        escape(label)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}" stroke="black"/>"#,
        HEIGHT - BOTTOM
    );
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT
    );
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{}"/>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{y:.2}">{}</text>"#,
            x + 18.0,
            escape(name)
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

impl LineChart {
    pub fn to_svg(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter().copied());
        let (xlo, xhi) = bounds(pts().map(|p| p.0));
        let (ylo, yhi) = bounds(pts().map(|p| p.1));
        let (xlo, xhi) = if xlo.is_finite() {
            (xlo, xhi)
        } else {
            (0.0, 1.0)
        };
        let (ylo, yhi) = if ylo.is_finite() {
            (ylo.min(0.0), yhi)
        } else {
            (0.0, 1.0)
        };
        let (x0, x1, xstep) = nice_range(xlo, xhi);
        let (y0, y1, ystep) = nice_range(ylo, yhi);
        let frame = Frame { x0, x1, y0, y1 };

        let mut out = String::new();
        open(&mut out, &self.title);
        y_axis(&mut out, &frame, ystep, &self.y_label);
        let mut x = x0;
        while x <= x1 + xstep * 1e-9 {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                frame.px(x),
                HEIGHT - BOTTOM + 18.0,
                tick_label(x)
            );
            x += xstep;
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (WIDTH - RIGHT + LEFT) / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                path.join(" ")
            );
            for &(x, y) in &s.points {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    frame.px(x),
                    frame.py(y)
                );
            }
        }
        let names: Vec<&str> = self.series.iter().map(|s| s.name.as_str()).collect();
        legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}

impl BarChart {
    pub fn to_svg(&self) -> String {
        let (lo, hi) = bounds(self.series.iter().flat_map(|s| s.1.iter().copied()));
        let (lo, hi) = if lo.is_finite() {
            (lo.min(0.0), hi.max(0.0))
        } else {
            (0.0, 1.0)
        };
        let (y0, y1, ystep) = nice_range(lo, hi);
        let n_cat = self.categories.len().max(1) as f64;
        let frame = Frame {
            x0: 0.0,
            x1: n_cat,
            y0,
            y1,
        };

        let mut out = String::new();
        open(&mut out, &self.title);
        y_axis(&mut out, &frame, ystep, &self.y_label);
        let group = (WIDTH - LEFT - RIGHT) / n_cat;
        let bar = group * 0.8 / self.series.len().max(1) as f64;
        for (c, cat) in self.categories.iter().enumerate() {
            let gx = LEFT + group * c as f64;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                gx + group / 2.0,
                HEIGHT - BOTTOM + 18.0,
                escape(cat)
            );
            for (i, (_, values)) in self.series.iter().enumerate() {
                let Some(&v) = values.get(c) else { continue };
                let (top, bottom) = (frame.py(v.max(0.0)), frame.py(v.min(0.0)));
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{top:.2}" width="{bar:.2}" height="{:.2}" fill="{}"/>"#,
                    gx + group * 0.1 + bar * i as f64,
                    bottom - top,
                    PALETTE[i % PALETTE.len()]
                );
            }
        }
        let names: Vec<&str> = self.series.iter().map(|s| s.0.as_str()).collect();
        legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}
