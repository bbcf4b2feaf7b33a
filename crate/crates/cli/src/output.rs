//! CSV tables and SVG plots.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

/// First line of every CSV file.
pub const CSV_HEADER: &str = "# fractail-csv v1";

/// Shortest round-trip representation, so identical runs give identical
/// bytes.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            // writes into memory cannot fail
            w.write_record(&self.columns).expect("in-memory write");
            for row in &self.rows {
                w.write_record(row).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        String::from_utf8(out).expect("records are UTF-8")
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.to_csv())?;
        Ok(path)
    }
}

/// Parses a file written by [`Table::to_csv`] back into columns and rows.
pub fn read_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let body = text.strip_prefix(CSV_HEADER)?.strip_prefix('\n')?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let columns = reader.headers().ok()?.iter().map(str::to_owned).collect();
    let rows = reader
        .records()
        .map(|r| r.ok().map(|r| r.iter().map(str::to_owned).collect()))
        .collect::<Option<Vec<Vec<String>>>>()?;
    Some((columns, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn map(self, v: f64) -> Option<f64> {
        match self {
            Scale::Linear => v.is_finite().then_some(v),
            Scale::Log => (v > 0.0 && v.is_finite()).then(|| v.log10()),
        }
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 70.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64, scale: Scale) -> Vec<(f64, String)> {
    match scale {
        Scale::Log => (lo.ceil() as i32..=hi.floor() as i32).map(|e| (e as f64, format!("1e{e}"))).collect(),
        Scale::Linear => (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).map(|v| (v, format!("{v:.3}"))).collect(),
    }
}

/// Line plot; points that cannot be drawn on the chosen scales are dropped.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    x_scale: Scale,
    y_scale: Scale,
) -> String {
    let mapped: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter_map(|&(x, y)| Some((x_scale.map(x)?, y_scale.map(y)?))).collect())
        .collect();
    let all = mapped.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        (x0, x1) = (x0.min(0.0) - 1.0, x1.max(0.0) + 1.0);
    }
    if !(y1 > y0) {
        (y0, y1) = (y0.min(0.0) - 1.0, y1.max(0.0) + 1.0);
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (v, label) in ticks(x0, x1, x_scale) {
        let x = px(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 5.0
        );
        let _ =
            writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, HEIGHT - MARGIN + 20.0);
    }
    for (v, label) in ticks(y0, y1, y_scale) {
        let y = py(v);
        let _ =
            writeln!(svg, r#"<line x1="{:.1}" y1="{y:.1}" x2="{MARGIN}" y2="{y:.1}" stroke="black"/>"#, MARGIN - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, MARGIN - 8.0, y + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, (s, pts)) in series.iter().zip(&mapped).enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        } else if let Some(&(x, y)) = pts.first() {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(x), py(y));
        }
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            WIDTH - MARGIN - 150.0,
            WIDTH - MARGIN - 130.0
        );
        let _ =
            writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, WIDTH - MARGIN - 125.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Grouped bars of true against recovered values.
pub fn bar_chart(title: &str, labels: &[String], truth: &[f64], estimate: &[f64]) -> String {
    let top = truth.iter().chain(estimate).fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let n = labels.len().max(1) as f64;
    let slot = (WIDTH - 2.0 * MARGIN) / n;
    let zero = HEIGHT / 2.0;
    let half = HEIGHT / 2.0 - MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(svg, r#"<line x1="{MARGIN}" y1="{zero}" x2="{}" y2="{zero}" stroke="black"/>"#, WIDTH - MARGIN);
    for (i, label) in labels.iter().enumerate() {
        let x = MARGIN + slot * i as f64;
        for (j, (values, colour)) in [(truth, PALETTE[0]), (estimate, PALETTE[1])].iter().enumerate() {
            let v = values.get(i).copied().unwrap_or(0.0);
            let h = v.abs() / top * half;
            let y = if v >= 0.0 { zero - h } else { zero };
            let bx = x + slot * (0.15 + 0.35 * j as f64);
            let _ = writeln!(
                svg,
                r#"<rect x="{bx:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{colour}"/>"#,
                slot * 0.3
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x + slot / 2.0,
            HEIGHT - MARGIN + 20.0,
            escape(label)
        );
    }
    for (j, name) in ["true", "recovered"].iter().enumerate() {
        let y = MARGIN + 16.0 * j as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="12" height="10" fill="{}"/>"#,
            WIDTH - MARGIN - 110.0,
            y - 9.0,
            PALETTE[j]
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{y}">{name}</text>"#, WIDTH - MARGIN - 92.0);
    }
    svg.push_str("</svg>\n");
    svg
}
