//! Minimal self-contained SVG line plots of table columns.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::{format_sig, CsvTable};

/// Which columns to draw. Rows are grouped into one polyline per distinct
/// value of the `group_by` columns. Filters on the same column are
/// alternatives; a row must satisfy one of them for every filtered column.
/// Rows with an empty or non-numeric x or y are skipped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesSpec {
    pub x: String,
    pub y: String,
    pub group_by: Vec<String>,
    pub filter: Vec<(String, String)>,
    pub title: String,
}

impl SeriesSpec {
    pub fn new(x: &str, y: &str) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
            ..Default::default()
        }
    }

    pub fn group_by(mut self, column: &str) -> Self {
        self.group_by.push(column.into());
        self
    }

    pub fn filter(mut self, column: &str, value: &str) -> Self {
        self.filter.push((column.into(), value.into()));
        self
    }

    pub fn title(mut self, title: &str) -> Self {
        self.title = title.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Extracts the series described by `spec`; missing columns are reported by
/// name.
pub fn extract_series(table: &CsvTable, spec: &SeriesSpec) -> Result<Vec<Series>> {
    let xi = table.column(&spec.x)?;
    let yi = table.column(&spec.y)?;
    let gi: Vec<usize> = spec
        .group_by
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<_>>()?;
    let fi: Vec<(usize, &str)> = spec
        .filter
        .iter()
        .map(|(c, v)| Ok((table.column(c)?, v.as_str())))
        .collect::<Result<_>>()?;

    let mut series: Vec<Series> = Vec::new();
    for row in &table.rows {
        let rejected = fi.iter().any(|&(i, _)| {
            let cell = row[i].render();
            !fi.iter().any(|&(j, v)| j == i && cell == v)
        });
        if rejected {
            continue;
        }
        let (Some(x), Some(y)) = (row[xi].as_f64(), row[yi].as_f64()) else {
            continue;
        };
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let label = gi
            .iter()
            .zip(&spec.group_by)
            .map(|(&i, name)| format!("{name}={}", row[i].render()))
            .collect::<Vec<_>>()
            .join(", ");
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((x, y)),
            None => series.push(Series {
                label,
                points: vec![(x, y)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= hi + 1e-9 * step {
        ticks.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * hi.abs().max(1.0) {
        let pad = 0.5 * hi.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_svg(table: &CsvTable, spec: &SeriesSpec) -> Result<String> {
    let series = extract_series(table, spec)?;
    let (x0, x1) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !spec.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            xml_escape(&spec.title)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let yb = MARGIN_TOP + ph;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{yb}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            yb + 5.0,
            yb + 18.0,
            format_sig(t, 6)
        );
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/><line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT + pw,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            format_sig(t, 6)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 12.0,
        xml_escape(&spec.x)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        xml_escape(&spec.y)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let label = if s.label.is_empty() { &spec.y } else { &s.label };
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            xml_escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_svg_plot(table: &CsvTable, spec: &SeriesSpec, path: &Path) -> Result<()> {
    let svg = render_svg(table, spec)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
