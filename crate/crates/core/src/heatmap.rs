//! SVG heatmap of an ablation report: green cells beat the structure-only
//! baseline, red cells fall behind it.

use std::fmt::Write as _;
use std::path::Path;

use crate::ablation::AblationReport;
use crate::error::Result;

/// Deltas closer to zero than this (half an accuracy point) stay neutral.
pub const NEUTRAL_TOLERANCE: f64 = 0.005;

pub const NEUTRAL_COLOR: &str = "#e6e6e6";
const EMPTY_COLOR: &str = "#ffffff";
const CELL: usize = 64;
const MARGIN: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shade {
    Better,
    Worse,
    Neutral,
}

pub fn shade(delta: f64, tolerance: f64) -> Shade {
    if delta.abs() < tolerance {
        Shade::Neutral
    } else if delta > 0.0 {
        Shade::Better
    } else {
        Shade::Worse
    }
}

/// Interpolates from a pale tint to full strength by `|delta| / scale`.
pub fn cell_color(delta: f64, scale: f64, tolerance: f64) -> String {
    let (pale, full) = match shade(delta, tolerance) {
        Shade::Neutral => return NEUTRAL_COLOR.to_string(),
        Shade::Better => ([0xd9, 0xf0, 0xd3], [0x1b, 0x78, 0x37]),
        Shade::Worse => ([0xfd, 0xdb, 0xc7], [0xb2, 0x18, 0x2b]),
    };
    let t = if scale > 0.0 { (delta.abs() / scale).clamp(0.0, 1.0) } else { 1.0 };
    let mix = |i: usize| (pale[i] as f64 + (full[i] as f64 - pale[i] as f64) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Key × key grid of deltas in metric points (×100 for accuracy), with the
/// single-key results on the diagonal.
pub fn render_heatmap(report: &AblationReport, tolerance: f64) -> String {
    let deltas = report.delta_matrix();
    let n = report.keys.len();
    let scale = deltas.iter().flatten().flatten().fold(0.0f64, |m, d| m.max(d.abs()));
    let points = if report.metric == "accuracy" { 100.0 } else { 1.0 };
    let width = MARGIN + n * CELL + 20;
    let height = MARGIN + n * CELL + 40;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let title = format!(
        "{} on {}: {} vs. baseline {:.4}",
        report.model.as_str(),
        report.task,
        report.metric,
        report.baseline.mean
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, xml_escape(&title));
    let _ = writeln!(s, r#"<text x="10" y="24" font-size="14">{}</text>"#, xml_escape(&title));
    for (i, key) in report.keys.iter().enumerate() {
        let y = MARGIN + i * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" font-size="12" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            MARGIN - 8,
            xml_escape(key)
        );
        let x = MARGIN + i * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-size="12" text-anchor="start" transform="rotate(-45 {x} {})">{}</text>"#,
            MARGIN - 8,
            MARGIN - 8,
            xml_escape(key)
        );
    }
    for (i, row) in deltas.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let (x, y) = (MARGIN + j * CELL, MARGIN + i * CELL);
            let fill = cell.map_or_else(|| EMPTY_COLOR.to_string(), |d| cell_color(d, scale, tolerance));
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ffffff" stroke-width="1"/>"##
            );
            if let Some(d) = cell {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" dominant-baseline="middle">{:+.1}</text>"#,
                    x + CELL / 2,
                    y + CELL / 2,
                    d * points
                );
            }
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="10" y="{}" font-size="11">cells: change vs. no labels/properties; green better, red worse, grey within {:.1}</text>"#,
        height - 12,
        tolerance * points
    );
    s.push_str("</svg>\n");
    s
}

pub fn write_heatmap(report: &AblationReport, path: impl AsRef<Path>, tolerance: f64) -> Result<()> {
    std::fs::write(path, render_heatmap(report, tolerance))?;
    Ok(())
}
