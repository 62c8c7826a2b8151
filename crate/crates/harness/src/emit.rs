//! Report artifacts: CSV tables and standalone SVG heatmaps. Both embed the
//! config hash and seed, and both render deterministically so re-running a
//! config reproduces identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::HarnessError;

/// Column-labeled string table; every row carries the same arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Table {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: Vec<S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        assert_eq!(row.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(row);
    }
}

/// Fixed six-decimal rendering keeps emitted artifacts byte-stable.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Diverging map: blue at 0, white at 0.5, red at 1; inputs clamp to [0,1].
pub fn diverging_rgb(t: f64) -> [u8; 3] {
    const BLUE: [f64; 3] = [33.0, 102.0, 172.0];
    const WHITE: [f64; 3] = [255.0, 255.0, 255.0];
    const RED: [f64; 3] = [178.0, 24.0, 43.0];
    let t = t.clamp(0.0, 1.0);
    let (lo, hi, s) =
        if t < 0.5 { (BLUE, WHITE, 2.0 * t) } else { (WHITE, RED, 2.0 * (t - 0.5)) };
    let mut rgb = [0u8; 3];
    for (i, c) in rgb.iter_mut().enumerate() {
        *c = (lo[i] + (hi[i] - lo[i]) * s).round() as u8;
    }
    rgb
}

/// Heatmap description in data coordinates. `values` is row-major with row 0
/// at the bottom of the plot (y increases upward); overlay polylines share
/// the data coordinate frame.
pub struct Heatmap<'a> {
    pub values: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub title: &'a str,
    pub overlay: &'a [Vec<[f64; 2]>],
    /// Provenance line embedded in the SVG metadata (config hash, seed).
    pub note: &'a str,
}

const PLOT_W: f64 = 480.0;
const PLOT_H: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_B: f64 = 48.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_R: f64 = 24.0;

fn map_x(h: &Heatmap, x: f64) -> f64 {
    MARGIN_L + (x - h.x_range[0]) / (h.x_range[1] - h.x_range[0]) * PLOT_W
}

fn map_y(h: &Heatmap, y: f64) -> f64 {
    MARGIN_T + PLOT_H - (y - h.y_range[0]) / (h.y_range[1] - h.y_range[0]) * PLOT_H
}

/// Renders a standalone SVG document.
pub fn render_heatmap(h: &Heatmap) -> String {
    assert_eq!(h.values.len(), h.rows * h.cols, "matrix shape mismatch");
    assert!(h.values.iter().all(|v| v.is_finite()), "heatmap values must be finite");
    assert!(h.x_range[1] > h.x_range[0] && h.y_range[1] > h.y_range[0]);

    let width = MARGIN_L + PLOT_W + MARGIN_R;
    let height = MARGIN_T + PLOT_H + MARGIN_B;
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = write!(svg, "<desc>{}</desc>\n", xml_escape(h.note));
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        MARGIN_L + PLOT_W / 2.0,
        MARGIN_T - 12.0,
        xml_escape(h.title)
    );

    // Cells tile the ranges exactly; 0.5px bleed hides antialiasing seams.
    let cw = PLOT_W / h.cols as f64;
    let ch = PLOT_H / h.rows as f64;
    for r in 0..h.rows {
        for c in 0..h.cols {
            let [red, green, blue] = diverging_rgb(h.values[r * h.cols + c]);
            let x = MARGIN_L + c as f64 * cw;
            let y = MARGIN_T + PLOT_H - (r + 1) as f64 * ch;
            let _ = write!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"rgb({red},{green},{blue})\"/>\n",
                cw + 0.5,
                ch + 0.5
            );
        }
    }

    for poly in h.overlay {
        if poly.len() < 2 {
            continue;
        }
        let pts: Vec<String> = poly
            .iter()
            .map(|p| format!("{:.2},{:.2}", map_x(h, p[0]), map_y(h, p[1])))
            .collect();
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        );
    }

    // Five ticks per axis spanning the full range.
    for i in 0..=4 {
        let fx = h.x_range[0] + (h.x_range[1] - h.x_range[0]) * i as f64 / 4.0;
        let fy = h.y_range[0] + (h.y_range[1] - h.y_range[0]) * i as f64 / 4.0;
        let _ = write!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{fx:.2}</text>\n",
            map_x(h, fx),
            MARGIN_T + PLOT_H + 16.0
        );
        let _ = write!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{fy:.2}</text>\n",
            MARGIN_L - 6.0,
            map_y(h, fy) + 4.0
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + PLOT_W / 2.0,
        MARGIN_T + PLOT_H + 36.0,
        xml_escape(h.x_label)
    );
    let _ = write!(
        svg,
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>\n",
        MARGIN_T + PLOT_H / 2.0,
        MARGIN_T + PLOT_H / 2.0,
        xml_escape(h.y_label)
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn write_heatmap(h: &Heatmap, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::fs::write(path, render_heatmap(h))?)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
