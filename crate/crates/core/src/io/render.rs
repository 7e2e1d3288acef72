//! SVG rendering of a snapshot: one hexagon per cell, filled by the
//! quartile of its Delta amount.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::snapshot::Snapshot;

/// Fill colours from low to high Delta.
pub const PALETTE: [&str; 4] = ["#ffffff", "#f39c34", "#c8925a", "#6b3d1f"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderStyle {
    /// Pixels per lattice unit; neighbouring centres are 2 units apart.
    pub scale: f64,
    pub stroke: &'static str,
    pub stroke_width: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            scale: 10.0,
            stroke: "#999999",
            stroke_width: 0.5,
        }
    }
}

/// Bin edges at the lower, middle and upper quartile (nearest rank).
pub fn quartile_edges(values: &[f64]) -> [f64; 3] {
    if values.is_empty() {
        return [0.0; 3];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    [1, 2, 3].map(|k| sorted[(k * n).div_ceil(4).max(1) - 1])
}

/// Bin of `v`: the number of edges lying strictly below it. Equal values
/// share a bin, and a constant sample lands entirely in bin 0.
pub fn bin_of(v: f64, edges: &[f64; 3]) -> usize {
    edges.iter().filter(|&&e| e < v).count()
}

fn hexagon(out: &mut String, cx: f64, cy: f64, radius: f64, fill: &str, style: &RenderStyle) {
    out.push_str("<polygon points=\"");
    for k in 0..6 {
        let angle = std::f64::consts::PI / 6.0 + k as f64 * std::f64::consts::PI / 3.0;
        let (x, y) = (cx + radius * angle.cos(), cy + radius * angle.sin());
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{x:.3},{y:.3}").unwrap();
    }
    writeln!(
        out,
        "\" fill=\"{fill}\" stroke=\"{}\" stroke-width=\"{}\"/>",
        style.stroke, style.stroke_width
    )
    .unwrap();
}

pub fn render_svg(snapshot: &Snapshot<f64>, style: &RenderStyle) -> String {
    let s = style.scale;
    let outer = 2.0 / 3f64.sqrt();
    let mut out = String::new();
    if snapshot.cells.is_empty() {
        out.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"0\" height=\"0\" viewBox=\"0 0 0 0\">\n</svg>\n");
        return out;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in &snapshot.cells {
        let [x, y] = c.voxel_center_xy;
        x0 = x0.min(x - outer);
        x1 = x1.max(x + outer);
        y0 = y0.min(y - outer);
        y1 = y1.max(y + outer);
    }
    let (w, h) = ((x1 - x0) * s, (y1 - y0) * s);
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.3}\" height=\"{h:.3}\" viewBox=\"0 0 {w:.3} {h:.3}\">"
    )
    .unwrap();
    writeln!(out, "<title>t = {}</title>", snapshot.t).unwrap();
    let delta: Vec<f64> = snapshot.cells.iter().map(|c| c.totals.d).collect();
    let edges = quartile_edges(&delta);
    // cells sharing a voxel are drawn side by side at half size
    let mut by_voxel: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (k, c) in snapshot.cells.iter().enumerate() {
        let [x, y] = c.voxel_center_xy;
        by_voxel.entry((y.to_bits(), x.to_bits())).or_default().push(k);
    }
    for members in by_voxel.values() {
        let m = members.len() as f64;
        for (slot, &k) in members.iter().enumerate() {
            let [x, y] = snapshot.cells[k].voxel_center_xy;
            let offset = (slot as f64 - (m - 1.0) / 2.0) * (2.0 / m);
            let fill = PALETTE[bin_of(delta[k], &edges)];
            hexagon(&mut out, (x + offset - x0) * s, (y1 - y) * s, outer * s / m, fill, style);
        }
    }
    out.push_str("</svg>\n");
    out
}
