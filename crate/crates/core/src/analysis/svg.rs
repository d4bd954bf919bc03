//! Minimal SVG renderings of analysis outputs.

use std::fmt::Write as _;

use super::landscape::LandscapeGrid;
use super::shift::ShiftHistogram;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Blue (low) to yellow (high).
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 215.0 * t) as u8;
    let g = (60.0 + 170.0 * t) as u8;
    let b = (160.0 - 130.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heat map of the grid with the unperturbed point marked.
pub fn landscape_svg(grid: &LandscapeGrid) -> String {
    let n = grid.alpha.len();
    let cell = 400.0 / n as f64;
    let (lo, hi) = grid
        .z
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"440\" height=\"440\" viewBox=\"0 0 440 440\">\n",
    );
    for (i, row) in grid.z.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            // α runs left to right, β bottom to top.
            writeln!(
                out,
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{}\"/>",
                20.0 + i as f64 * cell,
                20.0 + (n - 1 - j) as f64 * cell,
                cell,
                cell,
                ramp((v - lo) / span)
            )
            .unwrap();
        }
    }
    let c = 20.0 + (n / 2) as f64 * cell + cell / 2.0;
    writeln!(out, "<circle cx=\"{c:.3}\" cy=\"{c:.3}\" r=\"4\" fill=\"none\" stroke=\"black\"/>").unwrap();
    writeln!(
        out,
        "<text x=\"20\" y=\"14\" font-size=\"11\">score range [{lo:.6}, {hi:.6}]</text>"
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Overlaid outline histograms, IND first.
pub fn histogram_svg(h: &ShiftHistogram) -> String {
    let (w, ht) = (600.0, 300.0);
    let series: Vec<_> = std::iter::once(&h.ind).chain(&h.ood).collect();
    let peak = series
        .iter()
        .map(|s| {
            let total = s.shifts.len().max(1) as f64;
            s.counts.iter().map(|&c| c as f64 / total).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let bins = h.edges.len() - 1;
    let bw = w / bins as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        w + 40.0,
        ht + 40.0,
        w + 40.0,
        ht + 40.0
    );
    for (k, s) in series.iter().enumerate() {
        let total = s.shifts.len().max(1) as f64;
        let mut path = String::new();
        for (b, &c) in s.counts.iter().enumerate() {
            let y = 20.0 + ht * (1.0 - c as f64 / total / peak);
            let x0 = 20.0 + b as f64 * bw;
            let cmd = if b == 0 { 'M' } else { 'L' };
            write!(path, "{cmd}{x0:.2},{y:.2} L{:.2},{y:.2} ", x0 + bw).unwrap();
        }
        let color = PALETTE[k % PALETTE.len()];
        writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"{color}\"/>", path.trim_end()).unwrap();
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            w - 100.0,
            30.0 + 14.0 * k as f64,
            s.set
        )
        .unwrap();
    }
    writeln!(
        out,
        "<text x=\"20\" y=\"{}\" font-size=\"11\">shift in [{:.4}, {:.4}], eps = {}</text>",
        ht + 34.0,
        h.edges[0],
        h.edges[bins],
        h.eps
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}
