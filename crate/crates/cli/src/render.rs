//! SVG frames of tessellations.

use std::fmt::Write;

use brt_core::Tessellation;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    /// Fill per colour label; colours beyond the list cycle through it.
    pub fills: Vec<String>,
    pub stroke_width: f64,
    /// Width of the canvas in pixels; the height follows the aspect ratio.
    pub canvas: f64,
    pub time_stamp: Option<f64>,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            fills: ["#e4572e", "#4c72b0", "#f3a712", "#29335c", "#a8c686", "#669bbc"].iter().map(|s| s.to_string()).collect(),
            stroke_width: 1.0,
            canvas: 600.0,
            time_stamp: None,
        }
    }
}

impl RenderStyle {
    fn fill(&self, colour: usize) -> &str {
        &self.fills[colour % self.fills.len()]
    }
}

fn bounds(t: &Tessellation) -> ([f64; 2], [f64; 2]) {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in t.window.vertices() {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    (lo, hi)
}

/// A planar tessellation as one filled polygon per cell.
pub fn render_planar(t: &Tessellation, style: &RenderStyle) -> String {
    let (lo, hi) = bounds(t);
    let scale = style.canvas / (hi[0] - lo[0]);
    let height = (hi[1] - lo[1]) * scale;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#, style.canvas, height, style.canvas, height);
    for c in &t.cells {
        let pts: Vec<String> = c
            .polytope
            .vertices()
            .iter()
            .map(|v| format!("{:.3},{:.3}", (v[0] - lo[0]) * scale, (hi[1] - v[1]) * scale))
            .collect();
        let _ = writeln!(
            svg,
            r#"  <polygon points="{}" fill="{}" stroke="black" stroke-width="{}"/>"#,
            pts.join(" "),
            style.fill(c.colour.0),
            style.stroke_width
        );
    }
    stamp(&mut svg, style, height);
    svg.push_str("</svg>\n");
    svg
}

/// A one-dimensional tessellation as a row of bars.
pub fn render_line(t: &Tessellation, style: &RenderStyle) -> String {
    let (lo, hi) = bounds(t);
    let scale = style.canvas / (hi[0] - lo[0]);
    let height = 0.1 * style.canvas;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#, style.canvas, height, style.canvas, height);
    for c in &t.cells {
        let (a, b) = c.polytope.as_interval().expect("interval cell");
        let _ = writeln!(
            svg,
            r#"  <rect x="{:.3}" y="0" width="{:.3}" height="{:.3}" fill="{}" stroke="black" stroke-width="{}"/>"#,
            (a - lo[0]) * scale,
            (b - a) * scale,
            height,
            style.fill(c.colour.0),
            style.stroke_width
        );
    }
    stamp(&mut svg, style, height);
    svg.push_str("</svg>\n");
    svg
}

fn stamp(svg: &mut String, style: &RenderStyle, height: f64) {
    if let Some(s) = style.time_stamp {
        let _ = writeln!(svg, r#"  <text x="6" y="{:.3}" font-family="monospace" font-size="14">s = {s:.3}</text>"#, height - 6.0);
    }
}
