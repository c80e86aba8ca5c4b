//! Layered SVG plots with byte-stable output.
//!
//! Coordinates are printed with a fixed number of decimals, so identical
//! inputs always give identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use oecs_core::field::{Rect, ScanGrid};
use oecs_core::math::Vec2;

use crate::error::{OecsError, Result};

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkerShape {
    Circle,
    Square,
    Triangle,
    Cross,
}

/// Scalar field drawn as one coloured cell per lattice node, on a diverging
/// scale symmetric about zero. `None` cells are left blank.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatLayer {
    pub name: String,
    pub grid: ScanGrid,
    /// x fastest.
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolylineStyle {
    pub color: String,
    pub width: f64,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolylineLayer {
    pub name: String,
    pub lines: Vec<(Vec<Vec2>, PolylineStyle)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkerLayer {
    pub name: String,
    pub points: Vec<Vec2>,
    pub shape: MarkerShape,
    pub color: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Heat(HeatLayer),
    Polylines(PolylineLayer),
    Markers(MarkerLayer),
}

/// Maps a value in `[-1, 1]` to blue (negative), white, red (positive).
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let fade = |x: f64| (255.0 * (1.0 - x)).round() as u8;
    let (r, g, b) = if v >= 0.0 { (255, fade(v), fade(v)) } else { (fade(-v), fade(-v), 255) };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Colour for `μ` in `[-range, range]`, running from purple through teal to yellow.
pub fn mu_color(mu: f64, range: f64) -> String {
    let s = if range > 0.0 { ((mu / range + 1.0) / 2.0).clamp(0.0, 1.0) } else { 0.5 };
    let stops = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let (a, b, f) = if s < 0.5 { (stops[0], stops[1], 2.0 * s) } else { (stops[1], stops[2], 2.0 * s - 1.0) };
    let lerp = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

struct View {
    bounds: Rect,
    scale: f64,
    height: f64,
}

impl View {
    fn new(bounds: Rect) -> Self {
        let w = bounds.x_max - bounds.x_min;
        let h = bounds.y_max - bounds.y_min;
        let scale = (WIDTH - 2.0 * MARGIN) / w;
        View { bounds, scale, height: h * scale + 2.0 * MARGIN }
    }

    fn px(&self, p: Vec2) -> (f64, f64) {
        (MARGIN + (p.x - self.bounds.x_min) * self.scale, self.height - MARGIN - (p.y - self.bounds.y_min) * self.scale)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

fn axes(out: &mut String, v: &View) {
    let b = v.bounds;
    let (x0, y0) = v.px(Vec2::new(b.x_min, b.y_min));
    let (x1, y1) = v.px(Vec2::new(b.x_max, b.y_max));
    let _ = writeln!(out, r#"<g id="axes" stroke="black" fill="none" stroke-width="1">"#);
    let _ = writeln!(out, r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}"/>"#, x1 - x0, y0 - y1);
    for x in ticks(b.x_min, b.x_max) {
        let (px, _) = v.px(Vec2::new(x, b.y_min));
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}"/>"#, y0 + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle" stroke="none" fill="black">{x:.3}</text>"#,
            y0 + 18.0
        );
    }
    for y in ticks(b.y_min, b.y_max) {
        let (_, py) = v.px(Vec2::new(b.x_min, y));
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}"/>"#, x0 - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end" stroke="none" fill="black">{y:.3}</text>"#,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(out, "</g>");
}

fn heat(out: &mut String, v: &View, layer: &HeatLayer) {
    let g = layer.grid;
    let peak = layer.values.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let (w, h) = (g.x.step * v.scale, g.y.step * v.scale);
    let _ = writeln!(out, r#"<g id="{}" stroke="none">"#, escape(&layer.name));
    for j in 0..g.y.count {
        for i in 0..g.x.count {
            let Some(val) = layer.values.get(g.index(i, j)).copied().flatten() else { continue };
            let (cx, cy) = v.px(g.node(i, j));
            let c = diverging(if peak > 0.0 { val / peak } else { 0.0 });
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{h:.2}" fill="{c}"/>"#,
                cx - w / 2.0,
                cy - h / 2.0
            );
        }
    }
    let _ = writeln!(out, "</g>");
}

fn polylines(out: &mut String, v: &View, layer: &PolylineLayer) {
    let _ = writeln!(out, r#"<g id="{}" fill="none">"#, escape(&layer.name));
    for (line, style) in &layer.lines {
        if line.len() < 2 {
            continue;
        }
        let tag = if style.closed { "polygon" } else { "polyline" };
        let mut pts = String::new();
        for (k, p) in line.iter().enumerate() {
            let (x, y) = v.px(*p);
            let sep = if k == 0 { "" } else { " " };
            let _ = write!(pts, "{sep}{x:.2},{y:.2}");
        }
        let _ = writeln!(
            out,
            r#"<{tag} points="{pts}" stroke="{}" stroke-width="{:.2}"/>"#,
            escape(&style.color),
            style.width
        );
    }
    let _ = writeln!(out, "</g>");
}

fn markers(out: &mut String, v: &View, layer: &MarkerLayer) {
    let c = escape(&layer.color);
    let _ = writeln!(out, r#"<g id="{}" fill="{c}" stroke="{c}">"#, escape(&layer.name));
    let r = 4.0;
    for p in &layer.points {
        let (x, y) = v.px(*p);
        let _ = match layer.shape {
            MarkerShape::Circle => writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}"/>"#),
            MarkerShape::Square => {
                writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                    x - r,
                    y - r,
                    2.0 * r,
                    2.0 * r
                )
            }
            MarkerShape::Triangle => writeln!(
                out,
                r#"<polygon points="{x:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
                y - r,
                x - r,
                y + r,
                x + r,
                y + r
            ),
            MarkerShape::Cross => writeln!(
                out,
                r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke-width="1.5"/>"#,
                x - r,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r,
                x + r,
                y - r
            ),
        };
    }
    let _ = writeln!(out, "</g>");
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the layers, in order, over the axes of `bounds`.
pub fn render_svg(bounds: Rect, layers: &[Layer]) -> Result<String> {
    if !(bounds.is_bounded() && bounds.x_min < bounds.x_max && bounds.y_min < bounds.y_max) {
        return Err(OecsError::Data("plot bounds must be a finite, non-empty rectangle".into()));
    }
    let v = View::new(bounds);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{:.0}" viewBox="0 0 {WIDTH:.0} {0:.0}">"#,
        v.height.ceil()
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0) = v.px(Vec2::new(bounds.x_min, bounds.y_min));
    let (x1, y1) = v.px(Vec2::new(bounds.x_max, bounds.y_max));
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot"><rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}"/></clipPath></defs>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
    for layer in layers {
        match layer {
            Layer::Heat(h) => heat(&mut out, &v, h),
            Layer::Polylines(p) => polylines(&mut out, &v, p),
            Layer::Markers(m) => markers(&mut out, &v, m),
        }
    }
    let _ = writeln!(out, "</g>");
    axes(&mut out, &v);
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

pub fn export_plot(bounds: Rect, layers: &[Layer], path: &Path) -> Result<()> {
    let svg = render_svg(bounds, layers)?;
    fs::write(path, svg).map_err(|e| OecsError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plot_has_only_axes() {
        let s = render_svg(Rect::new(0.0, 2.0, -1.0, 1.0), &[]).unwrap();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains(r#"<g id="axes""#));
        assert!(!s.contains("<polyline") && !s.contains("<circle"));
        assert_eq!(s.matches("<text").count(), 10);
    }

    #[test]
    fn output_is_stable() {
        let layers = vec![Layer::Markers(MarkerLayer {
            name: "pts".into(),
            points: vec![Vec2::new(0.5, 0.5)],
            shape: MarkerShape::Circle,
            color: "red".into(),
        })];
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        assert_eq!(render_svg(r, &layers).unwrap(), render_svg(r, &layers).unwrap());
        assert!(render_svg(r, &layers).unwrap().contains(r#"<circle cx="400.00" cy="400.00""#));
    }

    #[test]
    fn colour_scales() {
        assert_eq!(diverging(0.0), "#ffffff");
        assert_eq!(diverging(1.0), "#ff0000");
        assert_eq!(diverging(-1.0), "#0000ff");
        assert_eq!(mu_color(-1.0, 1.0), "#440154");
        assert_eq!(mu_color(1.0, 1.0), "#fde725");
    }

    #[test]
    fn degenerate_bounds_are_rejected() {
        assert!(render_svg(Rect::new(0.0, 0.0, 0.0, 1.0), &[]).is_err());
    }
}
