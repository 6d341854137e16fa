//! Deterministic SVG output for tilings and point sets.

use std::f64::consts::PI;
use std::fmt::Write;

use crate::geom::poly;
use crate::geom::Point;
use crate::pointset::PointSetWindow;
use crate::subst::{SubstitutionRule, Tile};

pub enum Scene<'a> {
    Tiling {
        rule: &'a SubstitutionRule<f64>,
        tiles: &'a [Tile<f64>],
    },
    Points(&'a PointSetWindow<f64>),
}

#[derive(Clone, Debug)]
pub struct Style {
    /// Output width in pixels.
    pub width: f64,
    /// Orientation buckets per full turn for tile colors.
    pub buckets: usize,
    pub stroke: String,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            width: 800.0,
            buckets: 12,
            stroke: "#222".into(),
        }
    }
}

const PALETTE: [&str; 12] = [
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c", "#fabebe",
    "#008080", "#e6beff",
];

fn num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

struct Frame {
    lo: Point<f64>,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(lo: Point<f64>, hi: Point<f64>, width: f64) -> Self {
        let w = (hi.x - lo.x).max(1e-9);
        let h = (hi.y - lo.y).max(0.0);
        let scale = width / w;
        Frame {
            lo,
            scale,
            width,
            height: (h * scale).max(1.0),
        }
    }

    // y grows downwards in SVG
    fn map(&self, p: Point<f64>) -> (f64, f64) {
        (
            (p.x - self.lo.x) * self.scale,
            self.height - (p.y - self.lo.y) * self.scale,
        )
    }
}

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        num(w),
        num(h),
        num(w),
        num(h)
    );
}

/// Tiles as polygons colored by prototile and orientation bucket; 2D points
/// as circles of radius r/2; 1D point sets as a number-line strip.
pub fn render_svg(scene: &Scene, style: &Style) -> String {
    let mut out = String::new();
    match scene {
        Scene::Tiling { rule, tiles } => {
            let polys: Vec<(usize, Vec<Point<f64>>)> = tiles
                .iter()
                .map(|t| {
                    let turn = (t.g.rotation.angle() + PI) / (2.0 * PI);
                    let bucket = ((turn * style.buckets as f64) as usize).min(style.buckets.saturating_sub(1));
                    let color = (t.proto * 5 + bucket + if t.g.rotation.reflect { 6 } else { 0 }) % PALETTE.len();
                    (color, rule.tile_vertices(t))
                })
                .collect();
            if polys.is_empty() {
                header(&mut out, style.width, style.width);
                out.push_str("</svg>\n");
                return out;
            }
            let all: Vec<Point<f64>> = polys.iter().flat_map(|p| p.1.iter().copied()).collect();
            let (lo, hi) = poly::bounds(&all);
            let f = Frame::new(lo, hi, style.width);
            header(&mut out, f.width, f.height);
            let _ = writeln!(out, "<g stroke=\"{}\" stroke-width=\"0.5\">", style.stroke);
            for (color, vs) in &polys {
                let pts: Vec<String> = vs
                    .iter()
                    .map(|&v| {
                        let (x, y) = f.map(v);
                        format!("{},{}", num(x), num(y))
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "<polygon points=\"{}\" fill=\"{}\"/>",
                    pts.join(" "),
                    PALETTE[*color]
                );
            }
            out.push_str("</g>\n</svg>\n");
        }
        Scene::Points(p) => {
            let w = p.window;
            let (lo, hi) = (w.lo, w.hi());
            if p.dim == 1 {
                let f = Frame::new(Point::new(lo.x, 0.0), Point::new(hi.x, 0.0), style.width);
                let h = 40.0;
                header(&mut out, f.width, h);
                let _ = writeln!(
                    out,
                    "<line x1=\"0\" y1=\"20\" x2=\"{}\" y2=\"20\" stroke=\"{}\"/>",
                    num(f.width),
                    style.stroke
                );
                let r = (p.radius * 0.5 * f.scale).max(0.5);
                for q in &p.points {
                    let (x, _) = f.map(*q);
                    let _ = writeln!(out, "<circle cx=\"{}\" cy=\"20\" r=\"{}\"/>", num(x), num(r));
                }
            } else {
                let f = Frame::new(lo, hi, style.width);
                header(&mut out, f.width, f.height);
                let r = (p.radius * 0.5 * f.scale).max(0.5);
                for q in &p.points {
                    let (x, y) = f.map(*q);
                    let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", num(x), num(y), num(r));
                }
            }
            out.push_str("</svg>\n");
        }
    }
    out
}
