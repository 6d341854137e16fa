//! Uniform grid over point coordinates for neighbour queries.
//!
//! Bucketing uses `f64` coordinates; exact callers re-check candidates with
//! exact arithmetic (see [`nearest_dist2`]).

use std::collections::HashMap;

use crate::geom::{Point, Scalar};

pub struct GridIndex {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    coords: Vec<Point<f64>>,
}

impl GridIndex {
    pub fn new<S: Scalar>(points: &[Point<S>], cell: f64) -> Self {
        let coords: Vec<Point<f64>> = points.iter().map(|p| p.to_f64()).collect();
        let cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in coords.iter().enumerate() {
            cells.entry(key(*p, cell)).or_default().push(i);
        }
        GridIndex { cell, cells, coords }
    }

    /// Picks a cell size from the bounding box and point count.
    pub fn auto<S: Scalar>(points: &[Point<S>]) -> Self {
        if points.is_empty() {
            return GridIndex::new(points, 1.0);
        }
        let f: Vec<Point<f64>> = points.iter().map(|p| p.to_f64()).collect();
        let (lo, hi) = crate::geom::poly::bounds(&f);
        let w = hi.x - lo.x;
        let h = hi.y - lo.y;
        let n = points.len() as f64;
        let cell = if w.min(h) < 1e-9 * w.max(h) {
            w.max(h) / n * 2.0
        } else {
            (w * h / n).sqrt() * 1.5
        };
        let cell = if cell > 0.0 { cell } else { 1.0 };
        GridIndex::new(points, cell.max(1e-9))
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Indices of points with float distance at most `radius` from `p`.
    pub fn within(&self, p: Point<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_within(p, radius, |i| out.push(i));
        out.sort_unstable();
        out
    }

    pub fn for_within(&self, p: Point<f64>, radius: f64, mut f: impl FnMut(usize)) {
        let r2 = radius * radius;
        let (x0, y0) = key(Point::new(p.x - radius, p.y - radius), self.cell);
        let (x1, y1) = key(Point::new(p.x + radius, p.y + radius), self.cell);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                if let Some(v) = self.cells.get(&(cx, cy)) {
                    for &i in v {
                        if self.coords[i].dist2(p) <= r2 {
                            f(i);
                        }
                    }
                }
            }
        }
    }

    /// Float nearest neighbour: `(index, distance)`.
    pub fn nearest(&self, p: Point<f64>) -> Option<(usize, f64)> {
        if self.coords.is_empty() {
            return None;
        }
        let (kx, ky) = key(p, self.cell);
        let mut best: Option<(usize, f64)> = None;
        let mut ring = 0i64;
        loop {
            for cx in kx - ring..=kx + ring {
                for cy in ky - ring..=ky + ring {
                    if (cx - kx).abs() != ring && (cy - ky).abs() != ring {
                        continue;
                    }
                    if let Some(v) = self.cells.get(&(cx, cy)) {
                        for &i in v {
                            let d = self.coords[i].dist2(p);
                            if best.is_none_or(|(_, b)| d < b) {
                                best = Some((i, d));
                            }
                        }
                    }
                }
            }
            if let Some((i, d2)) = best {
                // every cell outside the current ring is at least `ring * cell` away
                if (ring as f64 * self.cell).powi(2) >= d2 {
                    return Some((i, d2.sqrt()));
                }
            }
            ring += 1;
            if (ring * ring) as usize > self.coords.len() {
                // far from the data: a linear scan is cheaper than more rings
                return self
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i, c.dist2(p)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, d)| (i, d.sqrt()));
            }
        }
    }
}

fn key(p: Point<f64>, cell: f64) -> (i64, i64) {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
}

/// Exact squared distance from `p` to the nearest point of `pts`.
pub fn nearest_dist2<S: Scalar>(index: &GridIndex, pts: &[Point<S>], p: Point<S>) -> Option<S> {
    let pf = p.to_f64();
    let (_, d) = index.nearest(pf)?;
    if !S::EXACT {
        return Some(pts[index.nearest(pf)?.0].dist2(p));
    }
    let slack = d * 1e-9 + 1e-12;
    let mut best: Option<S> = None;
    index.for_within(pf, d + slack, |i| {
        let e = pts[i].dist2(p);
        if best.is_none_or(|b| e < b) {
            best = Some(e);
        }
    });
    best
}
