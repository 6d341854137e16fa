//! Convex polygon predicates used for tile supports.
//!
//! Supports are unions of convex parts with counter-clockwise vertex order.
//! All predicates are exact for [`Q`](super::Q) and plain floating point for `f64`.

use super::{Isometry, Point, Scalar};

/// Twice the signed area (positive for counter-clockwise order).
pub fn signed_area2<S: Scalar>(poly: &[Point<S>]) -> S {
    let n = poly.len();
    let mut acc = S::zero();
    for i in 0..n {
        acc = acc + poly[i].cross(poly[(i + 1) % n]);
    }
    acc
}

pub fn area<S: Scalar>(poly: &[Point<S>]) -> S {
    signed_area2(poly).abs() / S::from_int(2)
}

/// Orientation of `c` relative to the directed line `a -> b`.
pub fn orient<S: Scalar>(a: Point<S>, b: Point<S>, c: Point<S>) -> S {
    (b - a).cross(c - a)
}

/// Returns the polygon in counter-clockwise order.
pub fn ccw<S: Scalar>(mut poly: Vec<Point<S>>) -> Vec<Point<S>> {
    if signed_area2(&poly) < S::zero() {
        poly.reverse();
    }
    poly
}

pub fn is_convex_ccw<S: Scalar>(poly: &[Point<S>]) -> bool {
    let n = poly.len();
    n >= 3
        && (0..n).all(|i| orient(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) >= S::zero())
        && signed_area2(poly) > S::zero()
}

/// Image of a polygon under an isometry, re-oriented counter-clockwise.
pub fn transform<S: Scalar>(g: &Isometry<S>, poly: &[Point<S>]) -> Vec<Point<S>> {
    let mut out: Vec<_> = poly.iter().map(|&p| g.apply(p)).collect();
    if g.rotation.reflect {
        out.reverse();
    }
    out
}

/// Sutherland–Hodgman clip of `subject` by the convex counter-clockwise `clip`.
pub fn clip_convex<S: Scalar>(subject: &[Point<S>], clip: &[Point<S>]) -> Vec<Point<S>> {
    let mut out = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let oc = orient(a, b, cur);
            let op = orient(a, b, prev);
            let zero = S::zero();
            if oc >= zero {
                if op < zero {
                    out.push(intersect(prev, cur, op, oc));
                }
                out.push(cur);
            } else if op >= zero {
                out.push(intersect(prev, cur, op, oc));
            }
        }
    }
    out
}

fn intersect<S: Scalar>(p: Point<S>, q: Point<S>, op: S, oq: S) -> Point<S> {
    let t = op / (op - oq);
    p + (q - p).scale(t)
}

/// Area of the intersection of two convex counter-clockwise polygons.
pub fn intersection_area<S: Scalar>(a: &[Point<S>], b: &[Point<S>]) -> S {
    let c = clip_convex(a, b);
    if c.len() < 3 {
        S::zero()
    } else {
        area(&c)
    }
}

/// Whether two closed convex polygons meet (touching counts). Separating
/// axis test over edge normals.
pub fn closed_intersect<S: Scalar>(a: &[Point<S>], b: &[Point<S>]) -> bool {
    !separated(a, b) && !separated(b, a)
}

fn separated<S: Scalar>(a: &[Point<S>], b: &[Point<S>]) -> bool {
    let n = a.len();
    (0..n).any(|i| {
        let (p, q) = (a[i], a[(i + 1) % n]);
        b.iter().all(|&v| orient(p, q, v) < S::zero())
    })
}

/// Whether the open interiors of two convex polygons overlap.
pub fn interiors_overlap<S: Scalar>(a: &[Point<S>], b: &[Point<S>]) -> bool {
    intersection_area(a, b) > S::zero()
}

/// Closed containment of a point in a convex counter-clockwise polygon.
pub fn contains<S: Scalar>(poly: &[Point<S>], p: Point<S>) -> bool {
    let n = poly.len();
    (0..n).all(|i| orient(poly[i], poly[(i + 1) % n], p) >= S::zero())
}

/// Strict interior containment.
pub fn contains_strict<S: Scalar>(poly: &[Point<S>], p: Point<S>) -> bool {
    let n = poly.len();
    (0..n).all(|i| orient(poly[i], poly[(i + 1) % n], p) > S::zero())
}

pub fn segment_distance(p: Point<f64>, a: Point<f64>, b: Point<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    p.dist(a + ab.scale(t))
}

/// Distance from `p` to the polygon's boundary.
pub fn boundary_distance(poly: &[Point<f64>], p: Point<f64>) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn centroid<S: Scalar>(poly: &[Point<S>]) -> Point<S> {
    let n = poly.len();
    let six = S::from_int(6);
    let a2 = signed_area2(poly);
    let mut c = Point::origin();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        c = c + (p + q).scale(p.cross(q));
    }
    c.scale(S::one() / (a2 * six / S::from_int(2)))
}

/// Smallest and largest coordinates of a point list.
pub fn bounds<S: Scalar>(pts: &[Point<S>]) -> (Point<S>, Point<S>) {
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in pts {
        lo = Point::new(lo.x.min_of(p.x), lo.y.min_of(p.y));
        hi = Point::new(hi.x.max_of(p.x), hi.y.max_of(p.y));
    }
    (lo, hi)
}
