//! Pattern deviation `d_V`, the local rubber and local matching metrics, the
//! wiggle deviation, and ε-similarity classes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Isometry, Point, Region, Rotation, Scalar};
use crate::index::{nearest_dist2, GridIndex};
use crate::pointset::PointSetWindow;

/// A point list with a grid index.
pub struct IndexedSet<S> {
    pub points: Vec<Point<S>>,
    pub index: GridIndex,
}

impl<S: Scalar> IndexedSet<S> {
    pub fn new(points: Vec<Point<S>>) -> Self {
        let index = GridIndex::auto(&points);
        IndexedSet { points, index }
    }

    pub fn from_window(p: &PointSetWindow<S>) -> Self {
        IndexedSet::new(p.points.clone())
    }

    /// Exact squared distance from `x` to the set.
    pub fn dist2(&self, x: Point<S>) -> Option<S> {
        nearest_dist2(&self.index, &self.points, x)
    }

    /// Points `x` with `g(x)` in `v`.
    pub fn preimage_in(&self, g: &Isometry<S>, v: &Region<S>) -> Vec<Point<S>> {
        let c = g.inverse().apply(v.center()).to_f64();
        let r = v.outer_radius() * (1.0 + 1e-12) + 1e-12;
        let mut out = Vec::new();
        self.index.for_within(c, r, |i| {
            let x = self.points[i];
            if v.contains(g.apply(x)) {
                out.push(x);
            }
        });
        out
    }
}

/// Value of `d_V`, kept squared so exact data compare exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Deviation<S> {
    Finite {
        squared: S,
    },
    /// One content is nonempty and the other set is empty.
    Infinite,
}

impl<S: Scalar> Deviation<S> {
    pub fn value(&self) -> f64 {
        match self {
            Deviation::Finite { squared } => squared.to_f64().sqrt(),
            Deviation::Infinite => f64::INFINITY,
        }
    }

    /// `d < eps`.
    pub fn lt(&self, eps: S) -> bool {
        match self {
            Deviation::Finite { squared } => *squared < eps * eps,
            Deviation::Infinite => false,
        }
    }

    /// `d <= eps`.
    pub fn le(&self, eps: S) -> bool {
        match self {
            Deviation::Finite { squared } => *squared <= eps * eps,
            Deviation::Infinite => false,
        }
    }

    fn max(self, other: Self) -> Self {
        match (self, other) {
            (Deviation::Finite { squared: a }, Deviation::Finite { squared: b }) => {
                Deviation::Finite { squared: a.max_of(b) }
            }
            _ => Deviation::Infinite,
        }
    }
}

/// `d_V(gA, hB)`: the largest distance from a point of either content to the
/// full other set.
pub fn deviation_between<S: Scalar>(
    a: &IndexedSet<S>,
    ga: &Isometry<S>,
    b: &IndexedSet<S>,
    gb: &Isometry<S>,
    v: &Region<S>,
) -> Deviation<S> {
    one_side(a, ga, b, gb, v).max(one_side(b, gb, a, ga, v))
}

fn one_side<S: Scalar>(
    a: &IndexedSet<S>,
    ga: &Isometry<S>,
    b: &IndexedSet<S>,
    gb: &Isometry<S>,
    v: &Region<S>,
) -> Deviation<S> {
    let content = a.preimage_in(ga, v);
    if content.is_empty() {
        return Deviation::Finite { squared: S::zero() };
    }
    if b.points.is_empty() {
        return Deviation::Infinite;
    }
    // B is moved by gb, so pull the content back by gb⁻¹
    let back = gb.inverse().compose(ga);
    let mut worst = S::zero();
    for x in content {
        let d = b.dist2(back.apply(x)).expect("nonempty set");
        worst = worst.max_of(d);
    }
    Deviation::Finite { squared: worst }
}

/// `d_V(P, Q)` for plain point lists.
pub fn pattern_deviation<S: Scalar>(p: &[Point<S>], q: &[Point<S>], v: &Region<S>) -> Deviation<S> {
    let a = IndexedSet::new(p.to_vec());
    let b = IndexedSet::new(q.to_vec());
    let id = Isometry::identity();
    deviation_between(&a, &id, &b, &id, v)
}

/// Local rubber distance with a flag for window-limited answers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RubberDistance {
    pub value: f64,
    /// The windows do not contain `B_{1/d + d}`: points outside could raise
    /// the value, so it is only a lower bound.
    pub lower_bound_only: bool,
}

/// Largest `s` with the open ball `B_s(0)` inside the window.
fn window_reach<S: Scalar>(p: &PointSetWindow<S>) -> f64 {
    p.window.to_f64().inner_radius_at(Point::origin())
}

/// `d_LR(P, Q) = min(1/√2, max_x min(δ_x, 1/|x|))` over `x ∈ P ∪ Q`, where
/// `δ_x` is the distance from `x` to the other set. Exact on rational data
/// (squared comparisons).
pub fn local_rubber_distance<S: Scalar>(p: &PointSetWindow<S>, q: &PointSetWindow<S>) -> RubberDistance {
    let a = IndexedSet::from_window(p);
    let b = IndexedSet::from_window(q);
    local_rubber_indexed(
        &a,
        Point::origin(),
        &b,
        Point::origin(),
        window_reach(p).min(window_reach(q)),
    )
}

/// `d_LR(A + ta, B + tb)` on indexed sets; `reach` is the radius about the
/// origin both windows are known to cover.
pub fn local_rubber_indexed<S: Scalar>(
    a: &IndexedSet<S>,
    ta: Point<S>,
    b: &IndexedSet<S>,
    tb: Point<S>,
    reach: f64,
) -> RubberDistance {
    let cap2 = S::from_frac(1, 2);
    let mut best = S::zero();
    for (x_set, tx, other, to) in [(a, ta, b, tb), (b, tb, a, ta)] {
        // points beyond the reach add at most 1/reach, which the flag covers;
        // shells of doubling radius stop once 1/|x|² cannot beat `best`
        let (mut inner, mut outer) = (-1.0f64, 4.0f64.min(reach));
        loop {
            let mut shell: Vec<(S, Point<S>)> = Vec::new();
            x_set.index.for_within((-tx).to_f64(), outer, |i| {
                let x = x_set.points[i] + tx;
                if x.norm_f64() > inner {
                    shell.push((x.norm2(), x));
                }
            });
            shell.sort_by(|u, v| u.0.partial_cmp(&v.0).unwrap_or(std::cmp::Ordering::Equal));
            let mut done = false;
            for (n2, x) in shell {
                // min(δ², 1/|x|²) can only beat `best` when 1/|x|² > best
                if n2 > S::zero() && S::one() / n2 <= best {
                    done = true;
                    break;
                }
                let d2 = other.dist2(x - to).unwrap_or(cap2);
                let m = if n2 == S::zero() { d2 } else { d2.min_of(S::one() / n2) };
                best = best.max_of(m);
            }
            if done || outer >= reach {
                break;
            }
            inner = outer;
            outer = (outer * 2.0).min(reach);
        }
    }
    let value = best.min_of(cap2).to_f64().sqrt();
    let need = if value > 0.0 {
        1.0 / value + value
    } else {
        f64::INFINITY
    };
    RubberDistance {
        value,
        lower_bound_only: reach < need,
    }
}

/// `d_LR` recomputed by bisection on `ε` over the two inclusion tests; used
/// as an independent check of the closed form.
pub fn local_rubber_bisection(p: &[Point<f64>], q: &[Point<f64>], tol: f64) -> f64 {
    let holds = |eps: f64| {
        let inc = |a: &[Point<f64>], b: &[Point<f64>]| {
            a.iter()
                .filter(|x| x.norm() < 1.0 / eps)
                .all(|x| b.iter().any(|y| y.dist(*x) < eps))
        };
        inc(p, q) && inc(q, p)
    };
    if !holds(FRAC_1_SQRT_2) {
        return FRAC_1_SQRT_2;
    }
    let (mut lo, mut hi) = (0.0f64, FRAC_1_SQRT_2);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Bracket on the local matching distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingBracket {
    pub lower: f64,
    pub upper: f64,
    /// Exact equality tests were used.
    pub certified: bool,
}

fn contains_point<S: Scalar>(set: &IndexedSet<S>, x: Point<S>) -> bool {
    match set.dist2(x) {
        Some(d) if S::EXACT => d == S::zero(),
        Some(d) => d.to_f64() < 1e-18,
        None => false,
    }
}

/// Norm of the first disagreement of `P + x` and `Q` inside the ball of
/// radius `reach`; `None` when they agree there. Scans doubling shells so
/// that early disagreements end the search.
fn first_disagreement<S: Scalar>(a: &IndexedSet<S>, b: &IndexedSet<S>, x: Point<S>, reach: f64) -> Option<f64> {
    let xf = x.to_f64();
    let mut inner = 0.0;
    let mut outer = 1.0f64.min(reach);
    loop {
        let mut first: Option<f64> = None;
        let mut note = |n: f64| {
            if n >= inner && n < outer && first.is_none_or(|f| n < f) {
                first = Some(n);
            }
        };
        a.index.for_within(-xf, outer + 1e-9, |i| {
            let y = a.points[i] + x;
            let n = y.norm_f64();
            if n >= inner && n < outer && !contains_point(b, y) {
                note(n);
            }
        });
        b.index.for_within(Point::origin(), outer + 1e-9, |i| {
            let y = b.points[i];
            let n = y.norm_f64();
            if n >= inner && n < outer && !contains_point(a, y - x) {
                note(n);
            }
        });
        if first.is_some() || outer >= reach {
            return first;
        }
        inner = outer;
        outer = (2.0 * outer).min(reach);
    }
}

/// `(lower, upper)` on `inf_x max(|x|, 1/ρ(x))` for the condition `(P + x) ∩ B = Q ∩ B`.
fn matching_threshold<S: Scalar>(
    a: &IndexedSet<S>,
    b: &IndexedSet<S>,
    candidates: &[Point<S>],
    reach: f64,
) -> (f64, f64) {
    let mut lo = FRAC_1_SQRT_2;
    let mut hi = FRAC_1_SQRT_2;
    let mut cands: Vec<(f64, Point<S>)> = candidates.iter().map(|&x| (x.norm_f64(), x)).collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(crate::pointset::lex(&a.1, &b.1)));
    cands.dedup_by(|a, b| a.1 == b.1);
    for (nx, x) in cands {
        // thresholds are at least |x|
        if nx >= hi {
            break;
        }
        match first_disagreement(a, b, x, reach) {
            Some(rho) => {
                let t = nx.max(1.0 / rho);
                lo = lo.min(t);
                hi = hi.min(t);
            }
            None => {
                lo = lo.min(nx);
                hi = hi.min(nx.max(1.0 / reach));
            }
        }
    }
    (lo, hi)
}

fn default_candidates<S: Scalar>(a: &IndexedSet<S>, b: &IndexedSet<S>, reach: f64) -> Vec<Point<S>> {
    let mut out = vec![Point::origin()];
    for &p in &a.points {
        if p.norm_f64() > reach + 1.0 {
            continue;
        }
        b.index
            .for_within(p.to_f64(), FRAC_1_SQRT_2, |j| out.push(b.points[j] - p));
    }
    out
}

/// Bracket on `d_LM(P, Q)`. Candidate translations default to the short
/// point differences `Q - P` (and `P - Q` for the second condition) plus 0.
pub fn local_matching_distance<S: Scalar>(
    p: &PointSetWindow<S>,
    q: &PointSetWindow<S>,
    candidates: Option<&[Point<S>]>,
) -> MatchingBracket {
    let a = IndexedSet::from_window(p);
    let b = IndexedSet::from_window(q);
    let reach = window_reach(p).min(window_reach(q));
    let c1 = candidates
        .map(|c| c.to_vec())
        .unwrap_or_else(|| default_candidates(&a, &b, reach));
    let c2 = candidates
        .map(|c| c.to_vec())
        .unwrap_or_else(|| default_candidates(&b, &a, reach));
    // the windows themselves are translated by at most 1/√2
    let reach = (reach - FRAC_1_SQRT_2).max(1e-9);
    let (l1, u1) = matching_threshold(&a, &b, &c1, reach);
    let (l2, u2) = matching_threshold(&b, &a, &c2, reach);
    MatchingBracket {
        lower: l1.max(l2),
        upper: u1.max(u2),
        certified: S::EXACT,
    }
}

/// Upper and lower bounds on the wiggle deviation `d̃_B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WiggleBound {
    pub upper: f64,
    pub lower: f64,
    /// Rotation angles `(θ, θ')` applied to `P` and `Q` at the upper bound.
    pub angles: (f64, f64),
}

/// Grid search for `d̃_B(P, Q)`: rotations about the center of `B` with angles
/// on a grid of the given step. For balls only the relative angle matters and
/// the symmetric split is optimal, so the search runs over one angle.
pub fn wiggle_deviation(
    p: &PointSetWindow<f64>,
    q: &PointSetWindow<f64>,
    b: &Region<f64>,
    step: f64,
) -> Result<WiggleBound> {
    if p.dim != 2 || q.dim != 2 {
        return Err(Error::Dimension("wiggle deviation needs d = 2".into()));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput("angle step must be positive".into()));
    }
    let a = IndexedSet::from_window(p);
    let bb = IndexedSet::from_window(q);
    let c = b.center();
    let rot = |t: f64| Isometry::rotate_about(c, Rotation::from_angle(t));
    let eval = |t: f64, t2: f64| {
        deviation_between(&a, &rot(t), &bb, &rot(t2), b)
            .value()
            .max(t.abs())
            .max(t2.abs())
    };
    let mut best = eval(0.0, 0.0);
    let mut angles = (0.0, 0.0);
    let limit = best.min(std::f64::consts::PI);
    let n = (2.0 * limit / step).ceil() as i64;
    match b {
        Region::Ball { .. } => {
            let vals: Vec<(f64, f64)> = (-n..=n)
                .into_par_iter()
                .map(|k| {
                    let psi = k as f64 * step;
                    (eval(-psi / 2.0, psi / 2.0), psi)
                })
                .collect();
            for (v, psi) in vals {
                if v < best {
                    best = v;
                    angles = (-psi / 2.0, psi / 2.0);
                }
            }
        }
        Region::Box(_) => {
            let m = (limit / step).ceil() as i64;
            let vals: Vec<(f64, f64, f64)> = (-m..=m)
                .into_par_iter()
                .flat_map_iter(|i| (-m..=m).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let (t, t2) = (i as f64 * step, j as f64 * step);
                    (eval(t, t2), t, t2)
                })
                .collect();
            for (v, t, t2) in vals {
                if v < best {
                    best = v;
                    angles = (t, t2);
                }
            }
        }
    }
    let lip = b.outer_radius() + 1.0;
    Ok(WiggleBound {
        upper: best,
        lower: (best - lip * step).max(0.0),
        angles,
    })
}

/// A class of patterns sharing the cover signature `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityClass {
    /// Indices of the ε/2-balls of the cover meeting the content.
    pub signature: Vec<u32>,
    /// Indices into the list of centers.
    pub members: Vec<usize>,
    pub representative: usize,
}

/// Deterministic ε/2-ball cover of the template: balls at the centers of a
/// grid whose cells have circumradius ε/2.
pub struct BallCover {
    pub dim: usize,
    pub spacing: f64,
    pub radius: f64,
    pub centers: Vec<Point<f64>>,
}

impl BallCover {
    pub fn new(dim: usize, template: &Region<f64>, eps: f64) -> Self {
        let spacing = if dim == 1 { eps } else { eps / 2f64.sqrt() };
        let bx = template.bounding_box(dim);
        let nx = (bx.side.x / spacing).ceil().max(1.0) as i64;
        let ny = if dim == 1 {
            1
        } else {
            (bx.side.y / spacing).ceil().max(1.0) as i64
        };
        let mut centers = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                let x = bx.lo.x + (i as f64 + 0.5) * spacing;
                let y = if dim == 1 {
                    0.0
                } else {
                    bx.lo.y + (j as f64 + 0.5) * spacing
                };
                centers.push(Point::new(x, y));
            }
        }
        BallCover {
            dim,
            spacing,
            radius: eps / 2.0,
            centers,
        }
    }

    /// Balls meeting a content point (open balls).
    pub fn signature(&self, content: &[Point<f64>]) -> Vec<u32> {
        let mut sig: Vec<u32> = (0..self.centers.len() as u32)
            .filter(|&i| content.iter().any(|p| p.dist(self.centers[i as usize]) < self.radius))
            .collect();
        sig.sort_unstable();
        sig
    }
}

/// Groups the patterns `(P - c) ∩ V` by cover type. For `ε = 0` the classes
/// are exact translation classes, which requires exact data.
pub fn classify_patterns<S: Scalar>(
    p: &PointSetWindow<S>,
    template: &Region<S>,
    eps: S,
    centers: &[Point<S>],
) -> Result<Vec<SimilarityClass>> {
    if eps < S::zero() {
        return Err(Error::InvalidInput("eps must be nonnegative".into()));
    }
    let set = IndexedSet::from_window(p);
    let contents: Vec<Vec<Point<S>>> = centers
        .par_iter()
        .map(|&c| {
            let shift = Isometry::translate(-c);
            let mut v: Vec<Point<S>> = set.preimage_in(&shift, template).into_iter().map(|x| x - c).collect();
            v.sort_by(crate::pointset::lex);
            v
        })
        .collect();
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    if eps == S::zero() {
        if !S::EXACT {
            return Err(Error::ExactRequired("eps = 0 classes need exact arithmetic".into()));
        }
        let mut seen: Vec<Vec<Point<S>>> = Vec::new();
        for (i, c) in contents.iter().enumerate() {
            let id = match seen.iter().position(|s| s == c) {
                Some(k) => k,
                None => {
                    seen.push(c.clone());
                    seen.len() - 1
                }
            };
            groups.entry(vec![id as u32]).or_default().push(i);
        }
    } else {
        let cover = BallCover::new(p.dim, &template.to_f64(), eps.to_f64());
        let sigs: Vec<Vec<u32>> = contents
            .par_iter()
            .map(|c| cover.signature(&c.iter().map(|x| x.to_f64()).collect::<Vec<_>>()))
            .collect();
        for (i, s) in sigs.into_iter().enumerate() {
            groups.entry(s).or_default().push(i);
        }
    }
    let mut classes: Vec<SimilarityClass> = groups
        .into_iter()
        .map(|(signature, members)| SimilarityClass {
            representative: members[0],
            signature,
            members,
        })
        .collect();
    classes.sort_by_key(|c| c.representative);
    Ok(classes)
}
