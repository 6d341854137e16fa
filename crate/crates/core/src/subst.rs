//! Inflate-and-dissect substitution rules and their supertile hierarchy.
//!
//! Prototiles live in a local frame whose origin is an interior point. The
//! expansion `r0 λ` is multiplication by a complex number `z` (`2 + i` for the
//! pinwheel, `2` for the chair), so exact rules stay inside the Gaussian
//! rationals. Substituting the tile `gS` yields `φ g φ⁻¹ σ(S)` with `φ(m) = z m`.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::poly;
use crate::geom::{unit_is_root_of_unity, Isometry, Point, Rotation, Scalar, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prototile<S> {
    pub index: usize,
    /// Boundary, counter-clockwise.
    pub vertices: Vec<Point<S>>,
    /// Convex counter-clockwise pieces with disjoint interiors whose union is the support.
    pub parts: Vec<Vec<Point<S>>>,
    /// Symmetry group of the support; contains the identity.
    pub symmetries: Vec<Isometry<S>>,
    /// Interior point fixed by every symmetry.
    pub fixed_point: Point<S>,
}

/// The tile `g S_proto`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile<S> {
    pub proto: usize,
    pub g: Isometry<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionRule<S> {
    pub name: String,
    pub prototiles: Vec<Prototile<S>>,
    /// `patches[j]` dissects `z S_j`.
    pub patches: Vec<Vec<Tile<S>>>,
    /// `r0 λ` as a complex number.
    pub expansion: Point<S>,
}

/// Identity of a tile up to the symmetries of its prototile: the prototile
/// index and the sorted vertex list of its support.
pub type TileKey = (usize, Vec<[i128; 4]>);

fn coord_key<S: Scalar>(v: S) -> [i128; 2] {
    match v.to_q() {
        Some(q) => [*q.numer(), *q.denom()],
        None => [(v.to_f64() * 1e7).round() as i128, 0],
    }
}

impl<S: Scalar> SubstitutionRule<S> {
    pub fn lambda(&self) -> f64 {
        self.expansion.norm_f64()
    }

    pub fn r0(&self) -> Rotation<f64> {
        Rotation::from_angle(self.expansion.to_f64().angle())
    }

    /// `φ g φ⁻¹` for `φ(m) = z m`.
    pub fn inflate(&self, g: &Isometry<S>) -> Isometry<S> {
        let z = self.expansion;
        let u = g.rotation.unit();
        let u = if g.rotation.reflect {
            u.cmul(z).cdiv(z.conj()).expect("nonzero expansion")
        } else {
            u
        };
        Isometry {
            translation: z.cmul(g.translation),
            rotation: Rotation {
                cos: u.x,
                sin: u.y,
                reflect: g.rotation.reflect,
            },
        }
    }

    /// `m -> z^level g(m)`, the map carrying the prototile onto the support
    /// of the supertile `σ^level(g S)`.
    pub fn support_map(&self, g: &Isometry<S>, level: u32) -> impl Fn(Point<S>) -> Point<S> + '_ {
        let g = *g;
        let mut zk = Point::new(S::one(), S::zero());
        for _ in 0..level {
            zk = zk.cmul(self.expansion);
        }
        move |m| zk.cmul(g.apply(m))
    }

    pub fn children(&self, t: &Tile<S>) -> Vec<Tile<S>> {
        let h = self.inflate(&t.g);
        self.patches[t.proto]
            .iter()
            .map(|c| Tile {
                proto: c.proto,
                g: h.compose(&c.g),
            })
            .collect()
    }

    /// Convex pieces of `σ^level(tile)`'s support (level 0 is the tile itself).
    pub fn support_parts(&self, t: &Tile<S>, level: u32) -> Vec<Vec<Point<S>>> {
        let f = self.support_map(&t.g, level);
        self.prototiles[t.proto]
            .parts
            .iter()
            .map(|part| {
                let mut v: Vec<_> = part.iter().map(|&m| f(m)).collect();
                if t.g.rotation.reflect {
                    v.reverse();
                }
                v
            })
            .collect()
    }

    pub fn tile_parts(&self, t: &Tile<S>) -> Vec<Vec<Point<S>>> {
        self.support_parts(t, 0)
    }

    pub fn tile_vertices(&self, t: &Tile<S>) -> Vec<Point<S>> {
        poly::transform(&t.g, &self.prototiles[t.proto].vertices)
    }

    pub fn tile_key(&self, t: &Tile<S>) -> TileKey {
        let mut v: Vec<[i128; 4]> = self
            .tile_vertices(t)
            .into_iter()
            .map(|p| {
                let (a, b) = (coord_key(p.x), coord_key(p.y));
                [a[0], a[1], b[0], b[1]]
            })
            .collect();
        v.sort_unstable();
        (t.proto, v)
    }

    /// Center and radius of a disk containing `σ^level(tile)`.
    pub fn bounding_disk(&self, t: &Tile<S>, level: u32) -> (Point<f64>, f64) {
        let r = self.prototiles[t.proto]
            .vertices
            .iter()
            .map(|v| v.norm_f64())
            .fold(0.0, f64::max);
        let c = self.support_map(&t.g, level)(Point::origin()).to_f64();
        (c, r * self.lambda().powi(level as i32))
    }

    pub fn to_f64(&self) -> SubstitutionRule<f64> {
        let iso = |g: &Isometry<S>| g.to_f64();
        SubstitutionRule {
            name: self.name.clone(),
            prototiles: self
                .prototiles
                .iter()
                .map(|p| Prototile {
                    index: p.index,
                    vertices: p.vertices.iter().map(|v| v.to_f64()).collect(),
                    parts: p.parts.iter().map(|q| q.iter().map(|v| v.to_f64()).collect()).collect(),
                    symmetries: p.symmetries.iter().map(iso).collect(),
                    fixed_point: p.fixed_point.to_f64(),
                })
                .collect(),
            patches: self
                .patches
                .iter()
                .map(|ts| {
                    ts.iter()
                        .map(|t| Tile {
                            proto: t.proto,
                            g: t.g.to_f64(),
                        })
                        .collect()
                })
                .collect(),
            expansion: self.expansion.to_f64(),
        }
    }

    /// Checks prototile data and `supp σ({S_i}) = z S_i` for every `i`.
    pub fn verify(&self) -> Result<()> {
        if self.patches.len() != self.prototiles.len() {
            return Err(Error::InvalidInput(
                "one dissection patch per prototile required".into(),
            ));
        }
        for (i, p) in self.prototiles.iter().enumerate() {
            if p.index != i {
                return Err(Error::InvalidInput(format!("prototile {i} carries index {}", p.index)));
            }
            if p.parts.iter().any(|q| !poly::is_convex_ccw(q)) {
                return Err(Error::InvalidInput(format!(
                    "prototile {i}: parts must be convex and counter-clockwise"
                )));
            }
            let parts_area = p.parts.iter().fold(S::zero(), |a, q| a + poly::area(q));
            if poly::signed_area2(&p.vertices) <= S::zero() || !close(parts_area, poly::area(&p.vertices)) {
                return Err(Error::InvalidInput(format!(
                    "prototile {i}: parts do not match the boundary"
                )));
            }
            let verts: HashSet<[i128; 4]> = p.vertices.iter().map(|v| point_key(*v)).collect();
            for h in &p.symmetries {
                let img: HashSet<[i128; 4]> = p.vertices.iter().map(|v| point_key(h.apply(*v))).collect();
                if img != verts {
                    return Err(Error::InvalidInput(format!(
                        "prototile {i}: listed symmetry moves the support"
                    )));
                }
                if point_key(h.apply(p.fixed_point)) != point_key(p.fixed_point) {
                    return Err(Error::InvalidInput(format!(
                        "prototile {i}: y_i not fixed by the symmetry group"
                    )));
                }
            }
            if !p.parts.iter().any(|q| poly::contains_strict(q, p.fixed_point)) {
                return Err(Error::InvalidInput(format!("prototile {i}: y_i is not interior")));
            }
        }
        for j in 0..self.prototiles.len() {
            let target = self.support_parts(
                &Tile {
                    proto: j,
                    g: Isometry::identity(),
                },
                1,
            );
            check_support(self, &self.patches[j], &target)?;
        }
        Ok(())
    }
}

fn close<S: Scalar>(a: S, b: S) -> bool {
    if S::EXACT {
        a == b
    } else {
        (a.to_f64() - b.to_f64()).abs() <= 1e-9 * (1.0 + b.to_f64().abs())
    }
}

fn point_key<S: Scalar>(p: Point<S>) -> [i128; 4] {
    let (a, b) = (coord_key(p.x), coord_key(p.y));
    [a[0], a[1], b[0], b[1]]
}

/// Axis-aligned bounds of a list of convex parts, as floats.
fn parts_bounds<S: Scalar>(parts: &[Vec<Point<S>>]) -> (Point<f64>, Point<f64>) {
    let pts: Vec<Point<f64>> = parts.iter().flatten().map(|p| p.to_f64()).collect();
    poly::bounds(&pts)
}

fn boxes_meet(a: &(Point<f64>, Point<f64>), b: &(Point<f64>, Point<f64>), slack: f64) -> bool {
    a.0.x <= b.1.x + slack && b.0.x <= a.1.x + slack && a.0.y <= b.1.y + slack && b.0.y <= a.1.y + slack
}

/// Whether the interiors of the tiles are pairwise disjoint. Returns the
/// first overlapping pair otherwise.
pub fn first_overlap<S: Scalar>(rule: &SubstitutionRule<S>, tiles: &[Tile<S>]) -> Option<(usize, usize)> {
    let parts: Vec<Vec<Vec<Point<S>>>> = tiles.iter().map(|t| rule.tile_parts(t)).collect();
    let boxes: Vec<_> = parts.iter().map(|p| parts_bounds(p)).collect();
    let mut order: Vec<usize> = (0..tiles.len()).collect();
    order.sort_by(|&a, &b| boxes[a].0.x.partial_cmp(&boxes[b].0.x).unwrap());
    for (oi, &a) in order.iter().enumerate() {
        for &b in &order[oi + 1..] {
            if boxes[b].0.x > boxes[a].1.x {
                break;
            }
            if !boxes_meet(&boxes[a], &boxes[b], 0.0) {
                continue;
            }
            let overlap = parts[a].iter().any(|pa| {
                parts[b].iter().any(|pb| {
                    let ar = poly::intersection_area(pa, pb);
                    if S::EXACT {
                        ar > S::zero()
                    } else {
                        ar.to_f64() > 1e-9
                    }
                })
            });
            if overlap {
                return Some((a.min(b), a.max(b)));
            }
        }
    }
    None
}

/// Checks `supp(tiles) = ∪ target` exactly: equal area, every tile inside the
/// target, interiors pairwise disjoint.
pub fn check_support<S: Scalar>(rule: &SubstitutionRule<S>, tiles: &[Tile<S>], target: &[Vec<Point<S>>]) -> Result<()> {
    let target_area = target.iter().fold(S::zero(), |a, q| a + poly::area(q));
    let mut sum = S::zero();
    for (k, t) in tiles.iter().enumerate() {
        for part in rule.tile_parts(t) {
            let a = poly::area(&part);
            sum = sum + a;
            let inside = target
                .iter()
                .fold(S::zero(), |acc, q| acc + poly::intersection_area(&part, q));
            if !close(inside, a) {
                return Err(Error::InvalidInput(format!("tile {k} leaves the target support")));
            }
        }
    }
    if !close(sum, target_area) {
        return Err(Error::InvalidInput(format!(
            "tile area {:?} differs from target area {:?}",
            sum.to_f64(),
            target_area.to_f64()
        )));
    }
    if let Some((a, b)) = first_overlap(rule, tiles) {
        return Err(Error::Overlap(format!("tiles {a} and {b}")));
    }
    Ok(())
}

/// `σ(C)`: substitutes every tile of a packing.
pub fn substitute<S: Scalar>(rule: &SubstitutionRule<S>, packing: &[Tile<S>]) -> Result<Vec<Tile<S>>> {
    if let Some((a, b)) = first_overlap(rule, packing) {
        return Err(Error::Overlap(format!("input tiles {a} and {b} overlap")));
    }
    Ok(substitute_unchecked(rule, packing))
}

fn substitute_unchecked<S: Scalar>(rule: &SubstitutionRule<S>, packing: &[Tile<S>]) -> Vec<Tile<S>> {
    packing.iter().flat_map(|t| rule.children(t)).collect()
}

/// `σ^k` applied to a packing without the overlap check.
pub fn substitute_n<S: Scalar>(rule: &SubstitutionRule<S>, packing: &[Tile<S>], k: u32) -> Vec<Tile<S>> {
    let mut cur = packing.to_vec();
    for _ in 0..k {
        cur = substitute_unchecked(rule, &cur);
    }
    cur
}

// ---------------------------------------------------------------------------
// Built-in rules

fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

fn pt(x: Q, y: Q) -> Point<Q> {
    Point::new(x, y)
}

/// Placement of a right triangle given images of its right-angle vertex and
/// the far ends of its long and short legs.
fn triangle_placement(src: [Point<Q>; 3], dst: [Point<Q>; 3]) -> Isometry<Q> {
    let (a, b, c) = (src[0], src[1], src[2]);
    let (a2, b2, c2) = (dst[0], dst[1], dst[2]);
    for reflect in [false, true] {
        let r = |p: Point<Q>| if reflect { p.conj() } else { p };
        let u = (b2 - a2).cdiv(r(b - a)).expect("degenerate leg");
        if u.cmul(r(c - a)) == c2 - a2 && u.norm2() == qi(1) {
            let rot = Rotation {
                cos: u.x,
                sin: u.y,
                reflect,
            };
            return Isometry::new(a2 - rot.apply(a), rot);
        }
    }
    panic!("triangles are not congruent");
}

/// Converts a placement between original coordinates to the local frames:
/// prototile frame origin `o`, supertile frame origin `z o`.
fn to_local(g: &Isometry<Q>, o: Point<Q>, z: Point<Q>) -> Isometry<Q> {
    Isometry::new(g.translation + g.rotation.apply(o) - z.cmul(o), g.rotation)
}

/// The pinwheel rule: a right triangle with legs 1 and 2, expansion `2 + i`.
pub fn pinwheel() -> SubstitutionRule<Q> {
    let two = qi(2);
    let o = pt(Q::new(8, 5), Q::new(-2, 5));
    let z = pt(two, qi(1));
    // original triangle: right angle at 2, long leg to 0, short leg to 2 - i
    let tri = [pt(two, qi(0)), pt(qi(0), qi(0)), pt(two, qi(-1))];
    let g = |x: i128, y: i128| pt(qi(x), qi(y));
    // (right angle, long-leg end, short-leg end) inside z T = (0, 5, 4 + 2i)
    let children = [
        [g(2, 0), g(0, 0), g(2, 1)],
        [g(2, 0), g(4, 0), g(2, 1)],
        [g(4, 0), g(4, 2), g(5, 0)],
        [g(4, 1), g(2, 1), g(4, 0)],
        [g(4, 1), g(2, 1), g(4, 2)],
    ];
    let patch = children
        .iter()
        .map(|d| Tile {
            proto: 0,
            g: to_local(&triangle_placement(tri, *d), o, z),
        })
        .collect();
    let verts: Vec<Point<Q>> = [tri[1], tri[2], tri[0]].iter().map(|&v| v - o).collect();
    let rule = SubstitutionRule {
        name: "pinwheel".into(),
        prototiles: vec![Prototile {
            index: 0,
            parts: vec![verts.clone()],
            vertices: verts,
            symmetries: vec![Isometry::identity()],
            fixed_point: pt(qi(0), Q::new(1, 20)),
        }],
        patches: vec![patch],
        expansion: z,
    };
    debug_assert!(rule.verify().is_ok());
    rule
}

/// The chair rule: an L-tromino, expansion 2, symmetric under the diagonal flip.
pub fn chair() -> SubstitutionRule<Q> {
    let o = pt(Q::new(1, 2), Q::new(1, 2));
    let z = pt(qi(2), qi(0));
    let g = |x: i128, y: i128| pt(qi(x), qi(y));
    let verts: Vec<Point<Q>> = [g(0, 0), g(2, 0), g(2, 1), g(1, 1), g(1, 2), g(0, 2)]
        .iter()
        .map(|&v| v - o)
        .collect();
    let square = |x: i128, y: i128| -> Vec<Point<Q>> {
        [g(x, y), g(x + 1, y), g(x + 1, y + 1), g(x, y + 1)]
            .iter()
            .map(|&v| v - o)
            .collect()
    };
    let quarter = |j: i64| Rotation::<Q>::quarter_turns(j);
    let placements = [
        Isometry::identity(),
        Isometry::translate(g(1, 1)),
        Isometry::new(g(4, 0), quarter(1)),
        Isometry::new(g(0, 4), quarter(-1)),
    ];
    let patch = placements
        .iter()
        .map(|p| Tile {
            proto: 0,
            g: to_local(p, o, z),
        })
        .collect();
    let flip = Isometry::new(
        Point::origin(),
        Rotation {
            cos: qi(0),
            sin: qi(1),
            reflect: true,
        },
    );
    let rule = SubstitutionRule {
        name: "chair".into(),
        prototiles: vec![Prototile {
            index: 0,
            vertices: verts,
            parts: vec![square(0, 0), square(1, 0), square(0, 1)],
            symmetries: vec![Isometry::identity(), flip],
            fixed_point: pt(Q::new(1, 16), Q::new(1, 16)),
        }],
        patches: vec![patch],
        expansion: z,
    };
    debug_assert!(rule.verify().is_ok());
    rule
}

pub fn builtin_rule(name: &str) -> Result<SubstitutionRule<Q>> {
    match name {
        "pinwheel" => Ok(pinwheel()),
        "chair" => Ok(chair()),
        other => Err(Error::UnknownRule(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Supertile hierarchy

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node<S> {
    /// The node is the supertile `σ^level(tile)`.
    pub tile: Tile<S>,
    pub level: u32,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// `σ^depth(root)` with every intermediate supertile retained; `nodes[0]` is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupertileTree<S> {
    pub nodes: Vec<Node<S>>,
    pub depth: u32,
}

impl<S: Scalar> SupertileTree<S> {
    pub fn leaves(&self) -> Vec<Tile<S>> {
        self.nodes.iter().filter(|n| n.level == 0).map(|n| n.tile).collect()
    }

    pub fn level_nodes(&self, level: u32) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].level == level)
            .collect()
    }

    /// Leaf tiles below a node, in generation order.
    pub fn leaves_under(&self, node: usize) -> Vec<Tile<S>> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            if self.nodes[n].level == 0 {
                out.push(self.nodes[n].tile);
            }
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }
}

pub fn supertile<S: Scalar>(rule: &SubstitutionRule<S>, j: usize, k: u32) -> Result<SupertileTree<S>> {
    if j >= rule.prototiles.len() {
        return Err(Error::InvalidInput(format!("no prototile {j}")));
    }
    Ok(supertile_from(
        rule,
        Tile {
            proto: j,
            g: Isometry::identity(),
        },
        k,
    ))
}

pub fn supertile_from<S: Scalar>(rule: &SubstitutionRule<S>, root: Tile<S>, k: u32) -> SupertileTree<S> {
    let mut nodes = vec![Node {
        tile: root,
        level: k,
        parent: None,
        children: vec![],
    }];
    let mut i = 0;
    while i < nodes.len() {
        if nodes[i].level > 0 {
            let level = nodes[i].level - 1;
            for c in rule.children(&nodes[i].tile) {
                let id = nodes.len();
                nodes.push(Node {
                    tile: c,
                    level,
                    parent: Some(i),
                    children: vec![],
                });
                nodes[i].children.push(id);
            }
        }
        i += 1;
    }
    SupertileTree { nodes, depth: k }
}

/// Leaves of `σ^level(root)` whose supertile ancestors all pass `keep`,
/// which sees each node's bounding disk (center, radius).
pub fn leaves_pruned<S: Scalar>(
    rule: &SubstitutionRule<S>,
    root: Tile<S>,
    level: u32,
    keep: &(dyn Fn(Point<f64>, f64) -> bool + Sync),
) -> Vec<Tile<S>> {
    let (c, r) = rule.bounding_disk(&root, level);
    if !keep(c, r) {
        return Vec::new();
    }
    if level == 0 {
        return vec![root];
    }
    let kids = rule.children(&root);
    if level >= 4 {
        kids.par_iter()
            .flat_map_iter(|t| leaves_pruned(rule, *t, level - 1, keep))
            .collect()
    } else {
        kids.iter()
            .flat_map(|t| leaves_pruned(rule, *t, level - 1, keep))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Substitution matrix

/// `n_ij` = number of tiles of type `i` in `σ({S_j})`.
pub fn substitution_matrix<S: Scalar>(rule: &SubstitutionRule<S>) -> Vec<Vec<u64>> {
    let m = rule.prototiles.len();
    let mut out = vec![vec![0u64; m]; m];
    for (j, patch) in rule.patches.iter().enumerate() {
        for t in patch {
            out[t.proto][j] += 1;
        }
    }
    out
}

/// First power `p ≤ m² - 2m + 2` with `M^p > 0`, if any.
pub fn is_primitive(m: &[Vec<u64>]) -> Result<Option<usize>> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("matrix must be square and nonempty".into()));
    }
    let pattern: Vec<Vec<bool>> = m.iter().map(|r| r.iter().map(|&v| v > 0).collect()).collect();
    let mut cur = pattern.clone();
    let bound = (n * n).saturating_sub(2 * n) + 2;
    for p in 1..=bound {
        if cur.iter().all(|r| r.iter().all(|&v| v)) {
            return Ok(Some(p));
        }
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if cur[i][k] {
                    for j in 0..n {
                        next[i][j] |= pattern[k][j];
                    }
                }
            }
        }
        cur = next;
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Fixed points of the substitution

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointPatch<S> {
    /// The n-th member `(g σ^k)^n ({S_j})`.
    pub patch: Vec<Tile<S>>,
    /// `g` with `S_j = g S` for the chosen tile `S ∈ σ^k({S_j})`.
    pub g: Isometry<S>,
    /// Fixed point of `m -> g(z^k m)`.
    pub center: Point<S>,
    /// Radius around `center` on which members `i` and `i + 1` agree.
    pub agreement_radii: Vec<f64>,
    /// Every member is contained in the next.
    pub nested: bool,
}

/// Fixed point of `m -> t + L m` for the real-linear part `L` of `g(z^k m)`.
fn similarity_fixed_point<S: Scalar>(g: &Isometry<S>, zk: Point<S>) -> Option<Point<S>> {
    let lin = |m: Point<S>| g.rotation.apply(zk.cmul(m));
    let c1 = lin(Point::new(S::one(), S::zero()));
    let c2 = lin(Point::new(S::zero(), S::one()));
    // (I - L) x = t
    let (a, b, c, d) = (S::one() - c1.x, -c2.x, -c1.y, S::one() - c2.y);
    let det = a * d - b * c;
    if det == S::zero() {
        return None;
    }
    let t = g.translation;
    Some(Point::new((t.x * d - b * t.y) / det, (a * t.y - c * t.x) / det))
}

fn point_polygon_distance(p: Point<f64>, poly_: &[Point<f64>]) -> f64 {
    if poly::contains(poly_, p) {
        0.0
    } else {
        poly::boundary_distance(poly_, p)
    }
}

pub fn fixed_point_patch<S: Scalar>(
    rule: &SubstitutionRule<S>,
    j: usize,
    k: u32,
    n: u32,
) -> Result<FixedPointPatch<S>> {
    if j >= rule.prototiles.len() {
        return Err(Error::InvalidInput(format!("no prototile {j}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("period k must be positive".into()));
    }
    let base = Tile {
        proto: j,
        g: Isometry::identity(),
    };
    let level_k = substitute_n(rule, &[base], k);
    let mut zk = Point::new(S::one(), S::zero());
    for _ in 0..k {
        zk = zk.cmul(rule.expansion);
    }
    let step = |g: &Isometry<S>, patch: &[Tile<S>]| -> Vec<Tile<S>> {
        substitute_n(rule, patch, k)
            .into_iter()
            .map(|t| Tile {
                proto: t.proto,
                g: g.compose(&t.g),
            })
            .collect()
    };
    let mut best: Option<(f64, Isometry<S>, Point<S>)> = None;
    for cand in level_k.iter().filter(|t| t.proto == j) {
        let g = cand.g.inverse();
        let Some(c) = similarity_fixed_point(&g, zk) else {
            continue;
        };
        let p1 = step(&g, &[base]);
        let r = new_tile_distance(rule, &[base], &p1, c.to_f64());
        if best.as_ref().is_none_or(|b| r > b.0) {
            best = Some((r, g, c));
        }
    }
    let (_, g, center) = best.ok_or_else(|| Error::NotFound(format!("no tile of type {j} in σ^{k}")))?;
    let mut members = vec![vec![base]];
    for _ in 0..n {
        let next = step(&g, members.last().unwrap());
        members.push(next);
    }
    // one extra member to measure the agreement of the last pair
    let mut radii = Vec::new();
    let mut nested = true;
    for i in 0..n as usize {
        let (a, b) = (&members[i], &members[i + 1]);
        let keys: HashSet<TileKey> = b.iter().map(|t| rule.tile_key(t)).collect();
        nested &= a.iter().all(|t| keys.contains(&rule.tile_key(t)));
        radii.push(new_tile_distance(rule, a, b, center.to_f64()));
    }
    Ok(FixedPointPatch {
        patch: members.pop().unwrap(),
        g,
        center,
        agreement_radii: radii,
        nested,
    })
}

/// Distance from `c` to the tiles of `b` that are not in `a`.
fn new_tile_distance<S: Scalar>(rule: &SubstitutionRule<S>, a: &[Tile<S>], b: &[Tile<S>], c: Point<f64>) -> f64 {
    let old: HashSet<TileKey> = a.iter().map(|t| rule.tile_key(t)).collect();
    b.iter()
        .filter(|t| !old.contains(&rule.tile_key(t)))
        .flat_map(|t| rule.tile_parts(t))
        .map(|part| {
            let f: Vec<Point<f64>> = part.iter().map(|p| p.to_f64()).collect();
            point_polygon_distance(c, &f)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exact rule converted to another scalar type.
pub fn rule_as<S: Scalar>(rule: &SubstitutionRule<Q>) -> SubstitutionRule<S> {
    let p = |v: &Point<Q>| Point::new(S::from_q(v.x), S::from_q(v.y));
    let iso = |g: &Isometry<Q>| iso_as::<S>(g);
    SubstitutionRule {
        name: rule.name.clone(),
        prototiles: rule
            .prototiles
            .iter()
            .map(|t| Prototile {
                index: t.index,
                vertices: t.vertices.iter().map(p).collect(),
                parts: t.parts.iter().map(|q| q.iter().map(p).collect()).collect(),
                symmetries: t.symmetries.iter().map(iso).collect(),
                fixed_point: p(&t.fixed_point),
            })
            .collect(),
        patches: rule
            .patches
            .iter()
            .map(|ts| {
                ts.iter()
                    .map(|t| Tile {
                        proto: t.proto,
                        g: iso(&t.g),
                    })
                    .collect()
            })
            .collect(),
        expansion: p(&rule.expansion),
    }
}

pub fn iso_as<S: Scalar>(g: &Isometry<Q>) -> Isometry<S> {
    Isometry {
        translation: Point::new(S::from_q(g.translation.x), S::from_q(g.translation.y)),
        rotation: Rotation {
            cos: S::from_q(g.rotation.cos),
            sin: S::from_q(g.rotation.sin),
            reflect: g.rotation.reflect,
        },
    }
}

/// Frame of the tiling fixed by `m -> g(z^k m)`: the limit of
/// `(g σ^k)^n ({S_j})`, translated so that the fixed point sits at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedFrame {
    pub j: usize,
    pub k: u32,
    pub g: Isometry<Q>,
    pub center: Point<Q>,
    /// Distance from the fixed point to the boundary of `S_j`.
    pub inner_radius: f64,
}

impl FixedFrame {
    /// Chooses the type-`j` tile of `σ^k(S_j)` whose fixed point lies deepest inside `S_j`.
    pub fn new(rule: &SubstitutionRule<Q>, j: usize, k: u32) -> Result<Self> {
        if j >= rule.prototiles.len() || k == 0 {
            return Err(Error::InvalidInput("bad prototile index or period".into()));
        }
        let base = Tile {
            proto: j,
            g: Isometry::identity(),
        };
        let mut zk = Point::new(qi(1), qi(0));
        for _ in 0..k {
            zk = zk.cmul(rule.expansion);
        }
        let proto = &rule.prototiles[j];
        let boundary: Vec<Point<f64>> = proto.vertices.iter().map(|v| v.to_f64()).collect();
        let mut best: Option<FixedFrame> = None;
        for cand in substitute_n(rule, &[base], k).iter().filter(|t| t.proto == j) {
            let g = cand.g.inverse();
            let Some(c) = similarity_fixed_point(&g, zk) else {
                continue;
            };
            if !proto.parts.iter().any(|q| poly::contains(q, c)) {
                continue;
            }
            let r = poly::boundary_distance(&boundary, c.to_f64());
            if best.as_ref().is_none_or(|b| r > b.inner_radius) {
                best = Some(FixedFrame {
                    j,
                    k,
                    g,
                    center: c,
                    inner_radius: r,
                });
            }
        }
        best.filter(|b| b.inner_radius > 0.0)
            .ok_or_else(|| Error::NotFound(format!("no interior fixed point in σ^{k}")))
    }

    /// `translate(-c) ∘ G_n` with `(g σ^k)^n = G_n σ^{kn}`.
    pub fn placement(&self, rule: &SubstitutionRule<Q>, n: u32) -> Isometry<Q> {
        let mut gn = Isometry::identity();
        let mut conj = self.g;
        for _ in 0..n {
            gn = gn.compose(&conj);
            for _ in 0..self.k {
                conj = rule.inflate(&conj);
            }
        }
        Isometry::translate(-self.center).compose(&gn)
    }

    /// Radius of the disk about the origin covered after `n` steps.
    pub fn coverage(&self, rule: &SubstitutionRule<Q>, n: u32) -> f64 {
        self.inner_radius * rule.lambda().powi((self.k * n) as i32)
    }

    /// Smallest `n` whose patch covers the disk of radius `r` about the origin.
    pub fn steps_for(&self, rule: &SubstitutionRule<Q>, r: f64) -> u32 {
        let mut n = 0;
        while self.coverage(rule, n) < r {
            n += 1;
        }
        n
    }

    /// Tiles of the `n`-th patch (origin-centered) whose ancestors pass `keep`.
    pub fn tiles<S: Scalar>(
        &self,
        rule: &SubstitutionRule<Q>,
        n: u32,
        keep: &(dyn Fn(Point<f64>, f64) -> bool + Sync),
    ) -> Vec<Tile<S>> {
        let h: Isometry<S> = iso_as(&self.placement(rule, n));
        let hf = h.to_f64();
        let rs: SubstitutionRule<S> = rule_as(rule);
        let root = Tile {
            proto: self.j,
            g: Isometry::identity(),
        };
        let keep_moved = move |c: Point<f64>, r: f64| keep(hf.apply(c), r);
        leaves_pruned(&rs, root, self.k * n, &keep_moved)
            .into_iter()
            .map(|t| Tile {
                proto: t.proto,
                g: h.compose(&t.g),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Partitions and coronae

/// Cells of the partition of `σ^depth` into `k`-th order supertiles: the
/// tree nodes at level `k`.
pub fn partition_into_supertiles<S: Scalar>(tree: &SupertileTree<S>, k: u32) -> Result<Vec<usize>> {
    if tree.depth < k {
        return Err(Error::InvalidInput(format!("tree depth {} < {k}", tree.depth)));
    }
    Ok(tree.level_nodes(k))
}

/// Cells whose closed supports meet the support of `cell` (including itself).
pub fn supertile_corona<S: Scalar>(
    rule: &SubstitutionRule<S>,
    tree: &SupertileTree<S>,
    cells: &[usize],
    cell: usize,
) -> Vec<usize> {
    let node = &tree.nodes[cell];
    let own = rule.support_parts(&node.tile, node.level);
    let own_box = parts_bounds(&own);
    cells
        .iter()
        .copied()
        .filter(|&c| {
            let n = &tree.nodes[c];
            let other = rule.support_parts(&n.tile, n.level);
            boxes_meet(&own_box, &parts_bounds(&other), 1e-9)
                && own.iter().any(|a| other.iter().any(|b| poly::closed_intersect(a, b)))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Dense tile orientations

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DtoVerdict {
    CertifiedIrrational,
    /// Floating rule: the angle has no small-denominator rational multiple of π.
    UncertifiedIrrational,
    NoneFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtoWitness<S> {
    pub verdict: DtoVerdict,
    pub order: Option<u32>,
    pub pair: Option<(Tile<S>, Tile<S>)>,
    /// Rotation part of `g_a⁻¹ g_b`.
    pub relative_rotation: Option<Rotation<S>>,
}

/// Whether `theta / pi` is within `tol` of a fraction with denominator at most `max_den`.
pub fn near_rational_multiple_of_pi(theta: f64, max_den: u64, tol: f64) -> bool {
    let x = theta / PI;
    (1..=max_den).any(|q| {
        let p = (x * q as f64).round();
        (x - p / q as f64).abs() < tol
    })
}

/// Searches supertiles up to order `max_order` for two tiles of the same type
/// and chirality whose relative rotation is an irrational multiple of π.
pub fn dto_witness<S: Scalar>(rule: &SubstitutionRule<S>, max_order: u32) -> DtoWitness<S> {
    let z = rule.expansion;
    let inflation_key = point_key(z.cdiv(z.conj()).unwrap_or(z));
    for k in 1..=max_order {
        for j in 0..rule.prototiles.len() {
            let leaves = substitute_n(
                rule,
                &[Tile {
                    proto: j,
                    g: Isometry::identity(),
                }],
                k,
            );
            // distinct orientations per (type, chirality), keeping the first tile seen
            let mut seen: BTreeMap<(usize, bool, [i128; 4]), Tile<S>> = BTreeMap::new();
            for t in &leaves {
                let r = t.g.rotation;
                let key = (t.proto, r.reflect, point_key(r.unit()));
                seen.entry(key).or_insert(*t);
            }
            let tiles: Vec<Tile<S>> = seen.values().copied().collect();
            let mut best: Option<(f64, Tile<S>, Tile<S>, Rotation<S>)> = None;
            for a in &tiles {
                for b in &tiles {
                    if a.proto != b.proto || a.g.rotation.reflect != b.g.rotation.reflect {
                        continue;
                    }
                    let rel = a.g.rotation.inverse().compose(&b.g.rotation);
                    let angle = rel.angle();
                    if angle <= 0.0 {
                        continue;
                    }
                    let irrational = match rel.cos.to_q().zip(rel.sin.to_q()) {
                        Some((c, s)) => {
                            let exact = Rotation {
                                cos: c,
                                sin: s,
                                reflect: false,
                            };
                            matches!(unit_is_root_of_unity(&exact), Ok(false))
                        }
                        None => !near_rational_multiple_of_pi(angle, 1000, 1e-9),
                    };
                    // prefer z / conj(z), the rotation the substitution itself introduces
                    let rank = if point_key(rel.unit()) == inflation_key {
                        angle - 10.0
                    } else {
                        angle
                    };
                    if irrational && best.as_ref().is_none_or(|x| rank < x.0) {
                        best = Some((rank, *a, *b, rel));
                    }
                }
            }
            if let Some((_, a, b, rel)) = best {
                return DtoWitness {
                    verdict: if S::EXACT {
                        DtoVerdict::CertifiedIrrational
                    } else {
                        DtoVerdict::UncertifiedIrrational
                    },
                    order: Some(k),
                    pair: Some((a, b)),
                    relative_rotation: Some(rel),
                };
            }
        }
    }
    DtoWitness {
        verdict: DtoVerdict::NoneFound,
        order: None,
        pair: None,
        relative_rotation: None,
    }
}
