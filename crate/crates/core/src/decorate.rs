//! Prototile decorations turning tilings into point sets and back.
//!
//! For prototile `i` (1-based) with symmetry group `H_i` and fixed point `y_i`,
//! `P_i = {y_i} ∪ (i/(2m+1)) H_i(y_i + e1) ∪ i H_i(y_i + e1)` and
//! `Φ({S_i}) = (D/2m) P_i`, all scalings about the origin of the prototile frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::poly;
use crate::geom::{dyadic_floor, Aabb, Isometry, Point, Rotation, Scalar, Q};
use crate::index::GridIndex;
use crate::pointset::lex;
use crate::subst::{builtin_rule, FixedFrame, SubstitutionRule, Tile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoration<S> {
    /// `Φ({S_i})` in the prototile frame.
    pub points: Vec<Vec<Point<S>>>,
    /// `D`, with `B_D(y_i)` inside every prototile.
    pub d: S,
    /// `D / 2m`.
    pub scale: S,
    /// Every open ball of this radius meets at most one decoration point.
    pub radius: S,
    /// Single-linkage threshold separating the point groups of distinct tiles.
    pub link: f64,
}

fn inner_distance<S: Scalar>(rule: &SubstitutionRule<S>, i: usize, p: Point<S>) -> f64 {
    let proto = &rule.prototiles[i];
    if !proto.parts.iter().any(|q| poly::contains(q, p)) {
        return 0.0;
    }
    let b: Vec<Point<f64>> = proto.vertices.iter().map(|v| v.to_f64()).collect();
    poly::boundary_distance(&b, p.to_f64())
}

fn dedup<S: Scalar>(mut v: Vec<Point<S>>) -> Vec<Point<S>> {
    v.sort_by(lex);
    v.dedup();
    v
}

pub fn build_decoration<S: Scalar>(rule: &SubstitutionRule<S>) -> Result<Decoration<S>> {
    let m = rule.prototiles.len();
    let e1 = Point::new(S::one(), S::zero());
    let rho_y = (0..m)
        .map(|i| inner_distance(rule, i, rule.prototiles[i].fixed_point))
        .fold(f64::INFINITY, f64::min);
    if !(rho_y > 0.0) {
        return Err(Error::InvalidInput("fixed point y_i must be interior".into()));
    }
    let d = S::from_q(dyadic_floor(rho_y / 2.0, 6));
    if !(d > S::zero()) {
        return Err(Error::NotFound(
            "no dyadic D with B_D(y_i) inside the prototiles".into(),
        ));
    }
    let scale = d / S::from_int(2 * m as i64);
    let mut points = Vec::with_capacity(m);
    for (i, proto) in rule.prototiles.iter().enumerate() {
        let y = proto.fixed_point;
        if proto.symmetries.iter().any(|h| h.apply(y) != y) {
            return Err(Error::InvalidInput(format!(
                "prototile {i}: symmetries share no fixed point y_i"
            )));
        }
        let orbit = dedup(proto.symmetries.iter().map(|h| h.apply(y + e1)).collect());
        let idx = S::from_int(i as i64 + 1);
        let inner = idx / S::from_int(2 * m as i64 + 1);
        let mut p = vec![y];
        p.extend(orbit.iter().map(|&v| v.scale(inner)));
        p.extend(orbit.iter().map(|&v| v.scale(idx)));
        let phi = dedup(p.into_iter().map(|v| v.scale(scale)).collect());
        for v in &phi {
            if inner_distance(rule, i, *v) <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "prototile {i}: decoration point leaves the interior"
                )));
            }
        }
        let sorted = phi.clone();
        for h in &proto.symmetries {
            let img = dedup(phi.iter().map(|&v| h.apply(v)).collect());
            if img != sorted {
                return Err(Error::InvalidInput(format!(
                    "prototile {i}: decoration breaks a symmetry"
                )));
            }
        }
        points.push(phi);
    }
    // Separation: points of one tile lie within rho_phi of the tile's frame
    // origin; frame origins of distinct tiles are 2 rho_o apart.
    let rho_o = (0..m)
        .map(|i| inner_distance(rule, i, Point::origin()))
        .fold(f64::INFINITY, f64::min);
    let rho_phi = points.iter().flatten().map(|p| p.norm_f64()).fold(0.0, f64::max);
    if !(rho_phi < rho_o / 2.0) {
        return Err(Error::NotFound("decoration too large to separate tiles".into()));
    }
    let mut intra = f64::INFINITY;
    for phi in &points {
        for a in 0..phi.len() {
            for b in a + 1..phi.len() {
                intra = intra.min(phi[a].to_f64().dist(phi[b].to_f64()));
            }
        }
    }
    let sep = intra.min(2.0 * rho_o - 2.0 * rho_phi);
    // shave a little off so the exact radius stays below the float estimate
    let radius = S::from_q(dyadic_floor(sep / 2.0 * (1.0 - 1e-9), 12));
    Ok(Decoration {
        points,
        d,
        scale,
        radius,
        link: rho_o,
    })
}

/// `Φ(C)`: union of `g Φ({S_i})` over the tiles `g S_i` of `C`.
pub fn decorate<S: Scalar>(phi: &Decoration<S>, packing: &[Tile<S>]) -> Vec<Point<S>> {
    let mut out: Vec<Point<S>> = packing
        .iter()
        .flat_map(|t| phi.points[t.proto].iter().map(move |&p| t.g.apply(p)))
        .collect();
    out.sort_by(lex);
    out
}

fn approx_eq<S: Scalar>(a: Point<S>, b: Point<S>) -> bool {
    if S::EXACT {
        a == b
    } else {
        a.to_f64().dist(b.to_f64()) <= 1e-9 * (1.0 + a.to_f64().norm())
    }
}

fn same_set<S: Scalar>(a: &[Point<S>], b: &[Point<S>]) -> bool {
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| approx_eq(*p, *q)))
}

/// Groups points by single linkage at `link`, ordered by first point.
pub fn clusters<S: Scalar>(points: &[Point<S>], link: f64) -> Vec<Vec<Point<S>>> {
    let n = points.len();
    let idx = GridIndex::new(points, link);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in idx.within(points[i].to_f64(), link) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<Point<S>>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(points[i]);
    }
    groups.into_values().collect()
}

/// Isometries `g` with `g(template) = cluster`, for a fixed template.
fn matching_motions<S: Scalar>(template: &[Point<S>], cluster: &[Point<S>]) -> Vec<Isometry<S>> {
    let mut out = Vec::new();
    if template.len() != cluster.len() || template.is_empty() {
        return out;
    }
    if template.len() == 1 {
        out.push(Isometry::translate(cluster[0] - template[0]));
        return out;
    }
    let (c0, c1) = (cluster[0], cluster[1]);
    let dc = c1 - c0;
    for &ta in template {
        for &tb in template {
            if ta == tb {
                continue;
            }
            let dt = tb - ta;
            let same_len = if S::EXACT {
                dt.norm2() == dc.norm2()
            } else {
                (dt.norm2().to_f64() - dc.norm2().to_f64()).abs() < 1e-9
            };
            if !same_len {
                continue;
            }
            for reflect in [false, true] {
                let src = if reflect { dt.conj() } else { dt };
                let Some(u) = dc.cdiv(src) else { continue };
                let rot = if S::EXACT {
                    match Rotation::from_unit(u, reflect) {
                        Ok(r) => r,
                        Err(_) => continue,
                    }
                } else {
                    let n = u.to_f64().norm();
                    Rotation {
                        cos: u.x / S::from_f64(n).unwrap_or(S::one()),
                        sin: u.y / S::from_f64(n).unwrap_or(S::one()),
                        reflect,
                    }
                };
                let g = Isometry::new(c0 - rot.apply(ta), rot);
                let img: Vec<Point<S>> = template.iter().map(|&p| g.apply(p)).collect();
                if same_set(&img, cluster) {
                    out.push(g);
                }
            }
        }
    }
    out
}

/// Recovers the packing from its decoration. Tiles come out in the order of
/// their point groups; placements are determined up to the prototile symmetries.
pub fn undecorate<S: Scalar>(phi: &Decoration<S>, points: &[Point<S>]) -> Result<Vec<Tile<S>>> {
    let mut tiles = Vec::new();
    for (index, cluster) in clusters(points, phi.link).into_iter().enumerate() {
        let mut found = None;
        for (i, template) in phi.points.iter().enumerate() {
            if let Some(g) = matching_motions(template, &cluster).into_iter().next() {
                found = Some(Tile { proto: i, g });
                break;
            }
        }
        match found {
            Some(t) => tiles.push(t),
            None => {
                return Err(Error::Decode {
                    index,
                    reason: format!("{} points match no prototile decoration", cluster.len()),
                    points: cluster.iter().map(|p| (p.x.to_f64(), p.y.to_f64())).collect(),
                })
            }
        }
    }
    Ok(tiles)
}

/// Decorated fixed-point tiling of a built-in rule inside `window`.
/// `steps` is the number of fixed-point iterations (automatic when absent).
pub fn realize_decorated<S: Scalar>(
    rule_name: &str,
    steps: Option<u32>,
    window: &Aabb<S>,
) -> Result<(Vec<Point<S>>, S)> {
    let rule = builtin_rule(rule_name)?;
    let frame = FixedFrame::new(&rule, 0, 1)?;
    let w = window.to_f64();
    let far = [w.lo, w.hi(), Point::new(w.lo.x, w.hi().y), Point::new(w.hi().x, w.lo.y)]
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let n = match steps {
        Some(n) => {
            if frame.coverage(&rule, n) < far {
                return Err(Error::Margin(format!(
                    "{n} substitution steps cover radius {:.3}, window needs {far:.3}",
                    frame.coverage(&rule, n)
                )));
            }
            n
        }
        None => frame.steps_for(&rule, far),
    };
    let phi: Decoration<S> = build_decoration(&crate::subst::rule_as::<S>(&rule))?;
    let keep =
        |c: Point<f64>, r: f64| c.x + r >= w.lo.x && c.x - r <= w.hi().x && c.y + r >= w.lo.y && c.y - r <= w.hi().y;
    let tiles: Vec<Tile<S>> = frame.tiles(&rule, n, &keep);
    let pts = decorate(&phi, &tiles)
        .into_iter()
        .filter(|p| window.contains(*p))
        .collect();
    Ok((pts, phi.radius))
}

/// A decorated fixed-point tiling generated on demand from its supertile
/// hierarchy, for regions too large to materialize.
pub struct TilingSource {
    pub rule: SubstitutionRule<f64>,
    pub frame: FixedFrame,
    pub steps: u32,
    /// Placement of the top supertile.
    pub top: Isometry<f64>,
    pub phi: Decoration<f64>,
}

impl TilingSource {
    /// Covers the disk of the given radius about the origin.
    pub fn new(rule_name: &str, radius: f64) -> Result<Self> {
        let rule = builtin_rule(rule_name)?;
        let frame = FixedFrame::new(&rule, 0, 1)?;
        let steps = frame.steps_for(&rule, radius);
        let top = crate::subst::iso_as::<f64>(&frame.placement(&rule, steps));
        let phi = build_decoration(&rule)?;
        let phi = Decoration {
            points: phi
                .points
                .iter()
                .map(|v| v.iter().map(|p| p.to_f64()).collect())
                .collect(),
            d: phi.d.to_f64(),
            scale: phi.scale.to_f64(),
            radius: phi.radius.to_f64(),
            link: phi.link,
        };
        Ok(TilingSource {
            rule: rule.to_f64(),
            frame,
            steps,
            top,
            phi,
        })
    }

    pub fn depth(&self) -> u32 {
        self.frame.k * self.steps
    }

    /// Level-`level` supertiles whose bounding disks (final coordinates) pass
    /// `keep`. A node `t` has support `top(z^level t.g(S))`.
    pub fn supertiles(&self, level: u32, keep: &(dyn Fn(Point<f64>, f64) -> bool + Sync)) -> Vec<Tile<f64>> {
        let lambda = self.rule.lambda().powi(level as i32);
        let z = self.rule.expansion;
        let mut zl = Point::new(1.0, 0.0);
        for _ in 0..level {
            zl = zl.cmul(z);
        }
        let top = self.top;
        let moved = move |c: Point<f64>, r: f64| keep(top.apply(zl.cmul(c)), r * lambda);
        let root = Tile {
            proto: self.frame.j,
            g: Isometry::identity(),
        };
        crate::subst::leaves_pruned(&self.rule, root, self.depth().saturating_sub(level), &moved)
    }

    /// Final-coordinate motion carrying supertile `a` onto supertile `b`.
    pub fn node_motion(&self, a: &Tile<f64>, b: &Tile<f64>, level: u32) -> Isometry<f64> {
        let mut k = b.g.compose(&a.g.inverse());
        for _ in 0..level {
            k = self.rule.inflate(&k);
        }
        self.top.compose(&k).compose(&self.top.inverse())
    }

    /// Convex pieces of a level-`level` supertile in final coordinates.
    pub fn node_parts(&self, t: &Tile<f64>, level: u32) -> Vec<Vec<Point<f64>>> {
        self.rule
            .support_parts(t, level)
            .into_iter()
            .map(|part| poly::transform(&self.top, &part))
            .collect()
    }

    /// Tiles meeting the disk of the given radius about `c`.
    pub fn tiles_near(&self, c: Point<f64>, radius: f64) -> Vec<Tile<f64>> {
        let keep = move |x: Point<f64>, r: f64| x.dist(c) <= r + radius;
        self.supertiles(0, &keep)
            .into_iter()
            .map(|t| Tile {
                proto: t.proto,
                g: self.top.compose(&t.g),
            })
            .collect()
    }

    /// Decoration points within `radius` of `c`.
    pub fn points_near(&self, c: Point<f64>, radius: f64) -> Vec<Point<f64>> {
        let tiles = self.tiles_near(c, radius + 1.0);
        let mut pts: Vec<Point<f64>> = decorate(&self.phi, &tiles)
            .into_iter()
            .filter(|p| p.dist(c) <= radius)
            .collect();
        pts.sort_by(lex);
        pts
    }
}

/// The decoration of a built-in rule in exact arithmetic.
pub fn builtin_decoration(rule: &str) -> Result<(SubstitutionRule<Q>, Decoration<Q>)> {
    let r = builtin_rule(rule)?;
    let d = build_decoration(&r)?;
    Ok((r, d))
}
