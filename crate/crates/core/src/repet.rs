//! ε-period sets, repetitivity radii and repetitivity curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decorate::TilingSource;
use crate::error::{Error, Result};
use crate::geom::{poly, Aabb, Isometry, Point, Region, Rotation, Scalar};
use crate::metrics::{deviation_between, local_rubber_indexed, IndexedSet};
use crate::pointset::PointSetWindow;
use crate::subst::builtin_rule;

/// Which inequality defines an ε-period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PeriodMode<S> {
    /// `d_LR(xP, P) < ε`.
    Lr,
    /// `d_V(xP, P) < ε`.
    V { region: Region<S> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodSet<S> {
    pub shifts: Vec<Point<S>>,
    /// Bounding box of the shift grid.
    pub search: Aabb<f64>,
    pub eps: S,
    pub mode: PeriodMode<S>,
    /// Largest distance from a search-window point to the shift set
    /// (over grid points in d = 2).
    pub max_gap: f64,
}

/// Integer shifts `-range..=range` (per axis).
pub fn integer_grid<S: Scalar>(dim: usize, range: i64) -> Vec<Point<S>> {
    let mut out = Vec::new();
    for i in -range..=range {
        if dim == 1 {
            out.push(Point::on_line(S::from_int(i)));
        } else {
            for j in -range..=range {
                out.push(Point::new(S::from_int(i), S::from_int(j)));
            }
        }
    }
    out
}

fn max_norm<S: Scalar>(pts: &[Point<S>]) -> f64 {
    pts.iter().map(|p| p.norm_f64()).fold(0.0, f64::max)
}

fn is_period<S: Scalar>(set: &IndexedSet<S>, window: &Aabb<S>, x: Point<S>, eps: S, mode: &PeriodMode<S>) -> bool {
    match mode {
        PeriodMode::V { region } => {
            let d = deviation_between(set, &Isometry::translate(x), set, &Isometry::identity(), region);
            d.lt(eps)
        }
        PeriodMode::Lr => {
            if eps.to_f64() > std::f64::consts::FRAC_1_SQRT_2 {
                return true;
            }
            let reach = window
                .translate(x)
                .inner_radius_at(Point::origin())
                .min_of(window.inner_radius_at(Point::origin()));
            let d = local_rubber_indexed(set, x, set, Point::origin(), reach.to_f64());
            d.value < eps.to_f64()
        }
    }
}

/// Grid-searched ε-periods with the relative-denseness gauge `max_gap`.
pub fn period_set<S: Scalar>(
    p: &PointSetWindow<S>,
    eps: S,
    mode: PeriodMode<S>,
    shifts: &[Point<S>],
) -> Result<PeriodSet<S>> {
    if shifts.is_empty() {
        return Err(Error::InvalidInput("empty shift grid".into()));
    }
    let w = p.window.to_f64();
    let reach = w.inner_radius_at(Point::origin());
    let need = match &mode {
        PeriodMode::V { region } => {
            // every shifted content and its partners must lie in the window
            let b = region.to_f64().bounding_box(p.dim);
            let m = max_norm(shifts) + eps.to_f64().min(1.0);
            if !w.contains_box(&b.expand(m)) {
                return Err(Error::Margin(format!("window must contain V expanded by {m:.3}")));
            }
            0.0
        }
        PeriodMode::Lr if eps.to_f64() > std::f64::consts::FRAC_1_SQRT_2 => 0.0,
        PeriodMode::Lr => max_norm(shifts) + 1.0 / eps.to_f64() + eps.to_f64(),
    };
    if reach < need {
        return Err(Error::Margin(format!(
            "window reaches {reach:.3} from the origin, needs {need:.3}"
        )));
    }
    let set = IndexedSet::from_window(p);
    let flags: Vec<bool> = shifts
        .par_iter()
        .map(|&x| is_period(&set, &p.window, x, eps, &mode))
        .collect();
    let found: Vec<Point<S>> = shifts.iter().zip(&flags).filter(|(_, &f)| f).map(|(x, _)| *x).collect();
    let grid: Vec<Point<f64>> = shifts.iter().map(|x| x.to_f64()).collect();
    let (lo, hi) = crate::geom::poly::bounds(&grid);
    let search = Aabb::new(p.dim, lo, hi - lo);
    let max_gap = gap_gauge(
        p.dim,
        &grid,
        &found.iter().map(|x| x.to_f64()).collect::<Vec<_>>(),
        &search,
    );
    Ok(PeriodSet {
        shifts: found,
        search,
        eps,
        mode,
        max_gap,
    })
}

fn gap_gauge(dim: usize, grid: &[Point<f64>], found: &[Point<f64>], search: &Aabb<f64>) -> f64 {
    if found.is_empty() {
        return f64::INFINITY;
    }
    if dim == 1 {
        return line_gap(found, search);
    }
    let idx = crate::index::GridIndex::auto(found);
    grid.iter()
        .map(|&x| idx.nearest(x).map_or(f64::INFINITY, |(_, d)| d))
        .fold(0.0, f64::max)
}

/// Largest distance from a point of `[lo, hi]` to the shifts.
fn line_gap(found: &[Point<f64>], region: &Aabb<f64>) -> f64 {
    let (lo, hi) = (region.lo.x, region.hi().x);
    let mut xs: Vec<f64> = found.iter().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    let dist = |t: f64| {
        let k = xs.partition_point(|&x| x < t);
        let right = xs.get(k).map_or(f64::INFINITY, |x| x - t);
        let left = if k > 0 { t - xs[k - 1] } else { f64::INFINITY };
        left.min(right)
    };
    let mut g = dist(lo).max(dist(hi));
    for w in xs.windows(2) {
        let mid = (w[0] + w[1]) / 2.0;
        if lo <= mid && mid <= hi {
            g = g.max((w[1] - w[0]) / 2.0);
        }
    }
    g
}

impl<S: Scalar> PeriodSet<S> {
    /// `max_gap` measured over a fixed region instead of the search window;
    /// in d = 2 the region is sampled on a grid of step 1/4.
    pub fn gap_over(&self, region: &Aabb<f64>) -> f64 {
        let found: Vec<Point<f64>> = self.shifts.iter().map(|x| x.to_f64()).collect();
        if found.is_empty() {
            return f64::INFINITY;
        }
        if region.dim == 1 {
            return line_gap(&found, region);
        }
        let idx = crate::index::GridIndex::auto(&found);
        let (nx, ny) = ((region.side.x * 4.0).ceil() as i64, (region.side.y * 4.0).ceil() as i64);
        (0..=nx)
            .flat_map(|i| (0..=ny).map(move |j| (i, j)))
            .map(|(i, j)| {
                let p = Point::new(region.lo.x + i as f64 / 4.0, region.lo.y + j as f64 / 4.0);
                idx.nearest(p).map_or(f64::INFINITY, |(_, d)| d)
            })
            .fold(0.0, f64::max)
    }
}

/// First grid shift `x'` with `d_V(P, x'Q) < ε`.
pub fn locally_indistinguishable<S: Scalar>(
    p: &PointSetWindow<S>,
    q: &PointSetWindow<S>,
    v: &Region<S>,
    eps: S,
    shifts: &[Point<S>],
) -> Option<Point<S>> {
    let a = IndexedSet::from_window(p);
    let b = IndexedSet::from_window(q);
    let id = Isometry::identity();
    shifts
        .iter()
        .copied()
        .find(|&x| deviation_between(&a, &id, &b, &Isometry::translate(x), v).lt(eps))
}

/// Seeded sample of points whose `margin`-balls lie in the window. Exact
/// scalars get coordinates on the 1/64 grid.
pub fn sample_centers<S: Scalar>(window: &Aabb<S>, margin: f64, count: usize, seed: u64) -> Result<Vec<Point<S>>> {
    let w = window.to_f64();
    let lo = w.lo + Point::new(margin, if w.dim == 1 { 0.0 } else { margin });
    let hi = w.hi() - Point::new(margin, if w.dim == 1 { 0.0 } else { margin });
    if lo.x > hi.x || (w.dim == 2 && lo.y > hi.y) {
        return Err(Error::Margin(format!("no room for centers with margin {margin:.3}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coord = |rng: &mut ChaCha8Rng, a: f64, b: f64| -> S {
        let t: f64 = rng.gen_range(a..=b);
        match S::from_f64(t) {
            Some(s) => s,
            None => {
                let k = ((t * 64.0).floor() as i64).clamp((a * 64.0).ceil() as i64, (b * 64.0).floor() as i64);
                S::from_frac(k, 64)
            }
        }
    };
    Ok((0..count)
        .map(|_| {
            let x = coord(&mut rng, lo.x, hi.x);
            let y = if w.dim == 1 {
                S::zero()
            } else {
                coord(&mut rng, lo.y, hi.y)
            };
            Point::new(x, y)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitivityQuery<S> {
    pub r: S,
    pub eps: S,
    /// Centers of the r-patterns.
    pub pattern_centers: Vec<Point<S>>,
    /// Centers of the R-balls searched for copies.
    pub search_centers: Vec<Point<S>>,
    /// Allow small rotations (d = 2, floats).
    pub wiggle: bool,
}

/// An r-pattern with no ε-similar copy inside an admissible ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitivityWitness {
    pub pattern_center: Point<f64>,
    pub search_center: Point<f64>,
    /// Largest radius the window allowed around the search center.
    pub searched_radius: f64,
    /// Pattern content, relative to its center.
    pub content: Vec<Point<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RepetitivityOutcome {
    Radius {
        r_hat: f64,
        pattern_samples: usize,
        search_samples: usize,
    },
    Failure(RepetitivityWitness),
}

impl RepetitivityOutcome {
    pub fn radius(&self) -> Option<f64> {
        match self {
            RepetitivityOutcome::Radius { r_hat, .. } => Some(*r_hat),
            RepetitivityOutcome::Failure(_) => None,
        }
    }
}

/// Staged test of `d_{B_r}(ga P, gb P) <= ε`: small balls first, so most
/// mismatches are rejected after a handful of points. Exact data run on a
/// float shadow first and fall back to exact arithmetic only near the
/// threshold.
fn similar<S: Scalar>(
    set: &IndexedSet<S>,
    shadow: Option<&IndexedSet<f64>>,
    ga: &Isometry<S>,
    gb: &Isometry<S>,
    r: S,
    eps: S,
) -> bool {
    let rf = r.to_f64();
    let radii: Vec<f64> = [1.0, 3.0, 8.0].into_iter().filter(|&s| s < rf).chain([rf]).collect();
    if let Some(f) = shadow {
        let (fa, fb) = (ga.to_f64(), gb.to_f64());
        let e = eps.to_f64();
        let tol = 1e-9 * (1.0 + fa.translation.norm() + fb.translation.norm() + rf);
        let mut last = 0.0;
        for &s in &radii {
            last = deviation_between(f, &fa, f, &fb, &Region::ball(Point::origin(), s)).value();
            if last > e + tol {
                return false;
            }
        }
        if last < e - tol {
            return true;
        }
        return deviation_between(set, ga, set, gb, &Region::ball(Point::origin(), r)).le(eps);
    }
    radii.into_iter().all(|s| {
        let s = if s == rf {
            r
        } else {
            S::from_f64(s).unwrap_or_else(|| S::from_int(s as i64))
        };
        deviation_between(set, ga, set, gb, &Region::ball(Point::origin(), s)).le(eps)
    })
}

/// Valid copy positions `y` of the r-pattern at `c`, with the relative
/// rotation used (zero without wiggle).
fn copy_positions<S: Scalar>(
    set: &IndexedSet<S>,
    shadow: Option<&IndexedSet<f64>>,
    window: &Aabb<S>,
    c: Point<S>,
    q: &RepetitivityQuery<S>,
) -> Vec<Point<f64>> {
    let cf = c.to_f64();
    let anchor = match set.index.nearest(cf) {
        Some((i, d)) if d <= q.r.to_f64() => set.points[i],
        // an empty pattern: every empty r-ball is a copy, approximated by the centers themselves
        _ => return Vec::new(),
    };
    let margin = q.r.to_f64() + 1.0;
    let w = window.to_f64();
    let admissible = |y: Point<f64>| w.inner_radius_at(y) >= margin;
    let here = Isometry::translate(-c);
    if !q.wiggle {
        // cheap float screen on the points nearest the anchor
        let af = anchor.to_f64();
        let mut probe: Vec<Point<f64>> = set
            .index
            .within(af, q.r.to_f64().min(4.0))
            .into_iter()
            .map(|i| set.points[i].to_f64() - af)
            .filter(|o| (af + *o).dist(cf) <= q.r.to_f64())
            .collect();
        probe.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        probe.truncate(8);
        let tol = q.eps.to_f64() + 1e-9;
        let screen = |pf: Point<f64>| {
            probe
                .iter()
                .all(|o| set.index.nearest(pf + *o).is_some_and(|(_, d)| d <= tol))
        };
        return set
            .points
            .par_iter()
            .filter_map(|&p| {
                let y = c + (p - anchor);
                let yf = y.to_f64();
                (admissible(yf)
                    && screen(p.to_f64())
                    && similar(set, shadow, &here, &Isometry::translate(-y), q.r, q.eps))
                .then_some(yf)
            })
            .collect();
    }
    // wiggle: a second anchor fixes the relative rotation
    let second = {
        let af = anchor.to_f64();
        let mut best: Option<(f64, Point<S>)> = None;
        set.index.for_within(af, 4.0 * margin, |j| {
            let d = set.points[j].to_f64().dist(af);
            if d > 0.0 && best.is_none_or(|(b, _)| d < b) {
                best = Some((d, set.points[j]));
            }
        });
        match best {
            Some((_, p1)) => p1,
            None => return Vec::new(),
        }
    };
    let eps = q.eps.to_f64();
    let base = (second - anchor).to_f64();
    let len = base.norm();
    let c_rel = (anchor - c).to_f64();
    set.points
        .par_iter()
        .flat_map_iter(|&p| {
            let pf = p.to_f64();
            let mut out = Vec::new();
            set.index.for_within(pf, len + eps, |j| {
                let v = set.points[j].to_f64() - pf;
                if (v.norm() - len).abs() > eps || v.norm() == 0.0 {
                    return;
                }
                let psi = (v.angle() - base.angle() + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
                    - std::f64::consts::PI;
                if psi.abs() / 2.0 > eps {
                    return;
                }
                let rot = Rotation::from_angle(psi);
                let yf = pf - rot.apply(c_rel);
                if !admissible(yf) {
                    return;
                }
                let (Some(y), Some(half), Some(neg)) = (
                    S::from_f64(yf.x).zip(S::from_f64(yf.y)).map(|(x, y)| Point::new(x, y)),
                    rotation_as::<S>(psi / 2.0),
                    rotation_as::<S>(-psi / 2.0),
                ) else {
                    return;
                };
                let ga = Isometry::new(Point::origin(), half).compose(&here);
                let gb = Isometry::new(Point::origin(), neg).compose(&Isometry::translate(-y));
                if similar(set, shadow, &ga, &gb, q.r, q.eps) {
                    out.push(yf);
                }
            });
            out.into_iter()
        })
        .collect()
}

fn rotation_as<S: Scalar>(theta: f64) -> Option<Rotation<S>> {
    let r = Rotation::from_angle(theta);
    Some(Rotation {
        cos: S::from_f64(r.cos)?,
        sin: S::from_f64(r.sin)?,
        reflect: false,
    })
}

/// Empirical `R̂(r, ε)`: the smallest R such that every sampled R-ball
/// contains an ε-similar copy of every sampled r-pattern. Copies are found by
/// aligning a pattern point with a point of the set (complete for ε = 0).
pub fn repetitivity_radius<S: Scalar>(p: &PointSetWindow<S>, q: &RepetitivityQuery<S>) -> Result<RepetitivityOutcome> {
    if q.wiggle && (S::EXACT || p.dim != 2) {
        return Err(Error::InvalidInput(
            "wiggle search needs d = 2 and floating coordinates".into(),
        ));
    }
    if q.eps < S::zero() || q.r <= S::zero() {
        return Err(Error::InvalidInput("need r > 0 and eps >= 0".into()));
    }
    if q.pattern_centers.is_empty() || q.search_centers.is_empty() {
        return Err(Error::InvalidInput("no center samples".into()));
    }
    let w = p.window.to_f64();
    let rf = q.r.to_f64();
    for c in &q.pattern_centers {
        if w.inner_radius_at(c.to_f64()) < rf + 1.0 {
            return Err(Error::Margin(format!(
                "pattern center {:?} too close to the window edge",
                c.to_f64()
            )));
        }
    }
    let set = IndexedSet::from_window(p);
    let shadow = S::EXACT.then(|| IndexedSet::from_window(&p.to_f64()));
    let mut r_hat = 0.0f64;
    for &c in &q.pattern_centers {
        let mut copies = copy_positions(&set, shadow.as_ref(), &p.window, c, q);
        // the pattern is a copy of itself
        copies.push(c.to_f64());
        let index = crate::index::GridIndex::auto(&copies);
        for &s in &q.search_centers {
            let sf = s.to_f64();
            let reach = w.inner_radius_at(sf);
            let (_, d) = index.nearest(sf).expect("nonempty");
            // the copy sits at distance d, its r-ball must fit inside the R-ball
            let need = d + rf;
            if need > reach {
                let here = Isometry::translate(-c);
                let content = set
                    .preimage_in(&here, &Region::ball(Point::origin(), q.r))
                    .into_iter()
                    .map(|x| (x - c).to_f64())
                    .collect();
                return Ok(RepetitivityOutcome::Failure(RepetitivityWitness {
                    pattern_center: c.to_f64(),
                    search_center: sf,
                    searched_radius: reach,
                    content,
                }));
            }
            r_hat = r_hat.max(need);
        }
    }
    Ok(RepetitivityOutcome::Radius {
        r_hat,
        pattern_samples: q.pattern_centers.len(),
        search_samples: q.search_centers.len(),
    })
}

/// Checks that every R-ball about `search_centers` holds a copy of every
/// r-pattern about `pattern_centers`.
pub fn verify_radius<S: Scalar>(p: &PointSetWindow<S>, q: &RepetitivityQuery<S>, big_r: f64) -> Result<bool> {
    let set = IndexedSet::from_window(p);
    let shadow = S::EXACT.then(|| IndexedSet::from_window(&p.to_f64()));
    let rf = q.r.to_f64();
    for &c in &q.pattern_centers {
        let mut copies = copy_positions(&set, shadow.as_ref(), &p.window, c, q);
        copies.push(c.to_f64());
        for s in &q.search_centers {
            let sf = s.to_f64();
            if !copies.iter().any(|y| y.dist(sf) + rf <= big_r + 1e-9) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub r: f64,
    pub eps: f64,
    /// Running maximum over smaller r; `None` marks a failed search.
    pub r_hat: Option<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub eps: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Largest `R̂(2r)/R̂(r)` over doublings present in the table.
    pub max_doubling_ratio: f64,
    pub linear: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitivityCurve {
    pub samples: Vec<CurveSample>,
    pub fits: Vec<CurveFit>,
    /// Witnesses of failed searches.
    pub witnesses: Vec<RepetitivityWitness>,
}

/// Doubling ratio at or below which a curve counts as linear.
pub const LINEAR_RATIO: f64 = 2.5;

/// `R̂` over a table of r and ε with one seeded set of centers per r.
pub fn repetitivity_curve<S: Scalar>(
    p: &PointSetWindow<S>,
    rs: &[S],
    epss: &[S],
    wiggle: bool,
    samples: (usize, usize),
    seed: u64,
) -> Result<RepetitivityCurve> {
    let w = p.window.to_f64();
    let half = if w.dim == 1 { w.side.x } else { w.side.x.min(w.side.y) } / 2.0;
    curve_from(rs, epss, samples, |r, eps| {
        let rf = r.to_f64();
        let pattern_centers = sample_centers(&p.window, rf + 1.0, samples.0, seed)?;
        // search balls stay away from the edge so large R fit
        let search_centers = sample_centers(&p.window, (rf + 1.0).max(half / 2.0), samples.1, seed ^ 0x5eed)?;
        repetitivity_radius(
            p,
            &RepetitivityQuery {
                r,
                eps,
                pattern_centers,
                search_centers,
                wiggle,
            },
        )
    })
}

/// Wiggle curve on a hierarchically generated tiling: centers in the square
/// of half-side `half`, copies searched up to radius `cap`.
pub fn tiling_wiggle_curve(
    src: &TilingSource,
    rs: &[f64],
    epss: &[f64],
    samples: (usize, usize),
    seed: u64,
    half: f64,
    cap: f64,
) -> Result<RepetitivityCurve> {
    let square = Aabb::centered_square(Point::origin(), half);
    let pattern_centers: Vec<Point<f64>> = sample_centers(&square, 0.0, samples.0, seed)?;
    let search_centers: Vec<Point<f64>> = sample_centers(&square, 0.0, samples.1, seed ^ 0x5eed)?;
    curve_from(rs, epss, samples, |r, eps| {
        let q = RepetitivityQuery {
            r,
            eps,
            pattern_centers: pattern_centers.clone(),
            search_centers: search_centers.clone(),
            wiggle: true,
        };
        tiling_wiggle_radius(src, &q, cap)
    })
}

fn curve_from<S: Scalar>(
    rs: &[S],
    epss: &[S],
    samples: (usize, usize),
    mut run: impl FnMut(S, S) -> Result<RepetitivityOutcome>,
) -> Result<RepetitivityCurve> {
    let mut out = Vec::new();
    let mut fits = Vec::new();
    let mut witnesses = Vec::new();
    for &eps in epss {
        let mut running = 0.0f64;
        let mut failed = false;
        let mut rows = Vec::new();
        for &r in rs {
            let r_hat = if failed {
                None
            } else {
                match run(r, eps)? {
                    RepetitivityOutcome::Radius { r_hat, .. } => {
                        running = running.max(r_hat);
                        Some(running)
                    }
                    RepetitivityOutcome::Failure(w) => {
                        witnesses.push(w);
                        failed = true;
                        None
                    }
                }
            };
            rows.push(CurveSample {
                r: r.to_f64(),
                eps: eps.to_f64(),
                r_hat,
                samples: samples.0 * samples.1,
            });
        }
        fits.push(fit(eps.to_f64(), &rows));
        out.extend(rows);
    }
    Ok(RepetitivityCurve {
        samples: out,
        fits,
        witnesses,
    })
}

/// Staged `d_{B_r}(ga A, gb B) <= ε` for two local point sets.
fn similar_pair(
    a: &IndexedSet<f64>,
    b: &IndexedSet<f64>,
    ga: &Isometry<f64>,
    gb: &Isometry<f64>,
    r: f64,
    eps: f64,
) -> bool {
    [1.0, 3.0, 8.0]
        .into_iter()
        .filter(|&s| s < r)
        .chain([r])
        .all(|s| deviation_between(a, ga, b, gb, &Region::ball(Point::origin(), s)).le(eps))
}

/// Wiggle `R̂` on a tiling generated from its hierarchy. Candidate copies are
/// the images of the pattern center under the motions carrying the
/// level-ℓ supertile that contains it (`λ^ℓ ≤ r`) onto other level-ℓ
/// supertiles of the same type and chirality turned by at most `2ε`; each
/// candidate is verified on generated points.
pub fn tiling_wiggle_radius(src: &TilingSource, q: &RepetitivityQuery<f64>, cap: f64) -> Result<RepetitivityOutcome> {
    let (r, eps) = (q.r, q.eps);
    if !(r > 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidInput("need r > 0 and eps >= 0".into()));
    }
    if q.pattern_centers.is_empty() || q.search_centers.is_empty() {
        return Err(Error::InvalidInput("no center samples".into()));
    }
    let reach = q
        .search_centers
        .iter()
        .chain(&q.pattern_centers)
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        + cap
        + r
        + 2.0;
    let covered = src.frame.coverage(&builtin_rule(&src.rule.name)?, src.steps);
    if covered < reach {
        return Err(Error::Margin(format!(
            "tiling covers radius {covered:.1}, search needs {reach:.1}"
        )));
    }
    let lambda = src.rule.lambda();
    let level = ((r.ln() / lambda.ln()).floor().max(0.0) as u32).min(src.depth());
    let centers = q.search_centers.clone();
    let near_search = move |x: Point<f64>, rad: f64| centers.iter().any(|c| c.dist(x) <= rad + cap);
    let nodes = src.supertiles(level, &near_search);
    let outcomes: Vec<std::result::Result<f64, RepetitivityWitness>> = q
        .pattern_centers
        .par_iter()
        .map(|&c| {
            let here = IndexedSet::new(src.points_near(c, r + 2.0));
            let home = src
                .supertiles(level, &|x, rad| x.dist(c) <= rad)
                .into_iter()
                .find(|t| src.node_parts(t, level).iter().any(|part| poly::contains(part, c)));
            let mut copies: Vec<(Point<f64>, f64)> = vec![(c, 0.0)];
            if let Some(a) = home {
                for b in nodes
                    .iter()
                    .filter(|b| b.proto == a.proto && b.g.rotation.reflect == a.g.rotation.reflect)
                {
                    let m = src.node_motion(&a, b, level);
                    let psi = m.rotation.angle();
                    if psi.abs() / 2.0 <= eps && !m.rotation.reflect {
                        copies.push((m.apply(c), psi));
                    }
                }
            }
            let mut verdict: Vec<Option<bool>> = vec![None; copies.len()];
            verdict[0] = Some(true);
            let mut worst = 0.0f64;
            for &s in &q.search_centers {
                let mut order: Vec<usize> = (0..copies.len()).filter(|&i| copies[i].0.dist(s) + r <= cap).collect();
                order.sort_by(|&i, &j| copies[i].0.dist(s).total_cmp(&copies[j].0.dist(s)));
                let found = order.into_iter().find(|&i| {
                    *verdict[i].get_or_insert_with(|| {
                        let (y, psi) = copies[i];
                        let there = IndexedSet::new(src.points_near(y, r + 2.0));
                        let ga = Isometry::new(Point::origin(), Rotation::from_angle(psi / 2.0))
                            .compose(&Isometry::translate(-c));
                        let gb = Isometry::new(Point::origin(), Rotation::from_angle(-psi / 2.0))
                            .compose(&Isometry::translate(-y));
                        similar_pair(&here, &there, &ga, &gb, r, eps)
                    })
                });
                match found {
                    Some(i) => worst = worst.max(copies[i].0.dist(s) + r),
                    None => {
                        return Err(RepetitivityWitness {
                            pattern_center: c,
                            search_center: s,
                            searched_radius: cap,
                            content: here.points.iter().filter(|p| p.dist(c) <= r).map(|p| *p - c).collect(),
                        })
                    }
                }
            }
            Ok(worst)
        })
        .collect();
    let mut r_hat = 0.0f64;
    for o in outcomes {
        match o {
            Ok(v) => r_hat = r_hat.max(v),
            Err(w) => return Ok(RepetitivityOutcome::Failure(w)),
        }
    }
    Ok(RepetitivityOutcome::Radius {
        r_hat,
        pattern_samples: q.pattern_centers.len(),
        search_samples: q.search_centers.len(),
    })
}

fn fit(eps: f64, rows: &[CurveSample]) -> CurveFit {
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|s| s.r_hat.map(|h| (s.r, h))).collect();
    let complete = pts.len() == rows.len() && !pts.is_empty();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n.max(1.0), sy / n.max(1.0));
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mut ratio = 0.0f64;
    for a in &pts {
        for b in &pts {
            if (b.0 - 2.0 * a.0).abs() < 1e-12 && a.1 > 0.0 {
                ratio = ratio.max(b.1 / a.1);
            }
        }
    }
    CurveFit {
        eps,
        slope,
        intercept: my - slope * mx,
        max_doubling_ratio: ratio,
        linear: complete && ratio <= LINEAR_RATIO,
    }
}

impl RepetitivityCurve {
    /// RFC-4180 CSV: `r,eps,R_hat,samples,linear`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,eps,R_hat,samples,linear\r\n");
        for row in &self.samples {
            let linear = self.fits.iter().find(|f| f.eps == row.eps).is_some_and(|f| f.linear);
            let h = row.r_hat.map_or_else(|| "fail".to_string(), |h| format!("{h}"));
            s.push_str(&format!("{},{},{},{},{}\r\n", row.r, row.eps, h, row.samples, linear));
        }
        s
    }

    pub fn fit_for(&self, eps: f64) -> Option<&CurveFit> {
        self.fits.iter().find(|f| f.eps == eps)
    }
}
