//! Example point sets and their finite-window realizations.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Isometry, Point, Scalar, Q};

/// One term `amp * cos(2 pi freq x + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

/// Trigonometric polynomial used to modulate the integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    /// `(1/3) cos(2 pi alpha x)` with the golden-mean frequency `alpha = (sqrt 5 - 1)/2`.
    pub fn golden() -> Self {
        TrigPoly {
            terms: vec![TrigTerm {
                amp: 1.0 / 3.0,
                freq: (5f64.sqrt() - 1.0) / 2.0,
                phase: 0.0,
            }],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amp * (2.0 * PI * t.freq * x + t.phase).cos())
            .sum()
    }

    /// Bound on the sup norm: `sum |a_j|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.abs()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .terms
            .iter()
            .any(|t| !(t.amp.is_finite() && t.freq.is_finite() && t.phase.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite trigonometric coefficient".into()));
        }
        if self.sup_bound() > 1.0 / 3.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "sum of |amplitudes| {} exceeds 1/3",
                self.sup_bound()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    IntegerLattice {
        dim: usize,
    },
    TwoAdic,
    TwoAdicPunctured,
    BohrModulated {
        f: TrigPoly,
    },
    /// Decoration of the fixed supertile hierarchy of a built-in rule; `level`
    /// is chosen automatically when absent.
    DecoratedTiling {
        rule: String,
        level: Option<u32>,
    },
    /// `n` for `n < 0` and `2n` for `n >= 0`: a lattice whose density jumps.
    HalfLineDefect,
}

impl GeneratorSpec {
    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::IntegerLattice { dim } => *dim,
            GeneratorSpec::DecoratedTiling { .. } => 2,
            _ => 1,
        }
    }
}

/// Finite realization of a uniformly discrete set inside a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSetWindow<S> {
    pub dim: usize,
    /// Lexicographically sorted.
    pub points: Vec<Point<S>>,
    pub window: Aabb<S>,
    /// Every open ball of this radius holds at most one point.
    pub radius: S,
    pub spec: GeneratorSpec,
    /// Motion applied after generation (`points = motion(generated)`).
    pub motion: Isometry<S>,
}

pub fn lex<S: Scalar>(a: &Point<S>, b: &Point<S>) -> Ordering {
    a.x.partial_cmp(&b.x)
        .unwrap_or(Ordering::Equal)
        .then(a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
}

impl<S: Scalar> PointSetWindow<S> {
    pub fn from_points(dim: usize, mut points: Vec<Point<S>>, window: Aabb<S>, radius: S, spec: GeneratorSpec) -> Self {
        points.sort_by(lex);
        PointSetWindow {
            dim,
            points,
            window,
            radius,
            spec,
            motion: Isometry::identity(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `x + P`, with the window moved along.
    pub fn translate(&self, v: Point<S>) -> Self {
        self.transform(&Isometry::translate(v))
    }

    /// `gP`; the window becomes the bounding box of the moved window.
    pub fn transform(&self, g: &Isometry<S>) -> Self {
        let mut points: Vec<_> = self.points.iter().map(|&p| g.apply(p)).collect();
        points.sort_by(lex);
        let window = if g.rotation.is_identity() {
            self.window.translate(g.translation)
        } else {
            let w = self.window;
            let corners = [w.lo, w.hi(), Point::new(w.lo.x, w.hi().y), Point::new(w.hi().x, w.lo.y)];
            let moved: Vec<_> = corners.iter().map(|&c| g.apply(c)).collect();
            let (lo, hi) = crate::geom::poly::bounds(&moved);
            Aabb::new(self.dim, lo, hi - lo)
        };
        PointSetWindow {
            points,
            window,
            motion: g.compose(&self.motion),
            ..self.clone()
        }
    }

    /// Points inside a sub-window.
    pub fn restrict(&self, window: &Aabb<S>) -> Self {
        let points = self.points.iter().copied().filter(|p| window.contains(*p)).collect();
        PointSetWindow {
            points,
            window: *window,
            ..self.clone()
        }
    }

    pub fn to_f64(&self) -> PointSetWindow<f64> {
        PointSetWindow {
            dim: self.dim,
            points: self.points.iter().map(|p| p.to_f64()).collect(),
            window: self.window.to_f64(),
            radius: self.radius.to_f64(),
            spec: self.spec.clone(),
            motion: self.motion.to_f64(),
        }
    }

    /// Checks the declared radius: all pairwise distances at least `2 radius`.
    pub fn check_discrete(&self) -> bool {
        let two_r = self.radius * S::from_int(2);
        let lim = two_r * two_r;
        if self.dim == 1 {
            return self.points.windows(2).all(|w| w[0].dist2(w[1]) >= lim);
        }
        let idx = crate::index::GridIndex::new(&self.points, (2.0 * self.radius.to_f64()).max(1e-6));
        self.points.iter().enumerate().all(|(i, p)| {
            idx.within(p.to_f64(), 2.0 * self.radius.to_f64() + 1e-9)
                .into_iter()
                .all(|j| j == i || self.points[j].dist2(*p) >= lim)
        })
    }
}

/// 2-adic valuation of a nonzero integer.
pub fn two_adic_valuation(k: i64) -> u32 {
    k.trailing_zeros()
}

/// `p_k = k + 2^{-(t(k)+1)}` with `p_0 = 0`.
pub fn two_adic_point(k: i64) -> Q {
    if k == 0 {
        return Q::from_integer(0);
    }
    let t = two_adic_valuation(k);
    Q::from_integer(k as i128) + crate::geom::pow2(-(t as i32 + 1))
}

fn int_range<S: Scalar>(lo: S, hi: S, pad: i64) -> std::ops::RangeInclusive<i64> {
    (lo.to_f64().floor() as i64 - pad)..=(hi.to_f64().ceil() as i64 + pad)
}

/// Realizes a generator inside a bounded window.
pub fn realize<S: Scalar>(spec: &GeneratorSpec, window: &Aabb<S>) -> Result<PointSetWindow<S>> {
    let dim = spec.dim();
    if window.dim != dim {
        return Err(Error::Dimension(format!(
            "generator has dimension {dim}, window {}",
            window.dim
        )));
    }
    let finite = window
        .sides()
        .iter()
        .chain([window.lo.x, window.lo.y].iter())
        .all(|v| v.to_f64().is_finite());
    if !finite || window.sides().iter().any(|s| *s < S::zero()) {
        return Err(Error::InvalidInput("window must be bounded and nonempty".into()));
    }
    let (lo, hi) = (window.lo, window.hi());
    let half = S::from_frac(1, 2);
    let (points, radius): (Vec<Point<S>>, S) = match spec {
        GeneratorSpec::IntegerLattice { dim: 1 } => {
            let pts = int_range(lo.x, hi.x, 0)
                .map(|n| Point::on_line(S::from_int(n)))
                .collect();
            (pts, half)
        }
        GeneratorSpec::IntegerLattice { dim: 2 } => {
            let mut pts = Vec::new();
            for x in int_range(lo.x, hi.x, 0) {
                for y in int_range(lo.y, hi.y, 0) {
                    pts.push(Point::new(S::from_int(x), S::from_int(y)));
                }
            }
            (pts, half)
        }
        GeneratorSpec::IntegerLattice { dim } => {
            return Err(Error::InvalidInput(format!("lattice dimension {dim} unsupported")))
        }
        GeneratorSpec::TwoAdic | GeneratorSpec::TwoAdicPunctured => {
            let skip0 = matches!(spec, GeneratorSpec::TwoAdicPunctured);
            let pts = int_range(lo.x, hi.x, 1)
                .filter(|&k| !(skip0 && k == 0))
                .map(|k| Point::on_line(S::from_q(two_adic_point(k))))
                .collect();
            (pts, S::from_frac(1, 4))
        }
        GeneratorSpec::BohrModulated { f } => {
            f.validate()?;
            let mut pts = Vec::new();
            for n in int_range(lo.x, hi.x, 1) {
                let v = n as f64 + f.eval(n as f64);
                let v = S::from_f64(v).ok_or_else(|| {
                    Error::ExactRequired("Bohr-modulated sets are floating; use an f64 window".into())
                })?;
                pts.push(Point::on_line(v));
            }
            // gaps are at least 1 - 2/3, so open balls of radius 1/6 hold one point
            (pts, S::from_frac(1, 6))
        }
        GeneratorSpec::HalfLineDefect => {
            let mut pts = Vec::new();
            for n in int_range(lo.x, hi.x, 0) {
                pts.push(Point::on_line(S::from_int(n)));
            }
            let pts = pts.into_iter().filter(|p| p.x < S::zero() || is_even(p.x)).collect();
            (pts, half)
        }
        GeneratorSpec::DecoratedTiling { rule, level } => {
            let (pts, r) = crate::decorate::realize_decorated::<S>(rule, *level, window)?;
            (pts, r)
        }
    };
    let points = points.into_iter().filter(|p| window.contains(*p)).collect();
    Ok(PointSetWindow::from_points(dim, points, *window, radius, spec.clone()))
}

fn is_even<S: Scalar>(x: S) -> bool {
    let v = x.to_f64();
    v.rem_euclid(2.0) == 0.0
}

/// Sorted consecutive differences of a one-dimensional window.
pub fn neighbor_gap_spectrum<S: Scalar>(p: &PointSetWindow<S>) -> Result<Vec<S>> {
    if p.dim != 1 {
        return Err(Error::Dimension("gap spectrum needs d = 1".into()));
    }
    if p.points.len() < 2 {
        return Err(Error::InvalidInput("fewer than two points".into()));
    }
    let mut gaps: Vec<S> = p.points.windows(2).map(|w| w[1].x - w[0].x).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(gaps)
}

/// Whether `q` lies in the open thickening `(P)_eps`.
pub fn thickening_contains<S: Scalar>(p: &PointSetWindow<S>, q: Point<S>, eps: S) -> Result<bool> {
    if !(eps > S::zero()) {
        return Err(Error::InvalidInput("thickening needs eps > 0".into()));
    }
    let e2 = eps * eps;
    Ok(p.points.iter().any(|&x| x.dist2(q) < e2))
}
