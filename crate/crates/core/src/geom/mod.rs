//! Points, rotations, Euclidean motions and boxes in dimension one or two.
//!
//! A point is stored as a pair of coordinates; one-dimensional data lives on
//! the first axis with a zero second coordinate. Exact data uses [`Q`],
//! floating data `f64`; the scalar type is a type parameter so the two never
//! mix implicitly.

pub mod poly;
mod scalar;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use scalar::{dyadic_floor, exact_sqrt, pow2, Scalar, Q};

/// A point (or vector) of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Point { x, y }
    }

    /// Point on the first axis.
    pub fn on_line(x: S) -> Self {
        Point { x, y: S::zero() }
    }

    pub fn origin() -> Self {
        Point::new(S::zero(), S::zero())
    }

    pub fn norm2(self) -> S {
        self.x * self.x + self.y * self.y
    }

    pub fn dist2(self, other: Self) -> S {
        (self - other).norm2()
    }

    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> S {
        self.x * other.y - self.y * other.x
    }

    /// Complex multiplication, viewing points as `x + iy`.
    pub fn cmul(self, other: Self) -> Self {
        Point::new(self.x * other.x - self.y * other.y, self.x * other.y + self.y * other.x)
    }

    /// Complex division; `None` for division by zero.
    pub fn cdiv(self, other: Self) -> Option<Self> {
        let n = other.norm2();
        if n == S::zero() {
            return None;
        }
        let p = self.cmul(other.conj());
        Some(Point::new(p.x / n, p.y / n))
    }

    pub fn conj(self) -> Self {
        Point::new(self.x, -self.y)
    }

    pub fn scale(self, s: S) -> Self {
        Point::new(self.x * s, self.y * s)
    }

    pub fn to_f64(self) -> Point<f64> {
        Point::new(self.x.to_f64(), self.y.to_f64())
    }

    pub fn norm_f64(self) -> f64 {
        self.to_f64().norm2().sqrt()
    }
}

impl Point<f64> {
    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, other: Self) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl<S: Scalar> Add for Point<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl<S: Scalar> Sub for Point<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl<S: Scalar> Neg for Point<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Point::new(-self.x, -self.y)
    }
}

impl<S: Scalar> Mul<S> for Point<S> {
    type Output = Self;
    fn mul(self, s: S) -> Self {
        self.scale(s)
    }
}

/// Element of O(2): multiplication by a unit complex number, optionally
/// preceded by complex conjugation (a reflection in the first axis).
///
/// Exact rotations carry rational `(cos, sin)` with `cos^2 + sin^2 = 1`
/// checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rotation<S> {
    pub cos: S,
    pub sin: S,
    pub reflect: bool,
}

impl<S: Scalar> Rotation<S> {
    pub fn identity() -> Self {
        Rotation {
            cos: S::one(),
            sin: S::zero(),
            reflect: false,
        }
    }

    /// Rotation by `i^j` (a quarter-turn power), exact in every scalar type.
    pub fn quarter_turns(j: i64) -> Self {
        let (c, s) = match j.rem_euclid(4) {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        };
        Rotation {
            cos: S::from_int(c),
            sin: S::from_int(s),
            reflect: false,
        }
    }

    /// Builds a rotation from a unit complex number; fails unless the
    /// modulus is one (exactly for rationals, to 1e-9 for floats).
    pub fn from_unit(unit: Point<S>, reflect: bool) -> Result<Self> {
        let n = unit.norm2();
        let ok = if S::EXACT {
            n == S::one()
        } else {
            (n.to_f64() - 1.0).abs() < 1e-9
        };
        if !ok {
            return Err(Error::NotUnit(format!("{:?}", unit)));
        }
        Ok(Rotation {
            cos: unit.x,
            sin: unit.y,
            reflect,
        })
    }

    pub fn unit(&self) -> Point<S> {
        Point::new(self.cos, self.sin)
    }

    /// The reflection `m -> conj(m)`.
    pub fn conjugation() -> Self {
        Rotation {
            reflect: true,
            ..Self::identity()
        }
    }

    pub fn apply(&self, p: Point<S>) -> Point<S> {
        let p = if self.reflect { p.conj() } else { p };
        self.unit().cmul(p)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let u2 = if self.reflect {
            other.unit().conj()
        } else {
            other.unit()
        };
        let u = self.unit().cmul(u2);
        Rotation {
            cos: u.x,
            sin: u.y,
            reflect: self.reflect ^ other.reflect,
        }
    }

    pub fn inverse(&self) -> Self {
        if self.reflect {
            *self
        } else {
            Rotation {
                cos: self.cos,
                sin: -self.sin,
                reflect: false,
            }
        }
    }

    /// Angle of the unit part in `(-pi, pi]`.
    pub fn angle(&self) -> f64 {
        let a = self.sin.to_f64().atan2(self.cos.to_f64());
        if a <= -PI {
            PI
        } else {
            a
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.reflect && self.cos == S::one() && self.sin == S::zero()
    }

    pub fn to_f64(&self) -> Rotation<f64> {
        Rotation {
            cos: self.cos.to_f64(),
            sin: self.sin.to_f64(),
            reflect: self.reflect,
        }
    }
}

impl Rotation<f64> {
    pub fn from_angle(theta: f64) -> Self {
        Rotation {
            cos: theta.cos(),
            sin: theta.sin(),
            reflect: false,
        }
    }
}

impl Rotation<Q> {
    /// The exact unit `(p + qi) / (2 + i)^k * i^j`, with `p^2 + q^2 = 5^k`.
    pub fn gaussian(p: i64, q: i64, k: u32, j: i64) -> Result<Self> {
        let five_k = 5i128.checked_pow(k).ok_or(Error::Overflow)?;
        if (p as i128) * (p as i128) + (q as i128) * (q as i128) != five_k {
            return Err(Error::NotUnit(format!("({p}+{q}i)/(2+i)^{k}: |p+qi|^2 != 5^{k}")));
        }
        // 1/(2+i)^k = (2-i)^k / 5^k
        let mut conj_pow = Point::new(Q::from_integer(1), Q::from_integer(0));
        let two_minus_i = Point::new(Q::from_integer(2), Q::from_integer(-1));
        for _ in 0..k {
            conj_pow = conj_pow.cmul(two_minus_i);
        }
        let num = Point::new(Q::from_integer(p as i128), Q::from_integer(q as i128));
        let u = num.cmul(conj_pow).scale(Q::new(1, five_k));
        let u = u.cmul(Rotation::<Q>::quarter_turns(j).unit());
        Rotation::from_unit(u, false)
    }
}

/// Distance of a rotation to the identity: the absolute angle for proper
/// rotations, `pi` for reflections.
pub fn rotation_distance<S: Scalar>(r: &Rotation<S>) -> f64 {
    if r.reflect {
        PI
    } else {
        r.angle().abs()
    }
}

/// Whether an exact unit is a root of unity. The only roots of unity with
/// rational real and imaginary parts are `±1, ±i`; any other exact unit
/// rotates by an irrational multiple of `pi`.
pub fn unit_is_root_of_unity(r: &Rotation<Q>) -> Result<bool> {
    let u = r.unit();
    if u.norm2() != Q::from_integer(1) {
        return Err(Error::NotUnit(format!("{:?}", u)));
    }
    let zero = Q::from_integer(0);
    Ok(u.x == zero || u.y == zero)
}

/// Euclidean motion `m -> translation + rotation · m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Isometry<S> {
    pub translation: Point<S>,
    pub rotation: Rotation<S>,
}

impl<S: Scalar> Isometry<S> {
    pub fn identity() -> Self {
        Isometry {
            translation: Point::origin(),
            rotation: Rotation::identity(),
        }
    }

    pub fn translate(v: Point<S>) -> Self {
        Isometry {
            translation: v,
            rotation: Rotation::identity(),
        }
    }

    pub fn new(translation: Point<S>, rotation: Rotation<S>) -> Self {
        Isometry { translation, rotation }
    }

    /// Rotation about `center`.
    pub fn rotate_about(center: Point<S>, rotation: Rotation<S>) -> Self {
        Isometry {
            translation: center - rotation.apply(center),
            rotation,
        }
    }

    pub fn apply(&self, p: Point<S>) -> Point<S> {
        self.translation + self.rotation.apply(p)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Isometry {
            translation: self.translation + self.rotation.apply(other.translation),
            rotation: self.rotation.compose(&other.rotation),
        }
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.inverse();
        Isometry {
            translation: -r.apply(self.translation),
            rotation: r,
        }
    }

    pub fn to_f64(&self) -> Isometry<f64> {
        Isometry {
            translation: self.translation.to_f64(),
            rotation: self.rotation.to_f64(),
        }
    }
}

/// Applies `g` to `p`, rejecting points of the wrong dimension: a
/// one-dimensional point set only admits motions preserving the line.
pub fn isometry_apply<S: Scalar>(g: &Isometry<S>, p: Point<S>, dim: usize) -> Result<Point<S>> {
    if dim == 1 {
        let keeps_line = g.translation.y == S::zero() && g.rotation.sin == S::zero();
        if !keeps_line || p.y != S::zero() {
            return Err(Error::Dimension("motion does not preserve the line".into()));
        }
    }
    Ok(g.apply(p))
}

/// Axis-aligned box `[lo, lo + side]` in dimension one or two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Aabb<S> {
    pub dim: usize,
    pub lo: Point<S>,
    pub side: Point<S>,
}

impl<S: Scalar> Aabb<S> {
    pub fn new(dim: usize, lo: Point<S>, side: Point<S>) -> Self {
        Aabb { dim, lo, side }
    }

    pub fn interval(lo: S, hi: S) -> Self {
        Aabb {
            dim: 1,
            lo: Point::on_line(lo),
            side: Point::on_line(hi - lo),
        }
    }

    /// Square `[c - h, c + h]^2`.
    pub fn centered_square(center: Point<S>, half: S) -> Self {
        let two = S::from_int(2);
        Aabb {
            dim: 2,
            lo: center - Point::new(half, half),
            side: Point::new(half * two, half * two),
        }
    }

    /// Centered cube of half-side `half` in dimension `dim`.
    pub fn centered(dim: usize, half: S) -> Self {
        if dim == 1 {
            Aabb::interval(-half, half)
        } else {
            Aabb::centered_square(Point::origin(), half)
        }
    }

    pub fn hi(&self) -> Point<S> {
        self.lo + self.side
    }

    pub fn sides(&self) -> Vec<S> {
        if self.dim == 1 {
            vec![self.side.x]
        } else {
            vec![self.side.x, self.side.y]
        }
    }

    pub fn volume(&self) -> S {
        self.sides().into_iter().fold(S::one(), |a, b| a * b)
    }

    pub fn center(&self) -> Point<S> {
        let half = S::from_frac(1, 2);
        let c = self.lo + self.side.scale(half);
        if self.dim == 1 {
            Point::on_line(c.x)
        } else {
            c
        }
    }

    /// Width: the smallest side length.
    pub fn width(&self) -> S {
        self.sides().into_iter().fold(self.side.x, |a, b| a.min_of(b))
    }

    /// Closed containment.
    pub fn contains(&self, p: Point<S>) -> bool {
        let hi = self.hi();
        let in_x = p.x >= self.lo.x && p.x <= hi.x;
        if self.dim == 1 {
            in_x
        } else {
            in_x && p.y >= self.lo.y && p.y <= hi.y
        }
    }

    pub fn contains_box(&self, other: &Aabb<S>) -> bool {
        self.contains(other.lo) && self.contains(other.hi())
    }

    /// Box grown by `m` on every side.
    pub fn expand(&self, m: S) -> Self {
        let two = S::from_int(2);
        if self.dim == 1 {
            Aabb {
                dim: 1,
                lo: Point::on_line(self.lo.x - m),
                side: Point::on_line(self.side.x + m * two),
            }
        } else {
            Aabb {
                dim: 2,
                lo: self.lo - Point::new(m, m),
                side: self.side + Point::new(m * two, m * two),
            }
        }
    }

    pub fn translate(&self, v: Point<S>) -> Self {
        Aabb {
            dim: self.dim,
            lo: self.lo + v,
            side: self.side,
        }
    }

    /// Largest `s` with the closed ball `B_s(p)` inside the box (0 when outside).
    pub fn inner_radius_at(&self, p: Point<S>) -> S {
        let hi = self.hi();
        let mut r = (p.x - self.lo.x).min_of(hi.x - p.x);
        if self.dim == 2 {
            r = r.min_of(p.y - self.lo.y).min_of(hi.y - p.y);
        }
        r.max_of(S::zero())
    }

    pub fn to_f64(&self) -> Aabb<f64> {
        Aabb {
            dim: self.dim,
            lo: self.lo.to_f64(),
            side: self.side.to_f64(),
        }
    }
}

/// Box whose side lengths all lie in `[u, 2u]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquarishBox<S> {
    pub bx: Aabb<S>,
    pub class_u: S,
}

impl<S: Scalar> SquarishBox<S> {
    pub fn new(bx: Aabb<S>, class_u: S) -> Result<Self> {
        if !(class_u > S::zero()) {
            return Err(Error::InvalidInput("squarish class parameter must be positive".into()));
        }
        let two_u = class_u * S::from_int(2);
        if bx.sides().into_iter().any(|l| l < class_u || l > two_u) {
            return Err(Error::InvalidInput(format!(
                "box sides {:?} not in [U, 2U]",
                bx.sides()
            )));
        }
        Ok(SquarishBox { bx, class_u })
    }

    pub fn in_class(bx: &Aabb<S>, u: S) -> bool {
        let two_u = u * S::from_int(2);
        bx.sides().into_iter().all(|l| l >= u && l <= two_u)
    }
}

/// Bounded support region of a pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region<S> {
    Ball { center: Point<S>, radius: S },
    Box(Aabb<S>),
}

impl<S: Scalar> Region<S> {
    pub fn ball(center: Point<S>, radius: S) -> Self {
        Region::Ball { center, radius }
    }

    /// Closed containment.
    pub fn contains(&self, p: Point<S>) -> bool {
        match self {
            Region::Ball { center, radius } => p.dist2(*center) <= *radius * *radius,
            Region::Box(b) => b.contains(p),
        }
    }

    pub fn translate(&self, v: Point<S>) -> Self {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: *center + v,
                radius: *radius,
            },
            Region::Box(b) => Region::Box(b.translate(v)),
        }
    }

    pub fn center(&self) -> Point<S> {
        match self {
            Region::Ball { center, .. } => *center,
            Region::Box(b) => b.center(),
        }
    }

    /// Radius of the smallest ball about `center()` containing the region.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => radius.to_f64(),
            Region::Box(b) => b.side.to_f64().norm() / 2.0,
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self, dim: usize) -> Aabb<S> {
        match self {
            Region::Ball { center, radius } => {
                if dim == 1 {
                    Aabb::interval(center.x - *radius, center.x + *radius)
                } else {
                    Aabb::centered_square(*center, *radius)
                }
            }
            Region::Box(b) => *b,
        }
    }

    pub fn to_f64(&self) -> Region<f64> {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: center.to_f64(),
                radius: radius.to_f64(),
            },
            Region::Box(b) => Region::Box(b.to_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    fn pq(x: i128, y: i128) -> Point<Q> {
        Point::new(Q::from_integer(x), Q::from_integer(y))
    }

    #[test]
    fn apply_identity_and_translation() {
        let p = pq(3, 4);
        assert_eq!(Isometry::identity().apply(p), p);
        assert_eq!(Isometry::translate(pq(1, 0)).apply(pq(0, 0)), pq(1, 0));
    }

    #[test]
    fn gaussian_unit_one_with_translation() {
        // (2+i)/(2+i)^1 = 1
        let r = Rotation::gaussian(2, 1, 1, 0).unwrap();
        assert!(r.is_identity());
        let g = Isometry::new(pq(2, 1), r);
        assert_eq!(g.apply(Point::origin()), pq(2, 1));
    }

    #[test]
    fn gaussian_rejects_non_units() {
        assert!(Rotation::gaussian(2, 2, 1, 0).is_err());
        assert!(Rotation::gaussian(3, 4, 1, 0).is_err());
    }

    #[test]
    fn compose_and_invert_translations() {
        let a = Isometry::translate(pq(1, 0));
        let b = Isometry::translate(pq(2, 0));
        assert_eq!(a.compose(&b), Isometry::translate(pq(3, 0)));
        assert_eq!(Isometry::translate(pq(1, 2)).inverse(), Isometry::translate(pq(-1, -2)));
    }

    #[test]
    fn opposite_rotations_cancel() {
        let r = Rotation::from_angle(0.3);
        let s = Rotation::from_angle(-0.3);
        let c = r.compose(&s);
        assert!((c.cos - 1.0).abs() < 1e-15 && c.sin.abs() < 1e-15);
    }

    #[test]
    fn rotation_distance_examples() {
        assert_eq!(rotation_distance(&Rotation::<Q>::identity()), 0.0);
        assert!((rotation_distance(&Rotation::from_angle(0.1)) - 0.1).abs() < 1e-15);
        let u = Rotation::from_unit(Point::new(q(3, 5), q(4, 5)), false).unwrap();
        assert!((rotation_distance(&u) - (4.0f64).atan2(3.0)).abs() < 1e-15);
        assert!((rotation_distance(&u) - 0.9273).abs() < 1e-4);
        assert_eq!(rotation_distance(&Rotation::<f64>::conjugation()), PI);
    }

    #[test]
    fn roots_of_unity() {
        assert!(unit_is_root_of_unity(&Rotation::quarter_turns(1)).unwrap());
        assert!(unit_is_root_of_unity(&Rotation::identity()).unwrap());
        let u = Rotation::from_unit(Point::new(q(3, 5), q(4, 5)), false).unwrap();
        assert!(!unit_is_root_of_unity(&u).unwrap());
        let bad = Rotation {
            cos: q(1, 2),
            sin: q(0, 1),
            reflect: false,
        };
        assert!(unit_is_root_of_unity(&bad).is_err());
    }

    #[test]
    fn line_motions_only_in_one_dimension() {
        let g = Isometry::new(pq(0, 1), Rotation::identity());
        assert!(isometry_apply(&g, pq(1, 0), 1).is_err());
        let h = Isometry::new(pq(2, 0), Rotation::quarter_turns(2));
        assert_eq!(isometry_apply(&h, pq(1, 0), 1).unwrap(), pq(1, 0));
    }

    #[test]
    fn squarish_class_check() {
        let b = Aabb::new(2, pq(0, 0), pq(3, 4));
        assert!(SquarishBox::new(b, Q::from_integer(2)).is_ok());
        assert!(SquarishBox::new(b, Q::from_integer(1)).is_err());
    }

    fn unit_strategy() -> impl Strategy<Value = Rotation<Q>> {
        // Pythagorean units (a^2 - b^2, 2ab) / (a^2 + b^2), times i^j, maybe reflected.
        (1i128..6, 0i128..6, 0i64..4, any::<bool>()).prop_map(|(a, b, j, refl)| {
            let n = a * a + b * b;
            let u = Point::new(q(a * a - b * b, n), q(2 * a * b, n));
            let r = Rotation::from_unit(u, refl).unwrap();
            r.compose(&Rotation::quarter_turns(j))
        })
    }

    fn iso_strategy() -> impl Strategy<Value = Isometry<Q>> {
        (-20i128..20, -20i128..20, 1i128..5, unit_strategy())
            .prop_map(|(x, y, d, r)| Isometry::new(Point::new(q(x, d), q(y, d)), r))
    }

    proptest! {
        #[test]
        fn group_laws_exact(g in iso_strategy(), h in iso_strategy(), k in iso_strategy(),
                            x in -30i128..30, y in -30i128..30) {
            let p = Point::new(q(x, 3), q(y, 7));
            prop_assert_eq!(g.compose(&h).compose(&k).apply(p), g.compose(&h.compose(&k)).apply(p));
            prop_assert_eq!(g.compose(&h).apply(p), g.apply(h.apply(p)));
            prop_assert_eq!(g.compose(&g.inverse()), Isometry::identity());
            prop_assert_eq!(g.inverse().compose(&g), Isometry::identity());
        }

        #[test]
        fn motions_preserve_distance(g in iso_strategy(), a in -9i128..9, b in -9i128..9,
                                      c in -9i128..9, d in -9i128..9) {
            let p = Point::new(q(a, 2), q(b, 3));
            let r = Point::new(q(c, 5), q(d, 1));
            prop_assert_eq!(g.apply(p).dist2(g.apply(r)), p.dist2(r));
            let gf = g.to_f64();
            let (pf, rf) = (p.to_f64(), r.to_f64());
            prop_assert!((gf.apply(pf).dist(gf.apply(rf)) - pf.dist(rf)).abs() < 1e-12);
        }

        #[test]
        fn angle_metric_triangle(a in -3.1f64..3.1, b in -3.1f64..3.1) {
            let r = Rotation::from_angle(a);
            let s = Rotation::from_angle(b);
            let lhs = rotation_distance(&r.compose(&s));
            prop_assert!(lhs <= rotation_distance(&r) + rotation_distance(&s) + 1e-12);
        }

        #[test]
        fn exact_units_closed_under_products(r in unit_strategy(), s in unit_strategy()) {
            let c = r.compose(&s);
            prop_assert_eq!(c.unit().norm2(), Q::from_integer(1));
        }
    }
}
