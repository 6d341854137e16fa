//! Squarish box decompositions, van Hove boundaries, weight functions,
//! local densities and Birkhoff averages.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Isometry, Point, Rotation, Scalar, SquarishBox};
use crate::pointset::PointSetWindow;

/// Splits each side `L` of `b` into `⌈L/2U⌉` equal parts.
pub fn squarish_decompose<S: Scalar>(b: &Aabb<S>, w: S, u: S) -> Result<Vec<SquarishBox<S>>> {
    if u > w {
        return Err(Error::InvalidInput("U must not exceed W".into()));
    }
    if !SquarishBox::in_class(b, w) {
        return Err(Error::InvalidInput(format!("box sides {:?} not in [W, 2W]", b.sides())));
    }
    let two_u = u * S::from_int(2);
    let parts = |l: S| -> i64 {
        let mut n = (l.to_f64() / two_u.to_f64()).ceil().max(1.0) as i64;
        while S::from_int(n) * two_u < l {
            n += 1;
        }
        while n > 1 && S::from_int(n - 1) * two_u >= l {
            n -= 1;
        }
        n
    };
    let nx = parts(b.side.x);
    let ny = if b.dim == 1 { 1 } else { parts(b.side.y) };
    let sx = b.side.x / S::from_int(nx);
    let sy = if b.dim == 1 {
        S::zero()
    } else {
        b.side.y / S::from_int(ny)
    };
    let mut out = Vec::with_capacity((nx * ny) as usize);
    for i in 0..nx {
        for j in 0..ny {
            let lo = Point::new(b.lo.x + sx * S::from_int(i), b.lo.y + sy * S::from_int(j));
            out.push(SquarishBox::new(Aabb::new(b.dim, lo, Point::new(sx, sy)), u)?);
        }
    }
    Ok(out)
}

/// `vol(∂^K B)` for the centered cube `K` of half-side `s`.
pub fn van_hove_boundary_volume<S: Scalar>(b: &Aabb<S>, s: S) -> S {
    let two_s = s * S::from_int(2);
    let (outer, inner) = b.sides().into_iter().fold((S::one(), S::one()), |(o, i), l| {
        (o * (l + two_s), i * (l - two_s).max_of(S::zero()))
    });
    outer - inner
}

/// Built-in test functionals `f` on point sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightFunctionSpec {
    Constant {
        c: f64,
    },
    /// `Σ_p bump(|p|)` with `bump = 1` on `[0, w]`, a `cos²` ramp on
    /// `[w, w + b]` and 0 beyond.
    SmoothedCount {
        w: f64,
        b: f64,
    },
    /// Number of points in the half-open cube `[-h, h)^d` (not continuous).
    Count {
        half: f64,
    },
}

impl WeightFunctionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            WeightFunctionSpec::Constant { c } => c.is_finite(),
            WeightFunctionSpec::SmoothedCount { w, b } => *w >= 0.0 && *b > 0.0,
            WeightFunctionSpec::Count { half } => *half > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad test function {self:?}")))
        }
    }

    /// Radius outside which points do not matter.
    pub fn support(&self) -> f64 {
        match self {
            WeightFunctionSpec::Constant { .. } => 0.0,
            WeightFunctionSpec::SmoothedCount { w, b } => w + b,
            WeightFunctionSpec::Count { half } => half * std::f64::consts::SQRT_2,
        }
    }

    fn bump(&self, d: f64) -> f64 {
        match self {
            WeightFunctionSpec::SmoothedCount { w, b } => {
                if d <= *w {
                    1.0
                } else if d >= w + b {
                    0.0
                } else {
                    (PI * (d - w) / (2.0 * b)).cos().powi(2)
                }
            }
            _ => 0.0,
        }
    }

    /// `f(P)` evaluated at the origin.
    pub fn eval(&self, dim: usize, pts: &[Point<f64>]) -> f64 {
        match self {
            WeightFunctionSpec::Constant { c } => *c,
            WeightFunctionSpec::SmoothedCount { .. } => pts.iter().map(|p| self.bump(p.norm())).sum(),
            WeightFunctionSpec::Count { half } => pts
                .iter()
                .filter(|p| -half <= p.x && p.x < *half && (dim == 1 || (-half <= p.y && p.y < *half)))
                .count() as f64,
        }
    }

    /// `C_P = sup |f|` over sets of packing radius `r`.
    pub fn bound(&self, dim: usize, r: f64) -> f64 {
        let count = |rad: f64| ((rad + r) / r).powi(dim as i32).floor();
        match self {
            WeightFunctionSpec::Constant { c } => c.abs(),
            WeightFunctionSpec::SmoothedCount { .. } => count(self.support()),
            WeightFunctionSpec::Count { .. } => count(self.support()),
        }
    }

    /// A `δ` with `|f(P) − f(Q)| ≤ ε` whenever `d_LR(P, Q) < δ`, for sets of
    /// packing radius `r`; `None` for discontinuous functionals.
    pub fn modulus(&self, dim: usize, r: f64, eps: f64) -> Option<f64> {
        match self {
            WeightFunctionSpec::Constant { .. } => Some(std::f64::consts::FRAC_1_SQRT_2),
            WeightFunctionSpec::SmoothedCount { b, .. } => {
                // points within the support move by less than δ and pair up
                // one to one once δ < r; the bump is π/(2b)-Lipschitz
                let n = count_bound(dim, self.support() + r, r);
                let lip = PI / (2.0 * b);
                let d = (eps / (2.0 * n * lip)).min(r).min(1.0 / (self.support() + 1.0));
                Some(d)
            }
            WeightFunctionSpec::Count { .. } => None,
        }
    }

    /// `∫ bump(|u|) du` over all of `R^d`.
    fn full_integral(&self, dim: usize) -> f64 {
        match self {
            WeightFunctionSpec::SmoothedCount { w, b } if dim == 1 => 2.0 * w + b,
            WeightFunctionSpec::SmoothedCount { w, b } => PI * w * w + PI * w * b + PI * b * b / 2.0 - 2.0 * b * b / PI,
            _ => 0.0,
        }
    }

    /// `∫_lo^hi bump(|t|) dt` in closed form.
    fn line_integral(&self, lo: f64, hi: f64) -> f64 {
        let WeightFunctionSpec::SmoothedCount { w, b } = self else {
            return 0.0;
        };
        // antiderivative of bump on [0, ∞)
        let g = |t: f64| {
            if t <= *w {
                t
            } else if t >= w + b {
                w + b / 2.0
            } else {
                let s = t - w;
                w + s / 2.0 + b / (2.0 * PI) * (PI * s / b).sin()
            }
        };
        let anti = |t: f64| if t >= 0.0 { g(t) } else { -g(-t) };
        anti(hi) - anti(lo)
    }
}

fn count_bound(dim: usize, rad: f64, r: f64) -> f64 {
    ((rad + r) / r).powi(dim as i32).floor()
}

/// A weight with its quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub value: f64,
    pub error: f64,
}

fn check_cover(p: &PointSetWindow<f64>, b: &Aabb<f64>, margin: f64) -> Result<()> {
    if !p.window.contains_box(&b.expand(margin)) {
        return Err(Error::Margin(format!("window does not cover the box plus {margin:.3}")));
    }
    Ok(())
}

/// `w_P(B) = ∫_B f(x⁻¹P) dx`. By linearity this is a sum over points of the
/// integral of `f` centered at the point; points whose support lies inside
/// `B` contribute the closed-form total, the others are integrated on the
/// midpoint grid of step `h` (exactly in d = 1).
pub fn weight(f: &WeightFunctionSpec, p: &PointSetWindow<f64>, b: &Aabb<f64>, h: f64) -> Result<Weight> {
    f.validate()?;
    if !(h > 0.0) {
        return Err(Error::InvalidInput("quadrature step must be positive".into()));
    }
    let sup = f.support();
    check_cover(p, b, sup)?;
    let dim = p.dim;
    match f {
        WeightFunctionSpec::Constant { c } => {
            return Ok(Weight {
                value: c * b.volume(),
                error: 0.0,
            })
        }
        WeightFunctionSpec::Count { half } => {
            // x with p - x in [-h, h)^d is the box (p - h, p + h]^d
            let hi = b.hi();
            let overlap = |lo: f64, hi: f64, a: f64| (hi.min(a + half) - lo.max(a - half)).max(0.0);
            let value = p
                .points
                .iter()
                .map(|q| {
                    let ox = overlap(b.lo.x, hi.x, q.x);
                    if dim == 1 {
                        ox
                    } else {
                        ox * overlap(b.lo.y, hi.y, q.y)
                    }
                })
                .sum();
            return Ok(Weight { value, error: 0.0 });
        }
        WeightFunctionSpec::SmoothedCount { .. } => {}
    }
    let full = f.full_integral(dim);
    let inner = b.expand(-sup);
    let nx = (b.side.x / h).ceil().max(1.0) as usize;
    let ny = if dim == 1 {
        1
    } else {
        (b.side.y / h).ceil().max(1.0) as usize
    };
    let (hx, hy) = (b.side.x / nx as f64, if dim == 1 { 0.0 } else { b.side.y / ny as f64 });
    let near: Vec<Point<f64>> = p
        .points
        .iter()
        .copied()
        .filter(|q| b.expand(sup).contains(*q))
        .collect();
    let parts: Vec<(f64, bool)> = near
        .par_iter()
        .map(|&q| {
            let interior = inner.side.x > 0.0 && (dim == 1 || inner.side.y > 0.0) && inner.contains(q);
            if interior {
                return (full, false);
            }
            if dim == 1 {
                return (f.line_integral(b.lo.x - q.x, b.hi().x - q.x), false);
            }
            // midpoint cells of B within the support of q
            let i0 = (((q.x - sup - b.lo.x) / hx).floor().max(0.0)) as usize;
            let i1 = (((q.x + sup - b.lo.x) / hx).ceil().max(0.0) as usize).min(nx);
            let j0 = (((q.y - sup - b.lo.y) / hy).floor().max(0.0)) as usize;
            let j1 = (((q.y + sup - b.lo.y) / hy).ceil().max(0.0) as usize).min(ny);
            let mut s = 0.0;
            for i in i0..i1 {
                let x = b.lo.x + (i as f64 + 0.5) * hx;
                for j in j0..j1 {
                    let y = b.lo.y + (j as f64 + 0.5) * hy;
                    s += f.bump(Point::new(x, y).dist(q));
                }
            }
            (s * hx * hy, true)
        })
        .collect();
    let value = parts.iter().map(|p| p.0).sum();
    let boundary = parts.iter().filter(|p| p.1).count() as f64;
    // first order: each quadrature cell misjudges at most Lip·h·cell area
    let lip = match f {
        WeightFunctionSpec::SmoothedCount { b: bw, .. } => PI / (2.0 * bw),
        _ => 0.0,
    };
    let error = boundary * lip * hx.max(hy) * PI * sup * sup;
    Ok(Weight { value, error })
}

/// Default quadrature step: a bump width over 8.
pub fn default_step(f: &WeightFunctionSpec) -> f64 {
    match f {
        WeightFunctionSpec::SmoothedCount { b, .. } => b / 8.0,
        _ => 0.25,
    }
}

/// Seeded boxes of class `B(U)` inside the window shrunk by `margin`.
pub fn sample_boxes(window: &Aabb<f64>, u: f64, margin: f64, count: usize, seed: u64) -> Result<Vec<Aabb<f64>>> {
    let avail = window.expand(-margin);
    if avail.sides().into_iter().any(|l| l < 2.0 * u) {
        return Err(Error::Margin(format!("no box of class U = {u} fits in the window")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let sx = rng.gen_range(u..=2.0 * u);
        let sy = if window.dim == 1 {
            0.0
        } else {
            rng.gen_range(u..=2.0 * u)
        };
        let x = rng.gen_range(avail.lo.x..=avail.hi().x - sx);
        let y = if window.dim == 1 {
            0.0
        } else {
            rng.gen_range(avail.lo.y..=avail.hi().y - sy)
        };
        out.push(Aabb::new(window.dim, Point::new(x, y), Point::new(sx, sy)));
    }
    Ok(out)
}

/// Sampled `(f⁻(U), f⁺(U))`: min and max of `w_P(B)/vol(B)` over the boxes.
/// Inner bounds on the true inf and sup.
pub fn density_bounds(
    f: &WeightFunctionSpec,
    p: &PointSetWindow<f64>,
    boxes: &[Aabb<f64>],
    h: f64,
) -> Result<(f64, f64)> {
    if boxes.is_empty() {
        return Err(Error::InvalidInput("no sample boxes".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for b in boxes {
        let d = weight(f, p, b, h)?.value / b.volume();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub u: f64,
    pub lower: f64,
    pub upper: f64,
    pub boxes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub samples: Vec<DensitySample>,
    /// Midpoint of the bounds at the largest U.
    pub limit: f64,
}

impl DensityCurve {
    /// RFC-4180 CSV: `U,f_minus,f_plus,boxes`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("U,f_minus,f_plus,boxes\r\n");
        for r in &self.samples {
            s.push_str(&format!("{},{},{},{}\r\n", r.u, r.lower, r.upper, r.boxes));
        }
        s
    }
}

pub fn density_curve(
    f: &WeightFunctionSpec,
    p: &PointSetWindow<f64>,
    us: &[f64],
    count: usize,
    seed: u64,
) -> Result<DensityCurve> {
    let h = default_step(f);
    let mut samples = Vec::new();
    for (k, &u) in us.iter().enumerate() {
        let boxes = sample_boxes(&p.window, u, f.support(), count, seed.wrapping_add(k as u64))?;
        let (lower, upper) = density_bounds(f, p, &boxes, h)?;
        samples.push(DensitySample {
            u,
            lower,
            upper,
            boxes: count,
        });
    }
    let limit = samples.last().map_or(f64::NAN, |s| (s.lower + s.upper) / 2.0);
    Ok(DensityCurve { samples, limit })
}

/// The centered cube of side `2n`.
pub fn birkhoff_box(dim: usize, n: f64) -> Aabb<f64> {
    Aabb::centered(dim, n)
}

/// `J_n(f, P) = w_P(B_n)/vol(B_n)`; with angles, the mean of `J_n(f, r⁻¹P)`
/// over the rotation grid.
pub fn birkhoff_average(
    f: &WeightFunctionSpec,
    p: &PointSetWindow<f64>,
    n: f64,
    angles: Option<&[f64]>,
) -> Result<f64> {
    let b = birkhoff_box(p.dim, n);
    let h = default_step(f);
    let Some(angles) = angles else {
        return Ok(weight(f, p, &b, h)?.value / b.volume());
    };
    if p.dim != 2 {
        return Err(Error::Dimension("rotation averages need d = 2".into()));
    }
    if angles.is_empty() {
        return Err(Error::InvalidInput("empty rotation grid".into()));
    }
    let reach = n * std::f64::consts::SQRT_2 + f.support();
    if p.window.inner_radius_at(Point::origin()) < reach {
        return Err(Error::Margin(format!(
            "rotations need a disc of radius {reach:.3} in the window"
        )));
    }
    let mut total = 0.0;
    for &t in angles {
        let r = Isometry::new(Point::origin(), Rotation::from_angle(-t));
        let moved = p.transform(&r);
        total += weight(f, &moved, &b, h)?.value / b.volume();
    }
    Ok(total / angles.len() as f64)
}

/// Evenly spaced angles in `[0, 2π)`.
pub fn rotation_grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect()
}
