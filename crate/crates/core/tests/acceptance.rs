// Acceptance suites. Runs without the libtest harness so that every criterion
// prints exactly one line, passing or not.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use delone::decorate::{build_decoration, decorate, undecorate, TilingSource};
use delone::ergodic::{birkhoff_average, density_curve, rotation_grid, squarish_decompose, WeightFunctionSpec};
use delone::geom::{poly, Aabb, Isometry, Point, Region, Rotation, Scalar, SquarishBox, Q};
use delone::io::{ExperimentReport, REPORT_SCHEMA};
use delone::metrics::{
    classify_patterns, local_matching_distance, local_rubber_distance, pattern_deviation, SimilarityClass,
};
use delone::pointset::{realize, GeneratorSpec, PointSetWindow, TrigPoly};
use delone::repet::{
    integer_grid, period_set, repetitivity_curve, repetitivity_radius, sample_centers, tiling_wiggle_curve, PeriodMode,
    RepetitivityOutcome, RepetitivityQuery,
};
use delone::subst::{
    chair, check_support, dto_witness, first_overlap, is_primitive, pinwheel, substitute_n, substitution_matrix,
    supertile, DtoVerdict, SubstitutionRule, Tile,
};

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

/// Collects named sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    items: Vec<(String, bool)>,
}

impl Checks {
    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.items.push((name.into(), ok));
    }

    fn ok(&self) -> bool {
        self.items.iter().all(|(_, ok)| *ok)
    }

    fn summary(&self) -> String {
        let failed: Vec<&str> = self
            .items
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.as_str())
            .collect();
        let names: Vec<&str> = self.items.iter().map(|(n, _)| n.as_str()).collect();
        if failed.is_empty() {
            names.join("; ")
        } else {
            format!("failed: {}", failed.join("; "))
        }
    }
}

// ---------------------------------------------------------------------------
// oracles

/// `t(k)` by repeated halving.
fn valuation(mut k: i64) -> u32 {
    let mut t = 0;
    while k % 2 == 0 {
        k /= 2;
        t += 1;
    }
    t
}

fn p_k(k: i64) -> Q {
    if k == 0 {
        return qi(0);
    }
    qi(k as i128) + q(1, 1i128 << (valuation(k) + 1))
}

/// Distance from `t` to a sorted list.
fn dist_sorted(xs: &[Q], t: Q) -> Q {
    let i = xs.partition_point(|&x| x < t);
    let mut best: Option<Q> = None;
    for j in [i.wrapping_sub(1), i] {
        if let Some(&x) = xs.get(j) {
            let d = (x - t).abs();
            best = Some(best.map_or(d, |b: Q| b.min(d)));
        }
    }
    best.expect("nonempty")
}

fn orient(a: Point<Q>, b: Point<Q>, c: Point<Q>) -> Q {
    (b - a).cross(c - a)
}

fn ccw(mut v: Vec<Point<Q>>) -> Vec<Point<Q>> {
    if poly::signed_area2(&v) < qi(0) {
        v.reverse();
    }
    v
}

/// Separating-axis test for convex polygons: interiors disjoint iff some edge
/// of either polygon has the other polygon weakly on its outer side.
fn interiors_disjoint(a: &[Point<Q>], b: &[Point<Q>]) -> bool {
    let sep = |p: &[Point<Q>], o: &[Point<Q>]| {
        (0..p.len()).any(|i| {
            let (s, e) = (p[i], p[(i + 1) % p.len()]);
            o.iter().all(|&v| orient(s, e, v) <= qi(0))
        })
    };
    sep(a, b) || sep(b, a)
}

fn pow_complex(z: Point<Q>, k: u32) -> Point<Q> {
    (0..k).fold(Point::new(qi(1), qi(0)), |acc, _| acc.cmul(z))
}

// ---------------------------------------------------------------------------
// 1

fn two_adic_suite() -> Checks {
    let mut c = Checks::default();
    let h = 4096i64;
    let p = realize(&GeneratorSpec::TwoAdic, &Aabb::interval(qi(-h as i128), qi(h as i128))).unwrap();
    let xs: Vec<Q> = p.points.iter().map(|x| x.x).collect();
    let oracle: Vec<Q> = (-h..=h).map(p_k).filter(|x| x.abs() <= qi(h as i128)).collect();
    c.check(format!("window matches definition ({} points)", xs.len()), xs == oracle);

    let gaps: Vec<Q> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    c.check("(a) gaps >= 1/2", gaps.iter().all(|&g| g >= q(1, 2)));

    // (b) with the open thickening the inclusion fails exactly where
    // |p_k + m2^n - p_{k+m2^n}| = 2^{-(n+1)}, i.e. where p_0 is involved
    let lim = qi(h as i128 - 1);
    let mut closed_ok = true;
    let mut boundary = 0usize;
    let mut boundary_ok = true;
    for n in 0..=8u32 {
        let eps = q(1, 1i128 << (n + 1));
        for m in [-5i128, -3, -1, 1, 3, 5] {
            let s = qi(m << n);
            for &x in &xs {
                if (x + s).abs() <= lim {
                    let d = dist_sorted(&xs, x + s);
                    closed_ok &= d <= eps;
                    if d >= eps {
                        boundary += 1;
                        boundary_ok &= x == qi(0) || x + s == eps;
                    }
                }
                if (x - s).abs() <= lim {
                    let d = dist_sorted(&xs, x - s);
                    closed_ok &= d <= eps;
                    if d >= eps {
                        boundary += 1;
                        boundary_ok &= x == qi(0) || x - s == eps;
                    }
                }
            }
        }
    }
    c.check(
        "(b) P+m2^n and P within distance <= 2^-(n+1) of each other, n <= 8",
        closed_ok,
    );
    c.check(
        format!("(b) open thickening fails only at p_0 and p_(-+m2^n) ({boundary} boundary cases)"),
        boundary_ok && boundary == 9 * 6 * 4,
    );

    let halves: Vec<usize> = (0..gaps.len()).filter(|&i| gaps[i] == q(1, 2)).collect();
    c.check(
        "(c) gap 1/2 only at (p_-1, p_0)",
        halves.len() == 1 && xs[halves[0]] == q(-1, 2) && xs[halves[0] + 1] == qi(0),
    );

    let distinct: BTreeSet<Q> = gaps.iter().copied().collect();
    c.check(
        format!("(d) {} distinct gaps >= 8", distinct.len()),
        distinct.len() >= 8,
    );

    let p0 = realize(
        &GeneratorSpec::TwoAdicPunctured,
        &Aabb::interval(qi(-h as i128), qi(h as i128)),
    )
    .unwrap();
    let set0: BTreeSet<Q> = p0.points.iter().map(|x| x.x).collect();
    let mut periods = 0usize;
    let mut periods_ok = !set0.contains(&qi(0));
    for k in -h..=h {
        if k == 0 {
            continue;
        }
        let t = valuation(k);
        for n in t + 1..=t + 3 {
            for m in [-3i64, -2, -1, 1, 2, 3] {
                let j = k + m * (1i64 << n);
                if j.abs() >= h {
                    continue;
                }
                let lhs = p_k(k) + qi((m as i128) << n);
                periods_ok &= lhs == p_k(j) && set0.contains(&lhs);
                periods += 1;
            }
        }
    }
    c.check(format!("(e) P_0 exact periods ({periods} cases)"), periods_ok);
    c
}

// ---------------------------------------------------------------------------
// 2

fn pinwheel_suite() -> Checks {
    let mut c = Checks::default();
    let rule = pinwheel();
    let root = Tile {
        proto: 0,
        g: Isometry::identity(),
    };
    // r0 λ = 2 + i
    let z = Point::new(qi(2), qi(1));
    let proto = ccw(rule.prototiles[0].vertices.clone());
    let proto_area = poly::area(&proto);
    for k in 0..=4u32 {
        let leaves = substitute_n(&rule, &[root], k);
        let zk = pow_complex(z, k);
        let target: Vec<Point<Q>> = proto.iter().map(|&v| zk.cmul(v)).collect();
        let five_k = 5i128.pow(k);
        let tree_leaves = supertile(&rule, 0, k).unwrap().leaves().len();
        c.check(
            format!("k={k}: {five_k} leaves"),
            leaves.len() as i128 == five_k && tree_leaves as i128 == five_k,
        );

        let polys: Vec<Vec<Point<Q>>> = leaves.iter().map(|t| ccw(rule.tile_vertices(t))).collect();
        let area = polys.iter().fold(qi(0), |a, p| a + poly::area(p));
        let inside = polys.iter().all(|p| {
            p.iter()
                .all(|&v| (0..3).all(|i| orient(target[i], target[(i + 1) % 3], v) >= qi(0)))
        });
        c.check(
            format!("k={k}: supp = (2+i)^k S"),
            area == proto_area * qi(five_k) && inside && poly::area(&target) == proto_area * qi(five_k),
        );

        let bounds: Vec<(Q, Q)> = polys
            .iter()
            .map(|p| {
                let lo = p.iter().map(|v| v.x).fold(p[0].x, |a, b| a.min(b));
                let hi = p.iter().map(|v| v.x).fold(p[0].x, |a, b| a.max(b));
                (lo, hi)
            })
            .collect();
        let mut order: Vec<usize> = (0..polys.len()).collect();
        order.sort_by(|&a, &b| bounds[a].0.cmp(&bounds[b].0));
        let mut disjoint = true;
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                if bounds[b].0 >= bounds[a].1 {
                    break;
                }
                disjoint &= interiors_disjoint(&polys[a], &polys[b]);
            }
        }
        let library = first_overlap(&rule, &leaves).is_none()
            && check_support(&rule, &leaves, std::slice::from_ref(&target)).is_ok();
        c.check(format!("k={k}: interiors disjoint"), disjoint && library);
    }

    let m = substitution_matrix(&rule);
    c.check(
        "M = [[5]] primitive at power 1",
        m == vec![vec![5]] && is_primitive(&m).unwrap() == Some(1),
    );

    let w = dto_witness(&rule, 2);
    let rel = w.relative_rotation;
    let found = rel.is_some_and(|r| {
        let u = (r.cos, r.sin);
        [(q(3, 5), q(4, 5)), (q(3, 5), q(-4, 5))].contains(&u)
    });
    // a rational unit other than ±1, ±i is never a root of unity (Niven)
    let niven = rel.is_some_and(|r| ![qi(0), qi(1), qi(-1)].contains(&r.cos));
    c.check(
        format!("DTO certified irrational, (3+4i)/5 at order {:?}", w.order),
        w.verdict == DtoVerdict::CertifiedIrrational && w.order.is_some_and(|o| o <= 2) && found && niven,
    );
    c.check(
        "chair DTO none found",
        dto_witness(&chair(), 3).verdict == DtoVerdict::NoneFound,
    );
    c
}

// ---------------------------------------------------------------------------
// 3

fn repetitivity_suite() -> Checks {
    let mut c = Checks::default();

    let p = realize(&GeneratorSpec::TwoAdic, &Aabb::interval(qi(-4096), qi(4096))).unwrap();
    let rs: Vec<Q> = [2, 4, 8, 16, 32, 64].iter().map(|&r| qi(r)).collect();
    let epss = [q(1, 10), q(1, 20), q(1, 40)];
    let curve = repetitivity_curve(&p, &rs, &epss, false, (32, 32), 11).unwrap();
    for f in &curve.fits {
        c.check(
            format!(
                "two-adic eps={} doubling ratio {:.3} <= 2.5",
                f.eps, f.max_doubling_ratio
            ),
            f.linear && f.max_doubling_ratio <= 2.5,
        );
    }

    let src = TilingSource::new("pinwheel", 800.0).unwrap();
    let wig = tiling_wiggle_curve(&src, &[2.0, 4.0, 8.0, 16.0], &[0.2, 0.1], (8, 8), 1, 100.0, 600.0).unwrap();
    for f in &wig.fits {
        c.check(
            format!(
                "pinwheel wiggle eps={} doubling ratio {:.3}",
                f.eps, f.max_doubling_ratio
            ),
            f.linear && wig.samples.iter().filter(|s| s.eps == f.eps).all(|s| s.r_hat.is_some()),
        );
    }

    let spec = GeneratorSpec::DecoratedTiling {
        rule: "pinwheel".into(),
        level: None,
    };
    let w = Aabb::centered_square(Point::origin(), qi(40));
    let pw = realize(&spec, &w).unwrap();
    let query = RepetitivityQuery {
        r: qi(2),
        eps: qi(0),
        pattern_centers: sample_centers(&w, 3.0, 4, 1).unwrap(),
        search_centers: sample_centers(&w, 20.0, 4, 2).unwrap(),
        wiggle: false,
    };
    let witness = match repetitivity_radius(&pw, &query).unwrap() {
        RepetitivityOutcome::Failure(wit) => !wit.content.is_empty(),
        RepetitivityOutcome::Radius { .. } => false,
    };
    c.check(
        "pinwheel eps=0 translation search fails with a witness (exact window of half 40)",
        witness,
    );

    // non-FLC w.r.t. translations: exact classes of 1-patterns keep growing
    let classes = |rule: &str| -> Vec<usize> {
        let p = realize(
            &GeneratorSpec::DecoratedTiling {
                rule: rule.into(),
                level: None,
            },
            &Aabb::centered_square(Point::origin(), qi(30)),
        )
        .unwrap();
        let pts: Vec<Point<Q>> = p.points.iter().copied().filter(|x| x.norm_f64() < 25.0).collect();
        [100, 200, 400, 800]
            .iter()
            .map(|&n| {
                classify_patterns(&p, &Region::ball(Point::origin(), qi(1)), qi(0), &pts[..n])
                    .unwrap()
                    .len()
            })
            .collect()
    };
    let (pin, ch) = (classes("pinwheel"), classes("chair"));
    c.check(
        format!("exact 1-pattern classes grow for pinwheel {pin:?}, saturate for chair {ch:?}"),
        pin.windows(2).all(|w| w[1] as f64 >= 1.5 * w[0] as f64) && ch.windows(2).all(|w| w[1] == w[0]),
    );

    let z = realize(
        &GeneratorSpec::IntegerLattice { dim: 1 },
        &Aabb::interval(qi(-300), qi(300)),
    )
    .unwrap();
    let mut lattice_ok = true;
    let mut oracle_ok = true;
    for (i, r) in [1i64, 2, 5, 11, 23].into_iter().enumerate() {
        let pattern_centers = sample_centers(&z.window, r as f64 + 1.0, 16, 3 + i as u64).unwrap();
        let search_centers = sample_centers(&z.window, r as f64 + 2.0, 16, 40 + i as u64).unwrap();
        for eps in [qi(0), q(1, 10)] {
            let query = RepetitivityQuery {
                r: qi(r as i128),
                eps,
                pattern_centers: pattern_centers.clone(),
                search_centers: search_centers.clone(),
                wiggle: false,
            };
            let h = repetitivity_radius(&z, &query).unwrap().radius();
            lattice_ok &= h.is_some_and(|h| h <= r as f64 + 1.0);
            if eps == qi(0) {
                // copies of Z ∩ B_r(c) are exactly the integer translates of c
                let brute = pattern_centers
                    .iter()
                    .flat_map(|pc| search_centers.iter().map(move |sc| (pc.x, sc.x)))
                    .map(|(pc, sc)| {
                        (-1000i128..=1000)
                            .map(|k| (pc + qi(k) - sc).abs().to_f64())
                            .fold(f64::INFINITY, f64::min)
                            + r as f64
                    })
                    .fold(0.0, f64::max);
                oracle_ok &= h.is_some_and(|h| (h - brute).abs() < 1e-12);
            }
        }
    }
    c.check("Z lattice R <= r+1", lattice_ok);
    c.check("Z lattice eps=0 R equals brute force", oracle_ok);
    c
}

// ---------------------------------------------------------------------------
// 4

fn gauge_suite() -> Checks {
    let mut c = Checks::default();
    let p = realize(&GeneratorSpec::TwoAdic, &Aabb::interval(qi(-520), qi(520))).unwrap();
    let v = Region::Box(Aabb::interval(qi(-100), qi(100)));
    let grid = integer_grid::<Q>(1, 400);
    for n in 0..=5u32 {
        let eps = q(101, 100 * (1i128 << (n + 1)));
        let ps = period_set(&p, eps, PeriodMode::V { region: v }, &grid).unwrap();
        let bound = (1u64 << (n + 1)) as f64 + 1.0;
        c.check(
            format!("two-adic n={n} max_gap {} <= {bound}", ps.max_gap),
            ps.max_gap <= bound,
        );
    }

    let bohr = GeneratorSpec::BohrModulated { f: TrigPoly::golden() };
    let region = Aabb::interval(-70.0, 70.0);
    let shifts = integer_grid::<f64>(1, 100);
    for eps in [0.1, 0.05] {
        let mut gaps = Vec::new();
        for half in [400.0, 800.0, 1600.0] {
            let b = realize(&bohr, &Aabb::interval(-half, half)).unwrap();
            gaps.push(period_set(&b, eps, PeriodMode::Lr, &shifts).unwrap().gap_over(&region));
        }
        c.check(
            format!("Bohr eps={eps} gaps {gaps:?} finite and nonincreasing"),
            gaps.iter().all(|g| g.is_finite()) && gaps.windows(2).all(|w| w[1] <= w[0]),
        );
    }

    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let f = |n: f64| (2.0 * std::f64::consts::PI * alpha * n).cos() / 3.0;
    let b = realize(&bohr, &Aabb::interval(-1600.0, 1600.0)).unwrap();
    let generator_ok = b
        .points
        .iter()
        .all(|p| (p.x - p.x.round() - f(p.x.round())).abs() < 1e-12);
    let worst = b
        .points
        .iter()
        .map(|p| p.x.round())
        .map(|n| (f(n + 13.0) - f(n)).abs())
        .fold(0.0, f64::max);
    c.check(
        format!("Bohr points are n + f(n); sup |f(n+13) - f(n)| = {worst:.4} <= 0.08"),
        generator_ok && worst <= 0.08,
    );
    c
}

// ---------------------------------------------------------------------------
// 5

fn ergodic_suite() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut partition_ok = true;
    for _ in 0..100 {
        let dim = if rng.gen_bool(0.5) { 1 } else { 2 };
        let w = q(rng.gen_range(8..400), rng.gen_range(1..8));
        let u = w * q(rng.gen_range(1..=64), 64);
        let side = |rng: &mut ChaCha8Rng| w + w * q(rng.gen_range(0..=32), 32);
        let sx = side(&mut rng);
        let sy = if dim == 2 { side(&mut rng) } else { qi(0) };
        let lo = Point::new(
            q(rng.gen_range(-500..500), 3),
            if dim == 2 {
                q(rng.gen_range(-500..500), 7)
            } else {
                qi(0)
            },
        );
        let b = Aabb::new(dim, lo, Point::new(sx, sy));
        let parts = squarish_decompose(&b, w, u).unwrap();
        let vol = parts.iter().fold(qi(0), |a, s| a + s.bx.volume());
        let class = parts.iter().all(|s| {
            s.class_u == u && s.bx.sides().iter().all(|&l| u <= l && l <= u * qi(2)) && SquarishBox::in_class(&s.bx, u)
        });
        let inside = parts.iter().all(|s| b.contains_box(&s.bx));
        let disjoint = (0..parts.len()).all(|i| {
            (i + 1..parts.len()).all(|j| {
                let (a, d) = (&parts[i].bx, &parts[j].bx);
                let sep = |lo1: Q, hi1: Q, lo2: Q, hi2: Q| hi1 <= lo2 || hi2 <= lo1;
                sep(a.lo.x, a.hi().x, d.lo.x, d.hi().x) || (dim == 2 && sep(a.lo.y, a.hi().y, d.lo.y, d.hi().y))
            })
        });
        partition_ok &= vol == b.volume() && class && inside && disjoint;
    }
    c.check("squarish_decompose exact partition on 100 (W, U)", partition_ok);

    let f1 = WeightFunctionSpec::SmoothedCount { w: 0.25, b: 0.2 };
    let us1 = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
    let w1 = Aabb::interval(-5000.0, 5000.0);
    let bohr = GeneratorSpec::BohrModulated { f: TrigPoly::golden() };
    let sets = [
        ("Z", GeneratorSpec::IntegerLattice { dim: 1 }),
        ("two-adic", GeneratorSpec::TwoAdic),
        ("Bohr", bohr),
    ];
    let density_ok = |name: &str, curve: &delone::ergodic::DensityCurve, c: &mut Checks| {
        let s = &curve.samples;
        let mono = s.windows(2).all(|w| w[1].upper <= w[0].upper + 0.05);
        let last = s.last().unwrap();
        let gap = last.upper - last.lower;
        c.check(
            format!("{name}: f+ doubling ok, gap {gap:.4} <= 0.1 at U={}", last.u),
            mono && gap <= 0.1,
        );
    };
    for (name, spec) in sets {
        let p = realize(&spec, &w1).unwrap();
        let curve = density_curve(&f1, &p, &us1, 24, 5).unwrap();
        density_ok(name, &curve, &mut c);
    }
    let defect = realize(&GeneratorSpec::HalfLineDefect, &w1).unwrap();
    let dc = density_curve(&f1, &defect, &us1, 24, 5).unwrap();
    let last = dc.samples.last().unwrap();
    c.check(
        format!("half-line defect keeps gap {:.3} >= 0.2", last.upper - last.lower),
        last.upper - last.lower >= 0.2,
    );

    let pw = realize(
        &GeneratorSpec::DecoratedTiling {
            rule: "pinwheel".into(),
            level: None,
        },
        &Aabb::centered_square(Point::origin(), 200.0),
    )
    .unwrap();
    let f2 = WeightFunctionSpec::SmoothedCount { w: 0.15, b: 0.1 };
    let curve = density_curve(&f2, &pw, &[8.0, 16.0, 32.0, 64.0], 24, 5).unwrap();
    density_ok("decorated pinwheel", &curve, &mut c);

    let j64 = birkhoff_average(&f2, &pw, 64.0, None).unwrap();
    let j128 = birkhoff_average(&f2, &pw, 128.0, None).unwrap();
    c.check(
        format!("|J64 - J128| = {:.5} <= 0.05 |J128|", (j64 - j128).abs()),
        (j64 - j128).abs() <= 0.05 * j128.abs(),
    );
    let shifts = [
        Point::new(3.5, -7.25),
        Point::new(-12.0, 4.0),
        Point::new(0.3, 0.7),
        Point::new(9.9, 9.9),
        Point::new(-5.0, -13.0),
    ];
    let worst = shifts
        .iter()
        .map(|&x| (birkhoff_average(&f2, &pw.translate(x), 128.0, None).unwrap() - j128).abs())
        .fold(0.0, f64::max);
    c.check(
        format!("5 shifted hulls agree, worst {worst:.5}"),
        worst <= 0.05 * j128.abs(),
    );
    let rot = birkhoff_average(&f2, &pw, 128.0, Some(&rotation_grid(8))).unwrap();
    c.check(
        format!("rotation average {rot:.5} vs J128 {j128:.5}"),
        (rot - j128).abs() <= 0.05,
    );
    c
}

// ---------------------------------------------------------------------------
// 6

fn random_motion(rng: &mut ChaCha8Rng) -> Isometry<Q> {
    const UNITS: [(i64, i64, u32); 9] = [
        (1, 0, 0),
        (2, 1, 1),
        (1, 2, 1),
        (-1, 2, 1),
        (3, 4, 2),
        (4, 3, 2),
        (-3, 4, 2),
        (2, 11, 3),
        (10, 5, 3),
    ];
    let (a, b, k) = UNITS[rng.gen_range(0..UNITS.len())];
    let mut rot = Rotation::gaussian(a, b, k, rng.gen_range(0..4)).unwrap();
    if rng.gen_bool(0.5) {
        rot = rot.compose(&Rotation::conjugation());
    }
    let t = Point::new(
        q(rng.gen_range(-400..400), rng.gen_range(1..20)),
        q(rng.gen_range(-400..400), rng.gen_range(1..20)),
    );
    Isometry::new(t, rot)
}

fn moved(g: &Isometry<Q>, tiles: &[Tile<Q>]) -> Vec<Tile<Q>> {
    tiles
        .iter()
        .map(|t| Tile {
            proto: t.proto,
            g: g.compose(&t.g),
        })
        .collect()
}

/// A random legal patch: the tiles of a placed supertile nearest to one of them.
fn random_patch(rule: &SubstitutionRule<Q>, rng: &mut ChaCha8Rng) -> Vec<Tile<Q>> {
    let k = rng.gen_range(1..=3);
    let root = Tile {
        proto: 0,
        g: random_motion(rng),
    };
    let leaves = substitute_n(rule, &[root], k);
    let seed = rule.tile_vertices(&leaves[rng.gen_range(0..leaves.len())])[0].to_f64();
    let mut by_dist: Vec<(f64, Tile<Q>)> = leaves
        .iter()
        .map(|t| (poly::centroid(&rule.tile_vertices(t)).to_f64().dist(seed), *t))
        .collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let keep = rng.gen_range(1..=by_dist.len());
    by_dist.into_iter().take(keep).map(|(_, t)| t).collect()
}

fn sorted_keys(rule: &SubstitutionRule<Q>, tiles: &[Tile<Q>]) -> Vec<delone::subst::TileKey> {
    let mut k: Vec<_> = tiles.iter().map(|t| rule.tile_key(t)).collect();
    k.sort();
    k
}

fn sorted_points(mut v: Vec<Point<Q>>) -> Vec<Point<Q>> {
    v.sort_by(delone::pointset::lex);
    v
}

fn decoration_suite() -> Checks {
    let mut c = Checks::default();
    let rule = pinwheel();
    let phi = build_decoration(&rule).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let mut round_trip = true;
    for _ in 0..10 {
        let patch = random_patch(&rule, &mut rng);
        let back = undecorate(&phi, &decorate(&phi, &patch)).unwrap();
        round_trip &= sorted_keys(&rule, &back) == sorted_keys(&rule, &patch);
    }
    c.check("round trip on 10 random patches", round_trip);

    let mut equivariant = true;
    for _ in 0..10 {
        let patch = random_patch(&rule, &mut rng);
        let g = random_motion(&mut rng);
        let lhs = sorted_points(decorate(&phi, &moved(&g, &patch)));
        let rhs = sorted_points(decorate(&phi, &patch).into_iter().map(|x| g.apply(x)).collect());
        equivariant &= lhs == rhs;
    }
    c.check("equivariance on 10 random motions", equivariant);

    let mut packings: Vec<Vec<Tile<Q>>> = Vec::new();
    let mut keys = BTreeSet::new();
    while packings.len() < 20 {
        let patch = random_patch(&rule, &mut rng);
        if keys.insert(sorted_keys(&rule, &patch)) {
            packings.push(patch);
        }
    }
    let images: BTreeSet<Vec<(Q, Q)>> = packings
        .iter()
        .map(|p| {
            sorted_points(decorate(&phi, p))
                .into_iter()
                .map(|x| (x.x, x.y))
                .collect()
        })
        .collect();
    c.check(
        format!("injective on 20 packings ({} distinct images)", images.len()),
        images.len() == 20,
    );
    c
}

// ---------------------------------------------------------------------------
// 7

/// Random pairs of distinct members of classes with at least two members.
fn same_type_pairs(classes: &[SimilarityClass], count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let multi: Vec<&SimilarityClass> = classes.iter().filter(|c| c.members.len() >= 2).collect();
    if multi.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let cl = multi[rng.gen_range(0..multi.len())];
            let i = rng.gen_range(0..cl.members.len());
            let j = (i + rng.gen_range(1..cl.members.len())) % cl.members.len();
            (cl.members[i], cl.members[j])
        })
        .collect()
}

fn metric_suite() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let big = Aabb::interval(qi(-160), qi(160));
    let common = Aabb::interval(qi(-140), qi(140));
    let bases: Vec<PointSetWindow<Q>> = [
        GeneratorSpec::TwoAdic,
        GeneratorSpec::TwoAdicPunctured,
        GeneratorSpec::IntegerLattice { dim: 1 },
        GeneratorSpec::HalfLineDefect,
    ]
    .iter()
    .map(|s| realize(s, &big).unwrap())
    .collect();
    let draw = |rng: &mut ChaCha8Rng| {
        let b = &bases[rng.gen_range(0..bases.len())];
        let x = if rng.gen_bool(0.3) {
            qi(rng.gen_range(-8..=8))
        } else {
            q(rng.gen_range(-128..=128), 64)
        };
        b.translate(Point::on_line(x)).restrict(&common)
    };
    let mut symmetric = true;
    let mut triangle = true;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (a, b, d) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let ab = local_rubber_distance(&a, &b).value;
        let ba = local_rubber_distance(&b, &a).value;
        let bd = local_rubber_distance(&b, &d).value;
        let ad = local_rubber_distance(&a, &d).value;
        symmetric &= ab == ba;
        worst = worst.max(ad - ab - bd);
        triangle &= ad <= ab + bd + 1e-12;
    }
    c.check("d_LR symmetric on 1000 triples", symmetric);
    c.check(
        format!("triangle inequality on 1000 triples (worst excess {worst:.3e})"),
        triangle,
    );

    // classification soundness, exact 1D and floating 2D
    let mut pairs = 0;
    let mut sound = true;
    {
        let p = realize(&GeneratorSpec::TwoAdic, &Aabb::interval(qi(-300), qi(300))).unwrap();
        let tpl = Region::Box(Aabb::interval(qi(-4), qi(4)));
        let eps = q(1, 8);
        let centers = sample_centers(&p.window, 10.0, 400, 71).unwrap();
        let classes = classify_patterns(&p, &tpl, eps, &centers).unwrap();
        let content =
            |c: Point<Q>| -> Vec<Point<Q>> { p.points.iter().map(|&x| x - c).filter(|x| tpl.contains(*x)).collect() };
        for (i, j) in same_type_pairs(&classes, 300, &mut rng) {
            sound &= pattern_deviation(&content(centers[i]), &content(centers[j]), &tpl).le(eps);
            pairs += 1;
        }
    }
    {
        let w = Aabb::centered_square(Point::origin(), 30.0);
        let p = realize(
            &GeneratorSpec::DecoratedTiling {
                rule: "chair".into(),
                level: None,
            },
            &w,
        )
        .unwrap();
        let tpl = Region::ball(Point::origin(), 1.0);
        let eps = 0.3;
        let centers = sample_centers(&w, 2.0, 600, 72).unwrap();
        let classes = classify_patterns(&p, &tpl, eps, &centers).unwrap();
        let content = |c: Point<f64>| -> Vec<Point<f64>> {
            p.points.iter().map(|&x| x - c).filter(|x| tpl.contains(*x)).collect()
        };
        for (i, j) in same_type_pairs(&classes, 200, &mut rng) {
            sound &= pattern_deviation(&content(centers[i]), &content(centers[j]), &tpl).le(eps);
            pairs += 1;
        }
    }
    c.check(
        format!("classify_patterns sound on {pairs} same-type pairs"),
        sound && pairs == 500,
    );

    let w = Aabb::centered_square(Point::origin(), qi(24));
    let chair_set = realize(
        &GeneratorSpec::DecoratedTiling {
            rule: "chair".into(),
            level: None,
        },
        &w,
    )
    .unwrap();
    let inner = Aabb::centered_square(Point::origin(), qi(22));
    let base = chair_set.restrict(&inner);
    let mut agree = true;
    let mut widest = 0.0f64;
    for x in [
        Point::new(q(1, 100), qi(0)),
        Point::new(qi(0), q(1, 64)),
        Point::new(q(1, 50), q(1, 80)),
        Point::new(q(-3, 1000), q(1, 250)),
    ] {
        let moved = chair_set.translate(x).restrict(&inner);
        let lr = local_rubber_distance(&base, &moved).value;
        let lm = local_matching_distance(&base, &moved, None);
        widest = widest.max(lm.upper - lm.lower);
        agree &= lm.certified && lm.lower - 1e-12 <= lr && lr <= lm.upper + 1e-12 && (lr - x.norm_f64()).abs() < 1e-12;
    }
    c.check(
        format!("chair d_LM bracket contains d_LR for 4 small shifts (widest bracket {widest:.2e})"),
        agree,
    );
    c
}

// ---------------------------------------------------------------------------
// 8

fn report(seed: u64) -> ExperimentReport {
    let p = realize(&GeneratorSpec::TwoAdic, &Aabb::interval(qi(-600), qi(600))).unwrap();
    let rs: Vec<Q> = [2, 4, 8].iter().map(|&r| qi(r)).collect();
    let curve = repetitivity_curve(&p, &rs, &[q(1, 10)], false, (6, 6), seed).unwrap();
    let z = realize(
        &GeneratorSpec::BohrModulated { f: TrigPoly::golden() },
        &Aabb::interval(-800.0, 800.0),
    )
    .unwrap();
    let f = WeightFunctionSpec::SmoothedCount { w: 0.25, b: 0.2 };
    let dens = density_curve(&f, &z, &[16.0, 32.0], 8, seed).unwrap();
    let config = serde_json::json!({ "rs": [2, 4, 8], "eps": [0.1], "us": [16, 32] });
    ExperimentReport {
        command: "acceptance".into(),
        input_hash: delone::io::content_hash(config.to_string().as_bytes()),
        config,
        seed,
        tables: serde_json::json!({ "repetitivity": curve.to_csv(), "density": dens.to_csv() }),
        witnesses: serde_json::to_value(&curve.witnesses).unwrap(),
        runtime_ms: None,
    }
}

fn determinism_suite() -> Checks {
    let mut c = Checks::default();
    let a = report(9);
    let b = report(9);
    let bytes_a = delone::io::to_json(REPORT_SCHEMA, &a).unwrap();
    let bytes_b = delone::io::to_json(REPORT_SCHEMA, &b).unwrap();
    c.check(
        "same seed, same bytes and hash",
        bytes_a == bytes_b && a.hash().unwrap() == b.hash().unwrap(),
    );
    let timed = ExperimentReport {
        runtime_ms: Some(12),
        ..a.clone()
    };
    c.check("hash ignores runtime", timed.hash().unwrap() == a.hash().unwrap());
    c.check(
        "different seed, different hash",
        report(10).hash().unwrap() != a.hash().unwrap(),
    );
    c
}

fn main() -> ExitCode {
    let suites: [(&str, fn() -> Checks); 8] = [
        ("1 two-adic", two_adic_suite),
        ("2 pinwheel", pinwheel_suite),
        ("3 repetitivity", repetitivity_suite),
        ("4 minimality gauges", gauge_suite),
        ("5 ergodic", ergodic_suite),
        ("6 decoration", decoration_suite),
        ("7 metrics", metric_suite),
        ("8 determinism", determinism_suite),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in suites {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run));
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(c) => (c.ok(), c.summary()),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({secs:.1}s) [{detail}]",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
