use proptest::prelude::*;

use delone::decorate::{build_decoration, decorate};
use delone::ergodic::{squarish_decompose, van_hove_boundary_volume, weight, WeightFunctionSpec};
use delone::geom::{Aabb, Isometry, Point, Region, Rotation, Scalar, Q};
use delone::io::{from_json, to_json, PointSetData, POINTSET_SCHEMA};
use delone::metrics::{
    deviation_between, local_rubber_bisection, local_rubber_distance, pattern_deviation, IndexedSet,
};
use delone::pointset::{realize, GeneratorSpec, PointSetWindow};
use delone::subst::{pinwheel, substitute_n, Tile};

fn rational(lo: i64, hi: i64, den: i64) -> impl Strategy<Value = Q> {
    (lo * den..=hi * den).prop_map(move |n| Q::new(n as i128, den as i128))
}

fn exact_unit() -> impl Strategy<Value = Rotation<Q>> {
    let units = prop::sample::select(vec![
        (1i64, 0i64, 0u32),
        (2, 1, 1),
        (1, 2, 1),
        (-1, 2, 1),
        (3, 4, 2),
        (4, 3, 2),
        (-3, 4, 2),
    ]);
    (units, 0i64..4, any::<bool>()).prop_map(|((a, b, k), j, reflect)| {
        let r = Rotation::gaussian(a, b, k, j).unwrap();
        if reflect {
            r.compose(&Rotation::conjugation())
        } else {
            r
        }
    })
}

fn exact_motion() -> impl Strategy<Value = Isometry<Q>> {
    (exact_unit(), rational(-20, 20, 16), rational(-20, 20, 16))
        .prop_map(|(r, x, y)| Isometry::new(Point::new(x, y), r))
}

fn two_adic(h: i128) -> PointSetWindow<Q> {
    realize(
        &GeneratorSpec::TwoAdic,
        &Aabb::interval(Q::from_integer(-h), Q::from_integer(h)),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometries_preserve_distance(g in exact_motion(), h in exact_motion(),
                                    a in (rational(-9, 9, 8), rational(-9, 9, 8)), b in (rational(-9, 9, 8), rational(-9, 9, 8))) {
        let (a, b) = (Point::new(a.0, a.1), Point::new(b.0, b.1));
        prop_assert_eq!(g.apply(a).dist2(g.apply(b)), a.dist2(b));
        prop_assert_eq!(g.inverse().apply(g.apply(a)), a);
        prop_assert_eq!(g.compose(&h).apply(a), g.apply(h.apply(a)));
    }

    #[test]
    fn rubber_distance_is_symmetric_and_bounded(xs in prop::collection::vec(-30.0f64..30.0, 0..40),
                                                ys in prop::collection::vec(-30.0f64..30.0, 0..40)) {
        let w = Aabb::interval(-60.0, 60.0);
        let mk = |v: &[f64]| PointSetWindow::from_points(1, v.iter().map(|&x| Point::on_line(x)).collect(), w, 0.0, GeneratorSpec::TwoAdic);
        let (p, q) = (mk(&xs), mk(&ys));
        let d = local_rubber_distance(&p, &q).value;
        prop_assert_eq!(d, local_rubber_distance(&q, &p).value);
        prop_assert!((0.0..=std::f64::consts::FRAC_1_SQRT_2).contains(&d));
        prop_assert_eq!(local_rubber_distance(&p, &p).value, 0.0);
        let pts = |v: &[f64]| v.iter().map(|&x| Point::on_line(x)).collect::<Vec<_>>();
        let bis = local_rubber_bisection(&pts(&xs), &pts(&ys), 1e-12);
        prop_assert!((d - bis).abs() < 1e-9, "closed form {} bisection {}", d, bis);
    }

    #[test]
    fn deviation_is_translation_invariant(x in rational(-6, 6, 32), lo in rational(-20, 0, 4), len in rational(1, 20, 4)) {
        let p = two_adic(80);
        let set = IndexedSet::from_window(&p);
        let v = Region::Box(Aabb::interval(lo, lo + len));
        let tx = Isometry::translate(Point::on_line(x));
        let lhs = deviation_between(&set, &tx, &set, &Isometry::identity(), &v);
        // d_{x⁻¹V}(P, x⁻¹P)
        let back = Isometry::translate(Point::on_line(-x));
        let rhs = deviation_between(&set, &Isometry::identity(), &set, &back, &v.translate(Point::on_line(-x)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn similarity_composes_additively(dx in -0.2f64..0.2, dy in -0.2f64..0.2, seed in prop::collection::vec(-10.0f64..10.0, 3..20)) {
        let v = Region::Box(Aabb::interval(-12.0, 12.0));
        let a: Vec<Point<f64>> = seed.iter().map(|&x| Point::on_line(x)).collect();
        let b: Vec<Point<f64>> = a.iter().map(|p| *p + Point::on_line(dx)).collect();
        let c: Vec<Point<f64>> = b.iter().map(|p| *p + Point::on_line(dy)).collect();
        let ab = pattern_deviation(&a, &b, &v).value();
        let bc = pattern_deviation(&b, &c, &v).value();
        let ac = pattern_deviation(&a, &c, &v).value();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(ab, pattern_deviation(&b, &a, &v).value());
    }

    #[test]
    fn squarish_pieces_partition_the_box(w in 4i64..200, u_num in 1i64..=32, sx in 0i64..=16, sy in 0i64..=16) {
        let w = Q::from_integer(w as i128);
        let u = w * Q::new(u_num as i128, 32);
        let side = |s: i64| w + w * Q::new(s as i128, 16);
        let b = Aabb::new(2, Point::new(Q::new(1, 3), Q::new(-5, 7)), Point::new(side(sx), side(sy)));
        let parts = squarish_decompose(&b, w, u).unwrap();
        let total = parts.iter().fold(Q::from_integer(0), |a, s| a + s.bx.volume());
        prop_assert_eq!(total, b.volume());
        let two_u = u * Q::from_integer(2);
        prop_assert!(parts.iter().all(|s| s.bx.sides().iter().all(|&l| u <= l && l <= two_u) && b.contains_box(&s.bx)));
    }

    #[test]
    fn van_hove_volume_is_monotone(a in 1.0f64..50.0, c in 1.0f64..50.0, s in 0.0f64..5.0, t in 0.0f64..5.0) {
        let b = Aabb::new(2, Point::origin(), Point::new(a, c));
        let (s, t) = (s.min(t), s.max(t));
        let vs = van_hove_boundary_volume(&b, s);
        prop_assert!(vs >= 0.0);
        prop_assert!(vs <= van_hove_boundary_volume(&b, t) + 1e-9);
    }

    #[test]
    fn weight_is_additive_over_splits(cut in 0.1f64..0.9, lo in -40.0f64..0.0, len in 4.0f64..30.0) {
        let p = realize(&GeneratorSpec::TwoAdic, &Aabb::interval(-100.0, 100.0)).unwrap();
        let f = WeightFunctionSpec::SmoothedCount { w: 0.25, b: 0.2 };
        let b = Aabb::interval(lo, lo + len);
        let m = lo + cut * len;
        let whole = weight(&f, &p, &b, 0.01).unwrap().value;
        let left = weight(&f, &p, &Aabb::interval(lo, m), 0.01).unwrap().value;
        let right = weight(&f, &p, &Aabb::interval(m, lo + len), 0.01).unwrap().value;
        prop_assert!((whole - left - right).abs() < 1e-9, "{} vs {}", whole, left + right);
        let count = WeightFunctionSpec::Count { half: 0.5 };
        let cw = weight(&count, &p, &b, 0.01).unwrap().value;
        let cs = weight(&count, &p, &Aabb::interval(lo, m), 0.01).unwrap().value + weight(&count, &p, &Aabb::interval(m, lo + len), 0.01).unwrap().value;
        prop_assert!((cw - cs).abs() < 1e-9);
    }

    #[test]
    fn decoration_is_equivariant(g in exact_motion(), k in 0u32..=2) {
        let r = pinwheel();
        let phi = build_decoration(&r).unwrap();
        let c = substitute_n(&r, &[Tile { proto: 0, g: Isometry::identity() }], k);
        let gc: Vec<Tile<Q>> = c.iter().map(|t| Tile { proto: t.proto, g: g.compose(&t.g) }).collect();
        let mut lhs = decorate(&phi, &gc);
        let mut rhs: Vec<Point<Q>> = decorate(&phi, &c).into_iter().map(|x| g.apply(x)).collect();
        lhs.sort_by(delone::pointset::lex);
        rhs.sort_by(delone::pointset::lex);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn point_sets_round_trip_through_json(h in 1i128..60, x in rational(-5, 5, 64)) {
        let p = two_adic(h).translate(Point::on_line(x));
        let data = PointSetData::Exact(p);
        let text = to_json(POINTSET_SCHEMA, &data).unwrap();
        prop_assert_eq!(from_json::<PointSetData>(POINTSET_SCHEMA, &text).unwrap(), data);
    }

    #[test]
    fn realized_windows_are_uniformly_discrete(lo in -300i64..300, len in 1i64..200) {
        let w = Aabb::interval(lo as f64, (lo + len) as f64);
        for spec in [
            GeneratorSpec::TwoAdic,
            GeneratorSpec::TwoAdicPunctured,
            GeneratorSpec::IntegerLattice { dim: 1 },
            GeneratorSpec::BohrModulated { f: delone::pointset::TrigPoly::golden() },
            GeneratorSpec::HalfLineDefect,
        ] {
            let p = realize(&spec, &w).unwrap();
            prop_assert!(p.check_discrete());
            prop_assert!(p.points.iter().all(|x| w.contains(*x)));
            prop_assert!(p.points.windows(2).all(|v| v[0].x < v[1].x));
        }
    }
}

#[test]
fn scalar_modes_do_not_mix() {
    assert!(Q::from_f64(0.5).is_none());
    assert_eq!(f64::from_q(Q::new(1, 4)), 0.25);
}
