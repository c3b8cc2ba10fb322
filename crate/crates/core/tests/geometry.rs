use flatlyap_core::geometry::{hyperbolic_distance, mobius_apply, Geodesic, HPoint, Letter, Location, Mobius, SurfaceModel, Word};
use flatlyap_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn point() -> impl Strategy<Value = HPoint> {
    (-5.0f64..5.0, -3.0f64..3.0).prop_map(|(x, ly)| HPoint::new(x, ly.exp()).unwrap())
}

fn sl2() -> impl Strategy<Value = Mobius> {
    (0.2f64..3.0, -2.0f64..2.0, -2.0f64..2.0, prop::bool::ANY).prop_map(|(a, b, c, flip)| {
        let a = if flip { -a } else { a };
        Mobius::new(a, b, c, (1.0 + b * c) / a).unwrap()
    })
}

fn same_mobius(m: &Mobius, n: &Mobius, tol: f64) -> bool {
    let diff = |s: f64| (m.a - s * n.a).abs() + (m.b - s * n.b).abs() + (m.c - s * n.c).abs() + (m.d - s * n.d).abs();
    diff(1.0).min(diff(-1.0)) <= tol * (1.0 + m.a.abs() + m.b.abs() + m.c.abs() + m.d.abs())
}

proptest! {
    #[test]
    fn mobius_maps_are_isometries(g in sl2(), p in point(), q in point()) {
        let d = hyperbolic_distance(p, q);
        let dg = hyperbolic_distance(mobius_apply(&g, p).unwrap(), mobius_apply(&g, q).unwrap());
        prop_assert!((d - dg).abs() <= 1e-9 * d.max(1.0), "{d} vs {dg}");
    }

    #[test]
    fn composition_matches_sequential_application(g in sl2(), h in sl2(), p in point()) {
        let a = mobius_apply(&g.compose(&h), p).unwrap();
        let b = mobius_apply(&g, mobius_apply(&h, p).unwrap()).unwrap();
        prop_assert!(hyperbolic_distance(a, b) <= 1e-9, "{a:?} vs {b:?}");
    }

    #[test]
    fn distance_is_symmetric(p in point(), q in point()) {
        prop_assert_eq!(hyperbolic_distance(p, q), hyperbolic_distance(q, p));
        prop_assert_eq!(hyperbolic_distance(p, p), 0.0);
    }
}

#[test]
fn apply_and_distance_examples() {
    let p = HPoint::new(0.3, 2.0).unwrap();
    assert_eq!(mobius_apply(&Mobius::IDENTITY, p).unwrap(), p);
    let t = Mobius::new(1.0, 2.0, 0.0, 1.0).unwrap();
    assert_eq!(mobius_apply(&t, HPoint::new(0.0, 1.0).unwrap()).unwrap(), HPoint::new(2.0, 1.0).unwrap());
    let s = Mobius::new(0.0, -1.0, 1.0, 0.0).unwrap();
    let q = mobius_apply(&s, HPoint::new(0.0, 2.0).unwrap()).unwrap();
    assert!(q.x.abs() < 1e-15 && (q.y - 0.5).abs() < 1e-15);
    let e = std::f64::consts::E;
    let d = hyperbolic_distance(HPoint::new(0.0, 1.0).unwrap(), HPoint::new(0.0, e).unwrap());
    assert!((d - 1.0).abs() < 1e-14);
}

/// First side, in scan order, whose geodesic separates p from the basepoint,
/// decided from the circle or line itself.
fn brute_force_side(s: &SurfaceModel, p: HPoint) -> Option<usize> {
    let b = s.basepoint;
    s.sides.iter().position(|side| match side.geodesic {
        Geodesic::Vertical { x } => (p.x - x).signum() != (b.x - x).signum() && (p.x - x).abs() > 1e-9 * p.y,
        Geodesic::Circle { center, radius } => {
            let dp = ((p.x - center).powi(2) + p.y * p.y).sqrt() - radius;
            let db = ((b.x - center).powi(2) + b.y * b.y).sqrt() - radius;
            dp.signum() != db.signum() && dp.abs() > 1e-9
        }
    })
}

#[test]
fn locate_agrees_with_brute_force_separation() {
    for s in [SurfaceModel::genus2_octagon(), SurfaceModel::thrice_punctured_sphere()] {
        assert_eq!(s.locate(s.basepoint), Location::Inside);
        let mut rng = stream(21, 0);
        for _ in 0..2000 {
            let p = HPoint::new(rng.gen_range(-3.0..3.0), (rng.gen_range(-3.0f64..2.0)).exp()).unwrap();
            let expected = match brute_force_side(&s, p) {
                Some(i) => Location::ExitedThroughSide(i),
                None => Location::Inside,
            };
            assert_eq!(s.locate(p), expected, "{} at {p:?}", s.name);
        }
    }
}

#[test]
fn generator_image_of_basepoint_reduces_to_one_letter() {
    let s = SurfaceModel::genus2_octagon();
    for g in 0..s.n_generators() {
        for l in [Letter::forward(g), Letter::backward(g)] {
            let p = s.letter_mobius(l).apply(s.basepoint).unwrap();
            let (q, w) = s.reduce_to_domain(p).unwrap();
            assert!(hyperbolic_distance(q, s.basepoint) < 1e-9);
            assert_eq!(w.letters(), &[l]);
        }
    }
}

#[test]
fn reduction_recovers_random_products() {
    for s in [SurfaceModel::genus2_octagon(), SurfaceModel::thrice_punctured_sphere()] {
        let mut rng = stream(22, 0);
        for _ in 0..300 {
            let len = rng.gen_range(1..=5);
            let word = Word(
                (0..len)
                    .map(|_| {
                        let g = rng.gen_range(0..s.n_generators());
                        if rng.gen() { Letter::forward(g) } else { Letter::backward(g) }
                    })
                    .collect(),
            );
            let g = s.word_mobius(&word);
            let (q, w) = s.reduce_to_domain(g.apply(s.basepoint).unwrap()).unwrap();
            assert!(hyperbolic_distance(q, s.basepoint) < 1e-8);
            assert!(same_mobius(&s.word_mobius(&w), &g, 1e-8), "{word:?} recovered as {w:?}");
        }
    }
}

#[test]
fn reduction_is_idempotent() {
    let s = SurfaceModel::genus2_octagon();
    let mut rng = stream(23, 0);
    for _ in 0..200 {
        let p = HPoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.05..5.0)).unwrap();
        let (q, _) = s.reduce_to_domain(p).unwrap();
        let (r, w) = s.reduce_to_domain(q).unwrap();
        assert_eq!(q, r);
        assert!(w.is_empty());
    }
}

#[test]
fn octagon_relation_closes() {
    let s = SurfaceModel::genus2_octagon();
    let rel = s.vertex_cycle_relation().unwrap();
    assert_eq!(rel.len(), 8);
    assert!(same_mobius(&s.word_mobius(&rel), &Mobius::IDENTITY, 1e-8));
}
