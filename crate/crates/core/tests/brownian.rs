use flatlyap_core::brownian::{
    dynkin_residual, escape_rate, sample_trajectory, step, sup_tail, PathConfig, ProductFn, TrajectorySummary,
};
use flatlyap_core::geometry::{hyperbolic_distance, HPoint, SurfaceModel};
use flatlyap_core::rng::{normal_pair, stream};
use flatlyap_core::stats::{ks_critical_001, ks_statistic, mean_stderr};
use flatlyap_core::Error;
use rayon::prelude::*;

fn cfg(seed: u64, dt: f64, horizon: f64) -> PathConfig {
    PathConfig {
        dt,
        horizon,
        max_substep_refinements: 40,
        rng_seed: seed,
        cusp_y_cap: 50.0,
    }
}

fn run(surface: &SurfaceModel, start: HPoint, c: &PathConfig, n: usize) -> Vec<TrajectorySummary> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_trajectory(surface, start, c, &mut stream(c.rng_seed, i)).unwrap())
        .collect()
}

#[test]
fn log_ordinate_drift_is_minus_half_dt() {
    let dt = 0.04;
    let p = HPoint::new(0.0, 1.0).unwrap();
    let mut rng = stream(31, 0);
    let logs: Vec<f64> = (0..1_000_000).map(|_| step(p, dt, normal_pair(&mut rng)).y.ln()).collect();
    let (m, se) = mean_stderr(&logs);
    assert!((m + dt / 2.0).abs() <= 3.0 * se, "{m} vs {} (se {se})", -dt / 2.0);
}

#[test]
fn ordinate_ratio_law_is_scale_free() {
    let dt = 0.1;
    let mut r1 = stream(32, 0);
    let mut r2 = stream(32, 1);
    let low = HPoint::new(0.0, 1.0).unwrap();
    let high = HPoint::new(0.0, 100.0).unwrap();
    let a: Vec<f64> = (0..20_000).map(|_| step(low, dt, normal_pair(&mut r1)).y / low.y).collect();
    let b: Vec<f64> = (0..20_000).map(|_| step(high, dt, normal_pair(&mut r2)).y / high.y).collect();
    assert!(ks_statistic(&a, &b) < ks_critical_001(a.len(), b.len()));
}

#[test]
fn harmonic_function_is_a_martingale() {
    // x·y is harmonic and paths from i stay bounded with overwhelming probability at t = 1
    let (r, se) = dynkin_residual(&ProductFn, HPoint::new(0.0, 1.0).unwrap(), 1.0, 0.01, 10_000, 33).unwrap();
    assert!(r.abs() <= 3.0 * se, "{r} ± {se}");
}

#[test]
fn genus2_unreduced_displacement_rate() {
    let s = SurfaceModel::genus2_octagon();
    let rate = |dt: f64, seed: u64| {
        let trs = run(&s, s.basepoint, &cfg(seed, dt, 50.0), 200);
        let rates: Vec<f64> = trs.iter().map(|t| hyperbolic_distance(t.start, t.unreduced_endpoint) / 50.0).collect();
        mean_stderr(&rates)
    };
    let (fine, se_f) = rate(1e-3, 34);
    let (coarse, se_c) = rate(1e-2, 35);
    // E d_T = T/2 + O(1), so at T = 50 the rate sits a few hundredths above 1/2
    assert!((fine - 0.5).abs() < 0.05, "{fine}");
    assert!((fine - coarse).abs() <= 3.0 * se_f.hypot(se_c), "{fine} vs {coarse}");
}

#[test]
fn escape_rate_examples() {
    let o = HPoint::new(0.0, 1.0).unwrap();
    let short = escape_rate(o, &cfg(36, 0.01, 0.05), 200, 10).unwrap();
    assert!(short.mean >= 0.0);
    let e = escape_rate(o, &cfg(37, 0.05, 200.0), 1000, 20).unwrap();
    assert!((e.mean - 0.5).abs() <= 0.02, "{e:?}");
    let other = escape_rate(HPoint::new(3.0, 0.01).unwrap(), &cfg(38, 0.05, 200.0), 1000, 20).unwrap();
    assert!((e.mean - other.mean).abs() <= e.ci.hypot(other.ci), "{e:?} vs {other:?}");
}

#[test]
fn halving_dt_moves_escape_rate_less_than_ci() {
    let o = HPoint::new(0.0, 1.0).unwrap();
    let a = escape_rate(o, &cfg(39, 0.1, 100.0), 1000, 20).unwrap();
    let b = escape_rate(o, &cfg(40, 0.05, 100.0), 1000, 20).unwrap();
    assert!((a.mean - b.mean).abs() <= a.ci.hypot(b.ci), "{a:?} vs {b:?}");
}

#[test]
fn sup_tail_basics() {
    let o = HPoint::new(0.0, 1.0).unwrap();
    let radii: Vec<f64> = (0..12).map(|i| 0.25 * i as f64).collect();
    let tail = sup_tail(o, &cfg(41, 0.01, 1.0), &radii, 1.0, 5000, 0.0).unwrap();
    assert_eq!(tail[0].probability, 1.0);
    assert!(tail.windows(2).all(|w| w[1].probability <= w[0].probability));
    assert!(sup_tail(o, &cfg(41, 0.01, 1.0), &[-1.0], 1.0, 10, 0.0).is_err());
}

#[test]
fn every_path_finishes_or_fails_loudly() {
    let s = SurfaceModel::thrice_punctured_sphere();
    let c = PathConfig {
        cusp_y_cap: 5.0,
        ..cfg(42, 0.05, 40.0)
    };
    let mut finished = 0;
    let mut trapped = 0;
    for i in 0..200 {
        match sample_trajectory(&s, s.basepoint, &c, &mut stream(42, i)) {
            Ok(t) => {
                assert!((t.elapsed - 40.0).abs() < 1e-9);
                finished += 1;
            }
            Err(Error::CuspTrap { .. }) => trapped += 1,
            Err(e) => panic!("unexpected {e}"),
        }
    }
    assert_eq!(finished + trapped, 200);
    assert!(finished > 0);
}

#[test]
fn deep_cusp_start_reports_a_trap() {
    let s = SurfaceModel::thrice_punctured_sphere();
    let deep = HPoint::new(s.basepoint.x, 1e5).unwrap();
    let c = PathConfig {
        cusp_y_cap: 2.0,
        ..cfg(47, 0.05, 1.0)
    };
    match sample_trajectory(&s, deep, &c, &mut stream(47, 0)) {
        Err(Error::CuspTrap { height, .. }) => assert!(height > 2.0 * 1024.0),
        other => panic!("expected a cusp trap, got {other:?}"),
    }
}

#[test]
fn distance_law_is_homogeneous_and_reversible() {
    // from a fixed start, and then restarted at each endpoint: same law of d(start, end)
    let free = SurfaceModel::free_plane();
    let o = HPoint::new(0.0, 1.0).unwrap();
    let c = cfg(43, 0.05, 3.0);
    let first = run(&free, o, &c, 4000);
    let d1: Vec<f64> = first.iter().map(|t| hyperbolic_distance(o, t.endpoint)).collect();
    let c2 = cfg(44, 0.05, 3.0);
    let d2: Vec<f64> = first
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let back = sample_trajectory(&free, t.endpoint, &c2, &mut stream(44, i as u64)).unwrap();
            hyperbolic_distance(back.endpoint, t.endpoint)
        })
        .collect();
    assert!(ks_statistic(&d1, &d2) < ks_critical_001(d1.len(), d2.len()));
}

#[test]
fn deck_word_reproduces_unreduced_endpoint() {
    for s in [SurfaceModel::genus2_octagon(), SurfaceModel::thrice_punctured_sphere()] {
        let trs: Vec<TrajectorySummary> = (0..100u64)
            .filter_map(|i| sample_trajectory(&s, s.basepoint, &cfg(45, 0.05, 50.0), &mut stream(45, i)).ok())
            .collect();
        assert!(trs.len() > 90);
        for t in trs {
            let q = s.word_mobius(&t.word).apply(t.endpoint).unwrap();
            let tol = 1e-6 * (t.steps as f64 / 1000.0).max(1.0);
            let d = hyperbolic_distance(q, t.unreduced_endpoint);
            assert!(d <= tol, "{}: {d} after {} steps", s.name, t.steps);
        }
    }
}

#[test]
fn same_seed_same_path() {
    let s = SurfaceModel::genus2_octagon();
    let c = cfg(46, 0.05, 20.0);
    let a = sample_trajectory(&s, s.basepoint, &c, &mut stream(46, 3)).unwrap();
    let b = sample_trajectory(&s, s.basepoint, &c, &mut stream(46, 3)).unwrap();
    assert_eq!(a, b);
}
