use flatlyap_core::brownian::PathConfig;
use flatlyap_core::cocycle::{direct_sum, RepFlags, Representation};
use flatlyap_core::geometry::SurfaceModel;
use flatlyap_core::harness::{build_preset, Preset, PresetParams};
use flatlyap_core::linalg::CMat;
use flatlyap_core::lyapunov::{estimate_spectrum, estimate_top, exterior_consistency, symmetry_residual, EstimatorConfig};

fn preset(name: &str) -> Preset {
    build_preset(name, &PresetParams::default()).unwrap()
}

fn est(seed: u64, horizon: f64, n_paths: usize) -> EstimatorConfig {
    EstimatorConfig {
        path: PathConfig {
            dt: 0.05,
            horizon,
            max_substep_refinements: 40,
            rng_seed: seed,
            cusp_y_cap: 50.0,
        },
        n_paths,
        n_batches: 10,
        burn_in: 0.1,
        renorm_interval: 16,
    }
}

#[test]
fn trivial_representation_has_zero_spectrum() {
    let rep = Representation::new(vec![CMat::identity(3, 3); 4], None, RepFlags::default()).unwrap();
    let s = SurfaceModel::genus2_octagon();
    let top = estimate_top(&rep, &s, &est(61, 20.0, 40)).unwrap();
    assert_eq!(top.lambda1, 0.0);
    let spec = estimate_spectrum(&rep, &s, &est(61, 20.0, 40)).unwrap();
    assert!(spec.lambdas.iter().all(|&l| l == 0.0), "{:?}", spec.lambdas);
}

#[test]
fn block_sum_with_unitary_keeps_the_fuchsian_top() {
    let f = preset("fuchsian_genus2");
    let u = preset("unitary_rank1");
    let sum = direct_sum(&f.rep, &u.rep).unwrap();
    let cfg = est(62, 100.0, 100);
    let a = estimate_top(&f.rep, &f.surface, &cfg).unwrap();
    let b = estimate_top(&sum, &f.surface, &cfg).unwrap();
    assert!((a.lambda1 - b.lambda1).abs() <= a.ci.min(b.ci), "{a:?} vs {b:?}");
    let spec = estimate_spectrum(&sum, &f.surface, &cfg).unwrap();
    assert!(spec.lambdas[1].abs() < 1e-12, "{:?}", spec.lambdas);
    assert!((spec.lambdas[0] + spec.lambdas[2]).abs() <= spec.ci_half_widths[0] + spec.ci_half_widths[2]);
}

#[test]
fn spectrum_is_sorted_and_top_agrees() {
    let p = preset("fuchsian_sym2");
    let cfg = est(63, 200.0, 100);
    let spec = estimate_spectrum(&p.rep, &p.surface, &cfg).unwrap();
    assert!(spec.lambdas.windows(2).all(|w| w[0] >= w[1]), "{:?}", spec.lambdas);
    let top = estimate_top(&p.rep, &p.surface, &cfg).unwrap();
    assert!(
        (top.lambda1 - spec.lambdas[0]).abs() <= top.ci.hypot(spec.ci_half_widths[0]),
        "{} vs {}",
        top.lambda1,
        spec.lambdas[0]
    );
}

#[test]
fn symplectic_spectrum_pairs_up() {
    let p = preset("sp4_random");
    let spec = estimate_spectrum(&p.rep, &p.surface, &est(64, 100.0, 200)).unwrap();
    let sym = symmetry_residual(&spec);
    assert_eq!(sym.pairs.len(), 2);
    assert!(sym.within_ci, "{sym:?}");
}

#[test]
fn top_exterior_power_is_the_determinant_rate() {
    // SL(2): Λ² is the trivial line, so both sides vanish
    let p = preset("fuchsian_genus2");
    let chk = exterior_consistency(&p.rep, &p.surface, &est(65, 100.0, 100), 2).unwrap();
    assert!(chk.top_of_power.mean.abs() < 1e-10, "{chk:?}");
    assert!(chk.within_ci(), "{chk:?}");
}

#[test]
fn full_exterior_power_of_sym2_is_trivial() {
    let p = preset("fuchsian_sym2");
    let chk = exterior_consistency(&p.rep, &p.surface, &est(66, 100.0, 100), 3).unwrap();
    assert!(chk.top_of_power.mean.abs() < 1e-9, "{chk:?}");
    assert!(chk.within_ci(), "{chk:?}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = preset("fuchsian_sym2");
    let cfg = est(67, 30.0, 60);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let top = estimate_top(&p.rep, &p.surface, &cfg).unwrap();
                let spec = estimate_spectrum(&p.rep, &p.surface, &cfg).unwrap();
                (top.per_path, spec.lambdas, spec.ci_half_widths)
            })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn mismatched_generator_count_is_rejected() {
    let p = preset("fuchsian_cusped");
    let octagon = SurfaceModel::genus2_octagon();
    assert!(estimate_top(&p.rep, &octagon, &est(68, 10.0, 10)).is_err());
}
