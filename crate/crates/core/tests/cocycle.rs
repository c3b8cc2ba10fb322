use flatlyap_core::cocycle::{cocycle_norm_log, distance_norm_bound_check, exterior_power_rep, transport};
use flatlyap_core::geometry::{Letter, Word};
use flatlyap_core::harness::{build_preset, Preset, PresetParams};
use flatlyap_core::linalg::{self, CMat};
use flatlyap_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn preset(name: &str) -> Preset {
    build_preset(name, &PresetParams::default()).unwrap()
}

fn word(max_len: usize, gens: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..gens, prop::bool::ANY), 0..=max_len).prop_map(|ls| {
        Word(ls.into_iter().map(|(g, f)| if f { Letter::forward(g) } else { Letter::backward(g) }).collect())
    })
}

fn random_word(seed: u64, len: usize, gens: usize) -> Word {
    let mut rng = stream(seed, 0);
    Word(
        (0..len)
            .map(|_| {
                let g = rng.gen_range(0..gens);
                if rng.gen() { Letter::forward(g) } else { Letter::backward(g) }
            })
            .collect(),
    )
}

/// Direct left-to-right product with no rescaling.
fn naive(p: &Preset, w: &Word) -> CMat {
    w.letters().iter().fold(CMat::identity(p.rep.n, p.rep.n), |acc, &l| acc * p.rep.letter_matrix(l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transport_matches_naive_product(w in word(12, 4)) {
        let p = preset("sp4_random");
        let t = transport(&p.rep, &w).unwrap().to_matrix();
        let m = naive(&p, &w);
        prop_assert!((&t - &m).norm() <= 1e-9 * m.norm(), "{} vs {}", t.norm(), m.norm());
    }

    #[test]
    fn norm_log_is_subadditive(a in word(30, 4), b in word(30, 4)) {
        let p = preset("fuchsian_sym2");
        let h = |w: &Word| cocycle_norm_log(&transport(&p.rep, w).unwrap());
        prop_assert!(h(&a.concat(&b)) <= h(&a) + h(&b) + 1e-9);
    }

    #[test]
    fn exterior_power_is_functorial(w in word(8, 4), k in 1usize..=3) {
        let p = preset("sp4_random");
        let pow = exterior_power_rep(&p.rep, k).unwrap();
        let lhs = transport(&pow, &w).unwrap().to_matrix();
        let rhs = linalg::exterior_power(&transport(&p.rep, &w).unwrap().to_matrix(), k);
        prop_assert!((&lhs - &rhs).norm() <= 1e-8 * rhs.norm());
    }

    #[test]
    fn exterior_norm_is_top_singular_value_product(w in word(40, 4), k in 1usize..=3) {
        let p = preset("sp4_random");
        let t = transport(&p.rep, &w).unwrap();
        let sv = linalg::singular_values(&t.unit_matrix);
        let expected = k as f64 * t.log_scale + sv[..k].iter().map(|s| s.ln()).sum::<f64>();
        let pow = exterior_power_rep(&p.rep, k).unwrap();
        let got = cocycle_norm_log(&transport(&pow, &w).unwrap());
        prop_assert!((got - expected).abs() <= 1e-8 * expected.abs().max(1.0), "{got} vs {expected}");
    }
}

#[test]
fn unitary_products_stay_unitary_at_length_1000() {
    let p = preset("unitary_rank2");
    let w = random_word(51, 1000, 4);
    let t = transport(&p.rep, &w).unwrap();
    assert!(t.log_scale.abs() < 1e-12);
    let m = t.to_matrix();
    let res = (m.adjoint() * &m - CMat::identity(2, 2)).norm();
    assert!(res < 1e-10, "{res}");
}

#[test]
fn forms_are_preserved_by_short_products() {
    for name in ["weight1_vhs", "fuchsian_sym2", "sp4_random"] {
        let p = preset(name);
        let form = p.rep.form.as_ref().unwrap();
        for seed in 0..20 {
            let m = naive(&p, &random_word(52 + seed, 6, 4));
            let scale = m.norm().powi(2);
            assert!(form.residual(&m) <= 1e-10 * scale, "{name}: {}", form.residual(&m));
        }
    }
}

#[test]
fn fuchsian_norm_grows_at_half_the_displacement() {
    // for SL(2,R) the orbit distance from i is 2·log‖g‖, so the ratio is 1/2 up to
    // the basepoint offset, which fades as words lengthen
    let p = preset("fuchsian_genus2");
    let long = distance_norm_bound_check(&p.rep, &p.surface, 200, 60, 53).unwrap();
    assert!((long - 0.5).abs() < 0.1, "{long}");
    let doubled = distance_norm_bound_check(&p.rep, &p.surface, 400, 60, 54).unwrap();
    assert!((long - doubled).abs() < 0.05, "{long} vs {doubled}");
}

#[test]
fn unitary_norm_bound_is_zero() {
    let p = preset("unitary_rank2");
    let b = distance_norm_bound_check(&p.rep, &p.surface, 100, 20, 55).unwrap();
    assert!(b < 1e-10, "{b}");
}

#[test]
fn exterior_power_rejects_bad_degree() {
    let p = preset("fuchsian_genus2");
    assert!(exterior_power_rep(&p.rep, 0).is_err());
    assert!(exterior_power_rep(&p.rep, 3).is_err());
    let top = exterior_power_rep(&p.rep, 2).unwrap();
    // det = 1 on SL(2)
    for g in &top.generators {
        assert!((g[(0, 0)].re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn symplectic_form_dropped_with_warning() {
    let p = preset("sp4_random");
    let pow = exterior_power_rep(&p.rep, 2).unwrap();
    assert!(pow.form.is_none());
    assert_eq!(pow.warnings.len(), 1);
}
