//! Named example configurations: a surface, a representation of its
//! fundamental group and, where known, divisor data.
//!
//! Presets on the genus-2 octagon that are built from two matrices (X, Y) send
//! generators a₀, a₁ ↦ X and a₂, a₃ ↦ Y. The octagon relation then reduces to
//! the identity, so these are genuine representations of the surface group.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cocycle::{PreservedForm, RepFlags, Representation};
use crate::error::{Error, Result};
use crate::geometry::{Circle, SchottkyData, SurfaceModel};
use crate::grassmann::{fhat_form, DivisorForm, Subspace};
use crate::harmonic::Degree;
use crate::linalg::{self, c, CMat, CVec};
use crate::rng::stream;

#[derive(Clone, Debug, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub surface: &'static str,
    pub rank: &'static str,
    pub needs_parameters: bool,
    pub description: &'static str,
}

pub fn catalog() -> Vec<PresetInfo> {
    let p = |name, surface, rank, needs_parameters, description| PresetInfo {
        name,
        surface,
        rank,
        needs_parameters,
        description,
    };
    vec![
        p("unitary_rank2", "genus2_octagon", "2", false, "two Haar-random unitaries; all exponents vanish"),
        p("unitary_rank1", "genus2_octagon", "1", false, "unit-modulus characters; the exponent vanishes"),
        p("fuchsian_genus2", "genus2_octagon", "2", false, "uniformizing representation; divisor at the section [i:1], degree 1/4/pi"),
        p("fuchsian_cusped", "thrice_punctured_sphere", "2", false, "uniformizing representation of the level-2 congruence group"),
        p("fuchsian_sym2", "genus2_octagon", "3", false, "symmetric square of the uniformizing representation"),
        p("sp4_random", "genus2_octagon", "4", false, "two random products of Sp(4,R) generators, symplectic form J"),
        p("schottky_rank2", "genus2_octagon", "2", false, "classical Schottky pair (disks at ±2, ±2i, radius 1); section divisor at z = 0"),
        p("weight1_vhs", "genus2_octagon", "2", false, "SU(1,1) form of the uniformization, h = diag(1,-1), E1 = e2, degree 1/4/pi"),
        p("weight2_1k1", "genus2_octagon", "k+2", false, "type (1,k,1): symmetric square plus a trivial block, F = E2 + E1, degree 1/2/pi"),
        p("hypergeometric_sp4", "thrice_punctured_sphere", "4", true, "Levelt companion pair from local exponents alpha, beta (14 named slots)"),
    ]
}

/// One of the fourteen named hypergeometric cases. Parameters are not shipped;
/// they are configuration inputs taken from the literature on Sp(4)
/// hypergeometric monodromy.
#[derive(Clone, Debug, Serialize)]
pub struct HypergeometricSlot {
    pub name: String,
    pub alpha: Option<[f64; 4]>,
    pub beta: Option<[f64; 4]>,
    /// "thin" or "thick" once known.
    pub label: Option<String>,
}

pub fn hypergeometric_slots() -> Vec<HypergeometricSlot> {
    (1..=14)
        .map(|i| HypergeometricSlot {
            name: format!("case_{i:02}"),
            alpha: None,
            beta: None,
            label: None,
        })
        .collect()
}

/// Divisor of a codimension-k subspace F with its (optional) configured degree.
#[derive(Clone, Debug)]
pub struct DivisorSpec {
    pub k: usize,
    pub subspace: Subspace,
    pub form: DivisorForm,
    pub degree: Option<Degree>,
}

impl DivisorSpec {
    pub fn from_subspace(subspace: Subspace, degree: Option<Degree>) -> Result<Self> {
        let k = subspace.ambient_dim() - subspace.dim();
        Ok(Self {
            k,
            form: fhat_form(&subspace)?,
            subspace,
            degree,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct PresetParams {
    pub matrix_seed: Option<u64>,
    /// k of type (1,k,1).
    pub k: Option<usize>,
    pub alpha: Option<[f64; 4]>,
    pub beta: Option<[f64; 4]>,
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub surface: SurfaceModel,
    pub rep: Representation,
    pub divisor: Option<DivisorSpec>,
    pub v0: Option<CVec>,
    pub schottky: Option<SchottkyData>,
}

// Neither generator is projectively near an involution; near-involutions make
// the unitary fiber measure mix slowly.
const UNITARY_SEED: u64 = 0x0411_7a34;
const SP4_SEED: u64 = 0x5e4_0004;

fn cvec(entries: &[Complex64]) -> CVec {
    CVec::from_column_slice(entries)
}

fn flags(strongly_irreducible: bool, unitary: bool) -> RepFlags {
    RepFlags {
        unitary,
        strongly_irreducible,
    }
}

fn doubled(x: &CMat, y: &CMat) -> Vec<CMat> {
    vec![x.clone(), x.clone(), y.clone(), y.clone()]
}

/// Haar unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    linalg::qr_positive(&g).0
}

/// Sym² of a 2×2 matrix in the orthonormal basis (v₁², √2 v₁v₂, v₂²).
pub fn sym2(g: &CMat) -> CMat {
    let (a, b, cc, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let s = c(2f64.sqrt(), 0.0);
    CMat::from_row_slice(
        3,
        3,
        &[
            a * a,
            s * a * b,
            b * b,
            s * a * cc,
            a * d + b * cc,
            s * b * d,
            cc * cc,
            s * cc * d,
            d * d,
        ],
    )
}

/// Quadratic form of signature (2,1) preserved by Sym² of SL(2,ℝ).
pub fn sym2_form() -> CMat {
    linalg::from_real(3, 3, &[0.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0])
}

/// J = [[0, I], [−I, 0]] on ℂ⁴.
pub fn sp4_form() -> CMat {
    let mut j = CMat::zeros(4, 4);
    for i in 0..2 {
        j[(i, i + 2)] = c(1.0, 0.0);
        j[(i + 2, i)] = c(-1.0, 0.0);
    }
    j
}

fn random_sp4<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CMat {
    let mut g = CMat::identity(4, 4);
    for _ in 0..len {
        let m = match rng.gen_range(0..3) {
            0 => {
                let (p, q, r): (f64, f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                let mut t = CMat::identity(4, 4);
                t[(0, 2)] = c(p, 0.0);
                t[(0, 3)] = c(q, 0.0);
                t[(1, 2)] = c(q, 0.0);
                t[(1, 3)] = c(r, 0.0);
                t
            }
            1 => {
                // diag(A, A^{-T}) with A near the identity
                let a = CMat::from_fn(2, 2, |i, j| {
                    c(f64::from(u8::from(i == j)) + 0.5 * rng.sample::<f64, _>(StandardNormal), 0.0)
                });
                let a = if a.determinant().norm() < 0.1 { CMat::identity(2, 2) } else { a };
                let ait = linalg::inverse(&a).expect("determinant checked").transpose();
                let mut t = CMat::zeros(4, 4);
                t.view_mut((0, 0), (2, 2)).copy_from(&a);
                t.view_mut((2, 2), (2, 2)).copy_from(&ait);
                t
            }
            _ => sp4_form(),
        };
        g = g * m;
    }
    g
}

fn schottky_data() -> Result<SchottkyData> {
    let circ = |x: f64, y: f64| Circle {
        center: c(x, y),
        radius: 1.0,
    };
    SchottkyData::new(&[(circ(-2.0, 0.0), circ(2.0, 0.0)), (circ(0.0, -2.0), circ(0.0, 2.0))])
}

/// Companion matrix of Π(x − e^{2πi·e}) for the four exponents.
pub fn companion(exponents: &[f64; 4]) -> CMat {
    // coefficients of the monic polynomial, constant term first
    let mut coef = vec![c(1.0, 0.0)];
    for &e in exponents {
        let root = Complex64::from_polar(1.0, 2.0 * PI * e);
        let mut next = vec![c(0.0, 0.0); coef.len() + 1];
        for (i, &a) in coef.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * root;
        }
        coef = next;
    }
    let mut m = CMat::zeros(4, 4);
    for i in 1..4 {
        m[(i, i - 1)] = c(1.0, 0.0);
    }
    for i in 0..4 {
        m[(i, 3)] = -coef[i];
    }
    m
}

fn octagon_matrices() -> Vec<CMat> {
    SurfaceModel::genus2_octagon().generators.iter().map(|m| m.to_cmat()).collect()
}

pub fn build_preset(name: &str, params: &PresetParams) -> Result<Preset> {
    let octagon = SurfaceModel::genus2_octagon;
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let i = c(0.0, 1.0);
    let simple = |surface: SurfaceModel, rep: Representation| Preset {
        name: name.to_string(),
        surface,
        rep,
        divisor: None,
        v0: None,
        schottky: None,
    };
    let preset = match name {
        "unitary_rank2" => {
            let mut rng = stream(params.matrix_seed.unwrap_or(UNITARY_SEED), 0);
            let (x, y) = (random_unitary(&mut rng, 2), random_unitary(&mut rng, 2));
            let rep = Representation::new(doubled(&x, &y), None, flags(true, true))?;
            let mut p = simple(octagon(), rep);
            p.divisor = Some(DivisorSpec::from_subspace(
                Subspace::from_columns(&[cvec(&[one, zero])])?,
                Some("0".parse()?),
            )?);
            p
        }
        "unitary_rank1" => {
            let gens = [0.3, 1.1, 2.3, 4.0]
                .iter()
                .map(|&t| CMat::from_element(1, 1, Complex64::from_polar(1.0, t)))
                .collect();
            simple(octagon(), Representation::new(gens, None, flags(true, true))?)
        }
        "fuchsian_genus2" => {
            let rep = Representation::new(octagon_matrices(), None, flags(true, false))?;
            let mut p = simple(octagon(), rep);
            p.divisor = Some(DivisorSpec::from_subspace(
                Subspace::from_columns(&[cvec(&[i, one])])?,
                Some("1/4/pi".parse()?),
            )?);
            p
        }
        "fuchsian_cusped" => {
            let s = SurfaceModel::thrice_punctured_sphere();
            let gens = s.generators.iter().map(|m| m.to_cmat()).collect();
            simple(s, Representation::new(gens, None, flags(true, false))?)
        }
        "fuchsian_sym2" => {
            let gens = octagon_matrices().iter().map(sym2).collect();
            let form = PreservedForm::hermitian(sym2_form())?;
            simple(octagon(), Representation::new(gens, Some(form), flags(true, false))?)
        }
        "sp4_random" => {
            let mut rng = stream(params.matrix_seed.unwrap_or(SP4_SEED), 0);
            let (x, y) = (random_sp4(&mut rng, 6), random_sp4(&mut rng, 6));
            let form = PreservedForm::symplectic(sp4_form())?;
            simple(octagon(), Representation::new(doubled(&x, &y), Some(form), flags(true, false))?)
        }
        "schottky_rank2" => {
            let data = schottky_data()?;
            let rep = Representation::new(doubled(&data.generator(0), &data.generator(1)), None, flags(true, false))?;
            let mut p = simple(octagon(), rep);
            // the section's point z = 0 of the domain of discontinuity
            p.divisor = Some(DivisorSpec::from_subspace(Subspace::from_columns(&[cvec(&[zero, one])])?, None)?);
            p.v0 = Some(cvec(&[c(0.85, 0.85), one]));
            p.schottky = Some(data);
            p
        }
        "weight1_vhs" => {
            // Cayley transform K = [[1, −i], [1, i]] takes the upper half-plane to the disk
            let k = CMat::from_row_slice(2, 2, &[one, -i, one, i]);
            let kinv = linalg::inverse(&k)?;
            let gens = octagon_matrices().iter().map(|g| &k * g * &kinv).collect();
            let h = linalg::diag(&[one, -one]);
            let rep = Representation::new(gens, Some(PreservedForm::hermitian(h)?), flags(true, false))?;
            let mut p = simple(octagon(), rep);
            // E¹ over the basepoint i is K·(i, 1) ∝ e₂
            p.divisor = Some(DivisorSpec::from_subspace(
                Subspace::from_columns(&[cvec(&[zero, one])])?,
                Some("1/4/pi".parse()?),
            )?);
            p
        }
        "weight2_1k1" => {
            let kk = params.k.unwrap_or(1);
            if kk == 0 {
                return Err(Error::Config("weight2_1k1 needs k ≥ 1".into()));
            }
            let n = kk + 2;
            let embed = |m: &CMat| {
                let mut out = CMat::identity(n, n);
                out.view_mut((0, 0), (3, 3)).copy_from(m);
                out
            };
            let gens = octagon_matrices().iter().map(|g| embed(&sym2(g))).collect();
            let mut q = CMat::identity(n, n) * c(-1.0, 0.0);
            q.view_mut((0, 0), (3, 3)).copy_from(&sym2_form());
            let rep = Representation::new(gens, Some(PreservedForm::hermitian(q)?), flags(kk == 1, false))?;
            // over the basepoint: E² = Sym²(i, 1), E¹ = (1, 0, 1) ⊕ trivial block
            let s2 = c(2f64.sqrt(), 0.0);
            let mut e2 = CVec::zeros(n);
            e2[0] = -one;
            e2[1] = s2 * i;
            e2[2] = one;
            let mut cols = vec![e2];
            let mut e1 = CVec::zeros(n);
            e1[0] = one;
            e1[2] = one;
            cols.push(e1);
            for j in 3..n {
                let mut v = CVec::zeros(n);
                v[j] = one;
                cols.push(v);
            }
            let mut p = simple(octagon(), rep);
            p.divisor = Some(DivisorSpec::from_subspace(Subspace::from_columns(&cols)?, Some("1/2/pi".parse()?))?);
            p
        }
        "hypergeometric_sp4" => {
            let (Some(alpha), Some(beta)) = (params.alpha, params.beta) else {
                return Err(Error::Config(
                    "hypergeometric_sp4 needs representation.alpha and representation.beta (four rationals each)".into(),
                ));
            };
            // cusps ∞ and 0 get A and B; the third cusp word g₁g₂⁻¹ then maps
            // to AB⁻¹, conjugate to the pseudo-reflection (A⁻¹B)⁻¹
            let a = companion(&alpha);
            let b = companion(&beta);
            simple(
                SurfaceModel::thrice_punctured_sphere(),
                Representation::new(vec![a, b], None, flags(false, false))?,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; known: {}",
                catalog().iter().map(|p| p.name).collect::<Vec<_>>().join(", ")
            )))
        }
    };
    Ok(preset)
}

pub fn surface_by_name(name: &str) -> Result<SurfaceModel> {
    match name {
        "genus2_octagon" => Ok(SurfaceModel::genus2_octagon()),
        "thrice_punctured_sphere" => Ok(SurfaceModel::thrice_punctured_sphere()),
        other => Err(Error::Config(format!(
            "unknown surface {other:?}; known: genus2_octagon, thrice_punctured_sphere"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::transport;
    use crate::geometry::Word;
    use crate::grassmann::{divisor_distance, plucker_embed};

    #[test]
    fn catalog_has_at_least_six() {
        assert!(catalog().len() >= 6);
        for p in catalog().iter().filter(|p| !p.needs_parameters) {
            build_preset(p.name, &PresetParams::default()).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
        assert_eq!(hypergeometric_slots().len(), 14);
    }

    #[test]
    fn octagon_presets_satisfy_the_relation() {
        let s = SurfaceModel::genus2_octagon();
        let rel = s.vertex_cycle_relation().unwrap();
        for name in ["unitary_rank2", "unitary_rank1", "fuchsian_genus2", "fuchsian_sym2", "sp4_random", "schottky_rank2", "weight1_vhs"] {
            let p = build_preset(name, &PresetParams::default()).unwrap();
            let r = p.rep.relation_residual(&rel).unwrap();
            assert!(r < 1e-8, "{name}: {r}");
        }
    }

    #[test]
    fn companion_char_poly_roots() {
        let alpha = [0.5, 0.5, 0.5, 0.5];
        let beta = [0.0, 0.0, 0.25, 0.75];
        for ex in [alpha, beta] {
            let m = companion(&ex);
            for &e in &ex {
                let root = Complex64::from_polar(1.0, 2.0 * PI * e);
                let det = (CMat::identity(4, 4) * root - &m).determinant();
                assert!(det.norm() < 1e-9, "{e}: {det}");
            }
        }
    }

    #[test]
    fn hypergeometric_third_cusp_is_pseudo_reflection() {
        let params = PresetParams {
            alpha: Some([0.0; 4]),
            beta: Some([0.5, 0.5, 0.25, 0.75]),
            ..Default::default()
        };
        let p = build_preset("hypergeometric_sp4", &params).unwrap();
        let w = Word::from_codes(&[1, -2]).unwrap();
        // the word is parabolic and fixes one of the identified vertices ±1
        let m = p.surface.word_mobius(&w);
        assert!((m.trace().abs() - 2.0).abs() < 1e-12);
        let fixes = |x: f64| (m.apply_boundary(Some(c(x, 0.0))).unwrap() - c(x, 0.0)).norm() < 1e-12;
        assert!(fixes(1.0) || fixes(-1.0));
        let t = transport(&p.rep, &w).unwrap().to_matrix() - CMat::identity(4, 4);
        assert_eq!(linalg::rank(&t, 1e-10), 1);
    }

    #[test]
    fn schottky_section_outside_limit_disks() {
        let p = build_preset("schottky_rank2", &PresetParams::default()).unwrap();
        let data = p.schottky.unwrap();
        for d in data.limit_disks(6).unwrap() {
            assert!(!d.contains(c(0.0, 0.0)));
            assert!(!d.contains(c(0.85, 0.85)));
        }
    }

    #[test]
    fn weight1_form_is_diagonal_after_cayley() {
        let k = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, -1.0), c(1.0, 0.0), c(0.0, 1.0)]);
        let kinv = linalg::inverse(&k).unwrap();
        // h(v) = −2 Im(v₁ v̄₂) on the half-plane model
        let h = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let hp = kinv.adjoint() * h * &kinv * c(2.0, 0.0);
        assert!((hp - linalg::diag(&[c(1.0, 0.0), c(-1.0, 0.0)])).norm() < 1e-14);
    }

    #[test]
    fn weight2_divisor_misses_real_isotropic_lines() {
        let p = build_preset("weight2_1k1", &PresetParams::default()).unwrap();
        let d = p.divisor.unwrap();
        for j in 0..64 {
            let t = 2.0 * PI * j as f64 / 64.0;
            let (x, y) = (t.cos(), t.sin());
            // Sym²(x, y) is real and isotropic for the preserved form
            let v = cvec(&[c(x * x, 0.0), c(2f64.sqrt() * x * y, 0.0), c(y * y, 0.0)]);
            let g = Subspace::from_columns(&[v]).unwrap();
            assert!(divisor_distance(&plucker_embed(&g), &d.form) > 0.1);
        }
    }
}
