//! Grassmannians: Plücker coordinates, the divisor of k-planes meeting a
//! codimension-k subspace, Hodge-type form predicates and a coverage
//! diagnostic for integral orbits on the real Lagrangian Grassmannian.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, ONE, ZERO};
use crate::rng::stream;

/// Relative singular-value threshold of the intersection predicate.
pub const INTERSECTION_TOL: f64 = 1e-8;
const ISOTROPY_TOL: f64 = 1e-9;
const ORBIT_CAP: usize = 5_000_000;
const CELL_CAP: usize = 50_000_000;

/// A subspace with an orthonormal basis in its columns.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: CMat,
}

impl Subspace {
    /// Orthonormalizes the columns of `m`; dependent columns are an error.
    pub fn new(m: CMat) -> Result<Self> {
        Ok(Self {
            basis: linalg::orthonormalize(&m, 1e-10)?,
        })
    }

    pub fn from_columns(cols: &[CVec]) -> Result<Self> {
        Self::new(CMat::from_columns(cols))
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// g·G
    pub fn apply(&self, g: &CMat) -> Result<Subspace> {
        Subspace::new(g * &self.basis)
    }

    /// Hermitian orthogonal complement.
    pub fn complement(&self) -> Result<Subspace> {
        if self.dim() == self.ambient_dim() {
            return Err(Error::Invalid("the whole space has no complement".into()));
        }
        Ok(Subspace {
            basis: linalg::orthogonal_complement(&self.basis),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PluckerVector(pub CVec);

#[derive(Clone, Debug, PartialEq)]
pub struct DivisorForm(pub CVec);

impl DivisorForm {
    /// Bilinear pairing Σ d_I p_I.
    pub fn pair(&self, p: &PluckerVector) -> Complex64 {
        self.0.iter().zip(p.0.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Hodge-type structure data. A real structure is v ↦ matrix·conj(v).
#[derive(Clone, Debug)]
pub enum StructureForm {
    Hermitian(CMat),
    Symplectic(CMat),
    RealStructure(CMat),
}

impl StructureForm {
    pub fn validate(&self) -> Result<()> {
        match self {
            StructureForm::Hermitian(h) => {
                if !linalg::is_hermitian(h, 1e-12) {
                    return Err(Error::Invalid("Hermitian form is not self-adjoint".into()));
                }
            }
            StructureForm::Symplectic(j) => {
                if (j + j.transpose()).norm() > 1e-12 || j.determinant().norm() < 1e-12 {
                    return Err(Error::Invalid("symplectic form must be antisymmetric and nondegenerate".into()));
                }
            }
            StructureForm::RealStructure(m) => {
                let n = m.nrows();
                if (m * m.map(|z| z.conj()) - CMat::identity(n, n)).norm() > 1e-10 {
                    return Err(Error::Invalid("real structure does not square to the identity".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            StructureForm::Hermitian(m) | StructureForm::Symplectic(m) | StructureForm::RealStructure(m) => m.nrows(),
        }
    }
}

pub fn plucker_embed(g: &Subspace) -> PluckerVector {
    let k = g.dim();
    let cols: Vec<usize> = (0..k).collect();
    let coords: Vec<Complex64> = linalg::subsets(g.ambient_dim(), k)
        .iter()
        .map(|rows| linalg::minor(&g.basis, rows, &cols))
        .collect();
    PluckerVector(CVec::from_vec(coords))
}

/// Λ^k of an orthonormal basis of the annihilator F°, where k = codim F.
pub fn fhat_form(f: &Subspace) -> Result<DivisorForm> {
    let w = f.complement()?;
    let k = w.dim();
    // annihilator rows are w_i*
    let rows = w.basis.adjoint();
    let idx: Vec<usize> = (0..k).collect();
    let coords: Vec<Complex64> = linalg::subsets(f.ambient_dim(), k)
        .iter()
        .map(|cols| linalg::minor(&rows, &idx, cols))
        .collect();
    let v = CVec::from_vec(coords);
    let norm = v.norm();
    if !(norm > 1e-12) {
        return Err(Error::Degenerate("annihilator wedge vanished".into()));
    }
    Ok(DivisorForm(v / c(norm, 0.0)))
}

/// Intersection verdict with σ_min of the pairing W*G between orthonormal
/// bases of F^⊥ and G: the cosine of the largest principal angle, zero exactly
/// when some vector of G is orthogonal to F^⊥.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntersectionCheck {
    pub intersects: bool,
    pub residual: f64,
}

pub fn intersects_nontrivially(g: &Subspace, f: &Subspace) -> Result<IntersectionCheck> {
    let n = g.ambient_dim();
    if f.ambient_dim() != n || g.dim() + f.dim() != n {
        return Err(Error::Invalid(format!(
            "need a k-plane and a codimension-k subspace, got dims {} and {} in {n}",
            g.dim(),
            f.dim()
        )));
    }
    let w = f.complement()?;
    let pairing = w.basis.adjoint() * &g.basis;
    let s = linalg::singular_values(&pairing);
    let residual = s.last().copied().unwrap_or(0.0);
    Ok(IntersectionCheck {
        intersects: residual <= INTERSECTION_TOL,
        residual,
    })
}

/// |⟨d, p⟩| for unit-norm inputs; in [0, 1].
pub fn divisor_distance(p: &PluckerVector, d: &DivisorForm) -> f64 {
    d.pair(p).norm().min(1.0)
}

/// basis*·S·basis (Hermitian) or basisᵗ·S·basis (symplectic) vanishes.
pub fn isotropic(g: &Subspace, s: &StructureForm) -> Result<IntersectionCheckLike> {
    check_dim(g, s)?;
    let b = &g.basis;
    let residual = match s {
        StructureForm::Hermitian(h) => (b.adjoint() * h * b).norm(),
        StructureForm::Symplectic(j) => (b.transpose() * j * b).norm(),
        StructureForm::RealStructure(_) => {
            return Err(Error::Invalid("isotropy needs a Hermitian or symplectic form".into()))
        }
    };
    Ok(IntersectionCheckLike {
        holds: residual <= ISOTROPY_TOL,
        residual,
    })
}

/// Boolean verdict with the residual it was decided on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntersectionCheckLike {
    pub holds: bool,
    pub residual: f64,
}

/// G is stable under v ↦ C·conj(v).
pub fn is_real(g: &Subspace, s: &StructureForm) -> Result<IntersectionCheckLike> {
    check_dim(g, s)?;
    let StructureForm::RealStructure(m) = s else {
        return Err(Error::Invalid("reality needs a real structure".into()));
    };
    let b = &g.basis;
    let image = m * b.map(|z| z.conj());
    let n = g.ambient_dim();
    let residual = ((CMat::identity(n, n) - b * b.adjoint()) * image).norm();
    Ok(IntersectionCheckLike {
        holds: residual <= ISOTROPY_TOL,
        residual,
    })
}

fn check_dim(g: &Subspace, s: &StructureForm) -> Result<()> {
    if s.dim() != g.ambient_dim() {
        return Err(Error::Invalid("form and subspace dimensions differ".into()));
    }
    Ok(())
}

/// |log(‖ΛʳM‖/‖Λʳ⁻¹M‖) + log(‖Λⁿ⁻ʳ⁺¹M⁻¹‖/‖Λⁿ⁻ʳM⁻¹‖)|. Λ⁰ has norm one.
pub fn corrected_norm_identity_residual(m: &CMat, r: usize) -> Result<f64> {
    let n = m.nrows();
    if !m.is_square() || r == 0 || r >= n {
        return Err(Error::Invalid(format!("need 1 ≤ r ≤ n−1, got r={r}, n={n}")));
    }
    let inv = linalg::inverse(m)?;
    let ext_norm = |a: &CMat, k: usize| -> f64 {
        if k == 0 {
            1.0
        } else {
            linalg::op_norm(&linalg::exterior_power(a, k))
        }
    };
    let lhs = (ext_norm(m, r) / ext_norm(m, r - 1)).ln();
    let rhs = (ext_norm(&inv, n - r + 1) / ext_norm(&inv, n - r)).ln();
    Ok((lhs + rhs).abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct AvoidanceReport {
    pub k: usize,
    pub isotropic_lines: usize,
    /// Isotropic lines found inside E¹, or planes of M containing E².
    pub violations: usize,
    /// Smallest distance of a sampled isotropic line from E¹.
    pub min_line_margin: f64,
    /// Smallest intersection residual of E² against a sampled plane.
    pub min_plane_margin: f64,
    /// Random real vectors of E¹ whose h-norm was not negative.
    pub nonnegative_e1: usize,
    pub resampled: usize,
}

impl AvoidanceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.nonnegative_e1 == 0
    }
}

/// Q = diag(1, 1, −1, …, −1) on ℂ^{k+2}.
pub fn weight2_form(k: usize) -> CMat {
    let n = k + 2;
    let mut q = CMat::identity(n, n);
    for i in 2..n {
        q[(i, i)] = -ONE;
    }
    q
}

/// Type (1,k,1) with E² = ℂ(e₁ + ie₂), E¹ = span(e₃, …) and E⁰ = conj(E²).
/// Real Q-isotropic lines are drawn uniformly on the cone; for k = 1 a grid of
/// `n_samples` angles covers it exhaustively.
pub fn weight2_divisor_avoidance(k: usize, n_samples: usize, seed: u64) -> Result<AvoidanceReport> {
    if k == 0 {
        return Err(Error::Invalid("weight-2 type needs k ≥ 1".into()));
    }
    let n = k + 2;
    let q = weight2_form(k);
    let mut e2 = CVec::zeros(n);
    e2[0] = c(1.0, 0.0);
    e2[1] = c(0.0, 1.0);
    let e2 = Subspace::from_columns(&[e2])?;
    let mut rng = stream(seed, 0);
    let mut report = AvoidanceReport {
        k,
        isotropic_lines: 0,
        violations: 0,
        min_line_margin: f64::INFINITY,
        min_plane_margin: f64::INFINITY,
        nonnegative_e1: 0,
        resampled: 0,
    };
    for s in 0..n_samples {
        let ell: Vec<f64> = if k == 1 {
            let t = 2.0 * PI * s as f64 / n_samples as f64;
            vec![t.cos(), t.sin(), 1.0]
        } else {
            loop {
                let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let a = g[0].hypot(g[1]);
                let b = g[2..].iter().map(|x| x * x).sum::<f64>().sqrt();
                if a > 1e-12 && b > 1e-12 {
                    break g[..2].iter().map(|x| x / a).chain(g[2..].iter().map(|x| x / b)).collect();
                }
                report.resampled += 1;
            }
        };
        let ell = CVec::from_iterator(n, ell.iter().map(|&x| c(x, 0.0))) / c(2f64.sqrt(), 0.0);
        report.isotropic_lines += 1;
        // distance from E¹ = norm of the (e₁, e₂) components
        let margin = ell[0].norm().hypot(ell[1].norm());
        report.min_line_margin = report.min_line_margin.min(margin);
        if margin <= 1e-9 {
            report.violations += 1;
        }
        // the plane of M is the Q-orthogonal of ℓ, i.e. the Hermitian complement of Qℓ
        let normal = Subspace::from_columns(&[&q * &ell])?;
        let plane = normal.complement()?;
        let check = intersects_nontrivially(&e2, &plane)?;
        report.min_plane_margin = report.min_plane_margin.min(check.residual);
        if check.intersects {
            report.violations += 1;
        }
        // a random real vector of E¹
        let v = loop {
            let mut v = CVec::zeros(n);
            for i in 2..n {
                v[i] = c(rng.sample(StandardNormal), 0.0);
            }
            let h = (v.adjoint() * &q * &v)[(0, 0)].re;
            if h.abs() > 1e-12 {
                break h;
            }
            report.resampled += 1;
        };
        if v >= 0.0 {
            report.nonnegative_e1 += 1;
        }
    }
    Ok(report)
}

/// 4×4 integer matrix acting on column vectors.
pub type IntMat4 = [[i64; 4]; 4];

const J4: IntMat4 = [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]];

fn int_mul(a: &IntMat4, b: &IntMat4) -> Option<IntMat4> {
    let mut out = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0i64;
            for (l, bl) in b.iter().enumerate() {
                s = s.checked_add(a[i][l].checked_mul(bl[j])?)?;
            }
            out[i][j] = s;
        }
    }
    Some(out)
}

fn int_transpose(a: &IntMat4) -> IntMat4 {
    let mut t = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// True iff gᵗJg = J exactly.
pub fn is_integer_symplectic(g: &IntMat4) -> bool {
    int_mul(&int_transpose(g), &J4)
        .and_then(|x| int_mul(&x, g))
        .is_some_and(|x| x == J4)
}

/// Inverse of an integer symplectic matrix, −J gᵗ J.
fn symplectic_inverse(g: &IntMat4) -> IntMat4 {
    let t = int_mul(&J4, &int_transpose(g)).expect("entries are copies of g");
    let mut inv = int_mul(&t, &J4).expect("entries are copies of g");
    for row in inv.iter_mut() {
        for x in row.iter_mut() {
            *x = -*x;
        }
    }
    inv
}

/// Integer basis of a rational 2-plane in ℤ⁴, as two columns.
pub type IntPlane = [[i64; 2]; 4];

fn apply_plane(g: &IntMat4, p: &IntPlane) -> Result<IntPlane> {
    let mut out = [[0i64; 2]; 4];
    for i in 0..4 {
        for j in 0..2 {
            let mut s = 0i64;
            for l in 0..4 {
                s = g[i][l]
                    .checked_mul(p[l][j])
                    .and_then(|x| s.checked_add(x))
                    .ok_or_else(|| Error::Resource("integer overflow in orbit enumeration".into()))?;
            }
            out[i][j] = s;
        }
    }
    Ok(out)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive, sign-normalized Plücker vector: equal keys ⟺ equal planes.
fn plane_key(p: &IntPlane) -> Result<[i128; 6]> {
    let mut key = [0i128; 6];
    let mut idx = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            key[idx] = i128::from(p[i][0]) * i128::from(p[j][1]) - i128::from(p[j][0]) * i128::from(p[i][1]);
            idx += 1;
        }
    }
    let g = key.iter().fold(0i128, |a, &b| gcd(a, b));
    if g == 0 {
        return Err(Error::Degenerate("integer basis does not span a plane".into()));
    }
    let sign = key.iter().find(|&&x| x != 0).map_or(1, |x| x.signum());
    for x in key.iter_mut() {
        *x = *x / g * sign;
    }
    Ok(key)
}

/// (θ₁ ≤ θ₂, φ) with W = UUᵀ = O(φ) diag(e^{iθ₁}, e^{iθ₂}) O(φ)ᵀ, where
/// U = X + iY for an orthonormal basis (X; Y) of the plane.
pub fn lagrangian_angles(p: &IntPlane) -> Result<(f64, f64, f64)> {
    let m = CMat::from_fn(4, 2, |i, j| c(p[i][j] as f64, 0.0));
    let b = linalg::orthonormalize(&m, 1e-12)?;
    let u = CMat::from_fn(2, 2, |i, j| c(b[(i, j)].re, b[(i + 2, j)].re));
    let w = &u * u.transpose();
    let a = w.map(|z| z.re);
    let bm = w.map(|z| z.im);
    // Re W and Im W commute; diagonalize a generic combination
    let s = &a + &bm * 0.618_033_988_749_894_8;
    let mut phi = 0.5 * (2.0 * s[(0, 1)]).atan2(s[(0, 0)] - s[(1, 1)]);
    let angle = |phi: f64| -> f64 {
        let v = CVec::from_vec(vec![c(phi.cos(), 0.0), c(phi.sin(), 0.0)]);
        let z = (v.transpose() * &w * &v)[(0, 0)];
        z.arg().rem_euclid(2.0 * PI)
    };
    let mut t1 = angle(phi);
    let mut t2 = angle(phi + PI / 2.0);
    if t1 > t2 {
        std::mem::swap(&mut t1, &mut t2);
        phi += PI / 2.0;
    }
    Ok((t1, t2, phi.rem_euclid(PI)))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub orbit_points: usize,
    pub covered_cells: usize,
    pub total_cells: usize,
    pub fraction: f64,
}

/// Orbit of `start` under words of length ≤ depth in the generators and their
/// inverses, binned into an ε-grid of the angle coordinates.
pub fn lagrangian_orbit_coverage(
    generators: &[IntMat4],
    start: &IntPlane,
    depth: usize,
    grid_eps: f64,
) -> Result<CoverageReport> {
    if depth > 12 {
        return Err(Error::Invalid("depth is capped at 12".into()));
    }
    if !(grid_eps > 0.0) {
        return Err(Error::Invalid("grid_eps must be positive".into()));
    }
    for (i, g) in generators.iter().enumerate() {
        if !is_integer_symplectic(g) {
            return Err(Error::FormViolation {
                generator: i,
                what: "integer symplectic",
                residual: f64::NAN,
            });
        }
    }
    let n_theta = (2.0 * PI / grid_eps).ceil() as usize;
    let n_phi = (PI / grid_eps).ceil() as usize;
    let total_cells = n_theta * (n_theta + 1) / 2 * n_phi;
    if total_cells > CELL_CAP {
        return Err(Error::Resource(format!("ε-net of {total_cells} cells is too fine")));
    }
    let start_key = plane_key(start)?;
    // Lagrangian check: XᵗJY = 0 for the two columns
    let jform: i128 = (0..2)
        .map(|i| i128::from(start[i][0]) * i128::from(start[i + 2][1]) - i128::from(start[i + 2][0]) * i128::from(start[i][1]))
        .sum();
    if jform != 0 {
        return Err(Error::Invalid("start plane is not Lagrangian".into()));
    }
    let mut moves: Vec<IntMat4> = generators.to_vec();
    moves.extend(generators.iter().map(symplectic_inverse));
    let mut seen: HashSet<[i128; 6]> = HashSet::from([start_key]);
    let mut cells: HashSet<(usize, usize, usize)> = HashSet::new();
    let mut queue: VecDeque<(IntPlane, usize)> = VecDeque::from([(*start, 0)]);
    let cell = |p: &IntPlane| -> Result<(usize, usize, usize)> {
        let (t1, t2, phi) = lagrangian_angles(p)?;
        let bin = |x: f64, n: usize| ((x / grid_eps) as usize).min(n - 1);
        Ok((bin(t1, n_theta), bin(t2, n_theta), bin(phi, n_phi)))
    };
    while let Some((p, d)) = queue.pop_front() {
        cells.insert(cell(&p)?);
        if d == depth {
            continue;
        }
        for g in &moves {
            let q = apply_plane(g, &p)?;
            if seen.insert(plane_key(&q)?) {
                if seen.len() > ORBIT_CAP {
                    return Err(Error::Resource(format!("orbit exceeds {ORBIT_CAP} points")));
                }
                queue.push_back((q, d + 1));
            }
        }
    }
    Ok(CoverageReport {
        orbit_points: seen.len(),
        covered_cells: cells.len(),
        total_cells,
        fraction: cells.len() as f64 / total_cells as f64,
    })
}

/// Translations [[I,S],[0,I]] for S = E₁₁, E₂₂, E₁₂+E₂₁, and J.
pub fn sp4z_generators() -> Vec<IntMat4> {
    let t = |s: [[i64; 2]; 2]| -> IntMat4 {
        [
            [1, 0, s[0][0], s[0][1]],
            [0, 1, s[1][0], s[1][1]],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
        ]
    };
    vec![t([[1, 0], [0, 0]]), t([[0, 0], [0, 1]]), t([[0, 1], [1, 0]]), J4]
}

/// The single lower-triangular transvection [[I,0],[E₁₁,I]].
pub fn rank1_parabolic_generator() -> IntMat4 {
    [[1, 0, 0, 0], [0, 1, 0, 0], [1, 0, 1, 0], [0, 0, 0, 1]]
}

/// span(e₁, e₂)
pub const STANDARD_LAGRANGIAN: IntPlane = [[1, 0], [0, 1], [0, 0], [0, 0]];

/// Draws a Haar-ish random k-plane (complex Gaussian basis).
pub fn random_subspace<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<Subspace> {
    let m = CMat::from_fn(n, k, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    Subspace::new(m)
}

#[allow(dead_code)]
fn unit(n: usize, i: usize) -> CVec {
    let mut v = CVec::from_element(n, ZERO);
    v[i] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    #[test]
    fn standard_plane_plucker() {
        let g = Subspace::from_columns(&[unit(4, 0), unit(4, 1)]).unwrap();
        let p = plucker_embed(&g);
        assert!((p.0[0] - ONE).norm() < 1e-15);
        assert!(p.0.iter().skip(1).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn fhat_kills_e1() {
        let f = Subspace::from_columns(&[unit(2, 0)]).unwrap();
        let d = fhat_form(&f).unwrap();
        assert!(d.0[0].norm() < 1e-15);
        assert!((d.0[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_intersections() {
        let e1 = Subspace::from_columns(&[unit(2, 0)]).unwrap();
        let e2 = Subspace::from_columns(&[unit(2, 1)]).unwrap();
        assert!(intersects_nontrivially(&e1, &e1).unwrap().intersects);
        assert!(!intersects_nontrivially(&e2, &e1).unwrap().intersects);
    }

    #[test]
    fn divisor_distance_extremes() {
        let f = Subspace::from_columns(&[unit(2, 0)]).unwrap();
        let d = fhat_form(&f).unwrap();
        let on = plucker_embed(&f);
        assert!(divisor_distance(&on, &d) < 1e-10);
        let off = plucker_embed(&Subspace::from_columns(&[unit(2, 1)]).unwrap());
        assert!((divisor_distance(&off, &d) - 1.0).abs() < 1e-15);
        let phased = PluckerVector(&off.0 * c(0.6, 0.8));
        assert!((divisor_distance(&phased, &d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight3_plane_is_real_and_isotropic() {
        let h = diag(&[c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        let mut swap = CMat::zeros(4, 4);
        for i in 0..4 {
            swap[(i, 3 - i)] = ONE;
        }
        let g = Subspace::from_columns(&[unit(4, 2) + unit(4, 3), unit(4, 0) + unit(4, 1)]).unwrap();
        let iso = isotropic(&g, &StructureForm::Hermitian(h)).unwrap();
        assert!(iso.holds && iso.residual < 1e-15);
        let real = is_real(&g, &StructureForm::RealStructure(swap)).unwrap();
        assert!(real.holds && real.residual < 1e-15);
    }

    #[test]
    fn positive_form_has_no_isotropic_line() {
        let mut rng = stream(4, 0);
        let h = StructureForm::Hermitian(CMat::identity(3, 3));
        for _ in 0..20 {
            let g = random_subspace(&mut rng, 3, 1).unwrap();
            assert!(!isotropic(&g, &h).unwrap().holds);
        }
    }

    #[test]
    fn norm_identity_examples() {
        let m = diag(&[c(2.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(corrected_norm_identity_residual(&m, 1).unwrap() < 1e-14);
        let u = diag(&[c(0.0, 1.0), c(-1.0, 0.0), c(0.6, 0.8)]);
        assert!(corrected_norm_identity_residual(&u, 2).unwrap() < 1e-14);
        assert!(corrected_norm_identity_residual(&CMat::zeros(3, 3), 1).is_err());
        assert!(corrected_norm_identity_residual(&m, 3).is_err());
    }

    #[test]
    fn uncorrected_index_fails_on_diagonal_example() {
        // the shift n−r (instead of n−r+1) does not cancel
        let m = diag(&[c(2.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]);
        let inv = linalg::inverse(&m).unwrap();
        let lhs = (linalg::op_norm(&m)).ln();
        let ext = |k: usize| linalg::op_norm(&linalg::exterior_power(&inv, k));
        let rhs = (ext(2) / ext(1)).ln();
        assert!((lhs + rhs).abs() > 0.5);
    }

    #[test]
    fn integer_symplectic_generators() {
        for g in sp4z_generators() {
            assert!(is_integer_symplectic(&g));
            let inv = symplectic_inverse(&g);
            let id = int_mul(&g, &inv).unwrap();
            for (i, row) in id.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    assert_eq!(x, i64::from(i == j));
                }
            }
        }
        assert!(is_integer_symplectic(&rank1_parabolic_generator()));
        let bad: IntMat4 = [[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]];
        assert!(!is_integer_symplectic(&bad));
    }

    #[test]
    fn plane_keys_identify_planes() {
        let a: IntPlane = [[1, 0], [0, 1], [0, 0], [0, 0]];
        let b: IntPlane = [[2, 1], [2, 3], [0, 0], [0, 0]];
        assert_eq!(plane_key(&a).unwrap(), plane_key(&b).unwrap());
        let c: IntPlane = [[1, 0], [0, 0], [0, 1], [0, 0]];
        assert_ne!(plane_key(&a).unwrap(), plane_key(&c).unwrap());
    }

    #[test]
    fn depth_zero_covers_one_cell() {
        let r = lagrangian_orbit_coverage(&sp4z_generators(), &STANDARD_LAGRANGIAN, 0, 0.3).unwrap();
        assert_eq!(r.covered_cells, 1);
        assert_eq!(r.orbit_points, 1);
    }

    #[test]
    fn too_fine_net_is_a_resource_error() {
        let r = lagrangian_orbit_coverage(&sp4z_generators(), &STANDARD_LAGRANGIAN, 1, 1e-3);
        assert!(matches!(r, Err(Error::Resource(_))));
    }

    #[test]
    fn weight2_k1_grid() {
        let r = weight2_divisor_avoidance(1, 720, 0).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!((r.min_line_margin - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
