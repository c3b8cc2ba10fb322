//! Monodromy representations and overflow-safe transport products along deck
//! words.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{hyperbolic_distance, Letter, SurfaceModel, Word};
use crate::linalg::{self, CMat};
use crate::rng::stream;

/// Config-level cap on C(n,k).
pub const EXTERIOR_DIM_CAP: usize = 4096;

const INVERSE_TOL: f64 = 1e-10;
const FORM_TOL: f64 = 1e-8;
const RESCALE_LOW: f64 = 1e-2;
const RESCALE_HIGH: f64 = 1e2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormKind {
    /// g* J g = J
    Hermitian,
    /// gᵗ J g = J with J antisymmetric
    Symplectic,
}

#[derive(Clone, Debug, Serialize)]
pub struct PreservedForm {
    pub kind: FormKind,
    #[serde(skip)]
    pub matrix: CMat,
    /// (positive, negative) eigenvalue counts for Hermitian forms.
    pub signature: Option<(usize, usize)>,
}

impl PreservedForm {
    pub fn hermitian(matrix: CMat) -> Result<Self> {
        if !linalg::is_hermitian(&matrix, 1e-12) {
            return Err(Error::Invalid("Hermitian form matrix is not self-adjoint".into()));
        }
        let eig = matrix.clone().symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let pos = eig.iter().filter(|&&e| e > 1e-12 * scale).count();
        let neg = eig.iter().filter(|&&e| e < -1e-12 * scale).count();
        if pos + neg != matrix.nrows() {
            return Err(Error::Invalid("Hermitian form is degenerate".into()));
        }
        Ok(Self {
            kind: FormKind::Hermitian,
            matrix,
            signature: Some((pos, neg)),
        })
    }

    pub fn symplectic(matrix: CMat) -> Result<Self> {
        let n = matrix.nrows();
        if !matrix.is_square() || n % 2 != 0 || (&matrix + matrix.transpose()).norm() > 1e-12 {
            return Err(Error::Invalid("symplectic form must be square and antisymmetric".into()));
        }
        if matrix.determinant().norm() < 1e-12 {
            return Err(Error::Invalid("symplectic form is degenerate".into()));
        }
        Ok(Self {
            kind: FormKind::Symplectic,
            matrix,
            signature: None,
        })
    }

    pub fn residual(&self, g: &CMat) -> f64 {
        match self.kind {
            FormKind::Hermitian => linalg::hermitian_form_residual(g, &self.matrix),
            FormKind::Symplectic => linalg::bilinear_form_residual(g, &self.matrix),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RepFlags {
    pub unitary: bool,
    pub strongly_irreducible: bool,
}

/// One invertible matrix per surface generator, with cached inverses.
#[derive(Clone, Serialize)]
pub struct Representation {
    pub n: usize,
    #[serde(skip)]
    pub generators: Vec<CMat>,
    #[serde(skip)]
    pub inverses: Vec<CMat>,
    pub form: Option<PreservedForm>,
    pub flags: RepFlags,
    pub warnings: Vec<String>,
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Representation")
            .field("n", &self.n)
            .field("generators", &self.generators.len())
            .field("form", &self.form.as_ref().map(|x| x.kind))
            .field("flags", &self.flags)
            .finish()
    }
}

impl Representation {
    pub fn new(generators: Vec<CMat>, form: Option<PreservedForm>, flags: RepFlags) -> Result<Self> {
        let n = generators
            .first()
            .map(|g| g.nrows())
            .ok_or_else(|| Error::Invalid("a representation needs at least one generator".into()))?;
        let mut inverses = Vec::with_capacity(generators.len());
        for (i, g) in generators.iter().enumerate() {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::Invalid(format!("generator {i} is not {n}×{n}")));
            }
            let inv = linalg::inverse(g).map_err(|_| Error::FormViolation {
                generator: i,
                what: "invertibility",
                residual: f64::INFINITY,
            })?;
            let res = (g * &inv - CMat::identity(n, n)).norm();
            if res > INVERSE_TOL {
                return Err(Error::FormViolation {
                    generator: i,
                    what: "g·g⁻¹ = I",
                    residual: res,
                });
            }
            if let Some(form) = &form {
                if form.matrix.nrows() != n {
                    return Err(Error::Invalid("form dimension differs from the rank".into()));
                }
                let res = form.residual(g);
                if res > FORM_TOL {
                    return Err(Error::FormViolation {
                        generator: i,
                        what: "form preservation",
                        residual: res,
                    });
                }
            }
            if flags.unitary {
                let res = (g.adjoint() * g - CMat::identity(n, n)).norm();
                if res > FORM_TOL {
                    return Err(Error::FormViolation {
                        generator: i,
                        what: "unitarity",
                        residual: res,
                    });
                }
            }
            inverses.push(inv);
        }
        Ok(Self {
            n,
            generators,
            inverses,
            form,
            flags,
            warnings: Vec::new(),
        })
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn letter_matrix(&self, l: Letter) -> &CMat {
        if l.is_inverse() {
            &self.inverses[l.gen()]
        } else {
            &self.generators[l.gen()]
        }
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.max_generator() {
            Some(g) if g >= self.generators.len() => Err(Error::Invalid(format!(
                "word uses generator {} but the representation has {}",
                g + 1,
                self.generators.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Residual of a relator word, ‖ρ(w) − I‖.
    pub fn relation_residual(&self, w: &Word) -> Result<f64> {
        self.check_word(w)?;
        let p = w
            .letters()
            .iter()
            .fold(CMat::identity(self.n, self.n), |acc, &l| acc * self.letter_matrix(l));
        Ok((p - CMat::identity(self.n, self.n)).norm())
    }
}

/// exp(log_scale) · unit_matrix, with the unit matrix of operator norm one.
#[derive(Clone, Debug)]
pub struct CocycleProduct {
    pub unit_matrix: CMat,
    pub log_scale: f64,
}

impl CocycleProduct {
    pub fn identity(n: usize) -> Self {
        Self {
            unit_matrix: CMat::identity(n, n),
            log_scale: 0.0,
        }
    }

    pub fn to_matrix(&self) -> CMat {
        &self.unit_matrix * linalg::c(self.log_scale.exp(), 0.0)
    }
}

/// Left-to-right product ρ(l₁)ρ(l₂)⋯ with rescaling whenever the running
/// Frobenius norm leaves [1e-2, 1e2].
pub fn transport(rep: &Representation, word: &Word) -> Result<CocycleProduct> {
    rep.check_word(word)?;
    let mut m = CMat::identity(rep.n, rep.n);
    let mut log_scale = 0.0;
    for &l in word.letters() {
        m = &m * rep.letter_matrix(l);
        let norm = m.norm();
        if !(norm > RESCALE_LOW && norm < RESCALE_HIGH) {
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Degenerate(format!("transport norm became {norm}")));
            }
            m /= linalg::c(norm, 0.0);
            log_scale += norm.ln();
        }
    }
    if word.is_empty() {
        return Ok(CocycleProduct::identity(rep.n));
    }
    let op = linalg::op_norm(&m);
    if !(op > 0.0) {
        return Err(Error::Degenerate("transport collapsed to zero".into()));
    }
    m /= linalg::c(op, 0.0);
    Ok(CocycleProduct {
        unit_matrix: m,
        log_scale: log_scale + op.ln(),
    })
}

/// H = log ‖product‖ (operator norm).
pub fn cocycle_norm_log(p: &CocycleProduct) -> f64 {
    p.log_scale + linalg::op_norm(&p.unit_matrix).ln()
}

/// k-th exterior power. Hermitian forms are carried along; symplectic forms
/// are dropped with a warning.
pub fn exterior_power_rep(rep: &Representation, k: usize) -> Result<Representation> {
    if k == 0 || k > rep.n {
        return Err(Error::Invalid(format!("exterior power {k} of rank {}", rep.n)));
    }
    let dim = linalg::binomial(rep.n, k);
    if dim > EXTERIOR_DIM_CAP {
        return Err(Error::Resource(format!(
            "C({}, {k}) = {dim} exceeds the cap {EXTERIOR_DIM_CAP}",
            rep.n
        )));
    }
    let gens: Vec<CMat> = rep.generators.iter().map(|g| linalg::exterior_power(g, k)).collect();
    let mut warnings = Vec::new();
    let form = match &rep.form {
        Some(f) if f.kind == FormKind::Hermitian => Some(PreservedForm::hermitian(
            linalg::exterior_power(&f.matrix, k),
        )?),
        Some(_) => {
            warnings.push(format!("symplectic form dropped in exterior power {k}"));
            None
        }
        None => None,
    };
    let mut out = Representation::new(gens, form, rep.flags.clone())?;
    out.warnings = warnings;
    Ok(out)
}

/// Direct sum of two representations with the same generator count.
pub fn direct_sum(a: &Representation, b: &Representation) -> Result<Representation> {
    if a.n_generators() != b.n_generators() {
        return Err(Error::Invalid("direct sum needs equal generator counts".into()));
    }
    let n = a.n + b.n;
    let gens = a
        .generators
        .iter()
        .zip(&b.generators)
        .map(|(x, y)| {
            let mut m = CMat::zeros(n, n);
            m.view_mut((0, 0), (a.n, a.n)).copy_from(x);
            m.view_mut((a.n, a.n), (b.n, b.n)).copy_from(y);
            m
        })
        .collect();
    Representation::new(
        gens,
        None,
        RepFlags {
            unitary: a.flags.unitary && b.flags.unitary,
            strongly_irreducible: false,
        },
    )
}

/// Largest |log‖ρ(w)‖| / d(b, w·b) over random words of length 1..=max_len.
pub fn distance_norm_bound_check(
    rep: &Representation,
    surface: &SurfaceModel,
    n_samples: usize,
    max_len: usize,
    seed: u64,
) -> Result<f64> {
    let m = surface.n_generators();
    if m != rep.n_generators() {
        return Err(Error::Invalid(format!(
            "surface has {m} generators, representation {}",
            rep.n_generators()
        )));
    }
    if m == 0 || max_len == 0 {
        return Err(Error::Invalid("need generators and positive word length".into()));
    }
    let mut rng = stream(seed, 0);
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let len = rng.gen_range(1..=max_len);
        let mut w = Word::new();
        for _ in 0..len {
            let g = rng.gen_range(0..m);
            w.push(if rng.gen_bool(0.5) { Letter::forward(g) } else { Letter::backward(g) });
        }
        let w = w.freely_reduced();
        let d = hyperbolic_distance(surface.basepoint, surface.word_mobius(&w).apply(surface.basepoint)?);
        if d < 1e-9 {
            continue;
        }
        let h = cocycle_norm_log(&transport(rep, &w)?);
        best = best.max(h.abs() / d);
    }
    Ok(best)
}
