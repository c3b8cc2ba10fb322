use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// Default cap on the number of limit-set sample points.
pub const LIMIT_SAMPLE_CAP: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

type M2 = [[Complex64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut r = [[c(0.0, 0.0); 2]; 2];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn apply(m: &M2, z: Complex64) -> Complex64 {
    (m[0][0] * z + m[0][1]) / (m[1][0] * z + m[1][1])
}

fn inv(m: &M2) -> M2 {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

/// Circle through three points.
fn circumcircle(a: Complex64, b: Complex64, cc: Complex64) -> Result<Circle> {
    let d = 2.0 * (a.re * (b.im - cc.im) + b.re * (cc.im - a.im) + cc.re * (a.im - b.im));
    if d.abs() < 1e-300 {
        return Err(Error::Degenerate("collinear points have no circumcircle".into()));
    }
    let (a2, b2, c2) = (a.norm_sqr(), b.norm_sqr(), cc.norm_sqr());
    let ux = (a2 * (b.im - cc.im) + b2 * (cc.im - a.im) + c2 * (a.im - b.im)) / d;
    let uy = (a2 * (cc.re - b.re) + b2 * (a.re - cc.re) + c2 * (b.re - a.re)) / d;
    let center = c(ux, uy);
    Ok(Circle {
        center,
        radius: (a - center).norm(),
    })
}

/// Schottky group on the Riemann sphere. Pair `i` consists of circles
/// `(minus[i], plus[i])`; generator `i` maps the exterior of `minus[i]` onto
/// the interior of `plus[i]`.
#[derive(Clone, Debug, Serialize)]
pub struct SchottkyData {
    pub minus: Vec<Circle>,
    pub plus: Vec<Circle>,
    #[serde(skip)]
    gens: Vec<M2>,
}

impl SchottkyData {
    /// Builds the standard pairing z ↦ c⁺ + r⁺r⁻/(z − c⁻) for each circle pair
    /// and checks disjointness and the mapping property.
    pub fn new(pairs: &[(Circle, Circle)]) -> Result<Self> {
        let mut minus = Vec::new();
        let mut plus = Vec::new();
        let mut gens = Vec::new();
        for (m, p) in pairs {
            let r2 = m.radius * p.radius;
            let raw: M2 = [[p.center, -p.center * m.center + r2], [c(1.0, 0.0), -m.center]];
            // det = -r⁺r⁻; rescale into SL(2,ℂ)
            let s = (c(-r2, 0.0)).sqrt();
            let g = [[raw[0][0] / s, raw[0][1] / s], [raw[1][0] / s, raw[1][1] / s]];
            minus.push(*m);
            plus.push(*p);
            gens.push(g);
        }
        let data = SchottkyData { minus, plus, gens };
        data.validate()?;
        Ok(data)
    }

    fn all_circles(&self) -> Vec<Circle> {
        self.minus.iter().chain(self.plus.iter()).copied().collect()
    }

    fn validate(&self) -> Result<()> {
        let circles = self.all_circles();
        for i in 0..circles.len() {
            for j in i + 1..circles.len() {
                let gap = (circles[i].center - circles[j].center).norm()
                    - circles[i].radius
                    - circles[j].radius;
                if gap <= 0.0 {
                    return Err(Error::Invalid(format!("Schottky disks {i} and {j} overlap")));
                }
            }
        }
        for (i, g) in self.gens.iter().enumerate() {
            let (m, p) = (self.minus[i], self.plus[i]);
            for k in 0..12 {
                let z = m.center + Complex64::from_polar(m.radius, k as f64 * 0.5236);
                let w = apply(g, z);
                if ((w - p.center).norm() - p.radius).abs() > 1e-9 * (1.0 + p.radius) {
                    return Err(Error::Invalid(format!(
                        "generator {i} does not map its circle pair"
                    )));
                }
            }
            let far = m.center + c(10.0 * m.radius + 1.0, 0.0);
            if !p.contains(apply(g, far)) {
                return Err(Error::Invalid(format!(
                    "generator {i} does not map the exterior inside its partner"
                )));
            }
        }
        Ok(())
    }

    pub fn n_pairs(&self) -> usize {
        self.gens.len()
    }

    /// Generator `i` as an SL(2,ℂ) matrix.
    pub fn generator(&self, i: usize) -> CMat {
        let g = self.gens[i];
        CMat::from_row_slice(2, 2, &[g[0][0], g[0][1], g[1][0], g[1][1]])
    }

    /// Letter `2i` is generator i, `2i+1` its inverse.
    fn letter(&self, l: usize) -> M2 {
        let g = self.gens[l / 2];
        if l % 2 == 0 {
            g
        } else {
            inv(&g)
        }
    }

    /// Disk that letter `l` maps the complement of its source disk into.
    fn target(&self, l: usize) -> Circle {
        if l % 2 == 0 {
            self.plus[l / 2]
        } else {
            self.minus[l / 2]
        }
    }

    fn reduced_words(&self, depth: usize) -> Result<Vec<Vec<usize>>> {
        if depth == 0 {
            return Err(Error::Invalid("limit-set depth must be at least 1".into()));
        }
        let m2 = 2 * self.n_pairs();
        let mut count: usize = m2;
        for _ in 1..depth {
            count = count
                .checked_mul(m2 - 1)
                .filter(|&c| c <= LIMIT_SAMPLE_CAP)
                .ok_or_else(|| {
                    Error::Resource(format!("limit-set depth {depth} exceeds the sample cap"))
                })?;
        }
        let mut words: Vec<Vec<usize>> = (0..m2).map(|l| vec![l]).collect();
        for _ in 1..depth {
            let mut next = Vec::with_capacity(words.len() * (m2 - 1));
            for w in &words {
                let last = *w.last().unwrap();
                for l in 0..m2 {
                    if l == last ^ 1 {
                        continue;
                    }
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
            words = next;
        }
        debug_assert_eq!(words.len(), count);
        Ok(words)
    }

    fn word_matrix(&self, w: &[usize]) -> M2 {
        w.iter().fold([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]], |acc, &l| {
            mul(&acc, &self.letter(l))
        })
    }

    /// Images of target-disk centres under all reduced words of length `depth`:
    /// the point for `s₁⋯s_d` is `s₁⋯s_d(centre of target(s_d))`.
    pub fn limit_set_sample(&self, depth: usize) -> Result<Vec<Complex64>> {
        let words = self.reduced_words(depth)?;
        Ok(words
            .iter()
            .map(|w| {
                let last = *w.last().unwrap();
                apply(&self.word_matrix(w), self.target(last).center)
            })
            .collect())
    }

    /// Nested disks `s₁⋯s_{d−1}(target(s_d))` for reduced words of length `depth`.
    pub fn limit_disks(&self, depth: usize) -> Result<Vec<Circle>> {
        let words = self.reduced_words(depth)?;
        words
            .iter()
            .map(|w| {
                let (last, prefix) = w.split_last().unwrap();
                let m = self.word_matrix(prefix);
                let t = self.target(*last);
                let pts: Vec<Complex64> = (0..3)
                    .map(|k| apply(&m, t.center + Complex64::from_polar(t.radius, 2.0 * k as f64)))
                    .collect();
                circumcircle(pts[0], pts[1], pts[2])
            })
            .collect()
    }

    pub fn in_initial_disks(&self, z: Complex64) -> bool {
        self.all_circles().iter().any(|d| d.contains(z))
    }
}

/// Symmetric Hausdorff distance between two finite planar sets.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |p: &[Complex64], q: &[Complex64]| {
        p.iter()
            .map(|x| q.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
