use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::mobius::{disk_to_half_plane, HPoint, Mobius};
use super::word::{Letter, Word};
use crate::error::{Error, Result};
use crate::linalg::c;

/// Points within this (sinh of signed hyperbolic distance) of a side count as inside.
pub const BOUNDARY_TIE: f64 = 1e-12;

const PAIRING_CHECK_TOL: f64 = 1e-9;
const DEFAULT_WORD_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Vertex {
    Finite(HPoint),
    /// Ideal vertex on the real axis.
    Ideal(f64),
    Infinity,
}

impl Vertex {
    fn z(&self) -> Option<Complex64> {
        match self {
            Vertex::Finite(p) => Some(p.z()),
            Vertex::Ideal(x) => Some(c(*x, 0.0)),
            Vertex::Infinity => None,
        }
    }

    pub fn is_ideal(&self) -> bool {
        !matches!(self, Vertex::Finite(_))
    }
}

/// A complete geodesic of the half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Geodesic {
    Vertical { x: f64 },
    Circle { center: f64, radius: f64 },
}

impl Geodesic {
    pub fn through(a: &Vertex, b: &Vertex) -> Result<Geodesic> {
        match (a.z(), b.z()) {
            (None, None) => Err(Error::Invalid("side with both ends at infinity".into())),
            (None, Some(z)) | (Some(z), None) => Ok(Geodesic::Vertical { x: z.re }),
            (Some(z1), Some(z2)) => {
                if (z1.re - z2.re).abs() <= 1e-14 * (1.0 + z1.re.abs()) {
                    if (z1.im - z2.im).abs() == 0.0 {
                        return Err(Error::Invalid("side with coincident endpoints".into()));
                    }
                    return Ok(Geodesic::Vertical { x: z1.re });
                }
                let center = (z1.norm_sqr() - z2.norm_sqr()) / (2.0 * (z1.re - z2.re));
                let radius = (z1 - center).norm();
                Ok(Geodesic::Circle { center, radius })
            }
        }
    }

    /// sinh of the signed hyperbolic distance from `p` to the geodesic.
    /// Positive to the right of a vertical line and outside a circle.
    pub fn signed(&self, p: HPoint) -> f64 {
        match *self {
            Geodesic::Vertical { x } => (p.x - x) / p.y,
            Geodesic::Circle { center, radius } => {
                let dx = p.x - center;
                (dx * dx + p.y * p.y - radius * radius) / (2.0 * radius * p.y)
            }
        }
    }

    /// Point at parameter t ∈ (0,1) on the segment from `a` to `b`.
    fn point_between(&self, a: &Vertex, b: &Vertex, t: f64) -> HPoint {
        match *self {
            Geodesic::Circle { center, radius } => {
                let ang = |v: &Vertex| {
                    let z = v.z().expect("circle sides have finite ends");
                    z.im.atan2(z.re - center)
                };
                let phi = ang(a) + t * (ang(b) - ang(a));
                HPoint {
                    x: center + radius * phi.cos(),
                    y: radius * phi.sin(),
                }
            }
            Geodesic::Vertical { x } => {
                let height = |v: &Vertex| match v {
                    Vertex::Finite(p) => Some(p.y),
                    _ => None,
                };
                let y = match (a, b, height(a), height(b)) {
                    (_, _, Some(ya), Some(yb)) => (ya.ln() + t * (yb.ln() - ya.ln())).exp(),
                    (_, Vertex::Infinity, Some(ya), None) => ya / (1.0 - t),
                    (Vertex::Infinity, _, None, Some(yb)) => yb / t,
                    (_, Vertex::Infinity, None, None) => t / (1.0 - t),
                    (Vertex::Infinity, _, None, None) => (1.0 - t) / t,
                    (_, _, None, Some(yb)) => yb * t,
                    (_, _, Some(ya), None) => ya * (1.0 - t),
                    _ => 1.0,
                };
                HPoint { x, y }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Side {
    pub start: Vertex,
    pub end: Vertex,
    pub geodesic: Geodesic,
    /// +1 or −1 so that `orient * geodesic.signed(basepoint) > 0`.
    pub orient: f64,
    pub partner: usize,
    /// Generator index and direction of the map taking this side onto its partner.
    pub gen: usize,
    pub gen_inverse: bool,
    pub pairing: Mobius,
}

impl Side {
    /// Letter of the pairing map of this side.
    pub fn pairing_letter(&self) -> Letter {
        if self.gen_inverse {
            Letter::backward(self.gen)
        } else {
            Letter::forward(self.gen)
        }
    }

    /// Deck letter recorded when a point leaves the domain through this side:
    /// the point lies in `pairing⁻¹ · D`.
    pub fn exit_letter(&self) -> Letter {
        self.pairing_letter().inverse()
    }

    fn value(&self, p: HPoint) -> f64 {
        self.orient * self.geodesic.signed(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Location {
    Inside,
    ExitedThroughSide(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SurfaceKind {
    Compact,
    Cusped,
    /// The whole plane, no sides and no generators.
    Free,
}

/// A fundamental polygon with side pairings. Sides are listed in
/// counterclockwise order; side `i` runs from vertex `i` to vertex `i+1`.
/// `locate` scans sides in this order.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceModel {
    pub name: String,
    pub kind: SurfaceKind,
    pub sides: Vec<Side>,
    pub generators: Vec<Mobius>,
    pub basepoint: HPoint,
    pub word_cap: usize,
}

/// Per-side pairing description: (partner side, generator index, inverse?).
pub type PairingSpec = (usize, usize, bool);

impl SurfaceModel {
    pub fn from_polygon(
        name: &str,
        kind: SurfaceKind,
        vertices: &[Vertex],
        pairings: &[PairingSpec],
        generators: Vec<Mobius>,
        basepoint: HPoint,
    ) -> Result<Self> {
        let n = vertices.len();
        if pairings.len() != n || n % 2 != 0 || n < 2 {
            return Err(Error::Invalid(format!(
                "{n} vertices need an even number of sides with one pairing each"
            )));
        }
        let mut sides = Vec::with_capacity(n);
        for i in 0..n {
            let (start, end) = (vertices[i], vertices[(i + 1) % n]);
            let geodesic = Geodesic::through(&start, &end)?;
            let s = geodesic.signed(basepoint);
            if s.abs() <= PAIRING_CHECK_TOL {
                return Err(Error::Invalid(format!("basepoint lies on side {i}")));
            }
            let (partner, gen, gen_inverse) = pairings[i];
            let g = *generators
                .get(gen)
                .ok_or_else(|| Error::Invalid(format!("side {i} names missing generator {gen}")))?;
            sides.push(Side {
                start,
                end,
                geodesic,
                orient: s.signum(),
                partner,
                gen,
                gen_inverse,
                pairing: if gen_inverse { g.inverse() } else { g },
            });
        }
        let model = SurfaceModel {
            name: name.to_string(),
            kind,
            sides,
            generators,
            basepoint,
            word_cap: DEFAULT_WORD_CAP,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        for (i, side) in self.sides.iter().enumerate() {
            let p = side.partner;
            let other = self
                .sides
                .get(p)
                .ok_or_else(|| Error::Invalid(format!("side {i} has no partner {p}")))?;
            if p == i || other.partner != i || other.gen != side.gen || other.gen_inverse == side.gen_inverse {
                return Err(Error::Invalid(format!("sides {i} and {p} are not paired consistently")));
            }
            for k in 1..10 {
                let t = k as f64 / 10.0;
                let q = side.geodesic.point_between(&side.start, &side.end, t);
                let img = side.pairing.apply(q)?;
                let on_partner = other.value(img).abs();
                let inside = self
                    .sides
                    .iter()
                    .all(|s| s.value(img) >= -PAIRING_CHECK_TOL);
                if on_partner > PAIRING_CHECK_TOL || !inside {
                    return Err(Error::Invalid(format!(
                        "pairing of side {i} does not map it onto side {p} (residual {on_partner:e})"
                    )));
                }
            }
        }
        let m = self.generators.len();
        if self.sides.len() != 2 * m {
            return Err(Error::Invalid(format!(
                "{} sides but {m} generators",
                self.sides.len()
            )));
        }
        if self.locate(self.basepoint) != Location::Inside {
            return Err(Error::Invalid("basepoint is not interior".into()));
        }
        Ok(())
    }

    /// The hyperbolic plane itself: no sides, trivial group.
    pub fn free_plane() -> Self {
        SurfaceModel {
            name: "free_plane".into(),
            kind: SurfaceKind::Free,
            sides: Vec::new(),
            generators: Vec::new(),
            basepoint: HPoint::I,
            word_cap: DEFAULT_WORD_CAP,
        }
    }

    /// Regular octagon with interior angles π/4 centred at i, opposite sides
    /// paired by hyperbolic translations. Generator k maps side k onto side k+4.
    pub fn genus2_octagon() -> Self {
        let n = 8;
        // cosh(circumradius) = cot²(π/8) gives Euclidean disk radius 2^{-1/4}
        let r_vertex = 2f64.powf(-0.25);
        let vertices: Vec<Vertex> = (0..n)
            .map(|k| {
                let ang = (2.0 * k as f64 - 1.0) * PI / 8.0;
                let w = Complex64::from_polar(r_vertex, ang);
                Vertex::Finite(disk_to_half_plane(w).expect("vertex inside disk"))
            })
            .collect();
        // translation length = 2·(centre-to-side distance), cosh(d) = cot(π/8)
        let half = (1.0 + 2f64.sqrt()).acosh();
        let t = half.tanh();
        let generators: Vec<Mobius> = (0..4)
            .map(|k| {
                let u = -Complex64::from_polar(1.0, k as f64 * PI / 4.0);
                disk_translation(u, t)
            })
            .collect();
        let pairings: Vec<PairingSpec> = (0..n)
            .map(|i| if i < 4 { (i + 4, i, false) } else { (i - 4, i - 4, true) })
            .collect();
        Self::from_polygon(
            "genus2_octagon",
            SurfaceKind::Compact,
            &vertices,
            &pairings,
            generators,
            HPoint::I,
        )
        .expect("octagon data is consistent")
    }

    /// Ideal quadrilateral with vertices ∞, −1, 0, 1; generators z ↦ z+2 and
    /// z ↦ z/(2z+1).
    pub fn thrice_punctured_sphere() -> Self {
        let vertices = [
            Vertex::Infinity,
            Vertex::Ideal(-1.0),
            Vertex::Ideal(0.0),
            Vertex::Ideal(1.0),
        ];
        let generators = vec![
            Mobius::new(1.0, 2.0, 0.0, 1.0).unwrap(),
            Mobius::new(1.0, 0.0, 2.0, 1.0).unwrap(),
        ];
        let pairings = [(3, 0, false), (2, 1, false), (1, 1, true), (0, 0, true)];
        Self::from_polygon(
            "thrice_punctured_sphere",
            SurfaceKind::Cusped,
            &vertices,
            &pairings,
            generators,
            HPoint::I,
        )
        .expect("quadrilateral data is consistent")
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn with_word_cap(mut self, cap: usize) -> Self {
        self.word_cap = cap;
        self
    }

    pub fn locate(&self, p: HPoint) -> Location {
        for (i, side) in self.sides.iter().enumerate() {
            if side.value(p) < -BOUNDARY_TIE {
                return Location::ExitedThroughSide(i);
            }
        }
        Location::Inside
    }

    /// Most negative side value; ≥ −BOUNDARY_TIE iff inside.
    pub fn min_side_value(&self, p: HPoint) -> f64 {
        self.sides
            .iter()
            .map(|s| s.value(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn letter_mobius(&self, l: Letter) -> Mobius {
        let g = self.generators[l.gen()];
        if l.is_inverse() {
            g.inverse()
        } else {
            g
        }
    }

    /// Product of the word's letters, left to right.
    pub fn word_mobius(&self, w: &Word) -> Mobius {
        w.letters()
            .iter()
            .fold(Mobius::IDENTITY, |acc, &l| acc.compose(&self.letter_mobius(l)))
    }

    /// Moves `p` into the polygon. Returns the reduced point and the word `w`
    /// with `word_mobius(w)(reduced) = p`.
    pub fn reduce_to_domain(&self, p: HPoint) -> Result<(HPoint, Word)> {
        let mut q = p;
        let mut word = Word::new();
        loop {
            match self.locate(q) {
                Location::Inside => return Ok((q, word)),
                Location::ExitedThroughSide(j) => {
                    if word.len() >= self.word_cap {
                        return Err(Error::NonTermination { cap: self.word_cap });
                    }
                    let side = &self.sides[j];
                    q = side.pairing.apply(q)?;
                    word.push(side.exit_letter());
                }
            }
        }
    }

    /// Height of `p` in the horoball coordinates of the nearest ideal vertex:
    /// y at ∞ and Im(−1/(z−a)) at a finite ideal vertex a. Zero if there are
    /// no ideal vertices.
    pub fn cusp_height(&self, p: HPoint) -> f64 {
        let mut h: f64 = 0.0;
        for side in &self.sides {
            match side.start {
                Vertex::Infinity => h = h.max(p.y),
                Vertex::Ideal(a) => {
                    let dx = p.x - a;
                    h = h.max(p.y / (dx * dx + p.y * p.y));
                }
                Vertex::Finite(_) => {}
            }
        }
        h
    }

    pub fn ideal_vertices(&self) -> Vec<Vertex> {
        self.sides.iter().map(|s| s.start).filter(|v| v.is_ideal()).collect()
    }

    /// Vertex-cycle relation through vertex 0: a word in the pairing letters
    /// whose product is ±identity for a compact polygon with angle sum 2π.
    pub fn vertex_cycle_relation(&self) -> Result<Word> {
        let n = self.sides.len();
        if n == 0 || self.sides[0].start.is_ideal() {
            return Err(Error::Invalid("vertex cycles need finite vertices".into()));
        }
        let vertex_point = |v: usize| match self.sides[v % n].start {
            Vertex::Finite(p) => p,
            _ => unreachable!("checked compact"),
        };
        let (start_v, start_s) = (0usize, 0usize);
        let (mut v, mut s) = (start_v, start_s);
        let mut applied: Vec<Letter> = Vec::new();
        loop {
            let side = &self.sides[s];
            let img = side.pairing.apply(vertex_point(v))?;
            let p = side.partner;
            // endpoints of the partner side are vertices p and p+1
            let d0 = super::hyperbolic_distance(img, vertex_point(p));
            let d1 = super::hyperbolic_distance(img, vertex_point(p + 1));
            let (v_next, s_next) = if d0 < d1 {
                (p, (p + n - 1) % n)
            } else {
                ((p + 1) % n, (p + 1) % n)
            };
            applied.push(side.pairing_letter());
            v = v_next;
            s = s_next;
            if (v, s) == (start_v, start_s) {
                break;
            }
            if applied.len() > 4 * n {
                return Err(Error::NonTermination { cap: 4 * n });
            }
        }
        applied.reverse();
        Ok(Word(applied))
    }
}

/// Disk translation w ↦ (w + t·u)/(1 + t·ū·w) conjugated to the half-plane.
fn disk_translation(u: Complex64, t: f64) -> Mobius {
    let s = 1.0 / (1.0 - t * t).sqrt();
    let m = [[c(s, 0.0), u * t * s], [u.conj() * t * s, c(s, 0.0)]];
    // Cayley C = [[i, i], [-1, 1]], C⁻¹ = (1/2i)[[1, -i], [1, i]]
    let i = c(0.0, 1.0);
    let cm = [[i, i], [c(-1.0, 0.0), c(1.0, 0.0)]];
    let half = 1.0 / (2.0 * i);
    let cinv = [[half, -i * half], [half, i * half]];
    let mul = |a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]| {
        let mut r = [[c(0.0, 0.0); 2]; 2];
        for (p, row) in r.iter_mut().enumerate() {
            for (q, e) in row.iter_mut().enumerate() {
                *e = a[p][0] * b[0][q] + a[p][1] * b[1][q];
            }
        }
        r
    };
    let h = mul(mul(cm, m), cinv);
    debug_assert!(h.iter().flatten().all(|e| e.im.abs() < 1e-9));
    Mobius::new(h[0][0].re, h[0][1].re, h[1][0].re, h[1][1].re).expect("translation has det 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hyperbolic_distance;

    #[test]
    fn octagon_relation_is_identity() {
        let s = SurfaceModel::genus2_octagon();
        let rel = s.vertex_cycle_relation().unwrap();
        assert_eq!(rel.len(), 8);
        let m = s.word_mobius(&rel);
        assert!(m.distance_to_identity() < 1e-8, "{m:?}");
    }

    #[test]
    fn octagon_generators_are_hyperbolic_translations() {
        let s = SurfaceModel::genus2_octagon();
        let expected = 2.0 * (1.0 + 2f64.sqrt()).acosh();
        for g in &s.generators {
            let moved = hyperbolic_distance(s.basepoint, g.apply(s.basepoint).unwrap());
            assert!((moved - expected).abs() < 1e-10);
            assert!(g.trace().abs() > 2.0);
        }
    }

    #[test]
    fn generator_moves_basepoint_across_partner() {
        for s in [SurfaceModel::genus2_octagon(), SurfaceModel::thrice_punctured_sphere()] {
            for (i, side) in s.sides.iter().enumerate() {
                let q = side.pairing.apply(s.basepoint).unwrap();
                assert_eq!(s.locate(q), Location::ExitedThroughSide(side.partner), "side {i}");
            }
        }
    }

    #[test]
    fn cusp_heights() {
        let s = SurfaceModel::thrice_punctured_sphere();
        assert_eq!(s.ideal_vertices().len(), 4);
        let p = HPoint::new(0.2, 50.0).unwrap();
        assert_eq!(s.cusp_height(p), 50.0);
        let p = HPoint::new(0.0, 0.01).unwrap();
        assert!((s.cusp_height(p) - 100.0).abs() < 1e-9);
        assert_eq!(SurfaceModel::genus2_octagon().cusp_height(p), 0.0);
    }

    #[test]
    fn bad_pairing_rejected() {
        let vertices = [
            Vertex::Infinity,
            Vertex::Ideal(-1.0),
            Vertex::Ideal(0.0),
            Vertex::Ideal(1.0),
        ];
        // z ↦ z+3 does not map x=-1 onto x=1
        let generators = vec![
            Mobius::new(1.0, 3.0, 0.0, 1.0).unwrap(),
            Mobius::new(1.0, 0.0, 2.0, 1.0).unwrap(),
        ];
        let pairings = [(3, 0, false), (2, 1, false), (1, 1, true), (0, 0, true)];
        let r = SurfaceModel::from_polygon(
            "bad",
            SurfaceKind::Cusped,
            &vertices,
            &pairings,
            generators,
            HPoint::I,
        );
        assert!(r.is_err());
    }
}
