use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// A point of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || y <= 0.0 {
            return Err(Error::Domain(format!("({x}, {y}) is not in the upper half-plane")));
        }
        Ok(Self { x, y })
    }

    pub const I: HPoint = HPoint { x: 0.0, y: 1.0 };

    pub fn z(self) -> Complex64 {
        c(self.x, self.y)
    }

    pub fn from_z(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }
}

/// Cayley map from the unit disk (0 ↦ i).
pub fn disk_to_half_plane(w: Complex64) -> Result<HPoint> {
    if w.norm() >= 1.0 {
        return Err(Error::Domain(format!("{w} is not in the open unit disk")));
    }
    HPoint::from_z(c(0.0, 1.0) * (1.0 + w) / (1.0 - w))
}

/// Real 2×2 matrix of determinant one acting by z ↦ (az+b)/(cz+d).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Scales the matrix to determinant one. Fails if det ≤ 0.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Degenerate(format!("Möbius determinant {det} is not positive")));
        }
        let s = det.sqrt();
        Ok(Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `self ∘ other`. The determinant is renormalized only while it can be
    /// computed accurately; for long products ad − bc cancels catastrophically.
    pub fn compose(&self, o: &Mobius) -> Mobius {
        let m = Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        };
        let det = m.det();
        let size = (m.a * m.d).abs() + (m.b * m.c).abs();
        if det > 0.0 && det > 1e-8 * size {
            let s = det.sqrt();
            Mobius {
                a: m.a / s,
                b: m.b / s,
                c: m.c / s,
                d: m.d / s,
            }
        } else {
            m
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn apply(&self, p: HPoint) -> Result<HPoint> {
        mobius_apply(self, p)
    }

    /// Image of a point of ℂ ∪ {∞}; `None` stands for ∞.
    pub fn apply_boundary(&self, z: Option<Complex64>) -> Option<Complex64> {
        match z {
            None => {
                if self.c == 0.0 {
                    None
                } else {
                    Some(c(self.a / self.c, 0.0))
                }
            }
            Some(z) => {
                let den = self.c * z + self.d;
                if den.norm() == 0.0 {
                    None
                } else {
                    Some((self.a * z + self.b) / den)
                }
            }
        }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Max entrywise distance to ±identity.
    pub fn distance_to_identity(&self) -> f64 {
        let plus = (self.a - 1.0)
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max((self.d - 1.0).abs());
        let minus = (self.a + 1.0)
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max((self.d + 1.0).abs());
        plus.min(minus)
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_row_slice(
            2,
            2,
            &[c(self.a, 0.0), c(self.b, 0.0), c(self.c, 0.0), c(self.d, 0.0)],
        )
    }
}

pub fn mobius_apply(m: &Mobius, p: HPoint) -> Result<HPoint> {
    let den_re = m.c * p.x + m.d;
    let den_im = m.c * p.y;
    let den2 = den_re * den_re + den_im * den_im;
    // Im((az+b)/(cz+d)) = y / |cz+d|² for determinant one
    let y = p.y / den2;
    let num_re = m.a * p.x + m.b;
    let num_im = m.a * p.y;
    let x = (num_re * den_re + num_im * den_im) / den2;
    if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Degenerate(format!(
            "Möbius image of ({}, {}) left the half-plane",
            p.x, p.y
        )));
    }
    Ok(HPoint { x, y })
}

pub fn hyperbolic_distance(p: HPoint, q: HPoint) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let u = (dx * dx + dy * dy) / (2.0 * p.y * q.y);
    // acosh(1+u) written to keep precision for small u
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn pt(x: f64, y: f64) -> HPoint {
        HPoint::new(x, y).unwrap()
    }

    #[test]
    fn apply_examples() {
        let p = mobius_apply(&Mobius::IDENTITY, pt(0.3, 2.0)).unwrap();
        assert_eq!(p, pt(0.3, 2.0));
        let t = Mobius::new(1.0, 2.0, 0.0, 1.0).unwrap();
        let p = t.apply(pt(0.0, 1.0)).unwrap();
        assert!((p.x - 2.0).abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15);
        let s = Mobius::new(0.0, -1.0, 1.0, 0.0).unwrap();
        let p = s.apply(pt(0.0, 2.0)).unwrap();
        assert!(p.x.abs() < 1e-15 && (p.y - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let p = pt(0.4, 1.7);
        assert_eq!(hyperbolic_distance(p, p), 0.0);
        assert!((hyperbolic_distance(pt(0.0, 1.0), pt(0.0, E)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_points_rejected() {
        assert!(HPoint::new(0.0, 0.0).is_err());
        assert!(HPoint::new(f64::NAN, 1.0).is_err());
        assert!(Mobius::new(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cayley_center() {
        let p = disk_to_half_plane(c(0.0, 0.0)).unwrap();
        assert!((p.x).abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15);
    }
}
