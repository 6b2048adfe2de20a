//! Möbius transformations as 2x2 complex matrices, used to normalize solver
//! output by pinning three boundary points.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `z -> (a z + b) / (c z + d)` with `ad - bc != 0`.
#[derive(Debug, Clone, Copy)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn identity() -> Self {
        Mobius {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// The transformation sending `(z1, z2, z3)` to `(0, 1, infinity)`.
    fn to_standard(z1: Complex64, z2: Complex64, z3: Complex64) -> Result<Self> {
        let eps = 1e-13;
        if (z1 - z2).norm() < eps || (z2 - z3).norm() < eps || (z1 - z3).norm() < eps {
            return Err(Error::Degenerate("coincident points in Mobius construction".into()));
        }
        // (z - z1)(z2 - z3) / ((z - z3)(z2 - z1))
        let p = z2 - z3;
        let q = z2 - z1;
        Ok(Mobius { a: p, b: -z1 * p, c: q, d: -z3 * q })
    }

    fn inverse(&self) -> Self {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    fn compose(&self, other: &Mobius) -> Self {
        // self after other, by matrix product.
        Mobius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// The transformation with `w_k -> t_k` for three point pairs.
    pub fn three_point(w: [Complex64; 3], t: [Complex64; 3]) -> Result<Self> {
        let src = Self::to_standard(w[0], w[1], w[2])?;
        let dst = Self::to_standard(t[0], t[1], t[2])?;
        Ok(dst.inverse().compose(&src))
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Derivative `(ad - bc) / (cz + d)^2`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        (self.a * self.d - self.b * self.c) / (den * den)
    }
}
