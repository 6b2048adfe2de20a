//! Moduli of boundary quadrilaterals `Q(xi, r, R) = {r <= |z - xi| <= R} ∩ Δ`
//! with `xi` on the unit circle, for the identity and for mapped regions.
//!
//! The region is rectangularized by log-polar coordinates about `xi`:
//! `z = xi (1 + e^{x + i phi})` with `x = log |z - xi|`. At distance
//! `t = e^x` the circle `S(xi, t)` meets the disk in an arc of angular width
//! `theta(t) = 2 arccos(t/2)` centered opposite `xi`, so scaling the angle
//! to `s in [0, 1]` maps `Q` onto the rectangle `[log r, log R] x [0, 1]`.
//! The Dirichlet energy is pushed through that chart (and, for a mapped
//! quadrilateral, through the pullback conformal structure of the map, which
//! depends only on its dilatation) and minimized with P1 elements. The
//! minimized energy is the modulus of the curve family joining the two
//! boundary arcs `Q ∩ ∂Δ`; the conjugate family joining the circular sides
//! comes from swapping the Dirichlet and Neumann sides.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{minimize_energy, TensorMesh};
use crate::grid::{BeltramiField, DiskGridMap};
use crate::growth::{boundary_divergence_integral, GrowthFunction};
use crate::mapcore::dilatation_field;

/// The quadrilateral `{r <= |z - xi| <= R} ∩ Δ` with `xi` on `∂Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrilateralSpec {
    /// Unimodular center of the two circles.
    pub xi: Complex64,
    pub r: f64,
    pub big_r: f64,
}

/// Angular width of `S(xi, t) ∩ Δ`.
fn theta_width(t: f64) -> f64 {
    2.0 * (t / 2.0).acos()
}

impl QuadrilateralSpec {
    pub fn new(xi: Complex64, r: f64, big_r: f64) -> Result<Self> {
        if (xi.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("xi = {xi} is not on the unit circle")));
        }
        if !(0.0 < r && r < big_r && big_r < 2.0) {
            return Err(Error::Domain(format!(
                "quadrilateral radii need 0 < r < R < 2, got r = {r}, R = {big_r}"
            )));
        }
        // Arcs merge when the outer circle barely clips the disk.
        if theta_width(big_r) < 1e-3 {
            return Err(Error::Degenerate(format!(
                "boundary arcs of Q merge: angular width {:.3e} at R = {big_r}",
                theta_width(big_r)
            )));
        }
        Ok(QuadrilateralSpec { xi: xi / xi.norm(), r, big_r })
    }
}

/// Which of the two curve families of the quadrilateral is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFamily {
    /// Curves joining the two arcs of `Q ∩ ∂Δ` (the family of the modulus
    /// lower bound); Dirichlet data on the unit-circle sides.
    JoinsBoundaryArcs,
    /// The conjugate family joining `S(xi, r)` to `S(xi, R)`; its modulus is
    /// the reciprocal of the other and serves as a solver self-check.
    JoinsCircularSides,
}

/// Modulus at a fixed angular resolution `n` (cells across `[0, 1]` in the
/// scaled angle; the radial cell count keeps the aspect ratio near one).
/// Exposed so refinement studies can control the resolution directly.
pub fn modulus_at_resolution(
    mu: Option<&BeltramiField>,
    q: &QuadrilateralSpec,
    family: CurveFamily,
    n: usize,
) -> Result<f64> {
    let x0 = q.r.ln();
    let x1 = q.big_r.ln();
    let mean_width = 0.5 * (theta_width(q.r) + theta_width(q.big_r));
    let cells_x = ((n as f64 * (x1 - x0) / mean_width).ceil() as usize).max(8);
    let mesh = TensorMesh::uniform(x0, x1, 0.0, 1.0, cells_x, n.max(8))?;

    let xi = q.xi;
    let coeff = move |x: f64, s: f64| -> [f64; 3] {
        let t = x.exp();
        let theta = theta_width(t);
        // d theta / dx = t * d/dt [2 arccos(t/2)] = -t / sqrt(1 - t^2/4).
        let theta_x = -t / (1.0 - 0.25 * t * t).sqrt();
        let phi = std::f64::consts::PI + (s - 0.5) * theta;
        let phi_x = (s - 0.5) * theta_x;
        // Chart Jacobian from z = xi (1 + e^{x + i phi(x, s)}).
        let e = xi * Complex64::new(0.0, phi).exp() * t;
        let z_x = e * Complex64::new(1.0, phi_x);
        let z_s = e * Complex64::new(0.0, theta);
        let (p, u) = (z_x.re, z_x.im);
        let (qq, v) = (z_s.re, z_s.im);
        let det = p * v - qq * u;
        // Pullback conformal structure of the map: depends only on mu.
        let (b11, b12, b22) = match mu {
            None => (1.0, 0.0, 1.0),
            Some(field) => {
                let z = xi * (Complex64::new(1.0, 0.0) + Complex64::from_polar(t, phi));
                let m = field.interpolate(z);
                let d = 1.0 - m.norm_sqr();
                (
                    ((1.0 - m.re) * (1.0 - m.re) + m.im * m.im) / d,
                    -2.0 * m.im / d,
                    ((1.0 + m.re) * (1.0 + m.re) + m.im * m.im) / d,
                )
            }
        };
        // adj(J) B adj(J)^T / det(J).
        let n11 = v * v * b11 - 2.0 * v * qq * b12 + qq * qq * b22;
        let n12 = -u * v * b11 + (p * v + qq * u) * b12 - p * qq * b22;
        let n22 = u * u * b11 - 2.0 * u * p * b12 + p * p * b22;
        [n11 / det, n12 / det, n22 / det]
    };

    let dirichlet = move |x: f64, s: f64| -> Option<f64> {
        match family {
            CurveFamily::JoinsBoundaryArcs => {
                if s == 0.0 {
                    Some(0.0)
                } else if s == 1.0 {
                    Some(1.0)
                } else {
                    None
                }
            }
            CurveFamily::JoinsCircularSides => {
                if x == x0 {
                    Some(0.0)
                } else if x == x1 {
                    Some(1.0)
                } else {
                    None
                }
            }
        }
    };

    let sol = minimize_energy(&mesh, &coeff, &dirichlet, 1e-12)?;
    Ok(sol.energy)
}

/// Refine until one halving of the mesh spacing changes the value by less
/// than 1%, then return the finer value.
fn refined_modulus(
    mu: Option<&BeltramiField>,
    q: &QuadrilateralSpec,
    family: CurveFamily,
) -> Result<f64> {
    let mut prev: Option<f64> = None;
    let mut last = 0.0;
    for n in [24usize, 48, 96, 192] {
        last = modulus_at_resolution(mu, q, family, n)?;
        if let Some(p) = prev {
            if (last - p).abs() < 0.01 * last.abs() {
                return Ok(last);
            }
        }
        prev = Some(last);
    }
    Err(Error::NonConvergence(format!(
        "quadrilateral modulus refinement did not settle below 1% (last value {last})"
    )))
}

/// Modulus of the family joining the two boundary arcs of `Q` itself.
pub fn quad_modulus(q: &QuadrilateralSpec) -> Result<f64> {
    refined_modulus(None, q, CurveFamily::JoinsBoundaryArcs)
}

/// Modulus of the conjugate family (joining the circular sides); the product
/// with [`quad_modulus`] tends to 1 and is used as a consistency check.
pub fn quad_modulus_conjugate(q: &QuadrilateralSpec) -> Result<f64> {
    refined_modulus(None, q, CurveFamily::JoinsCircularSides)
}

/// Modulus of the image family `f(Q)` for a sampled map, computed on `Q`
/// through the pullback structure of the extracted dilatation.
pub fn quad_modulus_mapped(map: &DiskGridMap, q: &QuadrilateralSpec) -> Result<f64> {
    let (mu, _) = dilatation_field(map)?;
    quad_modulus_of_dilatation(&mu, q)
}

/// Same as [`quad_modulus_mapped`] for a dilatation given directly.
pub fn quad_modulus_of_dilatation(mu: &BeltramiField, q: &QuadrilateralSpec) -> Result<f64> {
    refined_modulus(Some(mu), q, CurveFamily::JoinsBoundaryArcs)
}

/// The growth-function lower bound for the modulus of `f(Q(xi, r, R))`:
/// the boundary integral `int_r^R dt / (t rho*(t))`, shared with the
/// allowability machinery.
pub fn lemma_qs_lower_bound(rho: &GrowthFunction, r: f64, big_r: f64) -> Result<f64> {
    boundary_divergence_integral(rho, r, big_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PolarGrid;
    use crate::mapcore::{radial_eval, RadialMapSpec};

    fn q(r: f64, big_r: f64) -> QuadrilateralSpec {
        QuadrilateralSpec::new(Complex64::new(1.0, 0.0), r, big_r).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(QuadrilateralSpec::new(Complex64::new(0.5, 0.0), 0.1, 0.3).is_err());
        assert!(QuadrilateralSpec::new(Complex64::new(1.0, 0.0), 0.3, 0.1).is_err());
        assert!(QuadrilateralSpec::new(Complex64::new(1.0, 0.0), 0.1, 2.5).is_err());
    }

    #[test]
    fn small_radii_log_rectangle() {
        // For small radii the strip is nearly a rectangle of height pi:
        // modulus ~ log(R/r)/pi = 0.733.
        let m = quad_modulus(&q(0.01, 0.1)).unwrap();
        let oracle = (0.1f64 / 0.01).ln() / std::f64::consts::PI;
        assert!((m - oracle).abs() < 0.05 * oracle, "modulus {m} vs {oracle}");
    }

    #[test]
    fn rotation_invariance() {
        let base = quad_modulus(&q(0.05, 0.3)).unwrap();
        let rotated = QuadrilateralSpec::new(Complex64::from_polar(1.0, 1.234), 0.05, 0.3).unwrap();
        let m = quad_modulus(&rotated).unwrap();
        assert!((m - base).abs() < 1e-6, "rotated {m} vs {base}");
    }

    #[test]
    fn refinement_consistency() {
        // Halving the spacing twice moves the value monotonically closer to
        // the finest one: observed convergence order at least 1.
        let spec = q(0.05, 0.3);
        let m1 = modulus_at_resolution(None, &spec, CurveFamily::JoinsBoundaryArcs, 24).unwrap();
        let m2 = modulus_at_resolution(None, &spec, CurveFamily::JoinsBoundaryArcs, 48).unwrap();
        let m4 = modulus_at_resolution(None, &spec, CurveFamily::JoinsBoundaryArcs, 96).unwrap();
        let c1 = (m2 - m1).abs();
        let c2 = (m4 - m2).abs();
        assert!(c2 < 0.5 * c1 + 1e-12, "refinement steps {c1} then {c2}");
    }

    #[test]
    fn conjugate_duality() {
        // The two families of a quadrilateral have reciprocal moduli.
        let spec = q(0.05, 0.3);
        let product = quad_modulus(&spec).unwrap() * quad_modulus_conjugate(&spec).unwrap();
        assert!((product - 1.0).abs() < 0.03, "duality product {product}");
    }

    #[test]
    fn lower_bound_vs_identity_modulus() {
        // Constant rho: the bound equals the modulus of the identity strip
        // family up to discretization, and never exceeds it.
        for &(r, big_r) in &[(0.01, 0.1), (0.05, 0.3)] {
            let bound = lemma_qs_lower_bound(&GrowthFunction::Constant, r, big_r).unwrap();
            let m = quad_modulus(&q(r, big_r)).unwrap();
            assert!(
                bound <= m * (1.0 + 1e-6),
                "bound {bound} above modulus {m} at ({r}, {big_r})"
            );
        }
    }

    #[test]
    fn lower_bound_monotone_in_outer_radius() {
        let rho = GrowthFunction::Constant;
        let a = lemma_qs_lower_bound(&rho, 0.05, 0.2).unwrap();
        let b = lemma_qs_lower_bound(&rho, 0.05, 0.3).unwrap();
        assert!(b > a);
    }

    #[test]
    fn mapped_radial_respects_lower_bound() {
        // f_a with a = 1.2 against its matching growth function: the image
        // modulus stays above the boundary integral with positive margin.
        let a = 1.2;
        let spec = RadialMapSpec::new(a).unwrap();
        let grid = PolarGrid::new(192, 384, 1.0 - 1.0 / 384.0).unwrap();
        let map = DiskGridMap::sample(grid, "radial", |z| radial_eval(spec, z));
        let quad = q(0.05, 0.3);
        let m = quad_modulus_mapped(&map, &quad).unwrap();
        let bound = lemma_qs_lower_bound(&GrowthFunction::radial_family(a), 0.05, 0.3).unwrap();
        assert!(m > bound, "modulus {m} not above bound {bound}");
    }
}
