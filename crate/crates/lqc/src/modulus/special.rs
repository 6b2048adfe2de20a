//! Complete elliptic integrals by the arithmetic–geometric mean, the
//! Grötzsch modulus, and the Teichmüller capacity function with its inverse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arithmetic–geometric mean of two nonnegative numbers. Quadratic
/// convergence makes machine precision a handful of iterations away even
/// from very unbalanced starting pairs.
pub fn agm(a: f64, b: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0, "agm needs nonnegative arguments");
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let (mut a, mut g) = (a, b);
    for _ in 0..200 {
        if (a - g).abs() <= 1e-16 * a.max(g) {
            break;
        }
        let an = 0.5 * (a + g);
        g = (a * g).sqrt();
        a = an;
    }
    0.5 * (a + g)
}

/// Complete elliptic integral of the first kind, `K(k) = pi / (2 agm(1, k'))`
/// with `k' = sqrt(1 - k^2)`.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!("elliptic modulus k = {k} outside [0,1)")));
    }
    Ok(PI / (2.0 * agm(1.0, (1.0 - k * k).sqrt())))
}

/// The Grötzsch modulus `mu(r) = (pi/2) K(sqrt(1-r^2)) / K(r)`, reduced to
/// a single AGM quotient.
pub fn grotzsch_mu(r: f64) -> Result<f64> {
    if !(0.0 < r && r < 1.0) {
        return Err(Error::Domain(format!("Grötzsch modulus argument r = {r} outside (0,1)")));
    }
    let rp = ((1.0 - r) * (1.0 + r)).sqrt();
    // K(r) = pi / (2 agm(1, r')) and K(r') = pi / (2 agm(1, r)).
    Ok(PI / 2.0 * agm(1.0, rp) / agm(1.0, r))
}

/// The Teichmüller capacity `tau(s) = pi / mu(1/sqrt(1+s))`, written with
/// both AGM arguments computed cancellation-free so very small and very
/// large `s` stay accurate.
pub fn tau_capacity(s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("tau argument s = {s} must be positive")));
    }
    let r = 1.0 / (1.0 + s).sqrt();
    let rp = (s / (1.0 + s)).sqrt();
    Ok(2.0 * agm(1.0, r) / agm(1.0, rp))
}

/// Monotone inverse of [`tau_capacity`] by bisection in `log s`.
pub fn tau_inverse(v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Range(format!("tau value v = {v} must be positive")));
    }
    // tau is strictly decreasing; bracket in log s over a range wide enough
    // for every representable value of practical size.
    let (mut lo, mut hi) = (-600.0f64, 600.0f64);
    let tau_lo = tau_capacity(lo.exp())?;
    let tau_hi = tau_capacity(hi.exp())?;
    if !(tau_hi < v && v < tau_lo) {
        return Err(Error::Range(format!(
            "tau value {v} outside the invertible range ({tau_hi:.6e}, {tau_lo:.6e})"
        )));
    }
    // 160 halvings leave the log-bracket width below 1e-45, far past the
    // 1e-10 target; each step is one AGM pair.
    for _ in 0..160 {
        let mid = 0.5 * (lo + hi);
        if tau_capacity(mid.exp())? > v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Provenance of a capacity table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacitySource {
    IdentityFormula,
    GridOracle,
}

/// Tabulated Teichmüller capacity, ready for CSV export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityTable {
    pub s_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub source: CapacitySource,
}

impl CapacityTable {
    pub fn new(s_values: Vec<f64>, tau_values: Vec<f64>, source: CapacitySource) -> Result<Self> {
        if s_values.len() != tau_values.len() || s_values.is_empty() {
            return Err(Error::Domain("capacity table needs matching nonempty columns".into()));
        }
        for w in s_values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Domain("capacity table s values must increase".into()));
            }
        }
        for w in tau_values.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Domain(
                    "capacity table tau values must strictly decrease".into(),
                ));
            }
        }
        Ok(CapacityTable { s_values, tau_values, source })
    }

    /// Table straight from the AGM formula (no oracle cross-check).
    pub fn from_formula(s_values: Vec<f64>) -> Result<Self> {
        let tau_values = s_values.iter().map(|&s| tau_capacity(s)).collect::<Result<Vec<_>>>()?;
        CapacityTable::new(s_values, tau_values, CapacitySource::IdentityFormula)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,tau\n");
        for (s, t) in self.s_values.iter().zip(&self.tau_values) {
            out.push_str(&format!("{s:.17e},{t:.17e}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agm_known_value() {
        // Gauss's constant: agm(1, sqrt(2)) = 1.19814023473559220744...
        assert!((agm(1.0, 2.0f64.sqrt()) - 1.198_140_234_735_592_2).abs() < 1e-14);
    }

    #[test]
    fn elliptic_k_at_zero_modulus() {
        assert!((elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mu_functional_identity() {
        // mu(r) mu(sqrt(1-r^2)) = pi^2/4.
        for &r in &[0.2f64, 0.5, 0.9] {
            let rp = ((1.0 - r) * (1.0 + r)).sqrt();
            let prod = grotzsch_mu(r).unwrap() * grotzsch_mu(rp).unwrap();
            assert!((prod - PI * PI / 4.0).abs() < 1e-10, "r = {r}: product {prod}");
        }
    }

    #[test]
    fn mu_functional_identity_log_grid() {
        // The same identity across a 50-point logarithmic grid. The range
        // stays within [0.01, 0.99]: closer to the endpoints the rounding of
        // sqrt(1 - r^2) to f64 alone already perturbs mu by more than 1e-10,
        // so the identity is not testable there at this tolerance.
        for k in 0..50 {
            let r = 10f64.powf(-2.0 + 2.0 * (k as f64 + 0.5) / 50.0);
            let rp = ((1.0 - r) * (1.0 + r)).sqrt();
            let prod = grotzsch_mu(r).unwrap() * grotzsch_mu(rp).unwrap();
            assert!((prod - PI * PI / 4.0).abs() < 1e-10, "r = {r}: product {prod}");
        }
    }

    #[test]
    fn mu_symmetric_point() {
        assert!((grotzsch_mu(1.0 / 2.0f64.sqrt()).unwrap() - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn mu_small_argument_asymptotic() {
        // mu(r) -> log(4/r) as r -> 0.
        let r = 1e-4;
        let diff = grotzsch_mu(r).unwrap() - (4.0 / r).ln();
        assert!(diff.abs() < 1e-4, "difference {diff}");
    }

    #[test]
    fn mu_domain_errors() {
        assert!(grotzsch_mu(0.0).is_err());
        assert!(grotzsch_mu(1.0).is_err());
    }

    #[test]
    fn tau_at_one_is_two() {
        // s = 1 is the symmetric point: tau(1) = pi / mu(1/sqrt 2) = 2.
        assert!((tau_capacity(1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tau_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let s = 10f64.powf(-3.0 + 6.0 * k as f64 / 59.0);
            let t = tau_capacity(s).unwrap();
            assert!(t < prev, "tau not decreasing at s = {s}");
            prev = t;
        }
    }

    #[test]
    fn tau_inverse_roundtrip() {
        for &s in &[0.5, 1.0, 2.0] {
            let v = tau_capacity(s).unwrap();
            let back = tau_inverse(v).unwrap();
            assert!((back - s).abs() < 1e-8, "roundtrip {s} -> {back}");
        }
    }

    #[test]
    fn tau_inverse_out_of_range() {
        assert!(tau_inverse(-1.0).is_err());
        assert!(tau_inverse(1e6).is_err());
    }

    #[test]
    fn capacity_table_csv_and_monotonicity() {
        let table = CapacityTable::from_formula(vec![0.5, 1.0, 2.0]).unwrap();
        assert_eq!(table.source, CapacitySource::IdentityFormula);
        let csv = table.to_csv();
        assert!(csv.starts_with("s,tau\n"));
        assert_eq!(csv.lines().count(), 4);
        // Non-monotone tau column is rejected.
        assert!(CapacityTable::new(
            vec![1.0, 2.0],
            vec![1.0, 1.5],
            CapacitySource::IdentityFormula
        )
        .is_err());
    }
}
