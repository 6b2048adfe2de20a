//! Growth functions `rho` and the allowability checks.
//!
//! A growth function bounds the pointwise distortion of a locally
//! quasiconformal self-map of the disk as a function of the radius. The
//! allowability conditions are: normalization `rho(0) = 1`, integrability of
//! `rho` over `[0, 1)`, and divergence of the boundary integral
//! `I(t) = int_t^R dr / (r rho*(r))` as `t -> 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Relative tolerance for all quadrature in this module.
pub const QUAD_TOL: f64 = 1e-9;

/// Default outer radius for the boundary divergence integral.
pub const DEFAULT_R: f64 = 0.25;

/// A candidate growth function `rho: [0,1) -> [1, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GrowthFunction {
    /// `rho == 1`; the classical quasiconformal case.
    #[serde(rename = "constant")]
    Constant,
    /// `rho(r) = 1 + log(1/(1-r))`. The bare logarithm fails the
    /// normalization `rho(0) = 1`, so the shifted version is built in.
    #[serde(rename = "logNormalized")]
    LogNormalized,
    /// The distortion profile of the radial map family, symmetrized to stay
    /// `>= 1`: `max(A, 1/A)` with `A(r) = (1-(1-r)^a) / (a r (1-r)^(a-1))`.
    #[serde(rename = "radialFamily")]
    RadialFamily { a: f64 },
    /// `rho(r) = (1-r)^(-beta)`.
    #[serde(rename = "powerLaw")]
    PowerLaw { beta: f64 },
    /// Piecewise-linear interpolation of `(r, value)` samples.
    #[serde(rename = "userTable")]
    UserTable { samples: Vec<(f64, f64)> },
}

impl GrowthFunction {
    pub fn radial_family(a: f64) -> Self {
        GrowthFunction::RadialFamily { a }
    }

    pub fn power_law(beta: f64) -> Self {
        GrowthFunction::PowerLaw { beta }
    }

    /// Unsymmetrized radial profile `A(r)`, extended by its limit 1 at `r=0`.
    pub fn radial_profile(a: f64, r: f64) -> f64 {
        if r < 1e-8 {
            // Second-order expansion: A(r) = 1 + (a-1) r / 2 + O(r^2).
            return 1.0 + 0.5 * (a - 1.0) * r;
        }
        let om = 1.0 - r;
        (1.0 - om.powf(a)) / (a * r * om.powf(a - 1.0))
    }

    /// Evaluate `rho(r)` for `r` in `[0, 1)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Domain(format!("rho evaluated at r = {r} outside [0,1)")));
        }
        Ok(self.eval_unchecked(r))
    }

    /// Evaluation without the domain check; callers clamp `r` into `[0, 1)`.
    pub fn eval_unchecked(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0 - 1e-15);
        match self {
            GrowthFunction::Constant => 1.0,
            GrowthFunction::LogNormalized => 1.0 + (1.0 / (1.0 - r)).ln(),
            GrowthFunction::RadialFamily { a } => {
                let p = Self::radial_profile(*a, r);
                p.max(1.0 / p)
            }
            GrowthFunction::PowerLaw { beta } => (1.0 - r).powf(-beta),
            GrowthFunction::UserTable { samples } => {
                if samples.is_empty() {
                    return 1.0;
                }
                if r <= samples[0].0 {
                    return samples[0].1;
                }
                for w in samples.windows(2) {
                    let (r0, v0) = w[0];
                    let (r1, v1) = w[1];
                    if r <= r1 {
                        let t = (r - r0) / (r1 - r0);
                        return v0 + t * (v1 - v0);
                    }
                }
                samples.last().unwrap().1
            }
        }
    }
}

/// Evaluate `rho(r)`; thin wrapper kept for symmetry with the other free
/// functions of this module.
pub fn eval_rho(rho: &GrowthFunction, r: f64) -> Result<f64> {
    rho.eval(r)
}

/// The circle integral `rho*(r)` of the allowability condition, computed at a
/// boundary point with angle `xi_angle`. `rho` depends only on `|z|`, so the
/// result is independent of `xi_angle`; the parameter exists so the
/// rotational symmetry can be tested directly.
pub fn rho_star_at(rho: &GrowthFunction, r: f64, xi_angle: f64) -> Result<f64> {
    if !(0.0 < r && r < 2.0) {
        return Err(Error::Domain(format!("rho* radius r = {r} outside (0,2)")));
    }
    // z = xi + r e^{i theta} lies in the disk iff cos(theta - xi_angle) < -r/2.
    let phi_c = (-r / 2.0).acos();
    let (sa, ca) = xi_angle.sin_cos();
    let f = |phi: f64| {
        let theta = xi_angle + phi;
        let (st, ct) = theta.sin_cos();
        let re = ca + r * ct;
        let im = sa + r * st;
        let modulus = (re * re + im * im).sqrt();
        rho.eval_unchecked(modulus.min(1.0 - 1e-15))
    };
    integrate(f, phi_c, 2.0 * std::f64::consts::PI - phi_c, QUAD_TOL)
}

/// `rho*(r)` at the default boundary point `xi = 1`.
pub fn rho_star(rho: &GrowthFunction, r: f64) -> Result<f64> {
    rho_star_at(rho, r, 0.0)
}

/// The boundary integral `I(t) = int_t^R dr / (r rho*(r))`.
///
/// This is simultaneously condition (iii) of allowability, the lower bound of
/// the quadrilateral-modulus lemma, and the ingredient of the quasisymmetry
/// bound `lambda(t)`.
pub fn boundary_divergence_integral(rho: &GrowthFunction, t: f64, big_r: f64) -> Result<f64> {
    if !(0.0 < t && t < big_r && big_r < 2.0) {
        return Err(Error::Domain(format!(
            "boundary integral needs 0 < t < R < 2, got t = {t}, R = {big_r}"
        )));
    }
    let f = |r: f64| {
        let rs = rho_star(rho, r).unwrap_or(f64::INFINITY);
        1.0 / (r * rs)
    };
    integrate(f, t, big_r, 1e-8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrabilityVerdict {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceVerdict {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub verdict: IntegrabilityVerdict,
    /// Value of `int_0^1 rho` when the verdict is finite.
    pub value: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryDivergenceReport {
    pub verdict: DivergenceVerdict,
    /// Regression slope of `I(t)` against `log(1/t)`.
    pub slope_estimate: f64,
    pub diagnostic: Option<String>,
}

/// Outcome of the three allowability conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllowabilityReport {
    pub normalization_ok: bool,
    pub integrability: IntegrabilityReport,
    pub boundary_divergence: BoundaryDivergenceReport,
    pub r_used: f64,
    /// Sampled `(t, I(t))` pairs backing the condition (iii) verdict.
    pub i_samples: Vec<(f64, f64)>,
}

impl AllowabilityReport {
    pub fn allowable(&self) -> bool {
        self.normalization_ok
            && self.integrability.verdict == IntegrabilityVerdict::Finite
            && self.boundary_divergence.verdict == DivergenceVerdict::Divergent
    }
}

/// Threshold separating "finite" from "divergent" in the decade-segment ratio
/// classification of `int_0^1 rho`.
const FINITE_RATIO: f64 = 0.97;
const DIVERGENT_RATIO: f64 = 0.99;

fn check_integrability(rho: &GrowthFunction) -> IntegrabilityReport {
    // Integrate up to 0.99, then decade segments toward the endpoint. The
    // segment ratio estimates the local power (1-r)^(-p): ratio ~ 10^(p-1),
    // so ratios below 1 signal an integrable tail.
    let base = match integrate(|r| rho.eval_unchecked(r), 0.0, 0.99, QUAD_TOL) {
        Ok(v) => v,
        Err(e) => {
            return IntegrabilityReport {
                verdict: IntegrabilityVerdict::Inconclusive,
                value: None,
                diagnostic: Some(format!("base quadrature failed: {e}")),
            }
        }
    };
    let mut segs = Vec::new();
    let mut total = base;
    // Two decades per segment so the ratio test separates exponents near 1:
    // a tail (1-r)^(-p) yields a segment ratio of 10^(-2(1-p)).
    for k in [2, 4, 6, 8] {
        let lo = 1.0 - 10f64.powi(-k);
        let hi = 1.0 - 10f64.powi(-(k + 2));
        match integrate(|r| rho.eval_unchecked(r), lo, hi, 1e-8) {
            Ok(v) => {
                total += v;
                segs.push(v);
            }
            Err(e) => {
                return IntegrabilityReport {
                    verdict: IntegrabilityVerdict::Inconclusive,
                    value: None,
                    diagnostic: Some(format!("tail quadrature failed: {e}")),
                }
            }
        }
    }
    let last = *segs.last().unwrap();
    let prev = segs[segs.len() - 2];
    if last <= 1e-10 * total.abs().max(1.0) {
        return IntegrabilityReport {
            verdict: IntegrabilityVerdict::Finite,
            value: Some(total),
            diagnostic: None,
        };
    }
    let ratio = last / prev;
    if ratio < FINITE_RATIO {
        // Geometric tail estimate for the remaining (1-1e-9, 1) sliver.
        let tail = last * ratio / (1.0 - ratio);
        IntegrabilityReport {
            verdict: IntegrabilityVerdict::Finite,
            value: Some(total + tail),
            diagnostic: None,
        }
    } else if ratio > DIVERGENT_RATIO {
        IntegrabilityReport {
            verdict: IntegrabilityVerdict::Divergent,
            value: None,
            diagnostic: Some(format!("decade segment ratio {ratio:.4} >= {DIVERGENT_RATIO}")),
        }
    } else {
        IntegrabilityReport {
            verdict: IntegrabilityVerdict::Inconclusive,
            value: None,
            diagnostic: Some(format!(
                "decade segment ratio {ratio:.4} in the undecidable band ({FINITE_RATIO}, {DIVERGENT_RATIO})"
            )),
        }
    }
}

/// Slope threshold (in `I` per unit `log(1/t)`) for declaring divergence.
const SLOPE_THRESHOLD: f64 = 0.05;

fn check_boundary_divergence(
    rho: &GrowthFunction,
    big_r: f64,
    t_grid: &[f64],
) -> (BoundaryDivergenceReport, Vec<(f64, f64)>) {
    let mut samples = Vec::new();
    for &t in t_grid {
        match boundary_divergence_integral(rho, t, big_r) {
            Ok(v) => samples.push((t, v)),
            Err(e) => {
                return (
                    BoundaryDivergenceReport {
                        verdict: DivergenceVerdict::Inconclusive,
                        slope_estimate: f64::NAN,
                        diagnostic: Some(format!("I({t}) failed: {e}")),
                    },
                    samples,
                )
            }
        }
    }
    if samples.len() < 3 {
        return (
            BoundaryDivergenceReport {
                verdict: DivergenceVerdict::Inconclusive,
                slope_estimate: f64::NAN,
                diagnostic: Some("need at least 3 grid points".into()),
            },
            samples,
        );
    }
    // Least-squares slope of I against x = log(1/t).
    let xs: Vec<f64> = samples.iter().map(|&(t, _)| (1.0 / t).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, v)| v).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let last_increment = ys[ys.len() - 1] - ys[ys.len() - 2];
    let verdict = if slope > SLOPE_THRESHOLD && last_increment > 0.0 {
        BoundaryDivergenceReport {
            verdict: DivergenceVerdict::Divergent,
            slope_estimate: slope,
            diagnostic: None,
        }
    } else if last_increment.abs() < 1e-6 {
        BoundaryDivergenceReport {
            verdict: DivergenceVerdict::Convergent,
            slope_estimate: slope,
            diagnostic: None,
        }
    } else {
        BoundaryDivergenceReport {
            verdict: DivergenceVerdict::Inconclusive,
            slope_estimate: slope,
            diagnostic: Some(format!(
                "slope {slope:.4} below threshold {SLOPE_THRESHOLD} but I(t) still moving"
            )),
        }
    };
    (verdict, samples)
}

/// Run all three allowability conditions.
///
/// `t_grid` must decrease strictly toward 0 with every entry below `big_r`.
pub fn check_allowable(
    rho: &GrowthFunction,
    big_r: f64,
    t_grid: &[f64],
) -> Result<AllowabilityReport> {
    if !(0.0 < big_r && big_r < 2.0) {
        return Err(Error::Domain(format!("R = {big_r} outside (0,2)")));
    }
    for w in t_grid.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Domain("t_grid must be strictly decreasing".into()));
        }
    }
    if t_grid.iter().any(|&t| t <= 0.0 || t >= big_r) {
        return Err(Error::Domain("t_grid entries must lie in (0, R)".into()));
    }

    // (i) normalization plus spot-checked monotonicity.
    let mut normalization_ok = (rho.eval_unchecked(0.0) - 1.0).abs() < 1e-12;
    let mut prev = 0.0;
    for k in 0..=200 {
        let r = k as f64 / 201.0;
        let v = rho.eval_unchecked(r);
        if v < 1.0 - 1e-12 || v + 1e-12 < prev {
            normalization_ok = false;
        }
        prev = v;
    }

    let integrability = check_integrability(rho);
    let (boundary_divergence, i_samples) = check_boundary_divergence(rho, big_r, t_grid);

    Ok(AllowabilityReport {
        normalization_ok,
        integrability,
        boundary_divergence,
        r_used: big_r,
        i_samples,
    })
}

/// Default strictly decreasing `t`-grid for condition (iii).
pub fn default_t_grid(big_r: f64) -> Vec<f64> {
    (1..=8).map(|k| big_r * 2f64.powi(-2 * k)).collect()
}
