//! Boundary traces of disk maps and circle quasisymmetry: extracting the
//! boundary homeomorphism from near-rim samples, the chord-ratio
//! quasisymmetric function, and the explicit growth-function bound that the
//! trace of an inverse map must satisfy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::DiskGridMap;
use crate::growth::{boundary_divergence_integral, GrowthFunction};
use crate::modulus::tau_inverse;

/// Default number of angular samples of a trace.
pub const DEFAULT_TRACE_SAMPLES: usize = 4096;

/// A circle homeomorphism sampled on a uniform angular partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryTrace {
    /// Uniform partition of `[0, 2 pi)`.
    pub angles: Vec<f64>,
    /// Unimodular samples `h(e^{i theta})`.
    pub values: Vec<Complex64>,
    /// Whether the argument of the samples increases strictly (mod 2 pi), as
    /// it must for the trace of an orientation-preserving homeomorphism.
    pub monotone: bool,
}

impl BoundaryTrace {
    /// Build a trace from unimodular samples at the uniform angles.
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 8 {
            return Err(Error::Domain("trace needs at least 8 samples".into()));
        }
        for v in &values {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("trace sample {v} is not unimodular")));
            }
        }
        let n = values.len();
        let angles = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let monotone = unwrapped_args(&values).windows(2).all(|w| w[1] > w[0]);
        Ok(BoundaryTrace { angles, values, monotone })
    }

    /// Sample a circle map given as a function of the angle.
    pub fn from_fn<F: Fn(f64) -> Complex64>(n: usize, h: F) -> Result<Self> {
        let values = (0..n)
            .map(|k| {
                let v = h(2.0 * PI * k as f64 / n as f64);
                v / v.norm()
            })
            .collect();
        BoundaryTrace::new(values)
    }

    pub fn identity(n: usize) -> Self {
        BoundaryTrace::from_fn(n, |t| Complex64::from_polar(1.0, t)).expect("identity trace")
    }

    /// Value at an arbitrary angle by linear interpolation of the samples
    /// (projected back to the circle).
    pub fn eval(&self, theta: f64) -> Complex64 {
        let n = self.values.len();
        let pos = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
        let k = (pos.floor() as usize).min(n - 1);
        let frac = pos - k as f64;
        let a = self.values[k];
        let b = self.values[(k + 1) % n];
        let v = a * (1.0 - frac) + b * frac;
        if v.norm() == 0.0 {
            // Antipodal neighbors cannot happen for a homeomorphism trace at
            // reasonable resolution; fall back to the left sample.
            return a;
        }
        v / v.norm()
    }

    /// The inverse circle map, obtained by inverting the unwrapped angle
    /// function of the samples.
    pub fn inverse(&self) -> Result<BoundaryTrace> {
        if !self.monotone {
            return Err(Error::Degenerate("cannot invert a non-monotone trace".into()));
        }
        let n = self.values.len();
        let psi = unwrapped_args(&self.values);
        let psi0 = psi[0];
        // psi - psi0 increases from 0 to 2 pi across one period; invert by
        // marching a pointer through the target angles.
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            // Target angle for the inverse sample, shifted into the range of
            // the unwrapped angles.
            let phi = psi0 + (2.0 * PI * k as f64 / n as f64 - psi0).rem_euclid(2.0 * PI);
            let mut lo = 0usize;
            let mut hi = n; // index n means theta = 2 pi, psi = psi0 + 2 pi
            let at = |i: usize| if i == n { psi0 + 2.0 * PI } else { psi[i] };
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if at(mid) <= phi {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (p0, p1) = (at(lo), at(hi));
            let frac = if p1 > p0 { (phi - p0) / (p1 - p0) } else { 0.0 };
            let theta = 2.0 * PI * (lo as f64 + frac) / n as f64;
            values.push(Complex64::from_polar(1.0, theta));
        }
        BoundaryTrace::new(values)
    }

    /// The reflected trace `theta -> conj(h(e^{-i theta}))`; exchanges the
    /// two sides of the quasisymmetry ratio.
    pub fn reflected(&self) -> BoundaryTrace {
        let n = self.values.len();
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            values.push(self.values[(n - k) % n].conj());
        }
        BoundaryTrace::new(values).expect("reflection preserves trace invariants")
    }

    /// CSV serialization `theta,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,re,im\n");
        for (a, v) in self.angles.iter().zip(&self.values) {
            out.push_str(&format!("{a:.17e},{:.17e},{:.17e}\n", v.re, v.im));
        }
        out
    }
}

/// Arguments of the samples unwrapped to a (weakly) increasing sequence
/// starting at `arg(values[0])`.
fn unwrapped_args(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev = values[0].arg();
    out.push(prev);
    for v in &values[1..] {
        let mut a = v.arg();
        while a < prev - PI {
            a += 2.0 * PI;
        }
        while a > prev + PI {
            a -= 2.0 * PI;
        }
        out.push(a);
        prev = a;
    }
    out
}

/// Epsilon levels used by [`boundary_trace`] when the caller has no
/// preference; suitable for the default grids with `r_max = 1 - 1/512`.
pub fn default_epsilons() -> Vec<f64> {
    vec![0.016, 0.008, 0.004]
}

/// Epsilon levels adapted to a map's grid: the innermost level sits on the
/// outermost ring when the grid stops short of the default `eps = 0.004`.
pub fn grid_epsilons(map: &DiskGridMap) -> Vec<f64> {
    let e = (1.0 - map.grid.r_max).max(0.004);
    vec![4.0 * e, 2.0 * e, e]
}

/// Extract the boundary trace of a disk map by sampling concentric circles
/// `|z| = 1 - eps` and checking that the levels form a Cauchy sequence.
///
/// The samples are projected to the unit circle before comparison, so maps
/// whose radial part still moves near the rim (every degenerating example
/// does) are only tested for angular convergence — exactly the part that
/// must settle for a continuous boundary extension to exist.
pub fn boundary_trace(map: &DiskGridMap, epsilons: &[f64]) -> Result<BoundaryTrace> {
    if epsilons.len() < 2 || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("need at least two strictly decreasing epsilons".into()));
    }
    let min_eps = *epsilons.last().unwrap();
    if !(min_eps > 0.0) || 1.0 - min_eps > map.grid.r_max + 1e-12 {
        return Err(Error::Domain(format!(
            "map is defined up to r = {}, cannot sample at 1 - {min_eps}",
            map.grid.r_max
        )));
    }
    let n = DEFAULT_TRACE_SAMPLES;
    let mut level_angles: Vec<Vec<f64>> = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let r = 1.0 - eps;
        let level: Vec<Complex64> = (0..n)
            .map(|k| {
                let z = Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64);
                let w = map.interpolate(z);
                if w.norm() == 0.0 {
                    w
                } else {
                    w / w.norm()
                }
            })
            .collect();
        if level.iter().any(|v| v.norm() == 0.0) {
            return Err(Error::Degenerate("map vanishes on a sampling circle".into()));
        }
        level_angles.push(unwrapped_args(&level));
    }
    // Quasiconformal maps approach their boundary values only linearly in
    // eps; extrapolate the angle of each consecutive level pair to eps = 0
    // and require the extrapolants to form a Cauchy sequence. Genuine
    // non-extension (an angular offset divergent in eps, as for the spiral
    // map) survives extrapolation and still trips the gate.
    let extrapolated: Vec<Vec<f64>> = level_angles
        .windows(2)
        .zip(epsilons.windows(2))
        .map(|(pair, eps)| {
            let factor = eps[1] / (eps[0] - eps[1]);
            pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(&coarse, &fine)| fine + (fine - coarse) * factor)
                .collect()
        })
        .collect();
    let gate: &[Vec<f64>] = if extrapolated.len() >= 2 { &extrapolated } else { &level_angles };
    let mut diffs = Vec::new();
    for pair in gate.windows(2) {
        let sup = pair[0]
            .iter()
            .zip(&pair[1])
            .map(|(&a, &b)| (Complex64::from_polar(1.0, a) - Complex64::from_polar(1.0, b)).norm())
            .fold(0.0f64, f64::max);
        diffs.push(sup);
    }
    if diffs.iter().any(|&d| d >= 1e-3) {
        return Err(Error::NoBoundaryExtension(format!(
            "angular samples do not converge; sup differences per level: {diffs:?}"
        )));
    }
    let last = gate.last().expect("at least one gate level");
    BoundaryTrace::new(last.iter().map(|&a| Complex64::from_polar(1.0, a)).collect())
}

/// The quasisymmetric function: the chord ratio
/// `|h(xi e^{it}) - h(xi)| / |h(xi) - h(xi e^{-it})|`.
pub fn lambda_qs(trace: &BoundaryTrace, xi_angle: f64, t: f64) -> Result<f64> {
    if !(0.0 < t && t < PI) {
        return Err(Error::Domain(format!("quasisymmetry scale t = {t} outside (0, pi)")));
    }
    if !trace.monotone {
        return Err(Error::Degenerate("quasisymmetry needs a monotone trace".into()));
    }
    let h0 = trace.eval(xi_angle);
    let num = (trace.eval(xi_angle + t) - h0).norm();
    let den = (h0 - trace.eval(xi_angle - t)).norm();
    if den < 1e-14 {
        return Err(Error::Degenerate(format!(
            "quasisymmetry denominator degenerate at (xi_angle, t) = ({xi_angle}, {t})"
        )));
    }
    Ok(num / den)
}

/// A quasisymmetry bound value; the theorem lets the bound blow up as the
/// scale shrinks, so infinity is an honest answer, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaBound {
    Finite(f64),
    Infinite,
}

impl LambdaBound {
    pub fn finite(self) -> Option<f64> {
        match self {
            LambdaBound::Finite(v) => Some(v),
            LambdaBound::Infinite => None,
        }
    }

    /// True when `1/bound <= ratio <= bound` (always true for the infinite
    /// bound).
    pub fn admits(self, ratio: f64) -> bool {
        match self {
            LambdaBound::Infinite => ratio > 0.0,
            LambdaBound::Finite(b) => ratio <= b && ratio >= 1.0 / b,
        }
    }
}

/// The explicit quasisymmetry bound determined by the growth function: with
/// `s = |e^{it/2} - 1| = 2 sin(t/4)`, `S = |e^{3it/2} - 1| = 2 sin(3t/4)`
/// and `I = int_s^S dr/(r rho*(r))`, the bound is the reciprocal of the
/// capacity-function preimage of `2/I`. Values of `2/I` outside the
/// invertible range mean the bound degenerates to infinity at this scale.
///
/// The scale is restricted to `t in (0, pi/2]` so that `s < S < 2` and the
/// boundary quadrilaterals behind the bound stay nondegenerate.
pub fn lambda_bound(rho: &GrowthFunction, t: f64) -> Result<LambdaBound> {
    if !(0.0 < t && t <= PI / 2.0) {
        return Err(Error::Domain(format!("bound scale t = {t} outside (0, pi/2]")));
    }
    let s = 2.0 * (t / 4.0).sin();
    let big_s = 2.0 * (3.0 * t / 4.0).sin();
    let integral = boundary_divergence_integral(rho, s, big_s)?;
    if !(integral > 0.0) {
        return Err(Error::Degenerate(format!("boundary integral {integral} not positive")));
    }
    match tau_inverse(2.0 / integral) {
        Ok(sigma) => {
            let lam = 1.0 / sigma;
            // Either chord can be the longer one; report the bound that
            // dominates both ratios.
            Ok(LambdaBound::Finite(lam.max(1.0 / lam)))
        }
        Err(Error::Range(_)) => Ok(LambdaBound::Infinite),
        Err(e) => Err(e),
    }
}

/// One verified sample of the two-sided quasisymmetry inequality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QsSample {
    pub xi_angle: f64,
    pub t: f64,
    /// Measured chord ratio of the inverse trace.
    pub ratio: f64,
    pub bound: LambdaBound,
    /// Distance from the ratio to the nearer end of `[1/bound, bound]`
    /// (infinite bound reports the distance to 0).
    pub margin: f64,
}

/// Verification report for a sample set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QsReport {
    pub samples: Vec<QsSample>,
    /// Smallest margin across samples with a finite bound.
    pub worst_margin: f64,
    pub infinite_bounds: usize,
}

/// Check `1/lambda(t) <= lambda_{h^{-1}}(xi, t) <= lambda(t)` for the trace
/// `h` of the map, across the `(xi_angle, t)` samples. A violated sample is
/// an error carrying the offending pair and both values.
pub fn verify_qs_theorem(
    map: &DiskGridMap,
    rho: &GrowthFunction,
    epsilons: &[f64],
    samples: &[(f64, f64)],
) -> Result<QsReport> {
    let trace = boundary_trace(map, epsilons)?;
    let inv = trace.inverse()?;
    let mut out = Vec::with_capacity(samples.len());
    let mut worst = f64::INFINITY;
    let mut infinite = 0usize;
    for &(xi_angle, t) in samples {
        let ratio = lambda_qs(&inv, xi_angle, t)?;
        let bound = lambda_bound(rho, t)?;
        if !bound.admits(ratio) {
            let b = bound.finite().unwrap_or(f64::INFINITY);
            return Err(Error::Range(format!(
                "quasisymmetry bound violated at (xi_angle, t) = ({xi_angle}, {t}): \
                 ratio {ratio}, bound interval [{:.6e}, {b:.6e}]",
                1.0 / b
            )));
        }
        let margin = match bound {
            LambdaBound::Infinite => {
                infinite += 1;
                ratio
            }
            LambdaBound::Finite(b) => {
                let m = (b - ratio).min(ratio - 1.0 / b);
                worst = worst.min(m);
                m
            }
        };
        out.push(QsSample { xi_angle, t, ratio, bound, margin });
    }
    Ok(QsReport { samples: out, worst_margin: worst, infinite_bounds: infinite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PolarGrid;
    use crate::mapcore::{radial_eval, spiral_eval, RadialMapSpec};

    fn near_rim_grid() -> PolarGrid {
        PolarGrid::new(192, 384, 1.0 - 1e-3).unwrap()
    }

    #[test]
    fn identity_map_identity_trace() {
        let map = DiskGridMap::identity(near_rim_grid());
        let trace = boundary_trace(&map, &[4e-3, 2e-3, 1e-3]).unwrap();
        assert!(trace.monotone);
        let mut sup: f64 = 0.0;
        for (a, v) in trace.angles.iter().zip(&trace.values) {
            sup = sup.max((v - Complex64::from_polar(1.0, *a)).norm());
        }
        // Bilinear grid interpolation leaves O(dtheta^2) ripples.
        assert!(sup < 1e-6, "identity trace deviation {sup}");
    }

    #[test]
    fn radial_map_has_identity_trace() {
        // f_a moves only the radial part, so its projected trace is the
        // identity even though the map degenerates at the rim.
        let spec = RadialMapSpec::new(1.5).unwrap();
        let map = DiskGridMap::sample(near_rim_grid(), "radial", |z| radial_eval(spec, z));
        let trace = boundary_trace(&map, &[4e-3, 2e-3, 1e-3]).unwrap();
        let ident = BoundaryTrace::identity(trace.values.len());
        let sup = trace
            .values
            .iter()
            .zip(&ident.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(sup < 1e-3, "radial trace deviation {sup}");
    }

    #[test]
    fn spiral_map_has_no_extension() {
        // The angular offset log(1/(1-r)) keeps turning as r -> 1.
        let grid = PolarGrid::new(512, 256, 1.0 - 1e-4).unwrap();
        let map = DiskGridMap::sample(grid, "spiral", |z| spiral_eval(z).unwrap());
        let err = boundary_trace(&map, &[1e-2, 1e-3, 1e-4]).unwrap_err();
        match err {
            Error::NoBoundaryExtension(msg) => {
                assert!(msg.contains("sup differences"), "unexpected message {msg}")
            }
            other => panic!("expected extension failure, got {other:?}"),
        }
    }

    #[test]
    fn lambda_identity_is_one() {
        let trace = BoundaryTrace::identity(1024);
        for &(xi, t) in &[(0.0, 0.5), (1.2, 0.1), (3.0, 2.0)] {
            let l = lambda_qs(&trace, xi, t).unwrap();
            // Chord interpolation between samples costs O(dtheta^2).
            assert!((l - 1.0).abs() < 1e-6, "identity ratio {l}");
        }
    }

    #[test]
    fn lambda_matches_mobius_chord_ratio() {
        // Directly evaluated chord ratio of a disk automorphism as oracle.
        let h = |theta: f64| {
            let z = Complex64::from_polar(1.0, theta);
            (z - 0.3) / (1.0 - 0.3 * z)
        };
        let trace = BoundaryTrace::from_fn(DEFAULT_TRACE_SAMPLES, h).unwrap();
        let (xi, t) = (0.0, PI / 4.0);
        let measured = lambda_qs(&trace, xi, t).unwrap();
        let exact = (h(xi + t) - h(xi)).norm() / (h(xi) - h(xi - t)).norm();
        assert!(
            (measured - exact).abs() < 1e-5,
            "measured {measured} vs exact {exact}"
        );
    }

    #[test]
    fn lambda_reflection_reciprocal() {
        let h = |theta: f64| {
            let z = Complex64::from_polar(1.0, theta);
            (z - Complex64::new(0.2, 0.1)) / (1.0 - Complex64::new(0.2, -0.1) * z)
        };
        let trace = BoundaryTrace::from_fn(DEFAULT_TRACE_SAMPLES, h).unwrap();
        let refl = trace.reflected();
        let (xi, t) = (0.7, 0.4);
        let a = lambda_qs(&trace, xi, t).unwrap();
        let b = lambda_qs(&refl, -xi, t).unwrap();
        assert!((a * b - 1.0).abs() < 1e-4, "product {}", a * b);
    }

    #[test]
    fn trace_inverse_roundtrip() {
        let h = |theta: f64| {
            let z = Complex64::from_polar(1.0, theta);
            (z - 0.3) / (1.0 - 0.3 * z)
        };
        let trace = BoundaryTrace::from_fn(DEFAULT_TRACE_SAMPLES, h).unwrap();
        let inv = trace.inverse().unwrap();
        // h^{-1}(h(e^{i theta})) = e^{i theta} on a sample of angles.
        for k in 0..32 {
            let theta = 2.0 * PI * k as f64 / 32.0;
            let w = h(theta);
            let back = inv.eval(w.arg());
            let d = (back - Complex64::from_polar(1.0, theta)).norm();
            assert!(d < 1e-5, "roundtrip error {d} at theta {theta}");
        }
    }

    #[test]
    fn mobius_trace_from_map_matches_closed_form() {
        // Trace extraction through the grid agrees with the boundary values
        // of a disk automorphism.
        let m = |z: Complex64| (z - 0.3) / (1.0 - 0.3 * z);
        let map = DiskGridMap::sample(near_rim_grid(), "mobius", m);
        let trace = boundary_trace(&map, &[4e-3, 2e-3, 1e-3]).unwrap();
        let mut sup: f64 = 0.0;
        for (a, v) in trace.angles.iter().zip(&trace.values) {
            let exact = m(Complex64::from_polar(1.0, *a));
            sup = sup.max((v - exact / exact.norm()).norm());
        }
        assert!(sup < 3e-3, "trace deviation {sup}");
    }

    #[test]
    fn bound_constant_rho_small_scale() {
        // Constant rho: I is close to log(S/s)/pi and the bound is a finite
        // number at least 1.
        let t = 0.2;
        let s = 2.0 * (t / 4.0f64).sin();
        let big_s = 2.0 * (3.0 * t / 4.0f64).sin();
        let i = boundary_divergence_integral(&GrowthFunction::Constant, s, big_s).unwrap();
        // Arc-angle oracle: 2 arccos(r/2) = pi - r + O(r^3), so the integral
        // is log(S/s)/pi plus the first-order correction (S - s)/pi^2.
        let arc = (big_s / s).ln() / PI + (big_s - s) / (PI * PI);
        assert!((i - arc).abs() < 0.01 * arc, "integral {i} vs arc oracle {arc}");
        match lambda_bound(&GrowthFunction::Constant, t).unwrap() {
            LambdaBound::Finite(b) => assert!(b >= 1.0, "bound {b} below 1"),
            LambdaBound::Infinite => panic!("expected a finite bound at t = {t}"),
        }
    }

    #[test]
    fn bound_monotone_against_integral() {
        // Both endpoints of the boundary integral grow with t and so does
        // the integral itself, which pushes the capacity preimage up and the
        // bound down: lambda(t) is nonincreasing for constant rho, moving
        // opposite to I(t). The two monotonicities are checked together.
        let mut prev_bound = f64::INFINITY;
        let mut prev_i = 0.0;
        for k in 1..=16 {
            let t = PI / 2.0 * k as f64 / 16.0;
            let s = 2.0 * (t / 4.0f64).sin();
            let big_s = 2.0 * (3.0 * t / 4.0f64).sin();
            let i = boundary_divergence_integral(&GrowthFunction::Constant, s, big_s).unwrap();
            assert!(i > prev_i, "integral not increasing at t = {t}");
            prev_i = i;
            let b = lambda_bound(&GrowthFunction::Constant, t)
                .unwrap()
                .finite()
                .expect("finite bound for constant rho");
            assert!(b >= 1.0);
            assert!(b <= prev_bound + 1e-9, "bound increased at t = {t}: {b} > {prev_bound}");
            prev_bound = b;
        }
    }

    #[test]
    fn faster_growth_weakens_bound() {
        for k in 1..=8 {
            let t = PI / 2.0 * k as f64 / 8.0;
            let slow = lambda_bound(&GrowthFunction::Constant, t).unwrap();
            let fast = lambda_bound(&GrowthFunction::power_law(0.5), t).unwrap();
            match (slow, fast) {
                (LambdaBound::Finite(a), LambdaBound::Finite(b)) => {
                    assert!(b >= a - 1e-9, "t = {t}: power-law bound {b} below constant {a}")
                }
                (_, LambdaBound::Infinite) => {}
                (LambdaBound::Infinite, LambdaBound::Finite(_)) => {
                    panic!("constant-rho bound infinite where power-law is finite (t = {t})")
                }
            }
        }
    }

    #[test]
    fn bound_domain_checks() {
        assert!(lambda_bound(&GrowthFunction::Constant, 0.0).is_err());
        assert!(lambda_bound(&GrowthFunction::Constant, 2.0).is_err());
    }

    #[test]
    fn verify_identity_and_radial() {
        let samples: Vec<(f64, f64)> = (0..5)
            .flat_map(|i| {
                (1..=4).map(move |j| {
                    (2.0 * PI * i as f64 / 5.0, PI / 2.0 * j as f64 / 4.0)
                })
            })
            .collect();
        let ident = DiskGridMap::identity(near_rim_grid());
        let rep =
            verify_qs_theorem(&ident, &GrowthFunction::Constant, &[4e-3, 2e-3, 1e-3], &samples)
                .unwrap();
        assert!(rep.worst_margin >= 0.0);
        for s in &rep.samples {
            assert!((s.ratio - 1.0).abs() < 1e-6);
        }

        let spec = RadialMapSpec::new(1.5).unwrap();
        let map = DiskGridMap::sample(near_rim_grid(), "radial", |z| radial_eval(spec, z));
        let rep = verify_qs_theorem(
            &map,
            &GrowthFunction::radial_family(1.5),
            &[4e-3, 2e-3, 1e-3],
            &samples,
        )
        .unwrap();
        for s in &rep.samples {
            assert!((s.ratio - 1.0).abs() < 1e-2, "radial ratio {}", s.ratio);
        }
    }

    #[test]
    fn trace_csv_format() {
        let trace = BoundaryTrace::identity(16);
        let csv = trace.to_csv();
        assert!(csv.starts_with("theta,re,im\n"));
        assert_eq!(csv.lines().count(), 17);
    }
}
