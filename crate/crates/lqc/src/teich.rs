//! Teichmüller-theoretic layer: holomorphic densities, boundary-trace
//! equivalence classes, boundary-fixing twist deformations, the main-
//! inequality ratio check, and desk-scale extremality experiments.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beltrami::disk::standard_normalization;
use crate::boundary::{boundary_trace, grid_epsilons as trace_epsilons, BoundaryTrace};
use crate::error::{Error, Result};
use crate::grid::DiskGridMap;
use crate::growth::GrowthFunction;
use crate::mapcore::{dilatation_field, k_rho_inverse_transfer};
use crate::mobius::Mobius;

/// A holomorphic function `phi(z) = sum c_k z^k` used as the direction
/// density of a Teichmüller-type dilatation and as an integration weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloDensity {
    /// Coefficient of `z^k` at index `k`.
    pub coeffs: Vec<Complex64>,
    /// Points per direction of the tensor quadrature behind [`Self::mass`].
    #[serde(default = "default_quadrature_order")]
    pub quadrature_order: usize,
}

fn default_quadrature_order() -> usize {
    64
}

impl HoloDensity {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("density has a non-finite coefficient".into()));
        }
        if coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::Degenerate("density is identically zero".into()));
        }
        Ok(HoloDensity { coeffs, quadrature_order: default_quadrature_order() })
    }

    pub fn with_order(coeffs: Vec<Complex64>, quadrature_order: usize) -> Result<Self> {
        if quadrature_order < 4 {
            return Err(Error::Domain("quadrature order must be at least 4".into()));
        }
        let mut d = Self::new(coeffs)?;
        d.quadrature_order = quadrature_order;
        Ok(d)
    }

    pub fn constant_one() -> Self {
        HoloDensity {
            coeffs: vec![Complex64::new(1.0, 0.0)],
            quadrature_order: default_quadrature_order(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        // Horner evaluation.
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// `int_disk |phi| dA` by a midpoint tensor rule in polar coordinates.
    pub fn mass(&self) -> Result<f64> {
        let n = self.quadrature_order;
        let dr = 1.0 / n as f64;
        let dth = 2.0 * PI / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * dr;
            for j in 0..n {
                let z = Complex64::from_polar(r, (j as f64 + 0.5) * dth);
                total += self.eval(z).norm() * r;
            }
        }
        total *= dr * dth;
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::Degenerate(format!("density mass {total} is not finite positive")));
        }
        Ok(total)
    }
}

/// A boundary-fixing angular shear `re^{i theta} -> re^{i(theta + beta(r))}`
/// whose profile `beta` is a cubic bump supported on `[r1, r2]`, vanishing to
/// first order at both endpoints.
///
/// The profile is normalized so that `sup_r |r beta'(r)| = |amplitude|`; the
/// shear magnitude, not the rotation angle, is what controls the dilatation
/// of the twist, so the invariant `sup |r beta'| < 1` becomes the simple
/// constructor bound `|amplitude| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFixingTwist {
    pub r1: f64,
    pub r2: f64,
    pub amplitude: f64,
}

/// Unit bump `16 s^2 (1-s)^2` on `[0,1]` and its derivative.
fn bump(s: f64) -> f64 {
    let t = s * (1.0 - s);
    16.0 * t * t
}

fn bump_prime(s: f64) -> f64 {
    32.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

impl BoundaryFixingTwist {
    pub fn new(r1: f64, r2: f64, amplitude: f64) -> Result<Self> {
        let t = BoundaryFixingTwist { r1, r2, amplitude };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r1 && self.r1 < self.r2 && self.r2 < 1.0) {
            return Err(Error::Domain(format!(
                "twist support [{}, {}] must sit inside (0, 1)",
                self.r1, self.r2
            )));
        }
        if !(self.amplitude.is_finite() && self.amplitude.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "twist amplitude {} must satisfy |amplitude| < 1 (shear bound)",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// `sup_r |r * d/dr bump((r - r1)/(r2 - r1))` over the support, the
    /// normalization constant dividing the raw bump.
    fn shear_scale(&self) -> f64 {
        let width = self.r2 - self.r1;
        let mut sup: f64 = 0.0;
        for k in 0..=2000 {
            let s = k as f64 / 2000.0;
            let r = self.r1 + s * width;
            sup = sup.max((r * bump_prime(s) / width).abs());
        }
        sup
    }

    /// Rotation angle at radius `r`; zero outside the support.
    pub fn beta(&self, r: f64) -> f64 {
        if r <= self.r1 || r >= self.r2 {
            return 0.0;
        }
        let s = (r - self.r1) / (self.r2 - self.r1);
        self.amplitude * bump(s) / self.shear_scale()
    }

    /// `d beta / dr`; zero outside the support.
    pub fn beta_prime(&self, r: f64) -> f64 {
        if r <= self.r1 || r >= self.r2 {
            return 0.0;
        }
        let width = self.r2 - self.r1;
        let s = (r - self.r1) / width;
        self.amplitude * bump_prime(s) / (width * self.shear_scale())
    }

    /// The induced self-map of the disk (identity on the boundary circle).
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        let b = self.beta(r);
        if b == 0.0 {
            z
        } else {
            z * Complex64::from_polar(1.0, b)
        }
    }
}

/// Three unit-amplitude twists with disjoint supports, the default search
/// directions for extremality experiments.
pub fn default_twist_basis() -> Vec<BoundaryFixingTwist> {
    vec![
        BoundaryFixingTwist { r1: 0.15, r2: 0.40, amplitude: 0.5 },
        BoundaryFixingTwist { r1: 0.40, r2: 0.65, amplitude: 0.5 },
        BoundaryFixingTwist { r1: 0.65, r2: 0.90, amplitude: 0.5 },
    ]
}

/// A twist basis together with per-coefficient bounds, the JSON surface of
/// the extremal search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistSearchSpec {
    pub basis: Vec<BoundaryFixingTwist>,
    /// `[lo, hi]` per basis element.
    pub c_box: Vec<[f64; 2]>,
}

impl TwistSearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.basis.is_empty() || self.basis.len() != self.c_box.len() {
            return Err(Error::Domain(format!(
                "need matching nonempty basis and box, got {} twists, {} bounds",
                self.basis.len(),
                self.c_box.len()
            )));
        }
        for t in &self.basis {
            t.validate()?;
        }
        for &[lo, hi] in &self.c_box {
            if !(lo < hi) {
                return Err(Error::Domain(format!("empty coefficient range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Point image under the combined twist `sum_k c_k beta_k`.
fn combined_twist_point(basis: &[BoundaryFixingTwist], c: &[f64], z: Complex64) -> Complex64 {
    let r = z.norm();
    let mut b = 0.0;
    for (t, &ck) in basis.iter().zip(c) {
        b += ck * t.beta(r);
    }
    if b == 0.0 {
        z
    } else {
        z * Complex64::from_polar(1.0, b)
    }
}

/// `sup_r |r * sum_k c_k beta_k'(r)|`: the combined twist is a reasonable
/// search candidate only while this stays below 1.
fn combined_shear_sup(basis: &[BoundaryFixingTwist], c: &[f64]) -> f64 {
    let mut sup: f64 = 0.0;
    for k in 0..=2000 {
        let r = k as f64 / 2000.0;
        let mut bp = 0.0;
        for (t, &ck) in basis.iter().zip(c) {
            bp += ck * t.beta_prime(r);
        }
        sup = sup.max((r * bp).abs());
    }
    sup
}

/// `f0` pre-composed with the combined twist, resampled on `f0`'s grid.
pub fn compose_with_twists(
    f0: &DiskGridMap,
    basis: &[BoundaryFixingTwist],
    c: &[f64],
) -> DiskGridMap {
    let g = f0.grid;
    let mut values = Vec::with_capacity(g.len());
    for i in 0..g.n_r {
        for j in 0..g.n_theta {
            let w = combined_twist_point(basis, c, g.node(i, j));
            values.push(f0.interpolate(w));
        }
    }
    DiskGridMap { grid: g, values, source: format!("{}|twisted", f0.source) }
}


/// Post-compose with the unique Möbius disk automorphism sending the trace
/// values at `1, -1, i` back to `1, -1, i`. The dilatation field is
/// unchanged (conformal post-composition).
pub fn normalize_map(map: &DiskGridMap) -> Result<DiskGridMap> {
    let trace = boundary_trace(map, &trace_epsilons(map))?;
    let hit = [trace.eval(0.0), trace.eval(PI), trace.eval(0.5 * PI)];
    let m = Mobius::three_point(hit, standard_normalization())?;
    let values = map.values.iter().map(|&v| m.apply(v)).collect();
    Ok(DiskGridMap { grid: map.grid, values, source: format!("{}|normalized", map.source) })
}

/// Sup distance between the boundary traces of two maps. The maps are
/// compared as given — equivalence presumes the normalization of
/// [`normalize_map`] has already been applied where needed.
pub fn trace_distance(f: &DiskGridMap, g: &DiskGridMap) -> Result<f64> {
    let tf = boundary_trace(f, &trace_epsilons(f))?;
    let tg = boundary_trace(g, &trace_epsilons(g))?;
    let mut sup: f64 = 0.0;
    for (&th, &v) in tf.angles.iter().zip(&tf.values) {
        sup = sup.max((v - tg.eval(th)).norm());
    }
    Ok(sup)
}

/// Whether `f` and `g` induce the same boundary homeomorphism within `tol`.
pub fn equivalent(f: &DiskGridMap, g: &DiskGridMap, tol: f64) -> Result<bool> {
    Ok(trace_distance(f, g)? <= tol)
}

/// An equivalence class of disk maps, keyed by the shared boundary trace of
/// its normalized representatives.
#[derive(Debug, Clone)]
pub struct TeichClass {
    pub trace: BoundaryTrace,
    pub representatives: Vec<DiskGridMap>,
}

impl TeichClass {
    /// Sup tolerance for a representative's trace against the class trace.
    pub const TRACE_TOL: f64 = 1e-3;

    pub fn new(trace: BoundaryTrace, representatives: Vec<DiskGridMap>) -> Result<Self> {
        if representatives.is_empty() {
            return Err(Error::Domain("class needs at least one representative".into()));
        }
        for (k, rep) in representatives.iter().enumerate() {
            let tr = boundary_trace(rep, &trace_epsilons(rep))?;
            let mut sup: f64 = 0.0;
            for (&th, &v) in tr.angles.iter().zip(&tr.values) {
                sup = sup.max((v - trace.eval(th)).norm());
            }
            if sup > Self::TRACE_TOL {
                return Err(Error::Domain(format!(
                    "representative {k} deviates from the class trace by {sup:.3e}"
                )));
            }
        }
        Ok(TeichClass { trace, representatives })
    }

    /// Normalize `map` and build the singleton class it generates.
    pub fn from_map(map: &DiskGridMap) -> Result<Self> {
        let normalized = normalize_map(map)?;
        let trace = boundary_trace(&normalized, &trace_epsilons(&normalized))?;
        Self::new(trace, vec![normalized])
    }
}

/// Outcome of the main-inequality quadrature.
#[derive(Debug, Clone, Copy)]
pub struct ReichStrebelRatio {
    /// `[int |phi| |1 + mu phi/|phi||^2 / (1 - |mu|^2)] / [int |phi|]`.
    pub ratio: f64,
    /// Area fraction of cells skipped near zeros of `phi`.
    pub excluded_area_fraction: f64,
    /// Set when the excluded fraction exceeds 1% and the ratio is suspect.
    pub flagged: bool,
}

/// The main-inequality ratio for a boundary-fixing map `g` against the
/// density `phi`; the inequality predicts a value `>= 1`.
///
/// Cells where `|phi| < 1e-9 max|phi|` are excluded (the direction
/// `phi/|phi|` is undefined at zeros); the excluded area is reported and the
/// result flagged when it exceeds 1% of the disk.
pub fn reich_strebel_ratio(g: &DiskGridMap, phi: &HoloDensity) -> Result<ReichStrebelRatio> {
    let trace = boundary_trace(g, &trace_epsilons(g))?;
    let mut dev: f64 = 0.0;
    for (&th, &v) in trace.angles.iter().zip(&trace.values) {
        dev = dev.max((v - Complex64::from_polar(1.0, th)).norm());
    }
    if dev > 1e-3 {
        return Err(Error::Domain(format!(
            "map must fix the boundary; trace deviates from identity by {dev:.3e}"
        )));
    }
    let (mu, _) = dilatation_field(g)?;
    let grid = g.grid;
    let mut max_phi: f64 = 0.0;
    for i in 0..grid.n_r {
        for j in 0..grid.n_theta {
            max_phi = max_phi.max(phi.eval(grid.node(i, j)).norm());
        }
    }
    let cut = 1e-9 * max_phi;
    let (mut num, mut den) = (0.0, 0.0);
    let (mut area, mut excluded) = (0.0, 0.0);
    let cell = grid.dr() * grid.dtheta();
    for i in 1..grid.n_r {
        let w = grid.radius(i) * cell;
        for j in 0..grid.n_theta {
            let p = phi.eval(grid.node(i, j));
            let ap = p.norm();
            area += w;
            if ap < cut {
                excluded += w;
                continue;
            }
            let m = mu.at(i, j);
            let t = Complex64::new(1.0, 0.0) + m * (p / ap);
            num += ap * t.norm_sqr() / (1.0 - m.norm_sqr()) * w;
            den += ap * w;
        }
    }
    let frac = excluded / area;
    Ok(ReichStrebelRatio { ratio: num / den, excluded_area_fraction: frac, flagged: frac > 0.01 })
}

/// One objective evaluation inside [`extremal_search`].
#[derive(Debug, Clone)]
pub struct SearchStep {
    pub step: usize,
    pub coefficients: Vec<f64>,
    pub objective: f64,
}

/// Minimizer, minimum, and full evaluation log of an extremal search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub coefficients: Vec<f64>,
    pub k_min: f64,
    pub log: Vec<SearchStep>,
}

impl SearchResult {
    /// CSV with header `step,c1,...,objective`.
    pub fn log_to_csv(&self) -> String {
        let dim = self.coefficients.len();
        let mut out = String::from("step");
        for k in 1..=dim {
            let _ = write!(out, ",c{k}");
        }
        out.push_str(",objective\n");
        for s in &self.log {
            let _ = write!(out, "{}", s.step);
            for c in &s.coefficients {
                let _ = write!(out, ",{c:.17e}");
            }
            let _ = writeln!(out, ",{:.17e}", s.objective);
        }
        out
    }
}

/// Knobs of the coordinate-descent search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Full passes over the coordinates.
    pub sweeps: usize,
    /// Absolute line-search tolerance in coefficient units.
    pub line_tol: f64,
    /// Radius cap for the distortion supremum; defaults to the next-to-last
    /// grid ring (the rim ring uses one-sided differences).
    pub domain_cut: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { sweeps: 4, line_tol: 5e-3, domain_cut: None }
    }
}

/// Golden-section minimization of `f` on `[a, b]` to width `tol`.
fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INV * (b - a);
    let mut x2 = a + INV * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

struct Objective<'a> {
    f0: &'a DiskGridMap,
    basis: &'a [BoundaryFixingTwist],
    rho: &'a GrowthFunction,
    cut: f64,
    log: Vec<SearchStep>,
}

impl Objective<'_> {
    /// `K^rho` of the inverse of `f0` twisted by `c`, or `+inf` when the
    /// candidate folds or leaves `QC_rho` on the grid.
    fn eval(&mut self, c: &[f64]) -> f64 {
        let value = self.eval_inner(c);
        self.log.push(SearchStep {
            step: self.log.len(),
            coefficients: c.to_vec(),
            objective: value,
        });
        value
    }

    fn eval_inner(&self, c: &[f64]) -> f64 {
        if combined_shear_sup(self.basis, c) >= 1.0 {
            return f64::INFINITY;
        }
        let candidate = compose_with_twists(self.f0, self.basis, c);
        let (mu, report) = match dilatation_field(&candidate) {
            Ok(pair) => pair,
            Err(_) => return f64::INFINITY,
        };
        // A sprinkling of degenerate nodes is rim finite-difference noise;
        // more than 0.5% means the candidate genuinely folds.
        if report.degenerate_nodes.len() * 200 > candidate.grid.len() {
            return f64::INFINITY;
        }
        let k = k_rho_inverse_transfer(&mu, &candidate, self.rho, self.cut);
        if k.value.is_finite() && k.value > 0.0 { k.value } else { f64::INFINITY }
    }
}

/// Minimize `c -> K^rho((f0 compose twist(c))^-1)` over the coefficient box
/// by coordinate descent with golden-section line searches. Every candidate
/// fixes the boundary, so the whole search stays inside the class of `f0`.
pub fn extremal_search(
    f0: &DiskGridMap,
    rho: &GrowthFunction,
    basis: &[BoundaryFixingTwist],
    c_box: &[(f64, f64)],
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    if basis.is_empty() || basis.len() != c_box.len() {
        return Err(Error::Domain(format!(
            "need matching nonempty basis and box, got {} twists, {} bounds",
            basis.len(),
            c_box.len()
        )));
    }
    for t in basis {
        t.validate()?;
    }
    for &(lo, hi) in c_box {
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty coefficient range [{lo}, {hi}]")));
        }
    }
    let g = f0.grid;
    let cut = cfg.domain_cut.unwrap_or_else(|| g.radius(g.n_r - 2));
    let (mu0, _) = dilatation_field(f0)?;
    let k0 = k_rho_inverse_transfer(&mu0, f0, rho, cut);
    if !(k0.value.is_finite() && k0.value > 0.0) {
        return Err(Error::Domain(format!(
            "inverse of the base map is not in QC_rho on the grid (K = {})",
            k0.value
        )));
    }
    let mut obj = Objective { f0, basis, rho, cut, log: Vec::new() };
    let mut c: Vec<f64> = c_box.iter().map(|&(lo, hi)| 0f64.clamp(lo, hi)).collect();
    let mut best = obj.eval(&c);
    for _ in 0..cfg.sweeps {
        let mut moved: f64 = 0.0;
        for k in 0..c.len() {
            let (lo, hi) = c_box[k];
            let mut probe = c.clone();
            let (x, fx) = golden_min(
                |x| {
                    probe[k] = x;
                    obj.eval(&probe)
                },
                lo,
                hi,
                cfg.line_tol,
            );
            if fx < best {
                moved = moved.max((c[k] - x).abs());
                c[k] = x;
                best = fx;
            }
        }
        if moved < cfg.line_tol {
            break;
        }
    }
    Ok(SearchResult { coefficients: c, k_min: best, log: obj.log })
}

/// `|F([f]) - F([g])|` where `F` is the extremal-search minimum of `K^rho`
/// of the inverse over the twist family. A pseudo-metric: symmetric, zero on
/// identical classes, triangle inequality by pullback from the real line.
pub fn pseudo_metric(
    class_f: &TeichClass,
    class_g: &TeichClass,
    rho: &GrowthFunction,
    basis: &[BoundaryFixingTwist],
    c_box: &[(f64, f64)],
    cfg: &SearchConfig,
) -> Result<f64> {
    let ff = extremal_search(&class_f.representatives[0], rho, basis, c_box, cfg)?;
    let fg = extremal_search(&class_g.representatives[0], rho, basis, c_box, cfg)?;
    Ok((ff.k_min - fg.k_min).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::{solve_disk, SolverConfig};
    use crate::grid::{BeltramiField, PolarGrid};
    use crate::mapcore::{radial_eval, RadialMapSpec};

    fn test_grid() -> PolarGrid {
        // Matches the disk-solver test grid; the solver's circle-invariance
        // gate needs at least this radial resolution.
        PolarGrid::new(128, 256, 1.0 - 1.0 / 256.0).unwrap()
    }

    /// Solver output for the constant dilatation `mu = 1/3` (the
    /// Teichmüller-type field of a constant density with K0 = 2).
    fn k0_two_map(grid: PolarGrid) -> DiskGridMap {
        let mu = BeltramiField::sample(grid, |_| Complex64::new(1.0 / 3.0, 0.0)).unwrap();
        let (map, report) =
            solve_disk(&mu, standard_normalization(), &SolverConfig::default()).unwrap();
        assert!(report.converged);
        map
    }

    #[test]
    fn density_mass_of_monomials() {
        // int |1| = pi, int |z| = 2 pi / 3; the midpoint rule is exact for
        // radial polynomials of low degree up to O(n^-2).
        let one = HoloDensity::constant_one();
        assert!((one.mass().unwrap() - std::f64::consts::PI).abs() < 1e-10);
        let z = HoloDensity::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
        assert!((z.mass().unwrap() - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-3);
    }

    #[test]
    fn density_rejects_zero_and_nonfinite() {
        assert!(HoloDensity::new(vec![Complex64::new(0.0, 0.0)]).is_err());
        assert!(HoloDensity::new(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn twist_bounds_and_boundary_identity() {
        // Valid twist: identity outside its support, strict shear bound.
        let t = BoundaryFixingTwist::new(0.3, 0.7, 0.3).unwrap();
        for r in [0.05, 0.25, 0.75, 0.95] {
            let z = Complex64::from_polar(r, 1.1);
            assert_eq!(t.apply(z), z);
        }
        let z = Complex64::from_polar(0.5, 1.1);
        assert!((t.apply(z) - z).norm() > 1e-3);
        assert!((t.apply(z).norm() - 0.5).abs() < 1e-14);
        // The normalized profile realizes shear sup exactly |amplitude|.
        let sup = combined_shear_sup(std::slice::from_ref(&t), &[1.0]);
        assert!((sup - 0.3).abs() < 1e-3, "shear sup {sup}");
        // Amplitude at the shear bound is rejected, as are bad supports.
        assert!(BoundaryFixingTwist::new(0.3, 0.7, 1.0).is_err());
        assert!(BoundaryFixingTwist::new(0.0, 0.7, 0.3).is_err());
        assert!(BoundaryFixingTwist::new(0.7, 0.3, 0.3).is_err());
    }

    #[test]
    fn normalize_rotation_to_identity() {
        let grid = test_grid();
        let rotated = DiskGridMap::sample(grid, "rot", |z| z * Complex64::new(0.0, 1.0));
        let back = normalize_map(&rotated).unwrap();
        let id = DiskGridMap::identity(grid);
        assert!(back.sup_distance(&id, 1.0) < 1e-10);
    }

    #[test]
    fn normalize_fixes_normalized_map() {
        let grid = test_grid();
        let id = DiskGridMap::identity(grid);
        let again = normalize_map(&id).unwrap();
        assert!(again.sup_distance(&id, 1.0) < 1e-10);
    }

    #[test]
    fn normalize_preserves_dilatation() {
        // Post-compose a quasiconformal map with a disk automorphism; the
        // normalization (up to trace-interpolation error) undoes it, and the
        // extracted dilatation field matches the original's.
        let grid = test_grid();
        let spec = RadialMapSpec::new(1.3).unwrap();
        let f = DiskGridMap::sample(grid, "radial", |z| radial_eval(spec, z));
        let a = Complex64::new(0.3, 0.0);
        let moved = DiskGridMap {
            grid,
            values: f.values.iter().map(|&w| (w - a) / (Complex64::new(1.0, 0.0) - a * w)).collect(),
            source: "moved".into(),
        };
        let restored = normalize_map(&moved).unwrap();
        let (mu_f, _) = dilatation_field(&f).unwrap();
        let (mu_r, _) = dilatation_field(&restored).unwrap();
        let mut sup: f64 = 0.0;
        // Skip the rim ring: one-sided radial differences there amplify the
        // small trace-interpolation mismatch of the normalizing Möbius.
        for i in 1..grid.n_r - 1 {
            for j in 0..grid.n_theta {
                sup = sup.max((mu_f.at(i, j) - mu_r.at(i, j)).norm());
            }
        }
        assert!(sup < 1e-3, "dilatation changed by {sup}");
    }

    #[test]
    fn radial_map_is_equivalent_to_identity() {
        let grid = test_grid();
        let spec = RadialMapSpec::new(1.5).unwrap();
        let f = DiskGridMap::sample(grid, "radial", |z| radial_eval(spec, z));
        let id = DiskGridMap::identity(grid);
        assert!(equivalent(&f, &id, 1e-3).unwrap());
    }

    #[test]
    fn automorphism_is_not_equivalent_to_identity() {
        let grid = test_grid();
        let a = Complex64::new(0.3, 0.0);
        let m = DiskGridMap::sample(grid, "mobius", |z| {
            (z - a) / (Complex64::new(1.0, 0.0) - a * z)
        });
        let id = DiskGridMap::identity(grid);
        assert!(!equivalent(&m, &id, 1e-3).unwrap());
    }

    #[test]
    fn twist_does_not_change_the_class() {
        let grid = test_grid();
        let spec = RadialMapSpec::new(1.5).unwrap();
        let f = DiskGridMap::sample(grid, "radial", |z| radial_eval(spec, z));
        let t = BoundaryFixingTwist::new(0.3, 0.7, 0.4).unwrap();
        let twisted = compose_with_twists(&f, std::slice::from_ref(&t), &[1.0]);
        assert!(equivalent(&f, &twisted, 1e-3).unwrap());
    }

    #[test]
    fn class_rejects_foreign_representative() {
        let grid = test_grid();
        let id = DiskGridMap::identity(grid);
        let class = TeichClass::from_map(&id).unwrap();
        let a = Complex64::new(0.3, 0.0);
        let m = DiskGridMap::sample(grid, "mobius", |z| {
            (z - a) / (Complex64::new(1.0, 0.0) - a * z)
        });
        assert!(TeichClass::new(class.trace.clone(), vec![m]).is_err());
        // A twisted identity has the same trace and is accepted.
        let t = BoundaryFixingTwist::new(0.3, 0.7, 0.4).unwrap();
        let twisted = DiskGridMap::sample(grid, "twist", |z| t.apply(z));
        assert!(TeichClass::new(class.trace.clone(), vec![twisted]).is_ok());
    }

    #[test]
    fn reich_strebel_identity_is_exactly_one() {
        let grid = test_grid();
        let id = DiskGridMap::identity(grid);
        let r = reich_strebel_ratio(&id, &HoloDensity::constant_one()).unwrap();
        // mu extraction leaves rounding-level noise even for the identity.
        assert!((r.ratio - 1.0).abs() < 1e-14);
        assert_eq!(r.excluded_area_fraction, 0.0);
        assert!(!r.flagged);
    }

    #[test]
    fn reich_strebel_inequality_for_twists() {
        let grid = test_grid();
        let c = |re: f64| Complex64::new(re, 0.0);
        let densities = [
            HoloDensity::constant_one(),
            HoloDensity::new(vec![c(0.0), c(1.0)]).unwrap(),
            HoloDensity::new(vec![c(0.0), c(0.0), c(1.0)]).unwrap(),
            HoloDensity::new(vec![c(1.0), c(1.0)]).unwrap(),
        ];
        let twists = [
            BoundaryFixingTwist::new(0.3, 0.7, 0.3).unwrap(),
            BoundaryFixingTwist::new(0.15, 0.45, 0.5).unwrap(),
            BoundaryFixingTwist::new(0.5, 0.9, 0.2).unwrap(),
        ];
        for t in &twists {
            let g = DiskGridMap::sample(grid, "twist", |z| t.apply(z));
            for phi in &densities {
                let r = reich_strebel_ratio(&g, phi).unwrap();
                assert!(
                    r.ratio >= 1.0 - 2e-3,
                    "ratio {} for twist {t:?}, phi {:?}",
                    r.ratio,
                    phi.coeffs
                );
                assert!(!r.flagged);
            }
        }
    }

    #[test]
    fn reich_strebel_ratio_is_scale_invariant() {
        let grid = test_grid();
        let t = BoundaryFixingTwist::new(0.3, 0.7, 0.3).unwrap();
        let g = DiskGridMap::sample(grid, "twist", |z| t.apply(z));
        let phi = HoloDensity::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.2)]).unwrap();
        let scaled = HoloDensity::new(phi.coeffs.iter().map(|&c| c * 2.7).collect()).unwrap();
        let r1 = reich_strebel_ratio(&g, &phi).unwrap().ratio;
        let r2 = reich_strebel_ratio(&g, &scaled).unwrap().ratio;
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn extremal_search_identity_base() {
        let grid = test_grid();
        let id = DiskGridMap::identity(grid);
        let basis = default_twist_basis();
        let c_box = vec![(-0.6, 0.6); 3];
        let res = extremal_search(
            &id,
            &GrowthFunction::Constant,
            &basis,
            &c_box,
            &SearchConfig::default(),
        )
        .unwrap();
        for c in &res.coefficients {
            assert!(c.abs() < 2e-2, "coefficients {:?}", res.coefficients);
        }
        assert!((res.k_min - 1.0).abs() < 5e-3, "k_min {}", res.k_min);
        // Objective at c = 0 is K^rho of the base inverse: exactly 1 here.
        let at_zero = res.log.iter().find(|s| s.coefficients.iter().all(|&c| c == 0.0)).unwrap();
        assert!((at_zero.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extremal_search_teichmuller_type_base() {
        let grid = test_grid();
        let f0 = k0_two_map(grid);
        let rho = GrowthFunction::Constant;
        let basis = default_twist_basis();
        let c_box = vec![(-0.6, 0.6); 3];
        let cfg = SearchConfig::default();
        let res = extremal_search(&f0, &rho, &basis, &c_box, &cfg).unwrap();
        for c in &res.coefficients {
            assert!(c.abs() < 2.0 * cfg.line_tol, "coefficients {:?}", res.coefficients);
        }
        assert!((res.k_min - 2.0).abs() < 0.1, "k_min {}", res.k_min);
        // Local unique extremality: any single-twist perturbation increases
        // the objective.
        let g = f0.grid;
        let cut = g.radius(g.n_r - 2);
        let mut obj = Objective { f0: &f0, basis: &basis, rho: &rho, cut, log: Vec::new() };
        let base = obj.eval(&[0.0, 0.0, 0.0]);
        for k in 0..3 {
            for amp in [0.05, 0.1, 0.2] {
                for sign in [1.0, -1.0] {
                    let mut c = [0.0; 3];
                    c[k] = sign * amp;
                    let v = obj.eval(&c);
                    assert!(v > base, "twist {k}, c {} gave {v} <= {base}", c[k]);
                }
            }
        }
    }

    #[test]
    fn objective_invariant_under_renormalization() {
        let grid = test_grid();
        let f0 = k0_two_map(grid);
        let rho = GrowthFunction::Constant;
        let g = f0.grid;
        let cut = g.radius(g.n_r - 2);
        let basis = default_twist_basis();
        let mut obj = Objective { f0: &f0, basis: &basis, rho: &rho, cut, log: Vec::new() };
        let base = obj.eval(&[0.0, 0.0, 0.0]);
        // Rotation re-normalization: bitwise the same distortion field.
        let rotated = DiskGridMap {
            grid: g,
            values: f0.values.iter().map(|&v| v * Complex64::new(0.0, 1.0)).collect(),
            source: "rot".into(),
        };
        let mut obj_r = Objective { f0: &rotated, basis: &basis, rho: &rho, cut, log: Vec::new() };
        let rot = obj_r.eval(&[0.0, 0.0, 0.0]);
        assert!(
            (rot - base).abs() < 1e-12 * base,
            "rotation changed the objective: {base} vs {rot}"
        );
        // General automorphism: invariant up to finite-difference error.
        let a = Complex64::new(0.2, 0.1);
        let moved = DiskGridMap {
            grid: g,
            values: f0
                .values
                .iter()
                .map(|&w| (w - a) / (Complex64::new(1.0, 0.0) - a.conj() * w))
                .collect(),
            source: "moved".into(),
        };
        let mut obj_m = Objective { f0: &moved, basis: &basis, rho: &rho, cut, log: Vec::new() };
        let mov = obj_m.eval(&[0.0, 0.0, 0.0]);
        assert!((mov - base).abs() < 5e-3 * base, "automorphism changed K: {base} vs {mov}");
    }

    #[test]
    fn search_log_csv_shape() {
        let grid = PolarGrid::new(48, 96, 1.0 - 1.0 / 96.0).unwrap();
        let id = DiskGridMap::identity(grid);
        let basis = vec![BoundaryFixingTwist::new(0.3, 0.7, 0.5).unwrap()];
        let cfg = SearchConfig { sweeps: 1, ..SearchConfig::default() };
        let res =
            extremal_search(&id, &GrowthFunction::Constant, &basis, &[(-0.5, 0.5)], &cfg).unwrap();
        let csv = res.log_to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "step,c1,objective");
        assert_eq!(csv.lines().count(), res.log.len() + 1);
        for (k, line) in csv.lines().skip(1).enumerate() {
            assert!(line.starts_with(&format!("{k},")));
        }
    }

    #[test]
    fn pseudo_metric_axioms() {
        let grid = test_grid();
        let id_class = TeichClass::from_map(&DiskGridMap::identity(grid)).unwrap();
        let f0 = k0_two_map(grid);
        let f0_class = TeichClass::from_map(&f0).unwrap();
        let rho = GrowthFunction::Constant;
        let basis = vec![BoundaryFixingTwist::new(0.3, 0.7, 0.5).unwrap()];
        let c_box = [(-0.5, 0.5)];
        let cfg = SearchConfig { sweeps: 1, ..SearchConfig::default() };
        let d_ff = pseudo_metric(&f0_class, &f0_class, &rho, &basis, &c_box, &cfg).unwrap();
        assert_eq!(d_ff, 0.0);
        let d_if = pseudo_metric(&id_class, &f0_class, &rho, &basis, &c_box, &cfg).unwrap();
        let d_fi = pseudo_metric(&f0_class, &id_class, &rho, &basis, &c_box, &cfg).unwrap();
        assert_eq!(d_if, d_fi);
        assert!((d_if - 1.0).abs() < 0.1, "d(id, K0=2) = {d_if}");
    }
}
