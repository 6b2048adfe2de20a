//! Concrete map families, the dilatation calculus, transfer formulas, and
//! the rho-maximal dilatation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BeltramiField, DiskGridMap, PolarGrid};
use crate::growth::GrowthFunction;

/// Radial map family `f_a(r e^{i theta}) = [1 - (1-r)^a] e^{i theta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMapSpec {
    pub a: f64,
}

impl RadialMapSpec {
    pub fn new(a: f64) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::Domain(format!("radial parameter a = {a} must be positive")));
        }
        Ok(RadialMapSpec { a })
    }
}

/// Evaluate the radial map at `z` in the closed disk.
pub fn radial_eval(spec: RadialMapSpec, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let g = 1.0 - (1.0 - r).powf(spec.a);
    z * (g / r)
}

/// Closed-form complex dilatation of the radial map.
///
/// For `f = g(r) e^{i theta}`: `mu = e^{2 i theta} (g' - g/r) / (g' + g/r)`.
pub fn radial_mu(spec: RadialMapSpec, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = spec.a;
    let gp = a * (1.0 - r).powf(a - 1.0);
    let gor = (1.0 - (1.0 - r).powf(a)) / r;
    let phase = (z / r).powi(2);
    phase * ((gp - gor) / (gp + gor))
}

/// Closed-form distortion of the radial map, symmetrized to be `>= 1`.
pub fn radial_distortion(spec: RadialMapSpec, r: f64) -> f64 {
    let p = GrowthFunction::radial_profile(spec.a, r);
    p.max(1.0 / p)
}

/// The spiral map `r e^{i theta} -> r e^{i(theta + ln(1/(1-r)))}`, which has
/// no continuous boundary extension.
pub fn spiral_eval(z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if r >= 1.0 {
        return Err(Error::Domain(format!("spiral map defined only for |z| < 1, got {r}")));
    }
    if r == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let twist = (1.0 / (1.0 - r)).ln();
    Ok(z * Complex64::from_polar(1.0, twist))
}

/// Power map `z |z|^(alpha-1)`; a standard analytic test case.
pub fn power_map_eval(alpha: f64, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    z * r.powf(alpha - 1.0)
}

/// Closed-form dilatation of the power map: `((alpha-1)/(alpha+1)) z/conj(z)`.
pub fn power_map_mu(alpha: f64, z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    z / z.conj() * ((alpha - 1.0) / (alpha + 1.0))
}

/// Wirtinger derivatives of a sampled map, reconstructed from polar central
/// differences. The origin row carries no derivatives; the outermost ring
/// uses one-sided radial stencils and is flagged.
#[derive(Debug, Clone)]
pub struct DerivativeField {
    pub grid: PolarGrid,
    pub f_z: Vec<Complex64>,
    pub f_zbar: Vec<Complex64>,
    /// False on the origin row.
    pub valid: Vec<bool>,
    /// True on the outermost ring (one-sided radial stencil).
    pub one_sided: Vec<bool>,
    /// Nodes where the finite-difference Jacobian is not positive.
    pub degenerate: Vec<(usize, usize)>,
}

impl DerivativeField {
    #[inline]
    pub fn jacobian(&self, idx: usize) -> f64 {
        self.f_z[idx].norm_sqr() - self.f_zbar[idx].norm_sqr()
    }
}

/// Spectral (Fourier) derivative of one periodic ring of samples.
fn angular_derivative_ring(values: &mut [Complex64]) {
    use rustfft::FftPlanner;
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    fft.process(values);
    for (k, v) in values.iter_mut().enumerate() {
        // Signed frequency; the unpaired Nyquist mode differentiates to zero.
        let freq = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        *v *= Complex64::new(0.0, freq / n as f64);
    }
    ifft.process(values);
}

/// Wirtinger derivatives of `map`: spectral differentiation in the angular
/// direction, central differences radially.
pub fn derivatives(map: &DiskGridMap) -> Result<DerivativeField> {
    let g = map.grid;
    if g.n_r < 3 || g.n_theta < 3 {
        return Err(Error::Domain("need at least 3 nodes in each direction".into()));
    }
    let n = g.len();
    let mut f_z = vec![Complex64::new(0.0, 0.0); n];
    let mut f_zbar = vec![Complex64::new(0.0, 0.0); n];
    let mut valid = vec![false; n];
    let mut one_sided = vec![false; n];
    let mut degenerate = Vec::new();
    let dr = g.dr();
    let mut ring = vec![Complex64::new(0.0, 0.0); g.n_theta];
    let mut f_theta_all = vec![Complex64::new(0.0, 0.0); n];
    for i in 1..g.n_r {
        for j in 0..g.n_theta {
            ring[j] = map.at(i, j);
        }
        angular_derivative_ring(&mut ring);
        for j in 0..g.n_theta {
            f_theta_all[g.idx(i, j)] = ring[j];
        }
    }
    for i in 1..g.n_r {
        let r = g.radius(i);
        for j in 0..g.n_theta {
            let idx = g.idx(i, j);
            let f_theta = f_theta_all[idx];
            let f_r = if i + 1 < g.n_r {
                (map.at(i + 1, j) - map.at(i - 1, j)) / (2.0 * dr)
            } else {
                one_sided[idx] = true;
                (map.at(i, j) * 3.0 - map.at(i - 1, j) * 4.0 + map.at(i - 2, j)) / (2.0 * dr)
            };
            let theta = g.theta(j);
            let em = Complex64::from_polar(1.0, -theta);
            let ep = Complex64::from_polar(1.0, theta);
            let i_over_r = Complex64::new(0.0, 1.0 / r);
            f_z[idx] = em * (f_r - i_over_r * f_theta) * 0.5;
            f_zbar[idx] = ep * (f_r + i_over_r * f_theta) * 0.5;
            valid[idx] = true;
            if f_z[idx].norm_sqr() - f_zbar[idx].norm_sqr() <= 0.0 {
                degenerate.push((i, j));
            }
        }
    }
    Ok(DerivativeField { grid: g, f_z, f_zbar, valid, one_sided, degenerate })
}

/// Diagnostics attached to an extracted dilatation field.
#[derive(Debug, Clone, Default)]
pub struct DilatationReport {
    pub degenerate_nodes: Vec<(usize, usize)>,
    /// Nodes where `|mu|` had to be clamped below 1.
    pub clamped_nodes: usize,
}

/// Extract the Beltrami coefficient `mu = f_zbar / f_z` of a sampled map.
///
/// Degenerate-Jacobian nodes are zeroed and reported, never interpolated.
/// The origin row copies the first ring.
pub fn dilatation_field(map: &DiskGridMap) -> Result<(BeltramiField, DilatationReport)> {
    let d = derivatives(map)?;
    let g = map.grid;
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut report = DilatationReport {
        degenerate_nodes: d.degenerate.clone(),
        clamped_nodes: 0,
    };
    let degenerate: std::collections::HashSet<usize> =
        d.degenerate.iter().map(|&(i, j)| g.idx(i, j)).collect();
    for i in 1..g.n_r {
        for j in 0..g.n_theta {
            let idx = g.idx(i, j);
            if degenerate.contains(&idx) || d.f_z[idx].norm() < 1e-12 {
                continue;
            }
            let mut mu = d.f_zbar[idx] / d.f_z[idx];
            let n = mu.norm();
            if n >= 1.0 {
                mu *= (1.0 - 1e-12) / n;
                report.clamped_nodes += 1;
            }
            values[idx] = mu;
        }
    }
    for j in 0..g.n_theta {
        values[g.idx(0, j)] = values[g.idx(1, j)];
    }
    let field = BeltramiField::new(g, values)?;
    Ok((field, report))
}

/// Pointwise distortion `D = (1 + |mu|) / (1 - |mu|)`.
pub fn distortion_field(mu: &BeltramiField) -> Vec<f64> {
    mu.values
        .iter()
        .map(|m| {
            let k = m.norm();
            (1.0 + k) / (1.0 - k)
        })
        .collect()
}

/// Dilatation transferred to image points: values of `mu_{f^-1}` at `f(z)`.
#[derive(Debug, Clone)]
pub struct TransferredField {
    pub grid: PolarGrid,
    /// Image points `f(z)` aligned with grid nodes.
    pub points: Vec<Complex64>,
    /// `mu_{f^-1}(f(z))` aligned with grid nodes; zero where skipped.
    pub values: Vec<Complex64>,
    /// Nodes skipped because `|f_z|` was below threshold or invalid.
    pub skipped: Vec<(usize, usize)>,
}

/// `mu_{f^-1}` sampled at image points via the transfer formula
/// `mu_{f^-1}(f(z)) = -mu_f(z) * f_z / conj(f_z)`.
pub fn inverse_dilatation(mu_f: &BeltramiField, map: &DiskGridMap) -> Result<TransferredField> {
    if mu_f.grid != map.grid {
        return Err(Error::Domain("mu and map grids differ".into()));
    }
    let d = derivatives(map)?;
    let g = map.grid;
    let mut points = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut skipped = Vec::new();
    for i in 0..g.n_r {
        for j in 0..g.n_theta {
            let idx = g.idx(i, j);
            points[idx] = map.values[idx];
            if !d.valid[idx] || d.f_z[idx].norm() < 1e-12 {
                skipped.push((i, j));
                continue;
            }
            values[idx] = -mu_f.values[idx] * d.f_z[idx] / d.f_z[idx].conj();
        }
    }
    Ok(TransferredField { grid: g, points, values, skipped })
}

/// Dilatation of the composite `g o f` from `mu_f`, `mu_g` at image points,
/// and the unimodular chain-rule weight `tau_hat = conj(f_z)/f_z`.
pub fn composition_dilatation(
    mu_g_at_image: &[Complex64],
    mu_f: &BeltramiField,
    f: &DiskGridMap,
) -> Result<(BeltramiField, Vec<(usize, usize)>)> {
    let g = mu_f.grid;
    if mu_g_at_image.len() != g.len() || f.grid != g {
        return Err(Error::Domain("incompatible sampling".into()));
    }
    let d = derivatives(f)?;
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut flagged = Vec::new();
    for i in 1..g.n_r {
        for j in 0..g.n_theta {
            let idx = g.idx(i, j);
            if !d.valid[idx] || d.f_z[idx].norm() < 1e-12 {
                flagged.push((i, j));
                continue;
            }
            let tau_hat = d.f_z[idx].conj() / d.f_z[idx];
            let mg = mu_g_at_image[idx] * tau_hat;
            let mf = mu_f.values[idx];
            let denom = Complex64::new(1.0, 0.0) + mf.conj() * mg;
            if denom.norm() < 1e-12 {
                flagged.push((i, j));
                continue;
            }
            let mut mu = (mf + mg) / denom;
            // Exact-cancellation path: mu_g equal to mu_{f^-1} at image points
            // must produce an exactly conformal composite.
            if mu.norm() < 1e-13 {
                mu = Complex64::new(0.0, 0.0);
            }
            let n = mu.norm();
            if n >= 1.0 {
                mu *= (1.0 - 1e-12) / n;
            }
            values[idx] = mu;
        }
    }
    for j in 0..g.n_theta {
        values[g.idx(0, j)] = values[g.idx(1, j)];
    }
    Ok((BeltramiField::new(g, values)?, flagged))
}

/// Result of a rho-maximal dilatation computation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KRho {
    pub value: f64,
    /// Radius where the supremum is attained.
    pub attained_radius: f64,
    /// True when the sup sits on the outermost ring considered, suggesting
    /// the true supremum may exceed the grid value.
    pub rim_attained: bool,
}

/// `K^rho = sup D(z) / rho(|z|)` over grid nodes with radius `<= domain_cut`.
pub fn k_rho(mu: &BeltramiField, rho: &GrowthFunction, domain_cut: f64) -> KRho {
    let g = mu.grid;
    let d = distortion_field(mu);
    let mut best = 0.0f64;
    let mut best_r = 0.0f64;
    let mut last_ring = 0usize;
    for i in 0..g.n_r {
        let r = g.radius(i);
        if r > domain_cut {
            break;
        }
        last_ring = i;
        let rho_r = rho.eval_unchecked(r);
        for j in 0..g.n_theta {
            let ratio = d[g.idx(i, j)] / rho_r;
            if ratio > best {
                best = ratio;
                best_r = r;
            }
        }
    }
    KRho {
        value: best,
        attained_radius: best_r,
        rim_attained: (best_r - g.radius(last_ring)).abs() < 1e-14,
    }
}

/// `K^rho` of the inverse map via the transfer identity
/// `D_{f^-1}(f(z)) = D_f(z)`, with `rho` evaluated at the image radius.
pub fn k_rho_inverse_transfer(
    mu_f: &BeltramiField,
    map: &DiskGridMap,
    rho: &GrowthFunction,
    domain_cut: f64,
) -> KRho {
    let g = mu_f.grid;
    let mut best = 0.0f64;
    let mut best_r = 0.0f64;
    let mut last_ring = 0usize;
    for i in 0..g.n_r {
        if g.radius(i) > domain_cut {
            break;
        }
        last_ring = i;
        for j in 0..g.n_theta {
            let idx = g.idx(i, j);
            let w = map.values[idx].norm();
            if w >= 1.0 {
                continue;
            }
            let k = mu_f.values[idx].norm();
            let dist = (1.0 + k) / (1.0 - k);
            let ratio = dist / rho.eval_unchecked(w);
            if ratio > best {
                best = ratio;
                best_r = g.radius(i);
            }
        }
    }
    KRho {
        value: best,
        attained_radius: best_r,
        rim_attained: (best_r - g.radius(last_ring)).abs() < 1e-14,
    }
}

/// Least grid constant `C` with `D <= C rho`, or `None` when the ratio
/// profile still grows by more than a factor 2 through the last 10% of
/// radii (non-membership on the grid).
pub fn membership_qc_rho(mu: &BeltramiField, rho: &GrowthFunction) -> Option<f64> {
    let g = mu.grid;
    let d = distortion_field(mu);
    let mut ring_max = vec![0.0f64; g.n_r];
    for i in 0..g.n_r {
        let rho_r = rho.eval_unchecked(g.radius(i));
        for j in 0..g.n_theta {
            ring_max[i] = ring_max[i].max(d[g.idx(i, j)] / rho_r);
        }
    }
    // The outermost ring uses one-sided differences and zeroed degenerate
    // nodes when `mu` came from a sampled map; leave it out of the growth
    // detection (it still counts toward the constant below).
    let start = g.n_r - (g.n_r / 10).max(3);
    let tail = &ring_max[start..g.n_r - 1];
    let monotone = tail.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let factor = tail.last().unwrap() / tail.first().unwrap().max(1e-300);
    if monotone && factor > 2.0 {
        return None;
    }
    Some(ring_max.iter().cloned().fold(0.0, f64::max))
}

/// Lebesgue measure of the superlevel sets `{D > K}` by polar cell summation,
/// for each threshold in `k_grid`.
pub fn david_measure_profile(mu: &BeltramiField, k_grid: &[f64]) -> Vec<(f64, f64)> {
    let g = mu.grid;
    let d = distortion_field(mu);
    let dr = g.dr();
    let dth = g.dtheta();
    k_grid
        .iter()
        .map(|&k| {
            let mut measure = 0.0;
            for i in 0..g.n_r {
                let r = g.radius(i);
                // Node-centered annular cell; half cells at the ends.
                let (lo, hi) = if i == 0 {
                    (0.0, 0.5 * dr)
                } else if i + 1 == g.n_r {
                    (r - 0.5 * dr, r)
                } else {
                    (r - 0.5 * dr, r + 0.5 * dr)
                };
                let cell = 0.5 * (hi * hi - lo * lo) * dth;
                for j in 0..g.n_theta {
                    if d[g.idx(i, j)] > k {
                        measure += cell;
                    }
                }
            }
            (k, measure)
        })
        .collect()
}

/// The paper-style David bound `pi e^{-2K/C}` for comparison with the
/// measured profile.
pub fn david_bound(k: f64, c: f64) -> f64 {
    std::f64::consts::PI * (-2.0 * k / c).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PolarGrid {
        PolarGrid::new(96, 192, 1.0 - 1.0 / 384.0).unwrap()
    }

    #[test]
    fn radial_identity() {
        let z = Complex64::new(0.3, 0.4);
        let v = radial_eval(RadialMapSpec::new(1.0).unwrap(), z);
        assert!((v - z).norm() < 1e-15);
    }

    #[test]
    fn radial_group_law() {
        for (a, b) in [(2.0, 3.0), (0.5, 2.0), (1.5, 1.5)] {
            let fa = RadialMapSpec::new(a).unwrap();
            let fb = RadialMapSpec::new(b).unwrap();
            let fab = RadialMapSpec::new(a * b).unwrap();
            let g = grid();
            let mut sup: f64 = 0.0;
            for i in 0..g.n_r {
                for j in 0..g.n_theta {
                    let z = g.node(i, j);
                    let lhs = radial_eval(fa, radial_eval(fb, z));
                    let rhs = radial_eval(fab, z);
                    sup = sup.max((lhs - rhs).norm());
                }
            }
            assert!(sup < 1e-12, "a={a} b={b}: sup={sup}");
        }
    }

    #[test]
    fn radial_inverse_law() {
        let fa = RadialMapSpec::new(2.0).unwrap();
        let fi = RadialMapSpec::new(0.5).unwrap();
        let g = grid();
        let mut sup: f64 = 0.0;
        for i in 0..g.n_r {
            for j in 0..g.n_theta {
                let z = g.node(i, j);
                sup = sup.max((radial_eval(fa, radial_eval(fi, z)) - z).norm());
            }
        }
        assert!(sup < 1e-12);
    }

    #[test]
    fn radial_composition_power_example() {
        // a=2 then a=3 at r=0.5 equals a=6: 1 - 0.5^6.
        let z = Complex64::new(0.5, 0.0);
        let v = radial_eval(RadialMapSpec::new(3.0).unwrap(), radial_eval(RadialMapSpec::new(2.0).unwrap(), z));
        assert!((v.re - (1.0 - 0.5f64.powi(6))).abs() < 1e-14);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn spiral_basics() {
        assert_eq!(spiral_eval(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let z = Complex64::from_polar(0.6, 1.2);
        let w = spiral_eval(z).unwrap();
        assert!((w.norm() - 0.6).abs() < 1e-14);
        assert!(spiral_eval(Complex64::new(1.0, 0.0)).is_err());
        // Angular offset returns to the start ray at r = 1 - e^{-2pi}.
        let r = 1.0 - (-2.0 * std::f64::consts::PI).exp();
        let w = spiral_eval(Complex64::new(r, 0.0)).unwrap();
        assert!(w.arg().abs() < 1e-12, "arg = {}", w.arg());
    }

    #[test]
    fn dilatation_identity_zero() {
        let m = DiskGridMap::identity(grid());
        let (mu, rep) = dilatation_field(&m).unwrap();
        assert!(mu.ess_sup < 1e-10);
        assert!(rep.degenerate_nodes.is_empty());
    }

    #[test]
    fn dilatation_affine() {
        let k = Complex64::new(0.3, 0.0);
        let m = DiskGridMap::sample(grid(), "affine", |z| z + k * z.conj());
        let (mu, _) = dilatation_field(&m).unwrap();
        for i in 1..m.grid.n_r {
            for j in 0..m.grid.n_theta {
                let v = mu.at(i, j);
                assert!((v - k).norm() < 1e-8, "node ({i},{j}): {v}");
            }
        }
    }

    #[test]
    fn dilatation_power_map_interior() {
        let alpha = 1.5;
        let m = DiskGridMap::sample(grid(), "power", |z| power_map_eval(alpha, z));
        let (mu, _) = dilatation_field(&m).unwrap();
        let g = m.grid;
        let mut sup: f64 = 0.0;
        for i in 2..g.n_r {
            let r = g.radius(i);
            // Radial truncation error scales like r^(alpha-3); stay away from
            // the origin and the rim.
            if r < 0.05 {
                continue;
            }
            if r > 0.9 {
                break;
            }
            for j in 0..g.n_theta {
                let err = (mu.at(i, j) - power_map_mu(alpha, g.node(i, j))).norm();
                sup = sup.max(err);
            }
        }
        // 96x192 grid: h ~ 1e-2, expect O(h^2) ~ 1e-3 scale.
        assert!(sup < 5e-3, "sup err {sup}");
    }

    #[test]
    fn distortion_values() {
        let g = grid();
        let mu = BeltramiField::sample(g, |_| Complex64::new(0.5, 0.0)).unwrap();
        for v in distortion_field(&mu) {
            assert!((v - 3.0).abs() < 1e-12);
        }
        let zero = BeltramiField::zero(g);
        for v in distortion_field(&zero) {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn radial_distortion_closed_form() {
        let a = 1.5;
        let r = 0.5;
        let profile = (1.0 - 0.5f64.powf(1.5)) / (1.5 * 0.5 * 0.5f64.powf(0.5));
        let expect = profile.max(1.0 / profile);
        assert!((radial_distortion(RadialMapSpec::new(a).unwrap(), r) - expect).abs() < 1e-14);
    }

    #[test]
    fn inverse_dilatation_modulus_preserved() {
        let alpha = 1.5;
        let m = DiskGridMap::sample(grid(), "power", |z| power_map_eval(alpha, z));
        let (mu, _) = dilatation_field(&m).unwrap();
        let inv = inverse_dilatation(&mu, &m).unwrap();
        let g = m.grid;
        for i in 1..g.n_r - 1 {
            for j in 0..g.n_theta {
                let idx = g.idx(i, j);
                let a = inv.values[idx].norm();
                let b = mu.values[idx].norm();
                assert!((a - b).abs() < 1e-12, "({i},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn inverse_dilatation_matches_inverse_power_map() {
        // The inverse of z|z|^(alpha-1) is z|z|^(1/alpha - 1).
        let alpha = 1.5;
        let m = DiskGridMap::sample(grid(), "power", |z| power_map_eval(alpha, z));
        let (mu, _) = dilatation_field(&m).unwrap();
        let inv = inverse_dilatation(&mu, &m).unwrap();
        let g = m.grid;
        let mut sup: f64 = 0.0;
        for i in 2..g.n_r - 1 {
            let r = g.radius(i);
            if r < 0.05 {
                continue;
            }
            if r > 0.9 {
                break;
            }
            for j in 0..g.n_theta {
                let idx = g.idx(i, j);
                let w = inv.points[idx];
                let expect = power_map_mu(1.0 / alpha, w);
                sup = sup.max((inv.values[idx] - expect).norm());
            }
        }
        assert!(sup < 5e-3, "sup err {sup}");
    }

    #[test]
    fn composition_cancellation_gives_conformal() {
        let alpha = 1.5;
        let m = DiskGridMap::sample(grid(), "power", |z| power_map_eval(alpha, z));
        let (mu, _) = dilatation_field(&m).unwrap();
        let inv = inverse_dilatation(&mu, &m).unwrap();
        let (comp, _) = composition_dilatation(&inv.values, &mu, &m).unwrap();
        assert!(comp.ess_sup < 1e-10, "ess_sup {}", comp.ess_sup);
    }

    #[test]
    fn composition_matches_direct_sampling() {
        // Compose two power maps and compare against the dilatation of the
        // directly sampled composite.
        let (a1, a2) = (1.3, 1.4);
        let g = grid();
        let f = DiskGridMap::sample(g, "power1", |z| power_map_eval(a1, z));
        let (mu_f, _) = dilatation_field(&f).unwrap();
        let mu_g_at_image: Vec<Complex64> =
            f.values.iter().map(|&w| power_map_mu(a2, w)).collect();
        let (comp, _) = composition_dilatation(&mu_g_at_image, &mu_f, &f).unwrap();
        let direct = DiskGridMap::sample(g, "composite", |z| power_map_eval(a1 * a2, z));
        let (mu_direct, _) = dilatation_field(&direct).unwrap();
        let mut sup: f64 = 0.0;
        for i in 2..g.n_r - 1 {
            if g.radius(i) > 0.9 {
                break;
            }
            for j in 0..g.n_theta {
                sup = sup.max((comp.at(i, j) - mu_direct.at(i, j)).norm());
            }
        }
        assert!(sup < 5e-3, "sup err {sup}");
    }

    #[test]
    fn k_rho_conformal_is_one() {
        let g = grid();
        let rot = DiskGridMap::sample(g, "rot", |z| z * Complex64::from_polar(1.0, 0.7));
        let (mu, _) = dilatation_field(&rot).unwrap();
        let k = k_rho(&mu, &GrowthFunction::LogNormalized, 1.0);
        assert!((k.value - 1.0).abs() < 1e-8, "K = {}", k.value);
    }

    #[test]
    fn k_rho_affine_constant_rho() {
        let g = grid();
        let mu = BeltramiField::sample(g, |_| Complex64::new(0.5, 0.0)).unwrap();
        let k = k_rho(&mu, &GrowthFunction::Constant, 1.0);
        assert!((k.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn k_rho_radial_matched_profile() {
        // f_a against rho = radialFamily(a): the ratio is identically 1.
        let a = 1.5;
        let g = grid();
        let mu = BeltramiField::sample(g, |z| radial_mu(RadialMapSpec { a }, z)).unwrap();
        let k = k_rho(&mu, &GrowthFunction::radial_family(a), 1.0);
        assert!((k.value - 1.0).abs() < 1e-10, "K = {}", k.value);
    }

    #[test]
    fn k_rho_rotation_invariance() {
        let a = 1.5;
        let g = grid();
        let rot = Complex64::from_polar(1.0, 1.1);
        let mu_plain = BeltramiField::sample(g, |z| radial_mu(RadialMapSpec { a }, z)).unwrap();
        // Pre/post rotation: |mu| at |z| unchanged, so K^rho identical.
        let mu_rot =
            BeltramiField::sample(g, |z| radial_mu(RadialMapSpec { a }, rot * z) * rot.powi(2).conj())
                .unwrap();
        let rho = GrowthFunction::radial_family(a);
        let k1 = k_rho(&mu_plain, &rho, 1.0);
        let k2 = k_rho(&mu_rot, &rho, 1.0);
        assert!((k1.value - k2.value).abs() < 1e-12);
    }

    #[test]
    fn membership_affine_constant() {
        let g = grid();
        let mu = BeltramiField::sample(g, |_| Complex64::new(0.5, 0.0)).unwrap();
        let c = membership_qc_rho(&mu, &GrowthFunction::Constant).unwrap();
        assert!((c - 3.0).abs() < 1e-12);
    }

    #[test]
    fn membership_radial_a3_vs_constant_fails() {
        let g = grid();
        let mu = BeltramiField::sample(g, |z| radial_mu(RadialMapSpec { a: 3.0 }, z)).unwrap();
        assert!(membership_qc_rho(&mu, &GrowthFunction::Constant).is_none());
    }

    #[test]
    fn membership_radial_matched_is_one() {
        let g = grid();
        let mu = BeltramiField::sample(g, |z| radial_mu(RadialMapSpec { a: 1.5 }, z)).unwrap();
        let c = membership_qc_rho(&mu, &GrowthFunction::radial_family(1.5)).unwrap();
        assert!((c - 1.0).abs() < 1e-10, "C = {c}");
    }

    #[test]
    fn david_measure_basics() {
        let g = grid();
        let zero = BeltramiField::zero(g);
        let profile = david_measure_profile(&zero, &[2.0]);
        assert_eq!(profile[0].1, 0.0);

        let mu = BeltramiField::sample(g, |z| radial_mu(RadialMapSpec { a: 1.5 }, z)).unwrap();
        let profile = david_measure_profile(&mu, &[1.5, 2.0, 4.0, 8.0]);
        for w in profile.windows(2) {
            assert!(w[1].1 <= w[0].1, "measure not nonincreasing: {profile:?}");
        }
        // Oracle: D(r) > K on an annulus (r_K, 1); compare cell sum against
        // the closed-form annulus area at the grid rim.
        let spec = RadialMapSpec { a: 1.5 };
        for &(k, measured) in &profile {
            // bisect D(r) = k
            let (mut lo, mut hi) = (1e-6, g.r_max);
            if radial_distortion(spec, hi) > k {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if radial_distortion(spec, mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let exact = std::f64::consts::PI * (g.r_max * g.r_max - hi * hi);
                assert!(
                    (measured - exact).abs() < 0.15 * exact.max(0.05),
                    "K={k}: measured {measured} vs annulus {exact}"
                );
            }
        }
    }
}
