//! Cartesian FFT realization of the plane Cauchy and Beurling transforms and
//! the principal solution for compactly supported dilatation.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{BeltramiField, DiskGridMap};

/// Complex samples on an `n x n` periodic patch `[-L, L)^2`, row-major in y.
#[derive(Debug, Clone)]
pub struct CartesianField {
    pub n: usize,
    pub half_width: f64,
    pub values: Vec<Complex64>,
}

impl CartesianField {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::Domain(format!("patch size {n} is not a power of two >= 8")));
        }
        if half_width <= 0.0 {
            return Err(Error::Domain("half_width must be positive".into()));
        }
        Ok(CartesianField { n, half_width, values: vec![Complex64::new(0.0, 0.0); n * n] })
    }

    #[inline]
    pub fn idx(&self, iy: usize, ix: usize) -> usize {
        iy * self.n + ix
    }

    #[inline]
    pub fn point(&self, iy: usize, ix: usize) -> Complex64 {
        let h = 2.0 * self.half_width / self.n as f64;
        Complex64::new(-self.half_width + h * ix as f64, -self.half_width + h * iy as f64)
    }

    /// Grid spacing.
    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn sample<F: Fn(Complex64) -> Complex64>(n: usize, half_width: f64, f: F) -> Result<Self> {
        let mut field = Self::new(n, half_width)?;
        for iy in 0..n {
            for ix in 0..n {
                let idx = field.idx(iy, ix);
                field.values[idx] = f(field.point(iy, ix));
            }
        }
        Ok(field)
    }

    /// Bilinear interpolation; `z` must lie inside the patch.
    pub fn interpolate(&self, z: Complex64) -> Complex64 {
        let h = self.h();
        let fx = (z.re + self.half_width) / h;
        let fy = (z.im + self.half_width) / h;
        let ix = (fx.floor() as isize).clamp(0, self.n as isize - 2) as usize;
        let iy = (fy.floor() as isize).clamp(0, self.n as isize - 2) as usize;
        let tx = (fx - ix as f64).clamp(0.0, 1.0);
        let ty = (fy - iy as f64).clamp(0.0, 1.0);
        let a = self.values[self.idx(iy, ix)] * (1.0 - tx) + self.values[self.idx(iy, ix + 1)] * tx;
        let b =
            self.values[self.idx(iy + 1, ix)] * (1.0 - tx) + self.values[self.idx(iy + 1, ix + 1)] * tx;
        a * (1.0 - ty) + b * ty
    }

    /// Signed frequency for bin `k` (Nyquist mapped to its negative pair).
    #[inline]
    fn freq(&self, k: usize) -> f64 {
        let n = self.n;
        let signed = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
        std::f64::consts::PI * signed / self.half_width
    }

    fn fft2(&mut self, inverse: bool) {
        let n = self.n;
        let mut planner = FftPlanner::new();
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        // Rows.
        for iy in 0..n {
            fft.process(&mut self.values[iy * n..(iy + 1) * n]);
        }
        // Columns.
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for ix in 0..n {
            for iy in 0..n {
                col[iy] = self.values[iy * n + ix];
            }
            fft.process(&mut col);
            for iy in 0..n {
                self.values[iy * n + ix] = col[iy];
            }
        }
        if inverse {
            let scale = 1.0 / (n * n) as f64;
            for v in &mut self.values {
                *v *= scale;
            }
        }
    }

    /// Fraction of total energy sitting in the outer 10% frame of the patch.
    pub fn boundary_energy_fraction(&self) -> f64 {
        let n = self.n;
        let margin = n / 10;
        let mut total = 0.0;
        let mut frame = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let e = self.values[self.idx(iy, ix)].norm_sqr();
                total += e;
                if iy < margin || iy >= n - margin || ix < margin || ix >= n - margin {
                    frame += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            frame / total
        }
    }

    fn apply_multiplier<M: Fn(Complex64) -> Complex64>(&self, m: M) -> CartesianField {
        let mut hat = self.clone();
        hat.fft2(false);
        let n = self.n;
        for ky in 0..n {
            for kx in 0..n {
                let zeta = Complex64::new(self.freq(kx), self.freq(ky));
                let idx = ky * n + kx;
                if zeta.norm_sqr() == 0.0 {
                    hat.values[idx] = Complex64::new(0.0, 0.0);
                } else {
                    hat.values[idx] *= m(zeta);
                }
            }
        }
        hat.fft2(true);
        hat
    }

    /// Mean value over the patch.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / (self.n * self.n) as f64
    }
}

/// Outcome of the Beurling transform together with the support diagnostic.
pub struct TransformOutput {
    pub field: CartesianField,
    /// Set when the input carries more than 1e-8 of its energy in the outer
    /// 10% frame, where periodization error is not negligible.
    pub support_warning: bool,
}

/// Periodized Beurling transform: Fourier multiplier `conj(zeta)/zeta`,
/// zero mode annihilated.
pub fn beurling_transform(field: &CartesianField) -> TransformOutput {
    let support_warning = field.boundary_energy_fraction() > 1e-8;
    let out = field.apply_multiplier(|zeta| zeta.conj() / zeta);
    TransformOutput { field: out, support_warning }
}

/// Periodized Cauchy transform with annihilated zero mode: Fourier
/// multiplier `-2i/zeta`. The mean of the input must be reinstated by the
/// caller as a `mean * conj(z)` term.
pub fn cauchy_transform(field: &CartesianField) -> TransformOutput {
    let support_warning = field.boundary_energy_fraction() > 1e-8;
    let out = field.apply_multiplier(|zeta| Complex64::new(0.0, -2.0) / zeta);
    TransformOutput { field: out, support_warning }
}

/// Principal solution for compactly supported `mu` on a Cartesian patch.
pub struct CompactSolution {
    /// `f` on the full patch.
    pub patch: CartesianField,
    /// `f` interpolated back onto the polar grid of the input.
    pub map: DiskGridMap,
    pub report: SolveReport,
}

/// Half-width of the plane patch used by [`solve_compact`]; the unit disk
/// sits well inside the inner 90%.
pub const PATCH_HALF_WIDTH: f64 = 2.0;

/// Solve `f_zbar = mu f_z` for compactly supported `mu` by Neumann iteration
/// `h <- mu (S h + 1)`, then `f = z + mean(h) conj(z) + C h`.
pub fn solve_compact(mu: &BeltramiField, cfg: &SolverConfig) -> Result<CompactSolution> {
    cfg.validate()?;
    if mu.ess_sup >= 1.0 {
        return Err(Error::Domain(format!("ess_sup(|mu|) = {} >= 1", mu.ess_sup)));
    }
    let n = cfg.fft_size;
    let r_max = mu.grid.r_max;
    let mu_c = CartesianField::sample(n, PATCH_HALF_WIDTH, |z| {
        if z.norm() <= r_max {
            mu.interpolate(z)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })?;

    let mut h = CartesianField::new(n, PATCH_HALF_WIDTH)?;
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.neumann_max_iter {
        let sh = beurling_transform(&h).field;
        let mut defect: f64 = 0.0;
        for i in 0..h.values.len() {
            let next = mu_c.values[i] * (sh.values[i] + 1.0);
            defect = defect.max((next - h.values[i]).norm());
            h.values[i] = next;
        }
        residuals.push(defect);
        if defect < cfg.neumann_tol {
            converged = true;
            break;
        }
    }

    let mean = h.mean();
    let ch = cauchy_transform(&h).field;
    let mut patch = ch;
    for iy in 0..n {
        for ix in 0..n {
            let idx = patch.idx(iy, ix);
            let z = patch.point(iy, ix);
            patch.values[idx] += z + mean * z.conj();
        }
    }

    let map = DiskGridMap::sample(mu.grid, "solve_compact", |z| patch.interpolate(z));
    let mut report = SolveReport::single_stage("neumann", residuals, converged);
    report.origin_image = {
        let f0 = patch.interpolate(Complex64::new(0.0, 0.0));
        [f0.re, f0.im]
    };
    Ok(CompactSolution { patch, map, report })
}
