//! Polar grids on the unit disk, sampled disk maps, Beltrami coefficient
//! fields, and the LQCGRID/LQCMU v1 file format.

use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Polar lattice: `n_r` radii uniformly spaced on `[0, r_max]` (node at the
/// origin, none at `r = 1`), `n_theta` uniformly spaced angles on `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize, r_max: f64) -> Result<Self> {
        if n_r < 3 || n_theta < 3 {
            return Err(Error::Domain("grid needs at least 3 nodes per direction".into()));
        }
        if !(0.0 < r_max && r_max < 1.0) {
            return Err(Error::Domain(format!("r_max = {r_max} outside (0,1)")));
        }
        Ok(PolarGrid { n_r, n_theta, r_max })
    }

    /// Default production grid: 256 x 512 with the outermost ring one half
    /// angular step short of the unit circle.
    pub fn default_disk() -> Self {
        PolarGrid { n_r: 256, n_theta: 512, r_max: 1.0 - 1.0 / 512.0 }
    }

    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        self.r_max * i as f64 / (self.n_r - 1) as f64
    }

    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_theta as f64
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        self.r_max / (self.n_r - 1) as f64
    }

    #[inline]
    pub fn dtheta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_theta as f64
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::from_polar(self.radius(i), self.theta(j))
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A discrete self-map of the closed disk sampled on a polar grid,
/// radius-major storage.
#[derive(Debug, Clone)]
pub struct DiskGridMap {
    pub grid: PolarGrid,
    pub values: Vec<Complex64>,
    /// Analytic family tag or solver provenance.
    pub source: String,
}

impl DiskGridMap {
    pub fn sample<F: Fn(Complex64) -> Complex64>(grid: PolarGrid, source: &str, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                values.push(f(grid.node(i, j)));
            }
        }
        DiskGridMap { grid, values, source: source.to_string() }
    }

    pub fn identity(grid: PolarGrid) -> Self {
        Self::sample(grid, "identity", |z| z)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Bilinear interpolation in `(r, theta)`; `z` must satisfy `|z| <= r_max`.
    pub fn interpolate(&self, z: Complex64) -> Complex64 {
        let g = &self.grid;
        let r = z.norm().min(g.r_max);
        let theta = z.arg().rem_euclid(2.0 * std::f64::consts::PI);
        let fi = r / g.dr();
        let i0 = (fi.floor() as usize).min(g.n_r - 2);
        let tr = fi - i0 as f64;
        let fj = theta / g.dtheta();
        let j0 = (fj.floor() as usize).min(g.n_theta - 1);
        let tt = fj - j0 as f64;
        let j1 = (j0 + 1) % g.n_theta;
        let a = self.at(i0, j0) * (1.0 - tt) + self.at(i0, j1) * tt;
        let b = self.at(i0 + 1, j0) * (1.0 - tt) + self.at(i0 + 1, j1) * tt;
        a * (1.0 - tr) + b * tr
    }

    /// Sup-distance to another map on the same grid, restricted to `r <= cut`.
    pub fn sup_distance(&self, other: &DiskGridMap, cut: f64) -> f64 {
        assert_eq!(self.grid, other.grid);
        let mut sup: f64 = 0.0;
        for i in 0..self.grid.n_r {
            if self.grid.radius(i) > cut {
                break;
            }
            for j in 0..self.grid.n_theta {
                sup = sup.max((self.at(i, j) - other.at(i, j)).norm());
            }
        }
        sup
    }
}

/// Complex dilatation samples `mu` with `|mu| < 1` pointwise.
#[derive(Debug, Clone)]
pub struct BeltramiField {
    pub grid: PolarGrid,
    pub values: Vec<Complex64>,
    pub ess_sup: f64,
}

impl BeltramiField {
    pub fn new(grid: PolarGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain("value count does not match grid".into()));
        }
        let mut ess_sup: f64 = 0.0;
        for v in &values {
            let n = v.norm();
            if n >= 1.0 {
                return Err(Error::Domain(format!("|mu| = {n} >= 1 at a node")));
            }
            ess_sup = ess_sup.max(n);
        }
        Ok(BeltramiField { grid, values, ess_sup })
    }

    pub fn sample<F: Fn(Complex64) -> Complex64>(grid: PolarGrid, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                values.push(f(grid.node(i, j)));
            }
        }
        Self::new(grid, values)
    }

    pub fn zero(grid: PolarGrid) -> Self {
        BeltramiField { values: vec![Complex64::new(0.0, 0.0); grid.len()], grid, ess_sup: 0.0 }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn interpolate(&self, z: Complex64) -> Complex64 {
        // Same bilinear rule as for maps.
        let tmp = DiskGridMap {
            grid: self.grid,
            values: self.values.clone(),
            source: String::new(),
        };
        tmp.interpolate(z)
    }
}

fn format_grid(header: &str, grid: &PolarGrid, values: &[Complex64]) -> String {
    let mut out = String::with_capacity(values.len() * 48);
    let _ = writeln!(out, "{header} v1 {} {} {:.17e}", grid.n_r, grid.n_theta, grid.r_max);
    for v in values {
        let _ = writeln!(out, "{:.17e} {:.17e}", v.re, v.im);
    }
    out
}

fn parse_grid(expect: &str, text: &str) -> Result<(PolarGrid, Vec<Complex64>)> {
    // Leading `#` lines carry tool provenance and are ignored.
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Format("empty file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != expect || parts[1] != "v1" {
        return Err(Error::Format(format!("bad header: {header:?}, expected {expect} v1")));
    }
    let n_r: usize = parts[2].parse().map_err(|_| Error::Format("bad n_r".into()))?;
    let n_theta: usize = parts[3].parse().map_err(|_| Error::Format("bad n_theta".into()))?;
    let r_max: f64 = parts[4].parse().map_err(|_| Error::Format("bad r_max".into()))?;
    let grid = PolarGrid::new(n_r, n_theta, r_max)?;
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let re: f64 = it
            .next()
            .ok_or_else(|| Error::Format("missing re".into()))?
            .parse()
            .map_err(|_| Error::Format("bad re".into()))?;
        let im: f64 = it
            .next()
            .ok_or_else(|| Error::Format("missing im".into()))?
            .parse()
            .map_err(|_| Error::Format("bad im".into()))?;
        values.push(Complex64::new(re, im));
    }
    if values.len() != grid.len() {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    Ok((grid, values))
}

impl DiskGridMap {
    pub fn to_lqcgrid(&self) -> String {
        format_grid("LQCGRID", &self.grid, &self.values)
    }

    pub fn from_lqcgrid(text: &str) -> Result<Self> {
        let (grid, values) = parse_grid("LQCGRID", text)?;
        Ok(DiskGridMap { grid, values, source: "file".into() })
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_lqcgrid())?;
        Ok(())
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_lqcgrid(&std::fs::read_to_string(path)?)
    }
}

impl BeltramiField {
    pub fn to_lqcmu(&self) -> String {
        format_grid("LQCMU", &self.grid, &self.values)
    }

    pub fn from_lqcmu(text: &str) -> Result<Self> {
        let (grid, values) = parse_grid("LQCMU", text)?;
        Self::new(grid, values)
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_lqcmu())?;
        Ok(())
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_lqcmu(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = PolarGrid::new(5, 8, 0.8).unwrap();
        assert_eq!(g.radius(0), 0.0);
        assert!((g.radius(4) - 0.8).abs() < 1e-15);
        assert!((g.theta(4) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn origin_row_single_point() {
        let g = PolarGrid::new(8, 16, 0.9).unwrap();
        let m = DiskGridMap::sample(g, "t", |z| z * z + Complex64::new(0.25, 0.0));
        for j in 0..g.n_theta {
            assert_eq!(m.at(0, j), m.at(0, 0));
        }
    }

    #[test]
    fn interpolation_reproduces_linear() {
        let g = PolarGrid::new(64, 128, 0.95).unwrap();
        let m = DiskGridMap::sample(g, "t", |z| z * Complex64::new(0.5, 0.25));
        let z = Complex64::new(0.3, 0.2);
        let v = m.interpolate(z);
        let exact = z * Complex64::new(0.5, 0.25);
        assert!((v - exact).norm() < 1e-3);
    }

    #[test]
    fn io_roundtrip() {
        let g = PolarGrid::new(6, 10, 0.9).unwrap();
        let m = DiskGridMap::sample(g, "t", |z| z * z);
        let text = m.to_lqcgrid();
        assert!(text.starts_with("LQCGRID v1 6 10"));
        let back = DiskGridMap::from_lqcgrid(&text).unwrap();
        assert_eq!(back.values, m.values);

        let mu = BeltramiField::sample(g, |z| z * 0.3).unwrap();
        let back = BeltramiField::from_lqcmu(&mu.to_lqcmu()).unwrap();
        assert_eq!(back.values, mu.values);
        assert!((back.ess_sup - mu.ess_sup).abs() < 1e-14);
    }

    #[test]
    fn beltrami_rejects_unimodular() {
        let g = PolarGrid::new(4, 8, 0.9).unwrap();
        assert!(BeltramiField::sample(g, |_| Complex64::new(1.0, 0.0)).is_err());
    }
}
