//! Beltrami equation solvers: a Cartesian FFT solver for compactly
//! supported dilatation, a polar mode-space solver for the disk with
//! circle-symmetric reflection, an exhaustion driver for degenerating
//! dilatation, and the self-consistent distortion equation.

pub mod cartesian;
pub mod disk;
pub mod exhaustion;

pub use cartesian::{beurling_transform, cauchy_transform, solve_compact, CartesianField, CompactSolution};
pub use disk::solve_disk;
pub use exhaustion::{solve_exhaustion, solve_teichmuller_type};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tunable solver parameters with documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Side length of the Cartesian FFT patch (power of two).
    pub fft_size: usize,
    /// Stop the inner Neumann iteration at this sup-norm defect.
    pub neumann_tol: f64,
    pub neumann_max_iter: usize,
    /// Values n defining the exhaustion disks `|z| < 1 - 1/n`.
    pub exhaustion_levels: Vec<u32>,
    /// Stop the outer self-consistency loop at this sup-norm step.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            fft_size: 256,
            neumann_tol: 1e-10,
            neumann_max_iter: 400,
            exhaustion_levels: vec![2, 4, 8, 16, 32, 64],
            picard_tol: 1e-6,
            picard_max_iter: 40,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 8 {
            return Err(Error::Domain(format!("fft_size {} is not a power of two >= 8", self.fft_size)));
        }
        if self.neumann_tol <= 0.0 || self.picard_tol <= 0.0 {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if self.exhaustion_levels.windows(2).any(|w| w[1] <= w[0]) || self.exhaustion_levels.is_empty() {
            return Err(Error::Domain("exhaustion_levels must be nonempty strictly increasing".into()));
        }
        Ok(())
    }
}

/// Per-stage iteration record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub label: String,
    pub iterations: usize,
    /// Sup-norm defect per iteration.
    pub residuals: Vec<f64>,
    /// Sup-difference to the previous stage on reference disks (exhaustion).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage_differences: Vec<f64>,
}

/// Outcome summary for a solve; serializes to JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub stages: Vec<StageReport>,
    /// Achieved images of the pinned boundary points, as (re, im) pairs.
    pub normalization: Vec<[f64; 2]>,
    /// Image of the origin (reported, not pinned).
    pub origin_image: [f64; 2],
    /// Sup of | |f| - 1 | on the boundary circle, when applicable.
    pub circle_invariance: Option<f64>,
    pub converged: bool,
}

impl SolveReport {
    pub fn single_stage(label: &str, residuals: Vec<f64>, converged: bool) -> Self {
        SolveReport {
            stages: vec![StageReport {
                label: label.to_string(),
                iterations: residuals.len(),
                residuals,
                stage_differences: Vec::new(),
            }],
            normalization: Vec::new(),
            origin_image: [0.0, 0.0],
            circle_invariance: None,
            converged,
        }
    }
}
