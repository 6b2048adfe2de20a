//! Adaptive quadrature used by the growth and modulus machinery.
//!
//! A fixed 15-point Gauss-Legendre rule is refined by bisection until the
//! two-half refinement agrees with the parent interval to the requested
//! relative tolerance.

use crate::error::{Error, Result};

const GAUSS_N: usize = 15;

/// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton iteration
/// on the Legendre polynomial. Runtime cost is negligible and avoids copying
/// tabulated constants.
fn gauss_rule() -> &'static [(f64, f64); GAUSS_N] {
    use std::sync::OnceLock;
    static RULE: OnceLock<[(f64, f64); GAUSS_N]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_N;
        let mut rule = [(0.0, 0.0); GAUSS_N];
        for i in 0..n {
            // Initial guess (Abramowitz-Stegun style).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Evaluate P_n and P_n' by recurrence.
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule[i] = (x, w);
        }
        rule
    })
}

fn gauss_segment(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in gauss_rule().iter() {
        acc += w * f(c + h * x);
    }
    acc * h
}

/// Adaptive integration of `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// Integrable endpoint singularities are handled by the bisection stack; if
/// the refinement budget is exhausted the partial value is reported through
/// [`Error::Quadrature`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut total = 0.0f64;
    // (a, b, coarse_value, depth)
    let coarse = gauss_segment(&mut f, a, b);
    let mut stack = vec![(a, b, coarse, 0u32)];
    let scale = coarse.abs().max(1e-300);
    let max_depth = 48;
    let mut exhausted = false;
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gauss_segment(&mut f, lo, mid);
        let right = gauss_segment(&mut f, mid, hi);
        let fine = left + right;
        let err = (fine - coarse).abs();
        if err <= rel_tol * (scale + total.abs() + fine.abs()) || depth >= max_depth {
            if depth >= max_depth && err > 1e3 * rel_tol * (scale + fine.abs()) {
                exhausted = true;
            }
            total += fine;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    if exhausted {
        return Err(Error::Quadrature {
            partial: total,
            context: format!("refinement budget exhausted on [{a}, {b}]"),
        });
    }
    Ok(total)
}
