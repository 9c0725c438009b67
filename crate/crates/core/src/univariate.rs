//! All roots of a univariate complex polynomial by Aberth–Ehrlich iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-13;
/// Leading coefficients below this fraction of the largest are dropped.
pub const LEADING_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateRoots {
    /// Roots with repetition; empty when the effective degree is zero.
    pub roots: Vec<Complex64>,
    pub effective_degree: usize,
    /// Number of leading coefficients discarded as numerically zero.
    pub truncated: usize,
    pub converged: bool,
}

impl UnivariateRoots {
    pub fn no_roots(&self) -> bool {
        self.effective_degree == 0
    }
}

/// Value and derivative by Horner's rule; `coeffs[k]` multiplies `s^k`.
pub fn horner(coeffs: &[Complex64], s: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * s + p;
        p = p * s + c;
    }
    (p, dp)
}

fn initial_radius(coeffs: &[Complex64]) -> f64 {
    let d = coeffs.len() - 1;
    let lead = coeffs[d].norm();
    let c0 = coeffs[0].norm();
    if c0 > 0.0 {
        return (c0 / lead).powf(1.0 / d as f64);
    }
    // Fujiwara-type bound when zero is a root.
    let bound = (1..=d)
        .map(|k| (coeffs[d - k].norm() / lead).powf(1.0 / k as f64))
        .fold(0.0, f64::max);
    if bound > 0.0 {
        bound / 2.0
    } else {
        1.0
    }
}

/// Finds all `d` roots of `sum_k coeffs[k] s^k`.
pub fn solve_univariate(coeffs: &[Complex64]) -> Result<UnivariateRoots> {
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if coeffs.is_empty() || max == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    if !max.is_finite() {
        return Err(Error::NonFinite);
    }
    let d = coeffs
        .iter()
        .rposition(|c| c.norm() >= LEADING_TOL * max)
        .expect("some coefficient attains the maximum");
    let truncated = coeffs.len() - 1 - d;
    if d == 0 {
        return Ok(UnivariateRoots { roots: Vec::new(), effective_degree: 0, truncated, converged: true });
    }
    let coeffs = &coeffs[..=d];
    let center = -coeffs[d - 1] / (coeffs[d] * d as f64);
    let radius = initial_radius(coeffs);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / d as f64 + 0.4;
            // Perturbed circle breaks symmetric stalls.
            let r = radius * (1.0 + 0.01 * k as f64 / d as f64);
            center + Complex64::from_polar(r, theta)
        })
        .collect();

    let abs_coeffs: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
    let mut done = vec![false; d];
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut all_small = true;
        for k in 0..d {
            if done[k] {
                continue;
            }
            let (p, dp) = horner(coeffs, z[k]);
            // Value indistinguishable from rounding error of the evaluation.
            let r = z[k].norm();
            let noise = 4.0 * f64::EPSILON * abs_coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c);
            if p.norm() <= noise {
                done[k] = true;
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..d)
                .filter(|&j| j != k)
                .map(|j| Complex64::new(1.0, 0.0) / (z[k] - z[j]))
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !(w.re.is_finite() && w.im.is_finite()) {
                all_small = false;
                continue;
            }
            z[k] -= w;
            if w.norm() >= STEP_TOL * (1.0 + z[k].norm()) {
                all_small = false;
            } else {
                done[k] = true;
            }
        }
        if all_small {
            converged = true;
            break;
        }
    }
    Ok(UnivariateRoots { roots: z, effective_degree: d, truncated, converged })
}
