//! Semi-classical and geometric-phase computations for the quartic system.
//!
//! The Euclidean action is kept with the sign `S_E = -int (v^2/2 + eps v^4/8) dtau`
//! and the path weight is `exp(S_E)`; the more common convention uses
//! `exp(-S_E)` with a positive-definite `S_E`. Both describe the same weight.

use num_complex::Complex64;

use crate::dispersion::p_max;
use crate::error::{Error, Result};

mod berry;
mod mode;

pub use berry::{berry_phase_x, berry_phase_z, BerryResult, LoopDirection};
pub use mode::{build_mode, BuildOptions, Exponents, ModeConstraint, ModeSolution};

const MIN_PATH_SAMPLES: usize = 16;

/// Second-order finite-difference velocities (central inside, one-sided at the ends).
fn velocities(path: &[f64], step: f64) -> Vec<f64> {
    let n = path.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * path[0] + 4.0 * path[1] - path[2]) / (2.0 * step)
            } else if i == n - 1 {
                (3.0 * path[n - 1] - 4.0 * path[n - 2] + path[n - 3]) / (2.0 * step)
            } else {
                (path[i + 1] - path[i - 1]) / (2.0 * step)
            }
        })
        .collect()
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    step * (inner + 0.5 * (values[0] + values[n - 1]))
}

fn check_path(path: &[f64], step: f64) -> Result<()> {
    if path.len() < MIN_PATH_SAMPLES {
        return Err(Error::config(format!(
            "path needs at least {MIN_PATH_SAMPLES} samples, got {}",
            path.len()
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::config(format!("sample spacing must be positive, got {step}")));
    }
    Ok(())
}

/// `S_E = -int (xdot^2/2 + eps xdot^4/8) dtau` for a path sampled every `step`.
pub fn euclidean_action(path: &[f64], step: f64, epsilon: f64) -> Result<f64> {
    check_path(path, step)?;
    let lagrangian: Vec<f64> = velocities(path, step)
        .into_iter()
        .map(|v| {
            let v2 = v * v;
            0.5 * v2 + 0.125 * epsilon * v2 * v2
        })
        .collect();
    Ok(-trapezoid(&lagrangian, step))
}

/// Real-time action `S = int (xdot^2/2 - eps xdot^4/8) dt`.
pub fn lorentzian_action(path: &[f64], step: f64, epsilon: f64) -> Result<f64> {
    check_path(path, step)?;
    let lagrangian: Vec<f64> = velocities(path, step)
        .into_iter()
        .map(|v| {
            let v2 = v * v;
            0.5 * v2 - 0.125 * epsilon * v2 * v2
        })
        .collect();
    Ok(trapezoid(&lagrangian, step))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantonResult {
    /// Euclidean velocity `dx/dtau`, purely imaginary.
    pub velocity: Complex64,
    /// Real momentum after rotating back to real time, `|velocity|`.
    pub momentum: f64,
    pub epsilon: f64,
    /// `|1 + (3 eps/2) velocity^2|`
    pub stationarity_residual: f64,
    /// `|momentum - p_max| / p_max`
    pub bound_gap: f64,
}

/// Solves `dp/dv = 1 + (3 eps/2) v^2 = 0` for the conserved momentum
/// `p(v) = v + (eps/2) v^3`, by Newton iteration seeded in the upper half plane.
fn degenerate_legendre_root(epsilon: f64) -> Complex64 {
    let f = |v: Complex64| Complex64::new(1.0, 0.0) + v * v * (1.5 * epsilon);
    let df = |v: Complex64| v * (3.0 * epsilon);
    let mut v = Complex64::new(0.0, 1.0);
    for _ in 0..200 {
        let step = f(v) / df(v);
        v -= step;
        if step.norm() <= 1e-16 * v.norm() {
            break;
        }
    }
    v
}

pub fn instanton(epsilon: f64) -> Result<InstantonResult> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("instanton needs epsilon > 0, got {epsilon}")));
    }
    let velocity = degenerate_legendre_root(epsilon);
    let stationarity_residual = (Complex64::new(1.0, 0.0) + velocity * velocity * (1.5 * epsilon)).norm();
    let momentum = velocity.norm();
    let bound = p_max(epsilon)?;
    let bound_gap = (momentum - bound).abs() / bound;
    if stationarity_residual > 1e-12 || bound_gap > 1e-12 {
        return Err(Error::domain(format!(
            "instanton root solve failed: residual {stationarity_residual:e}, bound gap {bound_gap:e}"
        )));
    }
    Ok(InstantonResult { velocity, momentum, epsilon, stationarity_residual, bound_gap })
}

/// Straight-line instanton `x(z) = p z` (c = 1) with `p` from [`instanton`].
pub fn instanton_trajectory(epsilon: f64, z_grid: &[f64]) -> Result<Vec<f64>> {
    let slope = instanton(epsilon)?.momentum;
    Ok(z_grid.iter().map(|z| slope * z).collect())
}
