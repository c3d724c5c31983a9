//! Scan of the first-order density of a Gaussian packet over eps, looking
//! for the smallest eps at which the density turns negative.

use rayon::prelude::*;

use super::FirstOrderComponents;
use crate::error::{Error, Result};
use crate::model::{centroid, gaussian_packet, rms, GridSpec};

/// A density counts as negative when its minimum lies below
/// `-NEGATIVITY_FLOOR * max |psi0|^2`. Far tails of the propagated packet sit
/// at the rounding level of the transform, where a sign is meaningless.
pub const NEGATIVITY_FLOOR: f64 = 1e-12;

/// Half-width of the core window, in units of the propagated packet's RMS.
pub const CORE_WINDOW_RMS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanEntry {
    pub epsilon: f64,
    pub min_density: f64,
    /// Position of the minimum.
    pub argmin_x: f64,
    pub negative: bool,
    /// Negative inside the core window around the packet centre.
    pub core_negative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativityScan {
    pub sigma: f64,
    pub z: f64,
    pub entries: Vec<ScanEntry>,
    /// Smallest eps with negative density anywhere on the grid, refined by bisection.
    pub threshold: Option<f64>,
    /// Same, restricted to the core window.
    pub core_threshold: Option<f64>,
    /// Whether the minimum density is non-increasing along the eps grid.
    pub monotone: bool,
    pub resolution: f64,
    /// Peak of the Fresnel density, the scale for [`NEGATIVITY_FLOOR`].
    pub peak_density: f64,
    pub core_half_width: f64,
}

struct Probe<'a> {
    parts: &'a FirstOrderComponents,
    positions: Vec<f64>,
    floor: f64,
    core: (f64, f64),
}

impl Probe<'_> {
    fn evaluate(&self, epsilon: f64) -> ScanEntry {
        let rho = self.parts.density(epsilon);
        let (mut min, mut arg) = (f64::INFINITY, 0.0);
        let mut core_min = f64::INFINITY;
        for (x, r) in self.positions.iter().zip(&rho) {
            if *r < min {
                min = *r;
                arg = *x;
            }
            if (self.core.0..=self.core.1).contains(x) {
                core_min = core_min.min(*r);
            }
        }
        ScanEntry {
            epsilon,
            min_density: min,
            argmin_x: arg,
            negative: min < -self.floor,
            core_negative: core_min < -self.floor,
        }
    }

    /// Refines the crossing inside `(lo, hi]`, where `hi` is known negative.
    fn bisect(&self, mut lo: f64, mut hi: f64, resolution: f64, core: bool) -> f64 {
        while hi - lo > resolution {
            let mid = 0.5 * (lo + hi);
            let e = self.evaluate(mid);
            let neg = if core { e.core_negative } else { e.negative };
            if neg {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

pub fn negativity_scan(sigma: f64, z: f64, eps_grid: &[f64], grid: &GridSpec) -> Result<NegativityScan> {
    negativity_scan_with(sigma, z, eps_grid, grid, 1e-3)
}

/// As [`negativity_scan`] with an explicit bisection resolution.
pub fn negativity_scan_with(
    sigma: f64,
    z: f64,
    eps_grid: &[f64],
    grid: &GridSpec,
    resolution: f64,
) -> Result<NegativityScan> {
    if eps_grid.is_empty() {
        return Err(Error::config("eps grid is empty"));
    }
    if eps_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::config("eps grid must contain positive finite values"));
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("eps grid must be strictly ascending"));
    }
    if !(resolution > 0.0) {
        return Err(Error::config("bisection resolution must be positive"));
    }
    let centre = 0.5 * (grid.x_min() + grid.x_max());
    let psi = gaussian_packet(grid, sigma, centre, 0.0)?;
    let parts = FirstOrderComponents::compute(&psi, z)?;

    let peak = parts.psi0.values().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let spread = rms(&parts.psi0)?;
    let mid = centroid(&parts.psi0)?;
    let half = CORE_WINDOW_RMS * spread;
    let probe = Probe {
        parts: &parts,
        positions: grid.positions(),
        floor: NEGATIVITY_FLOOR * peak,
        core: (mid - half, mid + half),
    };

    let entries: Vec<ScanEntry> = eps_grid.par_iter().map(|&e| probe.evaluate(e)).collect();
    let monotone = entries.windows(2).all(|w| w[1].min_density <= w[0].min_density);

    let refine = |core: bool| -> Option<f64> {
        let idx = entries.iter().position(|e| if core { e.core_negative } else { e.negative })?;
        let lo = if idx == 0 { 0.0 } else { entries[idx - 1].epsilon };
        Some(probe.bisect(lo, entries[idx].epsilon, resolution, core))
    };
    let threshold = refine(false);
    let core_threshold = refine(true);

    Ok(NegativityScan {
        sigma,
        z,
        entries,
        threshold,
        core_threshold,
        monotone,
        resolution,
        peak_density: peak,
        core_half_width: half,
    })
}
