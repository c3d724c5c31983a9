//! Field evolution engines.
//!
//! [`spectral_step`] is the reference solution of the quartic equation: the
//! equation has constant coefficients, so multiplying the spectrum by
//! `exp(-i (k^2/2 + eps k^4/8) z)` is exact. The kernel convolution and the
//! first-order density are validated against it.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::{p_max, quartic_omega};
use crate::error::{Error, Result};
use crate::kernel::{closed_form_unchecked, first_order_bracket, fresnel_unchecked, validity_figure, VALIDITY_WARNING};
use crate::model::{require_nonnegative_epsilon, rms, ComplexField, GridSpec, PropagationParams};

mod scan;

pub use scan::{negativity_scan, negativity_scan_with, NegativityScan, ScanEntry, CORE_WINDOW_RMS, NEGATIVITY_FLOOR};

/// Power allowed above `0.9 k_nyq` before a spectral step refuses to run.
pub const ALIASING_THRESHOLD: f64 = 1e-8;
/// Power allowed at `|k| >= k0` before the one-way Helmholtz step refuses to run.
pub const EVANESCENT_THRESHOLD: f64 = 1e-8;
/// Edge amplitude (relative to the peak) tolerated by the kernel convolution.
pub const EDGE_LEAK_THRESHOLD: f64 = 1e-8;
/// Grids at least this large are convolved through the kernel's transform.
pub const DIRECT_CONVOLUTION_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SpectralQuartic,
    AngularSpectrumFphe,
    KernelConvolution,
    FirstOrderDensity,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SpectralQuartic => "spectral",
            Method::AngularSpectrumFphe => "fphe",
            Method::KernelConvolution => "kernel",
            Method::FirstOrderDensity => "density",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub field: ComplexField,
    pub z: f64,
    pub method: Method,
    /// Named scalars such as `norm_drift` and `band_occupancy_above_p_max`.
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl PropagationResult {
    fn new(field: ComplexField, z: f64, method: Method) -> Self {
        Self { field, z, method, diagnostics: BTreeMap::new(), warnings: Vec::new() }
    }

    fn diag(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.to_string(), value);
    }

    fn record_norms(&mut self, input: &ComplexField) {
        let n_in = input.norm_sq();
        let n_out = self.field.norm_sq();
        self.diag("norm_in", n_in);
        self.diag("norm_out", n_out);
        self.diag("norm_drift", if n_in > 0.0 { (n_out - n_in).abs() / n_in } else { 0.0 });
    }
}

fn check_distance(z: f64, strict: bool) -> Result<()> {
    let ok = z.is_finite() && if strict { z > 0.0 } else { z >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!("propagation distance must be {}, got {z}", if strict { "> 0" } else { ">= 0" })))
    }
}

fn band_occupancy(psi: &ComplexField, epsilon: f64) -> Option<f64> {
    if epsilon > 0.0 {
        let bound = p_max(epsilon).ok()?;
        Some(psi.to_spectral().power_fraction_above(bound))
    } else {
        None
    }
}

/// Exact evolution of the quartic equation over distance `z`.
pub fn spectral_step(psi: &ComplexField, z: f64, params: &PropagationParams) -> Result<PropagationResult> {
    check_distance(z, false)?;
    params.require_propagating()?;
    let eps = params.epsilon;
    let mut spec = psi.to_spectral();
    let fraction = spec.power_fraction_above(0.9 * psi.grid().k_nyquist());
    if fraction > ALIASING_THRESHOLD {
        return Err(Error::Aliasing { fraction, threshold: ALIASING_THRESHOLD });
    }
    spec.apply(|k| Complex64::from_polar(1.0, -quartic_omega(k, eps) * z));
    let mut out = PropagationResult::new(spec.to_field(), z, Method::SpectralQuartic);
    out.record_norms(psi);
    out.diag("spectral_power_above_0.9_nyquist", fraction);
    if let Some(occ) = band_occupancy(psi, eps) {
        out.diag("band_occupancy_above_p_max", occ);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Carrier {
    /// Full field, including the on-axis phase `exp(i k0 z)`.
    #[default]
    Keep,
    /// Envelope only: the carrier phase is divided out.
    Remove,
}

/// One-way Helmholtz (angular spectrum) step with multiplier
/// `exp(i sqrt(k0^2 - k^2) z)`. Components at `|k| >= k0` are dropped.
pub fn fphe_step(psi: &ComplexField, z: f64, k0: f64, carrier: Carrier) -> Result<PropagationResult> {
    check_distance(z, false)?;
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::domain(format!("k0 must be positive, got {k0}")));
    }
    let mut spec = psi.to_spectral();
    let total: f64 = spec.values().iter().map(|v| v.norm_sqr()).sum();
    let evanescent: f64 = spec
        .values()
        .iter()
        .enumerate()
        .filter(|(m, _)| spec.grid().k(*m).abs() >= k0)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    let fraction = if total > 0.0 { evanescent / total } else { 0.0 };
    if fraction > EVANESCENT_THRESHOLD {
        return Err(Error::Evanescent { fraction, threshold: EVANESCENT_THRESHOLD });
    }
    let shift = match carrier {
        Carrier::Keep => 0.0,
        Carrier::Remove => k0,
    };
    spec.apply(|k| {
        if k.abs() >= k0 {
            Complex64::new(0.0, 0.0)
        } else {
            let kz = ((k0 - k) * (k0 + k)).sqrt();
            Complex64::from_polar(1.0, (kz - shift) * z)
        }
    });
    let mut out = PropagationResult::new(spec.to_field(), z, Method::AngularSpectrumFphe);
    out.record_norms(psi);
    out.diag("evanescent_power_dropped", fraction);
    Ok(out)
}

/// Relative L2 gap between the carrier-free one-way Helmholtz field and the
/// quartic spectral field.
///
/// Positions are read in units where the quartic coefficient becomes
/// `eps = 1/k0^2`; a normalized distance `z` then corresponds to a Helmholtz
/// distance `k0 z`.
pub fn fphe_envelope_deviation(psi: &ComplexField, z: f64, k0: f64) -> Result<f64> {
    let params = PropagationParams::direct(1.0 / (k0 * k0), k0)?;
    let quartic = spectral_step(psi, z, &params)?;
    let helmholtz = fphe_step(psi, k0 * z, k0, Carrier::Remove)?;
    Ok(helmholtz.field.l2_distance(&quartic.field) / psi.norm_sq().sqrt())
}

fn check_edges(psi: &ComplexField) -> Result<()> {
    let v = psi.values();
    let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(());
    }
    let edge = v[0].norm().max(v[v.len() - 1].norm());
    if edge > EDGE_LEAK_THRESHOLD * peak {
        return Err(Error::config(format!(
            "field reaches the grid edges ({:.3e} of peak); widen the grid for kernel convolution",
            edge / peak
        )));
    }
    Ok(())
}

/// `out(x_i) = sum_j w_j K(x_i - x_j) in(x_j) dx` with trapezoidal weights.
fn convolve_direct(input: &[Complex64], grid: &GridSpec, kernel: impl Fn(f64) -> Complex64 + Sync) -> Vec<Complex64> {
    let n = input.len();
    let dx = grid.dx();
    // kernel depends only on the index offset i - j in [-(n-1), n-1]
    let table: Vec<Complex64> = (0..2 * n - 1).map(|m| kernel((m as f64 - (n - 1) as f64) * dx)).collect();
    let weighted: Vec<Complex64> = input
        .iter()
        .enumerate()
        .map(|(j, v)| if j == 0 || j == n - 1 { v * (0.5 * dx) } else { v * dx })
        .collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &table[i..i + n];
            // row[n - 1 - j] holds K((i - j) dx)
            weighted.iter().enumerate().map(|(j, w)| row[n - 1 - j] * w).sum()
        })
        .collect()
}

/// Fresnel-propagated field and the coefficient of `eps` in the first-order
/// kernel convolution, so that the kernel output is `psi0 + eps psi1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderComponents {
    pub psi0: ComplexField,
    pub psi1: ComplexField,
    pub z: f64,
}

impl FirstOrderComponents {
    pub fn compute(psi: &ComplexField, z: f64) -> Result<Self> {
        check_distance(z, true)?;
        check_edges(psi)?;
        let grid = *psi.grid();
        let (v0, v1) = if grid.n() < DIRECT_CONVOLUTION_LIMIT {
            let v0 = convolve_direct(psi.values(), &grid, |d| fresnel_unchecked(d, z));
            let v1 = convolve_direct(psi.values(), &grid, |d| fresnel_unchecked(d, z) * first_order_bracket(d, z));
            (v0, v1)
        } else {
            // transform of the first-order kernel: (1 - i eps z k^4/8) exp(-i k^2 z/2)
            let spec = psi.to_spectral();
            let mut s0 = spec.clone();
            s0.apply(|k| Complex64::from_polar(1.0, -0.5 * k * k * z));
            let mut s1 = spec;
            s1.apply(|k| Complex64::from_polar(0.125 * z * k.powi(4), -0.5 * k * k * z - std::f64::consts::FRAC_PI_2));
            (s0.to_field().into_values(), s1.to_field().into_values())
        };
        Ok(Self { psi0: ComplexField::new(grid, v0)?, psi1: ComplexField::new(grid, v1)?, z })
    }

    pub fn field(&self, epsilon: f64) -> ComplexField {
        let v = self.psi0.values().iter().zip(self.psi1.values()).map(|(a, b)| a + b * epsilon).collect();
        ComplexField::new(*self.psi0.grid(), v).expect("same grid")
    }

    /// `|psi0|^2 + 2 eps Re(conj(psi0) psi1)`; may be negative.
    pub fn density(&self, epsilon: f64) -> Vec<f64> {
        self.psi0
            .values()
            .iter()
            .zip(self.psi1.values())
            .map(|(a, b)| a.norm_sqr() + 2.0 * epsilon * (a.conj() * b).re)
            .collect()
    }
}

fn convolution_validity(psi: &ComplexField, z: f64, epsilon: f64) -> f64 {
    let spread = rms(psi).unwrap_or(0.0);
    validity_figure(spread, z, epsilon)
}

/// Propagation by the closed-form first-order kernel.
///
/// Below [`DIRECT_CONVOLUTION_LIMIT`] samples the integral is evaluated
/// directly; larger grids use the analytic transform of the kernel.
pub fn kernel_convolve(psi: &ComplexField, z: f64, epsilon: f64) -> Result<PropagationResult> {
    check_distance(z, true)?;
    require_nonnegative_epsilon(epsilon)?;
    check_edges(psi)?;
    let grid = *psi.grid();
    let field = if grid.n() < DIRECT_CONVOLUTION_LIMIT {
        let v = convolve_direct(psi.values(), &grid, |d| closed_form_unchecked(d, z, epsilon));
        ComplexField::new(grid, v)?
    } else {
        FirstOrderComponents::compute(psi, z)?.field(epsilon)
    };
    let mut out = PropagationResult::new(field, z, Method::KernelConvolution);
    out.record_norms(psi);
    let validity = convolution_validity(psi, z, epsilon);
    out.diag("validity", validity);
    if validity > VALIDITY_WARNING {
        out.warnings.push(format!(
            "first-order kernel outside its perturbative range: eps max(1, rms^4)/z^3 = {validity:.3e} > {VALIDITY_WARNING}"
        ));
    }
    if let Some(occ) = band_occupancy(psi, epsilon) {
        out.diag("band_occupancy_above_p_max", occ);
    }
    Ok(out)
}

/// First-order density on the grid of the input field.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityResult {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub z: f64,
    pub epsilon: f64,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl DensityResult {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }
}

/// Density of the kernel-propagated field truncated at first order in `eps`.
pub fn first_order_density(psi: &ComplexField, z: f64, epsilon: f64) -> Result<DensityResult> {
    require_nonnegative_epsilon(epsilon)?;
    let parts = FirstOrderComponents::compute(psi, z)?;
    let values = parts.density(epsilon);
    let mut out = DensityResult {
        grid: *psi.grid(),
        values,
        z,
        epsilon,
        diagnostics: BTreeMap::new(),
        warnings: Vec::new(),
    };
    let min = out.min();
    let integral = out.integral();
    out.diagnostics.insert("min_density".into(), min);
    out.diagnostics.insert("integral".into(), integral);
    let validity = convolution_validity(psi, z, epsilon);
    out.diagnostics.insert("validity".into(), validity);
    if validity > VALIDITY_WARNING {
        out.warnings.push(format!("first-order kernel outside its perturbative range (validity {validity:.3e})"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gaussian_packet;
    use std::f64::consts::PI;

    fn plane_wave(grid: GridSpec, k: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x)).unwrap()
    }

    fn params(eps: f64) -> PropagationParams {
        PropagationParams::direct(eps, 1.0).unwrap()
    }

    #[test]
    fn spectral_plane_wave_phases() {
        // dk = 1, so k = 1 is a grid mode
        let grid = GridSpec::new(64, 0.0, 2.0 * PI).unwrap();
        let psi = plane_wave(grid, 1.0);
        let out = spectral_step(&psi, PI, &params(0.0)).unwrap();
        for (a, b) in psi.values().iter().zip(out.field.values()) {
            assert!((b - a * Complex64::new(0.0, -1.0)).norm() < 1e-12);
        }
        let out = spectral_step(&psi, PI, &params(8.0)).unwrap();
        for (a, b) in psi.values().iter().zip(out.field.values()) {
            assert!((b - a * Complex64::new(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_zero_distance_is_identity() {
        let grid = GridSpec::centered(256, 20.0).unwrap();
        let psi = gaussian_packet(&grid, 1.5, 1.0, 0.5).unwrap();
        let out = spectral_step(&psi, 0.0, &params(0.3)).unwrap();
        assert!(out.field.l2_distance(&psi) < 1e-14);
    }

    #[test]
    fn spectral_rejects_aliasing_and_bad_input() {
        let grid = GridSpec::new(64, 0.0, 2.0 * PI).unwrap();
        let psi = plane_wave(grid, 31.0);
        assert!(matches!(spectral_step(&psi, 1.0, &params(0.0)), Err(Error::Aliasing { .. })));
        let psi = plane_wave(grid, 1.0);
        assert!(spectral_step(&psi, -1.0, &params(0.0)).is_err());
        assert!(spectral_step(&psi, 1.0, &params(-0.1)).is_err());
    }

    #[test]
    fn spectral_reports_band_occupancy() {
        let grid = GridSpec::centered(1024, 40.0).unwrap();
        let psi = gaussian_packet(&grid, 0.3, 0.0, 0.0).unwrap();
        let out = spectral_step(&psi, 1.0, &params(5.0)).unwrap();
        let occ = out.diagnostics["band_occupancy_above_p_max"];
        assert!(occ > 0.0 && occ < 1.0);
        assert!(out.diagnostics["norm_drift"] < 1e-12);
    }

    #[test]
    fn fphe_plane_wave_phases() {
        let grid = GridSpec::new(64, 0.0, 2.0 * PI).unwrap();
        let k0 = 10.0;
        let psi = plane_wave(grid, 0.0);
        let out = fphe_step(&psi, 0.7, k0, Carrier::Keep).unwrap();
        assert!((out.field.values()[5] - Complex64::from_polar(1.0, k0 * 0.7)).norm() < 1e-12);

        // k = 0.6 k0 with k0 = 10 on a grid with dk = 1
        let psi = plane_wave(grid, 6.0);
        let out = fphe_step(&psi, 0.1, k0, Carrier::Keep).unwrap();
        for (a, b) in psi.values().iter().zip(out.field.values()) {
            assert!((b - a * Complex64::from_polar(1.0, 0.8)).norm() < 1e-12);
        }
    }

    #[test]
    fn fphe_refuses_evanescent_content() {
        let grid = GridSpec::new(64, 0.0, 2.0 * PI).unwrap();
        let psi = plane_wave(grid, 3.0);
        assert!(matches!(fphe_step(&psi, 1.0, 2.0, Carrier::Keep), Err(Error::Evanescent { .. })));
    }

    #[test]
    fn fphe_deviation_follows_sixth_power_of_spectral_width() {
        let grid = GridSpec::centered(2048, 100.0).unwrap();
        let k0 = 2.0;
        let dev: Vec<f64> = [2.0, 4.0]
            .iter()
            .map(|&s| {
                let psi = gaussian_packet(&grid, s, 0.0, 0.0).unwrap();
                fphe_envelope_deviation(&psi, 1.0, k0).unwrap()
            })
            .collect();
        let slope = (dev[1] / dev[0]).log2();
        assert!((slope + 6.0).abs() < 0.3, "slope {slope}, {dev:?}");
    }

    #[test]
    fn kernel_convolution_fresnel_limit() {
        let grid = GridSpec::centered(1024, 40.0).unwrap();
        let psi = gaussian_packet(&grid, 2.0, 0.0, 0.0).unwrap();
        let a = kernel_convolve(&psi, 1.0, 0.0).unwrap();
        let b = spectral_step(&psi, 1.0, &params(0.0)).unwrap();
        assert!(a.field.l2_distance(&b.field) < 1e-6);
    }

    #[test]
    fn fast_path_agrees_with_direct_convolution() {
        let psi_small = gaussian_packet(&GridSpec::centered(2048, 30.0).unwrap(), 1.0, 0.5, 0.3).unwrap();
        let psi_large = gaussian_packet(&GridSpec::centered(4096, 60.0).unwrap(), 1.0, 0.5, 0.3).unwrap();
        let a = kernel_convolve(&psi_small, 1.0, 0.05).unwrap();
        let b = kernel_convolve(&psi_large, 1.0, 0.05).unwrap();
        // same spacing; the small grid is the centre of the large one
        for i in 0..2048 {
            assert!((a.field.values()[i] - b.field.values()[i + 1024]).norm() < 1e-10, "{i}");
        }
    }

    #[test]
    fn kernel_convolution_checks() {
        let grid = GridSpec::centered(256, 5.0).unwrap();
        let psi = gaussian_packet(&grid, 0.5, 0.0, 0.0).unwrap();
        assert!(kernel_convolve(&psi, 0.0, 0.1).is_err());
        assert!(kernel_convolve(&psi, 1.0, -0.1).is_err());
        let wide = ComplexField::from_fn(grid, |x| Complex64::new((-x * x / 8.0).exp(), 0.0)).unwrap();
        assert!(matches!(kernel_convolve(&wide, 1.0, 0.1), Err(Error::Config(_))));
        let out = kernel_convolve(&psi, 1e-2, 0.1).unwrap();
        assert!(!out.warnings.is_empty());
        let out = kernel_convolve(&psi, 1.0, 1e-3).unwrap();
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn density_at_zero_epsilon_is_fresnel_intensity() {
        let grid = GridSpec::centered(1024, 20.0).unwrap();
        let psi = gaussian_packet(&grid, 1.0 / 2f64.sqrt(), 0.0, 0.0).unwrap();
        let d = first_order_density(&psi, 1.0, 0.0).unwrap();
        let f = spectral_step(&psi, 1.0, &params(0.0)).unwrap();
        for (a, b) in d.values.iter().zip(f.field.values()) {
            assert!((a - b.norm_sqr()).abs() < 1e-9);
            assert!(*a >= 0.0);
        }
    }

    #[test]
    fn density_conserves_probability_at_first_order() {
        let grid = GridSpec::centered(1024, 20.0).unwrap();
        let psi = gaussian_packet(&grid, 1.0 / 2f64.sqrt(), 0.0, 0.0).unwrap();
        for eps in [0.1, 1.0, 5.0] {
            let d = first_order_density(&psi, 1.0, eps).unwrap();
            assert!((d.integral() - 1.0).abs() < 1e-9, "{eps}: {}", d.integral());
        }
    }

    #[test]
    fn density_sign_around_the_threshold() {
        let grid = GridSpec::centered(1024, 20.0).unwrap();
        let psi = gaussian_packet(&grid, 1.0 / 2f64.sqrt(), 0.0, 0.0).unwrap();
        let small = first_order_density(&psi, 1.0, 0.5).unwrap();
        let peak = small.values.iter().copied().fold(0.0, f64::max);
        assert!(small.min() > -1e-12 * peak);
        let large = first_order_density(&psi, 1.0, 5.0).unwrap();
        assert!(large.min() < 0.0);
        assert!(!large.warnings.is_empty());
    }
}
