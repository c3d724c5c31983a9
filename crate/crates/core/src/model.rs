//! Domain types in normalized units (hbar = m = c = 1, so the kernel's
//! effective time is the propagation coordinate z).
//!
//! Fourier convention: `psi~(k) = int psi(x) exp(-i k x) dx`, inverse carrying
//! the `1/2pi` measure. Grids are uniform with a power-of-two sample count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Where a value of epsilon came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Origin {
    /// Spatial beam: `epsilon = 1 / (k0 Zd)` with `Zd` the diffraction length.
    Spatial { zd: f64 },
    /// Temporal pulse: `epsilon = -beta4 / (3 beta2 T0^2)`.
    Temporal { beta2: f64, beta4: f64, t0: f64 },
    Direct,
}

/// Normalized quartic-dispersion constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    pub epsilon: f64,
    pub k0: f64,
    pub origin: Origin,
}

impl PropagationParams {
    pub fn direct(epsilon: f64, k0: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::domain(format!("epsilon must be finite, got {epsilon}")));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::domain(format!("k0 must be positive, got {k0}")));
        }
        Ok(Self { epsilon, k0, origin: Origin::Direct })
    }

    pub fn spatial(k0: f64, zd: f64) -> Result<Self> {
        let epsilon = epsilon_from_spatial(k0, zd)?;
        Ok(Self { epsilon, k0, origin: Origin::Spatial { zd } })
    }

    pub fn temporal(k0: f64, beta2: f64, beta4: f64, t0: f64) -> Result<Self> {
        let epsilon = epsilon_from_temporal(beta2, beta4, t0)?;
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::domain(format!("k0 must be positive, got {k0}")));
        }
        Ok(Self { epsilon, k0, origin: Origin::Temporal { beta2, beta4, t0 } })
    }

    /// Propagation and bound operations need a non-negative epsilon.
    pub fn require_propagating(&self) -> Result<()> {
        require_nonnegative_epsilon(self.epsilon)
    }
}

pub(crate) fn require_nonnegative_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "propagation requires finite epsilon >= 0, got {epsilon}"
        )))
    }
}

pub fn epsilon_from_spatial(k0: f64, zd: f64) -> Result<f64> {
    if !(k0 > 0.0 && zd > 0.0) || !(k0 * zd).is_finite() {
        return Err(Error::domain(format!("need k0 > 0 and Zd > 0, got k0={k0}, Zd={zd}")));
    }
    Ok(1.0 / (k0 * zd))
}

pub fn epsilon_from_temporal(beta2: f64, beta4: f64, t0: f64) -> Result<f64> {
    if beta2 == 0.0 || !beta2.is_finite() {
        return Err(Error::domain("beta2 must be finite and non-zero"));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::domain(format!("T0 must be positive, got {t0}")));
    }
    if !beta4.is_finite() {
        return Err(Error::domain("beta4 must be finite"));
    }
    Ok(-beta4 / (3.0 * beta2 * t0 * t0))
}

/// GUP deformation parameter matched to the quartic coefficient: `beta = epsilon / 8`.
pub fn beta_from_epsilon(params: &PropagationParams) -> f64 {
    params.epsilon / 8.0
}

/// Minimal length `sqrt(beta)` (hbar = 1).
pub fn minimal_length(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(beta.sqrt())
}

/// Uniform sampling of `[x_min, x_max)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    x_min: f64,
    x_max: f64,
}

impl GridSpec {
    pub fn new(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::config(format!("grid size must be a power of two >= 8, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::config(format!("invalid grid bounds [{x_min}, {x_max})")));
        }
        Ok(Self { n, x_min, x_max })
    }

    /// Grid centred on the origin: `[-half_width, half_width)`.
    pub fn centered(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, -half_width, half_width)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    pub fn k_nyquist(&self) -> f64 {
        PI / self.dx()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Wavenumber of FFT bin `m` (standard FFT ordering, negative half last).
    pub fn k(&self, m: usize) -> f64 {
        let n = self.n as isize;
        let m = m as isize;
        let signed = if m < n / 2 { m } else { m - n };
        signed as f64 * self.dk()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.k(m)).collect()
    }
}

/// Sampled complex envelope on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::config(format!(
                "field has {} samples but grid expects {}",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::domain("field contains non-finite samples"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `sum |psi|^2 dx`
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Discrete L2 distance `sqrt(sum |a - b|^2 dx)`.
    pub fn l2_distance(&self, other: &ComplexField) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "grids differ");
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn to_spectral(&self) -> SpectralField {
        let n = self.grid.n();
        let mut buf = self.values.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let dx = self.grid.dx();
        let x_min = self.grid.x_min();
        for (m, v) in buf.iter_mut().enumerate() {
            let k = self.grid.k(m);
            *v *= Complex64::from_polar(dx, -k * x_min);
        }
        SpectralField { grid: self.grid, values: buf }
    }
}

/// Fourier dual of a [`ComplexField`], stored in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// `sum |psi~|^2 dk`
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dk()
    }

    /// Fraction of spectral power at `|k| > k_cut`.
    pub fn power_fraction_above(&self, k_cut: f64) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let above: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(m, _)| self.grid.k(*m).abs() > k_cut)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        above / total
    }

    /// Multiplies each bin by `symbol(k)`.
    pub fn apply(&mut self, symbol: impl Fn(f64) -> Complex64) {
        let grid = self.grid;
        for (m, v) in self.values.iter_mut().enumerate() {
            *v *= symbol(grid.k(m));
        }
    }

    pub fn to_field(&self) -> ComplexField {
        let n = self.grid.n();
        let x_min = self.grid.x_min();
        let scale = 1.0 / (n as f64 * self.grid.dx());
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .enumerate()
            .map(|(m, v)| v * Complex64::from_polar(scale, self.grid.k(m) * x_min))
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        ComplexField { grid: self.grid, values: buf }
    }
}

/// Normalized Gaussian packet whose density has standard deviation `sigma`:
/// `(2 pi sigma^2)^(-1/4) exp(-(x-x0)^2 / (4 sigma^2)) exp(i k (x-x0))`.
pub fn gaussian_packet(grid: &GridSpec, sigma: f64, x0: f64, k_carrier: f64) -> Result<ComplexField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!("sigma must be positive, got {sigma}")));
    }
    if sigma < 3.0 * grid.dx() {
        return Err(Error::config(format!(
            "sigma = {sigma} is under-resolved on dx = {} (need sigma >= 3 dx)",
            grid.dx()
        )));
    }
    if k_carrier.abs() >= grid.k_nyquist() {
        return Err(Error::config(format!(
            "carrier {k_carrier} at or above Nyquist {}",
            grid.k_nyquist()
        )));
    }
    // amplitude at the nearest edge must be below 1e-5 of the peak
    let edge = (x0 - grid.x_min()).min(grid.x_max() - x0);
    if edge < sigma * (4.0 * 1e5_f64.ln()).sqrt() {
        return Err(Error::config(format!(
            "packet at x0 = {x0} with sigma = {sigma} is truncated by the grid edges"
        )));
    }
    let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
    ComplexField::from_fn(*grid, |x| {
        let d = x - x0;
        Complex64::from_polar(amp * (-d * d / (4.0 * sigma * sigma)).exp(), k_carrier * d)
    })
}

/// Centroid `<x>` of the normalized density.
pub fn centroid(field: &ComplexField) -> Result<f64> {
    let (w, m1, _) = moments(field)?;
    Ok(m1 / w)
}

/// Standard deviation of `x` under the density `|psi|^2 / norm^2`.
pub fn rms(field: &ComplexField) -> Result<f64> {
    let (w, m1, m2) = moments(field)?;
    let mean = m1 / w;
    let var = m2 / w - mean * mean;
    Ok(var.max(0.0).sqrt())
}

fn moments(field: &ComplexField) -> Result<(f64, f64, f64)> {
    let grid = field.grid();
    let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, v) in field.values().iter().enumerate() {
        let p = v.norm_sqr();
        let x = grid.x(i);
        w += p;
        m1 += p * x;
        m2 += p * x * x;
    }
    if !(w > 0.0) {
        return Err(Error::domain("field has zero norm"));
    }
    Ok((w, m1, m2))
}
