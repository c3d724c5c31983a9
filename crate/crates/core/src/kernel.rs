//! Path-integral propagator of the quartic equation
//! `i dK/dt + (1/2) d2K/dx2 - (eps/8) d4K/dx4 = 0`.
//!
//! The closed form is the first-order expansion in `eps`,
//!
//! ```text
//! K = (2 pi i t)^(-1/2) exp(i dx^2 / 2t) [1 + 3 i eps / 8t - 3 eps dx^2 / 4t^2 - i eps dx^4 / 8t^3]
//! ```
//!
//! which equals `K0 - (i eps t / 8) d4K0/dx4` for the Fresnel kernel `K0`. The
//! quadrature route evaluates the spectral integral of the short-time kernel
//! directly and is therefore exact in `eps` up to truncation and sampling.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use num_complex::Complex64;

use crate::dispersion::{p_max, quartic_omega};
use crate::error::{Error, Result};

/// Closed-form evaluations with a validity figure above this are flagged.
pub const VALIDITY_WARNING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    ClosedForm,
    Quadrature,
    Fresnel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub x1: f64,
    pub x2: f64,
    pub dt: f64,
    pub epsilon: f64,
    pub method: KernelMethod,
}

impl KernelQuery {
    pub fn new(x1: f64, x2: f64, dt: f64, epsilon: f64, method: KernelMethod) -> Self {
        Self { x1, x2, dt, epsilon, method }
    }

    pub fn delta_x(&self) -> f64 {
        self.x2 - self.x1
    }

    fn check(&self) -> Result<()> {
        check_interval(self.dt)?;
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::domain(format!("kernel needs epsilon >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub query: KernelQuery,
    /// Perturbative figure of merit `eps max(1, dx^4) / dt^3`.
    pub validity: f64,
}

impl KernelValue {
    pub fn is_trustworthy(&self) -> bool {
        self.validity <= VALIDITY_WARNING
    }
}

fn check_interval(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("propagation interval must be positive, got {dt}")))
    }
}

pub fn validity_figure(delta_x: f64, dt: f64, epsilon: f64) -> f64 {
    let d4 = delta_x.powi(4);
    epsilon * d4.max(1.0) / (dt * dt * dt)
}

/// `(2 pi i dt)^(-1/2) exp(i dx^2 / 2dt)` on the principal branch, no checks.
#[inline]
pub(crate) fn fresnel_unchecked(delta_x: f64, dt: f64) -> Complex64 {
    let amp = (2.0 * PI * dt).sqrt().recip();
    Complex64::from_polar(amp, delta_x * delta_x / (2.0 * dt) - FRAC_PI_4)
}

/// Bracket of the closed form divided by `eps`:
/// `3i/8t - 3 dx^2/4t^2 - i dx^4/8t^3`.
#[inline]
pub(crate) fn first_order_bracket(delta_x: f64, dt: f64) -> Complex64 {
    let d2 = delta_x * delta_x;
    let t2 = dt * dt;
    Complex64::new(-0.75 * d2 / t2, 0.375 / dt - 0.125 * d2 * d2 / (t2 * dt))
}

#[inline]
pub(crate) fn closed_form_unchecked(delta_x: f64, dt: f64, epsilon: f64) -> Complex64 {
    let bracket = Complex64::new(1.0, 0.0) + first_order_bracket(delta_x, dt) * epsilon;
    fresnel_unchecked(delta_x, dt) * bracket
}

pub fn fresnel_kernel(x1: f64, x2: f64, dt: f64) -> Result<Complex64> {
    check_interval(dt)?;
    Ok(fresnel_unchecked(x2 - x1, dt))
}

pub fn kernel_closed_form(q: &KernelQuery) -> Result<KernelValue> {
    q.check()?;
    let dx = q.delta_x();
    Ok(KernelValue {
        value: closed_form_unchecked(dx, q.dt, q.epsilon),
        query: *q,
        validity: validity_figure(dx, q.dt, q.epsilon),
    })
}

/// Dispatches on `q.method`; quadrature uses [`QuadratureOptions::default`].
pub fn evaluate(q: &KernelQuery) -> Result<KernelValue> {
    match q.method {
        KernelMethod::ClosedForm => kernel_closed_form(q),
        KernelMethod::Quadrature => kernel_quadrature(q, &QuadratureOptions::default()),
        KernelMethod::Fresnel => Ok(KernelValue {
            value: fresnel_kernel(q.x1, q.x2, q.dt)?,
            query: *q,
            validity: 0.0,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Half-width of the integration band; `None` picks [`default_band`].
    pub band: Option<f64>,
    /// Starting number of Simpson intervals (at least 256).
    pub n_quad: usize,
    /// Absolute tolerance on the change under doubling of `n_quad`.
    pub tol: f64,
    /// How many times `n_quad` may be doubled before giving up.
    pub max_doublings: u32,
    /// Fraction of the band covered by the cosine taper.
    pub taper: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { band: None, n_quad: 1 << 12, tol: 1e-9, max_doublings: 10, taper: 0.25 }
    }
}

/// Band for the short-time integral: `4 p_max(eps)` for `eps > 0`, widened to
/// the Fresnel rule `max(40/sqrt(dt), 10 |dx|/dt)` when that is larger.
pub fn default_band(delta_x: f64, dt: f64, epsilon: f64) -> f64 {
    let fresnel = (40.0 / dt.sqrt()).max(10.0 * delta_x.abs() / dt);
    if epsilon > 0.0 {
        let bound = 4.0 * p_max(epsilon).unwrap_or(f64::INFINITY);
        bound.max(fresnel)
    } else {
        fresnel
    }
}

fn taper_weight(k: f64, band: f64, taper: f64) -> f64 {
    let flat = (1.0 - taper) * band;
    let a = k.abs();
    if a <= flat {
        1.0
    } else if a >= band {
        0.0
    } else {
        0.5 * (1.0 + (PI * (a - flat) / (band - flat)).cos())
    }
}

fn simpson_kernel(delta_x: f64, dt: f64, epsilon: f64, band: f64, taper: f64, n: usize) -> Complex64 {
    let h = 2.0 * band / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=n {
        let k = -band + j as f64 * h;
        let w = taper_weight(k, band, taper);
        if w == 0.0 {
            continue;
        }
        let coef = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let phase = k * delta_x - quartic_omega(k, epsilon) * dt;
        acc += Complex64::from_polar(coef * w, phase);
    }
    acc * (h / 3.0) / (2.0 * PI)
}

/// `int exp(i k dx) exp(-i (k^2/2 + eps k^4/8) dt) dk / 2pi` over a tapered band.
pub fn kernel_quadrature(q: &KernelQuery, opts: &QuadratureOptions) -> Result<KernelValue> {
    q.check()?;
    if opts.n_quad < 256 {
        return Err(Error::config(format!("n_quad must be >= 256, got {}", opts.n_quad)));
    }
    if !(opts.taper > 0.0 && opts.taper <= 1.0) {
        return Err(Error::config(format!("taper fraction must be in (0, 1], got {}", opts.taper)));
    }
    let dx = q.delta_x();
    let band = opts.band.unwrap_or_else(|| default_band(dx, q.dt, q.epsilon));
    if !(band > 0.0 && band.is_finite()) {
        return Err(Error::config(format!("band must be positive, got {band}")));
    }
    let mut n = opts.n_quad + opts.n_quad % 2;
    let mut prev = simpson_kernel(dx, q.dt, q.epsilon, band, opts.taper, n);
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        n *= 2;
        let next = simpson_kernel(dx, q.dt, q.epsilon, band, opts.taper, n);
        change = (next - prev).norm();
        prev = next;
        if change <= opts.tol {
            return Ok(KernelValue {
                value: prev,
                query: *q,
                validity: validity_figure(dx, q.dt, q.epsilon),
            });
        }
    }
    Err(Error::NonConvergence { change, tol: opts.tol })
}

/// First-order intensity `(1 - 3 eps dx^2 / 2dz^2) / (2 pi dz)`; negative beyond
/// [`positivity_radius`].
pub fn intensity_first_order(x1: f64, x2: f64, dz: f64, epsilon: f64) -> Result<f64> {
    check_interval(dz)?;
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("intensity needs epsilon >= 0, got {epsilon}")));
    }
    let dx = x2 - x1;
    Ok((1.0 - 1.5 * epsilon * dx * dx / (dz * dz)) / (2.0 * PI * dz))
}

/// Largest `|dx|` with non-negative first-order intensity: `dz p_max(eps)`.
pub fn positivity_radius(dz: f64, epsilon: f64) -> Result<f64> {
    check_interval(dz)?;
    Ok(dz * p_max(epsilon)?)
}

/// Finite-difference steps for [`pde_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub h_x: f64,
    pub h_t: f64,
}

impl Default for FdSteps {
    /// The 7-point fourth-derivative stencil divides by `h_x^4`; at `h_x = 1e-3`
    /// its rounding floor is comparable to the `eps^2` signal at `eps = 1e-3`.
    fn default() -> Self {
        Self { h_x: 5e-3, h_t: 1e-3 }
    }
}

/// Complex residual `R / |K|` of the propagation equation applied to the
/// closed-form kernel, using central differences (second order in `t`,
/// fourth order in `x`).
pub fn pde_residual_complex(q: &KernelQuery, steps: FdSteps) -> Result<Complex64> {
    q.check()?;
    let FdSteps { h_x, h_t } = steps;
    if !(h_x > 0.0 && h_t > 0.0) {
        return Err(Error::config("finite-difference steps must be positive"));
    }
    if !(q.dt > 2.0 * h_t) {
        return Err(Error::config(format!(
            "time step {h_t} too large for interval {} (need dt > 2 h_t)",
            q.dt
        )));
    }
    if h_x > 0.1 {
        return Err(Error::config(format!("spatial step {h_x} too coarse for the 7-point stencil")));
    }
    let eps = q.epsilon;
    let x = q.delta_x();
    let t = q.dt;
    let k = |dx: f64, dt: f64| closed_form_unchecked(dx, dt, eps);
    let kx = |j: i32| k(x + j as f64 * h_x, t);

    let dt_k = (k(x, t + h_t) - k(x, t - h_t)) / (2.0 * h_t);
    let d2 = (-kx(2) + kx(1) * 16.0 - kx(0) * 30.0 + kx(-1) * 16.0 - kx(-2)) / (12.0 * h_x * h_x);
    let d4 = (-kx(3) + kx(2) * 12.0 - kx(1) * 39.0 + kx(0) * 56.0 - kx(-1) * 39.0 + kx(-2) * 12.0
        - kx(-3))
        / (6.0 * h_x.powi(4));
    let r = Complex64::i() * dt_k + d2 * 0.5 - d4 * (eps / 8.0);
    Ok(r / kx(0).norm())
}

/// `|R| / |K|` for the closed-form kernel.
pub fn pde_residual(q: &KernelQuery, steps: FdSteps) -> Result<f64> {
    pde_residual_complex(q, steps).map(|r| r.norm())
}

/// `int K(x2, t1 + t2; x, t1) K(x, t1; x1, 0) dx` for the closed-form kernel.
///
/// The integrand is entire in `x` with a Gaussian chirp envelope, so the line
/// is rotated through `e^{i pi/8}` about the chirp centre; there it decays
/// like a real Gaussian and the trapezoidal rule converges geometrically.
pub fn compose_closed_form(x1: f64, x2: f64, t1: f64, t2: f64, epsilon: f64) -> Result<Complex64> {
    check_interval(t1)?;
    check_interval(t2)?;
    // stationary point of (x2 - x)^2/2t2 + (x - x1)^2/2t1
    let centre = (x2 * t1 + x1 * t2) / (t1 + t2);
    let curvature = 0.5 * (1.0 / t1 + 1.0 / t2);
    let decay = curvature * FRAC_PI_4.sin();
    // polynomial prefactors grow at most like s^8
    let half_width = (60.0 / decay).sqrt() + 2.0;
    let n = 4096;
    let h = 2.0 * half_width / n as f64;
    let dir = Complex64::from_polar(1.0, FRAC_PI_8);

    let kernel = |dx: Complex64, dt: f64| -> Complex64 {
        let amp = Complex64::from_polar((2.0 * PI * dt).sqrt().recip(), -FRAC_PI_4);
        let d2 = dx * dx;
        let chirp = (Complex64::i() * d2 / (2.0 * dt)).exp();
        let bracket = Complex64::new(1.0, 0.375 * epsilon / dt) - d2 * (0.75 * epsilon / (dt * dt))
            - Complex64::i() * d2 * d2 * (0.125 * epsilon / (dt * dt * dt));
        amp * chirp * bracket
    };

    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=n {
        let s = -half_width + j as f64 * h;
        let x = Complex64::new(centre, 0.0) + dir * s;
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        acc += kernel(Complex64::new(x2, 0.0) - x, t2) * kernel(x - x1, t1) * w;
    }
    Ok(acc * dir * h)
}
