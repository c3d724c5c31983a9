//! Dispersion relations: the exact Helmholtz branch, its quartic truncation,
//! the momentum/wavelength bounds and the roots of the quartic mode equation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Forward Helmholtz wavenumber `+sqrt(k0^2 - kx^2)`. Evanescent `|kx| >= k0` is refused.
pub fn exact_kz(kx: f64, k0: f64) -> Result<f64> {
    if !(k0 > 0.0) {
        return Err(Error::domain(format!("k0 must be positive, got {k0}")));
    }
    if !(kx.abs() < k0) {
        return Err(Error::BandLimit { kx, k0 });
    }
    Ok(((k0 - kx) * (k0 + kx)).sqrt())
}

/// Evolution symbol of the quartic propagation equation, `kx^2/2 + eps kx^4/8`.
#[inline]
pub fn quartic_omega(kx: f64, epsilon: f64) -> f64 {
    let k2 = kx * kx;
    0.5 * k2 + 0.125 * epsilon * k2 * k2
}

/// Residual of the fourth-order Taylor expansion of [`exact_kz`].
pub fn truncation_error(kx: f64, k0: f64) -> Result<f64> {
    let kz = exact_kz(kx, k0)?;
    let u = (kx / k0) * (kx / k0);
    let truncated = k0 * (1.0 - 0.5 * u - 0.125 * u * u);
    Ok((kz - truncated).abs())
}

/// How to treat the undeformed limit `eps -> 0` where no momentum bound exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroLimit {
    #[default]
    Error,
    Infinity,
}

/// Maximum transverse momentum `sqrt(2 / (3 eps))`.
pub fn p_max(epsilon: f64) -> Result<f64> {
    p_max_with(epsilon, ZeroLimit::Error)
}

pub fn p_max_with(epsilon: f64, limit: ZeroLimit) -> Result<f64> {
    if epsilon == 0.0 && limit == ZeroLimit::Infinity {
        return Ok(f64::INFINITY);
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("momentum bound needs epsilon > 0, got {epsilon}")));
    }
    Ok((2.0 / (3.0 * epsilon)).sqrt())
}

/// Minimal wavelength `sqrt(6 pi^2 / (k0^3 Zd))`.
pub fn lambda_min(k0: f64, zd: f64) -> Result<f64> {
    if !(k0 > 0.0 && zd > 0.0) {
        return Err(Error::domain(format!("need k0 > 0 and Zd > 0, got k0={k0}, Zd={zd}")));
    }
    Ok((6.0 * PI * PI / (k0 * k0 * k0 * zd)).sqrt())
}

/// Wavelength corresponding to a momentum through `p = 2 pi / (k0 lambda)`.
pub fn wavelength_for_momentum(p: f64, k0: f64) -> f64 {
    2.0 * PI / (k0 * p)
}

/// The four roots of `(eps/8) l^4 - l^2/2 - E = 0`, grouped by branch.
///
/// `oscillatory` comes from `l^2 = 2(1 - sqrt(1 + 2 eps E)) / eps` and reduces to
/// `+-i sqrt(2E)` as `eps -> 0`; `evanescent` comes from the `+` sign and grows
/// like `+-2/sqrt(eps)`. Each pair is stored as `(+root, -root)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRoots {
    pub oscillatory: (Complex64, Complex64),
    pub evanescent: (Complex64, Complex64),
    pub energy: f64,
    pub epsilon: f64,
}

impl ModeRoots {
    pub fn all(&self) -> [Complex64; 4] {
        [self.oscillatory.0, self.oscillatory.1, self.evanescent.0, self.evanescent.1]
    }

    /// `|(eps/8) l^4 - l^2/2 - E|`
    pub fn residual(&self, root: Complex64) -> f64 {
        let l2 = root * root;
        (l2 * l2 * (self.epsilon / 8.0) - l2 * 0.5 - self.energy).norm()
    }

    /// Wavenumber of the oscillatory pair (imaginary part of the `+` root).
    pub fn oscillatory_wavenumber(&self) -> f64 {
        self.oscillatory.0.im
    }

    /// Growth rate of the evanescent pair (real part of the `+` root).
    pub fn evanescent_rate(&self) -> f64 {
        self.evanescent.0.re
    }
}

pub fn mode_roots(energy: f64, epsilon: f64) -> Result<ModeRoots> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("mode roots need epsilon > 0, got {epsilon}")));
    }
    if !energy.is_finite() {
        return Err(Error::domain("energy must be finite"));
    }
    let disc = 1.0 + 2.0 * epsilon * energy;
    if disc < 0.0 {
        return Err(Error::NoRealBranch(disc));
    }
    let s = disc.sqrt();
    // 1 - s cancels for small eps E; use the conjugate form
    let mu_minus = -4.0 * energy / (1.0 + s);
    let mu_plus = 2.0 * (1.0 + s) / epsilon;
    let osc = Complex64::new(mu_minus, 0.0).sqrt();
    let ev = Complex64::new(mu_plus, 0.0).sqrt();
    Ok(ModeRoots {
        oscillatory: (osc, -osc),
        evanescent: (ev, -ev),
        energy,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kz_examples() {
        assert_eq!(exact_kz(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(exact_kz(0.6, 1.0).unwrap(), 0.8, max_relative = 1e-15);
        assert!(matches!(exact_kz(1.0, 1.0), Err(Error::BandLimit { .. })));
        assert!(matches!(exact_kz(-1.5, 1.0), Err(Error::BandLimit { .. })));
    }

    #[test]
    fn omega_examples() {
        assert_eq!(quartic_omega(0.0, 3.0), 0.0);
        assert_eq!(quartic_omega(1.0, 0.0), 0.5);
        assert_relative_eq!(quartic_omega(2.0, 0.1), 2.2, max_relative = 1e-15);
    }

    /// Series of sqrt(1-u): 1 - u/2 - u^2/8 - u^3/16 - 5u^4/128 - 7u^5/256 - ...
    fn series_remainder(u: f64) -> f64 {
        // binomial coefficients of sqrt(1-u) from order 3 upward
        let mut c = -1.0 / 16.0;
        let mut term = u * u * u;
        let mut sum = 0.0;
        for j in 3..60 {
            sum += c * term;
            c *= (j as f64 - 0.5) / (j as f64 + 1.0);
            term *= u;
        }
        -sum
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_error(0.0, 1.0).unwrap(), 0.0);
        let e = truncation_error(0.1, 1.0).unwrap();
        assert_relative_eq!(e, 1e-6 / 16.0, max_relative = 0.01);
        assert_relative_eq!(e, series_remainder(0.01), max_relative = 1e-6);
        let e = truncation_error(0.5, 1.0).unwrap();
        assert_relative_eq!(e, series_remainder(0.25), max_relative = 1e-9);
        assert_relative_eq!(e, 1.162_096_2e-3, max_relative = 1e-6);
        assert!(truncation_error(2.0, 1.0).is_err());
    }

    #[test]
    fn truncation_scales_as_sixth_power() {
        let a = truncation_error(0.02, 1.0).unwrap();
        let b = truncation_error(0.04, 1.0).unwrap();
        assert_relative_eq!((b / a).log2(), 6.0, epsilon = 0.01);
    }

    #[test]
    fn bounds() {
        assert_relative_eq!(p_max(2.0 / 3.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(p_max(0.06).unwrap(), 10.0 / 3.0, max_relative = 1e-14);
        assert!(p_max(0.0).is_err());
        assert!(p_max(-1.0).is_err());
        assert_eq!(p_max_with(0.0, ZeroLimit::Infinity).unwrap(), f64::INFINITY);
        assert!(p_max(1e-3).unwrap() > p_max(1e-2).unwrap());

        assert_relative_eq!(lambda_min(1.0, 6.0 * PI * PI).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(lambda_min(1.0, 1.0).unwrap(), PI * 6f64.sqrt(), max_relative = 1e-15);
        let (k0, zd) = (2.0, 3.0);
        let via_p = wavelength_for_momentum(p_max(1.0 / (k0 * zd)).unwrap(), k0);
        assert_relative_eq!(via_p, lambda_min(k0, zd).unwrap(), max_relative = 1e-12);
        assert!(lambda_min(0.0, 1.0).is_err());
    }

    #[test]
    fn roots_small_epsilon() {
        let r = mode_roots(0.5, 0.01).unwrap();
        let k = r.oscillatory_wavenumber();
        assert_relative_eq!(k, 0.998_755_436_740_05, max_relative = 1e-13);
        assert!(r.oscillatory.0.re.abs() == 0.0);
        // first-order formula k(1 - eps k^2/8) with k = sqrt(2E) = 1
        let approx = 1.0 - 0.01 / 8.0;
        assert!((k - approx).abs() < 6e-6);
        assert_relative_eq!(r.evanescent_rate(), 20.024_922_282_556, max_relative = 1e-12);
        for root in r.all() {
            assert!(r.residual(root) < 1e-10);
        }
        assert_eq!(r.oscillatory.1, -r.oscillatory.0);
        assert_eq!(r.evanescent.1, -r.evanescent.0);
    }

    #[test]
    fn roots_zero_energy() {
        let r = mode_roots(0.0, 1.0).unwrap();
        assert_eq!(r.oscillatory.0, Complex64::new(0.0, 0.0));
        assert_relative_eq!(r.evanescent_rate(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn roots_errors() {
        assert!(mode_roots(0.5, 0.0).is_err());
        assert!(matches!(mode_roots(-1.0, 1.0), Err(Error::NoRealBranch(_))));
        // negative energy inside the real branch keeps the minus branch labelled oscillatory
        let r = mode_roots(-0.2, 1.0).unwrap();
        assert!(r.oscillatory.0.norm() < r.evanescent.0.norm());
        for root in r.all() {
            assert!(r.residual(root) < 1e-12);
        }
    }
}
