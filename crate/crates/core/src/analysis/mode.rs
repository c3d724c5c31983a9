use num_complex::Complex64;

use crate::dispersion::mode_roots;
use crate::error::{Error, Result};
use crate::model::{ComplexField, GridSpec};

/// Relations imposed on the coefficients `(A, B, C, D)` of
/// `A e^{i q x} + B e^{-i q x} + C e^{r x} + D e^{-r x}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeConstraint {
    /// `A = C = 0`
    Incoming,
    /// `B = D = 0`
    Outgoing,
    /// `A = -C`, `B = -D`
    Constrained,
    /// No relation; used for standing-wave controls.
    Free,
}

/// Which exponents `q`, `r` to use when sampling a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exponents {
    /// `q = k (1 - eps k^2/8)`, `r = 2/sqrt(eps)`.
    #[default]
    Approximate,
    /// Exact roots of `(eps/8) l^4 - l^2/2 - E = 0`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    /// Spectral parameter `E`; `k = sqrt(2E)` at leading order.
    pub energy: f64,
    pub k: f64,
    pub epsilon: f64,
    pub constraint: ModeConstraint,
}

fn same(x: Complex64, y: Complex64) -> bool {
    (x - y).norm() <= 1e-14 * (1.0 + x.norm().max(y.norm()))
}

impl ModeSolution {
    /// Mode with wavenumber `k` (so `E = k^2/2`). Coefficients must satisfy `constraint`.
    pub fn new(constraint: ModeConstraint, coeffs: [Complex64; 4], k: f64, epsilon: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::domain(format!("mode wavenumber must be >= 0, got {k}")));
        }
        Self::build(constraint, coeffs, 0.5 * k * k, k, epsilon)
    }

    /// Mode labelled by `E` (so `k = sqrt(2E)`).
    pub fn from_energy(constraint: ModeConstraint, coeffs: [Complex64; 4], energy: f64, epsilon: f64) -> Result<Self> {
        if !(energy >= 0.0 && energy.is_finite()) {
            return Err(Error::domain(format!("mode energy must be >= 0, got {energy}")));
        }
        Self::build(constraint, coeffs, energy, (2.0 * energy).sqrt(), epsilon)
    }

    /// Mode whose exact oscillatory wavenumber is `q`: `E = q^2/2 + eps q^4/8`.
    pub fn with_exact_wavenumber(constraint: ModeConstraint, coeffs: [Complex64; 4], q: f64, epsilon: f64) -> Result<Self> {
        let q2 = q * q;
        Self::from_energy(constraint, coeffs, 0.5 * q2 + 0.125 * epsilon * q2 * q2, epsilon)
    }

    /// Constrained mode with `C = -A`, `D = -B`.
    pub fn constrained(a: Complex64, b: Complex64, k: f64, epsilon: f64) -> Result<Self> {
        Self::new(ModeConstraint::Constrained, [a, b, -a, -b], k, epsilon)
    }

    fn build(constraint: ModeConstraint, coeffs: [Complex64; 4], energy: f64, k: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::domain(format!("modes need epsilon > 0, got {epsilon}")));
        }
        let [a, b, c, d] = coeffs;
        let zero = Complex64::new(0.0, 0.0);
        let ok = match constraint {
            ModeConstraint::Incoming => a == zero && c == zero,
            ModeConstraint::Outgoing => b == zero && d == zero,
            ModeConstraint::Constrained => same(a, -c) && same(b, -d),
            ModeConstraint::Free => true,
        };
        if !ok {
            return Err(Error::config(format!("coefficients violate the {constraint:?} constraint")));
        }
        Ok(Self { a, b, c, d, energy, k, epsilon, constraint })
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `|A|^2 + |B|^2 + |C|^2 + |D|^2`
    pub fn weight(&self) -> f64 {
        self.coefficients().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn has_evanescent_terms(&self) -> bool {
        self.c.norm() > 0.0 || self.d.norm() > 0.0
    }

    /// `(q, r)`: oscillatory wavenumber and evanescent rate.
    pub fn exponents(&self, which: Exponents) -> Result<(f64, f64)> {
        match which {
            Exponents::Approximate => {
                Ok((self.k * (1.0 - self.epsilon * self.k * self.k / 8.0), 2.0 / self.epsilon.sqrt()))
            }
            Exponents::Exact => {
                let roots = mode_roots(self.energy, self.epsilon)?;
                Ok((roots.oscillatory_wavenumber(), roots.evanescent_rate()))
            }
        }
    }

    /// `psi(x)` at `z = 0`.
    pub fn sample(&self, x: f64, q: f64, r: f64) -> Complex64 {
        let osc = Complex64::from_polar(1.0, q * x);
        let mut v = self.a * osc + self.b * osc.conj();
        // Skip absent terms: exp(r x) may overflow where it carries no weight.
        if self.c != Complex64::new(0.0, 0.0) {
            v += self.c * (r * x).exp();
        }
        if self.d != Complex64::new(0.0, 0.0) {
            v += self.d * (-r * x).exp();
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BuildOptions {
    pub exponents: Exponents,
    /// Apply the common phase `exp(-i E z)` at this `z`.
    pub z: Option<f64>,
}

/// Largest tolerated `|exp(+-r x)|` on the grid.
pub const OVERFLOW_GUARD: f64 = 1e8;

pub fn build_mode(mode: &ModeSolution, grid: &GridSpec, opts: BuildOptions) -> Result<ComplexField> {
    let (q, r) = mode.exponents(opts.exponents)?;
    if mode.has_evanescent_terms() {
        let reach = grid.x_min().abs().max(grid.x_max().abs());
        if r * reach > OVERFLOW_GUARD.ln() {
            return Err(Error::config(format!(
                "evanescent terms reach exp({:.1}) on the grid; limit |x| to {:.4}",
                r * reach,
                OVERFLOW_GUARD.ln() / r
            )));
        }
    }
    let phase = opts.z.map(|z| Complex64::from_polar(1.0, -mode.energy * z));
    ComplexField::from_fn(*grid, |x| {
        let v = mode.sample(x, q, r);
        phase.map_or(v, |p| v * p)
    })
}
