use std::f64::consts::PI;

use num_complex::Complex64;

use super::mode::{build_mode, BuildOptions, Exponents, ModeSolution};
use crate::error::{Error, Result};
use crate::model::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopDirection {
    XLoop,
    ZLoop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerryResult {
    pub direction: LoopDirection,
    pub phase: f64,
    /// Normalization constant (z loops only).
    pub alpha: Option<f64>,
    /// Mode number (z loops only).
    pub n: Option<u32>,
    /// Circumference `2 pi L` of an x loop, or the period `T` of a z loop.
    pub loop_length: f64,
    /// Loop integral of `|psi|^2` (x loops) or `|A|^2+|B|^2+|C|^2+|D|^2` (z loops).
    pub norm_sq: f64,
    pub tolerance: f64,
    /// Set when the mode is outside the class for which the phase is expected to vanish.
    pub nontrivial: bool,
}

/// Phase accumulated around the periodic x loop `[0, 2 pi L)`.
///
/// Returns the momentum expectation `-i loop-int psi* dpsi/dx dx`, computed
/// with spectral differentiation. The loop integral `i loop-int psi* dpsi/dx`
/// is its negative. Modes with evanescent terms or a wavenumber not
/// commensurate with the loop are rejected.
pub fn berry_phase_x(mode: &ModeSolution, circumference_l: f64, exponents: Exponents) -> Result<BerryResult> {
    if !(circumference_l > 0.0 && circumference_l.is_finite()) {
        return Err(Error::domain(format!("loop radius L must be positive, got {circumference_l}")));
    }
    if mode.has_evanescent_terms() {
        return Err(Error::Inadmissible("evanescent terms are not periodic on the loop".into()));
    }
    let (q, _) = mode.exponents(exponents)?;
    let winding = q * circumference_l;
    let m = winding.round();
    if (winding - m).abs() > 1e-9 * winding.abs().max(1.0) {
        return Err(Error::Inadmissible(format!(
            "wavenumber {q} gives {winding} windings on the loop; periodicity needs an integer"
        )));
    }
    let loop_length = 2.0 * PI * circumference_l;
    let n = (4 * m.abs() as usize + 16).next_power_of_two().max(64);
    let grid = GridSpec::new(n, 0.0, loop_length)?;
    let psi = build_mode(mode, &grid, BuildOptions { exponents, z: None })?;

    let mut spec = psi.to_spectral();
    spec.apply(|k| Complex64::new(0.0, k));
    let dpsi = spec.to_field();
    let dx = grid.dx();
    let overlap: Complex64 = psi.values().iter().zip(dpsi.values()).map(|(p, d)| p.conj() * d).sum::<Complex64>() * dx;
    let momentum = (-Complex64::i() * overlap).re;
    let norm_sq = psi.norm_sq();

    let real_representable = (mode.a.norm() - mode.b.norm()).abs() <= 1e-12 * (mode.a.norm() + mode.b.norm()).max(1e-300);
    Ok(BerryResult {
        direction: LoopDirection::XLoop,
        phase: momentum,
        alpha: None,
        n: None,
        loop_length,
        norm_sq,
        tolerance: 1e-10 * norm_sq.max(f64::MIN_POSITIVE),
        nontrivial: !real_representable,
    })
}

/// Phase accumulated around one period `T` of z: `alpha E T` with `E = 2 pi n / T`.
pub fn berry_phase_z(mode: &ModeSolution, period: f64, alpha: f64, n: u32) -> Result<BerryResult> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::domain(format!("period must be positive, got {period}")));
    }
    if !alpha.is_finite() {
        return Err(Error::domain("alpha must be finite"));
    }
    let omega = 2.0 * PI / period;
    let energy = n as f64 * omega;
    let phase = alpha * energy * period;
    let quantum = 2.0 * PI * alpha;
    if quantum != 0.0 {
        let ratio = phase / quantum;
        if (ratio - ratio.round()).abs() > 1e-12 * ratio.abs().max(1.0) {
            return Err(Error::domain(format!("z-loop phase {phase} is not a multiple of 2 pi alpha")));
        }
    }
    Ok(BerryResult {
        direction: LoopDirection::ZLoop,
        phase,
        alpha: Some(alpha),
        n: Some(n),
        loop_length: period,
        norm_sq: mode.weight(),
        tolerance: 4.0 * f64::EPSILON * phase.abs(),
        nontrivial: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ModeConstraint;

    fn free(a: Complex64, b: Complex64, q: f64, eps: f64) -> ModeSolution {
        ModeSolution::with_exact_wavenumber(ModeConstraint::Free, [a, b, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)], q, eps)
            .unwrap()
    }

    #[test]
    fn standing_wave_is_trivial() {
        let l = 1.5;
        let m = free(Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0), 2.0 / l, 0.1);
        let r = berry_phase_x(&m, l, Exponents::Exact).unwrap();
        assert!(r.phase.abs() < 1e-10 * r.norm_sq);
        assert!(!r.nontrivial);
    }

    #[test]
    fn running_wave_measures_momentum() {
        let l = 2.0;
        let q = 3.0 / l;
        let m = free(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), q, 0.05);
        let r = berry_phase_x(&m, l, Exponents::Exact).unwrap();
        assert!((r.phase - q * r.norm_sq).abs() < 1e-10);
        assert!((r.norm_sq - 2.0 * PI * l).abs() < 1e-12);
        assert!(r.nontrivial);
    }

    #[test]
    fn zero_field() {
        let m = free(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 1.0, 0.1);
        let r = berry_phase_x(&m, 1.0, Exponents::Exact).unwrap();
        assert_eq!(r.phase, 0.0);
    }

    #[test]
    fn inadmissible_modes_are_rejected() {
        let m = free(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 1.3, 0.1);
        assert!(matches!(berry_phase_x(&m, 1.0, Exponents::Exact), Err(Error::Inadmissible(_))));
        let m = ModeSolution::constrained(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 1.0, 0.1).unwrap();
        assert!(matches!(berry_phase_x(&m, 1.0, Exponents::Exact), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn z_loop_examples() {
        let m = free(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 1.0, 0.1);
        assert_eq!(berry_phase_z(&m, 2.0, 1.0, 0).unwrap().phase, 0.0);
        for t in [0.3, 1.0, 7.5] {
            let r = berry_phase_z(&m, t, 1.0, 3).unwrap();
            assert!((r.phase - 6.0 * PI).abs() <= 4.0 * f64::EPSILON * 6.0 * PI);
        }
        let r = berry_phase_z(&m, 1.0, 0.5, 2).unwrap();
        assert!((r.phase - 2.0 * PI).abs() <= 1e-15);
        assert!(berry_phase_z(&m, 0.0, 1.0, 1).is_err());
    }
}
