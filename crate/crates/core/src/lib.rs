//! Quartic-dispersion (non-paraxial) propagation through three routes that
//! check each other: the exact spectral symbol, the closed-form first-order
//! path-integral kernel, and direct quadrature of the short-time kernel.
//! Also houses the momentum/wavelength bounds, the instanton of the quartic
//! action and Berry-phase loop integrals of the quartic modes.

pub mod analysis;
pub mod dispersion;
pub mod error;
pub mod kernel;
pub mod model;
pub mod propagate;

pub use error::{Error, Result};
pub use model::{ComplexField, GridSpec, Origin, PropagationParams, SpectralField};
