//! Dry-run checks of a resolved configuration. Nothing is propagated; each
//! finding names the library module whose precondition it is.

use nonparaxial::kernel::{validity_figure, VALIDITY_WARNING};
use nonparaxial::model::gaussian_packet;
use nonparaxial::GridSpec;
use serde::Serialize;

use crate::config::{CommandKind, MethodKind, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Whether a problem lies in the inputs themselves or in a numerical
/// precondition (aliasing, evanescent content, missing real branch).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Config,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub module: &'static str,
    pub severity: Severity,
    pub category: Category,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub ok: bool,
    pub command: &'static str,
    pub issues: Vec<Issue>,
}

impl Report {
    pub fn errors(&self) -> Vec<String> {
        self.select(Severity::Error)
    }

    /// True when every error is a numerical precondition.
    pub fn only_numerical_errors(&self) -> bool {
        self.issues.iter().filter(|i| i.severity == Severity::Error).all(|i| i.category == Category::Numerical)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.select(Severity::Warning)
    }

    fn select(&self, severity: Severity) -> Vec<String> {
        self.issues
            .iter()
            .filter(|i| i.severity == severity)
            .map(|i| format!("[{}] {}", i.module, i.message))
            .collect()
    }
}

/// `sigma * margin` above which a Gaussian's spectral power beyond the margin
/// is below 1e-8: `exp(-2 sigma^2 d^2) < 1e-8`.
const GAUSSIAN_TAIL: f64 = 3.04;

struct Checker {
    issues: Vec<Issue>,
}

impl Checker {
    fn error(&mut self, module: &'static str, message: String) {
        self.issues.push(Issue { module, severity: Severity::Error, category: Category::Config, message });
    }

    fn numerical(&mut self, module: &'static str, message: String) {
        self.issues.push(Issue { module, severity: Severity::Error, category: Category::Numerical, message });
    }

    fn warn(&mut self, module: &'static str, message: String) {
        self.issues.push(Issue { module, severity: Severity::Warning, category: Category::Numerical, message });
    }
}

fn uses_grid(cfg: &RunConfig) -> bool {
    matches!(cfg.command, CommandKind::Propagate | CommandKind::Compare | CommandKind::ScanNegativity)
}

pub fn validate(cfg: &RunConfig) -> Report {
    let mut c = Checker { issues: Vec::new() };
    let cmd = cfg.command;

    if !(cfg.k0 > 0.0 && cfg.k0.is_finite()) {
        c.error("model", format!("k0 must be positive, got {}", cfg.k0));
    }
    for &e in &cfg.epsilon {
        if !e.is_finite() {
            c.error("model", format!("eps must be finite, got {e}"));
        } else if e < 0.0 {
            c.error("model", format!("negative eps rejected: {} assumes eps > 0 (eps = 0 is the Fresnel limit), got {e}", cmd.name()));
        } else if e == 0.0 {
            let owner = match cmd {
                CommandKind::Bounds | CommandKind::Modes => Some("dispersion"),
                CommandKind::Instanton | CommandKind::Berry => Some("analysis"),
                CommandKind::ScanNegativity => Some("propagate"),
                CommandKind::Propagate if cfg.method == MethodKind::Fphe => Some("propagate"),
                _ => None,
            };
            if let Some(module) = owner {
                c.error(module, format!("eps > 0 required for {}, got 0", cmd.name()));
            }
        }
    }
    if cmd == CommandKind::Propagate && cfg.epsilon.len() != 1 {
        c.error("model", format!("propagate takes a single eps, got {}", cfg.epsilon.len()));
    }
    if cmd == CommandKind::ScanNegativity && cfg.epsilon.windows(2).any(|w| w[1] <= w[0]) {
        c.error("propagate", "scan eps grid must be strictly ascending".into());
    }
    if cmd == CommandKind::Compare && cfg.epsilon.len() < 2 {
        c.warn("propagate", "a convergence slope needs at least two eps values".into());
    }

    let grid = if uses_grid(cfg) {
        match GridSpec::new(cfg.grid.n, cfg.grid.x_min, cfg.grid.x_max) {
            Ok(g) => Some(g),
            Err(e) => {
                c.error("model", e.to_string());
                None
            }
        }
    } else {
        None
    };
    let mut init = cfg.initial;
    if let Some(g) = grid {
        if cmd == CommandKind::ScanNegativity {
            // the scan always centres its packet
            init.x0 = 0.5 * (g.x_min() + g.x_max());
        }
        if let Err(e) = gaussian_packet(&g, init.sigma, init.x0, init.k_carrier) {
            c.error("model", e.to_string());
        } else {
            let margin = 0.9 * g.k_nyquist() - init.k_carrier.abs();
            if init.sigma * margin < GAUSSIAN_TAIL {
                c.numerical(
                    "propagate",
                    format!("spectrum reaches 0.9 of Nyquist ({:.3}); refine the grid", 0.9 * g.k_nyquist()),
                );
            }
        }
    }

    let needs_positive_z = match cmd {
        CommandKind::Propagate => matches!(cfg.method, MethodKind::Kernel | MethodKind::Density),
        CommandKind::Compare | CommandKind::ScanNegativity => true,
        _ => false,
    };
    if uses_grid(cfg) {
        for &z in &cfg.z {
            if !z.is_finite() || z < 0.0 || (needs_positive_z && z == 0.0) {
                let bound = if needs_positive_z { "> 0" } else { ">= 0" };
                c.error("propagate", format!("propagation distance must be {bound}, got {z}"));
            }
        }
    }

    let first_order = match cmd {
        CommandKind::Propagate => matches!(cfg.method, MethodKind::Kernel | MethodKind::Density),
        CommandKind::Compare | CommandKind::ScanNegativity => true,
        _ => false,
    };
    if first_order {
        if let Some(g) = grid {
            // the convolution needs |psi| < 1e-8 of its peak at both edges
            let edge = (init.x0 - g.x_min()).min(g.x_max() - init.x0);
            if edge < init.sigma * (4.0 * 1e8_f64.ln()).sqrt() {
                let need = init.sigma * (4.0 * 1e8_f64.ln()).sqrt();
                c.error("propagate", format!("packet reaches the grid edges; the kernel convolution needs {need:.2} of clearance"));
            }
        }
        let figures: Vec<(f64, f64, f64)> = cfg
            .z
            .iter()
            .filter(|z| **z > 0.0)
            .flat_map(|z| cfg.epsilon.iter().map(move |e| (*e, *z, validity_figure(init.sigma, *z, *e))))
            .filter(|(_, _, v)| *v > VALIDITY_WARNING)
            .collect();
        if let Some(&(e, z, v)) = figures.first() {
            c.warn(
                "kernel",
                format!(
                    "first-order kernel outside its perturbative range for {} of the (eps, z) pairs, from eps={e}, z={z} (validity figure {v:.3e} > {VALIDITY_WARNING})",
                    figures.len()
                ),
            );
        }
    }

    if cmd == CommandKind::Propagate && cfg.method == MethodKind::Fphe {
        if let Some(&e) = cfg.epsilon.first().filter(|e| **e > 0.0) {
            let k0 = 1.0 / e.sqrt();
            if init.sigma * (k0 - init.k_carrier.abs()) < GAUSSIAN_TAIL {
                c.numerical(
                    "propagate",
                    format!("one-way Helmholtz step: spectrum reaches the evanescent cut |k| = 1/sqrt(eps) = {k0:.4}"),
                );
            }
        }
    }

    if cmd == CommandKind::Kernel {
        for &dt in &cfg.kernel.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                c.error("kernel", format!("kernel interval must be positive, got {dt}"));
            }
        }
        let flagged = cfg
            .kernel
            .dt
            .iter()
            .filter(|dt| **dt > 0.0)
            .flat_map(|dt| cfg.kernel.dx.iter().map(move |dx| (*dx, *dt)))
            .flat_map(|(dx, dt)| cfg.epsilon.iter().map(move |e| validity_figure(dx, dt, *e)))
            .filter(|v| *v > VALIDITY_WARNING)
            .count();
        if flagged > 0 {
            c.warn("kernel", format!("{flagged} table entries exceed the validity figure {VALIDITY_WARNING}"));
        }
    }

    if cmd == CommandKind::Modes {
        for &en in &cfg.energy {
            for &e in cfg.epsilon.iter().filter(|e| **e > 0.0) {
                if !en.is_finite() || 1.0 + 2.0 * e * en < 0.0 {
                    c.numerical("dispersion", format!("no real branch for E={en}, eps={e}: 1 + 2 eps E < 0"));
                }
            }
        }
    }

    if cmd == CommandKind::Berry {
        let b = cfg.berry;
        if !(b.loop_radius > 0.0 && b.loop_radius.is_finite()) {
            c.error("analysis", format!("loop radius must be positive, got {}", b.loop_radius));
        }
        if b.windings == 0 {
            c.error("analysis", "windings must be at least 1".into());
        }
        if !(b.period > 0.0 && b.period.is_finite()) {
            c.error("analysis", format!("z-loop period must be positive, got {}", b.period));
        }
        if !b.alpha.is_finite() {
            c.error("analysis", "alpha must be finite".into());
        }
    }

    if cmd == CommandKind::ScanNegativity && !(cfg.resolution > 0.0) {
        c.error("propagate", format!("bisection resolution must be positive, got {}", cfg.resolution));
    }

    Report { ok: c.issues.iter().all(|i| i.severity != Severity::Error), command: cmd.name(), issues: c.issues }
}
