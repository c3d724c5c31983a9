use std::f64::consts::PI;

use nonparaxial::analysis::{
    berry_phase_x, berry_phase_z, instanton, instanton_trajectory, Exponents, ModeConstraint, ModeSolution,
};
use nonparaxial::dispersion::{lambda_min, mode_roots, p_max, wavelength_for_momentum};
use nonparaxial::kernel::{evaluate, positivity_radius, KernelMethod, KernelQuery};
use nonparaxial::model::{gaussian_packet, minimal_length};
use nonparaxial::propagate::{
    first_order_density, fphe_step, kernel_convolve, negativity_scan_with, spectral_step, Carrier, PropagationResult,
};
use nonparaxial::{ComplexField, GridSpec, PropagationParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{CommandKind, KernelKind, MethodKind, OriginSpec, RunConfig};
use crate::error::CliError;
use crate::output::{field_table, Artifacts, Table};

pub struct Outcome {
    pub results: Value,
    /// Printed to stdout in addition to the sidecar.
    pub echo: bool,
}

pub fn run(cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let results = match cfg.command {
        CommandKind::Propagate => propagate(cfg, out)?,
        CommandKind::Kernel => kernel_table(cfg, out)?,
        CommandKind::Bounds => bounds(cfg)?,
        CommandKind::Modes => modes(cfg)?,
        CommandKind::Instanton => instantons(cfg, out)?,
        CommandKind::Berry => berry(cfg)?,
        CommandKind::ScanNegativity => scan(cfg, out)?,
        CommandKind::Compare => compare(cfg, out)?,
    };
    let echo = !matches!(cfg.command, CommandKind::Propagate | CommandKind::Kernel);
    Ok(Outcome { results, echo })
}

fn grid(cfg: &RunConfig) -> Result<GridSpec, CliError> {
    Ok(GridSpec::new(cfg.grid.n, cfg.grid.x_min, cfg.grid.x_max)?)
}

fn packet(cfg: &RunConfig) -> Result<ComplexField, CliError> {
    let g = grid(cfg)?;
    Ok(gaussian_packet(&g, cfg.initial.sigma, cfg.initial.x0, cfg.initial.k_carrier)?)
}

fn suffix(tag: &str, i: usize, len: usize) -> String {
    if len == 1 {
        String::new()
    } else {
        format!("_{tag}{i}")
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

fn c2j(c: Complex64) -> Value {
    json!([c.re, c.im])
}

fn propagate(cfg: &RunConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let psi = packet(cfg)?;
    let eps = cfg.epsilon[0];
    let params = PropagationParams::direct(eps, cfg.k0)?;
    let mut steps = Vec::new();
    for (i, &z) in cfg.z.iter().enumerate() {
        let sfx = suffix("z", i, cfg.z.len());
        let (diagnostics, warnings) = if cfg.method == MethodKind::Density {
            let d = first_order_density(&psi, z, eps)?;
            let mut t = Table::new(&["x", "density"]);
            for (j, v) in d.values.iter().enumerate() {
                t.push(vec![d.grid.x(j), *v]);
            }
            out.csv(&sfx, &t, 0, &[1])?;
            (d.diagnostics, d.warnings)
        } else {
            let r: PropagationResult = match cfg.method {
                MethodKind::Spectral => spectral_step(&psi, z, &params)?,
                MethodKind::Kernel => kernel_convolve(&psi, z, eps)?,
                MethodKind::Fphe => {
                    // eps = 1/k0^2 in Helmholtz units, where distance z becomes k0 z
                    let k0 = 1.0 / eps.sqrt();
                    fphe_step(&psi, k0 * z, k0, Carrier::Remove)?
                }
                MethodKind::Density => unreachable!(),
            };
            out.csv(&sfx, &field_table(&r.field), 0, &[3])?;
            (r.diagnostics, r.warnings)
        };
        steps.push(json!({
            "z": z,
            "file": out.files.iter().rev().find(|f| f.ends_with(".csv")),
            "diagnostics": diagnostics,
            "warnings": warnings,
        }));
    }
    Ok(json!({ "method": cfg.method, "epsilon": eps, "steps": steps }))
}

fn kernel_table(cfg: &RunConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let method = match cfg.kernel.method {
        KernelKind::Closed => KernelMethod::ClosedForm,
        KernelKind::Quadrature => KernelMethod::Quadrature,
        KernelKind::Fresnel => KernelMethod::Fresnel,
    };
    let mut summary = Vec::new();
    for (i, &eps) in cfg.epsilon.iter().enumerate() {
        let mut t = Table::new(&["dx", "dt", "re", "im", "abs2", "validity"]);
        let mut flagged = 0usize;
        for &dt in &cfg.kernel.dt {
            for &dx in &cfg.kernel.dx {
                let k = evaluate(&KernelQuery::new(0.0, dx, dt, eps, method))?;
                if !k.is_trustworthy() {
                    flagged += 1;
                }
                t.push(vec![dx, dt, k.value.re, k.value.im, k.value.norm_sqr(), k.validity]);
            }
        }
        out.csv(&suffix("eps", i, cfg.epsilon.len()), &t, 0, &[4])?;
        if flagged > 0 {
            out.warnings.push(format!("eps={eps}: {flagged} entries outside the perturbative range"));
        }
        summary.push(json!({ "epsilon": eps, "entries": t.rows.len(), "flagged": flagged }));
    }
    Ok(json!({ "method": cfg.kernel.method, "tables": summary }))
}

fn bound_entry(cfg: &RunConfig, eps: f64) -> Result<Value, CliError> {
    let pm = p_max(eps)?;
    let lam = match cfg.origin {
        OriginSpec::Spatial { zd } => lambda_min(cfg.k0, zd)?,
        _ => wavelength_for_momentum(pm, cfg.k0),
    };
    let beta = eps / 8.0;
    Ok(json!({
        "epsilon": eps,
        "p_max": pm,
        "positivity_radius_per_z": positivity_radius(1.0, eps)?,
        "lambda_min": lam,
        "beta": beta,
        "minimal_length": minimal_length(beta)?,
    }))
}

/// Worst relative violation of the bound identities over `n` log-uniform eps in (1e-3, 10).
fn bound_sweep(n: usize, seed: u64) -> Result<Value, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 4];
    for _ in 0..n {
        let eps = 10f64.powf(rng.gen_range(-3.0..1.0));
        let k0 = 10f64.powf(rng.gen_range(-1.0..3.0));
        let pm = p_max(eps)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        let zd = 1.0 / (k0 * eps);
        let checks = [
            rel(pm, (2.0 / (3.0 * eps)).sqrt()),
            rel(positivity_radius(2.5, eps)? / 2.5, pm),
            rel(lambda_min(k0, zd)? * k0 * pm, 2.0 * PI),
            rel(instanton(eps)?.momentum, pm),
        ];
        for (w, c) in worst.iter_mut().zip(checks) {
            *w = w.max(c);
        }
    }
    Ok(json!({
        "samples": n,
        "seed": seed,
        "max_rel_error": {
            "p_max": worst[0],
            "positivity_radius": worst[1],
            "lambda_min": worst[2],
            "instanton_momentum": worst[3],
        },
    }))
}

fn bounds(cfg: &RunConfig) -> Result<Value, CliError> {
    let entries = cfg.epsilon.iter().map(|e| bound_entry(cfg, *e)).collect::<Result<Vec<_>, _>>()?;
    let mut v = if entries.len() == 1 { entries[0].clone() } else { json!({ "entries": entries }) };
    if cfg.sweep > 0 {
        v["sweep"] = bound_sweep(cfg.sweep, cfg.seed)?;
    }
    Ok(v)
}

fn modes(cfg: &RunConfig) -> Result<Value, CliError> {
    let mut entries = Vec::new();
    for &eps in &cfg.epsilon {
        for &en in &cfg.energy {
            let r = mode_roots(en, eps)?;
            let k = (2.0 * en).sqrt();
            let residual = r.all().iter().map(|l| r.residual(*l)).fold(0.0, f64::max);
            entries.push(json!({
                "epsilon": eps,
                "energy": en,
                "oscillatory": [c2j(r.oscillatory.0), c2j(r.oscillatory.1)],
                "evanescent": [c2j(r.evanescent.0), c2j(r.evanescent.1)],
                "max_residual": residual,
                "approx_wavenumber": k * (1.0 - eps * k * k / 8.0),
                "approx_rate": 2.0 / eps.sqrt(),
            }));
        }
    }
    Ok(json!({ "roots": entries }))
}

fn instantons(cfg: &RunConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let mut entries = Vec::new();
    for (i, &eps) in cfg.epsilon.iter().enumerate() {
        let r = instanton(eps)?;
        let path = instanton_trajectory(eps, &cfg.z)?;
        let mut t = Table::new(&["z", "x"]);
        for (z, x) in cfg.z.iter().zip(&path) {
            t.push(vec![*z, *x]);
        }
        out.csv(&suffix("eps", i, cfg.epsilon.len()), &t, 0, &[1])?;
        entries.push(json!({
            "epsilon": eps,
            "velocity": c2j(r.velocity),
            "momentum": r.momentum,
            "p_max": p_max(eps)?,
            "stationarity_residual": r.stationarity_residual,
            "bound_gap": r.bound_gap,
        }));
    }
    Ok(json!({ "instantons": entries }))
}

fn berry(cfg: &RunConfig) -> Result<Value, CliError> {
    let b = cfg.berry;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut per_eps = Vec::new();
    for &eps in &cfg.epsilon {
        let mut x_loops = Vec::new();
        let mut worst = 0.0f64;
        for i in 0..b.modes {
            let m = 1 + (i as u32 % b.windings);
            let q = m as f64 / b.loop_radius;
            // standing waves: equal magnitudes, random phases
            let amp = rng.gen_range(0.1..2.0);
            let a = Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI));
            let bb = Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI));
            let zero = Complex64::new(0.0, 0.0);
            let mode = ModeSolution::with_exact_wavenumber(ModeConstraint::Free, [a, bb, zero, zero], q, eps)?;
            let r = berry_phase_x(&mode, b.loop_radius, Exponents::Exact)?;
            worst = worst.max(r.phase.abs() / r.norm_sq);
            x_loops.push(json!({ "windings": m, "q": q, "phase": r.phase, "norm_sq": r.norm_sq, "trivial": r.phase.abs() < r.tolerance }));
        }
        let q = 1.0 / b.loop_radius;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let wave = ModeSolution::with_exact_wavenumber(ModeConstraint::Outgoing, [one, zero, zero, zero], q, eps)?;
        let control = berry_phase_x(&wave, b.loop_radius, Exponents::Exact)?;
        let z_loops = (0..=b.n_max)
            .map(|n| {
                let r = berry_phase_z(&wave, b.period, b.alpha, n)?;
                Ok(json!({ "n": n, "phase": r.phase, "expected": 2.0 * PI * b.alpha * n as f64 }))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        per_eps.push(json!({
            "epsilon": eps,
            "x_loops": x_loops,
            "max_phase_over_norm": worst,
            "plane_wave_control": { "q": q, "phase": control.phase, "expected": q * control.norm_sq, "nontrivial": control.nontrivial },
            "z_loops": z_loops,
        }));
    }
    Ok(json!({ "loop_radius": b.loop_radius, "results": per_eps }))
}

fn scan(cfg: &RunConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let g = grid(cfg)?;
    let z = cfg.z[0];
    let s = negativity_scan_with(cfg.initial.sigma, z, &cfg.epsilon, &g, cfg.resolution)?;
    let mut t = Table::new(&["epsilon", "min_density"]);
    for e in &s.entries {
        t.push(vec![e.epsilon, e.min_density]);
    }
    out.csv("", &t, 0, &[1])?;
    if s.threshold.is_none() {
        out.warnings.push("density stays non-negative over the whole eps grid".into());
    }
    if !s.monotone {
        out.warnings.push("minimum density is not monotone along the eps grid".into());
    }
    Ok(json!({
        "sigma": s.sigma,
        "z": s.z,
        "epsilon_star": s.threshold,
        "core_epsilon_star": s.core_threshold,
        "core_half_width": s.core_half_width,
        "monotone": s.monotone,
        "resolution": s.resolution,
        "peak_density": s.peak_density,
        "scanned": s.entries.len(),
    }))
}

fn compare(cfg: &RunConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let psi = packet(cfg)?;
    let z = cfg.z[0];
    let norm = psi.norm_sq().sqrt();
    let mut t = Table::new(&["epsilon", "l2_error"]);
    for &eps in &cfg.epsilon {
        let k = kernel_convolve(&psi, z, eps)?;
        let s = spectral_step(&psi, z, &PropagationParams::direct(eps, cfg.k0)?)?;
        t.push(vec![eps, k.field.l2_distance(&s.field) / norm]);
    }
    out.csv("", &t, 0, &[1])?;
    let eps: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
    let errs: Vec<f64> = t.rows.iter().map(|r| r[1]).collect();
    let slope = if eps.len() >= 2 && errs.iter().all(|e| *e > 0.0) { Some(loglog_slope(&eps, &errs)) } else { None };
    Ok(json!({ "z": z, "epsilon": eps, "l2_error": errs, "slope": slope }))
}
