//! Acceptance checks, one line per criterion. Runs without the test harness
//! so that every criterion reports even when an earlier one fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use nonparaxial::analysis::{berry_phase_x, berry_phase_z, instanton, Exponents, ModeConstraint, ModeSolution};
use nonparaxial::dispersion::{lambda_min, mode_roots, p_max};
use nonparaxial::kernel::{
    compose_closed_form, fresnel_kernel, intensity_first_order, kernel_closed_form, pde_residual_complex,
    positivity_radius, FdSteps, KernelMethod, KernelQuery,
};
use nonparaxial::model::gaussian_packet;
use nonparaxial::propagate::{fphe_step, kernel_convolve, negativity_scan, negativity_scan_with, spectral_step, Carrier};
use nonparaxial::{GridSpec, PropagationParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const EPS: [f64; 4] = [1e-3, 2e-3, 4e-3, 8e-3];

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn wide_grid() -> GridSpec {
    GridSpec::centered(2048, 40.0).unwrap()
}

fn kernel_vs_spectral(eps: f64) -> Result<f64, String> {
    let psi = gaussian_packet(&wide_grid(), 2.0, 0.0, 0.0).map_err(e)?;
    let k = kernel_convolve(&psi, 1.0, eps).map_err(e)?.field;
    let s = spectral_step(&psi, 1.0, &PropagationParams::direct(eps, 1.0).map_err(e)?).map_err(e)?.field;
    Ok(k.l2_distance(&s) / psi.norm_sq().sqrt())
}

fn fresnel_limit() -> Outcome {
    let rel = kernel_vs_spectral(0.0)?;
    let mut mismatches = 0;
    let mut total = 0;
    for i in 0..40 {
        for j in 0..10 {
            let dx = -4.0 + 0.2 * i as f64;
            let dt = 0.1 + 0.3 * j as f64;
            let closed = kernel_closed_form(&KernelQuery::new(0.0, dx, dt, 0.0, KernelMethod::ClosedForm)).map_err(e)?;
            let fresnel = fresnel_kernel(0.0, dx, dt).map_err(e)?;
            total += 1;
            if closed.value.re.to_bits() != fresnel.re.to_bits() || closed.value.im.to_bits() != fresnel.im.to_bits() {
                mismatches += 1;
            }
        }
    }
    check(
        rel < 1e-6 && mismatches == 0,
        format!("L2 rel {rel:.3e} (< 1e-6); closed form bit-identical to Fresnel on {}/{total} points", total - mismatches),
    )
}

fn perturbative_order() -> Outcome {
    let errs = EPS.iter().map(|eps| kernel_vs_spectral(*eps)).collect::<Result<Vec<_>, _>>()?;
    let s = slope(&EPS, &errs);
    check((s - 2.0).abs() <= 0.15, format!("slope {s:.4} (2 +- 0.15); errors {errs:?}"))
}

fn modulus_law() -> Outcome {
    let mut cs = Vec::new();
    for eps in [1e-3, 1e-2, 1e-1] {
        let mut c = 0.0f64;
        for i in 0..20 {
            for j in 0..20 {
                let dx = -2.0 + 4.0 * i as f64 / 19.0;
                let dt = 0.5 + 1.5 * j as f64 / 19.0;
                let k = kernel_closed_form(&KernelQuery::new(0.0, dx, dt, eps, KernelMethod::ClosedForm)).map_err(e)?;
                let gap = (k.value.norm_sqr() - intensity_first_order(0.0, dx, dt, eps).map_err(e)?).abs();
                c = c.max(gap * 2.0 * PI * dt / (eps * eps));
            }
        }
        cs.push(c);
    }
    let mean = cs.iter().sum::<f64>() / cs.len() as f64;
    let spread = cs.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
    check(spread <= 0.25, format!("C = {cs:.6?}, max deviation from mean {:.2e} (<= 25%)", spread))
}

fn bound_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 4];
    for _ in 0..100 {
        let eps = 10f64.powf(rng.gen_range(-3.0..1.0));
        let k0 = 10f64.powf(rng.gen_range(-1.0..3.0));
        let dz = rng.gen_range(0.1..10.0);
        let pm = p_max(eps).map_err(e)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        let checks = [
            rel(pm, (2.0 / (3.0 * eps)).sqrt()),
            rel(positivity_radius(dz, eps).map_err(e)? / dz, pm),
            rel(lambda_min(k0, 1.0 / (k0 * eps)).map_err(e)? * k0 * pm, 2.0 * PI),
            rel(instanton(eps).map_err(e)?.momentum, pm),
        ];
        for (w, c) in worst.iter_mut().zip(checks) {
            *w = w.max(c);
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    check(
        max <= 1e-12,
        format!("100 random eps: max rel error p_max {:.1e}, radius {:.1e}, lambda_min {:.1e}, instanton {:.1e}", worst[0], worst[1], worst[2], worst[3]),
    )
}

fn pde_residual() -> Outcome {
    let steps = FdSteps::default();
    let r = |eps: f64| pde_residual_complex(&KernelQuery::new(0.0, 0.5, 1.0, eps, KernelMethod::ClosedForm), steps);
    let base = r(0.0).map_err(e)?;
    let r1 = (r(1e-3).map_err(e)? - base).norm();
    let r2 = (r(2e-3).map_err(e)? - base).norm();
    let ratio = r2 / r1;
    check(
        (ratio - 4.0).abs() <= 0.5,
        format!("ratio {ratio:.4} (4 +- 0.5) with h_x={}, h_t={}; baseline {:.2e}", steps.h_x, steps.h_t, base.norm()),
    )
}

fn semigroup() -> Outcome {
    let mut errs = Vec::new();
    for eps in EPS {
        let composed = compose_closed_form(0.0, 0.5, 1.0, 1.0, eps).map_err(e)?;
        let direct = kernel_closed_form(&KernelQuery::new(0.0, 0.5, 2.0, eps, KernelMethod::ClosedForm)).map_err(e)?.value;
        errs.push((composed - direct).norm() / direct.norm());
    }
    let s = slope(&EPS, &errs);
    check((s - 2.0).abs() <= 0.2, format!("slope {s:.4} (2 +- 0.2); defects {errs:?}"))
}

fn mode_root_checks() -> Outcome {
    let energy: f64 = 0.5;
    let k = (2.0 * energy).sqrt();
    let mut errs = Vec::new();
    for eps in EPS {
        let q = mode_roots(energy, eps).map_err(e)?.oscillatory_wavenumber();
        errs.push((q - k * (1.0 - eps * k * k / 8.0)).abs());
    }
    let s = slope(&EPS, &errs);
    let mut worst_ratio = 0.0f64;
    let mut cases = 0;
    for eps in [1e-3, 1e-2, 0.1, 0.5, 1.0] {
        for en in [0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0] {
            if eps * en > 0.1 {
                continue;
            }
            let rate = mode_roots(en, eps).map_err(e)?.evanescent_rate();
            let approx = 2.0 / eps.sqrt();
            worst_ratio = worst_ratio.max(((rate - approx) / approx).abs() / (2.0 * eps * en));
            cases += 1;
        }
    }
    check(
        (s - 2.0).abs() <= 0.15 && worst_ratio < 1.0,
        format!("oscillatory slope {s:.4} (2 +- 0.15); evanescent deviation <= {worst_ratio:.3} x 2 eps E over {cases} cases"),
    )
}

fn fig1() -> Outcome {
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/negativity_scan.json");
    let golden: serde_json::Value = serde_json::from_str(&fs::read_to_string(golden_path).map_err(e)?).map_err(e)?;
    let golden_star = golden["epsilon_star"].as_f64().ok_or("golden file lacks epsilon_star")?;

    let grid = GridSpec::centered(2048, 20.0).map_err(e)?;
    let sigma = 1.0 / 2f64.sqrt();
    let eps: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
    let scan = negativity_scan(sigma, 1.0, &eps, &grid).map_err(e)?;
    let star = scan.threshold.ok_or("no negativity found on the eps grid")?;
    let again = negativity_scan(sigma, 1.0, &eps, &grid).map_err(e)?.threshold.ok_or("rerun lost the threshold")?;
    let fine = negativity_scan_with(sigma, 1.0, &eps, &grid, 1e-5).map_err(e)?.threshold.ok_or("fine scan lost the threshold")?;
    let sides_ok = scan.entries.iter().all(|en| if en.epsilon > star { en.min_density < 0.0 } else { !en.negative });
    let min_below = scan.entries.iter().filter(|en| en.epsilon < star).map(|en| en.min_density).fold(f64::INFINITY, f64::min);
    check(
        star > 0.5 && star <= 10.0 && sides_ok && (star - golden_star).abs() <= 1e-3 && star == again && (fine - star).abs() <= 1e-3,
        format!(
            "eps* = {star:.6} in (0.5, 10]; golden {golden_star:.6}; rerun {again:.6}; at 1e-5 resolution {fine:.6}; min density below eps* {min_below:.2e}"
        ),
    )
}

fn berry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zero = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let l = rng.gen_range(0.5..3.0);
        let m = 1 + i % 6;
        let eps = 10f64.powf(rng.gen_range(-3.0..-0.5));
        let amp = rng.gen_range(0.1..3.0);
        let a = Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI));
        let b = Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI));
        let mode = ModeSolution::with_exact_wavenumber(ModeConstraint::Free, [a, b, zero, zero], m as f64 / l, eps).map_err(e)?;
        let r = berry_phase_x(&mode, l, Exponents::Exact).map_err(e)?;
        worst = worst.max(r.phase.abs() / r.norm_sq);
    }
    let l = 2.0;
    let q = 3.0 / l;
    let wave = ModeSolution::with_exact_wavenumber(ModeConstraint::Outgoing, [Complex64::new(1.0, 0.0), zero, zero, zero], q, 0.05)
        .map_err(e)?;
    let control = berry_phase_x(&wave, l, Exponents::Exact).map_err(e)?;
    let control_gap = (control.phase - q * control.norm_sq).abs();
    let alpha = 0.75;
    let mut z_gap = 0.0f64;
    for n in 0..=10u32 {
        let expected = 2.0 * PI * alpha * n as f64;
        let r = berry_phase_z(&wave, 1.7, alpha, n).map_err(e)?;
        z_gap = z_gap.max((r.phase - expected).abs() / expected.max(1.0));
    }
    check(
        worst < 1e-10 && control_gap <= 1e-10 && z_gap <= 4.0 * f64::EPSILON,
        format!(
            "x loops: max |phase|/norm^2 {worst:.2e} over 50 modes; plane wave off k_eff norm^2 by {control_gap:.2e}; z loops n=0..10 within {z_gap:.1e} of 2 pi alpha n"
        ),
    )
}

fn unitarity_and_determinism() -> Outcome {
    let grid = GridSpec::centered(2048, 100.0).map_err(e)?;
    let mut drift = 0.0f64;
    for (sigma, x0, kc) in [(2.0, 0.0, 0.0), (1.0, -10.0, 1.5), (4.0, 15.0, -0.5)] {
        let psi = gaussian_packet(&grid, sigma, x0, kc).map_err(e)?;
        let n0 = psi.norm_sq();
        let s = spectral_step(&psi, 3.0, &PropagationParams::direct(0.05, 1.0).map_err(e)?).map_err(e)?;
        let f = fphe_step(&psi, 3.0, 10.0, Carrier::Keep).map_err(e)?;
        drift = drift.max((s.field.norm_sq() - n0).abs() / n0).max((f.field.norm_sq() - n0).abs() / n0);
    }

    let runs = [
        vec!["propagate", "--sigma", "0.70711", "--epsilon", "0.01", "--z", "0.5,1", "--method", "spectral"],
        vec!["scan-negativity"],
        vec!["berry", "--seed", "5"],
    ];
    let mut identical = 0;
    let mut compared = 0;
    for args in &runs {
        let dirs = [tempfile::tempdir().map_err(e)?, tempfile::tempdir().map_err(e)?];
        for d in &dirs {
            let status = Command::new(env!("CARGO_BIN_EXE_nonparaxial"))
                .args(args)
                .arg("--out-dir")
                .arg(d.path())
                .output()
                .map_err(e)?
                .status;
            if !status.success() {
                return Err(format!("cli run {args:?} failed with {status}"));
            }
        }
        let mut names: Vec<_> = fs::read_dir(dirs[0].path()).map_err(e)?.map(|x| x.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            compared += 1;
            let a = fs::read(dirs[0].path().join(&name)).map_err(e)?;
            let b = fs::read(dirs[1].path().join(&name)).unwrap_or_default();
            identical += (a == b) as usize;
        }
    }
    check(
        drift <= 1e-10 && identical == compared && compared > 0,
        format!("max norm drift {drift:.2e} (<= 1e-10); {identical}/{compared} CLI artifacts byte-identical across reruns"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fresnel limit", fresnel_limit),
        ("perturbative order", perturbative_order),
        ("modulus law", modulus_law),
        ("bound identities", bound_identities),
        ("kernel pde residual", pde_residual),
        ("semigroup to first order", semigroup),
        ("mode roots", mode_root_checks),
        ("negativity threshold", fig1),
        ("berry triviality", berry),
        ("unitarity and determinism", unitarity_and_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS  criterion {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
