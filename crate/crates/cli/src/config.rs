//! Run configuration: an optional TOML file merged with command-line flags.
//!
//! Every flag mirrors one file key (`--x-min` is `grid.x_min`); flags win.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Propagate,
    Kernel,
    Bounds,
    Modes,
    Instanton,
    Berry,
    ScanNegativity,
    Compare,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Propagate => "propagate",
            CommandKind::Kernel => "kernel",
            CommandKind::Bounds => "bounds",
            CommandKind::Modes => "modes",
            CommandKind::Instanton => "instanton",
            CommandKind::Berry => "berry",
            CommandKind::ScanNegativity => "scan-negativity",
            CommandKind::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Spectral,
    Fphe,
    Kernel,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Closed,
    Quadrature,
    Fresnel,
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Floats {
    One(f64),
    Many(Vec<f64>),
}

impl Floats {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Floats::One(v) => vec![v],
            Floats::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<CommandKind>,
    seed: Option<u64>,
    #[serde(default)]
    params: ParamsSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    initial: InitialSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    kernel: KernelSection,
    #[serde(default)]
    modes: ModesSection,
    #[serde(default)]
    berry: BerrySection,
    #[serde(default)]
    scan: ScanSection,
    #[serde(default)]
    bounds: BoundsSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    epsilon: Option<Floats>,
    k0: Option<f64>,
    zd: Option<f64>,
    beta2: Option<f64>,
    beta4: Option<f64>,
    t0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n: Option<usize>,
    x_min: Option<f64>,
    x_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    sigma: Option<f64>,
    x0: Option<f64>,
    k_carrier: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    z: Option<Floats>,
    method: Option<MethodKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSection {
    dx: Option<Floats>,
    dt: Option<Floats>,
    method: Option<KernelKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModesSection {
    energy: Option<Floats>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BerrySection {
    loop_radius: Option<f64>,
    windings: Option<u32>,
    modes: Option<usize>,
    period: Option<f64>,
    alpha: Option<f64>,
    n_max: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanSection {
    resolution: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsSection {
    sweep: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    prefix: Option<String>,
    gnuplot: Option<bool>,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Quartic coefficient; comma-separated list where a command sweeps it.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub k0: Option<f64>,
    /// Diffraction length; with `--k0` sets eps = 1/(k0 Zd).
    #[arg(long, global = true)]
    pub zd: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta4: Option<f64>,
    #[arg(long, global = true)]
    pub t0: Option<f64>,

    /// Grid points (power of two).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_max: Option<f64>,

    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k_carrier: Option<f64>,

    /// Propagation distance(s).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub method: Option<MethodKind>,

    /// Kernel table offsets.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub dx: Option<Vec<f64>>,
    /// Kernel table intervals.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub dt: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub kernel_method: Option<KernelKind>,

    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub energy: Option<Vec<f64>>,

    #[arg(long, global = true)]
    pub loop_radius: Option<f64>,
    #[arg(long, global = true)]
    pub windings: Option<u32>,
    /// Number of random admissible modes for the x loop.
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    #[arg(long, global = true)]
    pub period: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub n_max: Option<u32>,

    /// Bisection resolution of the negativity threshold.
    #[arg(long, global = true)]
    pub resolution: Option<f64>,
    /// Number of random eps samples for the bound identities.
    #[arg(long, global = true)]
    pub sweep: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// File name stem for outputs (default: the command name).
    #[arg(long, global = true)]
    pub prefix: Option<String>,
    /// Also write a gnuplot script next to each CSV.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

/// Where eps came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OriginSpec {
    Direct,
    Spatial { zd: f64 },
    Temporal { beta2: f64, beta4: f64, t0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInputs {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianInputs {
    pub sigma: f64,
    pub x0: f64,
    pub k_carrier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelInputs {
    pub dx: Vec<f64>,
    pub dt: Vec<f64>,
    pub method: KernelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerryInputs {
    pub loop_radius: f64,
    pub windings: u32,
    pub modes: usize,
    pub period: f64,
    pub alpha: f64,
    pub n_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputInputs {
    pub dir: PathBuf,
    pub prefix: String,
    pub gnuplot: bool,
}

/// Fully resolved configuration, echoed verbatim into every sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub epsilon: Vec<f64>,
    pub k0: f64,
    pub origin: OriginSpec,
    pub grid: GridInputs,
    pub initial: GaussianInputs,
    pub z: Vec<f64>,
    pub method: MethodKind,
    pub kernel: KernelInputs,
    pub energy: Vec<f64>,
    pub berry: BerryInputs,
    pub resolution: f64,
    pub sweep: usize,
    pub seed: u64,
    #[serde(skip)]
    pub output: OutputInputs,
}

fn default_epsilon(command: CommandKind) -> Vec<f64> {
    match command {
        CommandKind::Compare => vec![1e-3, 2e-3, 4e-3, 8e-3],
        CommandKind::ScanNegativity => (1..=200).map(|i| 0.05 * i as f64).collect(),
        _ => vec![0.01],
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn load_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Merges `file_text` (TOML, may be empty) with `flags`. Structural problems
/// such as unknown keys or conflicting eps sources are reported together.
pub fn resolve(command: Option<CommandKind>, file_text: &str, flags: &Overrides) -> Result<RunConfig, CliError> {
    let file: FileConfig = toml::from_str(file_text).map_err(|e| CliError::Config(vec![format!("config file: {e}")]))?;
    let mut problems = Vec::new();

    let command = match command.or(file.command) {
        Some(c) => c,
        None => {
            return Err(CliError::Config(vec!["no command given (subcommand or `command` key)".into()]));
        }
    };

    let p = &file.params;
    let k0 = flags.k0.or(p.k0).unwrap_or(1.0);
    let zd = flags.zd.or(p.zd);
    let beta2 = flags.beta2.or(p.beta2);
    let beta4 = flags.beta4.or(p.beta4);
    let t0 = flags.t0.or(p.t0);
    let explicit_eps = flags.epsilon.clone().or_else(|| p.epsilon.clone().map(Floats::into_vec));
    let temporal = [beta2, beta4, t0];
    let any_temporal = temporal.iter().any(Option::is_some);

    let mut origin = OriginSpec::Direct;
    let mut epsilon = explicit_eps.clone().unwrap_or_else(|| default_epsilon(command));
    let sources = explicit_eps.is_some() as u8 + zd.is_some() as u8 + any_temporal as u8;
    if sources > 1 {
        problems.push("give eps directly, via Zd, or via beta2/beta4/T0, not several at once".to_string());
    } else if let Some(zd) = zd {
        origin = OriginSpec::Spatial { zd };
        match nonparaxial::model::epsilon_from_spatial(k0, zd) {
            Ok(e) => epsilon = vec![e],
            Err(e) => problems.push(e.to_string()),
        }
    } else if any_temporal {
        match temporal {
            [Some(beta2), Some(beta4), Some(t0)] => {
                origin = OriginSpec::Temporal { beta2, beta4, t0 };
                match nonparaxial::model::epsilon_from_temporal(beta2, beta4, t0) {
                    Ok(e) => epsilon = vec![e],
                    Err(e) => problems.push(e.to_string()),
                }
            }
            _ => problems.push("temporal origin needs all of beta2, beta4 and t0".to_string()),
        }
    }

    let grid = GridInputs {
        n: flags.n.or(file.grid.n).unwrap_or(2048),
        x_min: flags.x_min.or(file.grid.x_min).unwrap_or(-20.0),
        x_max: flags.x_max.or(file.grid.x_max).unwrap_or(20.0),
    };
    let initial = GaussianInputs {
        sigma: flags.sigma.or(file.initial.sigma).unwrap_or(std::f64::consts::FRAC_1_SQRT_2),
        x0: flags.x0.or(file.initial.x0).unwrap_or(0.0),
        k_carrier: flags.k_carrier.or(file.initial.k_carrier).unwrap_or(0.0),
    };
    let z = flags.z.clone().or_else(|| file.run.z.map(Floats::into_vec)).unwrap_or_else(|| vec![1.0]);
    let method = flags.method.or(file.run.method).unwrap_or(MethodKind::Spectral);
    let kernel = KernelInputs {
        dx: flags.dx.clone().or_else(|| file.kernel.dx.map(Floats::into_vec)).unwrap_or_else(|| linspace(-2.0, 2.0, 21)),
        dt: flags.dt.clone().or_else(|| file.kernel.dt.map(Floats::into_vec)).unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
        method: flags.kernel_method.or(file.kernel.method).unwrap_or(KernelKind::Closed),
    };
    let energy = flags.energy.clone().or_else(|| file.modes.energy.map(Floats::into_vec)).unwrap_or_else(|| vec![0.5]);
    let b = &file.berry;
    let berry = BerryInputs {
        loop_radius: flags.loop_radius.or(b.loop_radius).unwrap_or(1.0),
        windings: flags.windings.or(b.windings).unwrap_or(5),
        modes: flags.modes.or(b.modes).unwrap_or(10),
        period: flags.period.or(b.period).unwrap_or(1.0),
        alpha: flags.alpha.or(b.alpha).unwrap_or(1.0),
        n_max: flags.n_max.or(b.n_max).unwrap_or(10),
    };
    let output = OutputInputs {
        dir: flags.out_dir.clone().or(file.output.dir).unwrap_or_else(|| PathBuf::from(".")),
        prefix: flags.prefix.clone().or(file.output.prefix).unwrap_or_else(|| command.name().to_string()),
        gnuplot: flags.gnuplot || file.output.gnuplot.unwrap_or(false),
    };

    for (name, list) in [("epsilon", &epsilon), ("z", &z), ("dx", &kernel.dx), ("dt", &kernel.dt), ("energy", &energy)] {
        if list.is_empty() {
            problems.push(format!("{name} list is empty"));
        }
    }
    if output.prefix.is_empty() || output.prefix.contains(['/', '\\']) {
        problems.push(format!("output prefix {:?} must be a plain file stem", output.prefix));
    }

    if !problems.is_empty() {
        return Err(CliError::Config(problems));
    }
    Ok(RunConfig {
        command,
        epsilon,
        k0,
        origin,
        grid,
        initial,
        z,
        method,
        kernel,
        energy,
        berry,
        resolution: flags.resolution.or(file.scan.resolution).unwrap_or(1e-3),
        sweep: flags.sweep.or(file.bounds.sweep).unwrap_or(0),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        output,
    })
}
