//! Configuration parsing, subcommand dispatch, and sweep execution.
//!
//! Configuration is flat `key = value` text with `#` comments. Unknown
//! keys are hard errors so typos cannot silently fall back to defaults.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dynamics::{self, DriftMatrix, drift_case1, drift_case2};
use crate::model::{DriveParams, ModelParams, RawParams, derive_constants, paper_preset};
use crate::router::{self, FigureId};
use crate::spectra::{self, NuGrid};
use crate::steadystate;
use crate::{Error, Result};

/// Scalar keys of the raw parameter schema, in reporting order.
const RAW_KEYS: [&str; 9] = [
    "wavelength_lambda",
    "cavity_length_L",
    "mirror_mass_m",
    "omega_m",
    "gamma_m",
    "kappa",
    "Delta",
    "n_th",
    "Gamma_photon",
];

/// Optional scalar keys beyond the raw schema.
const EXTRA_KEYS: [&str; 7] = [
    "G",
    "epsilon_d",
    "omega_d",
    "case",
    "nu_min",
    "nu_max",
    "nu_count",
];

/// Keys that a sweep axis may reference.
const SWEEPABLE_KEYS: [&str; 12] = [
    "wavelength_lambda",
    "cavity_length_L",
    "mirror_mass_m",
    "omega_m",
    "gamma_m",
    "kappa",
    "Delta",
    "n_th",
    "Gamma_photon",
    "G",
    "epsilon_d",
    "omega_d",
];

/// Largest allowed Cartesian-product size for a sweep.
const SWEEP_GUARD: usize = 1_000_000;

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub drive: DriveParams,
    /// 1 = unmodulated, 2 = modulated (rotating-wave matrix).
    pub case: u8,
    pub grid: NuGrid,
    /// Sweep axes in file order: (parameter key, values).
    pub sweep: Vec<(String, Vec<f64>)>,
}

impl RunConfig {
    /// Configuration matching the reference parameter set (case I,
    /// G = 0.2 omega_m).
    pub fn preset() -> Self {
        let (raw, drive) = paper_preset();
        let params = derive_constants(raw).expect("preset parameters are valid");
        RunConfig {
            params,
            drive,
            case: 1,
            grid: NuGrid::case1_default(raw.omega_m),
            sweep: Vec::new(),
        }
    }

    /// Drift matrix selected by the case field.
    pub fn drift(&self) -> DriftMatrix {
        if self.case == 2 {
            drift_case2(
                &self.params,
                self.drive.coupling,
                self.drive.epsilon_d,
                self.drive.omega_d,
            )
        } else {
            drift_case1(&self.params, self.drive.coupling)
        }
    }
}

fn parse_f64(line: usize, text: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| Error::UnparsableValue {
        line,
        text: text.to_string(),
    })
}

/// Parse flat `key = value` configuration text into a validated
/// [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut scalars: HashMap<&str, (usize, f64)> = HashMap::new();
    let mut sweep: Vec<(String, Vec<f64>)> = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::UnparsableValue {
                line,
                text: content.to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if let Some(axis) = key.strip_prefix("sweep.") {
            if !SWEEPABLE_KEYS.contains(&axis) {
                return Err(Error::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            let values = value
                .split(',')
                .map(|v| parse_f64(line, content, v))
                .collect::<Result<Vec<f64>>>()?;
            if values.is_empty() {
                return Err(Error::UnparsableValue {
                    line,
                    text: content.to_string(),
                });
            }
            sweep.retain(|(k, _)| k != axis);
            sweep.push((axis.to_string(), values));
            continue;
        }
        if !RAW_KEYS.contains(&key) && !EXTRA_KEYS.contains(&key) {
            return Err(Error::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        let parsed = parse_f64(line, content, value)?;
        scalars.insert(
            RAW_KEYS
                .iter()
                .chain(EXTRA_KEYS.iter())
                .find(|k| **k == key)
                .unwrap(),
            (line, parsed),
        );
    }

    let mut required: Vec<&str> = RAW_KEYS.to_vec();
    required.push("G");
    let missing: Vec<String> = required
        .iter()
        .filter(|k| !scalars.contains_key(**k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingKeys(missing));
    }

    let get = |key: &str| scalars[key].1;
    let raw = RawParams {
        wavelength: get("wavelength_lambda"),
        cavity_length: get("cavity_length_L"),
        mirror_mass: get("mirror_mass_m"),
        omega_m: get("omega_m"),
        gamma_m: get("gamma_m"),
        kappa: get("kappa"),
        delta: get("Delta"),
        n_th: get("n_th"),
        gamma_photon: get("Gamma_photon"),
    };
    let params = derive_constants(raw)?;
    let drive = DriveParams {
        coupling: get("G"),
        epsilon_d: scalars.get("epsilon_d").map_or(0.0, |v| v.1),
        omega_d: scalars.get("omega_d").map_or(0.0, |v| v.1),
    };
    drive.validate()?;

    let case = match scalars.get("case") {
        None => {
            if drive.is_modulated() {
                2
            } else {
                1
            }
        }
        Some(&(line, v)) => {
            if v == 1.0 {
                1
            } else if v == 2.0 {
                2
            } else {
                return Err(Error::UnparsableValue {
                    line,
                    text: format!("case = {v} (expected 1 or 2)"),
                });
            }
        }
    };
    if case == 1 && drive.is_modulated() {
        return Err(Error::InvalidParameter(
            "case = 1 is incompatible with epsilon_d > 0".into(),
        ));
    }

    let default_grid = if case == 2 {
        NuGrid::case2_default(raw.omega_m)
    } else {
        NuGrid::case1_default(raw.omega_m)
    };
    let count = match scalars.get("nu_count") {
        None => default_grid.count,
        Some(&(line, v)) => {
            if v >= 2.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
                v as usize
            } else {
                return Err(Error::UnparsableValue {
                    line,
                    text: format!("nu_count = {v} (expected integer >= 2)"),
                });
            }
        }
    };
    let grid = NuGrid::new(
        scalars.get("nu_min").map_or(default_grid.min, |v| v.1),
        scalars.get("nu_max").map_or(default_grid.max, |v| v.1),
        count,
    )?;

    let product: usize = sweep
        .iter()
        .map(|(_, v)| v.len())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if product > SWEEP_GUARD {
        return Err(Error::InvalidParameter(format!(
            "sweep Cartesian product has {product} points, limit is {SWEEP_GUARD}"
        )));
    }

    Ok(RunConfig {
        params,
        drive,
        case,
        grid,
        sweep,
    })
}

/// Apply one sweep assignment to a parameter set.
fn apply_assignment(
    raw: &mut RawParams,
    drive: &mut DriveParams,
    key: &str,
    value: f64,
) {
    match key {
        "wavelength_lambda" => raw.wavelength = value,
        "cavity_length_L" => raw.cavity_length = value,
        "mirror_mass_m" => raw.mirror_mass = value,
        "omega_m" => raw.omega_m = value,
        "gamma_m" => raw.gamma_m = value,
        "kappa" => raw.kappa = value,
        "Delta" => raw.delta = value,
        "n_th" => raw.n_th = value,
        "Gamma_photon" => raw.gamma_photon = value,
        "G" => drive.coupling = value,
        "epsilon_d" => drive.epsilon_d = value,
        "omega_d" => drive.omega_d = value,
        other => unreachable!("unvalidated sweep key {other}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Steady,
    Stability,
    Spectrum,
    Route,
    Reproduce(FigureId),
    Sweep,
}

/// Execute a subcommand, writing outputs under `out_dir`. `workers = 0`
/// uses all available cores.
pub fn run(config: &RunConfig, command: &Command, out_dir: &Path, workers: usize) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(config, command, out_dir))
}

fn dispatch(config: &RunConfig, command: &Command, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    match command {
        Command::Steady => cmd_steady(config, out_dir),
        Command::Stability => cmd_stability(config, out_dir),
        Command::Spectrum => cmd_spectrum(config, out_dir),
        Command::Route => cmd_route(config, out_dir),
        Command::Reproduce(figure) => {
            router::reproduce(&config.params, *figure, out_dir)?;
            Ok(())
        }
        Command::Sweep => cmd_sweep(config, out_dir),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

fn cmd_steady(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let epsilon_p = steadystate::pump_for_coupling(&config.params, config.drive.coupling)?;
    let state = steadystate::solve_steady(&config.params, epsilon_p)?;
    #[derive(serde::Serialize)]
    struct SteadyOutput {
        epsilon_p: f64,
        #[serde(flatten)]
        state: steadystate::SteadyState,
    }
    write_json(&out_dir.join("steady.json"), &SteadyOutput { epsilon_p, state })
}

fn cmd_stability(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let matrix = config.drift();
    let report = dynamics::assess_stability(&matrix)?;
    #[derive(serde::Serialize)]
    struct StabilityOutput {
        case: u8,
        rwa_warning: bool,
        #[serde(flatten)]
        report: dynamics::StabilityReport,
    }
    write_json(
        &out_dir.join("stability.json"),
        &StabilityOutput {
            case: config.case,
            rwa_warning: matrix.rwa_warning,
            report,
        },
    )
}

fn cmd_spectrum(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let matrix = config.drift();
    let points = spectra::evaluate_grid(
        &matrix,
        &config.grid,
        config.params.gamma_photon,
        config.params.n_th,
    )?;
    let file = File::create(out_dir.join("spectrum.csv"))?;
    let mut writer = BufWriter::new(file);
    spectra::write_spectrum_csv(&mut writer, config.params.omega_m, &points)
}

fn cmd_route(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let verdict = router::route_decision(
        &config.params,
        &config.drive,
        config.params.gamma_photon,
        config.params.n_th,
    )?;
    write_json(&out_dir.join("route.json"), &verdict)
}

fn cmd_sweep(config: &RunConfig, out_dir: &Path) -> Result<()> {
    if config.sweep.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep requires at least one sweep.<key> axis".into(),
        ));
    }
    // Enumerate the Cartesian product in lexicographic order over the
    // axes as listed in the config.
    let sizes: Vec<usize> = config.sweep.iter().map(|(_, v)| v.len()).collect();
    let total: usize = sizes.iter().product();
    let mut index = Vec::new();
    for point in 0..total {
        let mut rem = point;
        let mut assignment = Vec::new();
        let mut raw = config.params.raw;
        let mut drive = config.drive;
        for (axis, (key, values)) in config.sweep.iter().enumerate() {
            let stride: usize = sizes[axis + 1..].iter().product();
            let value = values[(rem / stride) % values.len()];
            rem %= stride.max(1);
            apply_assignment(&mut raw, &mut drive, key, value);
            assignment.push((key.clone(), value));
        }
        let params = derive_constants(raw)?;
        drive.validate()?;
        let matrix = if config.case == 2 {
            drift_case2(&params, drive.coupling, drive.epsilon_d, drive.omega_d)
        } else {
            drift_case1(&params, drive.coupling)
        };
        let points =
            spectra::evaluate_grid(&matrix, &config.grid, params.gamma_photon, params.n_th)?;
        let csv_path = format!("sweep_{point:04}.csv");
        let file = File::create(out_dir.join(&csv_path))?;
        let mut writer = BufWriter::new(file);
        spectra::write_spectrum_csv(&mut writer, params.omega_m, &points)?;
        index.push(serde_json::json!({
            "csv_path": csv_path,
            "assignment": assignment
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                .collect::<serde_json::Map<_, _>>(),
        }));
    }
    write_json(
        &out_dir.join("sweep_index.json"),
        &serde_json::json!({
            "grid": { "min": config.grid.min, "max": config.grid.max, "count": config.grid.count },
            "points": index,
        }),
    )
}

#[derive(Parser)]
#[command(
    name = "photon-router",
    about = "Frequency-domain single-photon routing simulator for a modulated optomechanical cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a key=value configuration file; omitted = built-in preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON results.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for grid evaluation; 0 = all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Override the operating case from the config (1 or 2).
    #[arg(long)]
    case: Option<u8>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Classical steady state for the configured coupling.
    Steady(CommonArgs),
    /// Stability certificate (eigenvalues and Routh-Hurwitz).
    Stability(CommonArgs),
    /// Scattering probabilities and output spectra over the detuning grid.
    Spectrum(CommonArgs),
    /// Routing verdict at the operating detuning.
    Route(CommonArgs),
    /// Recompute a reference figure dataset.
    Reproduce {
        #[command(flatten)]
        common: CommonArgs,
        /// Figure to reproduce: fig2, fig3, or fig4.
        #[arg(long)]
        figure: String,
    },
    /// Cartesian-product parameter sweep of spectrum outputs.
    Sweep(CommonArgs),
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => RunConfig::preset(),
    };
    if let Some(case) = common.case {
        if case != 1 && case != 2 {
            return Err(Error::InvalidParameter(format!(
                "--case must be 1 or 2, got {case}"
            )));
        }
        if case == 1 && config.drive.is_modulated() {
            return Err(Error::InvalidParameter(
                "--case 1 is incompatible with epsilon_d > 0".into(),
            ));
        }
        config.case = case;
    }
    Ok(config)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (common, command) = match &cli.command {
        CliCommand::Steady(c) => (c, Command::Steady),
        CliCommand::Stability(c) => (c, Command::Stability),
        CliCommand::Spectrum(c) => (c, Command::Spectrum),
        CliCommand::Route(c) => (c, Command::Route),
        CliCommand::Reproduce { common, figure } => match figure.parse() {
            Ok(fig) => (common, Command::Reproduce(fig)),
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        },
        CliCommand::Sweep(c) => (c, Command::Sweep),
    };
    let result = load_config(common).and_then(|config| run(&config, &command, &common.out, common.workers));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
