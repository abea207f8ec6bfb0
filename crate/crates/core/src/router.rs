//! Routing verdicts and reference-figure reproduction.
//!
//! A verdict compares the reflected and transmitted single-photon
//! probabilities at the operating detuning and checks that the signal is
//! not buried in the thermal and vacuum noise floor.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::{self, DriftMatrix, drift_case1, drift_case2};
use crate::model::{DriveParams, ModelParams, paper_drive_case2};
use crate::spectra::{
    self, NuGrid, ScatterProbabilities, SpectrumDecomposition, SpectrumPoint,
};
use crate::{Error, Result};

/// Routing contrast magnitude required for a definite verdict.
pub const CONTRAST_THRESHOLD: f64 = 0.9;
/// Minimum signal-to-noise ratio required for a definite verdict.
pub const SNR_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Transmit,
    Reflect,
    Indeterminate,
}

/// Output port selector for the signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    /// Reflected (left, c) port.
    Reflected,
    /// Transmitted (right, d) port.
    Transmitted,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoutingVerdict {
    pub decision: Decision,
    /// (F1c - F1d) / (F1c + F1d) at the operating detuning.
    pub contrast: f64,
    pub snr_c: f64,
    pub snr_d: f64,
    /// Operating detuning (rad/s): omega_m without modulation, 0 with it.
    pub operating_nu: f64,
    /// Photon linewidth used for the SNR (rad/s).
    pub gamma_photon: f64,
}

/// Signal component divided by the total thermal + vacuum floor at this
/// detuning. An exactly zero floor returns +infinity.
pub fn snr(decomp: &SpectrumDecomposition, port: Port) -> f64 {
    let signal = match port {
        Port::Reflected => decomp.signal_c,
        Port::Transmitted => decomp.signal_d,
    };
    let floor = decomp.noise_floor();
    if floor == 0.0 {
        return f64::INFINITY;
    }
    signal / floor
}

/// Decision rule applied to a contrast and the two port SNRs.
pub fn decide(contrast: f64, snr_c: f64, snr_d: f64) -> Decision {
    let snr_ok = snr_c.max(snr_d) >= SNR_THRESHOLD;
    if contrast < -CONTRAST_THRESHOLD && snr_ok {
        Decision::Transmit
    } else if contrast > CONTRAST_THRESHOLD && snr_ok {
        Decision::Reflect
    } else {
        Decision::Indeterminate
    }
}

/// Drift matrix for the given drive: modulated drives use the
/// rotating-wave case-II matrix, unmodulated drives the case-I matrix.
pub fn drift_for_drive(params: &ModelParams, drive: &DriveParams) -> DriftMatrix {
    if drive.is_modulated() {
        drift_case2(params, drive.coupling, drive.epsilon_d, drive.omega_d)
    } else {
        drift_case1(params, drive.coupling)
    }
}

/// Operating detuning for the given drive.
pub fn operating_nu(params: &ModelParams, drive: &DriveParams) -> f64 {
    if drive.is_modulated() {
        0.0
    } else {
        params.omega_m
    }
}

/// Evaluate the routing verdict at the operating detuning.
pub fn route_decision(
    params: &ModelParams,
    drive: &DriveParams,
    gamma_photon: f64,
    n_th: f64,
) -> Result<RoutingVerdict> {
    drive.validate()?;
    let matrix = drift_for_drive(params, drive);
    let report = dynamics::assess_stability(&matrix)?;
    if !report.stable() {
        return Err(Error::UnstableSystem {
            max_real_part: report.max_real_part,
        });
    }
    let nu = operating_nu(params, drive);
    let probs = spectra::probabilities_at(&matrix, nu)?;
    let decomp = spectra::output_spectra(&probs, gamma_photon, n_th, nu);
    let total = probs.f1_c + probs.f1_d;
    let contrast = if total == 0.0 {
        0.0
    } else {
        (probs.f1_c - probs.f1_d) / total
    };
    let snr_c = snr(&decomp, Port::Reflected);
    let snr_d = snr(&decomp, Port::Transmitted);
    Ok(RoutingVerdict {
        decision: decide(contrast, snr_c, snr_d),
        contrast,
        snr_c,
        snr_d,
        operating_nu: nu,
        gamma_photon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
}

impl FigureId {
    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
        }
    }
}

impl std::str::FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            "fig4" => Ok(FigureId::Fig4),
            other => Err(Error::InvalidParameter(format!(
                "unknown figure `{other}` (expected fig2, fig3, or fig4)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestCurve {
    pub label: String,
    pub params: serde_json::Value,
    pub csv_path: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub figure: String,
    pub curves: Vec<ManifestCurve>,
    pub grid: ManifestGrid,
}

/// The six probability panels shared by the first two reference figures.
const PANELS: [(&str, fn(&ScatterProbabilities) -> f64); 6] = [
    ("F1c", |p| p.f1_c),
    ("F1d", |p| p.f1_d),
    ("F3", |p| p.f3),
    ("F4", |p| p.f4),
    ("F5", |p| p.f5),
    ("F6", |p| p.f6),
];

/// Coupling ratios G/omega_m of the unmodulated figure.
pub const FIG2_COUPLING_RATIOS: [f64; 3] = [1e-4, 0.1, 0.2];
/// Modulation-frequency ratios omega_d/omega_m of the modulated figure.
pub const FIG3_OMEGA_D_RATIOS: [f64; 2] = [0.8, 1.0];
/// Modulation-frequency ratios of the output-spectrum crossover figure.
pub const FIG4_OMEGA_D_RATIOS: [f64; 4] = [0.8, 0.85, 0.9, 1.0];

/// Recompute a reference figure and write its CSV files plus
/// `manifest.json` into `out_dir`. Returns the manifest.
///
/// The probability figures are written one CSV per panel (six files),
/// each holding all caption curves as columns; the output-spectrum figure
/// is written one full spectrum CSV per curve (four files).
pub fn reproduce(params: &ModelParams, figure: FigureId, out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir)?;
    let manifest = match figure {
        FigureId::Fig2 => reproduce_fig2(params, out_dir)?,
        FigureId::Fig3 => reproduce_fig3(params, out_dir)?,
        FigureId::Fig4 => reproduce_fig4(params, out_dir)?,
    };
    let file = File::create(out_dir.join("manifest.json"))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &manifest)?;
    writer.write_all(b"\n")?;
    Ok(manifest)
}

fn panel_manifest(
    figure: FigureId,
    grid: &NuGrid,
    curve_params: &[serde_json::Value],
    out_dir: &Path,
    omega_m: f64,
    curves: &[Vec<SpectrumPoint>],
    column_labels: &[String],
) -> Result<Manifest> {
    let mut entries = Vec::new();
    for (panel, extract) in PANELS {
        let path = format!("{}_{panel}.csv", figure.name());
        write_panel_csv(
            &out_dir.join(&path),
            omega_m,
            grid,
            column_labels,
            curves,
            extract,
        )?;
        entries.push(ManifestCurve {
            label: panel.to_string(),
            params: serde_json::Value::Array(curve_params.to_vec()),
            csv_path: path,
        });
    }
    Ok(Manifest {
        figure: figure.name().to_string(),
        curves: entries,
        grid: ManifestGrid {
            min: grid.min,
            max: grid.max,
            count: grid.count,
        },
    })
}

fn write_panel_csv(
    path: &PathBuf,
    omega_m: f64,
    grid: &NuGrid,
    column_labels: &[String],
    curves: &[Vec<SpectrumPoint>],
    extract: fn(&ScatterProbabilities) -> f64,
) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write!(out, "nu_over_omega_m")?;
    for label in column_labels {
        write!(out, ",{label}")?;
    }
    writeln!(out)?;
    for i in 0..grid.count {
        write!(out, "{}", grid.point(i) / omega_m)?;
        for curve in curves {
            write!(out, ",{}", extract(&curve[i].probs))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn reproduce_fig2(params: &ModelParams, out_dir: &Path) -> Result<Manifest> {
    let grid = NuGrid::case1_default(params.omega_m);
    let mut curves = Vec::new();
    let mut curve_params = Vec::new();
    let mut labels = Vec::new();
    for ratio in FIG2_COUPLING_RATIOS {
        let matrix = drift_case1(params, ratio * params.omega_m);
        curves.push(spectra::evaluate_grid(
            &matrix,
            &grid,
            params.gamma_photon,
            params.n_th,
        )?);
        curve_params.push(serde_json::json!({ "G_over_omega_m": ratio }));
        labels.push(format!("G_over_omega_m={ratio}"));
    }
    panel_manifest(
        FigureId::Fig2,
        &grid,
        &curve_params,
        out_dir,
        params.omega_m,
        &curves,
        &labels,
    )
}

fn reproduce_fig3(params: &ModelParams, out_dir: &Path) -> Result<Manifest> {
    let grid = NuGrid::case2_default(params.omega_m);
    let mut curves = Vec::new();
    let mut curve_params = Vec::new();
    let mut labels = Vec::new();
    for ratio in FIG3_OMEGA_D_RATIOS {
        let drive = paper_drive_case2(&params.raw, ratio * params.omega_m);
        let matrix = drift_case2(params, drive.coupling, drive.epsilon_d, drive.omega_d);
        curves.push(spectra::evaluate_grid(
            &matrix,
            &grid,
            params.gamma_photon,
            params.n_th,
        )?);
        curve_params.push(serde_json::json!({
            "omega_d_over_omega_m": ratio,
            "epsilon_d_over_kappa": drive.epsilon_d / params.kappa,
            "G_over_omega_m": drive.coupling / params.omega_m,
        }));
        labels.push(format!("omega_d_over_omega_m={ratio}"));
    }
    panel_manifest(
        FigureId::Fig3,
        &grid,
        &curve_params,
        out_dir,
        params.omega_m,
        &curves,
        &labels,
    )
}

fn reproduce_fig4(params: &ModelParams, out_dir: &Path) -> Result<Manifest> {
    let grid = NuGrid::case2_default(params.omega_m);
    // Output spectra use n_th = 1 and the narrow photon Gamma = 0.01 kappa.
    let n_th = 1.0;
    let gamma_photon = 0.01 * params.kappa;
    let mut entries = Vec::new();
    for ratio in FIG4_OMEGA_D_RATIOS {
        let drive = paper_drive_case2(&params.raw, ratio * params.omega_m);
        let matrix = drift_case2(params, drive.coupling, drive.epsilon_d, drive.omega_d);
        let points = spectra::evaluate_grid(&matrix, &grid, gamma_photon, n_th)?;
        let path = format!("fig4_omega_d_{ratio}.csv");
        let file = File::create(out_dir.join(&path))?;
        let mut writer = BufWriter::new(file);
        spectra::write_spectrum_csv(&mut writer, params.omega_m, &points)?;
        entries.push(ManifestCurve {
            label: format!("omega_d_over_omega_m={ratio}"),
            params: serde_json::json!({
                "omega_d_over_omega_m": ratio,
                "epsilon_d_over_kappa": drive.epsilon_d / params.kappa,
                "G_over_omega_m": drive.coupling / params.omega_m,
                "n_th": n_th,
                "Gamma_over_kappa": gamma_photon / params.kappa,
            }),
            csv_path: path,
        });
    }
    Ok(Manifest {
        figure: FigureId::Fig4.name().to_string(),
        curves: entries,
        grid: ManifestGrid {
            min: grid.min,
            max: grid.max,
            count: grid.count,
        },
    })
}
