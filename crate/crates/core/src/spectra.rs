//! Frequency-domain transfer coefficients, port scattering probabilities,
//! and noise-decomposed output spectra.
//!
//! The spectral variable `nu` is the Fourier frequency in the rotating
//! frame that defines the drift matrix (pump frame for case I, pump +
//! modulation frame for case II); the incident photon's Lorentzian is
//! centered at `nu = 0` shifted to the operating point by the caller's
//! choice of axis.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{self, DriftMatrix};
use crate::{C64, Error, Result, ode};

/// Relative residual allowed on each column of the linear solve.
const SOLVE_RESIDUAL_TOL: f64 = 1e-12;

/// First row of the transfer matrix relating the intracavity field to the
/// six noise inputs (c_in, d_in, b_in, c_in+, d_in+, b_in+).
#[derive(Debug, Clone, Copy)]
pub struct TransferRow {
    pub nu: f64,
    /// Coefficients of a(nu) on the six inputs.
    pub f: [C64; 6],
    /// The same scaled by sqrt(2 kappa) (output-coupled).
    pub f_primed: [C64; 6],
}

/// Scattering probabilities for one detuning.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScatterProbabilities {
    pub f1_c: f64,
    pub f1_d: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    pub f6: f64,
}

/// Output spectrum at one detuning, split into its components. All
/// spectral densities carry units of seconds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumDecomposition {
    pub nu: f64,
    pub s_in_at_nu: f64,
    pub s_in_at_minus_nu: f64,
    pub signal_c: f64,
    pub signal_d: f64,
    pub thermal: f64,
    pub vacuum_c_back: f64,
    pub vacuum_d: f64,
    pub mech_vacuum: f64,
    pub s_c_out: f64,
    pub s_d_out: f64,
}

impl SpectrumDecomposition {
    pub fn noise_floor(&self) -> f64 {
        self.thermal + self.vacuum_c_back + self.vacuum_d + self.mech_vacuum
    }
}

/// Solve -(M + i nu I) column-wise and contract with the noise-injection
/// patterns to obtain the transfer coefficients.
pub fn transfer_row(matrix: &DriftMatrix, nu: f64) -> Result<TransferRow> {
    let mut a = matrix.entries;
    for k in 0..4 {
        a[(k, k)] += C64::new(0.0, nu);
    }
    let inverse = a
        .lu()
        .try_inverse()
        .ok_or(Error::SingularMatrix { nu })?;
    let transfer = -inverse;
    // Residual of each computed column: (M + i nu I) t_j = -e_j.
    let product = a * transfer;
    for j in 0..4 {
        let col_norm: f64 = (0..4).map(|i| transfer[(i, j)].norm()).sum();
        let a_norm: f64 = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = (a_norm * col_norm).max(1.0);
        for i in 0..4 {
            let expected = if i == j {
                C64::new(-1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            if (product[(i, j)] - expected).norm() > SOLVE_RESIDUAL_TOL * scale {
                return Err(Error::SingularMatrix { nu });
            }
        }
    }
    let optical = matrix.optical_coupling();
    let mechanical = matrix.mechanical_coupling();
    let t = |j: usize| transfer[(0, j)];
    let f = [
        optical * t(0),
        optical * t(0),
        mechanical * t(1),
        optical * t(2),
        optical * t(2),
        mechanical * t(3),
    ];
    let mut f_primed = f;
    for c in &mut f_primed {
        *c *= optical;
    }
    Ok(TransferRow { nu, f, f_primed })
}

/// Output-port coefficient rows from the input-output relation
/// x_out = -x_in + sqrt(2 kappa) a.
pub fn port_coefficients(row: &TransferRow) -> ([C64; 6], [C64; 6]) {
    let mut f_c = row.f_primed;
    let mut f_d = row.f_primed;
    f_c[0] -= 1.0;
    f_d[1] -= 1.0;
    (f_c, f_d)
}

/// Moduli-squared combinations of the port coefficients.
pub fn probabilities(f_c: &[C64; 6], f_d: &[C64; 6]) -> ScatterProbabilities {
    ScatterProbabilities {
        f1_c: f_c[0].norm_sqr(),
        f1_d: f_d[0].norm_sqr(),
        f3: f_c[2].norm_sqr() + f_c[5].norm_sqr(),
        f4: f_c[3].norm_sqr(),
        f5: f_d[4].norm_sqr(),
        f6: f_c[5].norm_sqr(),
    }
}

/// Unit-area Lorentzian spectral density of the incident photon,
/// centered at nu = 0, linewidth `gamma_photon`. Units: seconds.
pub fn input_spectrum(gamma_photon: f64, nu: f64) -> f64 {
    assert!(gamma_photon > 0.0, "photon linewidth must be positive");
    gamma_photon / PI / (nu * nu + gamma_photon * gamma_photon)
}

/// Assemble the decomposed output spectra for both ports at one detuning.
pub fn output_spectra(
    probs: &ScatterProbabilities,
    gamma_photon: f64,
    n_th: f64,
    nu: f64,
) -> SpectrumDecomposition {
    assert!(n_th >= 0.0, "n_th must be >= 0");
    let s_in = input_spectrum(gamma_photon, nu);
    let s_in_neg = input_spectrum(gamma_photon, -nu);
    let signal_c = probs.f1_c * s_in;
    let signal_d = probs.f1_d * s_in;
    let thermal = probs.f3 * n_th;
    let vacuum_c_back = probs.f4 * (s_in_neg + 1.0);
    let vacuum_d = probs.f5;
    let mech_vacuum = probs.f6;
    let noise = thermal + vacuum_c_back + vacuum_d + mech_vacuum;
    SpectrumDecomposition {
        nu,
        s_in_at_nu: s_in,
        s_in_at_minus_nu: s_in_neg,
        signal_c,
        signal_d,
        thermal,
        vacuum_c_back,
        vacuum_d,
        mech_vacuum,
        s_c_out: signal_c + noise,
        s_d_out: signal_d + noise,
    }
}

/// Input port probed by the time-domain oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbePort {
    Optical,
    Mechanical,
}

/// Independent time-domain check of [`transfer_row`]: drive one input
/// port with a classical tone e^{-i nu t}, integrate the linear equations
/// until the transient has decayed, and return the demodulated cavity
/// amplitude divided by the drive amplitude. Equals f1 (optical port) or
/// f3 (mechanical port).
pub fn classical_probe_oracle(matrix: &DriftMatrix, nu: f64, port: ProbePort) -> Result<C64> {
    let report = dynamics::assess_stability(matrix)?;
    if !report.stable() {
        return Err(Error::UnstableSystem {
            max_real_part: report.max_real_part,
        });
    }
    let drive_coupling = match port {
        ProbePort::Optical => matrix.optical_coupling(),
        ProbePort::Mechanical => matrix.mechanical_coupling(),
    };
    let slot = match port {
        ProbePort::Optical => 0,
        ProbePort::Mechanical => 1,
    };
    let m = matrix.entries;
    let rhs = move |t: f64, v: &[C64; 4]| -> [C64; 4] {
        let drive = C64::new(0.0, -nu * t).exp() * drive_coupling;
        let mut dv = [C64::new(0.0, 0.0); 4];
        for i in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..4 {
                acc += m[(i, j)] * v[j];
            }
            dv[i] = acc;
        }
        dv[slot] += drive;
        dv
    };
    let damping_time = 1.0 / report.max_real_part.abs();
    let t_limit = 20.0 * damping_time;
    // Chunk length on the cavity decay scale; the demodulated amplitude
    // is phase-corrected, so chunks need not track the drive period.
    let two_kappa = matrix.optical_coupling().powi(2);
    let chunk = 8.469 / two_kappa;
    let fastest = m.iter().map(|z| z.norm()).fold(nu.abs(), f64::max);
    let h0 = 0.1 / fastest;
    // Absolute error floor matched to the driven response scale so the
    // first steps away from the zero state are acceptable.
    let atol = 1e-12 * drive_coupling / fastest;
    let mut t = 0.0;
    let mut state = [C64::new(0.0, 0.0); 4];
    // Demodulated amplitudes at successive chunk ends. The transient
    // decays geometrically chunk to chunk, so Aitken extrapolation of
    // this sequence removes the dominant transient mode; near-defective
    // drift matrices carry transient prefactors of 10^3 and more, which
    // the raw amplitude alone cannot shed within the time limit.
    let mut history: Vec<C64> = Vec::new();
    loop {
        let t_next = (t + chunk).min(t_limit);
        state = ode::integrate(rhs, t, state, t_next, h0, 1e-12, atol, |_, _| {})?;
        t = t_next;
        let amp = state[0] * C64::new(0.0, nu * t).exp();
        history.push(amp);
        let n = history.len();
        if n >= 3 {
            let d1 = history[n - 1] - history[n - 2];
            let d0 = history[n - 2] - history[n - 3];
            if d1.norm() <= 1e-9 * amp.norm() {
                return Ok(amp);
            }
            if d0.norm() > 0.0 {
                let rho = d1 / d0;
                if rho.norm() < 0.9 {
                    let correction = d1 * rho / (C64::new(1.0, 0.0) - rho);
                    if correction.norm() <= 3e-7 * amp.norm() {
                        return Ok(amp + correction);
                    }
                }
            }
        }
        if t >= t_limit {
            return Err(Error::NotConverged { limit: t_limit });
        }
    }
}

/// Uniform detuning grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl NuGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid count must be >= 2, got {count}"
            )));
        }
        if !(max > min) {
            return Err(Error::InvalidParameter(format!(
                "grid needs max > min, got [{min}, {max}]"
            )));
        }
        Ok(NuGrid { min, max, count })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn point(&self, index: usize) -> f64 {
        self.min + self.step() * index as f64
    }

    /// Default figure grid for the unmodulated case: [0, 2 omega_m].
    pub fn case1_default(omega_m: f64) -> Self {
        NuGrid {
            min: 0.0,
            max: 2.0 * omega_m,
            count: 4001,
        }
    }

    /// Default figure grid for the modulated case: [-omega_m, omega_m].
    pub fn case2_default(omega_m: f64) -> Self {
        NuGrid {
            min: -omega_m,
            max: omega_m,
            count: 4001,
        }
    }
}

/// One fully evaluated grid point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumPoint {
    pub nu: f64,
    pub probs: ScatterProbabilities,
    pub decomposition: SpectrumDecomposition,
}

/// Evaluate probabilities and decomposed spectra over a detuning grid.
/// Points are independent; evaluation is data-parallel and the result is
/// ordered by grid index.
pub fn evaluate_grid(
    matrix: &DriftMatrix,
    grid: &NuGrid,
    gamma_photon: f64,
    n_th: f64,
) -> Result<Vec<SpectrumPoint>> {
    (0..grid.count)
        .into_par_iter()
        .map(|i| {
            let nu = grid.point(i);
            let row = transfer_row(matrix, nu)?;
            let (f_c, f_d) = port_coefficients(&row);
            let probs = probabilities(&f_c, &f_d);
            let decomposition = output_spectra(&probs, gamma_photon, n_th, nu);
            Ok(SpectrumPoint {
                nu,
                probs,
                decomposition,
            })
        })
        .collect()
}

/// CSV schema shared by the spectrum outputs: 14 columns, header row
/// mandatory, shortest round-trip float formatting.
pub const SPECTRUM_CSV_HEADER: &str = "nu_over_omega_m,F1c,F1d,F3,F4,F5,F6,S_in,S_c_out,S_d_out,signal_c,signal_d,thermal,vacuum_total";

pub fn write_spectrum_csv(out: &mut impl std::io::Write, omega_m: f64, points: &[SpectrumPoint]) -> Result<()> {
    writeln!(out, "{SPECTRUM_CSV_HEADER}")?;
    for p in points {
        let d = &p.decomposition;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.nu / omega_m,
            p.probs.f1_c,
            p.probs.f1_d,
            p.probs.f3,
            p.probs.f4,
            p.probs.f5,
            p.probs.f6,
            d.s_in_at_nu,
            d.s_c_out,
            d.s_d_out,
            d.signal_c,
            d.signal_d,
            d.thermal,
            d.vacuum_c_back + d.vacuum_d + d.mech_vacuum,
        )?;
    }
    Ok(())
}

/// Convenience: probabilities at a single detuning.
pub fn probabilities_at(matrix: &DriftMatrix, nu: f64) -> Result<ScatterProbabilities> {
    let row = transfer_row(matrix, nu)?;
    let (f_c, f_d) = port_coefficients(&row);
    Ok(probabilities(&f_c, &f_d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{drift_case1, drift_case2};
    use crate::model::{ModelParams, derive_constants, paper_drive_case2, paper_preset};
    use approx::assert_relative_eq;
    use nalgebra::Matrix4;

    fn params() -> ModelParams {
        derive_constants(paper_preset().0).unwrap()
    }

    #[test]
    fn empty_cavity_is_transparent_on_resonance() {
        let p = params();
        let m = drift_case1(&p, 0.0);
        let row = transfer_row(&m, p.delta).unwrap();
        assert_relative_eq!(row.f_primed[0].re, 1.0, max_relative = 1e-9);
        assert!(row.f_primed[0].im.abs() < 1e-9);
        for j in [2, 3, 4, 5] {
            assert!(row.f_primed[j].norm() < 1e-9, "slot {j} not dark");
        }
        let (f_c, f_d) = port_coefficients(&row);
        let probs = probabilities(&f_c, &f_d);
        assert!(probs.f1_c < 1e-15);
        assert_relative_eq!(probs.f1_d, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn off_resonant_rolloff() {
        let p = params();
        let m = drift_case1(&p, 0.0);
        for nu in [-1e3 * p.omega_m, 1e3 * p.omega_m] {
            let row = transfer_row(&m, nu).unwrap();
            for c in row.f_primed {
                assert!(c.norm() < 1e-3);
            }
        }
    }

    #[test]
    fn dark_cavity_reflects_everything() {
        // All-zero transfer coefficients: f_c = (-1, 0, ...), pure
        // reflection.
        let row = TransferRow {
            nu: 0.0,
            f: [C64::new(0.0, 0.0); 6],
            f_primed: [C64::new(0.0, 0.0); 6],
        };
        let (f_c, f_d) = port_coefficients(&row);
        assert_eq!(f_c[0], C64::new(-1.0, 0.0));
        assert_eq!(f_d[1], C64::new(-1.0, 0.0));
        let probs = probabilities(&f_c, &f_d);
        assert_eq!(probs.f1_c, 1.0);
        // Nothing reaches the far port.
        assert_eq!(probs.f1_d, 0.0);
    }

    #[test]
    fn structural_identities_hold_everywhere() {
        let p = params();
        let drive = paper_drive_case2(&p.raw, 0.8 * p.omega_m);
        let matrices = [
            drift_case1(&p, 0.13 * p.omega_m),
            drift_case2(&p, drive.coupling, drive.epsilon_d, drive.omega_d),
        ];
        for m in &matrices {
            for nu in [-0.7 * p.omega_m, 0.0, 0.31 * p.omega_m, p.omega_m] {
                let row = transfer_row(m, nu).unwrap();
                assert_eq!(row.f[0], row.f[1]);
                assert_eq!(row.f[3], row.f[4]);
                let (f_c, f_d) = port_coefficients(&row);
                let probs = probabilities(&f_c, &f_d);
                assert_eq!(probs.f4, probs.f5);
            }
        }
    }

    #[test]
    fn weak_coupling_transmits_strong_coupling_reflects() {
        let p = params();
        let weak = probabilities_at(&drift_case1(&p, 1e-4 * p.omega_m), p.omega_m).unwrap();
        assert!(weak.f1_c <= 0.05, "F1c = {}", weak.f1_c);
        assert!(weak.f1_d >= 0.95, "F1d = {}", weak.f1_d);
        let strong = probabilities_at(&drift_case1(&p, 0.1 * p.omega_m), p.omega_m).unwrap();
        assert!(strong.f1_c >= 0.95, "F1c = {}", strong.f1_c);
        assert!(strong.f1_d <= 0.05, "F1d = {}", strong.f1_d);
    }

    #[test]
    fn two_port_unitarity_without_coupling() {
        let p = params();
        let m = drift_case1(&p, 0.0);
        for i in 0..60 {
            let nu = -2.0 * p.omega_m + i as f64 * (4.0 * p.omega_m / 59.0);
            let probs = probabilities_at(&m, nu).unwrap();
            assert!(
                (probs.f1_c + probs.f1_d - 1.0).abs() <= 1e-10,
                "unitarity violated at nu = {nu}: {}",
                probs.f1_c + probs.f1_d
            );
        }
    }

    #[test]
    fn lorentzian_values_and_normalization() {
        let p = params();
        let gamma = 0.01 * p.kappa;
        assert_relative_eq!(
            input_spectrum(gamma, 0.0),
            1.0 / (PI * gamma),
            max_relative = 1e-12
        );
        // Maximum over Gamma at fixed nu sits at Gamma = nu.
        let at_peak = input_spectrum(p.omega_m, p.omega_m);
        assert_relative_eq!(at_peak, 1.0 / (2.0 * PI * p.omega_m), max_relative = 1e-12);
        for scale in [0.3, 0.7, 1.5, 3.0] {
            assert!(input_spectrum(scale * p.omega_m, p.omega_m) <= at_peak + 1e-20);
        }
        // Trapezoid quadrature against the arctan antiderivative.
        let half_width = 1e4 * gamma;
        let n = 200_001;
        let step = 2.0 * half_width / (n - 1) as f64;
        let mut integral = 0.0;
        for i in 0..n {
            let nu = -half_width + i as f64 * step;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            integral += w * input_spectrum(gamma, nu) * step;
        }
        let exact = (2.0 / PI) * (half_width / gamma).atan();
        assert_relative_eq!(integral, exact, max_relative = 1e-6);
        assert!((integral - 1.0).abs() < 1e-3);
    }

    #[test]
    fn empty_cavity_spectrum_is_pure_signal() {
        let p = params();
        let probs = probabilities_at(&drift_case1(&p, 0.0), p.delta).unwrap();
        let d = output_spectra(&probs, p.omega_m, 0.0, p.delta);
        assert_relative_eq!(
            d.s_d_out,
            input_spectrum(p.omega_m, p.delta),
            max_relative = 1e-8
        );
        assert!(d.s_c_out < 1e-12 * d.s_d_out);
        assert!(d.noise_floor() < 1e-15);
    }

    #[test]
    fn probe_oracle_empty_cavity() {
        let p = params();
        let m = drift_case1(&p, 0.0);
        let ratio = classical_probe_oracle(&m, p.delta, ProbePort::Optical).unwrap();
        let expected = (2.0 * p.kappa).sqrt() / (2.0 * p.kappa);
        assert_relative_eq!(ratio.re, expected, max_relative = 1e-7);
        assert!(ratio.im.abs() < 1e-7 * expected);
    }

    #[test]
    fn probe_oracle_matches_transfer_row() {
        let p = params();
        let m = drift_case1(&p, 0.1 * p.omega_m);
        for (nu, port) in [
            (p.omega_m, ProbePort::Optical),
            (0.73 * p.omega_m, ProbePort::Optical),
            (p.omega_m, ProbePort::Mechanical),
        ] {
            let row = transfer_row(&m, nu).unwrap();
            let expected = match port {
                ProbePort::Optical => row.f[0],
                ProbePort::Mechanical => row.f[2],
            };
            let probed = classical_probe_oracle(&m, nu, port).unwrap();
            assert!(
                (probed - expected).norm() <= 1e-6 * expected.norm(),
                "port {port:?} at nu = {nu}: {probed} vs {expected}"
            );
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let p = params();
        let mut m = drift_case1(&p, 0.0);
        m.entries = Matrix4::zeros();
        assert!(matches!(
            transfer_row(&m, 0.0),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn grid_evaluation_is_ordered_and_positive() {
        let p = params();
        let m = drift_case1(&p, 0.1 * p.omega_m);
        let grid = NuGrid::new(0.0, 2.0 * p.omega_m, 101).unwrap();
        let points = evaluate_grid(&m, &grid, p.omega_m, 1.0).unwrap();
        assert_eq!(points.len(), 101);
        for (i, pt) in points.iter().enumerate() {
            assert_relative_eq!(pt.nu, grid.point(i), max_relative = 1e-15);
            let d = &pt.decomposition;
            for component in [
                d.signal_c,
                d.signal_d,
                d.thermal,
                d.vacuum_c_back,
                d.vacuum_d,
                d.mech_vacuum,
                d.s_c_out,
                d.s_d_out,
            ] {
                assert!(component >= 0.0);
            }
        }
    }
}
