//! Linearized drift matrices for both operating cases and stability
//! certification by two independent methods (dense eigenvalues and the
//! Routh-Hurwitz criterion on the real characteristic quartic).

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::model::ModelParams;
use crate::{C64, Error, Result};

/// Relative imaginary residue allowed in the characteristic polynomial.
const CHAR_POLY_REAL_TOL: f64 = 1e-8;
/// Zero-pivot perturbation for the Routh array, scaled by the row magnitude.
const ROUTH_EPSILON: f64 = 1e-30;

/// Operating case of the drift matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// No mechanical modulation; frame rotating at the pump frequency.
    CaseI,
    /// Modulated mechanics under the rotating-wave approximation; frame
    /// rotating at pump + modulation frequency.
    CaseII,
}

/// Drift matrix over the operator basis (a, b, a-dagger, b-dagger) plus
/// the noise-coupling metadata needed downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    pub entries: Matrix4<C64>,
    pub case_tag: CaseTag,
    /// delta = Delta - omega_d (case II only).
    pub delta_small: Option<f64>,
    /// Delta_m = omega_m - omega_d (case II only).
    pub delta_m: Option<f64>,
    /// Noise couplings (sqrt(2 kappa) per optical port, sqrt(2 gamma)
    /// mechanical).
    pub noise_couplings: [f64; 3],
    /// Set when 2*omega_d is not well separated from the retained
    /// dynamical rates, straining the rotating-wave approximation.
    pub rwa_warning: bool,
}

impl DriftMatrix {
    pub fn optical_coupling(&self) -> f64 {
        self.noise_couplings[0]
    }

    pub fn mechanical_coupling(&self) -> f64 {
        self.noise_couplings[2]
    }
}

/// Drift matrix without the modulation tone (case I); the steady-state
/// detuning shift is dropped, Delta' ~ Delta.
pub fn drift_case1(params: &ModelParams, coupling: f64) -> DriftMatrix {
    assert!(coupling >= 0.0, "effective coupling must be >= 0");
    let two_kappa = 2.0 * params.kappa;
    let delta = params.delta;
    let gamma = params.gamma_m;
    let omega_m = params.omega_m;
    let g = coupling;
    let i = C64::i();
    let entries = Matrix4::new(
        C64::new(-two_kappa, -delta),
        -i * g,
        C64::new(0.0, 0.0),
        -i * g,
        //
        -i * g,
        C64::new(-gamma, -omega_m),
        -i * g,
        C64::new(0.0, 0.0),
        //
        C64::new(0.0, 0.0),
        i * g,
        C64::new(-two_kappa, delta),
        i * g,
        //
        i * g,
        C64::new(0.0, 0.0),
        i * g,
        C64::new(-gamma, omega_m),
    );
    DriftMatrix {
        entries,
        case_tag: CaseTag::CaseI,
        delta_small: None,
        delta_m: None,
        noise_couplings: noise_couplings(params),
        rwa_warning: false,
    }
}

/// Drift matrix with the modulation tone under the rotating-wave
/// approximation (case II), in the frame rotating at omega_p + omega_d.
pub fn drift_case2(
    params: &ModelParams,
    coupling: f64,
    epsilon_d: f64,
    omega_d: f64,
) -> DriftMatrix {
    assert!(coupling >= 0.0, "effective coupling must be >= 0");
    assert!(epsilon_d >= 0.0, "epsilon_d must be >= 0");
    assert!(
        epsilon_d == 0.0 || omega_d > 0.0,
        "epsilon_d > 0 requires omega_d > 0"
    );
    let two_kappa = 2.0 * params.kappa;
    let delta_small = params.delta - omega_d;
    let delta_m = params.omega_m - omega_d;
    let gamma = params.gamma_m;
    let g = coupling;
    let i = C64::i();
    let ed = C64::new(2.0 * epsilon_d, 0.0);
    let entries = Matrix4::new(
        C64::new(-two_kappa, -delta_small),
        -i * g,
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        //
        -i * g,
        C64::new(-gamma, -delta_m),
        C64::new(0.0, 0.0),
        ed,
        //
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-two_kappa, delta_small),
        i * g,
        //
        C64::new(0.0, 0.0),
        ed,
        i * g,
        C64::new(-gamma, delta_m),
    );
    // Soft RWA validity heuristic: the dropped terms oscillate at 2*omega_d.
    let rwa_warning = 2.0 * omega_d < 10.0 * coupling.max(two_kappa);
    DriftMatrix {
        entries,
        case_tag: CaseTag::CaseII,
        delta_small: Some(delta_small),
        delta_m: Some(delta_m),
        noise_couplings: noise_couplings(params),
        rwa_warning,
    }
}

fn noise_couplings(params: &ModelParams) -> [f64; 3] {
    let optical = (2.0 * params.kappa).sqrt();
    [optical, optical, (2.0 * params.gamma_m).sqrt()]
}

/// Stability verdicts from both methods.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// Eigenvalues of the drift matrix (rad/s), sorted by descending
    /// real part.
    pub eigenvalues: [C64; 4],
    pub max_real_part: f64,
    pub routh_hurwitz_pass: bool,
    /// True when the two methods agree.
    pub consistent: bool,
}

impl StabilityReport {
    pub fn stable(&self) -> bool {
        self.max_real_part < 0.0
    }
}

/// Monic characteristic polynomial coefficients [c1, c2, c3, c4] of
/// lambda^4 + c1 lambda^3 + ... + c4, by the Faddeev-LeVerrier recursion.
/// Fails if the coefficients are not real to within `CHAR_POLY_REAL_TOL`
/// relative (conjugate-pairing structure broken).
pub fn characteristic_polynomial(matrix: &Matrix4<C64>) -> Result<[f64; 4]> {
    let identity = Matrix4::<C64>::identity();
    let mut aux = identity;
    let mut coeffs = [C64::new(0.0, 0.0); 4];
    for k in 0..4 {
        let product = matrix * aux;
        let trace = product.trace();
        let c = -trace / (k as f64 + 1.0);
        coeffs[k] = c;
        aux = product + identity * c;
    }
    // Scale per coefficient degree by the matrix magnitude.
    let scale: f64 = matrix
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for (k, c) in coeffs.iter().enumerate() {
        let unit = scale.powi(k as i32 + 1);
        worst = worst.max(c.im.abs() / unit.max(c.norm()));
    }
    if worst > CHAR_POLY_REAL_TOL {
        return Err(Error::ComplexCharPoly { residue: worst });
    }
    Ok([coeffs[0].re, coeffs[1].re, coeffs[2].re, coeffs[3].re])
}

/// Roots of the monic real quartic via the eigenvalues of its companion
/// matrix.
pub fn quartic_roots(coeffs: &[f64; 4]) -> [C64; 4] {
    let [c1, c2, c3, c4] = *coeffs;
    let companion = Matrix4::new(
        -c1, -c2, -c3, -c4, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    );
    let eig: Vector4<C64> = companion.complex_eigenvalues();
    [eig[0], eig[1], eig[2], eig[3]]
}

/// Routh-Hurwitz criterion for the monic real quartic
/// lambda^4 + c1 lambda^3 + c2 lambda^2 + c3 lambda + c4.
///
/// Builds the standard Routh array; an exactly zero first-column pivot is
/// perturbed by `ROUTH_EPSILON` scaled to the row magnitude. Returns true
/// iff the first column has no sign change (all roots strictly in the
/// left half-plane).
pub fn routh_hurwitz_quartic(coeffs: &[f64; 4]) -> bool {
    let [c1, c2, c3, c4] = *coeffs;
    // Rows of the Routh array for degree 4.
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0, c2, c4], vec![c1, c3, 0.0]];
    for k in 2..=4 {
        let prev = rows[k - 1].clone();
        let prev2 = rows[k - 2].clone();
        let mut pivot = prev[0];
        if pivot == 0.0 {
            let magnitude = prev
                .iter()
                .chain(prev2.iter())
                .fold(0.0_f64, |m, v| m.max(v.abs()))
                .max(1.0);
            pivot = ROUTH_EPSILON * magnitude;
        }
        let mut row = vec![0.0; 3];
        for j in 0..2 {
            let a = prev2.get(j + 1).copied().unwrap_or(0.0);
            let b = prev.get(j + 1).copied().unwrap_or(0.0);
            row[j] = (pivot * a - prev2[0] * b) / pivot;
        }
        rows.push(row);
    }
    let mut signs = rows.iter().map(|r| {
        let mut v = r[0];
        if v == 0.0 {
            v = ROUTH_EPSILON;
        }
        v > 0.0
    });
    let first = signs.next().unwrap();
    signs.all(|s| s == first) && first
}

/// Certify stability by dense eigenvalues and by Routh-Hurwitz, and
/// report whether the two verdicts agree.
pub fn assess_stability(matrix: &DriftMatrix) -> Result<StabilityReport> {
    let coeffs = characteristic_polynomial(&matrix.entries)?;
    let mut eigenvalues = quartic_roots(&coeffs);
    eigenvalues.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    let max_real_part = eigenvalues[0].re;
    let routh_hurwitz_pass = routh_hurwitz_quartic(&coeffs);
    let consistent = (max_real_part < 0.0) == routh_hurwitz_pass;
    Ok(StabilityReport {
        eigenvalues,
        max_real_part,
        routh_hurwitz_pass,
        consistent,
    })
}
