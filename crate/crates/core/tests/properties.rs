//! Randomized invariants for the numerical core.

use photon_router::cli::parse_config;
use photon_router::dynamics::{drift_case1, drift_case2, routh_hurwitz_quartic};
use photon_router::model::{RawParams, derive_constants};
use photon_router::spectra::{
    NuGrid, input_spectrum, output_spectra, port_coefficients, probabilities, transfer_row,
};
use proptest::prelude::*;

fn arb_raw_params() -> impl Strategy<Value = RawParams> {
    (
        1e-7..2e-6_f64,              // wavelength
        1e-3..1.0_f64,               // cavity length
        1e-12..1e-9_f64,             // mirror mass
        1e4..1e7_f64,                // omega_m
        0.1..100.0_f64,              // gamma_m
        1e-3..0.5_f64,               // kappa / omega_m
        0.1..2.0_f64,                // Delta / omega_m
        0.0..100.0_f64,              // n_th
        1e-3..2.0_f64,               // Gamma / omega_m
    )
        .prop_map(
            |(wavelength, cavity_length, mirror_mass, omega_m, gamma_m, kappa_frac, delta_frac, n_th, gamma_frac)| {
                RawParams {
                    wavelength,
                    cavity_length,
                    mirror_mass,
                    omega_m,
                    gamma_m,
                    kappa: kappa_frac * omega_m,
                    delta: delta_frac * omega_m,
                    n_th,
                    gamma_photon: gamma_frac * omega_m,
                }
            },
        )
}

proptest! {
    #[test]
    fn two_port_unitarity_holds_without_coupling(
        raw in arb_raw_params(),
        nu_frac in -2.0..2.0_f64,
    ) {
        let p = derive_constants(raw).unwrap();
        let m = drift_case1(&p, 0.0);
        let row = transfer_row(&m, nu_frac * p.omega_m).unwrap();
        let (f_c, f_d) = port_coefficients(&row);
        let probs = probabilities(&f_c, &f_d);
        prop_assert!((probs.f1_c + probs.f1_d - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn sideband_probabilities_agree_between_ports(
        raw in arb_raw_params(),
        g_frac in 0.0..0.3_f64,
        epsilon_frac in 0.0..0.1_f64,
        omega_d_frac in 0.5..1.5_f64,
        nu_frac in -2.0..2.0_f64,
        modulated in any::<bool>(),
    ) {
        let p = derive_constants(raw).unwrap();
        let m = if modulated {
            drift_case2(
                &p,
                g_frac * p.omega_m,
                epsilon_frac * p.gamma_m,
                omega_d_frac * p.omega_m,
            )
        } else {
            drift_case1(&p, g_frac * p.omega_m)
        };
        let row = transfer_row(&m, nu_frac * p.omega_m).unwrap();
        let (f_c, f_d) = port_coefficients(&row);
        let probs = probabilities(&f_c, &f_d);
        prop_assert_eq!(probs.f4.to_bits(), probs.f5.to_bits());
        prop_assert_eq!(row.f[0], row.f[1]);
    }

    #[test]
    fn output_spectra_are_nonnegative_and_additive(
        raw in arb_raw_params(),
        g_frac in 0.0..0.3_f64,
        nu_frac in -2.0..2.0_f64,
    ) {
        let p = derive_constants(raw).unwrap();
        let m = drift_case1(&p, g_frac * p.omega_m);
        let nu = nu_frac * p.omega_m;
        let row = transfer_row(&m, nu).unwrap();
        let (f_c, f_d) = port_coefficients(&row);
        let probs = probabilities(&f_c, &f_d);
        let d = output_spectra(&probs, p.gamma_photon, p.n_th, nu);
        for component in [
            d.signal_c, d.signal_d, d.thermal, d.vacuum_c_back, d.vacuum_d, d.mech_vacuum,
        ] {
            prop_assert!(component >= 0.0);
        }
        let floor = d.thermal + d.vacuum_c_back + d.vacuum_d + d.mech_vacuum;
        prop_assert!((d.s_c_out - (d.signal_c + floor)).abs() <= 1e-15 * d.s_c_out.max(1e-300));
        prop_assert!((d.s_d_out - (d.signal_d + floor)).abs() <= 1e-15 * d.s_d_out.max(1e-300));
    }

    #[test]
    fn lorentzian_symmetry_and_scale_covariance(
        gamma in 1e-2..1e7_f64,
        nu in -1e7..1e7_f64,
        scale in 1e-2..1e2_f64,
    ) {
        let s = input_spectrum(gamma, nu);
        prop_assert!(s > 0.0);
        prop_assert_eq!(s.to_bits(), input_spectrum(gamma, -nu).to_bits());
        let scaled = input_spectrum(scale * gamma, scale * nu);
        prop_assert!((scaled - s / scale).abs() <= 1e-12 * (s / scale));
    }

    #[test]
    fn routh_hurwitz_matches_known_roots(
        re1 in 1.0..1e6_f64,
        re2 in 1.0..1e6_f64,
        im1 in 0.0..1e6_f64,
        im2 in 0.0..1e6_f64,
        s1 in any::<bool>(),
        s2 in any::<bool>(),
    ) {
        // Quartic assembled from two conjugate root pairs with known
        // real parts.
        let a = if s1 { re1 } else { -re1 };
        let c = if s2 { re2 } else { -re2 };
        // (x^2 - 2a x + a^2 + im1^2)(x^2 - 2c x + c^2 + im2^2)
        let (p1, q1) = (-2.0 * a, a * a + im1 * im1);
        let (p2, q2) = (-2.0 * c, c * c + im2 * im2);
        let coeffs = [
            p1 + p2,
            q1 + q2 + p1 * p2,
            p1 * q2 + p2 * q1,
            q1 * q2,
        ];
        let expected_stable = a < 0.0 && c < 0.0;
        prop_assert_eq!(routh_hurwitz_quartic(&coeffs), expected_stable);
    }

    #[test]
    fn config_text_round_trips(
        raw in arb_raw_params(),
        g_frac in 0.0..0.3_f64,
    ) {
        let coupling = g_frac * raw.omega_m;
        let text = format!(
            "wavelength_lambda = {}\ncavity_length_L = {}\nmirror_mass_m = {}\n\
             omega_m = {}\ngamma_m = {}\nkappa = {}\nDelta = {}\nn_th = {}\n\
             Gamma_photon = {}\nG = {}\n",
            raw.wavelength,
            raw.cavity_length,
            raw.mirror_mass,
            raw.omega_m,
            raw.gamma_m,
            raw.kappa,
            raw.delta,
            raw.n_th,
            raw.gamma_photon,
            coupling,
        );
        let config = parse_config(&text).unwrap();
        prop_assert_eq!(config.params.raw, raw);
        prop_assert_eq!(config.drive.coupling, coupling);
    }

    #[test]
    fn grid_points_are_monotone_with_exact_endpoints(
        min in -1e7..1e7_f64,
        width in 1e-3..1e7_f64,
        count in 2..500_usize,
    ) {
        let grid = NuGrid::new(min, min + width, count).unwrap();
        prop_assert_eq!(grid.point(0), min);
        prop_assert!((grid.point(count - 1) - (min + width)).abs() <= 1e-9 * width);
        for i in 1..count {
            prop_assert!(grid.point(i) > grid.point(i - 1));
        }
    }
}
