//! Small adaptive Dormand-Prince (RK5(4)) integrator for complex state
//! vectors. Used by the time-domain oracles; the analytic frequency-domain
//! path never touches this module.

use crate::{C64, Error, Result};

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// 5th-order minus embedded 4th-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end` with initial step
/// `h0`, relative tolerance `rtol`, absolute floor `atol`. `observer` is
/// called on every accepted step (including the initial state).
pub fn integrate<const N: usize>(
    mut rhs: impl FnMut(f64, &[C64; N]) -> [C64; N],
    t0: f64,
    y0: [C64; N],
    t_end: f64,
    h0: f64,
    rtol: f64,
    atol: f64,
    mut observer: impl FnMut(f64, &[C64; N]),
) -> Result<[C64; N]> {
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.min(t_end - t0);
    let h_min = 1e-8 * h0;
    observer(t, &y);
    let mut k0 = rhs(t, &y);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [[C64::new(0.0, 0.0); N]; 7];
        k[0] = k0;
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += kj[i] * (a * h);
                    }
                }
            }
            k[stage + 1] = rhs(t + C[stage] * h, &ys);
        }
        // 5th-order solution is stage 6's argument; recompute from weights.
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[5][j];
            if b != 0.0 {
                for i in 0..N {
                    y_new[i] += kj[i] * (b * h);
                }
            }
        }
        let mut err_norm: f64 = 0.0;
        for i in 0..N {
            let mut e = C64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * (E[j] * h);
                }
            }
            let scale = atol + rtol * y[i].norm().max(y_new[i].norm());
            err_norm = err_norm.max(e.norm() / scale);
        }
        if err_norm <= 1.0 {
            t += h;
            y = y_new;
            k0 = k[6];
            observer(t, &y);
        }
        let scale = if err_norm > 0.0 {
            (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        } else {
            MAX_SCALE
        };
        h *= scale;
        if h < h_min && t < t_end {
            return Err(Error::StepSizeTooLarge {
                estimate: err_norm,
                tolerance: 1.0,
            });
        }
    }
    Ok(y)
}
