//! Explicit Runge-Kutta integration of `dH/dt = Q H`.

use nalgebra::DMatrix;

use crate::attention::inf_norm;
use crate::error::{Error, Result};

/// Largest number of RK4 steps taken for one solve.
pub const RK4_MAX_STEPS: usize = 100_000_000;

/// Fixed-step classical RK4 with `h |Q|_inf <= max_step_norm`.
pub fn rk4(q: &DMatrix<f64>, h0: &DMatrix<f64>, times: &[f64], max_step_norm: f64) -> Result<Vec<DMatrix<f64>>> {
    let norm = inf_norm(q).max(f64::MIN_POSITIVE);
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let needed = (t_end * norm / max_step_norm).ceil() + times.len() as f64;
    if needed.is_nan() || needed > RK4_MAX_STEPS as f64 {
        return Err(Error::StepBudgetExceeded {
            needed,
            limit: RK4_MAX_STEPS,
        });
    }
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = h0.clone();
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span * norm / max_step_norm).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = q * &y;
                let k2 = q * (&y + &k1 * (h / 2.0));
                let k3 = q * (&y + &k2 * (h / 2.0));
                let k4 = q * (&y + &k3 * h);
                y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            if y.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { step: out.len() });
            }
            t = target;
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Tolerances for the embedded Dormand-Prince 5(4) pair.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

// Dormand-Prince tableau. The system is autonomous, so stage times are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
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
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) integration, landing exactly on each requested time.
pub fn dopri5(q: &DMatrix<f64>, h0: &DMatrix<f64>, times: &[f64], opts: AdaptiveOptions) -> Result<Vec<DMatrix<f64>>> {
    let norm = inf_norm(q);
    let mut h = if norm > 0.0 { 0.01 / norm } else { 1.0 };
    let mut t = 0.0f64;
    let mut y = h0.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
    for &target in times {
        while t < target {
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            k.clear();
            for a_row in &A {
                let mut ys = y.clone();
                for (kj, &a) in k.iter().zip(a_row) {
                    if a != 0.0 {
                        ys += kj * (step * a);
                    }
                }
                k.push(q * ys);
            }
            let mut y5 = y.clone();
            let mut err = DMatrix::zeros(y.nrows(), y.ncols());
            for s in 0..7 {
                if B5[s] != 0.0 {
                    y5 += &k[s] * (step * B5[s]);
                }
                let e = B5[s] - B4[s];
                if e != 0.0 {
                    err += &k[s] * (step * e);
                }
            }
            let mut ratio = 0.0f64;
            for ((e, a), b) in err.iter().zip(y.iter()).zip(y5.iter()) {
                let scale = opts.atol + opts.rtol * a.abs().max(b.abs());
                ratio = ratio.max(e.abs() / scale);
            }
            if !ratio.is_finite() {
                return Err(Error::NonFinite { step: steps });
            }
            if ratio <= 1.0 {
                t = if last { target } else { t + step };
                y = y5;
            }
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            if ratio <= 1.0 && last {
                // keep the proposed size for the next interval rather than the clipped one
                h = h.max(step * factor);
            } else {
                h = step * factor;
            }
            steps += 1;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h });
            }
            if steps > opts.max_steps {
                return Err(Error::StepBudgetExceeded {
                    needed: steps as f64,
                    limit: opts.max_steps,
                });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])
    }

    fn closed_form(t: f64) -> (f64, f64) {
        let d = (-2.0 * t).exp();
        ((1.0 + d) / 2.0, (1.0 - d) / 2.0)
    }

    #[test]
    fn rk4_two_state() {
        let f = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let times = [0.0, 0.5, 2.0];
        let out = rk4(&two_state(), &f, &times, 0.1).unwrap();
        for (t, h) in times.iter().zip(&out) {
            let (a, b) = closed_form(*t);
            assert!((h[0] - a).abs() < 1e-6);
            assert!((h[1] - b).abs() < 1e-6);
        }
    }

    #[test]
    fn dopri_two_state() {
        let f = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let times = [0.0, 0.1, 1.0, 10.0];
        let out = dopri5(&two_state(), &f, &times, AdaptiveOptions::default()).unwrap();
        assert_eq!(out[0], f);
        for (t, h) in times.iter().zip(&out) {
            let (a, b) = closed_form(*t);
            assert!((h[0] - a).abs() < 1e-9, "t = {t}");
            assert!((h[1] - b).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn zero_generator_is_identity() {
        let f = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let out = dopri5(&DMatrix::zeros(3, 3), &f, &[4.0], AdaptiveOptions::default()).unwrap();
        assert_eq!(out[0], f);
    }

    #[test]
    fn growth_is_followed() {
        let q = DMatrix::from_element(1, 1, 0.7);
        let f = DMatrix::from_element(1, 1, 1.0);
        let out = dopri5(&q, &f, &[5.0], AdaptiveOptions::default()).unwrap();
        assert!((out[0][0] / 3.5f64.exp() - 1.0).abs() < 1e-8);
    }
}
