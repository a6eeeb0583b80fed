//! Adaptive Dormand–Prince 5(4) integration of complex linear ODE systems.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

impl Tolerances {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            atol: rtol * 1e-2,
            ..Self::default()
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dy/dt = f(t, y)` from `t0`, returning `y` at each of the
/// non-decreasing `times` (all `>= t0`). `f` writes the derivative into its
/// third argument.
pub fn integrate<F>(mut f: F, y0: &[C64], t0: f64, times: &[f64], tol: Tolerances) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.first().is_some_and(|&t| !(t >= t0)) {
        return Err(Error::InvalidInput("sample times must be non-decreasing and after t0".into()));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];
    let mut out = Vec::with_capacity(times.len());

    let mut t = t0;
    f(t, &y, &mut k[0]);
    let mut h = initial_step(&y, &k[0], tol);
    let mut err_prev = 1e-4_f64;
    let mut steps = 0usize;

    for &target in times {
        while t < target {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::Integration(format!("exceeded {} steps at t = {t}", tol.max_steps)));
            }
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += k[j][i] * (step * a);
                        }
                    }
                    stage[i] = acc;
                }
                f(t + C[s] * step, &stage, &mut k[s]);
            }
            // Stage 7 is evaluated at the fifth-order solution (FSAL).
            y_new.copy_from_slice(&stage);
            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (j, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += k[j][i] * (step * w);
                    }
                }
                let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
                let r = e.norm() / sc;
                err_sq += r * r;
            }
            let err = if n == 0 { 0.0 } else { libm::sqrt(err_sq / n as f64) };
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                core::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                let fac = 0.9 * libm::pow(err.max(1e-10), -0.7 / 5.0) * libm::pow(err_prev, 0.4 / 5.0);
                err_prev = err.max(1e-4);
                if !last {
                    h = step * fac.clamp(0.2, 10.0);
                }
            } else {
                let fac = 0.9 * libm::pow(err, -0.2);
                h = step * fac.clamp(0.1, 1.0);
            }
            if h < 1e-14 * (1.0 + libm::fabs(t)) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(y: &[C64], dy: &[C64], tol: Tolerances) -> f64 {
    let n = y.len().max(1) as f64;
    let (mut d0, mut d1) = (0.0, 0.0);
    for (a, b) in y.iter().zip(dy) {
        let sc = tol.atol + tol.rtol * a.norm();
        d0 += (a.norm() / sc).powi(2);
        d1 += (b.norm() / sc).powi(2);
    }
    let (d0, d1) = (libm::sqrt(d0 / n), libm::sqrt(d1 / n));
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.clamp(1e-8, 1.0)
}
