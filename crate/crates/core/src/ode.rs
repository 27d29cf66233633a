//! Dormand–Prince 5(4) with adaptive step size for complex first-order systems.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.1,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), OdeError> {
        let tol_ok = |t: f64| t > 0.0 && t <= 1e-6;
        if tol_ok(self.rel_tol) && tol_ok(self.abs_tol) && self.max_step > 0.0 {
            Ok(())
        } else {
            Err(OdeError::InvalidConfig(format!("{self:?}")))
        }
    }
}

const MAX_STEPS: usize = 1_000_000;

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
// 5th order minus embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type State<const N: usize> = [Complex64; N];

fn axpy<const N: usize>(y: &State<N>, h: f64, ks: &[State<N>], coeffs: &[f64]) -> State<N> {
    let mut out = *y;
    for (k, &a) in ks.iter().zip(coeffs) {
        if a != 0.0 {
            for i in 0..N {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction). Calls
/// `on_step(t, y)` after every accepted step, including the final one.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: State<N>,
    t1: f64,
    cfg: &IntegratorConfig,
    mut on_step: S,
) -> Result<State<N>, OdeError>
where
    F: FnMut(f64, &State<N>) -> State<N>,
    S: FnMut(f64, &State<N>),
{
    cfg.validate()?;
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = (span.abs() / 100.0).min(cfg.max_step).min(1e-2);
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(OdeError::TooManySteps(MAX_STEPS));
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        if step <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(OdeError::StepUnderflow(t));
        }
        let hs = dir * step;

        let mut ks: Vec<State<N>> = Vec::with_capacity(7);
        ks.push(k1);
        for s in 1..7 {
            let ys = axpy(&y, hs, &ks, &A[s][..s]);
            ks.push(f(t + C[s] * hs, &ys));
        }
        let y_new = axpy(&y, hs, &ks[..6], &A[6][..6]);

        let mut err_sq = 0.0;
        for i in 0..N {
            let mut e = Complex64::new(0.0, 0.0);
            for (s, k) in ks.iter().enumerate() {
                e += E[s] * k[i];
            }
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(y_new[i].norm());
            err_sq += (hs * e).norm_sqr() / (scale * scale);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y_new;
            k1 = ks[6];
            on_step(t, &y);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (step * factor).min(cfg.max_step);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_exponential() {
        let lam = c(-0.3, 2.0);
        let cfg = IntegratorConfig::default();
        let y = integrate(|_, y: &[Complex64; 1]| [lam * y[0]], 0.0, [c(1.0, 0.0)], 2.0, &cfg, |_, _| {})
            .unwrap();
        let exact = (lam * 2.0).exp();
        assert!((y[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let cfg = IntegratorConfig::default();
        let mut seen = 0;
        let y = integrate(
            |_, y: &[Complex64; 2]| [y[1], -y[0]],
            1.0,
            [c(1f64.sin(), 0.0), c(1f64.cos(), 0.0)],
            -2.0,
            &cfg,
            |_, _| seen += 1,
        )
        .unwrap();
        assert!((y[0] - c((-2f64).sin(), 0.0)).norm() < 1e-9);
        assert!(seen > 10);
    }

    #[test]
    fn zero_span_returns_input() {
        let cfg = IntegratorConfig::default();
        let y0 = [c(1.0, 2.0)];
        assert_eq!(integrate(|_, y: &[Complex64; 1]| *y, 0.5, y0, 0.5, &cfg, |_, _| {}).unwrap(), y0);
    }

    #[test]
    fn rejects_loose_tolerance() {
        let cfg = IntegratorConfig {
            rel_tol: 1e-3,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
