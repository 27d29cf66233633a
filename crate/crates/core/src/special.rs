//! Complex Gamma, Bessel `J` of complex order and argument, and `K` of
//! imaginary order.
//!
//! `J_ν` uses the ascending series only, with a hard ceiling on `|x|`.
//! Branch: `(x/2)^ν = exp(ν log(x/2))` with the principal logarithm, so the
//! cut lies along the negative real axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("Gamma has a pole at {0}")]
    Pole(f64),
    #[error("|x| = {abs} exceeds the supported ceiling {ceiling}")]
    OutOfDomain { abs: f64, ceiling: f64 },
    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A finite complex Bessel order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexOrder(Complex64);

impl ComplexOrder {
    pub fn new(value: Complex64) -> Result<Self, SpecialError> {
        if value.re.is_finite() && value.im.is_finite() {
            Ok(Self(value))
        } else {
            Err(SpecialError::InvalidArgument(format!("non-finite order {value}")))
        }
    }

    pub fn real(v: f64) -> Result<Self, SpecialError> {
        Self::new(Complex64::new(v, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    fn shifted(self, k: f64) -> Self {
        Self(self.0 + k)
    }
}

impl From<ComplexOrder> for Complex64 {
    fn from(o: ComplexOrder) -> Self {
        o.0
    }
}

/// Limits for the ascending series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalDomain {
    pub max_abs_argument: f64,
    pub series_tail_tol: f64,
    pub max_terms: usize,
}

impl Default for EvalDomain {
    fn default() -> Self {
        Self {
            max_abs_argument: 30.0,
            series_tail_tol: 1e-17,
            max_terms: 400,
        }
    }
}

impl EvalDomain {
    pub fn validate(&self) -> Result<(), SpecialError> {
        let ok = self.max_abs_argument > 0.0
            && self.series_tail_tol > 0.0
            && self.series_tail_tol < 1e-10
            && self.max_terms >= 100;
        if ok {
            Ok(())
        } else {
            Err(SpecialError::InvalidArgument(format!("{self:?}")))
        }
    }
}

// Lanczos, g = 607/128, n = 15 (Godfrey's coefficients)
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

fn nonpositive_integer(z: Complex64) -> Option<f64> {
    (z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()).then_some(z.re)
}

/// `log Γ(z)` for `Re z >= 0.5`; the imaginary part is not reduced mod 2π.
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let w = z - 1.0;
    let mut sum = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (w + k as f64);
    }
    let t = w + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (w + 0.5) * t.ln() - t + sum.ln()
}

/// `Γ(z)`; reflection below `Re z = 1/2`.
pub fn gamma(z: Complex64) -> Result<Complex64, SpecialError> {
    if let Some(n) = nonpositive_integer(z) {
        return Err(SpecialError::Pole(n));
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        Ok(PI / (s * ln_gamma_right(1.0 - z).exp()))
    } else {
        Ok(ln_gamma_right(z).exp())
    }
}

/// `1/Γ(z)`, entire; exactly zero at the poles of `Γ`.
pub fn rgamma(z: Complex64) -> Complex64 {
    if nonpositive_integer(z).is_some() {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        (PI * z).sin() * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// `J_ν(x)` on the default domain.
pub fn bessel_j(nu: ComplexOrder, x: Complex64) -> Result<Complex64, SpecialError> {
    bessel_j_in(nu, x, &EvalDomain::default())
}

/// `J_ν(x)` by the ascending series.
pub fn bessel_j_in(nu: ComplexOrder, x: Complex64, dom: &EvalDomain) -> Result<Complex64, SpecialError> {
    let nu = nu.value();
    let abs = x.norm();
    if !abs.is_finite() {
        return Err(SpecialError::InvalidArgument(format!("non-finite x {x}")));
    }
    if abs > dom.max_abs_argument {
        return Err(SpecialError::OutOfDomain {
            abs,
            ceiling: dom.max_abs_argument,
        });
    }
    // negative integer order: J_{-n} = (-1)^n J_n
    if let Some(n) = nonpositive_integer(nu).filter(|&n| n < 0.0) {
        let sign = if (n as i64) % 2 == 0 { 1.0 } else { -1.0 };
        let j = bessel_j_in(ComplexOrder(Complex64::new(-n, 0.0)), x, dom)?;
        return Ok(sign * j);
    }
    if abs == 0.0 {
        return if nu == Complex64::new(0.0, 0.0) {
            Ok(Complex64::new(1.0, 0.0))
        } else if nu.re > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(SpecialError::InvalidArgument(format!(
                "x^ν is singular or undefined at x = 0 for ν = {nu}"
            )))
        };
    }
    let half = x / 2.0;
    let step = -(half * half);
    let mut term = rgamma(nu + 1.0);
    let mut sum = term;
    let mut k = 0usize;
    loop {
        if k >= dom.max_terms {
            return Err(SpecialError::NonConvergence(dom.max_terms));
        }
        let kf = k as f64;
        let factor = step / ((kf + 1.0) * (nu + kf + 1.0));
        let next = term * factor;
        sum += next;
        k += 1;
        let small = next.norm() <= dom.series_tail_tol * sum.norm();
        if small && factor.norm() < 0.5 {
            break;
        }
        if next.norm() == 0.0 && term.norm() == 0.0 && k > 1 {
            break;
        }
        term = next;
    }
    Ok((nu * half.ln()).exp() * sum)
}

/// `J_ν'(x) = (J_{ν-1}(x) - J_{ν+1}(x)) / 2`.
pub fn bessel_j_derivative(nu: ComplexOrder, x: Complex64) -> Result<Complex64, SpecialError> {
    bessel_j_derivative_in(nu, x, &EvalDomain::default())
}

pub fn bessel_j_derivative_in(
    nu: ComplexOrder,
    x: Complex64,
    dom: &EvalDomain,
) -> Result<Complex64, SpecialError> {
    let lo = bessel_j_in(nu.shifted(-1.0), x, dom)?;
    let hi = bessel_j_in(nu.shifted(1.0), x, dom)?;
    Ok((lo - hi) / 2.0)
}

const K_CUTOFF: f64 = 1e-18;

/// Upper limit where `exp(-w (cosh t - 1)) < K_CUTOFF`.
fn k_truncation(w: f64) -> f64 {
    // cosh t - 1 = ln(1/cutoff) / w
    let target = (1.0 / K_CUTOFF).ln() / w;
    (1.0 + target).acosh()
}

fn check_w(w: f64) -> Result<(), SpecialError> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(SpecialError::InvalidArgument(format!("K needs w > 0, got {w}")))
    }
}

/// `K_{iκ}(w) = ∫_0^∞ exp(-w cosh t) cos(κt) dt`, real for real `κ` and `w > 0`.
pub fn bessel_k_imag_order(kappa: f64, w: f64) -> Result<f64, SpecialError> {
    check_w(w)?;
    let t_max = k_truncation(w);
    let f = |t: f64| {
        let s = (0.5 * t).sinh();
        (-2.0 * w * s * s).exp() * (kappa * t).cos()
    };
    let scaled = quad::integrate(f, 0.0, t_max, &quad::QuadConfig::default())?;
    Ok((-w).exp() * scaled)
}

/// `d/dw K_{iκ}(w) = -∫_0^∞ exp(-w cosh t) cosh t cos(κt) dt`.
pub fn bessel_k_imag_order_derivative(kappa: f64, w: f64) -> Result<f64, SpecialError> {
    check_w(w)?;
    // cosh t grows, so extend the range until the product is negligible
    let mut t_max = k_truncation(w);
    while (-2.0 * w * (0.5 * t_max).sinh().powi(2)).exp() * t_max.cosh() > K_CUTOFF {
        t_max += 0.5;
    }
    let f = |t: f64| {
        let s = (0.5 * t).sinh();
        -(-2.0 * w * s * s).exp() * t.cosh() * (kappa * t).cos()
    };
    let scaled = quad::integrate(f, 0.0, t_max, &quad::QuadConfig::default())?;
    Ok((-w).exp() * scaled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn gamma_classical_values() {
        assert!(rel(gamma(c(1.0, 0.0)).unwrap(), c(1.0, 0.0)) < 1e-15);
        assert!(rel(gamma(c(0.5, 0.0)).unwrap(), c(PI.sqrt(), 0.0)) < 1e-14);
        assert!(rel(gamma(c(5.0, 0.0)).unwrap(), c(24.0, 0.0)) < 1e-14);
    }

    #[test]
    fn gamma_poles() {
        assert_eq!(gamma(c(0.0, 0.0)), Err(SpecialError::Pole(0.0)));
        assert_eq!(gamma(c(-3.0, 0.0)), Err(SpecialError::Pole(-3.0)));
        assert_eq!(rgamma(c(-2.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn j_at_origin() {
        let z = c(0.0, 0.0);
        assert_eq!(bessel_j(ComplexOrder::real(0.0).unwrap(), z).unwrap(), c(1.0, 0.0));
        assert_eq!(bessel_j(ComplexOrder::real(1.0).unwrap(), z).unwrap(), c(0.0, 0.0));
        assert!(bessel_j(ComplexOrder::real(-0.5).unwrap(), z).is_err());
    }

    #[test]
    fn negative_integer_order_reflects() {
        let x = c(1.3, 0.4);
        let j2 = bessel_j(ComplexOrder::real(2.0).unwrap(), x).unwrap();
        let jm2 = bessel_j(ComplexOrder::real(-2.0).unwrap(), x).unwrap();
        let jm3 = bessel_j(ComplexOrder::real(-3.0).unwrap(), x).unwrap();
        let j3 = bessel_j(ComplexOrder::real(3.0).unwrap(), x).unwrap();
        assert_eq!(j2, jm2);
        assert_eq!(j3, -jm3);
    }

    #[test]
    fn ceiling_is_enforced() {
        let r = bessel_j(ComplexOrder::real(0.0).unwrap(), c(0.0, 31.0));
        assert!(matches!(r, Err(SpecialError::OutOfDomain { .. })));
    }

    #[test]
    fn derivative_of_j0_is_minus_j1() {
        let x = c(1.0, 0.0);
        let d = bessel_j_derivative(ComplexOrder::real(0.0).unwrap(), x).unwrap();
        let j1 = bessel_j(ComplexOrder::real(1.0).unwrap(), x).unwrap();
        assert!((d + j1).norm() < 1e-15);
    }

    #[test]
    fn k_rejects_nonpositive_w() {
        assert!(bessel_k_imag_order(1.0, 0.0).is_err());
        assert!(bessel_k_imag_order(1.0, -2.0).is_err());
    }

    #[test]
    fn k_is_even_in_kappa() {
        let a = bessel_k_imag_order(1.7, 2.0).unwrap();
        let b = bessel_k_imag_order(-1.7, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_derivative_matches_finite_difference() {
        for (kappa, w) in [(0.5, 1.0), (2.0, 3.0), (4.0, 0.7)] {
            let h = 1e-3;
            let k = |w: f64| bessel_k_imag_order(kappa, w).unwrap();
            let fd = (k(w - 2.0 * h) - 8.0 * k(w - h) + 8.0 * k(w + h) - k(w + 2.0 * h)) / (12.0 * h);
            let d = bessel_k_imag_order_derivative(kappa, w).unwrap();
            assert!((fd - d).abs() <= 1e-9 * (1.0 + d.abs()), "κ = {kappa}, w = {w}: {fd} vs {d}");
        }
    }

    #[test]
    fn k_solves_modified_bessel_equation() {
        // w^2 K'' + w K' - (w^2 - κ^2) K = 0
        let (kappa, w, h) = (1.3, 1.8, 1e-3);
        let dk = |w: f64| bessel_k_imag_order_derivative(kappa, w).unwrap();
        let k2 = (dk(w - 2.0 * h) - 8.0 * dk(w - h) + 8.0 * dk(w + h) - dk(w + 2.0 * h)) / (12.0 * h);
        let k0 = bessel_k_imag_order(kappa, w).unwrap();
        let res = w * w * k2 + w * dk(w) - (w * w - kappa * kappa) * k0;
        assert!(res.abs() <= 1e-9 * (k0.abs() + dk(w).abs()), "{res}");
    }
}
