//! Reflection from the exponential barrier `φ'' + k^2 φ - q^2 e^{2z} φ = 0`.
//!
//! Wave convention: the incoming wave from `z = -∞` is `e^{ikz}`; with
//! `φ ~ A e^{ikz} + B e^{-ikz}` far to the left, `R = A / B`.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::modes::{ModeError, ModeParameters};
use crate::ode::{self, IntegratorConfig, OdeError};
use crate::opalg::{CoeffPoly, DiffOperator, GaussRat, Symbol};
use crate::special::{self, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("2EM = {0} <= 1: no propagating channel")]
    SubThreshold(f64),
    #[error("barrier needs k > 0 and q > 0, got k = {k}, q = {q}")]
    InvalidBarrier { k: f64, q: f64 },
    #[error("matching setup: {0}")]
    InvalidSetup(String),
    #[error("decomposition is ill-conditioned (|A| = {a:e}, |B| = {b:e})")]
    IllConditioned { a: f64, b: f64 },
    #[error("reduced operator keeps a first-derivative term: {0}")]
    NotSelfAdjoint(String),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierProblem {
    pub k: f64,
    pub q: f64,
}

impl BarrierProblem {
    pub fn new(k: f64, q: f64) -> Result<Self, ScatteringError> {
        if k > 0.0 && q > 0.0 && k.is_finite() && q.is_finite() {
            Ok(Self { k, q })
        } else {
            Err(ScatteringError::InvalidBarrier { k, q })
        }
    }
}

/// Which zero-helicity equation is brought to barrier form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierForm {
    /// `(D^2 - 4D + 2EM + 3 - q^2 e^{2z}) Ψ1 = 0` with `Ψ1 = e^{2z} φ`.
    Psi1,
    /// `(D^2 - 2D + 2EM - q^2 e^{2z}) Ψ̄1 = 0` with `Ψ̄1 = e^z φ`.
    PsiBar1,
}

fn zero_helicity_operator(form: BarrierForm) -> (DiffOperator, i32) {
    let d = DiffOperator::d();
    let two_em = (&CoeffPoly::sym(Symbol::E) * &CoeffPoly::sym(Symbol::M)).scale(&GaussRat::int(2));
    let pot = &CoeffPoly::q2() * &CoeffPoly::exp_z(2);
    let (d_coeff, constant, shift) = match form {
        BarrierForm::Psi1 => (-4, &two_em + &CoeffPoly::int(3), 2),
        BarrierForm::PsiBar1 => (-2, two_em, 1),
    };
    let op = &(&(&d * &d) + &DiffOperator::term(1, CoeffPoly::int(d_coeff)))
        + &DiffOperator::scalar(&constant - &pot);
    (op, shift)
}

/// Removes the first-derivative term by the exponential substitution and
/// reads `k^2` and `q^2` off the reduced operator.
pub fn to_barrier(params: &ModeParameters, form: BarrierForm) -> Result<BarrierProblem, ScatteringError> {
    params.validate()?;
    let (op, shift) = zero_helicity_operator(form);
    let reduced = op.conjugate_by_exp(shift);
    if !reduced.coeff(1).is_zero() || reduced.coeff(2) != CoeffPoly::one() {
        return Err(ScatteringError::NotSelfAdjoint(reduced.to_string()));
    }
    let vals = params.symbol_values();
    let mut k2 = Complex64::new(0.0, 0.0);
    let mut q2 = Complex64::new(0.0, 0.0);
    for (m, c) in reduced.coeff(0).terms() {
        let v = CoeffPoly::monomial(m.with_exp_z(0), c.clone()).eval(&vals, 0.0);
        match m.exp_z() {
            0 => k2 += v,
            2 => q2 -= v,
            e => return Err(ScatteringError::NotSelfAdjoint(format!("unexpected e^({e}z) term"))),
        }
    }
    let k2 = k2.re;
    if k2 <= 0.0 {
        return Err(ScatteringError::SubThreshold(params.two_em()));
    }
    BarrierProblem::new(k2.sqrt(), q2.re.sqrt())
}

/// Complex wavenumber of the nonzero-helicity `Ψ1` equation after
/// `Ψ1 = e^{2z} φ`: the reduced constant is `(σ + i)^2`. Experimental.
pub fn experimental_nonzero_wavenumber(sigma: Complex64) -> Complex64 {
    sigma + Complex64::i()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionResult {
    #[serde(rename = "R")]
    pub r: Complex64,
    #[serde(rename = "abs_R")]
    pub abs_r: f64,
    /// `arg R` in `(-π, π]`.
    pub phase: f64,
}

impl ReflectionResult {
    pub fn from_r(r: Complex64) -> Self {
        Self {
            r,
            abs_r: r.norm(),
            phase: r.arg(),
        }
    }
}

/// Difference of two phases wrapped into `(-π, π]`.
pub fn phase_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// `R = Γ(-ik)/Γ(ik) (q/2)^{2ik}`.
pub fn reflection_analytic(p: &BarrierProblem) -> Result<ReflectionResult, ScatteringError> {
    let ik = Complex64::new(0.0, p.k);
    let ratio = special::gamma(-ik)? / special::gamma(ik)?;
    let r = ratio * (2.0 * ik * (p.q / 2.0).ln()).exp();
    let out = ReflectionResult::from_r(r);
    debug_assert!((out.abs_r - 1.0).abs() < 1e-12);
    Ok(out)
}

/// `R` for complex `k` (no unitarity); used for the experimental channel.
pub fn reflection_analytic_complex(k: Complex64, q: f64) -> Result<ReflectionResult, ScatteringError> {
    let ik = Complex64::i() * k;
    let r = special::gamma(-ik)? / special::gamma(ik)? * (2.0 * ik * (q / 2.0).ln()).exp();
    Ok(ReflectionResult::from_r(r))
}

fn matching_config() -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_step: 0.05,
    }
}

/// Integrates the decaying solution leftward from `z_match` and decomposes
/// it into plane waves at `z_far`.
pub fn reflection_numeric(
    p: &BarrierProblem,
    z_match: f64,
    z_far: f64,
) -> Result<ReflectionResult, ScatteringError> {
    if z_far >= z_match {
        return Err(ScatteringError::InvalidSetup(format!("z_far = {z_far} must be < z_match = {z_match}")));
    }
    let w = p.q * z_match.exp();
    if w < 25.0 * (1.0 - 1e-12) {
        return Err(ScatteringError::InvalidSetup(format!("q e^z_match = {w} < 25")));
    }
    let w_far = p.q * z_far.exp();
    if w_far > 1e-6 * p.k {
        return Err(ScatteringError::InvalidSetup(format!("q e^z_far = {w_far:e} > 1e-6 k")));
    }
    // φ = K_{ik}(q e^z), φ' = w K'(w); normalized to φ(z_match) = 1
    let kv = special::bessel_k_imag_order(p.k, w)?;
    let dk = special::bessel_k_imag_order_derivative(p.k, w)?;
    let y0 = [Complex64::new(1.0, 0.0), Complex64::new(w * dk / kv, 0.0)];
    let k2 = p.k * p.k;
    let q2 = p.q * p.q;
    let rhs = |z: f64, y: &[Complex64; 2]| [y[1], (q2 * (2.0 * z).exp() - k2) * y[0]];
    let y = ode::integrate(rhs, z_match, y0, z_far, &matching_config(), |_, _| {})?;
    let ik = Complex64::new(0.0, p.k);
    let a = (y[0] + y[1] / ik) / 2.0 * (-ik * z_far).exp();
    let b = (y[0] - y[1] / ik) / 2.0 * (ik * z_far).exp();
    if a.norm() < 1e-14 && b.norm() < 1e-14 {
        return Err(ScatteringError::IllConditioned {
            a: a.norm(),
            b: b.norm(),
        });
    }
    Ok(ReflectionResult::from_r(a / b))
}

/// Matching point where `q e^z = 30`; far point where `q e^z = 1e-7 k`.
pub fn default_matching(p: &BarrierProblem) -> (f64, f64) {
    ((30.0 / p.q).ln(), (1e-7 * p.k / p.q).ln())
}

pub fn reflection_numeric_auto(p: &BarrierProblem) -> Result<ReflectionResult, ScatteringError> {
    let (z_match, z_far) = default_matching(p);
    reflection_numeric(p, z_match, z_far)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: f64,
    pub q: f64,
    pub numeric: ReflectionResult,
    pub analytic: ReflectionResult,
    /// Wrapped `numeric.phase - analytic.phase`.
    pub phase_difference: f64,
}

/// Every `(k, q)` pair, `k` outer; output order follows the inputs.
pub fn sweep(k_list: &[f64], q_list: &[f64], exec: Execution) -> Result<Vec<SweepRow>, ScatteringError> {
    let pairs: Vec<(f64, f64)> = k_list
        .iter()
        .flat_map(|&k| q_list.iter().map(move |&q| (k, q)))
        .collect();
    exec::try_map(&pairs, exec, |&(k, q)| {
        let p = BarrierProblem::new(k, q)?;
        let numeric = reflection_numeric_auto(&p)?;
        let analytic = reflection_analytic(&p)?;
        Ok(SweepRow {
            k,
            q,
            numeric,
            analytic,
            phase_difference: phase_difference(numeric.phase, analytic.phase),
        })
    })
}

pub fn write_sweep_csv<W: Write>(
    mut out: W,
    metadata: &[(String, String)],
    rows: &[SweepRow],
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "k,q,abs_R,phase,abs_R_analytic,phase_analytic")?;
    for r in rows {
        writeln!(
            out,
            "{:e},{:e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.k, r.q, r.numeric.abs_r, r.numeric.phase, r.analytic.abs_r, r.analytic.phase
        )?;
    }
    Ok(())
}
