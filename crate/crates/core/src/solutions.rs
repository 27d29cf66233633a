//! Closed-form solution families and their z-derivatives.
//!
//! Every component is a finite sum `c x^n J_α(x)` or `c x^n θJ_α(x)` with
//! `x = i sqrt(a^2+b^2) e^z` and `θ = x d/dx = d/dz`. Derivatives are taken
//! in that representation using `θ^2 J_α = (α^2 - x^2) J_α`, so they are
//! exact up to the Bessel kernel itself.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::modes::{sigma_values, to_x, ModeError, ModeParameters};
use crate::special::{bessel_j_derivative_in, bessel_j_in, ComplexOrder, EvalDomain, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("class II coincides with class I for orders {0}; a second solution needs a Y-type function")]
    DependentClass(Complex64),
    #[error("helicity branch gives σ = 0; use the zero-helicity regime")]
    ZeroSigma,
    #[error("σ = {given} does not match the branch value {expected}")]
    SigmaMismatch { given: Complex64, expected: Complex64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SigmaNonzero,
    SigmaZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    I,
    II,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Selects one of the closed-form families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SolutionFamily {
    pub regime: Regime,
    pub class: Class,
    /// Only read in the nonzero regime; `None` there means `+`.
    pub sigma_branch: Option<Branch>,
}

impl SolutionFamily {
    pub fn nonzero(class: Class, branch: Branch) -> Self {
        Self {
            regime: Regime::SigmaNonzero,
            class,
            sigma_branch: Some(branch),
        }
    }

    pub fn zero(class: Class) -> Self {
        Self {
            regime: Regime::SigmaZero,
            class,
            sigma_branch: None,
        }
    }
}

impl fmt::Display for SolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.regime {
            Regime::SigmaZero => write!(f, "sigma=0 class {:?}", self.class),
            Regime::SigmaNonzero => {
                let b = match self.sigma_branch.unwrap_or(Branch::Plus) {
                    Branch::Plus => '+',
                    Branch::Minus => '-',
                };
                write!(f, "sigma{b} class {:?}", self.class)
            }
        }
    }
}

/// Bessel orders of `Ψ1` and `Ψ3` for one family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderPair {
    pub psi1: ComplexOrder,
    pub psi3: ComplexOrder,
    /// Classes I and II are linearly dependent (integer order).
    pub degenerate: bool,
}

fn is_integer(z: Complex64) -> bool {
    z.im.abs() < 1e-14 && (z.re - z.re.round()).abs() < 1e-14
}

/// Helicity eigenvalue selected by the family, checked against `params.sigma`.
pub fn resolve_sigma(params: &ModeParameters, family: &SolutionFamily) -> Result<Complex64, SolutionError> {
    let expected = match family.regime {
        Regime::SigmaZero => {
            if family.sigma_branch.is_some() {
                log::warn!("sigma branch is ignored in the zero-helicity regime");
            }
            Complex64::new(0.0, 0.0)
        }
        Regime::SigmaNonzero => {
            let (plus, minus) = sigma_values(params.energy, params.mass);
            let s = match family.sigma_branch.unwrap_or(Branch::Plus) {
                Branch::Plus => plus,
                Branch::Minus => minus,
            };
            if s.norm() == 0.0 {
                return Err(SolutionError::ZeroSigma);
            }
            s
        }
    };
    if let Some(given) = params.sigma {
        if (given - expected).norm() > 1e-12 * expected.norm().max(1.0) {
            return Err(SolutionError::SigmaMismatch { given, expected });
        }
    }
    Ok(expected)
}

/// Orders of the family: `(ν, -μ)` or `(-ν, μ)` with `ν = 1 - iσ`, `μ = 1 + iσ`
/// when `σ ≠ 0`; `±sqrt(1 - 2EM)` for both components when `σ = 0`.
pub fn orders(params: &ModeParameters, family: &SolutionFamily) -> Result<OrderPair, SolutionError> {
    let sigma = resolve_sigma(params, family)?;
    let i = Complex64::i();
    let (o1, o3, base) = match family.regime {
        Regime::SigmaNonzero => {
            let nu = 1.0 - i * sigma;
            let mu = 1.0 + i * sigma;
            match family.class {
                Class::I => (nu, -mu, nu),
                Class::II => (-nu, mu, nu),
            }
        }
        Regime::SigmaZero => {
            let alpha = Complex64::new(1.0 - params.two_em(), 0.0).sqrt();
            match family.class {
                Class::I => (alpha, alpha, alpha),
                Class::II => (-alpha, -alpha, alpha),
            }
        }
    };
    Ok(OrderPair {
        psi1: ComplexOrder::new(o1)?,
        psi3: ComplexOrder::new(o3)?,
        degenerate: is_integer(base),
    })
}

/// Values of `Ψ1, Ψ2, Ψ3` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveTriple {
    pub psi1: Complex64,
    pub psi2: Complex64,
    pub psi3: Complex64,
}

/// Number of z-derivatives carried in a [`WaveJets`] (orders `0..JET_LEN`).
pub const JET_LEN: usize = 4;

/// Components and their z-derivatives `[f, f', f'', f''']` at `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveJets {
    pub z: f64,
    pub psi1: [Complex64; JET_LEN],
    pub psi2: [Complex64; JET_LEN],
    pub psi3: [Complex64; JET_LEN],
}

impl WaveJets {
    pub fn triple(&self) -> WaveTriple {
        WaveTriple {
            psi1: self.psi1[0],
            psi2: self.psi2[0],
            psi3: self.psi3[0],
        }
    }
}

// ---------------------------------------------------------------------------
// jet algebra in x

/// `(order slot, power of x, θ applied to J)`.
type JetKey = (usize, i32, bool);

#[derive(Clone, Debug, Default)]
struct Jet {
    terms: BTreeMap<JetKey, Complex64>,
}

impl Jet {
    fn bessel(slot: usize, power: i32, c: Complex64) -> Self {
        let mut j = Jet::default();
        j.add((slot, power, false), c);
        j
    }

    fn add(&mut self, key: JetKey, c: Complex64) {
        *self.terms.entry(key).or_default() += c;
    }

    fn plus(mut self, other: &Jet) -> Self {
        for (&k, &c) in &other.terms {
            self.add(k, c);
        }
        self
    }

    fn scale(&self, c: Complex64) -> Self {
        Jet {
            terms: self.terms.iter().map(|(&k, &v)| (k, v * c)).collect(),
        }
    }

    fn shift_power(&self, n: i32) -> Self {
        Jet {
            terms: self.terms.iter().map(|(&(s, p, t), &v)| ((s, p + n, t), v)).collect(),
        }
    }

    /// `θ = x d/dx`.
    fn theta(&self, alphas: &[Complex64]) -> Self {
        let mut out = Jet::default();
        for (&(slot, p, t), &c) in &self.terms {
            if p != 0 {
                out.add((slot, p, t), c * f64::from(p));
            }
            if t {
                // θ^2 J = (α^2 - x^2) J
                let a = alphas[slot];
                out.add((slot, p, false), c * a * a);
                out.add((slot, p + 2, false), -c);
            } else {
                out.add((slot, p, true), c);
            }
        }
        out
    }

    fn derivatives(&self, alphas: &[Complex64]) -> [Jet; JET_LEN] {
        let mut out: [Jet; JET_LEN] = Default::default();
        out[0] = self.clone();
        for k in 1..JET_LEN {
            out[k] = out[k - 1].theta(alphas);
        }
        out
    }

    fn eval(&self, x: Complex64, values: &[(Complex64, Complex64)]) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(slot, p, t), &c)| {
                let (j, tj) = values[slot];
                c * x.powi(p) * if t { tj } else { j }
            })
            .sum()
    }
}

struct Construction {
    alphas: Vec<Complex64>,
    psi: [Jet; 3],
    /// Extra expressions for debug output, keyed by name.
    aux: Vec<(&'static str, Jet)>,
}

fn construct(params: &ModeParameters, family: &SolutionFamily) -> Result<Construction, SolutionError> {
    params.validate()?;
    if params.a == 0.0 && params.b == 0.0 {
        return Err(ModeError::DegenerateMomenta.into());
    }
    let ord = orders(params, family)?;
    if ord.degenerate && family.class == Class::II {
        return Err(SolutionError::DependentClass(ord.psi1.value()));
    }
    let sigma = resolve_sigma(params, family)?;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    let p = params.p();
    let pbar = params.pbar();
    let q = params.q();
    let gamma = Complex64::new(params.gamma, 0.0);
    // e^z = -i x / q, e^{-z} = i q / x
    let ez = |j: &Jet| j.shift_power(1).scale(-i / q);
    let emz = |j: &Jet| j.shift_power(-1).scale(i * q);

    match family.regime {
        Regime::SigmaNonzero => {
            let alphas = vec![ord.psi1.value(), ord.psi3.value()];
            let fbar1 = Jet::bessel(0, 0, one);
            let fbar3 = Jet::bessel(1, 0, one);
            let psi1 = fbar1.shift_power(2).scale(1.0 / p);
            let psi3 = fbar3.shift_power(2).scale(1.0 / pbar);
            // Ψ2 = (γ/σ) e^z [(a+ib)Ψ1 + (a-ib)Ψ3]
            let sum = psi1.scale(p).plus(&psi3.scale(pbar));
            let psi2 = ez(&sum).scale(gamma / sigma);
            let aux = vec![
                ("f1", fbar1.scale(1.0 / p)),
                ("f3", fbar3.scale(1.0 / pbar)),
                ("fbar1", fbar1),
                ("fbar3", fbar3),
            ];
            Ok(Construction {
                alphas,
                psi: [psi1, psi2, psi3],
                aux,
            })
        }
        Regime::SigmaZero => {
            let alphas = vec![ord.psi1.value()];
            let g1 = Jet::bessel(0, 0, one);
            let psi1 = g1.shift_power(2).scale(1.0 / p);
            let ratio = -p / pbar;
            let psi3 = psi1.scale(ratio);
            // Ψ2 = i e^{-z} / (γ(a-ib)) (d/dz - 1) Ψ1
            let d_minus_1 = psi1.theta(&alphas).plus(&psi1.scale(-one));
            let psi2 = emz(&d_minus_1).scale(i / (gamma * pbar));
            // (a+ib) Ψ1 = e^z Ψ̄1
            let psibar1 = emz(&psi1.scale(p));
            let psibar3 = emz(&psi3.scale(pbar));
            let aux = vec![("g1", g1), ("psibar1", psibar1), ("psibar3", psibar3)];
            Ok(Construction {
                alphas,
                psi: [psi1, psi2, psi3],
                aux,
            })
        }
    }
}

fn bessel_values(
    alphas: &[Complex64],
    x: Complex64,
    dom: &EvalDomain,
) -> Result<Vec<(Complex64, Complex64)>, SolutionError> {
    alphas
        .iter()
        .map(|&a| {
            let o = ComplexOrder::new(a)?;
            let j = bessel_j_in(o, x, dom)?;
            let dj = bessel_j_derivative_in(o, x, dom)?;
            Ok((j, x * dj))
        })
        .collect()
}

/// Components and z-derivatives up to third order at `z`.
pub fn evaluate_jets(
    params: &ModeParameters,
    family: &SolutionFamily,
    z: f64,
) -> Result<WaveJets, SolutionError> {
    let c = construct(params, family)?;
    let x = to_x(params, z)?;
    let values = bessel_values(&c.alphas, x, &EvalDomain::default())?;
    let jets = |j: &Jet| -> [Complex64; JET_LEN] {
        let ds = j.derivatives(&c.alphas);
        std::array::from_fn(|k| ds[k].eval(x, &values))
    };
    let psi1 = jets(&c.psi[0]);
    let psi2 = jets(&c.psi[1]);
    let psi3 = match family.regime {
        // exact proportionality, same multiplication for every derivative
        Regime::SigmaZero => {
            let ratio = -params.p() / params.pbar();
            psi1.map(|v| ratio * v)
        }
        Regime::SigmaNonzero => jets(&c.psi[2]),
    };
    Ok(WaveJets { z, psi1, psi2, psi3 })
}

/// `(Ψ1, Ψ2, Ψ3)` at `z`.
pub fn evaluate(params: &ModeParameters, family: &SolutionFamily, z: f64) -> Result<WaveTriple, SolutionError> {
    evaluate_jets(params, family, z).map(|j| j.triple())
}

/// Intermediate quantities of the construction at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DebugValues {
    pub z: f64,
    pub x: Complex64,
    pub orders: OrderPair,
    pub sigma: Complex64,
    pub aux: Vec<(String, Complex64)>,
    pub triple: WaveTriple,
}

pub fn evaluate_debug(
    params: &ModeParameters,
    family: &SolutionFamily,
    z: f64,
) -> Result<DebugValues, SolutionError> {
    let c = construct(params, family)?;
    let x = to_x(params, z)?;
    let values = bessel_values(&c.alphas, x, &EvalDomain::default())?;
    let aux = c
        .aux
        .iter()
        .map(|(name, j)| (name.to_string(), j.eval(x, &values)))
        .collect();
    Ok(DebugValues {
        z,
        x,
        orders: orders(params, family)?,
        sigma: resolve_sigma(params, family)?,
        aux,
        triple: evaluate(params, family, z)?,
    })
}

/// `n` uniformly spaced points with both endpoints exact.
pub fn uniform_grid(z_min: f64, z_max: f64, n: usize) -> Result<Vec<f64>, SolutionError> {
    if !(z_min < z_max) || n < 2 {
        return Err(SolutionError::InvalidGrid(format!(
            "need z_min < z_max and n >= 2, got [{z_min}, {z_max}], n = {n}"
        )));
    }
    let step = (z_max - z_min) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| if k == n - 1 { z_max } else { z_min + step * k as f64 })
        .collect())
}

pub fn evaluate_grid(
    params: &ModeParameters,
    family: &SolutionFamily,
    z_min: f64,
    z_max: f64,
    n: usize,
) -> Result<Vec<(f64, WaveTriple)>, SolutionError> {
    evaluate_grid_with(params, family, z_min, z_max, n, Execution::Auto)
}

pub fn evaluate_grid_with(
    params: &ModeParameters,
    family: &SolutionFamily,
    z_min: f64,
    z_max: f64,
    n: usize,
    exec: Execution,
) -> Result<Vec<(f64, WaveTriple)>, SolutionError> {
    let zs = uniform_grid(z_min, z_max, n)?;
    exec::try_map(&zs, exec, |&z| evaluate(params, family, z).map(|t| (z, t)))
}

pub const CSV_HEADER: &str = "z,psi1_re,psi1_im,psi2_re,psi2_im,psi3_re,psi3_im";

/// Writes `# key: value` metadata lines, the header, then one row per point.
pub fn write_grid_csv<W: Write>(
    mut out: W,
    metadata: &[(String, String)],
    rows: &[(f64, WaveTriple)],
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for (z, t) in rows {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            z, t.psi1.re, t.psi1.im, t.psi2.re, t.psi2.im, t.psi3.re, t.psi3.im
        )?;
    }
    Ok(())
}
