//! Numeric residuals of the differential systems on the closed forms, an
//! independent integrator cross-check, and the flat-space limit study.
//!
//! A residual is `|Σ terms| / max |term|` at one point, so it measures
//! cancellation rather than the absolute size of the solution.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::modes::{ModeError, ModeParameters, PhysicalUnits};
use crate::ode::{self, IntegratorConfig, OdeError};
use crate::solutions::{
    evaluate_jets, resolve_sigma, uniform_grid, Regime, SolutionError, SolutionFamily, WaveJets,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("system {system} does not apply to the {regime:?} regime")]
    FamilyMismatch { system: SystemId, regime: Regime },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Differential systems that can be checked against the closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemId {
    /// Second-order equations for the big components.
    #[serde(rename = "sys7")]
    Pauli,
    /// Helicity eigenvalue relations.
    #[serde(rename = "sys10")]
    Helicity,
    /// First-order pair for `Ψ1`, `Ψ3` after eliminating `Ψ2` (σ ≠ 0).
    #[serde(rename = "sys11c")]
    FirstOrderPair,
    /// Decoupled second-order equations (σ ≠ 0).
    #[serde(rename = "sys12")]
    SecondOrder,
    /// First-order pair in the Bessel variable (σ ≠ 0).
    #[serde(rename = "sys14c")]
    BesselPair,
    /// Zero-helicity relations and the reduced system (σ = 0).
    #[serde(rename = "sys16_17")]
    ZeroHelicity,
    /// Rescaled zero-helicity form (σ = 0).
    #[serde(rename = "sys19")]
    ZeroHelicityRescaled,
}

impl SystemId {
    pub const ALL: [SystemId; 7] = [
        SystemId::Pauli,
        SystemId::Helicity,
        SystemId::FirstOrderPair,
        SystemId::SecondOrder,
        SystemId::BesselPair,
        SystemId::ZeroHelicity,
        SystemId::ZeroHelicityRescaled,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SystemId::Pauli => "sys7",
            SystemId::Helicity => "sys10",
            SystemId::FirstOrderPair => "sys11c",
            SystemId::SecondOrder => "sys12",
            SystemId::BesselPair => "sys14c",
            SystemId::ZeroHelicity => "sys16_17",
            SystemId::ZeroHelicityRescaled => "sys19",
        }
    }

    /// Accepts the tags above and the short CLI forms (`7`, `16-17`, ...).
    pub fn parse(s: &str) -> Option<SystemId> {
        let t = s.trim().trim_start_matches("sys").replace('-', "_");
        Self::ALL.into_iter().find(|id| id.tag().trim_start_matches("sys") == t)
    }

    pub fn applies_to(self, regime: Regime) -> bool {
        match self {
            SystemId::Pauli | SystemId::Helicity => true,
            SystemId::FirstOrderPair | SystemId::SecondOrder | SystemId::BesselPair => {
                regime == Regime::SigmaNonzero
            }
            SystemId::ZeroHelicity | SystemId::ZeroHelicityRescaled => regime == Regime::SigmaZero,
        }
    }

    /// Systems checked for a regime, in order.
    pub fn for_regime(regime: Regime) -> Vec<SystemId> {
        Self::ALL.into_iter().filter(|s| s.applies_to(regime)).collect()
    }
}

impl std::fmt::Display for SystemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            z_min: -3.0,
            z_max: 1.0,
            n: 81,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationResidual {
    pub equation: String,
    pub max_rel_residual: f64,
    pub at_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub version: String,
    pub system_id: SystemId,
    pub family: SolutionFamily,
    pub max_rel_residual: f64,
    pub grid: GridSpec,
    pub params_echo: ModeParameters,
    pub equations: Vec<EquationResidual>,
    pub flags: Vec<String>,
}

/// Anything that yields component jets along `z`.
pub trait JetSource: Sync {
    fn jets(&self, z: f64) -> Result<WaveJets, SolutionError>;
}

/// The closed-form family itself.
#[derive(Clone, Copy, Debug)]
pub struct ClosedForm {
    pub params: ModeParameters,
    pub family: SolutionFamily,
}

impl JetSource for ClosedForm {
    fn jets(&self, z: f64) -> Result<WaveJets, SolutionError> {
        evaluate_jets(&self.params, &self.family, z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    Psi1,
    Psi2,
    Psi3,
}

/// Multiplies one component (with all its derivatives) by `1 + rel`.
#[derive(Clone, Copy, Debug)]
pub struct Perturbed<S> {
    pub inner: S,
    pub component: Component,
    pub rel: f64,
}

impl<S: JetSource> JetSource for Perturbed<S> {
    fn jets(&self, z: f64) -> Result<WaveJets, SolutionError> {
        let mut j = self.inner.jets(z)?;
        let f = 1.0 + self.rel;
        let target = match self.component {
            Component::Psi1 => &mut j.psi1,
            Component::Psi2 => &mut j.psi2,
            Component::Psi3 => &mut j.psi3,
        };
        for v in target.iter_mut() {
            *v *= f;
        }
        Ok(j)
    }
}

fn rel_residual(terms: &[Complex64]) -> f64 {
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    terms.iter().sum::<Complex64>().norm() / scale
}

/// Named term lists of every equation of `system` at one point.
pub fn equation_terms(
    params: &ModeParameters,
    sigma: Complex64,
    system: SystemId,
    j: &WaveJets,
) -> Vec<(&'static str, Vec<Complex64>)> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let p = params.p();
    let pbar = params.pbar();
    let q2 = params.q2();
    let g = Complex64::new(params.gamma, 0.0);
    let two_em = params.two_em();
    let ez = j.z.exp();
    let e2z = (2.0 * j.z).exp();
    let [f1, f1p, f1pp, _] = j.psi1;
    let [f2, f2p, f2pp, _] = j.psi2;
    let [f3, f3p, f3pp, _] = j.psi3;

    match system {
        SystemId::Pauli => vec![
            (
                "psi1",
                vec![f1pp, -2.0 * f1p, (two_em + 1.0) * f1, -q2 * e2z * f1, 2.0 * i * g * ez * pbar * f2],
            ),
            (
                "psi3",
                vec![f3pp, -2.0 * f3p, (two_em + 1.0) * f3, -q2 * e2z * f3, -2.0 * i * g * ez * p * f2],
            ),
            (
                "psi2",
                vec![
                    f2pp,
                    -2.0 * f2p,
                    two_em * f2,
                    -q2 * e2z * f2,
                    -2.0 * i * g * ez * p * f1,
                    2.0 * i * g * ez * pbar * f3,
                ],
            ),
        ],
        SystemId::Helicity => vec![
            ("psi1_relation", vec![g * pbar * ez * f2, -i * f1p, i * f1, -sigma * f1]),
            ("psi2_relation", vec![g * p * ez * f1, g * pbar * ez * f3, -sigma * f2]),
            ("psi3_relation", vec![g * p * ez * f2, i * f3p, -i * f3, -sigma * f3]),
        ],
        SystemId::FirstOrderPair => {
            let s2 = sigma * sigma;
            vec![
                (
                    "psi1_row",
                    vec![pbar * pbar * e2z * f3, -2.0 * i * sigma * f1p, 2.0 * i * sigma * f1, -2.0 * s2 * f1, q2 * e2z * f1],
                ),
                (
                    "psi3_row",
                    vec![p * p * e2z * f1, 2.0 * i * sigma * f3p, -2.0 * i * sigma * f3, -2.0 * s2 * f3, q2 * e2z * f3],
                ),
            ]
        }
        SystemId::SecondOrder => {
            let s2 = sigma * sigma;
            vec![
                ("psi1", vec![f1pp, -4.0 * f1p, (s2 + 3.0 + 2.0 * i * sigma) * f1, -q2 * e2z * f1]),
                ("psi3", vec![f3pp, -4.0 * f3p, (s2 + 3.0 - 2.0 * i * sigma) * f3, -q2 * e2z * f3]),
            ]
        }
        SystemId::BesselPair => {
            // f̄1 = (a+ib) Ψ1 / x^2, θ f̄1 = (a+ib)(Ψ1' - 2Ψ1) / x^2
            let x = Complex64::new(0.0, params.q() * ez);
            let x2 = x * x;
            let fb1 = p * f1 / x2;
            let tfb1 = p * (f1p - 2.0 * f1) / x2;
            let fb3 = pbar * f3 / x2;
            let tfb3 = pbar * (f3p - 2.0 * f3) / x2;
            let nu = one - i * sigma;
            let mu = one + i * sigma;
            vec![
                ("fbar1_row", vec![2.0 * i * sigma * tfb1, 2.0 * i * sigma * nu * fb1, x2 * fb1, x2 * fb3]),
                ("fbar3_row", vec![-2.0 * i * sigma * tfb3, -2.0 * i * sigma * mu * fb3, x2 * fb3, x2 * fb1]),
            ]
        }
        SystemId::ZeroHelicity => {
            let c = i / (ez * g * pbar);
            vec![
                ("psi3_from_psi1", vec![p * f1, pbar * f3]),
                ("psi2_from_psi1", vec![f2, -c * f1p, c * f1]),
                ("psi1", vec![f1pp, -4.0 * f1p, (two_em + 3.0) * f1, -q2 * e2z * f1]),
                ("psi3", vec![f3pp, -4.0 * f3p, (two_em + 3.0) * f3, -q2 * e2z * f3]),
                (
                    "psi2",
                    vec![
                        f2pp,
                        -2.0 * f2p,
                        two_em * f2,
                        -q2 * e2z * f2,
                        2.0 * i * g * ez * pbar * f3,
                        -2.0 * i * g * ez * p * f1,
                    ],
                ),
            ]
        }
        SystemId::ZeroHelicityRescaled => {
            // (a+ib)Ψ1 = e^z Ψ̄1, (a-ib)Ψ3 = e^z Ψ̄3
            let emz = 1.0 / ez;
            let b1 = p * emz * f1;
            let b1p = p * emz * (f1p - f1);
            let b1pp = p * emz * (f1pp - 2.0 * f1p + f1);
            let b3 = pbar * emz * f3;
            vec![
                ("psibar3_from_psibar1", vec![b3, b1]),
                ("psi2_from_psibar1", vec![f2, -i / (g * q2) * b1p]),
                ("psibar1", vec![b1pp, -2.0 * b1p, two_em * b1, -q2 * e2z * b1]),
                ("psi2", vec![f2pp, -2.0 * f2p, two_em * f2, -q2 * e2z * f2, -4.0 * i * g * e2z * b1]),
            ]
        }
    }
}

fn report_flags(params: &ModeParameters, system: SystemId) -> Vec<String> {
    let mut flags = Vec::new();
    if params.is_bound_like() {
        flags.push("negative energy: helicity eigenvalues are imaginary".to_string());
    }
    let gamma_sensitive = matches!(
        system,
        SystemId::Pauli | SystemId::Helicity | SystemId::ZeroHelicity | SystemId::ZeroHelicityRescaled
    );
    if gamma_sensitive && (params.gamma * params.gamma - 0.5).abs() > 1e-12 {
        flags.push(format!(
            "gamma^2 = {} != 1/2: the closed forms satisfy this system only for gamma^2 = 1/2",
            params.gamma * params.gamma
        ));
    }
    flags
}

/// Residual report for the closed-form family.
pub fn residuals(
    params: &ModeParameters,
    family: &SolutionFamily,
    system: SystemId,
    grid: &GridSpec,
) -> Result<ResidualReport, VerifyError> {
    let source = ClosedForm {
        params: *params,
        family: *family,
    };
    residuals_of(&source, params, family, system, grid, Execution::Auto)
}

/// Residual report for any jet source (for example a perturbed one).
pub fn residuals_of<S: JetSource>(
    source: &S,
    params: &ModeParameters,
    family: &SolutionFamily,
    system: SystemId,
    grid: &GridSpec,
    exec: Execution,
) -> Result<ResidualReport, VerifyError> {
    if !system.applies_to(family.regime) {
        return Err(VerifyError::FamilyMismatch {
            system,
            regime: family.regime,
        });
    }
    let sigma = resolve_sigma(params, family)?;
    let zs = uniform_grid(grid.z_min, grid.z_max, grid.n)?;
    let per_point = exec::try_map(&zs, exec, |&z| -> Result<Vec<(&'static str, f64)>, VerifyError> {
        let j = source.jets(z)?;
        Ok(equation_terms(params, sigma, system, &j)
            .into_iter()
            .map(|(name, terms)| (name, rel_residual(&terms)))
            .collect())
    })?;

    let mut equations: Vec<EquationResidual> = Vec::new();
    for (z, row) in zs.iter().zip(&per_point) {
        for (k, (name, r)) in row.iter().enumerate() {
            if equations.len() <= k {
                equations.push(EquationResidual {
                    equation: name.to_string(),
                    max_rel_residual: *r,
                    at_z: *z,
                });
            } else if *r > equations[k].max_rel_residual || r.is_nan() {
                equations[k].max_rel_residual = *r;
                equations[k].at_z = *z;
            }
        }
    }
    let max_rel_residual = equations
        .iter()
        .map(|e| e.max_rel_residual)
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    Ok(ResidualReport {
        version: VERSION.to_string(),
        system_id: system,
        family: *family,
        max_rel_residual,
        grid: *grid,
        params_echo: *params,
        equations,
        flags: report_flags(params, system),
    })
}

// ---------------------------------------------------------------------------
// integrator cross-check

/// Integrates the decoupled second-order equations for `Ψ1` and `Ψ3` from
/// closed-form data at `z0` to `z1` and returns the largest pointwise
/// relative deviation from the closed form over accepted steps.
pub fn integrate_and_compare(
    params: &ModeParameters,
    family: &SolutionFamily,
    z0: f64,
    z1: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, VerifyError> {
    cfg.validate()?;
    let sigma = resolve_sigma(params, family)?;
    let i = Complex64::i();
    let q2 = params.q2();
    // y'' = 4y' - c y + q^2 e^{2z} y
    let (c1, c3) = match family.regime {
        Regime::SigmaNonzero => {
            let base = sigma * sigma + 3.0;
            (base + 2.0 * i * sigma, base - 2.0 * i * sigma)
        }
        Regime::SigmaZero => {
            let c = Complex64::new(params.two_em() + 3.0, 0.0);
            (c, c)
        }
    };
    let start = evaluate_jets(params, family, z0)?;
    if z0 == z1 {
        return Ok(0.0);
    }
    let y0 = [start.psi1[0], start.psi1[1], start.psi3[0], start.psi3[1]];
    let rhs = |z: f64, y: &[Complex64; 4]| {
        let pot = q2 * (2.0 * z).exp();
        [
            y[1],
            4.0 * y[1] - c1 * y[0] + pot * y[0],
            y[3],
            4.0 * y[3] - c3 * y[2] + pot * y[2],
        ]
    };
    let mut worst = 0.0f64;
    let mut failure = None;
    ode::integrate(rhs, z0, y0, z1, cfg, |z, y| {
        if failure.is_some() {
            return;
        }
        match evaluate_jets(params, family, z) {
            Ok(exact) => {
                for (num, ex) in [(y[0], exact.psi1[0]), (y[2], exact.psi3[0])] {
                    let d = (num - ex).norm() / ex.norm().max(f64::MIN_POSITIVE);
                    worst = worst.max(d);
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// flat limit

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatLimitEntry {
    pub rho: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatLimitStudy {
    pub version: String,
    pub units: PhysicalUnits,
    /// `p3^2 = 2εm/ħ^2 - (P1^2+P2^2)/ħ^2`.
    pub p3_squared: f64,
    /// `p3^2 < 0`: the test function is `exp(-|p3| Z)`.
    pub evanescent: bool,
    pub entries: Vec<FlatLimitEntry>,
}

const FLAT_POINTS: usize = 201;

/// Largest residual over `Z ∈ [-1, 1]` of the `Ψ1` equation in physical
/// units, at curvature radius `rho`, applied to the flat solution
/// `(exp(i p3 Z), 0, 0)`.
pub fn flat_limit_residual(u: &PhysicalUnits, rho: f64) -> Result<f64, VerifyError> {
    let u = u.with_rho(rho);
    u.validate()?;
    let hb2 = u.hbar * u.hbar;
    let p3sq = u.p3_squared();
    // Ψ'/Ψ and Ψ''/Ψ for the flat solution
    let (d1, d2) = if p3sq >= 0.0 {
        let k = p3sq.sqrt();
        (Complex64::new(0.0, k), Complex64::new(-p3sq, 0.0))
    } else {
        let k = (-p3sq).sqrt();
        (Complex64::new(-k, 0.0), Complex64::new(-p3sq, 0.0))
    };
    let psi = |big_z: f64| -> Complex64 {
        if p3sq >= 0.0 {
            Complex64::new(0.0, p3sq.sqrt() * big_z).exp()
        } else {
            Complex64::new(-(-p3sq).sqrt() * big_z, 0.0).exp()
        }
    };
    let energy = 2.0 * u.epsilon_phys * u.m_phys / hb2;
    let transverse = (u.p1 * u.p1 + u.p2 * u.p2) / hb2;
    let zs = uniform_grid(-1.0, 1.0, FLAT_POINTS)?;
    let worst = zs
        .iter()
        .map(|&big_z| {
            let f = psi(big_z);
            let lhs = energy * f + d2 * f - (2.0 / u.rho) * d1 * f + f / (u.rho * u.rho)
                - (2.0 * big_z / u.rho).exp() * transverse * f;
            lhs.norm()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

pub fn flat_limit_study(u: &PhysicalUnits, rho_list: &[f64]) -> Result<FlatLimitStudy, VerifyError> {
    if rho_list.is_empty() {
        return Err(VerifyError::InvalidInput("empty rho list".into()));
    }
    if rho_list.windows(2).any(|w| w[0] >= w[1]) || rho_list[0] <= 0.0 {
        return Err(VerifyError::InvalidInput("rho list must be positive and ascending".into()));
    }
    let p3_squared = u.p3_squared();
    if p3_squared < 0.0 {
        log::warn!("p3^2 = {p3_squared} < 0: flat mode is evanescent, comparing with exp(-|p3| Z)");
    }
    let entries = rho_list
        .iter()
        .map(|&rho| flat_limit_residual(u, rho).map(|residual| FlatLimitEntry { rho, residual }))
        .collect::<Result<_, _>>()?;
    Ok(FlatLimitStudy {
        version: VERSION.to_string(),
        units: *u,
        p3_squared,
        evanescent: p3_squared < 0.0,
        entries,
    })
}

pub fn write_flat_limit_csv<W: Write>(
    mut out: W,
    metadata: &[(String, String)],
    study: &FlatLimitStudy,
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "rho,residual")?;
    for e in &study.entries {
        writeln!(out, "{:e},{:e}", e.rho, e.residual)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{Branch, Class};

    #[test]
    fn system_tags_round_trip() {
        for s in SystemId::ALL {
            assert_eq!(SystemId::parse(s.tag()), Some(s));
        }
        assert_eq!(SystemId::parse("16-17"), Some(SystemId::ZeroHelicity));
        assert_eq!(SystemId::parse("11c"), Some(SystemId::FirstOrderPair));
        assert_eq!(SystemId::parse("8"), None);
    }

    #[test]
    fn mismatched_family_is_rejected() {
        let r = residuals(
            &ModeParameters::default(),
            &SolutionFamily::zero(Class::I),
            SystemId::SecondOrder,
            &GridSpec::default(),
        );
        assert!(matches!(r, Err(VerifyError::FamilyMismatch { .. })));
    }

    #[test]
    fn relative_residual_normalization() {
        let t = [Complex64::new(2.0, 0.0), Complex64::new(-2.0, 0.0)];
        assert_eq!(rel_residual(&t), 0.0);
        let t = [Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert_eq!(rel_residual(&t), 0.5);
        assert_eq!(rel_residual(&[Complex64::new(0.0, 0.0)]), 0.0);
    }

    #[test]
    fn zero_interval_integration() {
        let d = integrate_and_compare(
            &ModeParameters::default(),
            &SolutionFamily::nonzero(Class::I, Branch::Plus),
            -1.0,
            -1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn flat_constant_mode_leaves_curvature_term() {
        let u = PhysicalUnits {
            rho: 1.0,
            hbar: 1.0,
            c: 1.0,
            epsilon_phys: 0.0,
            m_phys: 1.0,
            p1: 0.0,
            p2: 0.0,
        };
        for rho in [3.0, 10.0, 250.0] {
            let r = flat_limit_residual(&u, rho).unwrap();
            assert!((r - 1.0 / (rho * rho)).abs() <= 1e-15 / (rho * rho), "{r}");
        }
    }
}
