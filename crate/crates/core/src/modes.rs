//! Mode parameters, the helicity spectrum, the Bessel variable and the map
//! from physical units.
//!
//! A separated mode is labelled by the energy, the two transverse momenta
//! and the helicity eigenvalue; `M` and `γ` are constants of the model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opalg::SymbolValues;

/// Tetrad normalization used when none is given.
///
/// Several reduction steps close only for `γ^2 = 1/2`, so this is the
/// default rather than 1.
pub const DEFAULT_GAMMA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("transverse momenta a = b = 0: the Bessel variable degenerates")]
    DegenerateMomenta,
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositiveScale { name: &'static str, value: f64 },
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
}

/// One separated mode, in units where the curvature radius is 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParameters {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "M")]
    pub mass: f64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    /// Helicity eigenvalue; `None` until a branch is chosen.
    #[serde(default)]
    pub sigma: Option<Complex64>,
}

impl Default for ModeParameters {
    fn default() -> Self {
        Self {
            energy: 0.1,
            mass: 1.0,
            a: 0.3,
            b: 0.4,
            gamma: DEFAULT_GAMMA,
            sigma: None,
        }
    }
}

impl ModeParameters {
    pub fn validate(&self) -> Result<(), ModeError> {
        for (name, v) in [
            ("E", self.energy),
            ("M", self.mass),
            ("a", self.a),
            ("b", self.b),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(ModeError::NonFinite(name));
            }
        }
        if self.mass <= 0.0 {
            return Err(ModeError::NonPositiveMass(self.mass));
        }
        Ok(())
    }

    pub fn with_sigma(mut self, sigma: Complex64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    /// `a + ib`.
    pub fn p(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    /// `a - ib`.
    pub fn pbar(&self) -> Complex64 {
        Complex64::new(self.a, -self.b)
    }

    /// `a^2 + b^2`.
    pub fn q2(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    pub fn q(&self) -> f64 {
        self.a.hypot(self.b)
    }

    /// `2EM`.
    pub fn two_em(&self) -> f64 {
        2.0 * self.energy * self.mass
    }

    /// Negative energy: the helicity eigenvalues are imaginary.
    pub fn is_bound_like(&self) -> bool {
        self.energy < 0.0
    }

    /// Values for numeric evaluation of exact operators.
    pub fn symbol_values(&self) -> SymbolValues {
        let c = |v: f64| Complex64::new(v, 0.0);
        SymbolValues {
            sigma: self.sigma.unwrap_or_default(),
            energy: c(self.energy),
            mass: c(self.mass),
            eps: c(self.mass + self.energy),
            a: c(self.a),
            b: c(self.b),
            gamma: c(self.gamma),
        }
    }
}

/// `(+sqrt(2ME), -sqrt(2ME))`, principal root; imaginary for `E < 0`.
pub fn sigma_values(energy: f64, mass: f64) -> (Complex64, Complex64) {
    let s = Complex64::new(2.0 * mass * energy, 0.0).sqrt();
    (s, -s)
}

/// `x = i sqrt(a^2+b^2) e^z`.
pub fn to_x(params: &ModeParameters, z: f64) -> Result<Complex64, ModeError> {
    if params.a == 0.0 && params.b == 0.0 {
        return Err(ModeError::DegenerateMomenta);
    }
    Ok(Complex64::new(0.0, params.q() * z.exp()))
}

/// Dimensional constants of one physical mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    pub rho: f64,
    pub hbar: f64,
    pub c: f64,
    pub epsilon_phys: f64,
    pub m_phys: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
}

impl PhysicalUnits {
    pub fn validate(&self) -> Result<(), ModeError> {
        for (name, value) in [
            ("rho", self.rho),
            ("hbar", self.hbar),
            ("c", self.c),
            ("m_phys", self.m_phys),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModeError::NonPositiveScale { name, value });
            }
        }
        Ok(())
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    /// `2εm/ħ^2 - (P1^2 + P2^2)/ħ^2`, the squared flat longitudinal momentum.
    pub fn p3_squared(&self) -> f64 {
        (2.0 * self.epsilon_phys * self.m_phys - self.p1 * self.p1 - self.p2 * self.p2)
            / (self.hbar * self.hbar)
    }

    /// `z = Z/ρ`.
    pub fn z_of(&self, big_z: f64) -> f64 {
        big_z / self.rho
    }
}

/// `E = ερ/(ħc)`, `M = mcρ/ħ`, `a = P1 ρ/ħ`, `b = P2 ρ/ħ`; `γ` is set to the
/// default and `σ` is left unset.
pub fn to_dimensionless(u: &PhysicalUnits) -> Result<ModeParameters, ModeError> {
    u.validate()?;
    Ok(ModeParameters {
        energy: u.epsilon_phys * u.rho / (u.hbar * u.c),
        mass: u.m_phys * u.c * u.rho / u.hbar,
        a: u.p1 * u.rho / u.hbar,
        b: u.p2 * u.rho / u.hbar,
        gamma: DEFAULT_GAMMA,
        sigma: None,
    })
}
