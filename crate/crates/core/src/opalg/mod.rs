//! Exact operator algebra: Laurent polynomials over Gaussian rationals,
//! linear differential operators in `d/dz`, formal Bessel combinations, and
//! the derivation checks built on them.

pub mod bessel;
pub mod derivation;
pub mod operator;
pub mod ring;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bessel::{rewrite_bessel, BesselExpr, Rule};
pub use derivation::{
    verify_all, verify_bessel_identity, verify_constraint_transport, verify_elimination,
    verify_helicity_reduction, verify_pauli_reductions, verify_second_order_reduction,
    verify_sigma0_identity,
};
pub use operator::{DiffOperator, OperatorMatrix};
pub use ring::{CoeffPoly, GaussRat, Monomial, Symbol, SymbolValues};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OpalgError {
    #[error("coefficient {0} is not invertible in the Laurent ring")]
    NotInvertible(String),
    #[error("substituting zero for {symbol} hits a negative power ({exponent})")]
    SingularSubstitution { symbol: &'static str, exponent: i32 },
    #[error("e^({0}z) has no polynomial form in x (odd exponent)")]
    OddExponential(i32),
    #[error("division by the zero operator")]
    ZeroDivisor,
    #[error("right division needs a divisor with leading coefficient 1")]
    NonMonicDivisor,
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("Bessel orders {order} and {base} do not differ by an integer")]
    IncommensurateOrders { base: String, order: String },
    #[error("mass coefficient is zero; the elimination formulas divide by it")]
    DegenerateMass,
    #[error("constraint row for {0} involves another nondynamical unknown")]
    CoupledConstraint(&'static str),
}

/// Outcome of one exact check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            check_name: name.to_string(),
            passed,
            detail,
        }
    }
}
