//! Formal linear combinations of Bessel functions `J_{α0 + k}(x)` and the
//! recurrence rewrites that decide when such a combination vanishes.
//!
//! A term is `c(x) θ^d J_{α0+k}(x)` with `θ = x d/dx` acting on `J` only and
//! `c` a [`CoeffPoly`] (Laurent in `x`). Rules:
//!
//! * R1 `θ J_α = x J_{α-1} - α J_α`
//! * R2 `θ J_α = α J_α - x J_{α+1}`
//! * R3 `x J_{α+1} + x J_{α-1} = 2α J_α`, used as a rewrite that moves the
//!   outermost order one step toward the window `{α0, α0 + 1}`.
//!
//! The normal form has no `θ` and only the shifts `0` and `1`. `J_{α0}` and
//! `J_{α0+1}` are independent over rational functions of `x` for symbolic
//! `α0`, so the normal form is unique and an identity holds iff it is empty.

use std::collections::BTreeMap;
use std::fmt;

use super::operator::DiffOperator;
use super::ring::{CoeffPoly, GaussRat};
use super::OpalgError;

type Key = (i32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BesselExpr {
    base: CoeffPoly,
    terms: BTreeMap<Key, CoeffPoly>,
}

/// One rewrite rule, see the module docs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    R1,
    R2,
    R3,
}

impl BesselExpr {
    /// The empty combination over base order `base`.
    pub fn zero(base: CoeffPoly) -> Self {
        Self {
            base,
            terms: BTreeMap::new(),
        }
    }

    /// `J_{base + shift}`.
    pub fn j_shift(base: CoeffPoly, shift: i32) -> Self {
        let mut e = Self::zero(base);
        e.add_term((shift, 0), CoeffPoly::one());
        e
    }

    /// `J_order`, placed relative to `base`; the orders must differ by an integer.
    pub fn j(base: &CoeffPoly, order: &CoeffPoly) -> Result<Self, OpalgError> {
        let diff = order - base;
        let shift = diff
            .as_integer()
            .and_then(|k| i32::try_from(k).ok())
            .ok_or_else(|| OpalgError::IncommensurateOrders {
                base: base.to_string(),
                order: order.to_string(),
            })?;
        Ok(Self::j_shift(base.clone(), shift))
    }

    pub fn base(&self) -> &CoeffPoly {
        &self.base
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(shift, θ-count, coefficient)` triples in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, u32, &CoeffPoly)> {
        self.terms.iter().map(|(&(k, d), c)| (k, d, c))
    }

    fn add_term(&mut self, key: Key, c: CoeffPoly) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_default();
        *entry += &c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn merge(&mut self, other: &BesselExpr) {
        for (&key, c) in &other.terms {
            self.add_term(key, c.clone());
        }
    }

    pub fn plus(&self, other: &BesselExpr) -> Result<Self, OpalgError> {
        if self.base != other.base {
            return Err(OpalgError::IncommensurateOrders {
                base: self.base.to_string(),
                order: other.base.to_string(),
            });
        }
        let mut out = self.clone();
        out.merge(other);
        Ok(out)
    }

    pub fn scale(&self, c: &CoeffPoly) -> Self {
        let mut out = Self::zero(self.base.clone());
        for (&key, v) in &self.terms {
            out.add_term(key, c * v);
        }
        out
    }

    /// `θ = x d/dx` applied to the whole expression.
    pub fn euler(&self) -> Self {
        let mut out = Self::zero(self.base.clone());
        for (&(k, d), c) in &self.terms {
            out.add_term((k, d), c.derive());
            out.add_term((k, d + 1), c.clone());
        }
        out
    }

    /// Applies an operator in `d/dz`, which equals `θ` on functions of `x`.
    pub fn apply(&self, op: &DiffOperator) -> Self {
        let mut out = Self::zero(self.base.clone());
        let mut power = self.clone();
        let top = op.order().unwrap_or(0);
        for n in 0..=top {
            let c = op.coeff(n);
            if !c.is_zero() {
                out.merge(&power.scale(&c));
            }
            if n < top {
                power = power.euler();
            }
        }
        out
    }

    fn order_at(&self, shift: i32) -> CoeffPoly {
        &self.base + &CoeffPoly::int(shift.into())
    }

    /// Rule instances that can fire, as `(shift, θ-count, rule)`.
    pub fn redexes(&self) -> Vec<(i32, u32, Rule)> {
        let mut out = Vec::new();
        for &(k, d) in self.terms.keys() {
            if d > 0 {
                out.push((k, d, Rule::R1));
                out.push((k, d, Rule::R2));
            } else if !(0..=1).contains(&k) {
                out.push((k, d, Rule::R3));
            }
        }
        out
    }

    /// Fires one rule on the term with the given key; `None` if it does not apply.
    pub fn rewrite_once(&self, shift: i32, thetas: u32, rule: Rule) -> Option<Self> {
        let c = self.terms.get(&(shift, thetas))?.clone();
        let alpha = self.order_at(shift);
        let mut replacement = Self::zero(self.base.clone());
        match rule {
            Rule::R1 | Rule::R2 => {
                if thetas == 0 {
                    return None;
                }
                if rule == Rule::R1 {
                    replacement.add_term((shift - 1, 0), CoeffPoly::x_pow(1));
                    replacement.add_term((shift, 0), -&alpha);
                } else {
                    replacement.add_term((shift, 0), alpha);
                    replacement.add_term((shift + 1, 0), -CoeffPoly::x_pow(1));
                }
                for _ in 1..thetas {
                    replacement = replacement.euler();
                }
            }
            Rule::R3 => {
                if thetas != 0 || (0..=1).contains(&shift) {
                    return None;
                }
                // J_{β±1} = (2β/x) J_β - J_{β∓1}, stepping toward the window
                let step = if shift > 1 { -1 } else { 1 };
                let beta = self.order_at(shift + step);
                replacement.add_term(
                    (shift + step, 0),
                    &beta.scale(&GaussRat::int(2)) * &CoeffPoly::x_pow(-1),
                );
                replacement.add_term((shift + 2 * step, 0), -CoeffPoly::one());
            }
        }
        let mut out = self.clone();
        out.terms.remove(&(shift, thetas));
        out.merge(&replacement.scale(&c));
        Some(out)
    }

    pub fn is_normal(&self) -> bool {
        self.redexes().is_empty()
    }

    /// Deterministic normalization: R1 on the most-differentiated term
    /// first, then R3 on the outermost order.
    pub fn normalize(&self) -> Self {
        let mut e = self.clone();
        loop {
            let next = e
                .terms
                .keys()
                .filter(|(_, d)| *d > 0)
                .max_by_key(|(_, d)| *d)
                .map(|&(k, d)| (k, d, Rule::R1))
                .or_else(|| {
                    e.terms
                        .keys()
                        .filter(|(k, _)| !(0..=1).contains(k))
                        .max_by_key(|(k, _)| if *k > 1 { *k - 1 } else { -*k })
                        .map(|&(k, d)| (k, d, Rule::R3))
                });
            match next {
                Some((k, d, rule)) => {
                    e = e.rewrite_once(k, d, rule).expect("redex applies");
                }
                None => return e,
            }
        }
    }
}

/// Normal form of a Bessel combination under R1, R2 and R3.
pub fn rewrite_bessel(expr: &BesselExpr) -> BesselExpr {
    expr.normalize()
}

impl fmt::Display for BesselExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (&(k, d), c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let theta = match d {
                0 => String::new(),
                1 => "θ ".to_string(),
                _ => format!("θ^{} ", d),
            };
            write!(f, "[{}] {}J[α0{:+}]", c, theta, k)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::ring::Symbol;

    fn sigma() -> CoeffPoly {
        CoeffPoly::sym(Symbol::Sigma)
    }

    fn nu() -> CoeffPoly {
        &CoeffPoly::one() - &(&CoeffPoly::i() * &sigma())
    }

    #[test]
    fn recurrence_identity_vanishes() {
        // 2iσ J_{-iσ} + x J_{-iσ+1} + x J_{-iσ-1}
        let base = -&(&CoeffPoly::i() * &sigma());
        let x = CoeffPoly::x_pow(1);
        let e = BesselExpr::j_shift(base.clone(), 0)
            .scale(&(&CoeffPoly::i() * &sigma()).scale(&GaussRat::int(2)))
            .plus(&BesselExpr::j_shift(base.clone(), 1).scale(&x))
            .unwrap()
            .plus(&BesselExpr::j_shift(base, -1).scale(&x))
            .unwrap();
        assert!(rewrite_bessel(&e).is_zero());
    }

    #[test]
    fn single_bessel_is_fixed_point() {
        let e = BesselExpr::j_shift(nu(), 0);
        assert_eq!(rewrite_bessel(&e), e);
        assert!(e.is_normal());
    }

    #[test]
    fn rule_r1_by_definition() {
        // (θ + ν) J_ν - x J_{ν-1}
        let j = BesselExpr::j_shift(nu(), 0);
        let lhs = j.euler().plus(&j.scale(&nu())).unwrap();
        let e = lhs
            .plus(&BesselExpr::j_shift(nu(), -1).scale(&-CoeffPoly::x_pow(1)))
            .unwrap();
        assert!(rewrite_bessel(&e).is_zero());
    }

    #[test]
    fn incommensurate_orders_rejected() {
        let mu = &CoeffPoly::one() + &(&CoeffPoly::i() * &sigma());
        assert!(BesselExpr::j(&nu(), &mu).is_err());
        let minus_mu = -&mu;
        let e = BesselExpr::j(&nu(), &minus_mu).unwrap();
        assert_eq!(e.terms().next().unwrap().0, -2);
    }

    #[test]
    fn normalization_is_idempotent() {
        let e = BesselExpr::j_shift(nu(), 4).euler().euler();
        let n1 = rewrite_bessel(&e);
        assert!(n1.is_normal());
        assert_eq!(rewrite_bessel(&n1), n1);
    }
}
