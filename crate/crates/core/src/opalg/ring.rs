//! Exact coefficient ring for the operator engine.
//!
//! A [`CoeffPoly`] is a Laurent polynomial over the Gaussian rationals
//! `Q(i)` in the scalar symbols of the separated spin-1 system, the
//! exponential generator `e^z` and the Bessel variable `x`. The transverse
//! momenta enter through the two combinations `a + ib` and `a - ib`, which
//! are kept as independent generators: `Q(i)[a, b]` and `Q(i)[a+ib, a-ib]`
//! are the same ring under an invertible linear change of variables, so zero
//! testing is unaffected, while `(a+ib)(a-ib) = a^2 + b^2` collapses on its
//! own and both factors become invertible monomials.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::OpalgError;

/// Exact complex rational `re + i im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussRat {
    re: BigRational,
    im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn int(n: i64) -> Self {
        Self::new(BigRational::from_integer(n.into()), BigRational::zero())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(Self::new(&self.re / &norm, -(&self.im / &norm)))
    }

    pub fn pow(&self, n: i32) -> Option<Self> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        Some(acc)
    }

    /// Returns the value as an integer if it is one.
    pub fn as_integer(&self) -> Option<i64> {
        if self.im.is_zero() && self.re.is_integer() {
            self.re.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl From<i64> for GaussRat {
    fn from(n: i64) -> Self {
        Self::int(n)
    }
}

impl Add for &GaussRat {
    type Output = GaussRat;
    fn add(self, rhs: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &GaussRat {
    type Output = GaussRat;
    fn sub(self, rhs: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &GaussRat {
    type Output = GaussRat;
    fn mul(self, rhs: &GaussRat) -> GaussRat {
        GaussRat::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re.clone(), -self.im.clone())
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-self.im.clone()).is_one() {
                    write!(f, "-i")
                } else {
                    write!(f, "{}i", self.im)
                }
            }
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "({}{}{}i)", self.re, sign, self.im.abs())
            }
        }
    }
}

/// Scalar symbols of the separated system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Helicity eigenvalue σ.
    Sigma,
    /// Nonrelativistic energy E.
    E,
    /// Mass M.
    M,
    /// Total energy ε.
    Eps,
    /// `a + ib`.
    P,
    /// `a - ib`.
    Pbar,
    /// Tetrad constant γ.
    Gamma,
}

impl Symbol {
    pub const ALL: [Symbol; 7] = [
        Symbol::Sigma,
        Symbol::E,
        Symbol::M,
        Symbol::Eps,
        Symbol::P,
        Symbol::Pbar,
        Symbol::Gamma,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Symbol::Sigma => "σ",
            Symbol::E => "E",
            Symbol::M => "M",
            Symbol::Eps => "ε",
            Symbol::P => "(a+ib)",
            Symbol::Pbar => "(a-ib)",
            Symbol::Gamma => "γ",
        }
    }
}

const NSYM: usize = Symbol::ALL.len();

/// Power product of symbols, `e^{kz}` and `x^n` (all exponents may be negative).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    syms: [i32; NSYM],
    exp_z: i32,
    x: i32,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn symbol_exponent(&self, s: Symbol) -> i32 {
        self.syms[s.index()]
    }

    /// Exponent `k` of the `e^{kz}` factor.
    pub fn exp_z(&self) -> i32 {
        self.exp_z
    }

    pub fn x_exponent(&self) -> i32 {
        self.x
    }

    pub fn with_exp_z(&self, k: i32) -> Self {
        Self {
            exp_z: k,
            ..self.clone()
        }
    }

    /// Eigenvalue of `d/dz` on this monomial (`x` is proportional to `e^z`).
    pub fn z_weight(&self) -> i32 {
        self.exp_z + self.x
    }

    fn is_one(&self) -> bool {
        *self == Self::default()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut syms = self.syms;
        for (s, o) in syms.iter_mut().zip(other.syms) {
            *s += o;
        }
        Monomial {
            syms,
            exp_z: self.exp_z + other.exp_z,
            x: self.x + other.x,
        }
    }

    fn inv(&self) -> Monomial {
        Monomial {
            syms: self.syms.map(|e| -e),
            exp_z: -self.exp_z,
            x: -self.x,
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for s in Symbol::ALL {
            match self.syms[s.index()] {
                0 => {}
                1 => parts.push(s.name().to_string()),
                e => parts.push(format!("{}^{}", s.name(), e)),
            }
        }
        match self.exp_z {
            0 => {}
            1 => parts.push("e^{z}".to_string()),
            k => parts.push(format!("e^{{{}z}}", k)),
        }
        match self.x {
            0 => {}
            1 => parts.push("x".to_string()),
            n => parts.push(format!("x^{}", n)),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// Numeric values used to evaluate a [`CoeffPoly`] at a point.
#[derive(Clone, Copy, Debug)]
pub struct SymbolValues {
    pub sigma: Complex64,
    pub energy: Complex64,
    pub mass: Complex64,
    pub eps: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub gamma: Complex64,
}

impl SymbolValues {
    fn value(&self, s: Symbol) -> Complex64 {
        let i = Complex64::i();
        match s {
            Symbol::Sigma => self.sigma,
            Symbol::E => self.energy,
            Symbol::M => self.mass,
            Symbol::Eps => self.eps,
            Symbol::P => self.a + i * self.b,
            Symbol::Pbar => self.a - i * self.b,
            Symbol::Gamma => self.gamma,
        }
    }

    /// `x = i sqrt(a^2 + b^2) e^z`.
    pub fn x_at(&self, z: f64) -> Complex64 {
        Complex64::i() * (self.a * self.a + self.b * self.b).sqrt() * z.exp()
    }
}

/// Canonical Laurent polynomial: no stored zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CoeffPoly {
    terms: BTreeMap<Monomial, GaussRat>,
}

impl CoeffPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussRat::one())
    }

    pub fn constant(c: GaussRat) -> Self {
        Self::monomial(Monomial::one(), c)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(GaussRat::int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::constant(GaussRat::ratio(num, den))
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::constant(GaussRat::i())
    }

    pub fn monomial(m: Monomial, c: GaussRat) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn sym(s: Symbol) -> Self {
        Self::sym_pow(s, 1)
    }

    pub fn sym_pow(s: Symbol, e: i32) -> Self {
        let mut m = Monomial::one();
        m.syms[s.index()] = e;
        Self::monomial(m, GaussRat::one())
    }

    /// `e^{kz}`.
    pub fn exp_z(k: i32) -> Self {
        Self::monomial(
            Monomial {
                exp_z: k,
                ..Monomial::default()
            },
            GaussRat::one(),
        )
    }

    /// `x^n`.
    pub fn x_pow(n: i32) -> Self {
        Self::monomial(
            Monomial {
                x: n,
                ..Monomial::default()
            },
            GaussRat::one(),
        )
    }

    /// `a = ((a+ib) + (a-ib)) / 2`.
    pub fn a() -> Self {
        &(&Self::sym(Symbol::P) + &Self::sym(Symbol::Pbar)) * &Self::ratio(1, 2)
    }

    /// `b = ((a+ib) - (a-ib)) / 2i`.
    pub fn b() -> Self {
        let half_over_i = Self::constant(GaussRat::new(
            BigRational::zero(),
            BigRational::new((-1).into(), 2.into()),
        ));
        &(&Self::sym(Symbol::P) - &Self::sym(Symbol::Pbar)) * &half_over_i
    }

    /// `a^2 + b^2 = (a+ib)(a-ib)`.
    pub fn q2() -> Self {
        &Self::sym(Symbol::P) * &Self::sym(Symbol::Pbar)
    }

    fn add_term(&mut self, m: Monomial, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = &*existing + &c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussRat)> {
        self.terms.iter()
    }

    /// The constant value if the polynomial has no generators at all.
    pub fn as_constant(&self) -> Option<GaussRat> {
        match self.terms.len() {
            0 => Some(GaussRat::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_constant()?.as_integer()
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Inverse of a single-term polynomial.
    pub fn inverse(&self) -> Result<Self, OpalgError> {
        if self.terms.len() != 1 {
            return Err(OpalgError::NotInvertible(self.to_string()));
        }
        let (m, c) = self.terms.iter().next().expect("one term");
        let inv = c
            .inv()
            .ok_or_else(|| OpalgError::NotInvertible(self.to_string()))?;
        Ok(Self::monomial(m.inv(), inv))
    }

    pub fn pow(&self, n: i32) -> Result<Self, OpalgError> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// Action of `d/dz`: each monomial picks up its `z_weight`.
    pub fn derive(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let w = m.z_weight();
            if w != 0 {
                out.add_term(m.clone(), c * &GaussRat::int(w.into()));
            }
        }
        out
    }

    /// Applies the side relation `γ^2 = value` (γ itself stays symbolic).
    pub fn reduce_gamma_square(&self, value: &GaussRat) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.syms[Symbol::Gamma.index()];
            let pairs = e.div_euclid(2);
            let factor = value
                .pow(pairs)
                .expect("γ^2 side relation needs a nonzero value");
            let mut reduced = m.clone();
            reduced.syms[Symbol::Gamma.index()] = e.rem_euclid(2);
            out.add_term(reduced, c * &factor);
        }
        out
    }

    /// Substitutes `s -> value`; negative powers need an invertible value.
    pub fn substitute(&self, s: Symbol, value: &CoeffPoly) -> Result<Self, OpalgError> {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.syms[s.index()];
            let mut rest = m.clone();
            rest.syms[s.index()] = 0;
            let factor = value.pow(e).map_err(|_| OpalgError::SingularSubstitution {
                symbol: s.name(),
                exponent: e,
            })?;
            out += &(&Self::monomial(rest, c.clone()) * &factor);
        }
        Ok(out)
    }

    /// Rewrites even powers of `e^z` through `e^{2z} = -x^2 / ((a+ib)(a-ib))`.
    pub fn exp_to_x(&self) -> Result<Self, OpalgError> {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m.exp_z % 2 != 0 {
                return Err(OpalgError::OddExponential(m.exp_z));
            }
            let half = m.exp_z / 2;
            let mut r = m.clone();
            r.exp_z = 0;
            r.x += m.exp_z;
            r.syms[Symbol::P.index()] -= half;
            r.syms[Symbol::Pbar.index()] -= half;
            let sign = if half.rem_euclid(2) == 0 { 1 } else { -1 };
            out.add_term(r, c * &GaussRat::int(sign));
        }
        Ok(out)
    }

    /// Numeric value at `z`; `x` is taken as `i sqrt(a^2+b^2) e^z`.
    pub fn eval(&self, vals: &SymbolValues, z: f64) -> Complex64 {
        let x = vals.x_at(z);
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = c.to_complex();
                for s in Symbol::ALL {
                    let e = m.syms[s.index()];
                    if e != 0 {
                        v *= vals.value(s).powi(e);
                    }
                }
                if m.exp_z != 0 {
                    v *= (f64::from(m.exp_z) * z).exp();
                }
                if m.x != 0 {
                    v *= x.powi(m.x);
                }
                v
            })
            .sum()
    }

    /// Leading term in monomial order, used for failure diagnostics.
    pub fn first_term(&self) -> Option<(Monomial, GaussRat)> {
        self.terms
            .iter()
            .next()
            .map(|(m, c)| (m.clone(), c.clone()))
    }
}

impl From<GaussRat> for CoeffPoly {
    fn from(c: GaussRat) -> Self {
        Self::constant(c)
    }
}

impl AddAssign<&CoeffPoly> for CoeffPoly {
    fn add_assign(&mut self, rhs: &CoeffPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl Add for &CoeffPoly {
    type Output = CoeffPoly;
    fn add(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for CoeffPoly {
    type Output = CoeffPoly;
    fn add(mut self, rhs: CoeffPoly) -> CoeffPoly {
        self += &rhs;
        self
    }
}

impl Sub for &CoeffPoly {
    type Output = CoeffPoly;
    fn sub(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub for CoeffPoly {
    type Output = CoeffPoly;
    fn sub(self, rhs: CoeffPoly) -> CoeffPoly {
        &self - &rhs
    }
}

impl Neg for &CoeffPoly {
    type Output = CoeffPoly;
    fn neg(self) -> CoeffPoly {
        CoeffPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for CoeffPoly {
    type Output = CoeffPoly;
    fn neg(self) -> CoeffPoly {
        -&self
    }
}

impl Mul for &CoeffPoly {
    type Output = CoeffPoly;
    fn mul(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = CoeffPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for CoeffPoly {
    type Output = CoeffPoly;
    fn mul(self, rhs: CoeffPoly) -> CoeffPoly {
        &self * &rhs
    }
}

impl fmt::Display for CoeffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", c)?;
            } else if c.as_integer() == Some(1) {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", c, m)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: Symbol) -> CoeffPoly {
        CoeffPoly::sym(s)
    }

    #[test]
    fn momenta_combine_into_q2() {
        let a = CoeffPoly::a();
        let b = CoeffPoly::b();
        let q2 = &(&a * &a) + &(&b * &b);
        assert_eq!(q2, CoeffPoly::q2());
        let p = &a + &(&CoeffPoly::i() * &b);
        assert_eq!(p, sym(Symbol::P));
    }

    #[test]
    fn inverse_of_monomial() {
        let m = &CoeffPoly::int(3) * &(&sym(Symbol::M) * &CoeffPoly::exp_z(2));
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, CoeffPoly::one());
        assert!(CoeffPoly::zero().inverse().is_err());
        assert!((&sym(Symbol::M) + &CoeffPoly::one()).inverse().is_err());
    }

    #[test]
    fn derive_uses_exponential_and_x_weights() {
        let p = &CoeffPoly::exp_z(2) + &(&CoeffPoly::x_pow(3) * &sym(Symbol::Sigma));
        let d = p.derive();
        let expected = &CoeffPoly::exp_z(2).scale(&GaussRat::int(2))
            + &(&CoeffPoly::x_pow(3) * &sym(Symbol::Sigma)).scale(&GaussRat::int(3));
        assert_eq!(d, expected);
        assert!(CoeffPoly::int(7).derive().is_zero());
    }

    #[test]
    fn gamma_square_relation() {
        let g = sym(Symbol::Gamma);
        let half = GaussRat::ratio(1, 2);
        assert_eq!((&g * &g).reduce_gamma_square(&half), CoeffPoly::ratio(1, 2));
        // 1/γ = 2γ when γ^2 = 1/2
        let inv = g.inverse().unwrap().reduce_gamma_square(&half);
        assert_eq!(inv, g.scale(&GaussRat::int(2)));
    }

    #[test]
    fn substitution_of_zero_into_negative_power_fails() {
        let p = sym(Symbol::M).inverse().unwrap();
        assert!(p.substitute(Symbol::M, &CoeffPoly::zero()).is_err());
        let q = &sym(Symbol::M) * &sym(Symbol::Sigma);
        assert!(q.substitute(Symbol::M, &CoeffPoly::zero()).unwrap().is_zero());
    }

    #[test]
    fn exp_to_x_maps_e2z() {
        let e2 = CoeffPoly::exp_z(2);
        let x = e2.exp_to_x().unwrap();
        let expected = -&(&CoeffPoly::x_pow(2) * &CoeffPoly::q2().inverse().unwrap());
        assert_eq!(x, expected);
        assert!(CoeffPoly::exp_z(1).exp_to_x().is_err());
    }

    #[test]
    fn eval_matches_hand_value() {
        let vals = SymbolValues {
            sigma: Complex64::new(1.0, 0.0),
            energy: Complex64::new(0.5, 0.0),
            mass: Complex64::new(1.0, 0.0),
            eps: Complex64::new(1.5, 0.0),
            a: Complex64::new(3.0, 0.0),
            b: Complex64::new(4.0, 0.0),
            gamma: Complex64::new(1.0, 0.0),
        };
        let p = &CoeffPoly::q2() * &CoeffPoly::exp_z(2);
        let v = p.eval(&vals, 0.5);
        assert!((v - Complex64::new(25.0 * 1f64.exp(), 0.0)).norm() < 1e-12);
        // x^2 = -(a^2+b^2) e^{2z}
        let xv = CoeffPoly::x_pow(2).eval(&vals, 0.5);
        assert!((xv + v).norm() < 1e-12);
    }
}
