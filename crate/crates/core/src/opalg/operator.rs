//! Linear differential operators in `d/dz` and matrices of them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::ring::{CoeffPoly, GaussRat, SymbolValues};
use super::OpalgError;

/// `Σ c_n (d/dz)^n` with at most one coefficient per order and no zero
/// coefficients. Coefficients sit to the left of the derivative.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffOperator {
    terms: BTreeMap<usize, CoeffPoly>,
}

fn binomial(n: usize, k: usize) -> i64 {
    let mut r: i64 = 1;
    for j in 0..k {
        r = r * (n - j) as i64 / (j as i64 + 1);
    }
    r
}

impl DiffOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(CoeffPoly::one())
    }

    /// Multiplication by a coefficient.
    pub fn scalar(c: CoeffPoly) -> Self {
        Self::term(0, c)
    }

    /// `d/dz`.
    pub fn d() -> Self {
        Self::term(1, CoeffPoly::one())
    }

    /// `c (d/dz)^order`.
    pub fn term(order: usize, c: CoeffPoly) -> Self {
        let mut op = Self::zero();
        op.add_term(order, c);
        op
    }

    fn add_term(&mut self, order: usize, c: CoeffPoly) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(order).or_default();
        *entry += &c;
        if entry.is_zero() {
            self.terms.remove(&order);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest derivative order, `None` for the zero operator.
    pub fn order(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    pub fn coeff(&self, order: usize) -> CoeffPoly {
        self.terms.get(&order).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &CoeffPoly)> {
        self.terms.iter().map(|(n, c)| (*n, c))
    }

    /// `self ∘ other`, moving derivatives through coefficients by Leibniz:
    /// `D^m ∘ c = Σ_j C(m, j) c^{(j)} D^{m-j}`.
    pub fn compose(&self, other: &DiffOperator) -> DiffOperator {
        let mut out = DiffOperator::zero();
        for (&m, c1) in &self.terms {
            for (&n, c2) in &other.terms {
                let mut deriv = c2.clone();
                for j in 0..=m {
                    if deriv.is_zero() {
                        break;
                    }
                    let coeff = (c1 * &deriv).scale(&GaussRat::int(binomial(m, j)));
                    out.add_term(m - j + n, coeff);
                    deriv = deriv.derive();
                }
            }
        }
        out
    }

    /// Left multiplication by a coefficient.
    pub fn left_mul(&self, c: &CoeffPoly) -> DiffOperator {
        self.map_coeffs(|p| Ok(c * p)).expect("infallible")
    }

    pub fn map_coeffs<F>(&self, mut f: F) -> Result<DiffOperator, OpalgError>
    where
        F: FnMut(&CoeffPoly) -> Result<CoeffPoly, OpalgError>,
    {
        let mut out = DiffOperator::zero();
        for (&n, c) in &self.terms {
            out.add_term(n, f(c)?);
        }
        Ok(out)
    }

    /// Conjugation `e^{-kz} ∘ self ∘ e^{kz}`.
    pub fn conjugate_by_exp(&self, k: i32) -> DiffOperator {
        DiffOperator::scalar(CoeffPoly::exp_z(-k))
            .compose(self)
            .compose(&DiffOperator::scalar(CoeffPoly::exp_z(k)))
    }

    /// Division from the right by an operator with unit leading coefficient:
    /// returns `(quotient, remainder)` with `self = quotient ∘ divisor + remainder`
    /// and `order(remainder) < order(divisor)`.
    pub fn div_rem_right(
        &self,
        divisor: &DiffOperator,
    ) -> Result<(DiffOperator, DiffOperator), OpalgError> {
        let n = divisor.order().ok_or(OpalgError::ZeroDivisor)?;
        if divisor.coeff(n) != CoeffPoly::one() {
            return Err(OpalgError::NonMonicDivisor);
        }
        let mut quotient = DiffOperator::zero();
        let mut rem = self.clone();
        while let Some(m) = rem.order() {
            if m < n {
                break;
            }
            let lead = DiffOperator::term(m - n, rem.coeff(m));
            rem = &rem - &lead.compose(divisor);
            quotient = &quotient + &lead;
        }
        Ok((quotient, rem))
    }

    /// Numeric application at `z` to a function whose derivatives at `z`
    /// are `derivs[0], derivs[1], ...`.
    ///
    /// Panics if `derivs` is shorter than `order + 1`.
    pub fn apply_at(&self, vals: &SymbolValues, z: f64, derivs: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(&n, c)| c.eval(vals, z) * derivs[n])
            .sum()
    }

    /// First non-vanishing `(order, coefficient)`, for failure reports.
    pub fn first_term(&self) -> Option<(usize, CoeffPoly)> {
        self.terms.iter().next().map(|(n, c)| (*n, c.clone()))
    }
}

impl Add for &DiffOperator {
    type Output = DiffOperator;
    fn add(self, rhs: &DiffOperator) -> DiffOperator {
        let mut out = self.clone();
        for (&n, c) in &rhs.terms {
            out.add_term(n, c.clone());
        }
        out
    }
}

impl Add for DiffOperator {
    type Output = DiffOperator;
    fn add(self, rhs: DiffOperator) -> DiffOperator {
        &self + &rhs
    }
}

impl Sub for &DiffOperator {
    type Output = DiffOperator;
    fn sub(self, rhs: &DiffOperator) -> DiffOperator {
        let mut out = self.clone();
        for (&n, c) in &rhs.terms {
            out.add_term(n, -c);
        }
        out
    }
}

impl Sub for DiffOperator {
    type Output = DiffOperator;
    fn sub(self, rhs: DiffOperator) -> DiffOperator {
        &self - &rhs
    }
}

impl Neg for &DiffOperator {
    type Output = DiffOperator;
    fn neg(self) -> DiffOperator {
        DiffOperator::zero() - self.clone()
    }
}

impl Neg for DiffOperator {
    type Output = DiffOperator;
    fn neg(self) -> DiffOperator {
        -&self
    }
}

/// Composition.
impl Mul for &DiffOperator {
    type Output = DiffOperator;
    fn mul(self, rhs: &DiffOperator) -> DiffOperator {
        self.compose(rhs)
    }
}

impl Mul for DiffOperator {
    type Output = DiffOperator;
    fn mul(self, rhs: DiffOperator) -> DiffOperator {
        self.compose(&rhs)
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (n, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            match n {
                0 => write!(f, "[{}]", c)?,
                1 => write!(f, "[{}] D", c)?,
                _ => write!(f, "[{}] D^{}", c, n)?,
            }
        }
        Ok(())
    }
}

/// Dense grid of operators acting on a column of unknown functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<DiffOperator>,
}

impl OperatorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![DiffOperator::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<DiffOperator>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged operator matrix");
        Self {
            rows: nrows,
            cols: ncols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &DiffOperator {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, op: DiffOperator) {
        self.entries[r * self.cols + c] = op;
    }

    pub fn row(&self, r: usize) -> &[DiffOperator] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Sub-matrix made of the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> OperatorMatrix {
        let mut out = OperatorMatrix::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                out.set(i, j, self.get(r, c).clone());
            }
        }
        out
    }

    /// Matrix product; entries multiply by operator composition.
    pub fn mul(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix, OpalgError> {
        if self.cols != rhs.rows {
            return Err(OpalgError::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let mut out = OperatorMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = DiffOperator::zero();
                for k in 0..self.cols {
                    acc = &acc + &self.get(i, k).compose(rhs.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix, OpalgError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix, OpalgError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with<F>(&self, rhs: &OperatorMatrix, f: F) -> Result<OperatorMatrix, OpalgError>
    where
        F: Fn(&DiffOperator, &DiffOperator) -> DiffOperator,
    {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(OpalgError::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        Ok(OperatorMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn map_entries<F>(&self, mut f: F) -> Result<OperatorMatrix, OpalgError>
    where
        F: FnMut(&DiffOperator) -> Result<DiffOperator, OpalgError>,
    {
        Ok(OperatorMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(&mut f)
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(DiffOperator::is_zero)
    }
}
