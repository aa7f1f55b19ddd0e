//! Truncated elements of the local field F^(s): Laurent series over GF(p^s)
//! with a finite digit window.
//!
//! Digit index `n` carries the coefficient of `t^n`; `K_n` is the subgroup of
//! elements whose digits vanish below `n`, and `g_n` is the unit digit at `n`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{FieldRef, GfElem};

/// Value of the norm: `Zero`, or `Pow(e)` meaning `p^e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Norm {
    Zero,
    Pow(i64),
}

impl Norm {
    pub fn times(self, other: Norm) -> Norm {
        match (self, other) {
            (Norm::Pow(a), Norm::Pow(b)) => Norm::Pow(a + b),
            _ => Norm::Zero,
        }
    }

    pub fn to_f64(self, p: u32) -> f64 {
        match self {
            Norm::Zero => 0.0,
            Norm::Pow(e) => (p as f64).powi(e as i32),
        }
    }
}

pub(crate) fn same_field(a: &FieldRef, b: &FieldRef) -> Result<()> {
    if std::sync::Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::FieldMismatch)
    }
}

#[derive(Clone, Debug)]
pub struct LocalElem {
    field: FieldRef,
    lo: i64,
    digits: Vec<GfElem>,
}

impl PartialEq for LocalElem {
    fn eq(&self, other: &Self) -> bool {
        *self.field == *other.field && self.lo == other.lo && self.digits == other.digits
    }
}

impl Eq for LocalElem {}

impl LocalElem {
    /// Element with `digits[k]` at index `lo + k`; zero digits at either end
    /// are trimmed.
    pub fn new(field: FieldRef, lo: i64, digits: Vec<GfElem>) -> Self {
        let mut e = LocalElem { field, lo, digits };
        e.canonicalize();
        e
    }

    pub fn zero(field: FieldRef) -> Self {
        LocalElem {
            field,
            lo: 0,
            digits: Vec::new(),
        }
    }

    /// `a * g_n`: the single digit `a` at index `n`.
    pub fn monomial(field: FieldRef, a: GfElem, n: i64) -> Self {
        LocalElem::new(field, n, vec![a])
    }

    /// The basic element `g_n`.
    pub fn unit(field: FieldRef, n: i64) -> Self {
        let one = field.one();
        LocalElem::monomial(field, one, n)
    }

    fn canonicalize(&mut self) {
        while self.digits.last().is_some_and(|d| d.is_zero()) {
            self.digits.pop();
        }
        let lead = self.digits.iter().take_while(|d| d.is_zero()).count();
        if lead > 0 {
            self.digits.drain(..lead);
            self.lo += lead as i64;
        }
        if self.digits.is_empty() {
            self.lo = 0;
        }
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    /// Index of the first nonzero digit.
    pub fn leading_index(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.lo)
    }

    /// Window `[lo, hi)` holding every nonzero digit; empty for zero.
    pub fn window(&self) -> Range<i64> {
        self.lo..self.lo + self.digits.len() as i64
    }

    pub fn digit(&self, n: i64) -> GfElem {
        let k = n - self.lo;
        if k < 0 || k >= self.digits.len() as i64 {
            GfElem::ZERO
        } else {
            self.digits[k as usize]
        }
    }

    /// Nonzero digits as `(index, digit)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (i64, GfElem)> + '_ {
        self.digits
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.is_zero())
            .map(move |(k, &d)| (self.lo + k as i64, d))
    }

    pub fn add(&self, other: &LocalElem) -> Result<LocalElem> {
        same_field(&self.field, &other.field)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let (a, b) = (self.window(), other.window());
        let lo = a.start.min(b.start);
        let hi = a.end.max(b.end);
        let digits = (lo..hi)
            .map(|n| self.field.add(self.digit(n), other.digit(n)))
            .collect();
        Ok(LocalElem::new(self.field.clone(), lo, digits))
    }

    pub fn neg(&self) -> LocalElem {
        let digits = self.digits.iter().map(|&d| self.field.neg(d)).collect();
        LocalElem::new(self.field.clone(), self.lo, digits)
    }

    pub fn sub(&self, other: &LocalElem) -> Result<LocalElem> {
        self.add(&other.neg())
    }

    /// Laurent-series product: digit `l` is `sum_{i+j=l} a_i b_j`.
    pub fn mul(&self, other: &LocalElem) -> Result<LocalElem> {
        same_field(&self.field, &other.field)?;
        if self.is_zero() || other.is_zero() {
            return Ok(LocalElem::zero(self.field.clone()));
        }
        let f = &self.field;
        let mut digits = vec![GfElem::ZERO; self.digits.len() + other.digits.len() - 1];
        for (i, &a) in self.digits.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.digits.iter().enumerate() {
                digits[i + j] = f.add(digits[i + j], f.mul(a, b));
            }
        }
        Ok(LocalElem::new(f.clone(), self.lo + other.lo, digits))
    }

    /// Coordinatewise action of `lambda` in GF(p^s).
    pub fn scalar_mul(&self, lambda: GfElem) -> Result<LocalElem> {
        if !self.field.contains(lambda) {
            return Err(Error::ForeignElement(lambda.index()));
        }
        let digits = self.digits.iter().map(|&d| self.field.mul(lambda, d)).collect();
        Ok(LocalElem::new(self.field.clone(), self.lo, digits))
    }

    /// `||a|| = p^(-s n)` where `n` is the leading index; `||0|| = 0`.
    pub fn norm(&self) -> Norm {
        match self.leading_index() {
            None => Norm::Zero,
            Some(n) => Norm::Pow(-(self.field.s() as i64) * n),
        }
    }

    /// Dilation `A`: every digit moves from index `n` to `n - 1`, so
    /// `A g_n = g_(n-1)` and `||A a|| = p^s ||a||`.
    pub fn dilate(&self) -> LocalElem {
        self.shift_index(-1)
    }

    pub fn dilate_inv(&self) -> LocalElem {
        self.shift_index(1)
    }

    fn shift_index(&self, by: i64) -> LocalElem {
        if self.is_zero() {
            return self.clone();
        }
        LocalElem {
            field: self.field.clone(),
            lo: self.lo + by,
            digits: self.digits.clone(),
        }
    }

    pub fn to_json(&self) -> ElementJson {
        ElementJson {
            lo: self.lo,
            digits: self
                .digits
                .iter()
                .map(|&d| self.field.digits(d).to_vec())
                .collect(),
        }
    }

    pub fn from_json(field: FieldRef, json: &ElementJson) -> Result<LocalElem> {
        let digits = json
            .digits
            .iter()
            .map(|d| field.elem(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalElem::new(field, json.lo, digits))
    }
}

/// `{"lo": -1, "digits": [[1, 0], [0, 1]]}`; each digit is its GF(p) digit list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementJson {
    pub lo: i64,
    pub digits: Vec<Vec<u32>>,
}

/// Coefficients `lambda_n`, `n` in `window`, with `a = sum lambda_n basic(n)`
/// on the window, found by eliminating the leading digit one index at a time.
///
/// Digits of `a` at or above `window.end` are ignored; digits below
/// `window.start` are an error.
pub fn basis_expand<F>(a: &LocalElem, window: Range<i64>, basic: F) -> Result<Vec<GfElem>>
where
    F: Fn(i64) -> LocalElem,
{
    let field = a.field().clone();
    if let Some(n) = a.leading_index().filter(|&n| n < window.start) {
        return Err(Error::OutsideWindow(n));
    }
    let mut rem = a.clone();
    let mut coeffs = Vec::with_capacity((window.end - window.start).max(0) as usize);
    for n in window {
        let b = basic(n);
        same_field(&field, b.field())?;
        if b.leading_index() != Some(n) {
            return Err(Error::BasicLeadingIndex {
                index: n,
                found: b.leading_index(),
            });
        }
        let d = rem.digit(n);
        if d.is_zero() {
            coeffs.push(GfElem::ZERO);
            continue;
        }
        let lambda = field.mul(d, field.inv(b.digit(n))?);
        rem = rem.sub(&b.scalar_mul(lambda)?)?;
        coeffs.push(lambda);
    }
    Ok(coeffs)
}

/// An element of the shift lattice H_0: digits at indices -1, -2, .., -depth.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShiftH0 {
    /// `digits[k]` sits at index `-(k + 1)`.
    digits: Vec<GfElem>,
}

impl ShiftH0 {
    pub fn new(mut digits: Vec<GfElem>) -> Self {
        while digits.last().is_some_and(|d| d.is_zero()) {
            digits.pop();
        }
        ShiftH0 { digits }
    }

    pub fn zero() -> Self {
        ShiftH0 { digits: Vec::new() }
    }

    /// Digits `a_(-1), a_(-2), ..`, trailing zeros trimmed.
    pub fn digits(&self) -> &[GfElem] {
        &self.digits
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    /// Digit at index `n < 0`.
    pub fn digit(&self, n: i64) -> GfElem {
        if n >= 0 {
            return GfElem::ZERO;
        }
        self.digits.get((-n - 1) as usize).copied().unwrap_or(GfElem::ZERO)
    }

    /// Base-p^s integer of `(a_(-1), a_(-2), ..)` with `a_(-1)` least significant.
    pub fn index(&self, order: u32) -> u64 {
        self.digits
            .iter()
            .rev()
            .fold(0u64, |acc, d| acc * order as u64 + d.index() as u64)
    }

    pub fn from_index(field: &FieldRef, mut idx: u64, depth: usize) -> Self {
        let q = field.order() as u64;
        let digits = (0..depth)
            .map(|_| {
                let d = field.from_index((idx % q) as u32).expect("digit below field order");
                idx /= q;
                d
            })
            .collect();
        ShiftH0::new(digits)
    }

    pub fn to_local(&self, field: FieldRef) -> LocalElem {
        let depth = self.digits.len() as i64;
        let digits = self.digits.iter().rev().copied().collect();
        LocalElem::new(field, -depth, digits)
    }

    pub fn from_local(a: &LocalElem) -> Result<ShiftH0> {
        if let Some((n, _)) = a.terms().find(|&(n, _)| n >= 0) {
            return Err(Error::NotAShift(n));
        }
        let depth = a.leading_index().map_or(0, |n| -n) as usize;
        Ok(ShiftH0::new((1..=depth as i64).map(|k| a.digit(-k)).collect()))
    }
}

/// All `p^(s L)` shifts of depth at most `L`, in [`ShiftH0::index`] order.
pub fn h0_enumerate(field: &FieldRef, depth: usize) -> Vec<ShiftH0> {
    let q = field.order() as u64;
    let count = q.pow(depth as u32);
    (0..count)
        .map(|idx| ShiftH0::from_index(field, idx, depth))
        .collect()
}
