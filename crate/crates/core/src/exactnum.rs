//! Exact values in Z[zeta_p][1/p].
//!
//! A [`CycloValue`] is `p^(-scale) * sum_i coeffs[i] * zeta^i` with
//! `zeta = exp(2 pi i / p)`. The canonical form pins the coefficient of
//! `zeta^(p-1)` to zero (using `1 + zeta + .. + zeta^(p-1) = 0`) and keeps
//! `scale` minimal and non-negative, so equal values have equal
//! representations.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `exp(2 pi i * exp / p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootOfUnity {
    exp: u32,
    p: u32,
}

impl RootOfUnity {
    pub fn new(exp: u32, p: u32) -> Self {
        assert!(p >= 2, "order must be at least 2");
        RootOfUnity { exp: exp % p, p }
    }

    pub fn one(p: u32) -> Self {
        RootOfUnity::new(0, p)
    }

    pub fn exponent(self) -> u32 {
        self.exp
    }

    pub fn order(self) -> u32 {
        self.p
    }

    pub fn is_one(self) -> bool {
        self.exp == 0
    }

    pub fn mul(self, other: RootOfUnity) -> RootOfUnity {
        assert_eq!(self.p, other.p, "roots of unity of different orders");
        RootOfUnity::new(self.exp + other.exp, self.p)
    }

    pub fn conj(self) -> RootOfUnity {
        RootOfUnity::new(self.p - self.exp, self.p)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::TAU * self.exp as f64 / self.p as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCyclo", into = "RawCyclo")]
pub struct CycloValue {
    coeffs: Vec<i64>,
    scale: u32,
}

#[derive(Serialize, Deserialize)]
struct RawCyclo {
    coeffs: Vec<i64>,
    scale: u32,
}

impl TryFrom<RawCyclo> for CycloValue {
    type Error = Error;

    fn try_from(raw: RawCyclo) -> Result<Self> {
        if raw.coeffs.len() < 2 {
            return Err(Error::Json("cyclotomic value needs p >= 2 coefficients".into()));
        }
        Ok(CycloValue::from_parts(raw.coeffs, raw.scale))
    }
}

impl From<CycloValue> for RawCyclo {
    fn from(v: CycloValue) -> Self {
        RawCyclo {
            coeffs: v.coeffs,
            scale: v.scale,
        }
    }
}

fn pow_i64(p: u32, e: u32) -> i64 {
    (p as i64).pow(e)
}

impl CycloValue {
    /// `p^(-scale) * sum coeffs[i] zeta^i`, canonicalized. `coeffs.len()` is p.
    pub fn from_parts(coeffs: Vec<i64>, scale: u32) -> Self {
        assert!(coeffs.len() >= 2, "order must be at least 2");
        let mut v = CycloValue { coeffs, scale };
        v.canonicalize();
        v
    }

    pub fn zero(p: u32) -> Self {
        CycloValue {
            coeffs: vec![0; p as usize],
            scale: 0,
        }
    }

    pub fn one(p: u32) -> Self {
        CycloValue::from_int(p, 1)
    }

    pub fn from_int(p: u32, n: i64) -> Self {
        let mut coeffs = vec![0; p as usize];
        coeffs[0] = n;
        CycloValue { coeffs, scale: 0 }
    }

    pub fn from_root(r: RootOfUnity) -> Self {
        let mut coeffs = vec![0; r.order() as usize];
        coeffs[r.exponent() as usize] = 1;
        CycloValue::from_parts(coeffs, 0)
    }

    /// `p^(-scale) * sum_e counts[e] zeta^e`.
    pub fn from_exponent_counts(counts: Vec<i64>, scale: u32) -> Self {
        CycloValue::from_parts(counts, scale)
    }

    /// `num / den` where `den` must be a power of p.
    pub fn from_rational(p: u32, num: i64, den: u64) -> Result<Self> {
        let scale = power_of(p, den).ok_or(Error::DenominatorNotPowerOfP(den))?;
        let mut coeffs = vec![0; p as usize];
        coeffs[0] = num;
        Ok(CycloValue::from_parts(coeffs, scale))
    }

    fn canonicalize(&mut self) {
        let p = self.coeffs.len();
        let last = self.coeffs[p - 1];
        if last != 0 {
            for c in &mut self.coeffs[..p - 1] {
                *c -= last;
            }
            self.coeffs[p - 1] = 0;
        }
        if self.coeffs.iter().all(|&c| c == 0) {
            self.scale = 0;
            return;
        }
        let pp = p as i64;
        while self.scale > 0 && self.coeffs.iter().all(|&c| c % pp == 0) {
            for c in &mut self.coeffs {
                *c /= pp;
            }
            self.scale -= 1;
        }
    }

    pub fn order(&self) -> u32 {
        self.coeffs.len() as u32
    }

    /// Coefficients in the basis `zeta^0 .. zeta^(p-1)`; the last is always 0.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// The overall factor is `p^(-scale)`.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.scale == 0 && self.coeffs[0] == 1 && self.coeffs[1..].iter().all(|&c| c == 0)
    }

    /// The value as a rational `num / p^scale` when it lies in Q.
    pub fn as_rational(&self) -> Option<(i64, u64)> {
        if self.coeffs[1..].iter().all(|&c| c == 0) {
            Some((self.coeffs[0], pow_i64(self.order(), self.scale) as u64))
        } else {
            None
        }
    }

    /// Exact test against the rational `num / den`; `den` must be a power of p.
    pub fn equals_rational(&self, num: i64, den: u64) -> Result<bool> {
        let other = CycloValue::from_rational(self.order(), num, den)?;
        Ok(*self == other)
    }

    fn check_order(&self, other: &CycloValue) -> Result<()> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(Error::OrderMismatch(self.order(), other.order()))
        }
    }

    /// Coefficients rescaled to the common factor `p^(-scale)`, `scale >= self.scale`.
    fn coeffs_at(&self, scale: u32) -> impl Iterator<Item = i64> + '_ {
        let f = pow_i64(self.order(), scale - self.scale);
        self.coeffs.iter().map(move |&c| c * f)
    }

    pub fn checked_add(&self, other: &CycloValue) -> Result<CycloValue> {
        self.check_order(other)?;
        let scale = self.scale.max(other.scale);
        let coeffs = self
            .coeffs_at(scale)
            .zip(other.coeffs_at(scale))
            .map(|(a, b)| a + b)
            .collect();
        Ok(CycloValue::from_parts(coeffs, scale))
    }

    pub fn checked_mul(&self, other: &CycloValue) -> Result<CycloValue> {
        self.check_order(other)?;
        let p = self.coeffs.len();
        let mut out = vec![0i64; p];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[(i + j) % p] += a * b;
            }
        }
        Ok(CycloValue::from_parts(out, self.scale + other.scale))
    }

    /// Complex conjugate: `zeta -> zeta^(p-1)`.
    pub fn conj(&self) -> CycloValue {
        let p = self.coeffs.len();
        let mut out = vec![0i64; p];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[(p - i) % p] += c;
        }
        CycloValue::from_parts(out, self.scale)
    }

    /// Multiplication by a root of unity (a cyclic rotation of coefficients).
    pub fn mul_root(&self, r: RootOfUnity) -> CycloValue {
        assert_eq!(r.order(), self.order(), "roots of unity of different orders");
        let p = self.coeffs.len();
        let mut out = vec![0i64; p];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[(i + r.exponent() as usize) % p] = c;
        }
        CycloValue::from_parts(out, self.scale)
    }

    /// Multiplication by `p^(-k)`.
    pub fn div_p_pow(&self, k: u32) -> CycloValue {
        CycloValue::from_parts(self.coeffs.clone(), self.scale + k)
    }

    /// `|z|^2 = z * conj(z)`.
    pub fn norm_sqr(&self) -> CycloValue {
        self * &self.conj()
    }

    /// The value as the single root of unity it equals, if any.
    pub fn as_root(&self) -> Option<RootOfUnity> {
        let p = self.order();
        (0..p)
            .map(|e| RootOfUnity::new(e, p))
            .find(|&r| *self == CycloValue::from_root(r))
    }

    pub fn to_complex(&self) -> Complex64 {
        let p = self.order();
        let sum: Complex64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| RootOfUnity::new(i as u32, p).to_complex() * c as f64)
            .sum();
        sum / (p as f64).powi(self.scale as i32)
    }
}

fn power_of(p: u32, mut den: u64) -> Option<u32> {
    if den == 0 {
        return None;
    }
    let mut k = 0;
    while den > 1 {
        if den % p as u64 != 0 {
            return None;
        }
        den /= p as u64;
        k += 1;
    }
    Some(k)
}

impl Add for &CycloValue {
    type Output = CycloValue;

    /// Panics when the orders differ; see [`CycloValue::checked_add`].
    fn add(self, rhs: &CycloValue) -> CycloValue {
        self.checked_add(rhs).expect("cyclotomic order mismatch")
    }
}

impl Mul for &CycloValue {
    type Output = CycloValue;

    fn mul(self, rhs: &CycloValue) -> CycloValue {
        self.checked_mul(rhs).expect("cyclotomic order mismatch")
    }
}

impl Neg for &CycloValue {
    type Output = CycloValue;

    fn neg(self) -> CycloValue {
        CycloValue {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            scale: self.scale,
        }
    }
}

impl Sub for &CycloValue {
    type Output = CycloValue;

    fn sub(self, rhs: &CycloValue) -> CycloValue {
        self + &(-rhs)
    }
}

impl fmt::Display for CycloValue {
    /// Compact exact form, e.g. `0`, `1`, `-z^2`, `1/4`, `(1+z)/3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            let mag = c.unsigned_abs();
            let body = match (i, mag) {
                (0, m) => m.to_string(),
                (1, 1) => "z".to_string(),
                (1, m) => format!("{m}z"),
                (e, 1) => format!("z^{e}"),
                (e, m) => format!("{m}z^{e}"),
            };
            terms.push((sign, body));
        }
        let mut num = String::new();
        for (k, (sign, body)) in terms.iter().enumerate() {
            if k > 0 || *sign == "-" {
                num.push_str(sign);
            }
            num.push_str(body);
        }
        if self.scale == 0 {
            write!(f, "{num}")
        } else {
            let den = pow_i64(self.order(), self.scale);
            if terms.len() == 1 {
                write!(f, "{num}/{den}")
            } else {
                write!(f, "({num})/{den}")
            }
        }
    }
}

/// Sums of rotated values at a fixed common scale, without intermediate
/// canonicalization.
#[derive(Clone, Debug)]
pub struct CycloAccumulator {
    coeffs: Vec<i64>,
    scale: u32,
}

impl CycloAccumulator {
    pub fn new(p: u32, scale: u32) -> Self {
        CycloAccumulator {
            coeffs: vec![0; p as usize],
            scale,
        }
    }

    /// Adds `weight * zeta^exp * p^(-scale)`.
    pub fn add_root(&mut self, exp: u32, weight: i64) {
        let p = self.coeffs.len();
        self.coeffs[exp as usize % p] += weight;
    }

    /// Adds `v * zeta^exp`.
    pub fn add_rotated(&mut self, v: &CycloValue, exp: u32) {
        let p = self.coeffs.len();
        debug_assert_eq!(v.order() as usize, p);
        if v.scale > self.scale {
            let f = pow_i64(p as u32, v.scale - self.scale);
            for c in &mut self.coeffs {
                *c *= f;
            }
            self.scale = v.scale;
        }
        let f = pow_i64(p as u32, self.scale - v.scale);
        for (i, &c) in v.coeffs.iter().enumerate() {
            if c != 0 {
                self.coeffs[(i + exp as usize) % p] += c * f;
            }
        }
    }

    pub fn finish(self) -> CycloValue {
        CycloValue::from_parts(self.coeffs, self.scale)
    }
}
