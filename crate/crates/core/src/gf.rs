//! Arithmetic in GF(p^s), realized as GF(p)[t] modulo a monic irreducible
//! polynomial of degree s.
//!
//! Elements are stored as their index: the base-p integer of the digit vector
//! `(a^(0), .., a^(s-1))` with `a^(0)` least significant. Index order is the
//! canonical enumeration order of the field.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field order for which multiplication and inverse tables are built.
pub const TABLE_LIMIT: u32 = 4096;

/// Largest supported field order.
pub const MAX_ORDER: u64 = 1 << 20;

/// An element of GF(p^s), identified by its index within a [`Field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GfElem(u32);

impl GfElem {
    pub const ZERO: GfElem = GfElem(0);

    pub(crate) const fn from_raw(i: u32) -> GfElem {
        GfElem(i)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Serialized form of a field: `{"p": 2, "s": 2, "modulus": [1, 1, 1]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub s: u32,
    pub modulus: Vec<u32>,
}

pub type FieldRef = Arc<Field>;

pub struct Field {
    p: u32,
    s: u32,
    order: u32,
    modulus: Vec<u32>,
    digits: Vec<u32>,
    mul_table: Option<Vec<u16>>,
    inv_table: Option<Vec<u16>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.s == other.s && self.modulus == other.modulus
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.p)
            .field("s", &self.s)
            .field("modulus", &self.modulus)
            .finish()
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn check_prime(p: u32) -> Result<()> {
    if is_prime(p as u64) {
        Ok(())
    } else {
        Err(Error::NotPrime(p as u64))
    }
}

fn inv_mod_p(a: u32, p: u32) -> u32 {
    // a^(p-2) mod p
    let (mut base, mut e, mut acc) = (a as u64 % p as u64, p as u64 - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

fn trim(poly: &mut Vec<u32>) {
    while poly.last() == Some(&0) {
        poly.pop();
    }
}

/// Remainder of `num` modulo `den` over GF(p). `den` must have a nonzero
/// leading coefficient.
fn poly_rem(num: &[u32], den: &[u32], p: u32) -> Vec<u32> {
    let mut r: Vec<u32> = num.to_vec();
    trim(&mut r);
    let dd = den.len() - 1;
    let lead_inv = inv_mod_p(den[dd], p);
    while r.len() > dd {
        let top = r.len() - 1;
        let c = (r[top] as u64 * lead_inv as u64 % p as u64) as u32;
        let shift = top - dd;
        for (i, &d) in den.iter().enumerate() {
            let sub = (c as u64 * d as u64 % p as u64) as u32;
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        trim(&mut r);
    }
    r
}

/// Tests whether `poly` (constant coefficient first) is irreducible over GF(p),
/// by trial division with every monic polynomial of degree `1..=deg/2`.
pub fn is_irreducible(poly: &[u32], p: u32) -> Result<bool> {
    check_prime(p)?;
    if let Some(&d) = poly.iter().find(|&&c| c >= p) {
        return Err(Error::DigitOutOfRange { digit: d as u64, p });
    }
    let mut f = poly.to_vec();
    trim(&mut f);
    if f.len() < 2 {
        return Err(Error::DegeneratePolynomial);
    }
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        let mut divisor = vec![0u32; d + 1];
        divisor[d] = 1;
        for code in 0..count {
            let mut c = code;
            for slot in divisor.iter_mut().take(d) {
                *slot = (c % p as u64) as u32;
                c /= p as u64;
            }
            if poly_rem(&f, &divisor, p).is_empty() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The smallest monic irreducible polynomial of degree `s` over GF(p), where
/// candidates are ordered as base-p integers with the constant coefficient
/// least significant.
pub fn find_irreducible(p: u32, s: u32) -> Result<Vec<u32>> {
    check_prime(p)?;
    if s == 0 {
        return Err(Error::InvalidDegree(s));
    }
    let total = (p as u64)
        .checked_pow(s)
        .filter(|&n| n <= MAX_ORDER)
        .ok_or(Error::FieldTooLarge { p, s })?;
    let mut poly = vec![0u32; s as usize + 1];
    poly[s as usize] = 1;
    for code in 0..total {
        let mut c = code;
        for slot in poly.iter_mut().take(s as usize) {
            *slot = (c % p as u64) as u32;
            c /= p as u64;
        }
        if is_irreducible(&poly, p)? {
            return Ok(poly);
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over GF(p)")
}

impl Field {
    /// Builds GF(p^s) from an explicit monic irreducible modulus of length s+1.
    pub fn new(p: u32, s: u32, modulus: Vec<u32>) -> Result<FieldRef> {
        check_prime(p)?;
        if s == 0 {
            return Err(Error::InvalidDegree(s));
        }
        let order = (p as u64)
            .checked_pow(s)
            .filter(|&n| n <= MAX_ORDER)
            .ok_or(Error::FieldTooLarge { p, s })? as u32;
        if modulus.len() != s as usize + 1 {
            return Err(Error::ModulusLength {
                expected: s as usize + 1,
                got: modulus.len(),
            });
        }
        if modulus[s as usize] != 1 {
            return Err(Error::NotMonic);
        }
        if !is_irreducible(&modulus, p)? {
            return Err(Error::Reducible(p));
        }

        let su = s as usize;
        let mut digits = vec![0u32; order as usize * su];
        for i in 0..order {
            let mut c = i;
            for l in 0..su {
                digits[i as usize * su + l] = c % p;
                c /= p;
            }
        }
        let mut field = Field {
            p,
            s,
            order,
            modulus,
            digits,
            mul_table: None,
            inv_table: None,
        };
        if order <= TABLE_LIMIT {
            let q = order as usize;
            let mut mul = vec![0u16; q * q];
            for a in 0..order {
                for b in a..order {
                    let c = field.mul_poly(GfElem(a), GfElem(b)).0 as u16;
                    mul[a as usize * q + b as usize] = c;
                    mul[b as usize * q + a as usize] = c;
                }
            }
            let mut inv = vec![0u16; q];
            for a in 1..q {
                if let Some(b) = (1..q).find(|&b| mul[a * q + b] == 1) {
                    inv[a] = b as u16;
                }
            }
            field.mul_table = Some(mul);
            field.inv_table = Some(inv);
        }
        Ok(Arc::new(field))
    }

    /// GF(p^s) with the deterministic default modulus from [`find_irreducible`].
    pub fn with_default_modulus(p: u32, s: u32) -> Result<FieldRef> {
        let modulus = find_irreducible(p, s)?;
        Field::new(p, s, modulus)
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<FieldRef> {
        Field::new(spec.p, spec.s, spec.modulus.clone())
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec {
            p: self.p,
            s: self.s,
            modulus: self.modulus.clone(),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// Number of elements, p^s.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn has_tables(&self) -> bool {
        self.mul_table.is_some()
    }

    pub fn zero(&self) -> GfElem {
        GfElem(0)
    }

    pub fn one(&self) -> GfElem {
        GfElem(1)
    }

    pub fn contains(&self, a: GfElem) -> bool {
        a.0 < self.order
    }

    pub fn from_index(&self, i: u32) -> Result<GfElem> {
        if i < self.order {
            Ok(GfElem(i))
        } else {
            Err(Error::ForeignElement(i))
        }
    }

    /// Element with digit vector `(a^(0), .., a^(s-1))`.
    pub fn elem(&self, digits: &[u32]) -> Result<GfElem> {
        if digits.len() != self.s as usize {
            return Err(Error::DigitCount {
                expected: self.s as usize,
                got: digits.len(),
            });
        }
        let mut idx = 0u32;
        for &d in digits.iter().rev() {
            if d >= self.p {
                return Err(Error::DigitOutOfRange {
                    digit: d as u64,
                    p: self.p,
                });
            }
            idx = idx * self.p + d;
        }
        Ok(GfElem(idx))
    }

    pub fn digits(&self, a: GfElem) -> &[u32] {
        let s = self.s as usize;
        &self.digits[a.0 as usize * s..(a.0 as usize + 1) * s]
    }

    /// All p^s elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = GfElem> + Clone {
        (0..self.order).map(GfElem)
    }

    pub fn add(&self, a: GfElem, b: GfElem) -> GfElem {
        debug_assert!(self.contains(a) && self.contains(b));
        if self.p == 2 {
            return GfElem(a.0 ^ b.0);
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let mut idx = 0u32;
        for l in (0..self.s as usize).rev() {
            idx = idx * self.p + (da[l] + db[l]) % self.p;
        }
        GfElem(idx)
    }

    pub fn neg(&self, a: GfElem) -> GfElem {
        if self.p == 2 {
            return a;
        }
        let da = self.digits(a);
        let mut idx = 0u32;
        for l in (0..self.s as usize).rev() {
            idx = idx * self.p + (self.p - da[l]) % self.p;
        }
        GfElem(idx)
    }

    pub fn sub(&self, a: GfElem, b: GfElem) -> GfElem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: GfElem, b: GfElem) -> GfElem {
        debug_assert!(self.contains(a) && self.contains(b));
        match &self.mul_table {
            Some(t) => GfElem(t[a.0 as usize * self.order as usize + b.0 as usize] as u32),
            None => self.mul_poly(a, b),
        }
    }

    /// Schoolbook product followed by reduction modulo the monic modulus.
    fn mul_poly(&self, a: GfElem, b: GfElem) -> GfElem {
        let s = self.s as usize;
        let p = self.p as u64;
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = vec![0u64; 2 * s - 1];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        for k in (s..2 * s - 1).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            for (i, &m) in self.modulus.iter().enumerate().take(s + 1) {
                let slot = k - s + i;
                prod[slot] = (prod[slot] + (p - c) * m as u64) % p;
            }
        }
        let mut idx = 0u32;
        for &c in prod[..s].iter().rev() {
            idx = idx * self.p + c as u32;
        }
        GfElem(idx)
    }

    pub fn pow(&self, a: GfElem, mut e: u64) -> GfElem {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: GfElem) -> Result<GfElem> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        if !self.contains(a) {
            return Err(Error::ForeignElement(a.0));
        }
        Ok(match &self.inv_table {
            Some(t) => GfElem(t[a.0 as usize] as u32),
            None => self.pow(a, self.order as u64 - 2),
        })
    }

    pub fn checked_add(&self, a: GfElem, b: GfElem) -> Result<GfElem> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add(a, b))
    }

    pub fn checked_mul(&self, a: GfElem, b: GfElem) -> Result<GfElem> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(a, b))
    }

    fn check(&self, a: GfElem) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::ForeignElement(a.0))
        }
    }

    /// GF(p) dot product of the two digit vectors, `sum_l a^(l) b^(l) mod p`.
    pub fn dot(&self, a: GfElem, b: GfElem) -> u32 {
        if a.is_zero() || b.is_zero() {
            return 0;
        }
        if self.p == 2 {
            return (a.0 & b.0).count_ones() & 1;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let sum: u64 = da
            .iter()
            .zip(db)
            .map(|(&x, &y)| x as u64 * y as u64)
            .sum();
        (sum % self.p as u64) as u32
    }

    /// Comma-joined digits, `a^(0)` first, e.g. `"1,0"`.
    pub fn format(&self, a: GfElem) -> String {
        self.digits(a)
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(&self, text: &str) -> Result<GfElem> {
        let digits = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Json(format!("bad field element {text:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.elem(&digits)
    }
}
