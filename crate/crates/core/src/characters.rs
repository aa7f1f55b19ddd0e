//! Characters of F^(s) as finite products of Rademacher functions
//! `chi = prod_k r_k^(a_k)`, stored by their exponent window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{CycloAccumulator, CycloValue, RootOfUnity};
use crate::gf::{FieldRef, GfElem};
use crate::localfield::{same_field, LocalElem};

#[derive(Clone, Debug)]
pub struct Character {
    field: FieldRef,
    lo: i64,
    exponents: Vec<GfElem>,
}

impl PartialEq for Character {
    fn eq(&self, other: &Self) -> bool {
        *self.field == *other.field && self.lo == other.lo && self.exponents == other.exponents
    }
}

impl Eq for Character {}

impl Character {
    /// `exponents[k]` is the exponent of `r_(lo + k)`.
    pub fn new(field: FieldRef, lo: i64, exponents: Vec<GfElem>) -> Self {
        let mut c = Character { field, lo, exponents };
        c.canonicalize();
        c
    }

    pub fn identity(field: FieldRef) -> Self {
        Character {
            field,
            lo: 0,
            exponents: Vec::new(),
        }
    }

    /// `r_k^a`.
    pub fn rademacher(field: FieldRef, k: i64, a: GfElem) -> Self {
        Character::new(field, k, vec![a])
    }

    fn canonicalize(&mut self) {
        while self.exponents.last().is_some_and(|d| d.is_zero()) {
            self.exponents.pop();
        }
        let lead = self.exponents.iter().take_while(|d| d.is_zero()).count();
        if lead > 0 {
            self.exponents.drain(..lead);
            self.lo += lead as i64;
        }
        if self.exponents.is_empty() {
            self.lo = 0;
        }
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn is_identity(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn window(&self) -> std::ops::Range<i64> {
        self.lo..self.lo + self.exponents.len() as i64
    }

    pub fn exponent(&self, k: i64) -> GfElem {
        let i = k - self.lo;
        if i < 0 || i >= self.exponents.len() as i64 {
            GfElem::ZERO
        } else {
            self.exponents[i as usize]
        }
    }

    /// `(chi, x)`: the exponent is `sum_k <a_k, x_k>` over GF(p).
    pub fn eval(&self, x: &LocalElem) -> Result<RootOfUnity> {
        same_field(&self.field, x.field())?;
        let f = &self.field;
        let p = f.p();
        let exp = x
            .terms()
            .map(|(k, d)| f.dot(self.exponent(k), d))
            .fold(0u32, |acc, e| (acc + e) % p);
        Ok(RootOfUnity::new(exp, p))
    }

    pub fn mul(&self, other: &Character) -> Result<Character> {
        same_field(&self.field, &other.field)?;
        if self.is_identity() {
            return Ok(other.clone());
        }
        if other.is_identity() {
            return Ok(self.clone());
        }
        let (a, b) = (self.window(), other.window());
        let lo = a.start.min(b.start);
        let hi = a.end.max(b.end);
        let exps = (lo..hi)
            .map(|k| self.field.add(self.exponent(k), other.exponent(k)))
            .collect();
        Ok(Character::new(self.field.clone(), lo, exps))
    }

    pub fn inverse(&self) -> Character {
        let exps = self.exponents.iter().map(|&a| self.field.neg(a)).collect();
        Character::new(self.field.clone(), self.lo, exps)
    }

    /// `chi^b`: every exponent multiplied by `b` in GF(p^s).
    pub fn pow(&self, b: GfElem) -> Result<Character> {
        if !self.field.contains(b) {
            return Err(Error::ForeignElement(b.index()));
        }
        let exps = self.exponents.iter().map(|&a| self.field.mul(a, b)).collect();
        Ok(Character::new(self.field.clone(), self.lo, exps))
    }

    /// `chi A`, defined by `(chi A, x) = (chi, A x)`; sends `r_k` to `r_(k+1)`.
    pub fn dilate(&self) -> Character {
        self.shift_index(1)
    }

    pub fn dilate_inv(&self) -> Character {
        self.shift_index(-1)
    }

    fn shift_index(&self, by: i64) -> Character {
        if self.is_identity() {
            return self.clone();
        }
        Character {
            field: self.field.clone(),
            lo: self.lo + by,
            exponents: self.exponents.clone(),
        }
    }

    /// Smallest `n` with `chi` in `(K_n)^perp`; `None` for the identity,
    /// which lies in every annihilator.
    pub fn annihilator_level(&self) -> Option<i64> {
        (!self.is_identity()).then(|| self.window().end)
    }

    pub fn in_annihilator(&self, n: i64) -> bool {
        self.annihilator_level().map_or(true, |l| l <= n)
    }

    /// The coset `(K_-N)^perp chi` as a digit vector over indices `-N..M`.
    pub fn coset_of(&self, n: u32, m: u32) -> Result<CosetId> {
        if let Some(level) = self.annihilator_level().filter(|&l| l > m as i64) {
            return Err(Error::OutsideAnnihilator {
                index: level - 1,
                bound: m as i64,
            });
        }
        let digits = (-(n as i64)..m as i64).map(|k| self.exponent(k)).collect();
        CosetId::new(n, m, digits)
    }

    pub fn to_json(&self) -> CharacterJson {
        CharacterJson {
            lo: self.lo,
            exponents: self
                .exponents
                .iter()
                .map(|&a| self.field.digits(a).to_vec())
                .collect(),
        }
    }

    pub fn from_json(field: FieldRef, json: &CharacterJson) -> Result<Character> {
        let exps = json
            .exponents
            .iter()
            .map(|d| field.elem(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Character::new(field, json.lo, exps))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterJson {
    pub lo: i64,
    pub exponents: Vec<Vec<u32>>,
}

/// The coset `(K_-N)^perp r_-N^(a_-N) ... r_(M-1)^(a_(M-1))`, digits listed
/// lowest index first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CosetId {
    n: u32,
    m: u32,
    digits: Vec<GfElem>,
}

impl CosetId {
    pub fn new(n: u32, m: u32, digits: Vec<GfElem>) -> Result<CosetId> {
        if n == 0 {
            return Err(Error::MalformedCoset("N must be positive".into()));
        }
        if digits.len() != (n + m) as usize {
            return Err(Error::MalformedCoset(format!(
                "expected {} digits, got {}",
                n + m,
                digits.len()
            )));
        }
        Ok(CosetId { n, m, digits })
    }

    pub fn trivial(n: u32, m: u32) -> CosetId {
        CosetId {
            n,
            m,
            digits: vec![GfElem::ZERO; (n + m) as usize],
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn digits(&self) -> &[GfElem] {
        &self.digits
    }

    /// Digit at index `k`, zero outside `-N..M`.
    pub fn digit(&self, k: i64) -> GfElem {
        let i = k + self.n as i64;
        if i < 0 || i >= self.digits.len() as i64 {
            GfElem::ZERO
        } else {
            self.digits[i as usize]
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.digits.iter().all(|d| d.is_zero())
    }

    /// Highest index carrying a nonzero digit.
    pub fn top_index(&self) -> Option<i64> {
        self.digits
            .iter()
            .rposition(|d| !d.is_zero())
            .map(|i| i as i64 - self.n as i64)
    }

    /// A representative character.
    pub fn representative(&self, field: FieldRef) -> Character {
        Character::new(field, -(self.n as i64), self.digits.clone())
    }

    /// The coset of `chi A^-1`: the lowest digit is absorbed and a zero
    /// enters at the top.
    pub fn dilate_inv(&self) -> CosetId {
        let mut digits = self.digits[1..].to_vec();
        digits.push(GfElem::ZERO);
        CosetId {
            n: self.n,
            m: self.m,
            digits,
        }
    }

    /// Same coset viewed at resolution `m2 >= M` (zero digits appended), or at
    /// `m2 < M` when the dropped digits are zero.
    pub fn with_m(&self, m2: u32) -> Result<CosetId> {
        let len = (self.n + m2) as usize;
        if self.digits[len.min(self.digits.len())..].iter().any(|d| !d.is_zero()) {
            return Err(Error::MalformedCoset(format!(
                "coset has nonzero digits at or above index {m2}"
            )));
        }
        let mut digits = self.digits.clone();
        digits.resize(len, GfElem::ZERO);
        CosetId::new(self.n, m2, digits)
    }

    /// Position in [`coset_enumerate`] order (lowest index least significant).
    pub fn index(&self, order: u32) -> u64 {
        self.digits
            .iter()
            .rev()
            .fold(0u64, |acc, d| acc * order as u64 + d.index() as u64)
    }

    pub fn from_index(field: &FieldRef, n: u32, m: u32, mut idx: u64) -> CosetId {
        let q = field.order() as u64;
        let digits = (0..n + m)
            .map(|_| {
                let d = field.from_index((idx % q) as u32).expect("digit below field order");
                idx /= q;
                d
            })
            .collect();
        CosetId { n, m, digits }
    }

    pub fn format(&self, field: &FieldRef) -> String {
        self.digits
            .iter()
            .map(|&d| format!("({})", field.format(d)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn to_json(&self, field: &FieldRef) -> CosetJson {
        CosetJson {
            n: self.n,
            m: self.m,
            digits: self.digits.iter().map(|&d| field.format(d)).collect(),
        }
    }

    pub fn from_json(field: &FieldRef, json: &CosetJson) -> Result<CosetId> {
        let digits = json
            .digits
            .iter()
            .map(|t| field.parse(t))
            .collect::<Result<Vec<_>>>()?;
        CosetId::new(json.n, json.m, digits)
    }
}

/// `{"N": 1, "M": 1, "digits": ["1,1", "0,0"]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetJson {
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub digits: Vec<String>,
}

/// All `p^(s(N+M))` cosets in index order.
pub fn coset_enumerate(field: &FieldRef, n: u32, m: u32) -> impl Iterator<Item = CosetId> + '_ {
    let count = (field.order() as u64).pow(n + m);
    (0..count).map(move |i| CosetId::from_index(field, n, m, i))
}

/// `int_{(K_n)^perp shift} (chi, x) dnu(chi)`, evaluated as a finite sum over
/// characters with exponents in `-w..n` (each class of `(K_-w)^perp` has
/// measure `p^(-sw)`).
///
/// Requires `n >= -w` and `x` supported in `K_-w`.
pub fn annihilator_coset_integral(
    field: &FieldRef,
    n: i64,
    w: i64,
    shift: &Character,
    x: &LocalElem,
) -> Result<CycloValue> {
    same_field(field, shift.field())?;
    same_field(field, x.field())?;
    if n < -w {
        return Err(Error::MalformedCoset(format!("level {n} below window -{w}")));
    }
    if let Some(k) = x.leading_index().filter(|&k| k < -w) {
        return Err(Error::OutsideWindow(k));
    }
    let base = shift.eval(x)?.exponent() as usize;
    let p = field.p();
    let mut acc = CycloAccumulator::new(p, field.s() * w as u32);
    // rows[k][a] = a . x_k for the digit positions -w..n
    let rows: Vec<Vec<usize>> = (-w..n)
        .map(|k| field.elements().map(|a| field.dot(a, x.digit(k)) as usize).collect())
        .collect();
    sum_over_digits(field, &rows, base, |e| acc.add_root(e, 1));
    Ok(acc.finish())
}

/// Calls `visit(base + sum_k rows[k][a_k] mod p)` once for every digit
/// vector `(a_k)`, including the empty one.
fn sum_over_digits<F: FnMut(u32)>(field: &FieldRef, rows: &[Vec<usize>], base: usize, mut visit: F) {
    let p = field.p() as usize;
    let q = field.order() as usize;
    let mut idx = vec![0usize; rows.len()];
    loop {
        let e = rows.iter().zip(&idx).fold(base, |acc, (r, &a)| acc + r[a]);
        visit((e % p) as u32);
        let mut k = 0;
        loop {
            if k == idx.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < q {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `int_{K_n} (chi, x) dmu(x)` as a finite sum over `x` with digits in `n..m`
/// (each class of `K_m` has measure `p^(-sm)`). Requires `chi` in `(K_m)^perp`.
pub fn subgroup_integral(field: &FieldRef, n: i64, m: i64, chi: &Character) -> Result<CycloValue> {
    same_field(field, chi.field())?;
    if n > m {
        return Err(Error::MalformedCoset(format!("level {n} above resolution {m}")));
    }
    if let Some(l) = chi.annihilator_level().filter(|&l| l > m) {
        return Err(Error::OutsideAnnihilator {
            index: l - 1,
            bound: m,
        });
    }
    let p = field.p();
    // measure p^(-sm) may be a positive power of p when m < 0
    let scale = (field.s() as i64 * m).max(0) as u32;
    let mult = (p as i64).pow((-(field.s() as i64) * m).max(0) as u32);
    let mut acc = CycloAccumulator::new(p, scale);
    let rows: Vec<Vec<usize>> = (n..m)
        .map(|k| field.elements().map(|xd| field.dot(chi.exponent(k), xd) as usize).collect())
        .collect();
    sum_over_digits(field, &rows, 0, |e| acc.add_root(e, mult));
    Ok(acc.finish())
}
