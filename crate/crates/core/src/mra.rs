//! Masks, spectra and refinement coefficients of tree-generated scaling
//! functions. The mask is 1-elementary (N = 1), so it is a table
//! `lambda(i, j)` read off the digits `(a_-1, a_0)` of a character coset.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::characters::CosetId;
use crate::error::{Error, Result};
use crate::exactnum::{CycloAccumulator, CycloValue, RootOfUnity};
use crate::gf::{Field, FieldRef, FieldSpec, GfElem};
use crate::localfield::{same_field, ShiftH0};
use crate::trees::RootedTree;

/// Edge `(child, parent)` to exponent `e`, meaning `lambda = zeta^e`.
pub type LambdaExps = BTreeMap<(GfElem, GfElem), u32>;

#[derive(Clone, Debug)]
pub struct MaskTable {
    field: FieldRef,
    /// Row-major `q x q`, `None` for a zero entry.
    entries: Vec<Option<RootOfUnity>>,
}

impl PartialEq for MaskTable {
    fn eq(&self, other: &Self) -> bool {
        *self.field == *other.field && self.entries == other.entries
    }
}

impl MaskTable {
    pub fn zeros(field: FieldRef) -> MaskTable {
        let q = field.order() as usize;
        MaskTable {
            field,
            entries: vec![None; q * q],
        }
    }

    /// `lambda(0,0) = 1`, `lambda(v, parent(v))` from `lambdas` (default 1),
    /// zero elsewhere.
    pub fn from_tree(tree: &RootedTree, lambdas: &LambdaExps) -> Result<MaskTable> {
        let field = tree.field().clone();
        let p = field.p();
        for &(i, j) in lambdas.keys() {
            if !tree.is_edge(i, j) {
                return Err(Error::NotAnEdge {
                    i: field.format(i),
                    j: field.format(j),
                });
            }
        }
        let mut mask = MaskTable::zeros(field.clone());
        mask.set(GfElem::ZERO, GfElem::ZERO, Some(RootOfUnity::one(p)));
        for v in field.elements().skip(1) {
            let u = tree.parent(v).expect("nonzero vertex has a parent");
            let exp = lambdas.get(&(v, u)).copied().unwrap_or(0);
            mask.set(v, u, Some(RootOfUnity::new(exp, p)));
        }
        Ok(mask)
    }

    /// Every entry equal to 1: rows are not functional, so no tree underlies it.
    pub fn all_ones(field: FieldRef) -> MaskTable {
        let q = field.order() as usize;
        let p = field.p();
        MaskTable {
            field,
            entries: vec![Some(RootOfUnity::one(p)); q * q],
        }
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    fn slot(&self, i: GfElem, j: GfElem) -> usize {
        i.index() as usize * self.field.order() as usize + j.index() as usize
    }

    pub fn get(&self, i: GfElem, j: GfElem) -> Option<RootOfUnity> {
        self.entries[self.slot(i, j)]
    }

    pub fn set(&mut self, i: GfElem, j: GfElem, value: Option<RootOfUnity>) {
        let k = self.slot(i, j);
        self.entries[k] = value;
    }

    /// Nonzero entries of row `i` as `(j, lambda)`.
    pub fn row(&self, i: GfElem) -> Vec<(GfElem, RootOfUnity)> {
        self.field
            .elements()
            .filter_map(|j| self.get(i, j).map(|l| (j, l)))
            .collect()
    }

    /// Nonzero entries as `(i, j, lambda)`, row-major.
    pub fn nonzero(&self) -> Vec<(GfElem, GfElem, RootOfUnity)> {
        let f = &self.field;
        f.elements()
            .flat_map(|i| f.elements().map(move |j| (i, j)))
            .filter_map(|(i, j)| self.get(i, j).map(|l| (i, j, l)))
            .collect()
    }

    /// `m_0` on a coset with `N = 1`: `lambda(a_-1, a_0)`; digits above 0 do
    /// not matter.
    pub fn eval(&self, coset: &CosetId) -> Result<Option<RootOfUnity>> {
        if coset.n() != 1 {
            return Err(Error::MalformedCoset(format!(
                "mask is 1-elementary, coset has N = {}",
                coset.n()
            )));
        }
        for &d in coset.digits() {
            if !self.field.contains(d) {
                return Err(Error::ForeignElement(d.index()));
            }
        }
        Ok(self.get(coset.digit(-1), coset.digit(0)))
    }

    /// `m_0` as an exact value (zero for an empty entry).
    pub fn eval_exact(&self, coset: &CosetId) -> Result<CycloValue> {
        Ok(to_cyclo(self.field.p(), self.eval(coset)?))
    }

    pub fn to_json(&self) -> MaskJson {
        let f = &self.field;
        MaskJson {
            field: Some(f.spec()),
            entries: self
                .nonzero()
                .into_iter()
                .map(|(i, j, l)| EdgeExp {
                    i: f.format(i),
                    j: f.format(j),
                    exp: l.exponent(),
                })
                .collect(),
        }
    }

    /// Reads a mask; the field comes from the file when present.
    pub fn from_json(json: &MaskJson, field: Option<FieldRef>) -> Result<MaskTable> {
        let field = match (&json.field, field) {
            (Some(spec), Some(f)) => {
                let g = Field::from_spec(spec)?;
                same_field(&f, &g)?;
                f
            }
            (Some(spec), None) => Field::from_spec(spec)?,
            (None, Some(f)) => f,
            (None, None) => return Err(Error::Json("mask file has no field".into())),
        };
        let p = field.p();
        let mut mask = MaskTable::zeros(field.clone());
        for e in &json.entries {
            let (i, j) = (field.parse(&e.i)?, field.parse(&e.j)?);
            mask.set(i, j, Some(RootOfUnity::new(e.exp, p)));
        }
        Ok(mask)
    }
}

pub(crate) fn to_cyclo(p: u32, v: Option<RootOfUnity>) -> CycloValue {
    v.map_or_else(|| CycloValue::zero(p), CycloValue::from_root)
}

/// `{"i": "1,1", "j": "0,0", "exp": 0}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeExp {
    pub i: String,
    pub j: String,
    pub exp: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub entries: Vec<EdgeExp>,
}

/// Parses a lambda assignment file, `{"entries": [{"i":..,"j":..,"exp":..}]}`.
pub fn lambdas_from_json(field: &FieldRef, json: &MaskJson) -> Result<LambdaExps> {
    json.entries
        .iter()
        .map(|e| Ok(((field.parse(&e.i)?, field.parse(&e.j)?), e.exp % field.p())))
        .collect()
}

/// Nonzero values of the Fourier transform of a scaling function on the cosets
/// `(K_-1)^perp r_-1^(a_-1) .. r_(M-1)^(a_(M-1))`.
#[derive(Clone, Debug)]
pub struct SpectrumTable {
    field: FieldRef,
    m: u32,
    values: BTreeMap<CosetId, CycloValue>,
}

impl PartialEq for SpectrumTable {
    fn eq(&self, other: &Self) -> bool {
        *self.field == *other.field && self.m == other.m && self.values == other.values
    }
}

impl SpectrumTable {
    /// Zero values are dropped.
    pub fn new(field: FieldRef, m: u32, values: BTreeMap<CosetId, CycloValue>) -> Result<SpectrumTable> {
        for c in values.keys() {
            if c.n() != 1 || c.m() != m {
                return Err(Error::MalformedCoset(format!(
                    "coset with N = {}, M = {} in a table with N = 1, M = {m}",
                    c.n(),
                    c.m()
                )));
            }
        }
        let values = values.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(SpectrumTable { field, m, values })
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn values(&self) -> &BTreeMap<CosetId, CycloValue> {
        &self.values
    }

    /// Value on a coset given at any resolution; zero outside the table.
    pub fn value(&self, coset: &CosetId) -> CycloValue {
        match coset.with_m(self.m) {
            Ok(c) => self
                .values
                .get(&c)
                .cloned()
                .unwrap_or_else(|| CycloValue::zero(self.field.p())),
            Err(_) => CycloValue::zero(self.field.p()),
        }
    }

    /// Replaces one value; used to build broken tables.
    pub fn set(&mut self, coset: CosetId, value: CycloValue) -> Result<()> {
        if coset.n() != 1 || coset.m() != self.m {
            return Err(Error::MalformedCoset("coset resolution differs from the table".into()));
        }
        if value.is_zero() {
            self.values.remove(&coset);
        } else {
            self.values.insert(coset, value);
        }
        Ok(())
    }

    pub fn to_json(&self) -> SpectrumJson {
        let f = &self.field;
        SpectrumJson {
            field: Some(f.spec()),
            m: self.m,
            entries: self
                .values
                .iter()
                .map(|(c, v)| {
                    let digits = c.digits().iter().map(|&d| f.format(d)).collect();
                    match v.as_root() {
                        Some(r) => SpectrumEntry {
                            digits,
                            exp: Some(r.exponent()),
                            value: None,
                        },
                        None => SpectrumEntry {
                            digits,
                            exp: None,
                            value: Some(v.clone()),
                        },
                    }
                })
                .collect(),
        }
    }

    pub fn from_json(json: &SpectrumJson, field: Option<FieldRef>) -> Result<SpectrumTable> {
        let field = match (&json.field, field) {
            (_, Some(f)) => f,
            (Some(spec), None) => Field::from_spec(spec)?,
            (None, None) => return Err(Error::Json("spectrum file has no field".into())),
        };
        let p = field.p();
        let mut values = BTreeMap::new();
        for e in &json.entries {
            let digits = e.digits.iter().map(|t| field.parse(t)).collect::<Result<Vec<_>>>()?;
            let coset = CosetId::new(1, json.m, digits)?;
            let v = match (&e.exp, &e.value) {
                (Some(x), None) => CycloValue::from_root(RootOfUnity::new(*x, p)),
                (None, Some(v)) if v.order() == p => v.clone(),
                _ => return Err(Error::Json("entry needs exactly one of exp, value".into())),
            };
            values.insert(coset, v);
        }
        SpectrumTable::new(field, json.m, values)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub digits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exp: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<CycloValue>,
}

/// `{"M": 1, "entries": [{"digits": ["1,1", "0,0"], "exp": 0}, ..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(rename = "M")]
    pub m: u32,
    pub entries: Vec<SpectrumEntry>,
}

fn check_tree_mask(tree: &RootedTree, mask: &MaskTable) -> Result<()> {
    let f = tree.field();
    same_field(f, mask.field())?;
    if mask.get(GfElem::ZERO, GfElem::ZERO).map_or(true, |l| !l.is_one()) {
        return Err(Error::TreeMaskMismatch("lambda(0,0) must be 1".into()));
    }
    for v in f.elements().skip(1) {
        let u = tree.parent(v).expect("nonzero vertex has a parent");
        let row = mask.row(v);
        if row.len() != 1 || row[0].0 != u {
            return Err(Error::TreeMaskMismatch(format!(
                "row {} must have its only nonzero entry at the parent {}",
                f.format(v),
                f.format(u)
            )));
        }
    }
    let root_row = mask.row(GfElem::ZERO);
    if root_row.len() != 1 {
        return Err(Error::TreeMaskMismatch("row 0 must have one nonzero entry".into()));
    }
    Ok(())
}

/// The spectrum read off root-to-vertex paths: vertex `v` with path
/// `(0, u, .., a_0, v)` gives the coset with digits `(v, a_0, .., u, 0, ..)`
/// and value `lambda(v, a_0) .. lambda(u, 0)`.
pub fn spectrum_from_tree(tree: &RootedTree, mask: &MaskTable) -> Result<SpectrumTable> {
    check_tree_mask(tree, mask)?;
    let f = tree.field();
    let p = f.p();
    let m = tree.height() - 2;
    let mut values = BTreeMap::new();
    values.insert(CosetId::trivial(1, m), CycloValue::one(p));
    for v in f.elements().skip(1) {
        let mut digits = Vec::with_capacity(m as usize + 1);
        let mut value = RootOfUnity::one(p);
        let mut w = v;
        while !w.is_zero() {
            let u = tree.parent(w).expect("nonzero vertex has a parent");
            value = value.mul(mask.get(w, u).expect("edge entry is nonzero"));
            digits.push(w);
            w = u;
        }
        digits.resize(m as usize + 1, GfElem::ZERO);
        values.insert(CosetId::new(1, m, digits)?, CycloValue::from_root(value));
    }
    SpectrumTable::new(f.clone(), m, values)
}

/// Walks every coset of `(K_(M+1))^perp` (digits `a_-1 .. a_M`) on which
/// `m_0(chi) m_0(chi A^-1) .. m_0(chi A^-(M+1))` is nonzero, pruning as soon
/// as a factor vanishes. The visitor sees the digits and the product.
pub fn walk_mask_products<F>(mask: &MaskTable, m: u32, mut visit: F)
where
    F: FnMut(&[GfElem], RootOfUnity) -> ControlFlow<()>,
{
    let f = mask.field();
    let rows: Vec<Vec<(GfElem, RootOfUnity)>> = f.elements().map(|i| mask.row(i)).collect();
    let len = m as usize + 2;
    let mut digits = Vec::with_capacity(len);
    for a in f.elements() {
        digits.clear();
        digits.push(a);
        if walk_rec(&rows, len, &mut digits, RootOfUnity::one(f.p()), &mut visit).is_break() {
            return;
        }
    }
}

fn walk_rec<F>(
    rows: &[Vec<(GfElem, RootOfUnity)>],
    len: usize,
    digits: &mut Vec<GfElem>,
    acc: RootOfUnity,
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[GfElem], RootOfUnity) -> ControlFlow<()>,
{
    let last = *digits.last().expect("walk starts with a digit");
    let row = &rows[last.index() as usize];
    if digits.len() == len {
        // the digit after a_M is 0
        return match row.iter().find(|(j, _)| j.is_zero()) {
            Some(&(_, l)) => visit(digits, acc.mul(l)),
            None => ControlFlow::Continue(()),
        };
    }
    for &(j, l) in row {
        digits.push(j);
        let flow = walk_rec(rows, len, digits, acc.mul(l), visit);
        digits.pop();
        flow?;
    }
    ControlFlow::Continue(())
}

/// The spectrum as the truncated product `prod_k m_0(chi A^-k)`, evaluated on
/// `(K_(M+1))^perp`; any nonzero value with `a_M != 0` is an error.
pub fn spectrum_from_product(mask: &MaskTable, m: u32) -> Result<SpectrumTable> {
    let f = mask.field().clone();
    let p = f.p();
    match mask.get(GfElem::ZERO, GfElem::ZERO) {
        Some(l) if l.is_one() => {}
        other => {
            return Err(Error::MaskNormalization(
                to_cyclo(p, other).to_string(),
            ))
        }
    }
    let mut values = BTreeMap::new();
    let mut bad = None;
    walk_mask_products(mask, m, |digits, value| {
        let (top, rest) = digits.split_last().expect("nonempty");
        if !top.is_zero() {
            bad = Some(digits.iter().map(|&d| format!("({})", f.format(d))).collect::<Vec<_>>().join(" "));
            return ControlFlow::Break(());
        }
        let coset = CosetId::new(1, m, rest.to_vec()).expect("digit count matches");
        values.insert(coset, CycloValue::from_root(value));
        ControlFlow::Continue(())
    });
    if let Some(at) = bad {
        return Err(Error::AnnulusNonzero(at));
    }
    SpectrumTable::new(f, m, values)
}

/// Refinement coefficients `beta_h`, `h` of depth at most 2, indexed by
/// [`ShiftH0::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTable {
    field: FieldRef,
    beta: Vec<CycloValue>,
}

/// `(chi, A^-1 h)` for the coset digits `(a_-1, a_0)` and `h = b_-1 g_-1 + b_-2 g_-2`:
/// `A^-1 h = b_-1 g_0 + b_-2 g_-1`.
fn kernel_exp(f: &Field, a_m1: GfElem, a_0: GfElem, b_m1: GfElem, b_m2: GfElem) -> u32 {
    (f.dot(a_0, b_m1) + f.dot(a_m1, b_m2)) % f.p()
}

impl CoeffTable {
    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn beta(&self, h: &ShiftH0) -> CycloValue {
        if h.depth() > 2 {
            return CycloValue::zero(self.field.p());
        }
        self.beta[h.index(self.field.order()) as usize].clone()
    }

    /// `(h, beta_h)` over all shifts of depth at most 2.
    pub fn entries(&self) -> Vec<(ShiftH0, CycloValue)> {
        self.beta
            .iter()
            .enumerate()
            .map(|(l, b)| (ShiftH0::from_index(&self.field, l as u64, 2), b.clone()))
            .collect()
    }

    /// `m_0(chi) = p^-s sum_h beta_h conj((chi, A^-1 h))` on a coset with `N = 1`.
    pub fn mask_value(&self, coset: &CosetId) -> Result<CycloValue> {
        if coset.n() != 1 {
            return Err(Error::MalformedCoset("expected N = 1".into()));
        }
        let f = &self.field;
        let (a_m1, a_0) = (coset.digit(-1), coset.digit(0));
        let q = f.order() as usize;
        let mut acc = CycloAccumulator::new(f.p(), 0);
        for (l, b) in self.beta.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            // shift index: a_-1 least significant
            let (h1, h2) = (GfElem::from_raw((l % q) as u32), GfElem::from_raw((l / q) as u32));
            let e = kernel_exp(f, a_m1, a_0, h1, h2);
            acc.add_rotated(b, (f.p() - e) % f.p());
        }
        Ok(acc.finish().div_p_pow(f.s()))
    }

    pub fn to_json(&self) -> CoeffJson {
        let f = &self.field;
        CoeffJson {
            field: f.spec(),
            n: 1,
            entries: self
                .entries()
                .into_iter()
                .map(|(h, b)| CoeffEntry {
                    shift: (1..=2).map(|k| f.format(h.digit(-k))).collect(),
                    value: b,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &CoeffJson) -> Result<CoeffTable> {
        let field = Field::from_spec(&json.field)?;
        let q = field.order() as usize;
        let mut beta = vec![CycloValue::zero(field.p()); q * q];
        for e in &json.entries {
            let digits = e.shift.iter().map(|t| field.parse(t)).collect::<Result<Vec<_>>>()?;
            let h = ShiftH0::new(digits);
            if h.depth() > 2 {
                return Err(Error::Json("shift deeper than 2".into()));
            }
            beta[h.index(q as u32) as usize] = e.value.clone();
        }
        Ok(CoeffTable { field, beta })
    }
}

/// `{"shift": ["a_-1", "a_-2"], "value": {"coeffs": [..], "scale": m}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub shift: Vec<String>,
    pub value: CycloValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffJson {
    pub field: FieldSpec,
    #[serde(rename = "N")]
    pub n: u32,
    pub entries: Vec<CoeffEntry>,
}

/// Solves `m_0(chi_k) = p^-s sum_l beta_l conj((chi_k, A^-1 h_l))` for `beta`
/// by the conjugate transpose: `beta_l = p^-s sum_k m_0(chi_k) (chi_k, A^-1 h_l)`.
pub fn mask_to_coefficients(mask: &MaskTable) -> CoeffTable {
    let f = mask.field().clone();
    let q = f.order() as u64;
    let nonzero = mask.nonzero();
    let beta = (0..q * q)
        .map(|l| {
            let h = ShiftH0::from_index(&f, l, 2);
            let mut acc = CycloAccumulator::new(f.p(), f.s());
            for &(i, j, lam) in &nonzero {
                let e = kernel_exp(&f, i, j, h.digit(-1), h.digit(-2));
                acc.add_root(lam.exponent() + e, 1);
            }
            acc.finish()
        })
        .collect();
    CoeffTable { field: f, beta }
}
