//! Verification of the orthogonality and validity criteria, plus a
//! time-domain inner-product oracle on finite quotient groups.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::{coset_enumerate, CosetId};
use crate::error::{Error, Result};
use crate::exactnum::CycloValue;
use crate::gf::{Field, FieldRef, FieldSpec, GfElem};
use crate::localfield::{same_field, LocalElem, ShiftH0};
use crate::mra::{
    mask_to_coefficients, spectrum_from_product, spectrum_from_tree, walk_mask_products,
    LambdaExps, MaskTable, SpectrumTable,
};
use crate::synthesis::{forward_transform, scaling_from_spectrum};
use crate::trees::{RootedTree, TreeJson};

pub const MAX_GRID_CELLS: u128 = 1 << 26;
const MAX_WITNESSES: usize = 32;

/// `K_-Nw / K_M`: digit vectors `(a_-Nw, .., a_(M-1))`. Point indices put the
/// lowest digit index in the least significant place.
#[derive(Clone, Debug)]
pub struct QuotientGrid {
    field: FieldRef,
    nw: u32,
    m: u32,
    len: usize,
}

impl PartialEq for QuotientGrid {
    fn eq(&self, other: &Self) -> bool {
        *self.field == *other.field && self.nw == other.nw && self.m == other.m
    }
}

impl QuotientGrid {
    pub fn new(field: FieldRef, nw: u32, m: u32) -> Result<QuotientGrid> {
        let cells = (field.order() as u128)
            .checked_pow(nw + m)
            .unwrap_or(u128::MAX);
        if cells > MAX_GRID_CELLS {
            return Err(Error::GridTooLarge(cells));
        }
        Ok(QuotientGrid {
            field,
            nw,
            m,
            len: cells as usize,
        })
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn nw(&self) -> u32 {
        self.nw
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn digit_count(&self) -> usize {
        (self.nw + self.m) as usize
    }

    /// Each cell has measure `p^(-s M)`; this is `s M`.
    pub fn cell_scale(&self) -> u32 {
        self.field.s() * self.m
    }

    /// Digits of point `idx`, lowest index first.
    pub fn point(&self, mut idx: usize) -> Vec<GfElem> {
        let q = self.field.order() as usize;
        (0..self.digit_count())
            .map(|_| {
                let d = GfElem::from_raw((idx % q) as u32);
                idx /= q;
                d
            })
            .collect()
    }

    pub fn index_of(&self, digits: &[GfElem]) -> usize {
        let q = self.field.order() as usize;
        digits
            .iter()
            .rev()
            .fold(0usize, |acc, d| acc * q + d.index() as usize)
    }

    pub fn to_local(&self, idx: usize) -> LocalElem {
        LocalElem::new(self.field.clone(), -(self.nw as i64), self.point(idx))
    }

    /// Cell containing `x`, or `None` when `x` lies outside `K_-Nw`.
    pub fn locate(&self, x: &LocalElem) -> Option<usize> {
        if x.leading_index().is_some_and(|k| k < -(self.nw as i64)) {
            return None;
        }
        let digits: Vec<GfElem> = (-(self.nw as i64)..self.m as i64).map(|k| x.digit(k)).collect();
        Some(self.index_of(&digits))
    }
}

/// A function on `K` supported in `K_-Nw` and constant on cosets of `K_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFn {
    grid: QuotientGrid,
    values: Vec<CycloValue>,
}

impl StepFn {
    pub fn new(grid: QuotientGrid, values: Vec<CycloValue>) -> Result<StepFn> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(StepFn { grid, values })
    }

    pub fn zeros(grid: QuotientGrid) -> StepFn {
        let p = grid.field.p();
        let values = vec![CycloValue::zero(p); grid.len()];
        StepFn { grid, values }
    }

    /// Indicator of the cells whose digits satisfy `pred`.
    pub fn indicator<F: Fn(&[GfElem]) -> bool>(grid: QuotientGrid, pred: F) -> StepFn {
        let p = grid.field.p();
        let values = (0..grid.len())
            .map(|i| {
                if pred(&grid.point(i)) {
                    CycloValue::one(p)
                } else {
                    CycloValue::zero(p)
                }
            })
            .collect();
        StepFn { grid, values }
    }

    pub fn grid(&self) -> &QuotientGrid {
        &self.grid
    }

    pub fn values(&self) -> &[CycloValue] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> &CycloValue {
        &self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: CycloValue) {
        self.values[idx] = v;
    }

    pub fn value_at(&self, x: &LocalElem) -> CycloValue {
        match self.grid.locate(x) {
            Some(i) => self.values[i].clone(),
            None => CycloValue::zero(self.grid.field.p()),
        }
    }

    /// Nonzero cells as `(index, value)`.
    pub fn support(&self) -> Vec<(usize, &CycloValue)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }

    pub fn to_json(&self) -> StepFnJson {
        let f = &self.grid.field;
        StepFnJson {
            field: f.spec(),
            nw: self.grid.nw,
            m: self.grid.m,
            cells: self
                .support()
                .into_iter()
                .map(|(i, v)| CellJson {
                    digits: self.grid.point(i).iter().map(|&d| f.format(d)).collect(),
                    value: v.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &StepFnJson) -> Result<StepFn> {
        let field = Field::from_spec(&json.field)?;
        let grid = QuotientGrid::new(field.clone(), json.nw, json.m)?;
        let mut f = StepFn::zeros(grid);
        for c in &json.cells {
            let digits = c.digits.iter().map(|t| field.parse(t)).collect::<Result<Vec<_>>>()?;
            if digits.len() != f.grid.digit_count() || c.value.order() != field.p() {
                return Err(Error::Json("cell does not fit the grid".into()));
            }
            let i = f.grid.index_of(&digits);
            f.values[i] = c.value.clone();
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellJson {
    pub digits: Vec<String>,
    pub value: CycloValue,
}

/// Nonzero cells only; digits listed lowest index first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFnJson {
    pub field: FieldSpec,
    #[serde(rename = "Nw")]
    pub nw: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub cells: Vec<CellJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub at: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<CycloValue>,
}

impl Witness {
    fn exact(at: String, v: CycloValue) -> Witness {
        Witness {
            at,
            value: v.to_string(),
            exact: Some(v),
        }
    }

    fn text(at: String, value: impl Into<String>) -> Witness {
        Witness {
            at,
            value: value.into(),
            exact: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    /// Set when the check was not run; a skipped check does not pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    fn from_witnesses(name: &str, mut witnesses: Vec<Witness>) -> Verdict {
        witnesses.truncate(MAX_WITNESSES);
        Verdict {
            name: name.into(),
            pass: witnesses.is_empty(),
            witnesses,
            skipped: None,
            note: None,
        }
    }

    fn skipped(name: &str, reason: String) -> Verdict {
        Verdict {
            name: name.into(),
            pass: false,
            witnesses: Vec::new(),
            skipped: Some(reason),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Verdict {
        self.note = Some(note.into());
        self
    }
}

/// Work limits for the brute-force checks, in elementary term evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub brute_force_cap: u64,
    pub transform_cap: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            brute_force_cap: 50_000_000,
            transform_cap: 1_000_000_000,
        }
    }
}

fn sq(v: &CycloValue) -> CycloValue {
    v.norm_sqr()
}

/// For each `a_-1`, the sum of `|phi^|^2` over the cosets with that digit
/// must be 1.
pub fn check_spectral_orthonormality(spec: &SpectrumTable) -> Verdict {
    let f = spec.field();
    let p = f.p();
    let mut sums: BTreeMap<GfElem, CycloValue> = f.elements().map(|a| (a, CycloValue::zero(p))).collect();
    for (c, v) in spec.values() {
        let slot = sums.get_mut(&c.digit(-1)).expect("digit in field");
        *slot = &*slot + &sq(v);
    }
    let witnesses = sums
        .into_iter()
        .filter(|(_, s)| !s.is_one())
        .map(|(a, s)| Witness::exact(format!("a_-1 = ({})", f.format(a)), s))
        .collect();
    Verdict::from_witnesses("spectral_orthonormality", witnesses)
}

/// `sum_j |lambda(i, j)|^2 = 1` for every row `i`.
pub fn check_mask_row_condition(mask: &MaskTable) -> Verdict {
    let f = mask.field();
    let witnesses = f
        .elements()
        .filter_map(|i| {
            let n = mask.row(i).len() as i64;
            (n != 1).then(|| Witness::exact(format!("row ({})", f.format(i)), CycloValue::from_int(f.p(), n)))
        })
        .collect();
    Verdict::from_witnesses("mask_row_condition", witnesses)
}

/// `m_0(chi) m_0(chi A^-1) .. m_0(chi A^-(M+1)) = 0` on the annulus
/// `(K_(M+1))^perp \ (K_M)^perp`, and `m_0 = 1` on the trivial coset.
pub fn check_mask_validity(mask: &MaskTable, m: u32) -> Verdict {
    let f = mask.field();
    let mut witnesses = Vec::new();
    match mask.get(GfElem::ZERO, GfElem::ZERO) {
        Some(l) if l.is_one() => {}
        other => witnesses.push(Witness::exact(
            "trivial coset".into(),
            crate::mra::to_cyclo(f.p(), other),
        )),
    }
    walk_mask_products(mask, m, |digits, value| {
        if !digits.last().expect("nonempty").is_zero() {
            let at = digits.iter().map(|&d| format!("({})", f.format(d))).collect::<Vec<_>>().join(" ");
            witnesses.push(Witness::exact(at, CycloValue::from_root(value)));
            if witnesses.len() >= MAX_WITNESSES {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    });
    Verdict::from_witnesses("mask_validity", witnesses)
        .with_note("the table depends on (a_-1, a_0) only, so constancy on cosets and periodicity hold by construction")
}

/// The support of `|phi^|` must be an `(1, M)`-elementary set: `p^s` cosets
/// of unit modulus whose `a_-1` digits are distinct, the one with `a_-1 = 0`
/// trivial, and meeting every annulus level `0..=M`.
pub fn check_elementary_set(spec: &SpectrumTable) -> Verdict {
    let f = spec.field();
    let q = f.order() as usize;
    let mut witnesses = Vec::new();
    let mut seen: BTreeMap<GfElem, &CosetId> = BTreeMap::new();
    for (c, v) in spec.values() {
        if !sq(v).is_one() {
            witnesses.push(Witness::exact(format!("|value|^2 at {}", c.format(f)), sq(v)));
        }
        if let Some(prev) = seen.insert(c.digit(-1), c) {
            witnesses.push(Witness::text(
                format!("xi-part ({})", f.format(c.digit(-1))),
                format!("shared by {} and {}", prev.format(f), c.format(f)),
            ));
        }
    }
    if spec.values().len() != q {
        witnesses.push(Witness::text(
            "coset count".into(),
            format!("{} cosets, expected {}", spec.values().len(), q),
        ));
    }
    for a in f.elements() {
        if !seen.contains_key(&a) {
            witnesses.push(Witness::text(format!("xi-part ({})", f.format(a)), "missing"));
        }
    }
    if let Some(c) = seen.get(&GfElem::ZERO) {
        if !c.is_trivial() {
            witnesses.push(Witness::text("xi-part (0)".into(), format!("has nontrivial eta {}", c.format(f))));
        }
    }
    for l in 0..=spec.m() as i64 {
        let met = spec.values().keys().any(|c| c.top_index() == Some(l - 1));
        if !met {
            witnesses.push(Witness::text(format!("annulus level {l}"), "empty"));
        }
    }
    Verdict::from_witnesses("elementary_set", witnesses)
}

/// `phi^(chi) = m_0(chi) phi^(chi A^-1)` on every coset of `(K_(M+1))^perp`.
/// Only cosets in the support or mapped into it by `A^-1` can be nonzero on
/// either side; all others are zero on both sides.
pub fn check_refinement(spec: &SpectrumTable, mask: &MaskTable) -> Verdict {
    let f = spec.field();
    if same_field(f, mask.field()).is_err() {
        return Verdict::from_witnesses("refinement", vec![Witness::text("field".into(), "mask and spectrum differ")]);
    }
    let m1 = spec.m() + 1;
    let mut candidates: Vec<CosetId> = Vec::new();
    for c in spec.values().keys() {
        let lifted = c.with_m(m1).expect("lifting adds zeros");
        for a in f.elements() {
            let mut digits = vec![a];
            digits.extend_from_slice(&lifted.digits()[..lifted.digits().len() - 1]);
            candidates.push(CosetId::new(1, m1, digits).expect("digit count"));
        }
        candidates.push(lifted);
    }
    candidates.sort();
    candidates.dedup();
    let mut witnesses = Vec::new();
    for c in &candidates {
        let lhs = spec.value(c);
        let rhs = &mask.eval_exact(c).expect("N = 1") * &spec.value(&c.dilate_inv());
        if lhs != rhs {
            witnesses.push(Witness::exact(c.format(f), &lhs - &rhs));
        }
    }
    let total = (f.order() as u128).pow(m1 + 1);
    Verdict::from_witnesses("refinement", witnesses).with_note(format!(
        "{} of {} cosets can be nonzero on either side; the rest vanish on both",
        candidates.len(),
        total
    ))
}

/// `int f conj(g) dmu`, summed over grid cells.
pub fn inner_product(f: &StepFn, g: &StepFn) -> Result<CycloValue> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let p = f.grid.field.p();
    let mut acc = Dense::new(p);
    for (i, a) in f.support() {
        let b = &g.values[i];
        if !b.is_zero() {
            acc.add_product(a, b);
        }
    }
    Ok(acc.finish(f.grid.cell_scale()))
}

/// Running sum of `a conj(b)` terms at a common scale.
struct Dense {
    p: u32,
    coeffs: Vec<i64>,
    scale: u32,
}

impl Dense {
    fn new(p: u32) -> Dense {
        Dense {
            p,
            coeffs: vec![0; p as usize],
            scale: 0,
        }
    }

    fn add_product(&mut self, a: &CycloValue, b: &CycloValue) {
        let p = self.p as usize;
        let sc = a.scale() + b.scale();
        if sc > self.scale {
            let k = (self.p as i64).pow(sc - self.scale);
            self.coeffs.iter_mut().for_each(|c| *c *= k);
            self.scale = sc;
        }
        let k = (self.p as i64).pow(self.scale - sc);
        for (i, &x) in a.coeffs().iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs().iter().enumerate() {
                if y != 0 {
                    self.coeffs[(i + p - j) % p] += x * y * k;
                }
            }
        }
    }

    fn finish(self, extra_scale: u32) -> CycloValue {
        CycloValue::from_parts(self.coeffs, self.scale + extra_scale)
    }
}

/// `<phi(. - h), phi(. - g)> = delta_(h,g)` for all shifts of depth at most
/// `N + 1`, where `phi` lives on a grid with `Nw = N`. Deeper shift
/// differences leave `K_-N` and give disjoint supports.
pub fn check_shift_orthonormality(phi: &StepFn, opts: &CheckOptions) -> Verdict {
    const NAME: &str = "shift_orthonormality_brute_force";
    let grid = &phi.grid;
    let f = grid.field.clone();
    let n = grid.nw as usize;
    let depth = n + 1;
    let q = f.order() as u64;
    let support = phi.support();
    let shifts = q.pow(depth as u32);
    let pair_work = shifts * shifts * support.len() as u64;
    let slices = q.pow(n as u32);
    let gram_work = slices * grid.len() as u64;
    let (pairs, mode): (Vec<(u64, u64)>, &str) = if pair_work <= opts.brute_force_cap {
        let all = (0..shifts).flat_map(|h| (0..shifts).map(move |g| (h, g))).collect();
        (all, "every pair (h, g)")
    } else if gram_work <= opts.brute_force_cap {
        return Verdict::from_witnesses(NAME, sliced_shift_products(phi, depth)).with_note(format!(
            "every pair (h, g) of depth <= {depth}, with the sum over y grouped by the digits below index 0; deeper differences have disjoint supports"
        ));
    } else {
        return Verdict::skipped(
            NAME,
            format!("{gram_work} term evaluations exceed the cap {}", opts.brute_force_cap),
        );
    };
    // translated points live on K_-(N+1) / K_M
    let width = depth + grid.m as usize;
    let points: Vec<(Vec<GfElem>, &CycloValue)> = support
        .iter()
        .map(|&(i, v)| {
            let mut d = vec![GfElem::ZERO];
            d.extend(grid.point(i));
            (d, v)
        })
        .collect();
    let shift_digits = |idx: u64| -> Vec<GfElem> {
        // digit k of the shift sits at index -(k+1); place it on the wide window
        let h = ShiftH0::from_index(&f, idx, depth);
        let mut d = vec![GfElem::ZERO; width];
        for k in 0..depth {
            d[depth - 1 - k] = h.digit(-(k as i64) - 1);
        }
        d
    };
    let witnesses: Vec<Witness> = pairs
        .par_iter()
        .filter_map(|&(h, g)| {
            let hd = shift_digits(h);
            let gd = shift_digits(g);
            let mut acc = Dense::new(f.p());
            for (y, v) in &points {
                // x = y + h, z = x - g
                let z: Vec<GfElem> = (0..width).map(|k| f.sub(f.add(y[k], hd[k]), gd[k])).collect();
                if !z[0].is_zero() {
                    continue;
                }
                let w = &phi.values[grid.index_of(&z[1..])];
                if !w.is_zero() {
                    acc.add_product(v, w);
                }
            }
            let ip = acc.finish(grid.cell_scale());
            let want = if h == g { 1 } else { 0 };
            let ok = ip.equals_rational(want, 1).expect("denominator 1");
            (!ok).then(|| {
                Witness::exact(
                    format!("h = {}, g = {}", fmt_shift(&f, h, depth), fmt_shift(&f, g, depth)),
                    ip,
                )
            })
        })
        .collect();
    Verdict::from_witnesses(NAME, witnesses).with_note(format!(
        "{mode} of depth <= {depth}; deeper differences have disjoint supports"
    ))
}

/// `sum_y phi(y) conj(phi(y + h - g))` for every shift pair. Points are
/// split by their digits at `-Nw..-1` (the slice) and the rest; the sum is
/// then a sum of slice products `G[a][a + d]` with `d = h - g`.
fn sliced_shift_products(phi: &StepFn, depth: usize) -> Vec<Witness> {
    let grid = &phi.grid;
    let f = grid.field.clone();
    let n = grid.nw as usize;
    let q = f.order() as usize;
    let slices = q.pow(n as u32);
    let rest = grid.len() / slices;
    let gram: Vec<CycloValue> = (0..slices * slices)
        .into_par_iter()
        .map(|ab| {
            let (a, b) = (ab / slices, ab % slices);
            let mut acc = Dense::new(f.p());
            for r in 0..rest {
                let (u, v) = (&phi.values[a + slices * r], &phi.values[b + slices * r]);
                if !u.is_zero() && !v.is_zero() {
                    acc.add_product(u, v);
                }
            }
            acc.finish(grid.cell_scale())
        })
        .collect();
    let slice_of = |digits: &[GfElem]| digits.iter().rev().fold(0usize, |acc, d| acc * q + d.index() as usize);
    let slice_digits = |mut a: usize| -> Vec<GfElem> {
        (0..n)
            .map(|_| {
                let d = GfElem::from_raw((a % q) as u32);
                a /= q;
                d
            })
            .collect()
    };
    let shifts = q.pow(depth as u32) as u64;
    let mut witnesses = Vec::new();
    for h in 0..shifts {
        let hs = ShiftH0::from_index(&f, h, depth);
        for g in 0..shifts {
            let gs = ShiftH0::from_index(&f, g, depth);
            // d = h - g, lowest index first
            let d: Vec<GfElem> = (1..=depth as i64).rev().map(|k| f.sub(hs.digit(-k), gs.digit(-k))).collect();
            let ip = if !d[0].is_zero() {
                CycloValue::zero(f.p())
            } else {
                (0..slices).fold(CycloValue::zero(f.p()), |acc, a| {
                    let shifted: Vec<GfElem> =
                        slice_digits(a).iter().zip(&d[1..]).map(|(&x, &y)| f.add(x, y)).collect();
                    &acc + &gram[a * slices + slice_of(&shifted)]
                })
            };
            let want = if h == g { 1 } else { 0 };
            if !ip.equals_rational(want, 1).expect("denominator 1") {
                witnesses.push(Witness::exact(
                    format!("h = {}, g = {}", fmt_shift(&f, h, depth), fmt_shift(&f, g, depth)),
                    ip,
                ));
            }
        }
    }
    witnesses
}

fn fmt_shift(f: &FieldRef, idx: u64, depth: usize) -> String {
    let h = ShiftH0::from_index(f, idx, depth);
    let parts: Vec<String> = (1..=depth as i64)
        .filter(|&k| !h.digit(-k).is_zero())
        .map(|k| format!("({})g_-{k}", f.format(h.digit(-k))))
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn check_unit_norm(phi: &StepFn) -> Verdict {
    let n = inner_product(phi, phi).expect("same grid");
    let witnesses = if n.is_one() {
        Vec::new()
    } else {
        vec![Witness::exact("<phi, phi>".into(), n)]
    };
    Verdict::from_witnesses("unit_norm", witnesses)
}

/// Forward transform of `phi` equals the spectrum on every coset.
pub fn check_transform_round_trip(phi: &StepFn, spec: &SpectrumTable, opts: &CheckOptions) -> Verdict {
    const NAME: &str = "transform_round_trip";
    let grid = phi.grid();
    let f = grid.field();
    let work = grid.len() as u64 * grid.digit_count() as u64 * f.order() as u64 * f.p() as u64;
    if work > opts.transform_cap {
        return Verdict::skipped(NAME, format!("{work} operations exceed the cap {}", opts.transform_cap));
    }
    let table = forward_transform(phi);
    let mut witnesses = Vec::new();
    for (i, v) in table.iter().enumerate() {
        let c = CosetId::new(grid.nw(), grid.m(), grid.point(i)).expect("grid digits");
        let want = spec.value(&c);
        if *v != want {
            witnesses.push(Witness::exact(c.format(f), v - &want));
            if witnesses.len() >= MAX_WITNESSES {
                break;
            }
        }
    }
    Verdict::from_witnesses(NAME, witnesses)
}

/// Solves for `beta` and re-evaluates the mask on every coset `(a_-1, a_0)`.
pub fn check_coefficient_round_trip(mask: &MaskTable) -> Verdict {
    let f = mask.field();
    let beta = mask_to_coefficients(mask);
    let witnesses = coset_enumerate(f, 1, 1)
        .filter_map(|c| {
            let got = beta.mask_value(&c).expect("N = 1");
            let want = mask.eval_exact(&c).expect("N = 1");
            (got != want).then(|| Witness::exact(c.format(f), &got - &want))
        })
        .collect();
    Verdict::from_witnesses("coefficient_round_trip", witnesses)
}

fn check_constructions_agree(mask: &MaskTable, tree_spec: &SpectrumTable) -> Verdict {
    const NAME: &str = "spectrum_constructions_agree";
    let f = mask.field();
    match spectrum_from_product(mask, tree_spec.m()) {
        Err(e) => Verdict::from_witnesses(NAME, vec![Witness::text("product".into(), e.to_string())]),
        Ok(prod) => {
            let mut keys: Vec<&CosetId> = prod.values().keys().chain(tree_spec.values().keys()).collect();
            keys.sort();
            keys.dedup();
            let witnesses = keys
                .into_iter()
                .filter_map(|c| {
                    let (a, b) = (prod.value(c), tree_spec.value(c));
                    (a != b).then(|| Witness::exact(c.format(f), &a - &b))
                })
                .collect();
            Verdict::from_witnesses(NAME, witnesses)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub tree: TreeJson,
    pub height: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub criteria: Vec<Verdict>,
    pub certified_mra: bool,
}

impl Report {
    pub fn failed(&self) -> Vec<&str> {
        self.criteria.iter().filter(|v| !v.pass).map(|v| v.name.as_str()).collect()
    }
}

/// Everything built from a tree, kept for export.
#[derive(Clone, Debug)]
pub struct Construction {
    pub mask: MaskTable,
    pub spectrum: SpectrumTable,
    pub phi: StepFn,
}

pub fn construct(tree: &RootedTree, lambdas: &LambdaExps) -> Result<Construction> {
    let mask = MaskTable::from_tree(tree, lambdas)?;
    let spectrum = spectrum_from_tree(tree, &mask)?;
    let phi = scaling_from_spectrum(&spectrum)?;
    Ok(Construction { mask, spectrum, phi })
}

/// Runs every criterion on the tree's mask, spectrum and scaling function.
pub fn full_report(tree: &RootedTree, lambdas: &LambdaExps, opts: &CheckOptions) -> Result<Report> {
    let c = construct(tree, lambdas)?;
    Ok(report_for(tree, &c, opts))
}

pub fn report_for(tree: &RootedTree, c: &Construction, opts: &CheckOptions) -> Report {
    let m = c.spectrum.m();
    let criteria = vec![
        check_mask_row_condition(&c.mask),
        check_mask_validity(&c.mask, m),
        check_constructions_agree(&c.mask, &c.spectrum),
        check_spectral_orthonormality(&c.spectrum),
        check_elementary_set(&c.spectrum),
        check_refinement(&c.spectrum, &c.mask),
        check_coefficient_round_trip(&c.mask),
        check_shift_orthonormality(&c.phi, opts),
        check_unit_norm(&c.phi),
        check_transform_round_trip(&c.phi, &c.spectrum, opts),
    ];
    let certified_mra = criteria.iter().all(|v| v.pass);
    Report {
        tree: tree.to_json(),
        height: tree.height(),
        m,
        criteria,
        certified_mra,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub trees: u64,
    pub certified: u64,
    pub height_histogram: BTreeMap<u32, u64>,
    /// Uncertified trees by position in the sweep, with failing criteria.
    pub failures: Vec<(u64, Vec<String>)>,
}

/// `full_report` over the given trees in parallel; the summary is in input order.
pub fn sweep(trees: &[RootedTree], opts: &CheckOptions) -> Result<SweepSummary> {
    let reports: Vec<Report> = trees
        .par_iter()
        .map(|t| full_report(t, &LambdaExps::new(), opts))
        .collect::<Result<_>>()?;
    let mut s = SweepSummary::default();
    for (i, r) in reports.iter().enumerate() {
        s.trees += 1;
        *s.height_histogram.entry(r.height).or_default() += 1;
        if r.certified_mra {
            s.certified += 1;
        } else {
            s.failures.push((i as u64, r.failed().into_iter().map(String::from).collect()));
        }
    }
    Ok(s)
}
