//! Floating-point construction for arbitrary unimodular lambda.
//!
//! Values here are `f64` complex numbers compared with an absolute
//! tolerance, so a pass is evidence rather than a certificate.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{QuotientGrid, Verdict, Witness};
use crate::characters::CosetId;
use crate::error::{Error, Result};
use crate::gf::{FieldRef, GfElem};
use crate::localfield::ShiftH0;
use crate::trees::{RootedTree, TreeJson};

pub const TOLERANCE: f64 = 1e-9;

/// `lambda(v, parent(v)) = exp(2 pi i turns)`; missing edges get 1.
pub type LambdaTurns = BTreeMap<(GfElem, GfElem), f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTurns {
    pub i: String,
    pub j: String,
    pub turns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaTurnsJson {
    pub entries: Vec<EdgeTurns>,
}

pub fn turns_from_json(field: &FieldRef, json: &LambdaTurnsJson) -> Result<LambdaTurns> {
    json.entries
        .iter()
        .map(|e| {
            if !e.turns.is_finite() {
                return Err(Error::Json(format!("turns must be finite, got {}", e.turns)));
            }
            Ok(((field.parse(&e.i)?, field.parse(&e.j)?), e.turns))
        })
        .collect()
}

fn unit(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * turns)
}

/// Same path products as the exact construction, in `f64`.
pub fn float_spectrum(tree: &RootedTree, lambdas: &LambdaTurns) -> Result<(u32, BTreeMap<CosetId, Complex64>)> {
    let f = tree.field();
    for &(i, j) in lambdas.keys() {
        if !tree.is_edge(i, j) {
            return Err(Error::NotAnEdge {
                i: f.format(i),
                j: f.format(j),
            });
        }
    }
    let m = tree.height() - 2;
    let mut values = BTreeMap::new();
    values.insert(CosetId::trivial(1, m), Complex64::new(1.0, 0.0));
    for v in f.elements().skip(1) {
        let mut digits = Vec::new();
        let mut value = Complex64::new(1.0, 0.0);
        let mut w = v;
        while !w.is_zero() {
            let u = tree.parent(w).expect("nonzero vertex has a parent");
            value *= unit(lambdas.get(&(w, u)).copied().unwrap_or(0.0));
            digits.push(w);
            w = u;
        }
        digits.resize(m as usize + 1, GfElem::ZERO);
        values.insert(CosetId::new(1, m, digits)?, value);
    }
    Ok((m, values))
}

fn float_phi(field: &FieldRef, grid: &QuotientGrid, spec: &BTreeMap<CosetId, Complex64>) -> Vec<Complex64> {
    let p = field.p();
    let norm = 1.0 / field.order() as f64;
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            spec.iter()
                .map(|(c, v)| {
                    let e = c.digits().iter().zip(&x).map(|(&a, &b)| field.dot(a, b)).sum::<u32>() % p;
                    v * unit(e as f64 / p as f64)
                })
                .sum::<Complex64>()
                * norm
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericReport {
    pub tree: TreeJson,
    pub tolerance: f64,
    pub criteria: Vec<Verdict>,
    /// Always false: tolerance checks do not certify.
    pub certified_mra: bool,
}

fn witness(at: String, v: Complex64) -> Witness {
    Witness {
        at,
        value: format!("{:.12}{:+.12}i", v.re, v.im),
        exact: None,
    }
}

fn verdict(name: &str, witnesses: Vec<Witness>) -> Verdict {
    Verdict {
        name: name.into(),
        pass: witnesses.is_empty(),
        witnesses,
        skipped: None,
        note: Some(format!("floating point, absolute tolerance {TOLERANCE:e}; not a certificate")),
    }
}

/// Spectral orthonormality, unit norm and shift orthonormality (all
/// differences of depth at most 2) in floating point.
pub fn float_report(tree: &RootedTree, lambdas: &LambdaTurns) -> Result<NumericReport> {
    let f = tree.field().clone();
    let (m, spec) = float_spectrum(tree, lambdas)?;
    let mut sums: BTreeMap<GfElem, f64> = f.elements().map(|a| (a, 0.0)).collect();
    for (c, v) in &spec {
        *sums.get_mut(&c.digit(-1)).expect("digit in field") += v.norm_sqr();
    }
    let spectral = sums
        .into_iter()
        .filter(|(_, s)| (s - 1.0).abs() > TOLERANCE)
        .map(|(a, s)| witness(format!("a_-1 = ({})", f.format(a)), Complex64::new(s, 0.0)))
        .collect();

    let grid = QuotientGrid::new(f.clone(), 1, m)?;
    let phi = float_phi(&f, &grid, &spec);
    let cell = (f.order() as f64).powi(-(m as i32));
    let q = f.order() as u64;
    let mut shifts = Vec::new();
    for d in 0..q * q {
        let h = ShiftH0::from_index(&f, d, 2);
        let mut ip = Complex64::new(0.0, 0.0);
        // a nonzero g_-2 digit moves the support off K_-1 entirely
        if h.digit(-2).is_zero() {
            for (i, a) in phi.iter().enumerate() {
                let mut y = grid.point(i);
                y[0] = f.sub(y[0], h.digit(-1));
                ip += a * phi[grid.index_of(&y)].conj();
            }
        }
        ip *= cell;
        let want = if d == 0 { 1.0 } else { 0.0 };
        if (ip - want).norm() > TOLERANCE {
            shifts.push(witness(format!("shift index {d}"), ip));
        }
    }
    let norm = phi.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
    let unit_norm = if (norm - 1.0).abs() > TOLERANCE {
        vec![witness("<phi, phi>".into(), Complex64::new(norm, 0.0))]
    } else {
        Vec::new()
    };
    Ok(NumericReport {
        tree: tree.to_json(),
        tolerance: TOLERANCE,
        criteria: vec![
            verdict("spectral_orthonormality", spectral),
            verdict("shift_orthonormality_brute_force", shifts),
            verdict("unit_norm", unit_norm),
        ],
        certified_mra: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::trees::enumerate;

    #[test]
    fn irrational_phases_pass_within_tolerance() {
        let f = Field::with_default_modulus(2, 2).unwrap();
        for t in enumerate(f.clone(), 100).unwrap() {
            let lam: LambdaTurns = f
                .elements()
                .skip(1)
                .map(|v| ((v, t.parent(v).unwrap()), 0.1 * v.index() as f64 + 2f64.sqrt()))
                .collect();
            let r = float_report(&t, &lam).unwrap();
            assert!(r.criteria.iter().all(|v| v.pass), "{:?}", r.criteria);
            assert!(!r.certified_mra);
        }
    }

    #[test]
    fn matches_exact_phases() {
        use crate::analysis::construct;
        use crate::mra::LambdaExps;
        let f = Field::with_default_modulus(3, 1).unwrap();
        for t in enumerate(f.clone(), 10).unwrap() {
            let mut exps = LambdaExps::new();
            let mut turns = LambdaTurns::new();
            for v in f.elements().skip(1) {
                let u = t.parent(v).unwrap();
                exps.insert((v, u), v.index());
                turns.insert((v, u), v.index() as f64 / 3.0);
            }
            let exact = construct(&t, &exps).unwrap().spectrum;
            let (_, float) = float_spectrum(&t, &turns).unwrap();
            assert_eq!(exact.values().len(), float.len());
            for (c, v) in exact.values() {
                assert!((v.to_complex() - float[c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_edges() {
        let f = Field::with_default_modulus(3, 1).unwrap();
        let t = RootedTree::star(f.clone());
        let lam: LambdaTurns = [((f.one(), f.elem(&[2]).unwrap()), 0.5)].into_iter().collect();
        assert!(float_spectrum(&t, &lam).is_err());
    }
}
