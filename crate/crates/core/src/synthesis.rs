//! From the spectrum back to the scaling function, and exports of both.

use std::fmt::Write as _;

use crate::analysis::{QuotientGrid, StepFn};
use crate::characters::CosetId;
use crate::error::{Error, Result};
use crate::exactnum::CycloValue;
use crate::gf::{FieldRef, GfElem};
use crate::mra::SpectrumTable;

/// `phi(x) = p^-s sum_c phi^(c) (zeta_c, x)` on `K_-1 / K_M`.
pub fn scaling_from_spectrum(spec: &SpectrumTable) -> Result<StepFn> {
    let f = spec.field();
    let grid = QuotientGrid::new(f.clone(), 1, spec.m())?;
    let p = f.p() as usize;
    let q = f.order() as usize;
    let width = grid.digit_count();
    let dots: Vec<usize> = (0..q * q)
        .map(|ab| f.dot(GfElem::from_raw((ab / q) as u32), GfElem::from_raw((ab % q) as u32)) as usize)
        .collect();
    let scale = spec.values().values().map(|v| v.scale()).max().unwrap_or(0);
    let terms: Vec<(Vec<usize>, Vec<i64>)> = spec
        .values()
        .iter()
        .map(|(c, v)| {
            let k = (p as i64).pow(scale - v.scale());
            let digits = c.digits().iter().map(|d| d.index() as usize * q).collect();
            (digits, v.coeffs().iter().map(|x| x * k).collect())
        })
        .collect();
    // grid and coset digits both run over indices -1..M
    let mut x = vec![0usize; width];
    let mut cell = vec![0i64; p];
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        cell.iter_mut().for_each(|c| *c = 0);
        for (digits, coeffs) in &terms {
            let e = digits.iter().zip(&x).map(|(a, b)| dots[a + b]).sum::<usize>() % p;
            for (j, c) in coeffs.iter().enumerate() {
                cell[(j + e) % p] += c;
            }
        }
        values.push(CycloValue::from_parts(cell.clone(), scale + f.s()));
        for d in x.iter_mut() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
    }
    StepFn::new(grid, values)
}

/// `f^(c) = int f(x) conj((zeta_c, x)) dmu(x)` for every coset
/// `c = (K_-Nw)^perp r_-Nw^(a_-Nw) .. r_(M-1)^(a_(M-1))`, indexed like the
/// grid. Computed one digit axis at a time.
pub fn forward_transform(fun: &StepFn) -> Vec<CycloValue> {
    let grid = fun.grid();
    let f = grid.field();
    let p = f.p() as usize;
    let q = f.order() as usize;
    let cells = grid.len();
    let top = fun.values().iter().map(|v| v.scale()).max().unwrap_or(0);
    let mut data = vec![0i64; cells * p];
    for (i, v) in fun.values().iter().enumerate() {
        let k = (p as i64).pow(top - v.scale());
        for (j, &c) in v.coeffs().iter().enumerate() {
            data[i * p + j] = c * k;
        }
    }
    let dots: Vec<usize> = (0..q * q)
        .map(|ab| f.dot(GfElem::from_raw((ab / q) as u32), GfElem::from_raw((ab % q) as u32)) as usize)
        .collect();
    let mut line = vec![0i64; q * p];
    let mut out = vec![0i64; q * p];
    let mut stride = 1;
    for _ in 0..grid.digit_count() {
        for hi in 0..cells / (stride * q) {
            for lo in 0..stride {
                let base = hi * stride * q + lo;
                for a in 0..q {
                    let at = (base + a * stride) * p;
                    line[a * p..(a + 1) * p].copy_from_slice(&data[at..at + p]);
                }
                out.iter_mut().for_each(|x| *x = 0);
                for b in 0..q {
                    for a in 0..q {
                        let shift = (p - dots[a * q + b]) % p;
                        for j in 0..p {
                            out[b * p + (j + shift) % p] += line[a * p + j];
                        }
                    }
                }
                for b in 0..q {
                    let at = (base + b * stride) * p;
                    data[at..at + p].copy_from_slice(&out[b * p..(b + 1) * p]);
                }
            }
        }
        stride *= q;
    }
    let scale = top + grid.cell_scale();
    data.chunks(p)
        .map(|c| CycloValue::from_parts(c.to_vec(), scale))
        .collect()
}

/// A transform table as a spectrum (grid with `Nw = 1`).
pub fn transform_to_spectrum(fun: &StepFn) -> Result<SpectrumTable> {
    let grid = fun.grid();
    if grid.nw() != 1 {
        return Err(Error::MalformedCoset("spectrum tables need N = 1".into()));
    }
    let values = forward_transform(fun)
        .into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| Ok((CosetId::new(1, grid.m(), grid.point(i))?, v)))
        .collect::<Result<_>>()?;
    SpectrumTable::new(grid.field().clone(), grid.m(), values)
}

/// `K_n + a_-1 g_-1 + .. + a_(n-1) g_(n-1)`: digits at indices `-1..n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubgroupCoset {
    pub level: i64,
    pub digits: Vec<GfElem>,
}

impl SubgroupCoset {
    pub fn format(&self, f: &FieldRef) -> String {
        let mut s = format!("K_{}", self.level);
        for (k, d) in self.digits.iter().enumerate() {
            if !d.is_zero() {
                let _ = write!(s, " + ({})g_{}", f.format(*d), k as i64 - 1);
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorSet {
    pub cosets: Vec<SubgroupCoset>,
    /// Total measure, `sum p^(-s level)`.
    pub measure: CycloValue,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Indicator {
    Set(IndicatorSet),
    /// First cell (grid order) whose value is neither 0 nor 1.
    NotIndicator { digits: Vec<GfElem>, value: CycloValue },
}

/// The unit cells of a 0/1 step function on `K_-1 / K_M`, with full sibling
/// groups merged into their parent coset.
pub fn extract_indicator(phi: &StepFn) -> Result<Indicator> {
    let grid = phi.grid();
    if grid.nw() != 1 {
        return Err(Error::MalformedCoset("indicator extraction needs Nw = 1".into()));
    }
    let f = grid.field();
    let q = f.order() as usize;
    let mut cosets: Vec<SubgroupCoset> = Vec::new();
    for (i, v) in phi.values().iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        if !v.is_one() {
            return Ok(Indicator::NotIndicator {
                digits: grid.point(i),
                value: v.clone(),
            });
        }
        cosets.push(SubgroupCoset {
            level: grid.m() as i64,
            digits: grid.point(i),
        });
    }
    // merge p^s siblings that differ only in their top digit
    let mut level = grid.m() as i64;
    while level > -1 {
        let mut groups: std::collections::BTreeMap<Vec<GfElem>, usize> = Default::default();
        for c in cosets.iter().filter(|c| c.level == level) {
            *groups.entry(c.digits[..c.digits.len() - 1].to_vec()).or_default() += 1;
        }
        let full: Vec<Vec<GfElem>> = groups.into_iter().filter(|(_, n)| *n == q).map(|(k, _)| k).collect();
        if full.is_empty() {
            break;
        }
        cosets.retain(|c| !(c.level == level && full.contains(&c.digits[..c.digits.len() - 1].to_vec())));
        cosets.extend(full.into_iter().map(|digits| SubgroupCoset {
            level: level - 1,
            digits,
        }));
        level -= 1;
    }
    cosets.sort();
    let p = f.p();
    let measure = cosets.iter().fold(CycloValue::zero(p), |acc, c| {
        let m = if c.level >= 0 {
            CycloValue::one(p).div_p_pow(f.s() * c.level as u32)
        } else {
            CycloValue::from_int(p, (f.order() as i64).pow((-c.level) as u32))
        };
        &acc + &m
    });
    Ok(Indicator::Set(IndicatorSet { cosets, measure }))
}

/// Base-p integer of the chosen coordinate over the digits in the given order.
fn axis_index(f: &FieldRef, digits: &[GfElem], coord: usize) -> usize {
    let p = f.p() as usize;
    digits.iter().fold(0, |acc, &d| acc * p + f.digits(d)[coord] as usize)
}

/// 2-D view for `s = 2`: row from coordinate 0 of every digit, column from
/// coordinate 1, the coarsest digit most significant. `view[r][c]`.
fn grid_view(f: &FieldRef, cells: &[(Vec<GfElem>, CycloValue)], side: usize) -> Result<Vec<Vec<CycloValue>>> {
    if f.s() != 2 {
        return Err(Error::GridViewUnsupported(f.s()));
    }
    let mut view = vec![vec![CycloValue::zero(f.p()); side]; side];
    for (digits, v) in cells {
        view[axis_index(f, digits, 0)][axis_index(f, digits, 1)] = v.clone();
    }
    Ok(view)
}

/// `phi` on `K_-1 / K_M`; the most negative digit is the coarsest.
pub fn phi_grid_view(phi: &StepFn) -> Result<Vec<Vec<CycloValue>>> {
    let grid = phi.grid();
    let f = grid.field();
    let side = (f.p() as usize).pow(grid.digit_count() as u32);
    let cells: Vec<_> = (0..grid.len()).map(|i| (grid.point(i), phi.value(i).clone())).collect();
    grid_view(f, &cells, side)
}

/// `phi^` on `(K_M)^perp / (K_-1)^perp`; the highest-index digit is the coarsest.
pub fn spectrum_grid_view(spec: &SpectrumTable) -> Result<Vec<Vec<CycloValue>>> {
    let f = spec.field();
    let side = (f.p() as usize).pow(spec.m() + 1);
    let cells: Vec<_> = spec
        .values()
        .iter()
        .map(|(c, v)| (c.digits().iter().rev().copied().collect(), v.clone()))
        .collect();
    grid_view(f, &cells, side)
}

/// Space-separated rows with row 0 printed last, so the picture has the
/// origin at the bottom left.
pub fn grid_text(view: &[Vec<CycloValue>]) -> String {
    let mut out = String::new();
    for row in view.iter().rev() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// `digits,value_re_exact` rows for every cell, sorted by the digit vector
/// read from the most negative index.
pub fn phi_csv(phi: &StepFn) -> String {
    let grid = phi.grid();
    let f = grid.field();
    let mut rows: Vec<(Vec<GfElem>, usize)> = (0..grid.len()).map(|i| (grid.point(i), i)).collect();
    rows.sort();
    let mut out = String::from("digits,value_re_exact\n");
    for (digits, i) in rows {
        let d: Vec<String> = digits.iter().map(|&x| format!("({})", f.format(x))).collect();
        let _ = writeln!(out, "\"{}\",{}", d.join(" "), phi.value(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::inner_product;
    use crate::gf::Field;
    use crate::mra::{spectrum_from_tree, LambdaExps, MaskTable};
    use crate::trees::RootedTree;

    fn gf(p: u32, s: u32) -> FieldRef {
        Field::with_default_modulus(p, s).unwrap()
    }

    fn e(f: &FieldRef, t: &str) -> GfElem {
        f.parse(t).unwrap()
    }

    fn worked_tree() -> RootedTree {
        let f = gf(2, 2);
        let pairs = [("1,1", "0,0"), ("0,1", "1,1"), ("1,0", "1,1")];
        let pairs: Vec<_> = pairs.iter().map(|(v, u)| (e(&f, v), e(&f, u))).collect();
        RootedTree::from_pairs(f, &pairs).unwrap()
    }

    fn spectrum(t: &RootedTree, lam: &LambdaExps) -> SpectrumTable {
        let mask = MaskTable::from_tree(t, lam).unwrap();
        spectrum_from_tree(t, &mask).unwrap()
    }

    const WORKED_GRID: &str = "0 0 1 0\n0 0 0 1\n0 1 0 0\n1 0 0 0\n";

    #[test]
    fn worked_example_scaling_function() {
        let spec = spectrum(&worked_tree(), &LambdaExps::new());
        let phi = scaling_from_spectrum(&spec).unwrap();
        let f = phi.grid().field().clone();
        assert!(inner_product(&phi, &phi).unwrap().is_one());
        let Indicator::Set(set) = extract_indicator(&phi).unwrap() else {
            panic!("expected an indicator");
        };
        assert_eq!(set.cosets.len(), 4);
        assert!(set.measure.is_one());
        let names: Vec<String> = set.cosets.iter().map(|c| c.format(&f)).collect();
        assert!(names.contains(&"K_1".to_string()));
        assert!(names.contains(&"K_1 + (1,1)g_0".to_string()));
        assert!(names.contains(&"K_1 + (1,1)g_-1 + (1,0)g_0".to_string()));
        assert!(names.contains(&"K_1 + (1,1)g_-1 + (0,1)g_0".to_string()));
        assert_eq!(grid_text(&phi_grid_view(&phi).unwrap()), WORKED_GRID);
        assert_eq!(grid_text(&spectrum_grid_view(&spec).unwrap()), WORKED_GRID);
    }

    #[test]
    fn haar_is_k0() {
        for (p, s) in [(2, 1), (3, 1), (2, 2), (2, 3)] {
            let f = gf(p, s);
            let spec = spectrum(&RootedTree::star(f.clone()), &LambdaExps::new());
            let phi = scaling_from_spectrum(&spec).unwrap();
            for i in 0..phi.grid().len() {
                let inside = phi.grid().point(i)[0].is_zero();
                assert_eq!(phi.value(i).is_one(), inside);
                assert_eq!(phi.value(i).is_zero(), !inside);
            }
            let Indicator::Set(set) = extract_indicator(&phi).unwrap() else {
                panic!("expected an indicator");
            };
            assert_eq!(set.cosets.len(), 1);
            assert_eq!(set.cosets[0].format(&f), "K_0");
        }
    }

    #[test]
    fn haar_grid_at_finer_resolution() {
        let f = gf(2, 2);
        let grid = QuotientGrid::new(f, 1, 1).unwrap();
        let k0 = StepFn::indicator(grid, |d| d[0].is_zero());
        let text = grid_text(&phi_grid_view(&k0).unwrap());
        assert_eq!(text, "0 0 0 0\n0 0 0 0\n1 1 0 0\n1 1 0 0\n");
    }

    #[test]
    fn twisted_lambda_is_not_an_indicator() {
        let t = worked_tree();
        let f = t.field().clone();
        let mut lam = LambdaExps::new();
        lam.insert((e(&f, "0,1"), e(&f, "1,1")), 1);
        let phi = scaling_from_spectrum(&spectrum(&t, &lam)).unwrap();
        assert!(matches!(extract_indicator(&phi).unwrap(), Indicator::NotIndicator { .. }));
        assert!(inner_product(&phi, &phi).unwrap().is_one());
    }

    #[test]
    fn transform_round_trip() {
        for (p, s) in [(3, 1), (2, 2)] {
            let f = gf(p, s);
            for t in crate::trees::enumerate(f.clone(), 100).unwrap() {
                let mut lam = LambdaExps::new();
                for v in f.elements().skip(1) {
                    lam.insert((v, t.parent(v).unwrap()), v.index() % p);
                }
                let spec = spectrum(&t, &lam);
                let phi = scaling_from_spectrum(&spec).unwrap();
                assert_eq!(transform_to_spectrum(&phi).unwrap(), spec);
            }
        }
    }

    #[test]
    fn grid_view_needs_s2() {
        let f = gf(3, 1);
        let spec = spectrum(&RootedTree::star(f), &LambdaExps::new());
        let phi = scaling_from_spectrum(&spec).unwrap();
        assert_eq!(phi_grid_view(&phi), Err(Error::GridViewUnsupported(1)));
        assert!(phi_csv(&phi).starts_with("digits,value_re_exact\n\"(0)\",1\n"));
    }
}
