//! Finite sets of scalars, set arithmetic and representation functions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::convexfn::ConvexFn;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numeric::{is_float_literal, BackendKind, Scalar, Tolerance};

const SMALL_INT_LIMIT: i64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOp {
    Sum,
    Diff,
    Prod,
    Ratio,
}

impl SetOp {
    pub fn name(self) -> &'static str {
        match self {
            SetOp::Sum => "sum",
            SetOp::Diff => "diff",
            SetOp::Prod => "prod",
            SetOp::Ratio => "ratio",
        }
    }

    pub fn is_multiplicative(self) -> bool {
        matches!(self, SetOp::Prod | SetOp::Ratio)
    }

    pub fn apply(self, a: &Scalar, b: &Scalar, tol: Tolerance) -> Result<Scalar> {
        match self {
            SetOp::Sum => a.add(b),
            SetOp::Diff => a.sub(b),
            SetOp::Prod => a.mul(b),
            SetOp::Ratio => a.div_with(b, tol),
        }
    }

    /// The operation that reassembles the left operand: `(a - v) + v = a`,
    /// `(a / v) * v = a`.
    pub fn inverse(self) -> SetOp {
        match self {
            SetOp::Sum => SetOp::Diff,
            SetOp::Diff => SetOp::Sum,
            SetOp::Prod => SetOp::Ratio,
            SetOp::Ratio => SetOp::Prod,
        }
    }
}

impl fmt::Display for SetOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sum" | "+" | "add" => Ok(SetOp::Sum),
            "diff" | "-" | "sub" => Ok(SetOp::Diff),
            "prod" | "*" | "mul" => Ok(SetOp::Prod),
            "ratio" | "/" | "div" => Ok(SetOp::Ratio),
            other => Err(Error::Parse(format!(
                "unknown set operation {other:?} (expected sum, diff, prod or ratio)"
            ))),
        }
    }
}

/// A strictly increasing sequence of scalars sharing one backend.
#[derive(Clone, Debug)]
pub struct FiniteSet {
    elems: Vec<Scalar>,
    kind: BackendKind,
    tol: Tolerance,
}

impl PartialEq for FiniteSet {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.elems == other.elems
    }
}

impl Eq for FiniteSet {}

impl FiniteSet {
    pub fn empty() -> Self {
        FiniteSet {
            elems: Vec::new(),
            kind: BackendKind::Exact,
            tol: Tolerance::default(),
        }
    }

    pub fn from_values(vals: Vec<Scalar>) -> Result<Self> {
        Self::from_values_with(vals, Tolerance::default())
    }

    /// Sorts and deduplicates; tolerant values are merged into runs of
    /// pairwise-adjacent collisions, each represented by its smallest member.
    pub fn from_values_with(mut vals: Vec<Scalar>, tol: Tolerance) -> Result<Self> {
        let kind = match vals.first() {
            None => return Ok(FiniteSet::empty()),
            Some(v) => v.backend(),
        };
        if vals.iter().any(|v| v.backend() != kind) {
            return Err(Error::BackendMismatch);
        }
        vals.sort();
        match kind {
            BackendKind::Exact => vals.dedup(),
            BackendKind::Tolerant => {
                let floats: Vec<f64> = vals.iter().map(Scalar::to_f64).collect();
                vals = merge_runs(&floats, tol)
                    .into_iter()
                    .map(|(rep, _)| Scalar::Tolerant(rep))
                    .collect();
            }
        }
        Ok(FiniteSet {
            elems: vals,
            kind,
            tol,
        })
    }

    pub fn from_ints(vals: &[i64]) -> Self {
        let elems = vals.iter().map(|&v| Scalar::int(v)).collect();
        FiniteSet::from_values(elems).expect("integers share the exact backend")
    }

    /// Builds from values already strictly increasing in one backend.
    pub(crate) fn from_sorted_unchecked(elems: Vec<Scalar>, kind: BackendKind, tol: Tolerance) -> Self {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        FiniteSet { elems, kind, tol }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elements(&self) -> &[Scalar] {
        &self.elems
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scalar> {
        self.elems.iter()
    }

    pub fn backend(&self) -> BackendKind {
        self.kind
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        self.position(x).is_some()
    }

    fn position(&self, x: &Scalar) -> Option<usize> {
        match self.kind {
            BackendKind::Exact => self.elems.binary_search(x).ok(),
            BackendKind::Tolerant => nearest_colliding(&self.elems, x, self.tol),
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.elems.iter().any(Scalar::is_zero)
    }

    pub fn is_subset(&self, other: &FiniteSet) -> bool {
        self.elems.iter().all(|x| other.contains(x))
    }

    pub fn min(&self) -> Option<&Scalar> {
        self.elems.first()
    }

    pub fn max(&self) -> Option<&Scalar> {
        self.elems.last()
    }

    /// Subset of elements satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Scalar) -> bool) -> FiniteSet {
        FiniteSet {
            elems: self.elems.iter().filter(|x| keep(x)).cloned().collect(),
            kind: self.kind,
            tol: self.tol,
        }
    }

    /// Elements as `i64` when every element is an exact integer of moderate size.
    pub fn small_ints(&self) -> Option<Vec<i64>> {
        if self.kind != BackendKind::Exact {
            return None;
        }
        self.elems
            .iter()
            .map(|x| x.to_i64().filter(|v| v.abs() < SMALL_INT_LIMIT))
            .collect()
    }

    /// Converts every element to the tolerant backend.
    pub fn to_tolerant(&self, tol: Tolerance) -> Result<FiniteSet> {
        let vals = self
            .elems
            .iter()
            .map(Scalar::to_tolerant)
            .collect::<Result<Vec<_>>>()?;
        FiniteSet::from_values_with(vals, tol)
    }

    pub fn neg(&self) -> FiniteSet {
        let mut elems: Vec<Scalar> = self.elems.iter().map(Scalar::neg).collect();
        elems.reverse();
        FiniteSet {
            elems,
            kind: self.kind,
            tol: self.tol,
        }
    }

    /// `{ lambda * a + mu : a in A }`.
    pub fn affine(&self, lambda: &Scalar, mu: &Scalar) -> Result<FiniteSet> {
        if lambda.is_zero() {
            return Err(Error::InvalidParameter("affine map needs lambda != 0".into()));
        }
        let vals = self
            .elems
            .iter()
            .map(|a| lambda.mul(a)?.add(mu))
            .collect::<Result<Vec<_>>>()?;
        let out = FiniteSet::from_values_with(vals, self.tol)?;
        if out.len() != self.len() {
            return Err(Error::Collapse(format!(
                "affine image has {} elements, expected {}",
                out.len(),
                self.len()
            )));
        }
        Ok(out)
    }

    /// `{ f(a) : a in A }`. Strictly monotone maps must preserve cardinality.
    pub fn image(&self, f: &ConvexFn) -> Result<FiniteSet> {
        let vals = self
            .elems
            .iter()
            .map(|x| f.eval(x))
            .collect::<Result<Vec<_>>>()?;
        let vals = if vals.iter().any(|v| v.backend() == BackendKind::Tolerant)
            && vals.iter().any(|v| v.backend() == BackendKind::Exact)
        {
            log::debug!("image under {f} switched to the tolerant backend");
            vals.iter()
                .map(Scalar::to_tolerant)
                .collect::<Result<Vec<_>>>()?
        } else {
            vals
        };
        let out = FiniteSet::from_values_with(vals, self.tol)?;
        if f.is_strictly_monotone_on(self) && out.len() != self.len() {
            return Err(Error::Collapse(format!(
                "image under {f} has {} elements, expected {}",
                out.len(),
                self.len()
            )));
        }
        Ok(out)
    }

    pub fn combine(&self, op: SetOp, other: &FiniteSet) -> Result<FiniteSet> {
        Ok(rep_function(self, op, other)?.support_set())
    }

    pub fn sumset(&self, other: &FiniteSet) -> Result<FiniteSet> {
        self.combine(SetOp::Sum, other)
    }

    pub fn diffset(&self, other: &FiniteSet) -> Result<FiniteSet> {
        self.combine(SetOp::Diff, other)
    }

    pub fn prodset(&self, other: &FiniteSet) -> Result<FiniteSet> {
        self.combine(SetOp::Prod, other)
    }

    pub fn ratioset(&self, other: &FiniteSet) -> Result<FiniteSet> {
        self.combine(SetOp::Ratio, other)
    }

    /// Parses the set file format: one value per line, `#` comments, blank
    /// lines ignored. Any decimal literal puts the whole set on the tolerant
    /// backend.
    pub fn parse_text(text: &str, tol: Tolerance) -> Result<FiniteSet> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        let tolerant = lines.iter().any(|l| is_float_literal(l));
        let vals = lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let v: Scalar = l
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
                if tolerant {
                    v.to_tolerant()
                } else {
                    Ok(v)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteSet::from_values_with(vals, tol)
    }

    pub fn read_file(path: &Path, tol: Tolerance) -> Result<FiniteSet> {
        let text = std::fs::read_to_string(path)?;
        FiniteSet::parse_text(&text, tol)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for x in &self.elems {
            s.push_str(&x.to_string());
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, x) in self.elems.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("}")
    }
}

impl<'a> IntoIterator for &'a FiniteSet {
    type Item = &'a Scalar;
    type IntoIter = std::slice::Iter<'a, Scalar>;
    fn into_iter(self) -> Self::IntoIter {
        self.elems.iter()
    }
}

fn nearest_colliding(elems: &[Scalar], x: &Scalar, tol: Tolerance) -> Option<usize> {
    let xf = x.to_f64();
    let idx = elems.partition_point(|e| e.to_f64() < xf);
    [idx.checked_sub(1), Some(idx)]
        .into_iter()
        .flatten()
        .filter(|&i| i < elems.len())
        .find(|&i| tol.collide(elems[i].to_f64(), xf))
}

/// Groups sorted floats into maximal runs where consecutive values collide.
/// Returns `(smallest member, run length)` per run.
fn merge_runs(sorted: &[f64], tol: Tolerance) -> Vec<(f64, u64)> {
    let mut out: Vec<(f64, u64)> = Vec::new();
    let mut prev: Option<f64> = None;
    for &x in sorted {
        match (prev, out.last_mut()) {
            (Some(p), Some(last)) if tol.collide(p, x) => last.1 += 1,
            _ => out.push((x, 1)),
        }
        prev = Some(x);
    }
    out
}

/// The histogram `x -> r_{A op B}(x)` of a pair of sets.
#[derive(Clone, Debug, PartialEq)]
pub struct RepFunction {
    op: SetOp,
    kind: BackendKind,
    tol: Tolerance,
    support: Vec<Scalar>,
    counts: Vec<u64>,
    total: u64,
    max: u64,
}

impl RepFunction {
    fn new(op: SetOp, kind: BackendKind, tol: Tolerance, support: Vec<Scalar>, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        let max = counts.iter().copied().max().unwrap_or(0);
        RepFunction {
            op,
            kind,
            tol,
            support,
            counts,
            total,
            max,
        }
    }

    /// Builds a histogram directly from `(value, count)` pairs; zero counts are dropped.
    pub fn from_counts(op: SetOp, pairs: Vec<(Scalar, u64)>) -> Result<Self> {
        let mut map: BTreeMap<Scalar, u64> = BTreeMap::new();
        let mut kind = None;
        for (x, c) in pairs {
            if *kind.get_or_insert(x.backend()) != x.backend() {
                return Err(Error::BackendMismatch);
            }
            if c > 0 {
                *map.entry(x).or_default() += c;
            }
        }
        let (support, counts) = map.into_iter().unzip();
        Ok(RepFunction::new(
            op,
            kind.unwrap_or(BackendKind::Exact),
            Tolerance::default(),
            support,
            counts,
        ))
    }

    pub fn op(&self) -> SetOp {
        self.op
    }

    pub fn backend(&self) -> BackendKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `sum_x r(x)`, equal to `|A||B|`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_count(&self) -> u64 {
        self.max
    }

    pub fn support(&self) -> &[Scalar] {
        &self.support
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Scalar, u64)> + '_ {
        self.support.iter().zip(self.counts.iter().copied())
    }

    /// `r(x)`; zero off the support.
    pub fn get(&self, x: &Scalar) -> u64 {
        let idx = match self.kind {
            BackendKind::Exact => self.support.binary_search(x).ok(),
            BackendKind::Tolerant => nearest_colliding(&self.support, x, self.tol),
        };
        idx.map_or(0, |i| self.counts[i])
    }

    pub fn support_set(&self) -> FiniteSet {
        FiniteSet::from_sorted_unchecked(self.support.clone(), self.kind, self.tol)
    }

    /// Multiplicity of each count value: `m -> |{x : r(x) = m}|`.
    pub fn profile(&self) -> BTreeMap<u64, u64> {
        let mut p = BTreeMap::new();
        for &c in &self.counts {
            *p.entry(c).or_default() += 1;
        }
        p
    }

    /// Keeps only support elements satisfying `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&Scalar, u64) -> bool) -> RepFunction {
        let (support, counts) = self
            .iter()
            .filter(|(x, c)| keep(x, *c))
            .map(|(x, c)| (x.clone(), c))
            .unzip();
        RepFunction::new(self.op, self.kind, self.tol, support, counts)
    }
}

fn check_operands(a: &FiniteSet, op: SetOp, b: &FiniteSet) -> Result<()> {
    if !a.is_empty() && !b.is_empty() && a.kind != b.kind {
        return Err(Error::BackendMismatch);
    }
    if op.is_multiplicative() && (a.contains_zero() || b.contains_zero()) {
        return Err(Error::ZeroElement(op.name()));
    }
    Ok(())
}

/// `r_{A op B}` on the default execution mode.
pub fn rep_function(a: &FiniteSet, op: SetOp, b: &FiniteSet) -> Result<RepFunction> {
    rep_function_with(a, op, b, Exec::default())
}

pub fn rep_function_with(a: &FiniteSet, op: SetOp, b: &FiniteSet, exec: Exec) -> Result<RepFunction> {
    check_operands(a, op, b)?;
    let kind = if a.is_empty() { b.kind } else { a.kind };
    let tol = if a.tol.tau() >= b.tol.tau() { a.tol } else { b.tol };
    if a.is_empty() || b.is_empty() {
        return Ok(RepFunction::new(op, kind, tol, Vec::new(), Vec::new()));
    }
    if let (Some(xs), Some(ys)) = (a.small_ints(), b.small_ints()) {
        return Ok(match op {
            SetOp::Ratio => int_ratio_histogram(&xs, &ys, exec, tol),
            _ => int_histogram(&xs, op, &ys, exec, tol),
        });
    }
    match kind {
        BackendKind::Exact => exact_histogram(a, op, b, exec, tol),
        BackendKind::Tolerant => tolerant_histogram(a, op, b, exec, tol),
    }
}

fn int_histogram(xs: &[i64], op: SetOp, ys: &[i64], exec: Exec, tol: Tolerance) -> RepFunction {
    let rows: Vec<Vec<i128>> = exec.map(xs, |&x| {
        let x = x as i128;
        ys.iter()
            .map(|&y| {
                let y = y as i128;
                match op {
                    SetOp::Sum => x + y,
                    SetOp::Diff => x - y,
                    SetOp::Prod => x * y,
                    SetOp::Ratio => unreachable!("ratio is not closed on integers"),
                }
            })
            .collect()
    });
    let mut all: Vec<i128> = rows.into_iter().flatten().collect();
    exec.sort_unstable(&mut all);
    let mut support = Vec::new();
    let mut counts = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let v = all[i];
        let mut j = i + 1;
        while j < all.len() && all[j] == v {
            j += 1;
        }
        support.push(Scalar::from_bigint(BigInt::from(v)));
        counts.push((j - i) as u64);
        i = j;
    }
    RepFunction::new(op, BackendKind::Exact, tol, support, counts)
}

/// A reduced fraction with positive denominator, ordered by value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SmallFrac(i64, i64);

impl SmallFrac {
    fn new(n: i64, d: i64) -> Self {
        let g = n.gcd(&d);
        let (n, d) = (n / g, d / g);
        if d < 0 {
            SmallFrac(-n, -d)
        } else {
            SmallFrac(n, d)
        }
    }
}

impl Ord for SmallFrac {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // both magnitudes are below 2^62, so the products fit in i128
        (i128::from(self.0) * i128::from(other.1)).cmp(&(i128::from(other.0) * i128::from(self.1)))
    }
}

impl PartialOrd for SmallFrac {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn int_ratio_histogram(xs: &[i64], ys: &[i64], exec: Exec, tol: Tolerance) -> RepFunction {
    let rows: Vec<Vec<SmallFrac>> = exec.map(xs, |&x| ys.iter().map(|&y| SmallFrac::new(x, y)).collect());
    let mut all: Vec<SmallFrac> = rows.into_iter().flatten().collect();
    exec.sort_unstable(&mut all);
    let mut support = Vec::new();
    let mut counts = Vec::new();
    for run in all.chunk_by(|p, q| p == q) {
        let f = run[0];
        support.push(Scalar::Exact(BigRational::new_raw(f.0.into(), f.1.into())));
        counts.push(run.len() as u64);
    }
    RepFunction::new(SetOp::Ratio, BackendKind::Exact, tol, support, counts)
}

fn exact_histogram(a: &FiniteSet, op: SetOp, b: &FiniteSet, exec: Exec, tol: Tolerance) -> Result<RepFunction> {
    let rationals = |s: &FiniteSet| -> Vec<BigRational> {
        s.iter().map(|x| x.as_rational().cloned().unwrap_or_else(BigRational::zero)).collect()
    };
    let ys = rationals(b);
    let xs = rationals(a);
    const BLOCK: usize = 16;
    let blocks: Vec<&[BigRational]> = xs.chunks(BLOCK).collect();
    let partial: Vec<HashMap<BigRational, u64>> = exec.map(&blocks, |block| {
        let mut m: HashMap<BigRational, u64> = HashMap::new();
        for x in block.iter() {
            for y in &ys {
                let v = match op {
                    SetOp::Sum => x + y,
                    SetOp::Diff => x - y,
                    SetOp::Prod => x * y,
                    SetOp::Ratio => x / y,
                };
                *m.entry(v).or_default() += 1;
            }
        }
        m
    });
    let mut merged: HashMap<BigRational, u64> = HashMap::new();
    for m in partial {
        for (k, c) in m {
            *merged.entry(k).or_default() += c;
        }
    }
    let mut pairs: Vec<(BigRational, u64)> = merged.into_iter().collect();
    pairs.sort_unstable_by(|p, q| p.0.cmp(&q.0));
    let (support, counts) = pairs
        .into_iter()
        .map(|(k, c)| (Scalar::Exact(k), c))
        .unzip();
    Ok(RepFunction::new(op, BackendKind::Exact, tol, support, counts))
}

fn tolerant_histogram(a: &FiniteSet, op: SetOp, b: &FiniteSet, exec: Exec, tol: Tolerance) -> Result<RepFunction> {
    let ys: Vec<Scalar> = b.elems.clone();
    let rows: Vec<Result<Vec<f64>>> = exec.map(&a.elems, |x| {
        ys.iter()
            .map(|y| op.apply(x, y, tol).map(|v| v.to_f64()))
            .collect()
    });
    let mut all = Vec::with_capacity(a.len() * b.len());
    for r in rows {
        all.extend(r?);
    }
    all.sort_unstable_by(f64::total_cmp);
    let (support, counts) = merge_runs(&all, tol)
        .into_iter()
        .map(|(rep, c)| (Scalar::Tolerant(rep), c))
        .unzip();
    Ok(RepFunction::new(op, BackendKind::Tolerant, tol, support, counts))
}

/// Number of `(a, b)` with `a op b` equal to `x`, as a plain integer; used by
/// brute-force checks.
pub fn count_pairs(a: &FiniteSet, op: SetOp, b: &FiniteSet, x: &Scalar) -> Result<u64> {
    let mut n = 0;
    for p in a {
        for q in b {
            if op.apply(p, q, a.tol)? == *x {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// `r` values as `u64` keyed by exact rational, handy for tests and claims.
pub fn counts_as_map(rep: &RepFunction) -> BTreeMap<String, u64> {
    rep.iter().map(|(x, c)| (x.to_string(), c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[i64]) -> FiniteSet {
        FiniteSet::from_ints(v)
    }

    fn q(s: &str) -> Scalar {
        s.parse().unwrap()
    }

    #[test]
    fn from_values_sorts_and_dedups() {
        assert_eq!(set(&[3, 1, 2, 2]), set(&[1, 2, 3]));
        assert!(FiniteSet::from_values(vec![]).unwrap().is_empty());
        let t = FiniteSet::from_values(vec![
            Scalar::tolerant(1.0).unwrap(),
            Scalar::tolerant(1.0 + 1e-12).unwrap(),
        ])
        .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.elements()[0].to_f64(), 1.0);
        let mixed = FiniteSet::from_values(vec![Scalar::int(1), Scalar::tolerant(2.0).unwrap()]);
        assert!(matches!(mixed, Err(Error::BackendMismatch)));
    }

    #[test]
    fn tolerant_merge_is_chain_based_and_deterministic() {
        let tol = Tolerance::new(1e-9).unwrap();
        // 1, 1+0.8e-9, 1+1.6e-9: ends are 1.6e-9 apart but the run merges.
        let vals: Vec<Scalar> = [1.0 + 1.6e-9, 1.0, 1.0 + 0.8e-9]
            .iter()
            .map(|&x| Scalar::tolerant(x).unwrap())
            .collect();
        let s = FiniteSet::from_values_with(vals, tol).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.elements()[0].to_f64(), 1.0);
    }

    #[test]
    fn combine_examples() {
        assert_eq!(set(&[1, 2]).sumset(&set(&[10, 20])).unwrap(), set(&[11, 12, 21, 22]));
        let a = set(&[1, 2, 4]);
        assert_eq!(a.sumset(&a).unwrap(), set(&[2, 3, 4, 5, 6, 8]));
        let r = a.ratioset(&a).unwrap();
        let expect = FiniteSet::from_values(
            ["1/4", "1/2", "1", "2", "4"].iter().map(|s| q(s)).collect(),
        )
        .unwrap();
        assert_eq!(r, expect);
        assert!(matches!(
            set(&[0, 1]).prodset(&a),
            Err(Error::ZeroElement("prod"))
        ));
        assert!(matches!(
            a.ratioset(&set(&[0, 2])),
            Err(Error::ZeroElement("ratio"))
        ));
    }

    #[test]
    fn rep_function_examples() {
        let a = set(&[0, 1, 2]);
        let r = rep_function(&a, SetOp::Diff, &a).unwrap();
        let got: Vec<(i64, u64)> = r.iter().map(|(x, c)| (x.to_i64().unwrap(), c)).collect();
        assert_eq!(got, vec![(-2, 1), (-1, 2), (0, 3), (1, 2), (2, 1)]);
        assert_eq!(r.total(), 9);
        assert_eq!(r.max_count(), 3);

        let one = set(&[1]);
        let r = rep_function(&one, SetOp::Prod, &one).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.get(&Scalar::int(1)), 1);

        let a = set(&[1, 2, 4]);
        let r = rep_function(&a, SetOp::Ratio, &a).unwrap();
        for (x, c) in [("1", 3), ("2", 2), ("1/2", 2), ("4", 1), ("1/4", 1)] {
            assert_eq!(r.get(&q(x)), c, "r({x})");
        }
        assert_eq!(r.get(&q("3")), 0);
    }

    #[test]
    fn tolerant_histogram_merges_collisions() {
        let s = set(&[1, 2, 3]).to_tolerant(Tolerance::default()).unwrap();
        let r = rep_function(&s, SetOp::Sum, &s).unwrap();
        assert_eq!(r.len(), 5);
        assert_eq!(r.get(&Scalar::tolerant(4.0 + 1e-13).unwrap()), 3);
        assert_eq!(r.total(), 9);
    }

    #[test]
    fn image_and_affine() {
        let a = set(&[1, 2, 3]);
        assert_eq!(a.image(&ConvexFn::Square).unwrap(), set(&[1, 4, 9]));
        assert!(matches!(set(&[0, 1]).image(&ConvexFn::Log), Err(Error::Domain(_))));
        let p: ConvexFn = "pow:3/2".parse().unwrap();
        assert_eq!(set(&[1, 4]).image(&p).unwrap(), set(&[1, 8]));
        // square is not monotone across zero, so the collapse is legitimate
        assert_eq!(set(&[-1, 1]).image(&ConvexFn::Square).unwrap(), set(&[1]));

        assert_eq!(a.affine(&Scalar::int(1), &Scalar::int(0)).unwrap(), a);
        assert_eq!(set(&[0, 1]).affine(&Scalar::int(2), &Scalar::int(1)).unwrap(), set(&[1, 3]));
        assert_eq!(set(&[1, 2]).affine(&Scalar::int(-1), &Scalar::int(0)).unwrap(), set(&[-2, -1]));
        assert!(a.affine(&Scalar::int(0), &Scalar::int(1)).is_err());
    }

    #[test]
    fn set_file_format() {
        let text = "# header\n3\n\n1/2   # half\n-4\n3\n";
        let s = FiniteSet::parse_text(text, Tolerance::default()).unwrap();
        assert_eq!(s.to_text(), "-4\n1/2\n3\n");
        let t = FiniteSet::parse_text("1\n2.5\n", Tolerance::default()).unwrap();
        assert_eq!(t.backend(), BackendKind::Tolerant);
        assert_eq!(t.to_text(), "1.0\n2.5\n");
        assert!(FiniteSet::parse_text("1\nfoo\n", Tolerance::default()).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let a = FiniteSet::from_values((0..40).map(|i| Scalar::ratio(i * i + 1, i + 1).unwrap()).collect()).unwrap();
        for op in [SetOp::Sum, SetOp::Diff, SetOp::Prod, SetOp::Ratio] {
            let s = rep_function_with(&a, op, &a, Exec::Sequential).unwrap();
            let p = rep_function_with(&a, op, &a, Exec::Parallel).unwrap();
            assert_eq!(s, p);
        }
    }

    fn arb_set() -> impl Strategy<Value = FiniteSet> {
        proptest::collection::vec(-30i64..30, 1..12).prop_map(|v| FiniteSet::from_ints(&v))
    }

    fn arb_nonzero_set() -> impl Strategy<Value = FiniteSet> {
        proptest::collection::vec(1i64..30, 1..12).prop_map(|v| FiniteSet::from_ints(&v))
    }

    proptest! {
        #[test]
        fn integer_kernels_match_the_rational_path(a in arb_nonzero_set(), b in arb_nonzero_set()) {
            for op in [SetOp::Sum, SetOp::Diff, SetOp::Prod, SetOp::Ratio] {
                let fast = rep_function_with(&a, op, &b, Exec::Sequential).unwrap();
                let slow = exact_histogram(&a, op, &b, Exec::Sequential, a.tolerance()).unwrap();
                prop_assert_eq!(fast, slow);
            }
        }

        #[test]
        fn mass_identity(a in arb_nonzero_set(), b in arb_nonzero_set(), shift in -5i64..5) {
            let a2 = a.affine(&Scalar::int(1), &Scalar::int(shift)).unwrap();
            for op in [SetOp::Sum, SetOp::Diff] {
                let r = rep_function(&a2, op, &b).unwrap();
                prop_assert_eq!(r.total(), (a2.len() * b.len()) as u64);
            }
            for op in [SetOp::Prod, SetOp::Ratio] {
                let r = rep_function(&a, op, &b).unwrap();
                prop_assert_eq!(r.total(), (a.len() * b.len()) as u64);
                prop_assert!(r.counts().iter().all(|&c| c >= 1));
            }
        }

        #[test]
        fn reflection_symmetry(a in arb_set(), b in arb_set()) {
            let ab = rep_function(&a, SetOp::Diff, &b).unwrap();
            let ba = rep_function(&b, SetOp::Diff, &a).unwrap();
            for (x, c) in ab.iter() {
                prop_assert_eq!(ba.get(&x.neg()), c);
            }
            prop_assert_eq!(ab.len(), ba.len());
        }

        #[test]
        fn dilation_keeps_count_profile(a in arb_set(), b in arb_set(), l in 1i64..7, ld in 1i64..5, mu in -9i64..9, neg in any::<bool>()) {
            let lam = Scalar::ratio(if neg { -l } else { l }, ld).unwrap();
            let mu = Scalar::int(mu);
            let a2 = a.affine(&lam, &mu).unwrap();
            let b2 = b.affine(&lam, &mu).unwrap();
            let r1 = rep_function(&a, SetOp::Diff, &b).unwrap();
            let r2 = rep_function(&a2, SetOp::Diff, &b2).unwrap();
            prop_assert_eq!(r1.profile(), r2.profile());
        }

        #[test]
        fn size_bounds(a in arb_set(), b in arb_set()) {
            let s = a.sumset(&b).unwrap();
            prop_assert!(s.len() <= a.len() * b.len());
            prop_assert!(s.len() + 1 >= a.len() + b.len());
        }
    }
}
