//! Exact point-line incidence counting and the solution counters built on it.
//!
//! Everything here is exact: a point lies on a line only if the rational
//! equation `y = s x + c` holds, so tolerant sets are rejected.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use crate::energy::{energy, Exponent};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numeric::{BackendKind, Real, Scalar};
use crate::set::{rep_function, FiniteSet, SetOp};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: BigRational,
    pub y: BigRational,
}

/// The line `y = slope * x + intercept`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Line {
    pub slope: BigRational,
    pub intercept: BigRational,
}

impl Point {
    pub fn new(x: impl Into<BigRational>, y: impl Into<BigRational>) -> Self {
        Point { x: x.into(), y: y.into() }
    }

    pub fn ints(x: i64, y: i64) -> Self {
        Point::new(BigRational::from_integer(x.into()), BigRational::from_integer(y.into()))
    }
}

impl Line {
    pub fn new(slope: impl Into<BigRational>, intercept: impl Into<BigRational>) -> Self {
        Line { slope: slope.into(), intercept: intercept.into() }
    }

    pub fn ints(slope: i64, intercept: i64) -> Self {
        Line::new(
            BigRational::from_integer(slope.into()),
            BigRational::from_integer(intercept.into()),
        )
    }

    pub fn at(&self, x: &BigRational) -> BigRational {
        &self.slope * x + &self.intercept
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.at(&p.x) == p.y
    }
}

fn exact_elements(s: &FiniteSet) -> Result<Vec<BigRational>> {
    if s.backend() == BackendKind::Tolerant && !s.is_empty() {
        return Err(Error::TolerantRejected("incidence counting"));
    }
    Ok(s.iter().map(|x| x.as_rational().expect("exact set").clone()).collect())
}

fn dedup<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort_unstable();
    v.dedup();
    v
}

/// `|{(p, l) : p on l}|` by checking every pair.
pub fn count_incidences_naive(points: &[Point], lines: &[Line], exec: Exec) -> u64 {
    let total = exec.sum_u128(lines, |l| points.iter().filter(|p| l.contains(p)).count() as u128);
    total as u64
}

/// `|{(p, l) : p on l}|` by grouping the points under each slope by the
/// intercept `y - s x` they would need.
pub fn count_incidences_hash(points: &[Point], lines: &[Line], exec: Exec) -> u64 {
    let mut by_slope: HashMap<&BigRational, Vec<&BigRational>> = HashMap::new();
    for l in lines {
        by_slope.entry(&l.slope).or_default().push(&l.intercept);
    }
    let mut groups: Vec<(&BigRational, Vec<&BigRational>)> = by_slope.into_iter().collect();
    groups.sort_unstable();
    let total = exec.sum_u128(&groups, |(s, intercepts)| {
        let mut need: HashMap<BigRational, u64> = HashMap::with_capacity(points.len());
        for p in points {
            *need.entry(&p.y - *s * &p.x).or_default() += 1;
        }
        intercepts.iter().map(|c| u128::from(need.get(*c).copied().unwrap_or(0))).sum()
    });
    total as u64
}

/// Deduplicates both inputs and counts with the hash join.
pub fn count_incidences(points: &[Point], lines: &[Line]) -> u64 {
    let points = dedup(points.to_vec());
    let lines = dedup(lines.to_vec());
    count_incidences_hash(&points, &lines, Exec::default())
}

/// `I(X x Y, L) = sum_l sum_{x in X} [l(x) in Y]` for a product point set.
pub fn count_grid_incidences(xs: &FiniteSet, ys: &FiniteSet, lines: &[Line], exec: Exec) -> Result<u64> {
    let xs = exact_elements(xs)?;
    let ys = exact_elements(ys)?;
    let total = exec.sum_u128(lines, |l| {
        xs.iter().filter(|x| ys.binary_search(&l.at(x)).is_ok()).count() as u128
    });
    Ok(total as u64)
}

pub fn grid_points(xs: &FiniteSet, ys: &FiniteSet) -> Result<Vec<Point>> {
    let xs = exact_elements(xs)?;
    let ys = exact_elements(ys)?;
    Ok(xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| Point::new(x.clone(), y.clone())))
        .collect())
}

/// The `|A|^2` lines `y = a x + a'` for `a, a'` in `A`.
pub fn lines_from(a: &FiniteSet) -> Result<Vec<Line>> {
    if a.contains_zero() {
        return Err(Error::ZeroElement("lines_from"));
    }
    let vals = exact_elements(a)?;
    Ok(vals
        .iter()
        .flat_map(|s| vals.iter().map(move |c| Line::new(s.clone(), c.clone())))
        .collect())
}

/// `|{(q, r, b, c) : c = q r - b}|`.
pub fn count_solutions_qr(q: &FiniteSet, r: &FiniteSet, b: &FiniteSet, c: &FiniteSet) -> Result<u64> {
    let (q, r, b, c) = (exact_elements(q)?, exact_elements(r)?, exact_elements(b)?, exact_elements(c)?);
    let mut products: HashMap<BigRational, u64> = HashMap::new();
    for x in &q {
        for y in &r {
            *products.entry(x * y).or_default() += 1;
        }
    }
    let mut n = 0;
    for bb in &b {
        for cc in &c {
            n += products.get(&(cc + bb)).copied().unwrap_or(0);
        }
    }
    Ok(n)
}

/// The same count as incidences between `R x B` and the lines `y = q x - c`.
pub fn count_solutions_qr_incidence(
    q: &FiniteSet,
    r: &FiniteSet,
    b: &FiniteSet,
    c: &FiniteSet,
) -> Result<u64> {
    let points = grid_points(r, b)?;
    let (q, c) = (exact_elements(q)?, exact_elements(c)?);
    let lines: Vec<Line> = q
        .iter()
        .flat_map(|s| c.iter().map(move |cc| Line::new(s.clone(), -cc)))
        .collect();
    Ok(count_incidences_hash(&points, &lines, Exec::default()))
}

/// Incidences between `B x (AB + A)` and the lines `y = a x + a'`.
#[derive(Debug, Clone)]
pub struct LineEnergyReport {
    pub a_size: usize,
    pub b_size: usize,
    pub c_size: usize,
    pub incidences: u64,
    /// `|A|^2 |B|`: each line passes through the `|B|` points `(b, ab + a')`.
    pub lower_bound: u64,
    pub e4_mult: BigUint,
    /// `E4x(A)^{1/12} |A|^{7/6} |B|^{2/3} |C|^{1/2} + |A|^2 |C|^{1/2}`.
    pub rhs: Real,
}

impl LineEnergyReport {
    pub fn lower_bound_holds(&self) -> bool {
        self.incidences >= self.lower_bound
    }
}

pub fn line_energy_experiment(a: &FiniteSet, b: &FiniteSet) -> Result<LineEnergyReport> {
    let lines = lines_from(a)?;
    let c = a.prodset(b)?.sumset(a)?;
    let incidences = count_grid_incidences(b, &c, &lines, Exec::default())?;
    let e4 = energy(a, a, Exponent::from_integer(4), SetOp::Ratio)?
        .exact()
        .expect("integer moment");
    let p = |n: i64, d: i64| Exponent::new(n, d);
    let (na, nb, nc) = (Real::from(a.len()), Real::from(b.len()), Real::from(c.len()));
    let rhs = Real::from(&e4).pow(p(1, 12)) * na.clone().pow(p(7, 6)) * nb.pow(p(2, 3)) * nc.clone().pow(p(1, 2))
        + na.pow(p(2, 1)) * nc.pow(p(1, 2));
    let (la, lb) = (a.len() as u64, b.len() as u64);
    Ok(LineEnergyReport {
        a_size: a.len(),
        b_size: b.len(),
        c_size: c.len(),
        incidences,
        lower_bound: la * la * lb,
        e4_mult: e4,
        rhs,
    })
}

/// Default cost guard for [`ratio_quadruple_count`].
pub const RATIO_COUNT_GUARD: usize = 12;

/// Octuples with `(a1 - a2)/(a3 - a4) = (a5 - a6)/(a7 - a8)` and nonzero
/// denominators, as `sum_v N(v)^2`.
pub fn ratio_quadruple_count(a: &FiniteSet, guard: usize) -> Result<BigUint> {
    if a.len() > guard {
        return Err(Error::SizeGuard(format!(
            "ratio_quadruple_count is limited to |A| <= {guard}, got {}",
            a.len()
        )));
    }
    exact_elements(a)?;
    let diffs = rep_function(a, SetOp::Diff, a)?;
    let mut n: HashMap<BigRational, u64> = HashMap::new();
    for (d, rd) in diffs.iter() {
        let d = d.as_rational().expect("exact");
        for (e, re) in diffs.iter() {
            let e = e.as_rational().expect("exact");
            if !e.is_zero() {
                *n.entry(d / e).or_default() += rd * re;
            }
        }
    }
    Ok(n.values().map(|&v| BigUint::from(v) * BigUint::from(v)).sum())
}

/// Brute-force octuple count with integer cross-multiplication, for small
/// integer sets.
pub fn ratio_quadruple_oracle(a: &[i64]) -> u64 {
    let mut fracs = Vec::new();
    for &a1 in a {
        for &a2 in a {
            for &a3 in a {
                for &a4 in a {
                    if a3 != a4 {
                        fracs.push((i128::from(a1 - a2), i128::from(a3 - a4)));
                    }
                }
            }
        }
    }
    let mut count = 0u64;
    for &(n1, d1) in &fracs {
        for &(n2, d2) in &fracs {
            if n1 * d2 == n2 * d1 {
                count += 1;
            }
        }
    }
    count
}

/// Parses a point list of `x y` lines (same comment rules as set files).
pub fn parse_points(text: &str) -> Result<Vec<Point>> {
    parse_pairs(text).map(|v| v.into_iter().map(|(x, y)| Point { x, y }).collect())
}

/// Parses a line list of `slope intercept` lines.
pub fn parse_lines(text: &str) -> Result<Vec<Line>> {
    parse_pairs(text).map(|v| {
        v.into_iter()
            .map(|(slope, intercept)| Line { slope, intercept })
            .collect()
    })
}

fn parse_pairs(text: &str) -> Result<Vec<(BigRational, BigRational)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse(format!("line {}: expected two values, got {raw:?}", i + 1)));
        };
        let parse = |s: &str| match s.parse::<Scalar>()? {
            Scalar::Exact(r) => Ok(r),
            Scalar::Tolerant(_) => Err(Error::TolerantRejected("incidence counting")),
        };
        out.push((parse(x)?, parse(y)?));
    }
    Ok(out)
}
