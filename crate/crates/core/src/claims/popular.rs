//! Popular sums, the refined set and the translation classes of triples.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::numeric::{Real, Scalar};
use crate::set::{rep_function, FiniteSet, SetOp};

/// `max(1, ceil(|A||C| / (L(|A|) |A+C|)))`.
pub fn popular_threshold(a: &FiniteSet, c: &FiniteSet) -> Result<u64> {
    if a.len() < 2 {
        return Err(Error::TooSmall(format!("popular set needs |A| >= 2, got {}", a.len())));
    }
    let sums = a.sumset(c)?;
    if sums.is_empty() {
        return Ok(1);
    }
    let x = Real::from(a.len() * c.len()) / (Real::guarded_log2(a.len() as u64) * Real::from(sums.len()));
    let t = x
        .ceil()
        .and_then(|v| v.to_u64())
        .ok_or_else(|| Error::InvalidParameter("popularity threshold is not decidable".into()))?;
    Ok(t.max(1))
}

/// `P(A, C)`: the sums whose representation count meets [`popular_threshold`].
pub fn popular_set(a: &FiniteSet, c: &FiniteSet) -> Result<FiniteSet> {
    let t = popular_threshold(a, c)?;
    Ok(rep_function(a, SetOp::Sum, c)?.restrict(|_, r| r >= t).support_set())
}

/// `|{c in C : a + c in P}|` for each `a` in `A`, in order.
pub fn popular_degrees(a: &FiniteSet, c: &FiniteSet, p: &FiniteSet) -> Result<Vec<usize>> {
    a.iter()
        .map(|x| {
            let mut n = 0;
            for y in c {
                if p.contains(&x.add(y)?) {
                    n += 1;
                }
            }
            Ok(n)
        })
        .collect()
}

/// `A' = {a : |{c in C : a + c in P}| >= |C|/2}`.
pub fn refined_set(a: &FiniteSet, c: &FiniteSet, p: &FiniteSet) -> Result<FiniteSet> {
    let deg = popular_degrees(a, c, p)?;
    let mut it = deg.into_iter();
    Ok(a.filter(|_| 2 * it.next().expect("one degree per element") >= c.len()))
}

/// Triples `(a, b, c)` with `a - b in D` and `a + c in P`, grouped by
/// `(a - b, a + c)`. The key is invariant under `(a+t, b+t, c-t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivClassTable {
    pub classes: BTreeMap<(Scalar, Scalar), u64>,
    /// Number of triples.
    pub total: u64,
    /// `sum |class|^2`.
    pub second_moment: BigUint,
}

impl EquivClassTable {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

pub fn equiv_classes(a: &FiniteSet, c: &FiniteSet, d: &FiniteSet, p: &FiniteSet) -> Result<EquivClassTable> {
    let mut classes: BTreeMap<(Scalar, Scalar), u64> = BTreeMap::new();
    for x in a {
        let sums: Vec<Scalar> = c
            .iter()
            .map(|z| x.add(z))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|s| p.contains(s))
            .collect();
        if sums.is_empty() {
            continue;
        }
        for y in a {
            let diff = x.sub(y)?;
            if !d.contains(&diff) {
                continue;
            }
            for s in &sums {
                *classes.entry((diff.clone(), s.clone())).or_default() += 1;
            }
        }
    }
    let total = classes.values().sum();
    let second_moment = classes.values().map(|&n| BigUint::from(n) * BigUint::from(n)).sum();
    Ok(EquivClassTable { classes, total, second_moment })
}

/// `|{(d, s1, s2) in D x P x (A+C) : d = s1 - s2}|`, an upper bound for the
/// number of classes: the class of `(a, b, c)` yields `s2 = b + c`.
pub fn class_solution_bound(a: &FiniteSet, c: &FiniteSet, d: &FiniteSet, p: &FiniteSet) -> Result<u64> {
    let sums = a.sumset(c)?;
    let mut n = 0;
    for x in d {
        for s in p {
            if sums.contains(&s.sub(x)?) {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Verifies that every triple's class key is unchanged by `(a+t, b+t, c-t)`
/// whenever the shifted triple stays inside `A x A x C`. Only shifts with
/// `a + t` in `A` can qualify, so `t` runs over `A - a`.
pub fn class_keys_well_defined(a: &FiniteSet, c: &FiniteSet) -> Result<bool> {
    for x in a {
        for y in a {
            let d = x.sub(y)?;
            for z in c {
                let s = x.add(z)?;
                for x2 in a {
                    let t = x2.sub(x)?;
                    let (y2, z2) = (y.add(&t)?, z.sub(&t)?);
                    if a.contains(&y2) && c.contains(&z2) && (x2.sub(&y2)? != d || x2.add(&z2)? != s) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// `(1 - 2/L(|A|)) |A|`, the guaranteed size of the refined set.
pub fn refined_lower_bound(n: usize) -> Real {
    (Real::int(1) - Real::int(2) / Real::guarded_log2(BigInt::from(n))) * Real::from(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::mixed_sum;
    use crate::generators::FamilySpec;

    fn set(v: &[i64]) -> FiniteSet {
        FiniteSet::from_ints(v)
    }

    #[test]
    fn small_popular_set() {
        let a = set(&[0, 1]);
        // 2*2 / (L(2) * 3) = 4/3, so the threshold is 2
        assert_eq!(popular_threshold(&a, &a).unwrap(), 2);
        assert_eq!(popular_set(&a, &a).unwrap(), set(&[1]));
        assert!(popular_threshold(&set(&[3]), &a).is_err());
    }

    #[test]
    fn ap_popular_sums_are_central() {
        let a = FamilySpec::ap(0, 1).generate(32).unwrap();
        let t = popular_threshold(&a, &a).unwrap();
        assert_eq!(t, 4);
        let p = popular_set(&a, &a).unwrap();
        assert_eq!(p.min().unwrap().to_i64(), Some(3));
        assert_eq!(p.max().unwrap().to_i64(), Some(59));
        assert_eq!(refined_set(&a, &a, &p).unwrap(), a);
    }

    #[test]
    fn refined_extremes() {
        let a = set(&[0, 1, 5, 9]);
        let c = set(&[2, 3]);
        assert_eq!(refined_set(&a, &c, &a.sumset(&c).unwrap()).unwrap(), a);
        assert!(refined_set(&a, &c, &FiniteSet::empty()).unwrap().is_empty());
    }

    #[test]
    fn class_table_example() {
        let a = set(&[0, 1]);
        let c = set(&[0]);
        let t = equiv_classes(&a, &c, &set(&[0]), &a.sumset(&c).unwrap()).unwrap();
        assert_eq!(t.total, 2);
        let keys: Vec<(i64, i64)> = t
            .classes
            .keys()
            .map(|(d, s)| (d.to_i64().unwrap(), s.to_i64().unwrap()))
            .collect();
        assert_eq!(keys, [(0, 0), (0, 1)]);
    }

    #[test]
    fn pipeline_inequalities() {
        let a = set(&[0, 1, 3, 4, 8, 9, 11, 15]);
        let c = set(&[0, 2, 3, 7, 8]);
        let p = popular_set(&a, &c).unwrap();
        let d = a.diffset(&a).unwrap().filter(|x| x.to_i64().unwrap().abs() <= 4);
        let t = equiv_classes(&a, &c, &d, &p).unwrap();
        let ra = rep_function(&a, SetOp::Diff, &a).unwrap();
        let rc = rep_function(&c, SetOp::Diff, &c).unwrap();
        assert!(t.second_moment <= mixed_sum(&ra, &rc));
        assert!(BigUint::from(t.total).pow(2) <= BigUint::from(t.len()) * &t.second_moment);
        assert!(t.len() as u64 <= class_solution_bound(&a, &c, &d, &p).unwrap());
        assert!(class_keys_well_defined(&a, &c).unwrap());
        // unconstrained sums: N = |C| * sum_{d in D} r_{A-A}(d)
        let full = equiv_classes(&a, &c, &d, &a.sumset(&c).unwrap()).unwrap();
        let expect: u64 = d.iter().map(|x| ra.get(x)).sum::<u64>() * c.len() as u64;
        assert_eq!(full.total, expect);
    }
}
