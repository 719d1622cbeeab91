//! Moment energies `E_k = sum_x r(x)^k`, restricted energies, the mixed
//! sum `sum_t r1(t)^2 r2(t)` and the dyadic decomposition of the support.
//!
//! Every energy is a function of the count profile `m -> |{x : r(x) = m}|`,
//! which is much smaller than the support. Integer moments are summed in
//! big integers; fractional moments are summed in binary64 for reporting and
//! kept as an exact expression ([`Real`]) for certified comparisons.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::{Decision, Real, Value};
use crate::set::{rep_function, FiniteSet, RepFunction, SetOp};

pub type Exponent = Ratio<i64>;

/// An energy `sum r^k` together with the count profile it was summed from.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyValue {
    pub k: Exponent,
    pub op: SetOp,
    pub value: Value,
    profile: BTreeMap<u64, u64>,
}

impl EnergyValue {
    fn from_profile(profile: BTreeMap<u64, u64>, k: Exponent, op: SetOp) -> EnergyValue {
        let value = profile_sum(&profile, k);
        EnergyValue { k, op, value, profile }
    }

    /// Number of support points that contributed.
    pub fn terms(&self) -> u64 {
        self.profile.values().sum()
    }

    pub fn profile(&self) -> &BTreeMap<u64, u64> {
        &self.profile
    }

    /// The exact value as an expression; integer `k` gives a plain rational.
    pub fn as_real(&self) -> Real {
        profile_real(&self.profile, self.k)
    }

    /// The exact integer value; `None` for fractional `k`.
    pub fn exact(&self) -> Option<BigUint> {
        let r = self.value.as_rational()?;
        r.numer().to_biguint()
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

fn check_k(k: Exponent) -> Result<()> {
    if k < Ratio::one() {
        return Err(Error::ExponentTooSmall(format!("energy exponent must be >= 1, got {k}")));
    }
    Ok(())
}

fn int_pow(c: u64, e: u32) -> BigUint {
    num_traits::pow::Pow::pow(BigUint::from(c), e)
}

fn profile_sum(profile: &BTreeMap<u64, u64>, k: Exponent) -> Value {
    if k.is_integer() && *k.numer() >= 0 {
        let e = k.numer().to_u32().unwrap_or(u32::MAX);
        let total: BigUint = profile
            .iter()
            .map(|(&c, &m)| int_pow(c, e) * BigUint::from(m))
            .sum();
        Value::from(total)
    } else {
        let kf = k.to_f64().unwrap_or(f64::NAN);
        Value::Float(profile.iter().map(|(&c, &m)| m as f64 * (c as f64).powf(kf)).sum())
    }
}

fn profile_real(profile: &BTreeMap<u64, u64>, k: Exponent) -> Real {
    if k.is_integer() {
        if let Value::Exact(r) = profile_sum(profile, k) {
            return Real::Rat(r);
        }
    }
    let mut terms: Vec<Real> = Vec::new();
    // count 1 contributes exactly 1 per point for every k
    let mut plain = BigUint::zero();
    for (&c, &m) in profile {
        if c == 1 {
            plain += m;
        } else {
            terms.push(Real::from(m) * Real::from(c).pow(k));
        }
    }
    terms.push(Real::from(&plain));
    Real::Sum(terms)
}

/// `E_k(A, B) = sum_x r_{A op B}(x)^k`.
pub fn energy(a: &FiniteSet, b: &FiniteSet, k: Exponent, op: SetOp) -> Result<EnergyValue> {
    check_k(k)?;
    Ok(energy_of(&rep_function(a, op, b)?, k))
}

/// `E_k` of an already built histogram; `k` is not range-checked.
pub fn energy_of(rep: &RepFunction, k: Exponent) -> EnergyValue {
    EnergyValue::from_profile(rep.profile(), k, rep.op())
}

/// `sum_{x in D} r(x)^k`; points of `D` off the support contribute nothing.
pub fn restricted_energy(rep: &RepFunction, d: &FiniteSet, k: Exponent) -> EnergyValue {
    let mut profile = BTreeMap::new();
    for x in d {
        let c = rep.get(x);
        if c > 0 {
            *profile.entry(c).or_default() += 1;
        }
    }
    EnergyValue::from_profile(profile, k, rep.op())
}

/// `sum_t r1(t)^2 r2(t)`.
pub fn mixed_sum(rep1: &RepFunction, rep2: &RepFunction) -> BigUint {
    let (small, large, squared_small) = if rep1.len() <= rep2.len() {
        (rep1, rep2, true)
    } else {
        (rep2, rep1, false)
    };
    small
        .iter()
        .filter_map(|(x, c)| {
            let other = large.get(x);
            (other > 0).then(|| {
                let (sq, lin) = if squared_small { (c, other) } else { (other, c) };
                BigUint::from(sq) * BigUint::from(sq) * BigUint::from(lin)
            })
        })
        .sum()
}

/// Support points with `t <= r(x) < 2t`, `t` a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicClass {
    pub t: u64,
    pub k: Exponent,
    pub members: FiniteSet,
    pub contribution: Value,
    profile: BTreeMap<u64, u64>,
}

impl DyadicClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contribution_real(&self) -> Real {
        profile_real(&self.profile, self.k)
    }

    /// `|D_t| t^k`, the lower end of the contribution range.
    pub fn floor_mass(&self) -> Real {
        Real::from(self.size()) * Real::from(self.t).pow(self.k)
    }

    pub fn profile(&self) -> &BTreeMap<u64, u64> {
        &self.profile
    }
}

/// Partitions the support of `rep` by `floor(log2 r(x))`.
pub fn dyadic_decompose(rep: &RepFunction, k: Exponent) -> Result<Vec<DyadicClass>> {
    if rep.is_empty() {
        return Err(Error::EmptySupport("dyadic decomposition"));
    }
    let mut buckets: BTreeMap<u32, (Vec<usize>, BTreeMap<u64, u64>)> = BTreeMap::new();
    for (i, &c) in rep.counts().iter().enumerate() {
        let level = 63 - c.leading_zeros();
        let entry = buckets.entry(level).or_default();
        entry.0.push(i);
        *entry.1.entry(c).or_default() += 1;
    }
    let support = rep.support();
    let all = rep.support_set();
    Ok(buckets
        .into_iter()
        .map(|(level, (idx, profile))| {
            let members = FiniteSet::from_sorted_unchecked(
                idx.iter().map(|&i| support[i].clone()).collect(),
                all.backend(),
                all.tolerance(),
            );
            DyadicClass {
                t: 1u64 << level,
                k,
                members,
                contribution: profile_sum(&profile, k),
                profile,
            }
        })
        .collect())
}

/// Orders contributions exactly; undecidable (equal) comparisons are ties.
fn contribution_cmp(a: &DyadicClass, b: &DyadicClass) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (&a.contribution, &b.contribution) {
        (Value::Exact(x), Value::Exact(y)) => x.cmp(y),
        _ => {
            let (ra, rb) = (a.contribution_real(), b.contribution_real());
            match ra.lt(&rb).holds {
                Some(true) => Ordering::Less,
                Some(false) => match rb.lt(&ra).holds {
                    Some(true) => Ordering::Greater,
                    _ => Ordering::Equal,
                },
                None => Ordering::Equal,
            }
        }
    }
}

/// Picks the class of largest contribution among `classes`; ties go to the
/// larger `t`, then the larger class.
pub fn pick_dominant(classes: Vec<DyadicClass>) -> Option<DyadicClass> {
    classes.into_iter().reduce(|best, c| {
        let ord = contribution_cmp(&c, &best)
            .then(c.t.cmp(&best.t))
            .then(c.size().cmp(&best.size()));
        if ord == std::cmp::Ordering::Greater {
            c
        } else {
            best
        }
    })
}

pub fn dominant_class(rep: &RepFunction, k: Exponent) -> Result<DyadicClass> {
    Ok(pick_dominant(dyadic_decompose(rep, k)?).expect("nonempty decomposition"))
}

/// The two sides of `|D_t| t^k <= E_k <= 2^k |D_t| t^k L`, decided exactly.
#[derive(Debug, Clone)]
pub struct Sandwich {
    pub classes: usize,
    pub lower: Decision,
    pub upper: Decision,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower.passed() && self.upper.passed()
    }
}

/// Checks the sandwich for class `d` of `rep` with `L = log_factor`.
pub fn sandwich_with(rep: &RepFunction, d: &DyadicClass, log_factor: Real, classes: usize) -> Sandwich {
    let e = energy_of(rep, d.k).as_real();
    let floor = d.floor_mass();
    let two_k = Real::int(2).pow(d.k);
    Sandwich {
        classes,
        lower: floor.le(&e),
        upper: e.le(&(two_k * floor * log_factor)),
    }
}

/// The sandwich for the dominant class with `L` the number of classes.
pub fn sandwich(rep: &RepFunction, k: Exponent) -> Result<(DyadicClass, Sandwich)> {
    let classes = dyadic_decompose(rep, k)?;
    let n = classes.len();
    let d = pick_dominant(classes).expect("nonempty decomposition");
    let s = sandwich_with(rep, &d, Real::from(n), n);
    Ok((d, s))
}

/// `k` as an exact rational.
pub fn exponent_rational(k: Exponent) -> BigRational {
    BigRational::new((*k.numer()).into(), (*k.denom()).into())
}
