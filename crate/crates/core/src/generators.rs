//! Reproducible set families.
//!
//! Random families use SplitMix64: with state `s`, each draw sets
//! `s += 0x9E3779B97F4A7C15` and returns
//!
//! ```text
//! z = s
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z ^ (z >> 31)
//! ```
//!
//! (wrapping arithmetic). Seed 0 yields 16294208416658607535,
//! 7960286522194355700, 487617019471545679, ... A draw is mapped to
//! `1..=range` by `((z * range) >> 64) + 1` in 128-bit arithmetic, and
//! repeated values are rejected.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::convexfn::ConvexFn;
use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational, Scalar};
use crate::set::FiniteSet;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw from `1..=range` by multiply-shift.
    pub fn next_in(&mut self, range: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(range)) >> 64) as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `start + i * step`.
    Ap { start: BigRational, step: BigRational },
    /// `base * ratio^i`.
    Gp { base: BigRational, ratio: BigRational },
    /// `f(1), ..., f(n)`.
    Convex(ConvexFn),
    /// `n` distinct draws from `1..=range`.
    Random { range: u64, seed: u64 },
    /// `start + step * (i + d_i / jitter)` with `d_i` drawn from `0..jitter`,
    /// so each point moves inside its own cell and no two points collide.
    PerturbedAp { start: BigRational, step: BigRational, jitter: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: Family,
}

impl FamilySpec {
    pub fn ap(start: i64, step: i64) -> Self {
        FamilySpec {
            family: Family::Ap {
                start: BigRational::from_integer(start.into()),
                step: BigRational::from_integer(step.into()),
            },
        }
    }

    pub fn gp(base: i64, ratio: i64) -> Self {
        FamilySpec {
            family: Family::Gp {
                base: BigRational::from_integer(base.into()),
                ratio: BigRational::from_integer(ratio.into()),
            },
        }
    }

    pub fn convex(f: ConvexFn) -> Self {
        FamilySpec { family: Family::Convex(f) }
    }

    pub fn random(range: u64, seed: u64) -> Self {
        FamilySpec { family: Family::Random { range, seed } }
    }

    pub fn generate(&self, n: usize) -> Result<FiniteSet> {
        if n == 0 {
            return Err(Error::InvalidParameter("family size must be at least 1".into()));
        }
        match &self.family {
            Family::Ap { start, step } => {
                if step.is_zero() {
                    return Err(Error::InvalidParameter("ap step must be nonzero".into()));
                }
                let vals = (0..n)
                    .map(|i| Scalar::Exact(start + step * BigRational::from_integer(i.into())))
                    .collect();
                FiniteSet::from_values(vals)
            }
            Family::Gp { base, ratio } => {
                if base.is_zero() || ratio.is_zero() || ratio.abs().is_one() {
                    return Err(Error::InvalidParameter(format!(
                        "gp needs base != 0 and ratio not in {{0, 1, -1}}, got base {} ratio {}",
                        format_rational(base),
                        format_rational(ratio)
                    )));
                }
                let mut cur = base.clone();
                let mut vals = Vec::with_capacity(n);
                for _ in 0..n {
                    vals.push(Scalar::Exact(cur.clone()));
                    cur *= ratio;
                }
                FiniteSet::from_values(vals)
            }
            Family::Convex(f) => {
                let base: Vec<i64> = (1..=n as i64).collect();
                FiniteSet::from_ints(&base).image(f)
            }
            Family::Random { range, seed } => {
                if (n as u64) > *range {
                    return Err(Error::InvalidParameter(format!(
                        "cannot draw {n} distinct values from 1..={range}"
                    )));
                }
                let mut rng = SplitMix64::new(*seed);
                let mut seen = HashSet::with_capacity(n);
                let mut vals = Vec::with_capacity(n);
                while vals.len() < n {
                    let v = rng.next_in(*range);
                    if seen.insert(v) {
                        vals.push(Scalar::from_bigint(BigInt::from(v)));
                    }
                }
                FiniteSet::from_values(vals)
            }
            Family::PerturbedAp { start, step, jitter, seed } => {
                if step.is_zero() || *jitter == 0 {
                    return Err(Error::InvalidParameter("pap needs a nonzero step and jitter >= 1".into()));
                }
                let mut rng = SplitMix64::new(*seed);
                let j = BigRational::from_integer((*jitter).into());
                let vals = (0..n)
                    .map(|i| {
                        let d = rng.next_in(*jitter) - 1;
                        let pos = BigRational::from_integer(i.into())
                            + BigRational::from_integer(d.into()) / &j;
                        Scalar::Exact(start + step * pos)
                    })
                    .collect();
                FiniteSet::from_values(vals)
            }
        }
    }

    /// Parses `"<spec>:<n>"`, the form used on the command line.
    pub fn parse_sized(s: &str) -> Result<(FamilySpec, usize)> {
        let (spec, n) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("expected <family>:<n>, got {s:?}")))?;
        let n: usize = n
            .parse()
            .map_err(|_| Error::Parse(format!("bad set size {n:?} in {s:?}")))?;
        Ok((spec.parse()?, n))
    }
}

fn parse_seed(s: &str) -> Result<u64> {
    let bad = || Error::Parse(format!("bad seed {s:?}"));
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).map_err(|_| bad()),
        None => s.parse().map_err(|_| bad()),
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (tag, rest) = s.split_once(':').unwrap_or((s, ""));
        let fields: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(':').collect() };
        let arity = |lo: usize, hi: usize| {
            if fields.len() < lo || fields.len() > hi {
                Err(Error::Parse(format!("wrong number of fields in family {s:?}")))
            } else {
                Ok(())
            }
        };
        let family = match tag {
            "ap" => {
                arity(2, 2)?;
                Family::Ap { start: parse_rational(fields[0])?, step: parse_rational(fields[1])? }
            }
            "gp" => {
                arity(2, 2)?;
                Family::Gp { base: parse_rational(fields[0])?, ratio: parse_rational(fields[1])? }
            }
            "convex" => Family::Convex(rest.parse()?),
            "rand" => {
                arity(2, 2)?;
                let range = fields[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad range in {s:?}")))?;
                Family::Random { range, seed: parse_seed(fields[1])? }
            }
            "pap" => {
                arity(3, 4)?;
                let jitter = fields[2]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad jitter in {s:?}")))?;
                let seed = fields.get(3).map(|f| parse_seed(f)).transpose()?.unwrap_or(0);
                Family::PerturbedAp {
                    start: parse_rational(fields[0])?,
                    step: parse_rational(fields[1])?,
                    jitter,
                    seed,
                }
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown family {other:?} (expected ap, gp, convex, rand or pap)"
                )))
            }
        };
        Ok(FamilySpec { family })
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Ap { start, step } => write!(f, "ap:{}:{}", format_rational(start), format_rational(step)),
            Family::Gp { base, ratio } => write!(f, "gp:{}:{}", format_rational(base), format_rational(ratio)),
            Family::Convex(g) => write!(f, "convex:{g}"),
            Family::Random { range, seed } => write!(f, "rand:{range}:{seed:#x}"),
            Family::PerturbedAp { start, step, jitter, seed } => write!(
                f,
                "pap:{}:{}:{jitter}:{seed:#x}",
                format_rational(start),
                format_rational(step)
            ),
        }
    }
}

impl Serialize for FamilySpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FamilySpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// True iff the consecutive gaps of `s` strictly increase.
pub fn verify_convexity(s: &FiniteSet) -> Result<bool> {
    if s.len() < 3 {
        return Err(Error::TooSmall(format!(
            "convexity needs at least 3 elements, got {}",
            s.len()
        )));
    }
    let tol = s.tolerance();
    let gaps = s
        .elements()
        .windows(2)
        .map(|w| w[1].sub(&w[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(gaps.windows(2).all(|g| match (&g[0], &g[1]) {
        (Scalar::Tolerant(a), Scalar::Tolerant(b)) => b > a && !tol.collide(*a, *b),
        (a, b) => b > a,
    }))
}
