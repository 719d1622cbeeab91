//! Closed registry of strictly convex and concave functions.
//!
//! Functions that preserve rationals evaluate exactly; `exp`, `log` and
//! irrational powers/roots fall back to the tolerant backend.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{parse_rational, Scalar, Tolerance};
use crate::set::FiniteSet;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConvexFn {
    /// `x^2` on the reals.
    Square,
    /// `x^3` on `x > 0`.
    CubePos,
    /// `x^p` on `x > 0` for rational `p > 1`.
    Power(Ratio<i64>),
    Exp,
    Log,
    /// `1/x` on `x > 0`.
    ReciprocalPos,
    /// `sqrt x` on `x >= 0`; the inverse of the positive branch of `Square`.
    Sqrt,
    /// `-f(x)`.
    Neg(Box<ConvexFn>),
    /// `f^{-1}(x)`.
    Inverse(Box<ConvexFn>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Convex,
    Concave,
}

impl Kind {
    fn flip(self) -> Kind {
        match self {
            Kind::Convex => Kind::Concave,
            Kind::Concave => Kind::Convex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Convex,
    Concave,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
    /// Not monotone on the full domain.
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    All,
    Positive,
    NonNegative,
    Negative,
    NonPositive,
}

impl Domain {
    pub fn contains(self, x: &Scalar) -> bool {
        match self {
            Domain::All => true,
            Domain::Positive => x.is_positive(),
            Domain::NonNegative => !x.is_negative(),
            Domain::Negative => x.is_negative(),
            Domain::NonPositive => !x.is_positive(),
        }
    }

    fn negated(self) -> Domain {
        match self {
            Domain::All => Domain::All,
            Domain::Positive => Domain::Negative,
            Domain::NonNegative => Domain::NonPositive,
            Domain::Negative => Domain::Positive,
            Domain::NonPositive => Domain::NonNegative,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::All => "x in R",
            Domain::Positive => "x > 0",
            Domain::NonNegative => "x >= 0",
            Domain::Negative => "x < 0",
            Domain::NonPositive => "x <= 0",
        })
    }
}

impl ConvexFn {
    pub fn power(p: Ratio<i64>) -> Result<ConvexFn> {
        if p <= Ratio::one() {
            return Err(Error::InvalidParameter(format!(
                "power exponent must exceed 1, got {p}"
            )));
        }
        Ok(ConvexFn::Power(p))
    }

    pub fn negated(f: ConvexFn) -> ConvexFn {
        match f {
            ConvexFn::Neg(g) => *g,
            g => ConvexFn::Neg(Box::new(g)),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            ConvexFn::Square | ConvexFn::Exp => Domain::All,
            ConvexFn::CubePos | ConvexFn::Power(_) | ConvexFn::Log | ConvexFn::ReciprocalPos => {
                Domain::Positive
            }
            ConvexFn::Sqrt => Domain::NonNegative,
            ConvexFn::Neg(g) => g.domain(),
            ConvexFn::Inverse(g) => g.range(),
        }
    }

    /// Image of the domain (of the positive branch, for `Square`).
    pub fn range(&self) -> Domain {
        match self {
            ConvexFn::Square | ConvexFn::Sqrt => Domain::NonNegative,
            ConvexFn::CubePos
            | ConvexFn::Power(_)
            | ConvexFn::Exp
            | ConvexFn::ReciprocalPos => Domain::Positive,
            ConvexFn::Log => Domain::All,
            ConvexFn::Neg(g) => g.range().negated(),
            ConvexFn::Inverse(g) => g.domain(),
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            ConvexFn::Square
            | ConvexFn::CubePos
            | ConvexFn::Power(_)
            | ConvexFn::Exp
            | ConvexFn::ReciprocalPos => Kind::Convex,
            ConvexFn::Log | ConvexFn::Sqrt => Kind::Concave,
            ConvexFn::Neg(g) => g.kind().flip(),
            ConvexFn::Inverse(g) => match g.monotone() {
                Monotone::Decreasing => g.kind(),
                _ => g.kind().flip(),
            },
        }
    }

    pub fn monotone(&self) -> Monotone {
        match self {
            ConvexFn::Square => Monotone::Neither,
            ConvexFn::ReciprocalPos => Monotone::Decreasing,
            ConvexFn::CubePos
            | ConvexFn::Power(_)
            | ConvexFn::Exp
            | ConvexFn::Log
            | ConvexFn::Sqrt => Monotone::Increasing,
            ConvexFn::Neg(g) => match g.monotone() {
                Monotone::Increasing => Monotone::Decreasing,
                Monotone::Decreasing => Monotone::Increasing,
                Monotone::Neither => Monotone::Neither,
            },
            ConvexFn::Inverse(g) => match g.monotone() {
                // the inverse of square is taken on its positive branch
                Monotone::Neither => Monotone::Increasing,
                m => m,
            },
        }
    }

    /// True when `f` is strictly monotone on the points of `set`.
    pub fn is_strictly_monotone_on(&self, set: &FiniteSet) -> bool {
        match self.monotone() {
            Monotone::Increasing | Monotone::Decreasing => true,
            Monotone::Neither => {
                set.iter().all(|x| !x.is_negative()) || set.iter().all(|x| !x.is_positive())
            }
        }
    }

    pub fn inverse(&self) -> Result<ConvexFn> {
        Ok(match self {
            ConvexFn::Exp => ConvexFn::Log,
            ConvexFn::Log => ConvexFn::Exp,
            ConvexFn::Square => ConvexFn::Sqrt,
            ConvexFn::Sqrt => ConvexFn::Square,
            ConvexFn::ReciprocalPos => ConvexFn::ReciprocalPos,
            ConvexFn::Inverse(g) => (**g).clone(),
            ConvexFn::Neg(g) if g.monotone() == Monotone::Neither => {
                return Err(Error::NotInvertible(self.to_string()))
            }
            f => ConvexFn::Inverse(Box::new(f.clone())),
        })
    }

    fn check_domain(&self, x: &Scalar) -> Result<()> {
        let d = self.domain();
        if d.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self} is defined for {d}, got {x}")))
        }
    }

    pub fn eval(&self, x: &Scalar) -> Result<Scalar> {
        self.check_domain(x)?;
        match self {
            ConvexFn::Square => x.mul(x),
            ConvexFn::CubePos => x.mul(x)?.mul(x),
            ConvexFn::Power(p) => rational_power(x, *p),
            ConvexFn::Exp => Scalar::tolerant(x.to_f64().exp()),
            ConvexFn::Log => Scalar::tolerant(x.to_f64().ln()),
            ConvexFn::ReciprocalPos => match x {
                Scalar::Exact(r) => Ok(Scalar::Exact(r.recip())),
                Scalar::Tolerant(v) => Scalar::tolerant(1.0 / v),
            },
            ConvexFn::Sqrt => rational_power(x, Ratio::new(1, 2)),
            ConvexFn::Neg(g) => Ok(g.eval(x)?.neg()),
            ConvexFn::Inverse(g) => g.eval_inverse(x),
        }
    }

    /// `f^{-1}(y)`; the caller has checked that `y` lies in the range of `f`.
    fn eval_inverse(&self, y: &Scalar) -> Result<Scalar> {
        match self {
            ConvexFn::Square => ConvexFn::Sqrt.eval(y),
            ConvexFn::Sqrt => ConvexFn::Square.eval(y),
            ConvexFn::CubePos => rational_power(y, Ratio::new(1, 3)),
            ConvexFn::Power(p) => rational_power(y, p.recip()),
            ConvexFn::Exp => ConvexFn::Log.eval(y),
            ConvexFn::Log => ConvexFn::Exp.eval(y),
            ConvexFn::ReciprocalPos => ConvexFn::ReciprocalPos.eval(y),
            ConvexFn::Neg(g) => g.eval_inverse(&y.neg()),
            ConvexFn::Inverse(g) => g.eval(y),
        }
    }

    /// Classifies `f` on `X` by its divided differences over sorted `X`.
    pub fn validate_strict(&self, xs: &FiniteSet) -> Result<Shape> {
        if xs.len() < 3 {
            return Err(Error::TooSmall(format!(
                "strict convexity needs at least 3 points, got {}",
                xs.len()
            )));
        }
        let ys = xs.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>>>()?;
        let all_exact = xs.iter().chain(ys.iter()).all(|v| v.as_rational().is_some());
        let ordering: Vec<std::cmp::Ordering> = if all_exact {
            let pts: Vec<(&BigRational, &BigRational)> = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x.as_rational().unwrap(), y.as_rational().unwrap()))
                .collect();
            let slopes: Vec<BigRational> = pts
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                .collect();
            slopes.windows(2).map(|w| w[1].cmp(&w[0])).collect()
        } else {
            let tol = xs.tolerance();
            let pts: Vec<(f64, f64)> = xs.iter().zip(&ys).map(|(x, y)| (x.to_f64(), y.to_f64())).collect();
            let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
            slopes
                .windows(2)
                .map(|w| float_order(w[1], w[0], tol))
                .collect()
        };
        use std::cmp::Ordering::*;
        Ok(if ordering.iter().all(|&o| o == Greater) {
            Shape::Convex
        } else if ordering.iter().all(|&o| o == Less) {
            Shape::Concave
        } else {
            Shape::Neither
        })
    }
}

fn float_order(a: f64, b: f64, tol: Tolerance) -> std::cmp::Ordering {
    if tol.collide(a, b) {
        std::cmp::Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// `x^(n/d)`: exact when the result is rational, tolerant otherwise.
fn rational_power(x: &Scalar, p: Ratio<i64>) -> Result<Scalar> {
    if let Scalar::Exact(r) = x {
        if let Some(v) = exact_rational_power(r, p) {
            return Ok(Scalar::Exact(v));
        }
    }
    let v = x.to_f64().powf(p.to_f64().unwrap_or(f64::NAN));
    Scalar::tolerant(v)
}

fn exact_rational_power(r: &BigRational, p: Ratio<i64>) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let d = u32::try_from(*p.denom()).ok()?;
    let n = *p.numer();
    let root = |v: &BigInt| -> Option<BigInt> {
        let s = v.nth_root(d);
        (num_traits::pow::Pow::pow(&s, d) == *v).then_some(s)
    };
    let base = BigRational::new(root(r.numer())?, root(r.denom())?);
    if base.is_zero() && n < 0 {
        return None;
    }
    Some(num_traits::pow::Pow::pow(&base, i32::try_from(n).ok()?))
}

impl fmt::Display for ConvexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexFn::Square => f.write_str("square"),
            ConvexFn::CubePos => f.write_str("cube+"),
            ConvexFn::Power(p) => write!(f, "pow:{p}"),
            ConvexFn::Exp => f.write_str("exp"),
            ConvexFn::Log => f.write_str("log"),
            ConvexFn::ReciprocalPos => f.write_str("recip+"),
            ConvexFn::Sqrt => f.write_str("sqrt"),
            ConvexFn::Neg(g) => write!(f, "neg:{g}"),
            ConvexFn::Inverse(g) => write!(f, "inv:{g}"),
        }
    }
}

impl FromStr for ConvexFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("inv:") {
            return rest.parse::<ConvexFn>()?.inverse();
        }
        if let Some(rest) = s.strip_prefix("neg:") {
            return Ok(ConvexFn::negated(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("pow:") {
            let p = parse_rational(rest)?;
            let p = Ratio::new(
                p.numer().to_i64().ok_or_else(|| Error::Parse(rest.into()))?,
                p.denom().to_i64().ok_or_else(|| Error::Parse(rest.into()))?,
            );
            return ConvexFn::power(p);
        }
        match s {
            "square" => Ok(ConvexFn::Square),
            "cube+" => Ok(ConvexFn::CubePos),
            "exp" => Ok(ConvexFn::Exp),
            "log" => Ok(ConvexFn::Log),
            "recip+" => Ok(ConvexFn::ReciprocalPos),
            "sqrt" => Ok(ConvexFn::Sqrt),
            other => Err(Error::Parse(format!(
                "unknown function {other:?} (expected square, cube+, pow:p/q, exp, log, recip+, sqrt, inv:<f>, neg:<f>)"
            ))),
        }
    }
}

impl Serialize for ConvexFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ConvexFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Scalar {
        s.parse().unwrap()
    }

    fn f(s: &str) -> ConvexFn {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ConvexFn::Square.eval(&q("3/2")).unwrap(), q("9/4"));
        assert_eq!(ConvexFn::ReciprocalPos.eval(&q("2")).unwrap(), q("1/2"));
        assert!(matches!(ConvexFn::Log.eval(&q("0")), Err(Error::Domain(_))));
        assert_eq!(f("pow:3/2").eval(&q("4")).unwrap(), q("8"));
        assert_eq!(f("pow:3/2").eval(&q("9/4")).unwrap(), q("27/8"));
        let irr = f("pow:3/2").eval(&q("2")).unwrap();
        assert!((irr.to_f64() - 2f64.powf(1.5)).abs() < 1e-12);
        assert!(matches!(irr, Scalar::Tolerant(_)));
        assert!(matches!(ConvexFn::Exp.eval(&q("0")).unwrap(), Scalar::Tolerant(_)));
        assert!(matches!(ConvexFn::CubePos.eval(&q("-1")), Err(Error::Domain(_))));
        assert!("pow:1".parse::<ConvexFn>().is_err());
    }

    #[test]
    fn inverse_registry() {
        assert_eq!(ConvexFn::Square.inverse().unwrap(), ConvexFn::Sqrt);
        assert_eq!(ConvexFn::Sqrt.kind(), Kind::Concave);
        assert_eq!(ConvexFn::Exp.inverse().unwrap(), ConvexFn::Log);
        for spec in ["square", "cube+", "pow:5/2", "exp", "log", "recip+", "sqrt", "neg:exp", "inv:cube+"] {
            let g = f(spec);
            assert_eq!(g.inverse().unwrap().inverse().unwrap(), g, "{spec}");
        }
        assert!(f("neg:square").inverse().is_err());
    }

    #[test]
    fn inverses_undo_the_function() {
        let pts = ["1", "2", "9/4", "7"];
        for spec in ["square", "cube+", "pow:3/2", "exp", "log", "recip+", "sqrt", "neg:cube+", "neg:log"] {
            let g = f(spec);
            let h = g.inverse().unwrap();
            for p in pts {
                let x = q(p);
                let back = h.eval(&g.eval(&x).unwrap()).unwrap();
                assert!((back.to_f64() - x.to_f64()).abs() < 1e-9, "{spec} at {p}: {back}");
            }
        }
        // exact round trip for rational-preserving pairs
        let x = q("3/7");
        assert_eq!(ConvexFn::Sqrt.eval(&ConvexFn::Square.eval(&x).unwrap()).unwrap(), x);
        assert_eq!(f("inv:cube+").eval(&q("27/8")).unwrap(), q("3/2"));
    }

    #[test]
    fn kinds_of_inverses() {
        // convex increasing -> concave increasing
        assert_eq!(f("inv:cube+").kind(), Kind::Concave);
        assert_eq!(f("inv:cube+").monotone(), Monotone::Increasing);
        // convex decreasing -> convex decreasing
        assert_eq!(f("inv:recip+").kind(), Kind::Convex);
        assert_eq!(f("neg:square").kind(), Kind::Concave);
    }

    #[test]
    fn validate_examples() {
        let s = FiniteSet::from_ints(&[1, 2, 3]);
        assert_eq!(ConvexFn::Square.validate_strict(&s).unwrap(), Shape::Convex);
        let s = FiniteSet::from_ints(&[1, 2, 4]);
        assert_eq!(ConvexFn::Log.validate_strict(&s).unwrap(), Shape::Concave);
        let lin = ConvexFn::Inverse(Box::new(ConvexFn::Sqrt));
        let s = FiniteSet::from_ints(&[1, 2, 3]);
        assert_eq!(lin.validate_strict(&s).unwrap(), Shape::Convex);
        assert!(ConvexFn::Square.validate_strict(&FiniteSet::from_ints(&[1, 2])).is_err());
    }

    #[test]
    fn registered_kinds_match_validation() {
        let xs = FiniteSet::from_ints(&[1, 2, 3, 5, 8, 13, 21]);
        for spec in ["square", "cube+", "pow:3/2", "pow:7/3", "exp", "log", "recip+", "sqrt", "neg:exp", "neg:log", "inv:cube+", "inv:pow:5/2"] {
            let g = f(spec);
            let shape = g.validate_strict(&xs).unwrap();
            let expect = match g.kind() {
                Kind::Convex => Shape::Convex,
                Kind::Concave => Shape::Concave,
            };
            assert_eq!(shape, expect, "{spec}");
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for spec in ["square", "cube+", "pow:3/2", "exp", "log", "recip+", "sqrt", "neg:pow:5/2", "inv:cube+"] {
            assert_eq!(f(spec).to_string(), spec);
        }
        assert_eq!(f("inv:exp"), ConvexFn::Log);
        assert!("cosh".parse::<ConvexFn>().is_err());
    }
}
