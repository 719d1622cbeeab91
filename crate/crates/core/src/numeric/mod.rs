//! Scalar arithmetic over two backends.
//!
//! The exact backend stores arbitrary-precision rationals in lowest terms, so
//! every coincidence count built on top of it is bit-exact. The tolerant
//! backend stores finite binary64 values and treats two values as equal when
//! their relative distance is at most `tau`. It is only entered when a
//! transcendental function is applied to a set.

mod real;

pub use real::{ln, Decision, Interval, Real};

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative collision tolerance for the float backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    tau: f64,
}

impl Tolerance {
    pub const DEFAULT_TAU: f64 = 1e-9;

    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be a finite nonnegative number, got {tau}"
            )));
        }
        Ok(Tolerance { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `|x - y| <= tau * max(1, |x|, |y|)`.
    pub fn collide(&self, x: f64, y: f64) -> bool {
        if x == y {
            return true;
        }
        let scale = 1f64.max(x.abs()).max(y.abs());
        (x - y).abs() <= self.tau * scale
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            tau: Self::DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    Tolerant,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Exact => f.write_str("exact"),
            BackendKind::Tolerant => f.write_str("tolerant"),
        }
    }
}

/// An element of a finite set of reals.
///
/// Equality, ordering and hashing are structural: two tolerant values are
/// `==` only when bit-identical. Use [`collide`] for the tolerance relation.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Tolerant(f64),
}

impl Scalar {
    pub fn int(v: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Scalar::Exact(BigRational::from_integer(v))
    }

    pub fn ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::DivisionByZero(format!("{numer}/0")));
        }
        Ok(Scalar::Exact(BigRational::new(
            BigInt::from(numer),
            BigInt::from(denom),
        )))
    }

    pub fn rational(v: BigRational) -> Self {
        Scalar::Exact(v)
    }

    pub fn tolerant(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
        // -0.0 and 0.0 must not be distinct set elements
        Ok(Scalar::Tolerant(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn backend(&self) -> BackendKind {
        match self {
            Scalar::Exact(_) => BackendKind::Exact,
            Scalar::Tolerant(_) => BackendKind::Tolerant,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Tolerant(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Tolerant(x) => *x,
        }
    }

    /// Converts an exact value to the tolerant backend; tolerant values pass through.
    pub fn to_tolerant(&self) -> Result<Scalar> {
        Scalar::tolerant(self.to_f64())
    }

    /// The value as an `i64` when it is an exact integer in range.
    pub fn to_i64(&self) -> Option<i64> {
        match self {
            Scalar::Exact(r) if r.is_integer() => r.numer().to_i64(),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Tolerant(x) => *x == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_positive(),
            Scalar::Tolerant(x) => *x > 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Tolerant(x) => *x < 0.0,
        }
    }

    fn pair<'a>(&'a self, other: &'a Scalar) -> Result<Pair<'a>> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Pair::Exact(a, b)),
            (Scalar::Tolerant(a), Scalar::Tolerant(b)) => Ok(Pair::Tolerant(*a, *b)),
            _ => Err(Error::BackendMismatch),
        }
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        match self.pair(other)? {
            Pair::Exact(a, b) => Ok(Scalar::Exact(a + b)),
            Pair::Tolerant(a, b) => Scalar::tolerant(a + b),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        match self.pair(other)? {
            Pair::Exact(a, b) => Ok(Scalar::Exact(a - b)),
            Pair::Tolerant(a, b) => Scalar::tolerant(a - b),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        match self.pair(other)? {
            Pair::Exact(a, b) => Ok(Scalar::Exact(a * b)),
            Pair::Tolerant(a, b) => Scalar::tolerant(a * b),
        }
    }

    /// Division. Tolerant denominators must exceed `tol.tau()` in magnitude.
    pub fn div_with(&self, other: &Scalar, tol: Tolerance) -> Result<Scalar> {
        match self.pair(other)? {
            Pair::Exact(a, b) => {
                if b.is_zero() {
                    return Err(Error::DivisionByZero(format!("{self} / {other}")));
                }
                Ok(Scalar::Exact(a / b))
            }
            Pair::Tolerant(a, b) => {
                if b.abs() <= tol.tau() || b == 0.0 {
                    return Err(Error::DivisionByZero(format!("{self} / {other}")));
                }
                Scalar::tolerant(a / b)
            }
        }
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        self.div_with(other, Tolerance::default())
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Tolerant(a) => Scalar::Tolerant(if *a == 0.0 { 0.0 } else { -a }),
        }
    }
}

enum Pair<'a> {
    Exact(&'a BigRational, &'a BigRational),
    Tolerant(f64, f64),
}

/// Tolerance collision of two tolerant scalars. Reflexive and symmetric.
pub fn collide(a: &Scalar, b: &Scalar, tol: Tolerance) -> Result<bool> {
    match (a, b) {
        (Scalar::Tolerant(x), Scalar::Tolerant(y)) => Ok(tol.collide(*x, *y)),
        (Scalar::Exact(_), Scalar::Exact(_)) => Err(Error::InvalidParameter(
            "collide is defined on the tolerant backend only".into(),
        )),
        _ => Err(Error::BackendMismatch),
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Very large numerators/denominators: scale through the bit lengths.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = (nb - 60).max(0);
    let dshift = (db - 60).max(0);
    let n = (r.numer() >> shift as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> dshift as usize).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift - dshift) as i32)
}

/// Natural log of a positive rational, safe for values outside the f64 range.
pub fn ln_rational(r: &BigRational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

pub fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        if let Some(x) = v.to_f64() {
            if x.is_finite() {
                return x.abs().ln();
            }
        }
    }
    let shift = bits.saturating_sub(60);
    let top = (v.abs() >> shift as usize).to_f64().unwrap_or(1.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            (Scalar::Tolerant(a), Scalar::Tolerant(b)) => a.total_cmp(b),
            (Scalar::Exact(_), Scalar::Tolerant(_)) => Ordering::Less,
            (Scalar::Tolerant(_), Scalar::Exact(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Scalar::Exact(r) => {
                0u8.hash(state);
                r.hash(state);
            }
            Scalar::Tolerant(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{}", format_rational(r)),
            Scalar::Tolerant(x) => f.write_str(&format_float(*x)),
        }
    }
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Shortest round-trip decimal that always reads back as a float literal.
pub fn format_float(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::DivisionByZero(s.to_string()));
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

pub fn is_float_literal(s: &str) -> bool {
    let s = s.trim();
    !s.contains('/') && s.contains(['.', 'e', 'E'])
}

impl FromStr for Scalar {
    type Err = Error;

    /// `"p/q"` and integers parse exactly; decimal literals parse to the
    /// tolerant backend.
    fn from_str(s: &str) -> Result<Self> {
        if is_float_literal(s) {
            let x: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
            Scalar::tolerant(x)
        } else {
            parse_rational(s).map(Scalar::Exact)
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::int(v)
    }
}

impl From<BigRational> for Scalar {
    fn from(v: BigRational) -> Self {
        Scalar::Exact(v)
    }
}

/// A reported quantity: exact when it is a count or an integer moment,
/// float otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational_to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    /// Natural log, accurate for values far outside the binary64 range.
    pub fn ln(&self) -> f64 {
        match self {
            Value::Exact(r) if r.is_positive() => ln_rational(r),
            Value::Exact(_) => f64::NEG_INFINITY,
            Value::Float(x) => x.ln(),
        }
    }
}

impl From<BigRational> for Value {
    fn from(v: BigRational) -> Self {
        Value::Exact(v)
    }
}

impl From<BigInt> for Value {
    fn from(v: BigInt) -> Self {
        Value::Exact(BigRational::from_integer(v))
    }
}

impl From<num_bigint::BigUint> for Value {
    fn from(v: num_bigint::BigUint) -> Self {
        Value::from(BigInt::from(v))
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::from(BigInt::from(v))
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => f.write_str(&format_rational(r)),
            Value::Float(x) => f.write_str(&format_float(*x)),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Exact(_) => s.serialize_str(&self.to_string()),
            Value::Float(x) => s.serialize_f64(*x),
        }
    }
}

/// Parses an exponent such as `3` or `5/2` into a small rational.
pub fn parse_exponent(s: &str) -> Result<num_rational::Ratio<i64>> {
    let r = parse_rational(s)?;
    let conv = |v: &BigInt| {
        v.to_i64()
            .ok_or_else(|| Error::InvalidParameter(format!("exponent {s} is too large")))
    };
    Ok(num_rational::Ratio::new(conv(r.numer())?, conv(r.denom())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Scalar {
        s.parse().unwrap()
    }

    #[test]
    fn exact_sum_is_reduced() {
        assert_eq!(q("1/2").add(&q("1/3")).unwrap(), q("5/6"));
        assert_eq!(q("2/4").add(&q("0")).unwrap().to_string(), "1/2");
        let x = q("7/9");
        assert_eq!(x.add(&Scalar::int(0)).unwrap(), x);
    }

    #[test]
    fn products_and_quotients() {
        assert_eq!(q("2/3").mul(&q("3/2")).unwrap().to_string(), "1");
        assert_eq!(q("6").div(&q("4")).unwrap().to_string(), "3/2");
        let err = q("5").div(&q("0")).unwrap_err();
        assert!(matches!(err, Error::DivisionByZero(ref m) if m.contains('5')));
        assert!(Scalar::tolerant(1.0)
            .unwrap()
            .div(&Scalar::tolerant(1e-12).unwrap())
            .is_err());
    }

    #[test]
    fn backend_mismatch_is_an_error() {
        let e = Scalar::int(1).add(&Scalar::tolerant(1.0).unwrap());
        assert!(matches!(e, Err(Error::BackendMismatch)));
    }

    #[test]
    fn collision() {
        let tol = Tolerance::new(1e-9).unwrap();
        let one = Scalar::tolerant(1.0).unwrap();
        assert!(collide(&one, &Scalar::tolerant(1.0 + 1e-12).unwrap(), tol).unwrap());
        assert!(!collide(&one, &Scalar::tolerant(1.01).unwrap(), tol).unwrap());
        for tau in [0.0, 1e-9, 1.0] {
            assert!(collide(&one, &one, Tolerance::new(tau).unwrap()).unwrap());
        }
        assert!(Tolerance::new(-1.0).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
    }

    #[test]
    fn non_finite_values_are_never_stored() {
        assert!(Scalar::tolerant(f64::INFINITY).is_err());
        let big = Scalar::tolerant(f64::MAX).unwrap();
        assert!(big.mul(&big).is_err());
    }

    #[test]
    fn text_forms() {
        assert_eq!(q("-6/4").to_string(), "-3/2");
        assert_eq!(q("12").to_string(), "12");
        assert_eq!(q("1.0").backend(), BackendKind::Tolerant);
        assert_eq!(q("1.0").to_string(), "1.0");
        assert_eq!(q("2.5e-3").to_string(), "0.0025");
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("abc".parse::<Scalar>().is_err());
    }

    #[test]
    fn huge_rationals_convert_to_floats() {
        let big = BigRational::from_integer(BigInt::from(2).pow(2000));
        let r = big.clone() / (big * BigInt::from(4));
        assert_eq!(rational_to_f64(&r), 0.25);
        let ln = ln_bigint(&BigInt::from(2).pow(2000));
        assert!((ln - 2000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    fn arb_rational() -> impl Strategy<Value = Scalar> {
        (-1000i64..1000, 1i64..50).prop_map(|(n, d)| Scalar::ratio(n, d).unwrap())
    }

    proptest! {
        #[test]
        fn exact_backend_is_a_field(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap());
            if !b.is_zero() {
                prop_assert_eq!(a.div(&b).unwrap().mul(&b).unwrap(), a.clone());
            }
        }

        #[test]
        fn canonical_representation(n in -500i64..500, d in 1i64..40, m in 1i64..20) {
            let x = Scalar::ratio(n, d).unwrap();
            let y = Scalar::ratio(n * m, d * m).unwrap();
            prop_assert_eq!(x.to_string(), y.to_string());
            let parsed: Scalar = x.to_string().parse().unwrap();
            prop_assert_eq!(parsed, x);
        }

        #[test]
        fn collision_symmetric(x in -1e6f64..1e6, dx in -1e-3f64..1e-3, tau in 0f64..1e-6) {
            let tol = Tolerance::new(tau).unwrap();
            prop_assert_eq!(tol.collide(x, x + dx), tol.collide(x + dx, x));
        }
    }
}
