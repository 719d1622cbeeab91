//! Certified comparison of real quantities built from rationals, rational
//! powers, base-2 logarithms and `ln 2`.
//!
//! Every primitive is enclosed in a rational interval whose width shrinks with
//! the working precision. A comparison is decided once the two enclosures
//! separate (or coincide as the same point); otherwise the precision doubles.
//! Verdicts therefore never depend on floating-point rounding.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use super::{format_rational, rational_to_f64};

const PRECISIONS: [u32; 8] = [32, 64, 128, 256, 512, 1024, 2048, 4096];

/// A closed rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn point(v: BigRational) -> Self {
        Interval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        (rational_to_f64(&self.lo) + rational_to_f64(&self.hi)) / 2.0
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    fn mul(&self, o: &Interval) -> Interval {
        if !self.lo.is_negative() && !o.lo.is_negative() {
            return Interval {
                lo: &self.lo * &o.lo,
                hi: &self.hi * &o.hi,
            };
        }
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    fn recip(&self) -> Option<Interval> {
        // 1/x is decreasing on each side of 0
        if self.lo.is_positive() || self.hi.is_negative() {
            Some(Interval {
                lo: self.hi.recip(),
                hi: self.lo.recip(),
            })
        } else {
            None
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            f.write_str(&format_rational(&self.lo))
        } else {
            write!(
                f,
                "[{}, {}]",
                format_rational(&self.lo),
                format_rational(&self.hi)
            )
        }
    }
}

/// Expression over the reals.
#[derive(Clone, Debug)]
pub enum Real {
    Rat(BigRational),
    /// `base ^ exponent`; the base must be nonnegative (positive for negative exponents).
    Pow(Box<Real>, Ratio<i64>),
    /// Base-2 logarithm of a positive argument.
    Log2(Box<Real>),
    Ln2,
    Sum(Vec<Real>),
    Prod(Vec<Real>),
    Neg(Box<Real>),
    Recip(Box<Real>),
    Max(Box<Real>, Box<Real>),
}

impl Real {
    pub fn int<T: Into<BigInt>>(v: T) -> Real {
        Real::Rat(BigRational::from_integer(v.into()))
    }

    pub fn rat(v: BigRational) -> Real {
        Real::Rat(v)
    }

    pub fn pow(self, e: Ratio<i64>) -> Real {
        if e.is_integer() {
            if let Real::Rat(r) = &self {
                let p = *e.numer();
                if let Ok(p32) = i32::try_from(p) {
                    if !(r.is_zero() && p32 < 0) {
                        return Real::Rat(num_traits::pow::Pow::pow(r, p32));
                    }
                }
            }
        }
        Real::Pow(Box::new(self), e)
    }

    pub fn log2(self) -> Real {
        Real::Log2(Box::new(self))
    }

    /// `L(n) = max(1, log2 n)`, the guarded logarithm used by every bound.
    pub fn guarded_log2<T: Into<BigInt>>(n: T) -> Real {
        Real::Max(Box::new(Real::int(1)), Box::new(Real::int(n).log2()))
    }

    pub fn recip(self) -> Real {
        Real::Recip(Box::new(self))
    }

    pub fn max(self, other: Real) -> Real {
        Real::Max(Box::new(self), Box::new(other))
    }

    /// Encloses the value at `prec` bits. `None` when the enclosure is not
    /// well defined at this precision (e.g. a reciprocal straddling zero).
    pub fn enclose(&self, prec: u32) -> Option<Interval> {
        match self {
            Real::Rat(r) => Some(Interval::point(r.clone())),
            Real::Ln2 => Some(ln2_bounds(prec)),
            Real::Sum(terms) => {
                let mut acc = Interval::point(BigRational::zero());
                for t in terms {
                    acc = acc.add(&t.enclose(prec)?);
                }
                Some(acc)
            }
            Real::Prod(terms) => {
                let mut acc = Interval::point(BigRational::one());
                for t in terms {
                    acc = acc.mul(&t.enclose(prec)?);
                }
                Some(acc)
            }
            Real::Neg(x) => Some(x.enclose(prec)?.neg()),
            Real::Recip(x) => x.enclose(prec)?.recip(),
            Real::Max(a, b) => {
                let a = a.enclose(prec)?;
                let b = b.enclose(prec)?;
                Some(Interval {
                    lo: a.lo.max(b.lo),
                    hi: a.hi.max(b.hi),
                })
            }
            Real::Log2(x) => {
                let x = x.enclose(prec)?;
                if !x.lo.is_positive() {
                    return None;
                }
                let lo = log2_rational(&x.lo, prec)?.lo;
                let hi = log2_rational(&x.hi, prec)?.hi;
                Some(Interval { lo, hi })
            }
            Real::Pow(base, e) => {
                let b = base.enclose(prec)?;
                if b.lo.is_negative() {
                    return None;
                }
                pow_interval(&b, *e, prec)
            }
        }
    }

    /// Best-effort float value, for reporting only.
    pub fn approx(&self) -> f64 {
        self.enclose(64)
            .map(|i| i.midpoint_f64())
            .unwrap_or(f64::NAN)
    }

    /// `ceil(self)`, or `None` if no enclosure separates it from an integer.
    pub fn ceil(&self) -> Option<BigInt> {
        for &prec in &PRECISIONS {
            let Some(iv) = self.enclose(prec) else { continue };
            let (lo, hi) = (iv.lo.ceil().to_integer(), iv.hi.ceil().to_integer());
            if iv.is_point() || lo == hi {
                return Some(hi);
            }
        }
        None
    }

    /// Decides `self <= other`.
    pub fn le(&self, other: &Real) -> Decision {
        decide(self, other, |a, b| {
            if a.hi <= b.lo {
                Some(true)
            } else if a.lo > b.hi {
                Some(false)
            } else {
                None
            }
        })
    }

    /// Decides `self < other`.
    pub fn lt(&self, other: &Real) -> Decision {
        decide(self, other, |a, b| {
            if a.hi < b.lo {
                Some(true)
            } else if a.lo >= b.hi {
                Some(false)
            } else {
                None
            }
        })
    }

    pub fn ge(&self, other: &Real) -> Decision {
        other.le(self).swapped()
    }

    pub fn gt(&self, other: &Real) -> Decision {
        other.lt(self).swapped()
    }
}

/// Result of a certified comparison with the final enclosures of both sides.
#[derive(Clone, Debug)]
pub struct Decision {
    /// `None` if the enclosures never separated up to the maximal precision.
    pub holds: Option<bool>,
    pub lhs: Interval,
    pub rhs: Interval,
}

impl Decision {
    pub fn passed(&self) -> bool {
        self.holds == Some(true)
    }

    fn swapped(self) -> Decision {
        Decision {
            holds: self.holds,
            lhs: self.rhs,
            rhs: self.lhs,
        }
    }
}

fn decide(a: &Real, b: &Real, test: impl Fn(&Interval, &Interval) -> Option<bool>) -> Decision {
    let mut last = None;
    for &prec in &PRECISIONS {
        let (Some(ia), Some(ib)) = (a.enclose(prec), b.enclose(prec)) else {
            continue;
        };
        if let Some(v) = test(&ia, &ib) {
            return Decision {
                holds: Some(v),
                lhs: ia,
                rhs: ib,
            };
        }
        let exact = ia.is_point() && ib.is_point();
        last = Some((ia, ib));
        if exact {
            break;
        }
    }
    let (lhs, rhs) = last.unwrap_or_else(|| {
        let nan = Interval::point(BigRational::zero());
        (nan.clone(), nan)
    });
    Decision {
        holds: None,
        lhs,
        rhs,
    }
}

fn pow_interval(b: &Interval, e: Ratio<i64>, prec: u32) -> Option<Interval> {
    if e.is_zero() {
        return Some(Interval::point(BigRational::one()));
    }
    let p = *e.numer();
    let q = u32::try_from(*e.denom()).ok()?;
    if p > 0 {
        let p = u32::try_from(p).ok()?;
        let lo = root_bounds(&b.lo, p, q, prec).0;
        let hi = root_bounds(&b.hi, p, q, prec).1;
        Some(Interval { lo, hi })
    } else {
        if !b.lo.is_positive() {
            return None;
        }
        let p = u32::try_from(-p).ok()?;
        let (_, big) = root_bounds(&b.hi, p, q, prec);
        let (small, _) = root_bounds(&b.lo, p, q, prec);
        if !small.is_positive() {
            return None;
        }
        Some(Interval {
            lo: big.recip(),
            hi: small.recip(),
        })
    }
}

/// Bounds on `x^(p/q)` for rational `x >= 0`; exact when the root is rational.
fn root_bounds(x: &BigRational, p: u32, q: u32, prec: u32) -> (BigRational, BigRational) {
    let z = num_traits::pow::Pow::pow(x, p);
    if q == 1 {
        return (z.clone(), z);
    }
    let n = z.numer().to_biguint().expect("nonnegative base");
    let d = z.denom().to_biguint().expect("positive denominator");
    let m = (&n * d.pow(q - 1)) << (q as usize * prec as usize);
    let s = m.nth_root(q);
    let scale = BigInt::from(d << prec as usize);
    let lo = BigRational::new(BigInt::from(s.clone()), scale.clone());
    if s.pow(q) == m {
        (lo.clone(), lo)
    } else {
        let hi = BigRational::new(BigInt::from(s + 1u32), scale);
        (lo, hi)
    }
}

fn log2_rational(x: &BigRational, prec: u32) -> Option<Interval> {
    let n = x.numer().to_biguint()?;
    let d = x.denom().to_biguint()?;
    let (nl, nh) = log2_uint(&n, prec);
    let (dl, dh) = log2_uint(&d, prec);
    Some(Interval {
        lo: nl - dh,
        hi: nh - dl,
    })
}

/// Encloses `log2 n` for `n >= 1` by repeated squaring in fixed point,
/// producing one bit per squaring. The lower chain rounds down and the upper
/// chain rounds up, so the enclosure is rigorous.
fn log2_uint(n: &BigUint, prec: u32) -> (BigRational, BigRational) {
    assert!(!n.is_zero(), "log2 of zero");
    let j = n.bits() - 1;
    if n.count_ones() == 1 {
        let v = BigRational::from_integer(BigInt::from(j));
        return (v.clone(), v);
    }
    let w = prec as usize + 16;
    let one = BigUint::one() << w;
    let two = &one << 1;
    // mantissa n / 2^j in [1, 2), fixed point with w fractional bits
    let scaled = n << w;
    let mut lo = &scaled >> j as usize;
    let mut hi = if (&lo << j as usize) == scaled {
        lo.clone()
    } else {
        &lo + 1u32
    };
    let mut lo_bits = BigUint::zero();
    let mut hi_bits = BigUint::zero();
    for _ in 0..prec {
        lo = (&lo * &lo) >> w;
        let sq = &hi * &hi;
        hi = {
            let t = &sq >> w;
            if (&t << w) == sq {
                t
            } else {
                t + 1u32
            }
        };
        lo_bits <<= 1;
        hi_bits <<= 1;
        if lo >= two {
            lo_bits += 1u32;
            lo >>= 1;
        }
        if hi >= two {
            hi_bits += 1u32;
            let odd = hi.bit(0);
            hi >>= 1;
            if odd {
                hi += 1u32;
            }
        }
    }
    let denom = BigInt::from(BigUint::one() << prec as usize);
    let base = BigRational::from_integer(BigInt::from(j));
    let lo = &base + BigRational::new(BigInt::from(lo_bits), denom.clone());
    let hi = &base + BigRational::new(BigInt::from(hi_bits + 1u32), denom);
    (lo, hi)
}

/// `ln 2 = sum_{n>=1} 1 / (n 2^n)`, with the tail bounded by `1 / ((N+1) 2^N)`.
fn ln2_bounds(prec: u32) -> Interval {
    let w = prec as usize + 16;
    let terms = prec as usize + 8;
    let mut lo = BigUint::zero();
    let mut hi = BigUint::zero();
    for n in 1..=terms {
        let den = BigUint::from(n) << n;
        let num = BigUint::one() << w;
        let q = &num / &den;
        let exact = (&q * &den) == num;
        lo += &q;
        hi += if exact { q } else { q + 1u32 };
    }
    let tail_den = BigUint::from(terms + 1) << terms;
    hi += ((BigUint::one() << w) / tail_den) + 1u32;
    let denom = BigInt::from(BigUint::one() << w);
    Interval {
        lo: BigRational::new(BigInt::from(lo), denom.clone()),
        hi: BigRational::new(BigInt::from(hi), denom),
    }
}

impl From<BigRational> for Real {
    fn from(v: BigRational) -> Self {
        Real::Rat(v)
    }
}

impl From<i64> for Real {
    fn from(v: i64) -> Self {
        Real::int(v)
    }
}

impl From<u64> for Real {
    fn from(v: u64) -> Self {
        Real::int(v)
    }
}

impl From<usize> for Real {
    fn from(v: usize) -> Self {
        Real::int(v as u64)
    }
}

impl From<&BigUint> for Real {
    fn from(v: &BigUint) -> Self {
        Real::int(BigInt::from(v.clone()))
    }
}

impl Add for Real {
    type Output = Real;
    fn add(self, rhs: Real) -> Real {
        match (self, rhs) {
            (Real::Rat(a), Real::Rat(b)) => Real::Rat(a + b),
            (Real::Sum(mut v), r) => {
                v.push(r);
                Real::Sum(v)
            }
            (l, r) => Real::Sum(vec![l, r]),
        }
    }
}

impl Sub for Real {
    type Output = Real;
    fn sub(self, rhs: Real) -> Real {
        self + (-rhs)
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Rat(a) => Real::Rat(-a),
            Real::Neg(x) => *x,
            x => Real::Neg(Box::new(x)),
        }
    }
}

impl Mul for Real {
    type Output = Real;
    fn mul(self, rhs: Real) -> Real {
        match (self, rhs) {
            (Real::Rat(a), Real::Rat(b)) => Real::Rat(a * b),
            (Real::Prod(mut v), r) => {
                v.push(r);
                Real::Prod(v)
            }
            (l, r) => Real::Prod(vec![l, r]),
        }
    }
}

impl Div for Real {
    type Output = Real;
    fn div(self, rhs: Real) -> Real {
        match (self, rhs) {
            (Real::Rat(a), Real::Rat(b)) if !b.is_zero() => Real::Rat(a / b),
            (l, r) => l * r.recip(),
        }
    }
}

/// `ln(x) = log2(x) * ln 2`.
pub fn ln(x: Real) -> Real {
    x.log2() * Real::Ln2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn ceilings() {
        assert_eq!(Real::int(7).ceil(), Some(BigInt::from(7)));
        assert_eq!(Real::guarded_log2(5).ceil(), Some(BigInt::from(3)));
        assert_eq!((Real::int(10) / Real::guarded_log2(3)).ceil(), Some(BigInt::from(7)));
        assert_eq!(Real::guarded_log2(1).ceil(), Some(BigInt::from(1)));
    }

    #[test]
    fn ln2_enclosure_is_tight_and_correct() {
        let i = ln2_bounds(64);
        assert!(rational_to_f64(&i.lo) <= std::f64::consts::LN_2);
        assert!(rational_to_f64(&i.hi) >= std::f64::consts::LN_2);
        assert!(rational_to_f64(&(i.hi - i.lo)) < 1e-17);
    }

    #[test]
    fn log2_of_integers() {
        for n in [3u32, 5, 6, 7, 1000, 12345] {
            let (lo, hi) = log2_uint(&BigUint::from(n), 60);
            let f = (n as f64).log2();
            assert!(rational_to_f64(&lo) <= f + 1e-15, "{n}");
            assert!(rational_to_f64(&hi) >= f - 1e-15, "{n}");
            assert!(rational_to_f64(&(hi - lo)) < 1e-15);
        }
        let (lo, hi) = log2_uint(&BigUint::from(64u32), 10);
        assert_eq!(lo, hi);
        assert_eq!(lo, r(6, 1));
    }

    #[test]
    fn roots_exact_when_rational() {
        let (lo, hi) = root_bounds(&r(9, 4), 1, 2, 40);
        assert_eq!(lo, r(3, 2));
        assert_eq!(hi, r(3, 2));
        let (lo, hi) = root_bounds(&r(2, 1), 1, 2, 40);
        assert!(lo < hi);
        assert!(rational_to_f64(&lo) <= std::f64::consts::SQRT_2);
        assert!(rational_to_f64(&hi) >= std::f64::consts::SQRT_2);
    }

    #[test]
    fn comparisons() {
        // 2^(5/2) = 5.65... < 6
        let a = Real::int(2).pow(Ratio::new(5, 2));
        assert_eq!(a.lt(&Real::int(6)).holds, Some(true));
        assert_eq!(a.gt(&Real::int(5)).holds, Some(true));
        // equal rationals decide as equal
        let x = Real::Rat(r(1, 3)) + Real::Rat(r(1, 6));
        assert!(x.le(&Real::Rat(r(1, 2))).passed());
        assert_eq!(x.lt(&Real::Rat(r(1, 2))).holds, Some(false));
        // log2(8) == 3 exactly, and 4^(3/2) == 8
        assert!(Real::int(8).log2().le(&Real::int(3)).passed());
        assert!(Real::int(4).pow(Ratio::new(3, 2)).le(&Real::int(8)).passed());
        assert!(Real::int(4).pow(Ratio::new(3, 2)).ge(&Real::int(8)).passed());
        // ln(1/2) = -ln 2
        let l = ln(Real::Rat(r(1, 2))) + Real::Ln2;
        let i = l.enclose(64).unwrap();
        assert!(rational_to_f64(&i.lo).abs() < 1e-15);
        // negative exponents
        let inv = Real::int(4).pow(Ratio::new(-1, 2));
        assert!(inv.le(&Real::Rat(r(1, 2))).passed());
        assert!(inv.ge(&Real::Rat(r(1, 2))).passed());
    }

    #[test]
    fn guarded_log() {
        let l = Real::guarded_log2(1u32);
        assert!(l.le(&Real::int(1)).passed() && l.ge(&Real::int(1)).passed());
        let l = Real::guarded_log2(1024u32);
        assert!(l.ge(&Real::int(10)).passed());
    }
}
