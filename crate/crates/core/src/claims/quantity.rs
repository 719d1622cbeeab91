//! Products of powers of positive rationals and guarded logarithms: exact
//! when every exponent is an integer, and always with an accurate `ln`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::energy::{exponent_rational, Exponent};
use crate::numeric::{ln_rational, Decision, Real, Value};

#[derive(Debug, Clone)]
enum Factor {
    Rat(BigRational, Exponent),
    /// `L(n)^e`.
    Log(u64, Exponent),
}

#[derive(Debug, Clone)]
pub(crate) struct Mono {
    factors: Vec<Factor>,
}

pub(crate) fn guarded_log_exact(n: u64) -> Option<BigRational> {
    if n <= 2 {
        return Some(BigRational::one());
    }
    n.is_power_of_two()
        .then(|| BigRational::from_integer(BigInt::from(n.trailing_zeros())))
}

fn ln_guarded(n: u64) -> f64 {
    ((n as f64).log2()).max(1.0).ln()
}

fn int_pow(base: &BigRational, e: Exponent) -> Option<BigRational> {
    if !e.is_integer() {
        return None;
    }
    let p = *e.numer();
    if base.is_zero() && p < 0 {
        return None;
    }
    let m = base.pow(p.unsigned_abs() as i32);
    Some(if p < 0 { m.recip() } else { m })
}

impl Mono {
    pub(crate) fn one() -> Mono {
        Mono { factors: Vec::new() }
    }

    pub(crate) fn of(x: impl Into<BigInt>) -> Mono {
        Mono::one().times(x, 1)
    }

    /// Multiplies by `x^e`.
    pub(crate) fn times(self, x: impl Into<BigInt>, e: i64) -> Mono {
        self.times_ratio(BigRational::from_integer(x.into()), Exponent::from_integer(e))
    }

    /// Multiplies by `x^e` with fractional `e`.
    pub(crate) fn times_frac(self, x: impl Into<BigInt>, e: Exponent) -> Mono {
        self.times_ratio(BigRational::from_integer(x.into()), e)
    }

    pub(crate) fn times_ratio(mut self, x: BigRational, e: Exponent) -> Mono {
        self.factors.push(Factor::Rat(x, e));
        self
    }

    pub(crate) fn times_log(mut self, n: u64, e: i64) -> Mono {
        self.factors.push(Factor::Log(n, Exponent::from_integer(e)));
        self
    }

    pub(crate) fn exact(&self) -> Option<BigRational> {
        let mut acc = BigRational::one();
        for f in &self.factors {
            let v = match f {
                Factor::Rat(x, e) => int_pow(x, *e)?,
                Factor::Log(n, e) => int_pow(&guarded_log_exact(*n)?, *e)?,
            };
            acc *= v;
        }
        Some(acc)
    }

    pub(crate) fn ln(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Rat(x, e) => {
                    let w = exponent_rational(*e);
                    if w.is_zero() {
                        0.0
                    } else {
                        crate::numeric::rational_to_f64(&w) * ln_rational(&x.abs())
                    }
                }
                Factor::Log(n, e) => crate::numeric::rational_to_f64(&exponent_rational(*e)) * ln_guarded(*n),
            })
            .sum()
    }

    pub(crate) fn real(&self) -> Real {
        let mut acc = Real::int(1);
        for f in &self.factors {
            acc = acc
                * match f {
                    Factor::Rat(x, e) => Real::rat(x.clone()).pow(*e),
                    Factor::Log(n, e) => Real::guarded_log2(*n).pow(*e),
                };
        }
        acc
    }
}

/// One side of a reported inequality.
#[derive(Debug, Clone)]
pub(crate) struct Side {
    pub(crate) value: Value,
    pub(crate) ln: f64,
    pub(crate) real: Real,
}

impl Side {
    pub(crate) fn mono(m: Mono) -> Side {
        let ln = m.ln();
        let value = match m.exact() {
            Some(v) => Value::Exact(v),
            None => Value::Float(ln.exp()),
        };
        Side { value, ln, real: m.real() }
    }

    pub(crate) fn exact(v: impl Into<BigInt>) -> Side {
        Side::mono(Mono::of(v))
    }

    /// A value without exact closed form, e.g. a sum of irrational terms or
    /// a fractional moment.
    pub(crate) fn real(real: Real) -> Side {
        let approx = real.approx();
        Side { value: Value::Float(approx), ln: approx.ln(), real }
    }

    pub(crate) fn le(&self, other: &Side) -> Decision {
        match (&self.value, &other.value) {
            (Value::Exact(a), Value::Exact(b)) => Real::rat(a.clone()).le(&Real::rat(b.clone())),
            _ => self.real.le(&other.real),
        }
    }

    pub(crate) fn ratio(&self, other: &Side) -> Option<Value> {
        match (&self.value, &other.value) {
            (Value::Exact(a), Value::Exact(b)) if !b.is_zero() => Some(Value::Exact(a / b)),
            (_, Value::Exact(b)) if b.is_zero() => None,
            _ => Some(Value::Float((self.ln - other.ln).exp())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_logs() {
        let m = Mono::of(6).times_frac(4, Exponent::new(3, 2));
        assert!(m.exact().is_none());
        assert!((m.ln() - (6f64 * 8.0).ln()).abs() < 1e-12);
        let m = Mono::of(3).times_log(16, 2);
        assert_eq!(m.exact(), Some(BigRational::from_integer(48.into())));
        assert!(Mono::one().times_log(3, 1).exact().is_none());
        let big = Mono::of(511).times(70000, 80);
        assert!(big.ln() > 700.0 && big.exact().is_some());
    }
}
