use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational};

/// A lower bound `|X| >= |A|^e_const * E^e_energy` in terms of an unknown
/// energy `E = |A|^x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub e_const: BigRational,
    pub e_energy: BigRational,
}

impl Bound {
    pub fn new(e_const: BigRational, e_energy: BigRational) -> Self {
        Bound { e_const, e_energy }
    }

    /// The exponent of `|A|` the bound gives when `E = |A|^x`.
    pub fn at(&self, x: &BigRational) -> BigRational {
        &self.e_const + &self.e_energy * x
    }
}

impl FromStr for Bound {
    type Err = Error;

    /// `e_const:e_energy`, e.g. `13/6:-1/6`.
    fn from_str(s: &str) -> Result<Self> {
        let (c, e) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bound {s:?} must look like e_const:e_energy")))?;
        Ok(Bound::new(parse_rational(c)?, parse_rational(e)?))
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", format_rational(&self.e_const), format_rational(&self.e_energy))
    }
}

/// The worst case of `max(b1, b2)` over the unknown energy: solves
/// `b1(x) = b2(x)` and returns `(x, b1(x))`.
pub fn balance_exponents(b1: &Bound, b2: &Bound) -> Result<(BigRational, BigRational)> {
    let slope = &b1.e_energy - &b2.e_energy;
    if slope.is_zero() {
        return Err(Error::InvalidParameter(format!("bounds {b1} and {b2} are parallel")));
    }
    if b1.e_energy.signum() == b2.e_energy.signum() {
        return Err(Error::InvalidParameter(format!(
            "bounds {b1} and {b2} must depend on the energy with opposite signs"
        )));
    }
    let x = (&b2.e_const - &b1.e_const) / slope;
    let result = b1.at(&x);
    debug_assert_eq!(result, b2.at(&x));
    Ok((x, result))
}
