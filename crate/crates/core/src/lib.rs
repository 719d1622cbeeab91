//! Exact moment energies, dyadic decompositions, regularisation
//! certificates and incidence counting over finite sets of reals.

pub mod claims;
pub mod cli;
pub mod convexfn;
pub mod energy;
pub mod error;
pub mod exec;
pub mod generators;
pub mod incidence;
pub mod numeric;
pub mod regularize;
pub mod set;

pub use convexfn::ConvexFn;
pub use energy::{energy, EnergyValue};
pub use error::{Error, Result};
pub use exec::Exec;
pub use numeric::{Real, Scalar, Tolerance, Value};
pub use set::{rep_function, FiniteSet, RepFunction, SetOp};
