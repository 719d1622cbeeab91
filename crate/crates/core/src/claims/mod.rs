//! One checkable entry per statement, evaluated on concrete sets.
//!
//! Every check computes both sides of an inequality with all implied
//! constants set to 1 and logarithms taken as `L(x) = max(1, log2 x)`.
//! Identities and explicit-constant inequalities are decided exactly
//! ([`PassMode::Exact`]); asymptotic statements are only ever judged by the
//! trend of their log-margin over a size scan ([`PassMode::Trend`]).

mod balance;
mod check;
pub mod popular;
mod quantity;
mod report;
mod scan;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Serialize, Serializer};

use crate::convexfn::ConvexFn;
use crate::energy::Exponent;
use crate::error::{Error, Result};
use crate::numeric::{Decision, Scalar, Value};
use crate::set::{FiniteSet, SetOp};

pub use balance::{balance_exponents, Bound};
pub use check::check;
pub use report::{reports_to_csv, reports_to_json, scan_to_csv, scan_to_json, CSV_HEADER};
pub use scan::{least_squares_slope, scan, ScanReport, ScanRow, ScanSpec};

macro_rules! claim_ids {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ClaimId {
            $($variant),+
        }

        impl ClaimId {
            pub const ALL: &'static [ClaimId] = &[$(ClaimId::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(ClaimId::$variant => $name),+
                }
            }
        }
    };
}

claim_ids! {
    LemCount => "lem_count",
    LemE3 => "lem_e3",
    LemE3Convex => "lem_e3_convex",
    CorE3Product => "cor_e3_product",
    PropEnergyGeneral => "prop_energy_general",
    ThmMain38 => "thm_main_38",
    ThmMainDiff => "thm_main_diff",
    CorConvex4938 => "cor_convex_49_38",
    CorConvexDiff => "cor_convex_diff",
    CorSumprodAsym => "cor_sumprod_asym",
    CorAAplus1 => "cor_A_Aplus1",
    ThmIncidence => "thm_incidence",
    ThmABplusA => "thm_ABplusA",
    CsSandwich => "cs_sandwich",
    HolderMixed => "holder_mixed",
    E32Convex => "e32_convex",
    RatioCount => "ratio_count",
}

impl ClaimId {
    /// The pass mode of the headline inequality.
    pub fn pass_mode(self) -> PassMode {
        match self {
            ClaimId::CsSandwich | ClaimId::HolderMixed => PassMode::Exact,
            _ => PassMode::Trend,
        }
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClaimId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        ClaimId::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = ClaimId::ALL.iter().map(|c| c.name()).collect();
                Error::Parse(format!("unknown claim {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

impl Serialize for ClaimId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassMode {
    Exact,
    #[serde(rename = "constant-free-trend")]
    Trend,
}

impl fmt::Display for PassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PassMode::Exact => "exact",
            PassMode::Trend => "constant-free-trend",
        })
    }
}

/// Which way the headline inequality points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "lhs>=rhs")]
    AtLeast,
    #[serde(rename = "lhs<=rhs")]
    AtMost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// A constant-free row of an asymptotic claim; judged only by a scan.
    Trend,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Trend => "trend",
        })
    }
}

/// How a side condition is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    /// A hypothesis; a violation rejects the check.
    Required,
    /// An inequality that must hold exactly; a violation is an exact failure.
    Exact,
    /// A `<<`-type condition or auxiliary bound evaluated with constant 1
    /// and only recorded.
    ConstantFree,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideCondition {
    pub name: String,
    pub kind: ConditionKind,
    pub holds: Option<bool>,
    pub lhs: String,
    pub rhs: String,
}

impl SideCondition {
    pub(crate) fn from_decision(name: impl Into<String>, kind: ConditionKind, d: &Decision) -> Self {
        SideCondition {
            name: name.into(),
            kind,
            holds: d.holds,
            lhs: d.lhs.to_string(),
            rhs: d.rhs.to_string(),
        }
    }

    pub(crate) fn flag(
        name: impl Into<String>,
        kind: ConditionKind,
        holds: bool,
        lhs: impl fmt::Display,
        rhs: impl fmt::Display,
    ) -> Self {
        SideCondition {
            name: name.into(),
            kind,
            holds: Some(holds),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.holds == Some(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimReport {
    pub claim: ClaimId,
    pub family: String,
    /// `|A|`.
    pub n: usize,
    /// Parameters and set descriptors the check ran with.
    pub inputs: BTreeMap<String, String>,
    pub lhs: Value,
    /// The other side with every implied constant set to 1.
    pub rhs: Value,
    pub ratio: Option<Value>,
    pub direction: Direction,
    /// `ln` of the larger claimed side minus `ln` of the smaller one.
    pub log_margin: f64,
    /// Natural logs of the set sizes involved.
    pub log_sizes: BTreeMap<String, f64>,
    /// Whether the inequality holds with constant 1, decided exactly.
    pub holds: Option<bool>,
    pub pass_mode: PassMode,
    pub side_conditions: Vec<SideCondition>,
    pub details: BTreeMap<String, String>,
    pub verdict: Verdict,
}

impl ClaimReport {
    /// Exact assertions that failed: the headline inequality in exact mode
    /// and any exact side condition.
    pub fn exact_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.verdict == Verdict::Fail {
            out.push(format!("{}: lhs={} rhs={}", self.claim, self.lhs, self.rhs));
        }
        for c in &self.side_conditions {
            if c.kind == ConditionKind::Exact && !c.passed() {
                out.push(format!("{}: {} (lhs={} rhs={})", self.claim, c.name, c.lhs, c.rhs));
            }
        }
        out
    }

    pub fn side(&self, name: &str) -> Option<&SideCondition> {
        self.side_conditions.iter().find(|c| c.name == name)
    }
}

/// Sets and parameters for a check. Absent fields are filled with the
/// claim's default construction (documented on [`check`]).
#[derive(Debug, Clone)]
pub struct ClaimInputs {
    pub label: String,
    pub a: FiniteSet,
    pub b: Option<FiniteSet>,
    pub c: Option<FiniteSet>,
    pub q: Option<FiniteSet>,
    pub r: Option<FiniteSet>,
    pub u: Option<FiniteSet>,
    pub v: Option<FiniteSet>,
    pub t: Option<u64>,
    pub f: Option<ConvexFn>,
    pub g: Option<ConvexFn>,
    pub k: Option<Exponent>,
    pub c1: Option<BigRational>,
    pub lambda: Option<Scalar>,
    /// `Prod` for data `r_{QR}(a) >= T`, `Ratio` for `r_{Q/R}(a) >= T`,
    /// `Diff` for `r_{Q-R}(a) >= T`.
    pub qr_op: Option<SetOp>,
    /// `Sum` or `Diff` for the `±` of the difference-set variant.
    pub sign: Option<SetOp>,
}

impl ClaimInputs {
    pub fn new(a: FiniteSet) -> Self {
        ClaimInputs {
            label: "custom".into(),
            a,
            b: None,
            c: None,
            q: None,
            r: None,
            u: None,
            v: None,
            t: None,
            f: None,
            g: None,
            k: None,
            c1: None,
            lambda: None,
            qr_op: None,
            sign: None,
        }
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_b(mut self, b: FiniteSet) -> Self {
        self.b = Some(b);
        self
    }

    pub fn with_c(mut self, c: FiniteSet) -> Self {
        self.c = Some(c);
        self
    }

    pub fn with_f(mut self, f: ConvexFn) -> Self {
        self.f = Some(f);
        self
    }

    pub fn with_g(mut self, g: ConvexFn) -> Self {
        self.g = Some(g);
        self
    }

    pub fn with_k(mut self, k: Exponent) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_qrt(mut self, q: FiniteSet, r: FiniteSet, op: SetOp, t: u64) -> Self {
        self.q = Some(q);
        self.r = Some(r);
        self.qr_op = Some(op);
        self.t = Some(t);
        self
    }
}
