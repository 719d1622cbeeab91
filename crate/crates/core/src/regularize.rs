//! Iterative refinement of a set by a deterministic rule, and the
//! decomposition algorithm that extracts `C ⊆ B ⊆ A` on which the `k`-th
//! energy of `B` against `V` is carried by one dyadic class.
//!
//! The decomposition emits a [`DecompositionCertificate`] that
//! [`verify_certificate`] re-derives from the raw sets alone.
//!
//! Logarithms are `L(x) = max(1, log2 x)`. Every inequality is decided by
//! [`Real`] comparisons, i.e. exactly.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::claims::popular::{popular_set, refined_lower_bound, refined_set};
use crate::energy::{
    dyadic_decompose, energy, energy_of, exponent_rational, pick_dominant, sandwich_with, Exponent,
};
use crate::error::{Error, Result};
use crate::numeric::{self, format_rational, parse_exponent, parse_rational, BackendKind, Decision, Real};
use crate::set::{rep_function, FiniteSet, SetOp};

// ---------------------------------------------------------------------------
// Generic refinement driver
// ---------------------------------------------------------------------------

/// A deterministic map `X -> R(X) ⊆ X` with a declared size guarantee.
pub trait RefinementRule {
    fn name(&self) -> String;

    fn apply(&self, x: &FiniteSet, eps: &Real) -> Result<FiniteSet>;

    /// The guaranteed `|R(X)|`; defaults to `(1 - eps)|X|`.
    fn guarantee(&self, size: usize, eps: &Real) -> Real {
        (Real::int(1) - eps.clone()) * Real::from(size)
    }
}

/// `R(X) = X`.
pub struct IdentityRule;

impl RefinementRule for IdentityRule {
    fn name(&self) -> String {
        "identity".into()
    }

    fn apply(&self, x: &FiniteSet, _eps: &Real) -> Result<FiniteSet> {
        Ok(x.clone())
    }
}

/// Removes the largest element.
pub struct DropLargestRule;

impl RefinementRule for DropLargestRule {
    fn name(&self) -> String {
        "drop-largest".into()
    }

    fn apply(&self, x: &FiniteSet, _eps: &Real) -> Result<FiniteSet> {
        let last = x.max().cloned();
        Ok(x.filter(|v| Some(v) != last.as_ref()))
    }
}

/// `R(X) = X'`: the elements of `X` that land in `P(X, C)` for at least half
/// of `C`. The guarantee is `(1 - 2/L(|X|))|X|`, not `(1 - eps)|X|`.
pub struct PopularSumRule {
    pub c: FiniteSet,
}

impl RefinementRule for PopularSumRule {
    fn name(&self) -> String {
        format!("popular-sum(|C|={})", self.c.len())
    }

    fn apply(&self, x: &FiniteSet, _eps: &Real) -> Result<FiniteSet> {
        if x.len() < 2 {
            return Ok(x.clone());
        }
        let p = popular_set(x, &self.c)?;
        refined_set(x, &self.c, &p)
    }

    fn guarantee(&self, size: usize, _eps: &Real) -> Real {
        refined_lower_bound(size)
    }
}

#[derive(Debug, Clone)]
pub struct RefineStep {
    pub size: usize,
    pub refined_size: usize,
    pub energy: Real,
    pub refined_energy: Real,
    pub stop: bool,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub rule: String,
    pub b: FiniteSet,
    pub refined: FiniteSet,
    pub epsilon: Real,
    pub c2: BigRational,
    pub steps: Vec<RefineStep>,
}

impl RefineOutcome {
    /// `E_m(R(B)) >= c2 E_m(B)`, rechecked from the stored sets.
    pub fn energy_condition(&self, m: Exponent) -> Result<Decision> {
        let e_b = energy(&self.b, &self.b, m, SetOp::Diff)?.as_real();
        let e_r = energy(&self.refined, &self.refined, m, SetOp::Diff)?.as_real();
        Ok(e_r.ge(&(Real::rat(self.c2.clone()) * e_b)))
    }

    /// `|B| >= (1 - c1)|A|`.
    pub fn size_condition(&self, a_len: usize, c1: &BigRational) -> bool {
        BigRational::from_integer(self.b.len().into())
            >= (BigRational::one() - c1) * BigRational::from_integer(a_len.into())
    }
}

/// Iterates `B <- R(B)` from `B = A` until `E_m(R(B)) >= c2 E_m(B)`, with
/// `eps = c1 / L(|A|)` and `c2 = (1 - c1)^2 / 2^(ceil(m) - 1)`.
pub fn regu_refine(a: &FiniteSet, rule: &dyn RefinementRule, m: Exponent, c1: &BigRational) -> Result<RefineOutcome> {
    if m <= Exponent::one() {
        return Err(Error::ExponentTooSmall(format!("refinement needs m > 1, got {m}")));
    }
    check_c1(c1)?;
    if a.is_empty() {
        return Err(Error::TooSmall("refinement needs a nonempty set".into()));
    }
    let eps = Real::rat(c1.clone()) / Real::guarded_log2(a.len() as u64);
    let lifts = m.ceil().to_integer() - 1;
    let c2 = (BigRational::one() - c1).pow(2) / BigRational::from_integer(BigInt::one() << lifts as usize);
    let max_steps = Real::guarded_log2(a.len() as u64)
        .ceil()
        .and_then(|v| v.to_usize())
        .unwrap_or(usize::MAX);
    let mut b = a.clone();
    let mut steps = Vec::new();
    for step in 0..=max_steps {
        let r = rule.apply(&b, &eps)?;
        if !r.is_subset(&b) {
            return Err(Error::InvalidParameter(format!("rule {} returned a non-subset", rule.name())));
        }
        if !Real::from(r.len()).ge(&rule.guarantee(b.len(), &eps)).passed() {
            return Err(Error::RuleViolation { step, kept: r.len(), size: b.len() });
        }
        let e_b = energy(&b, &b, m, SetOp::Diff)?.as_real();
        let e_r = if r.is_empty() {
            Real::int(0)
        } else {
            energy(&r, &r, m, SetOp::Diff)?.as_real()
        };
        let stop = e_r.ge(&(Real::rat(c2.clone()) * e_b.clone())).passed();
        steps.push(RefineStep {
            size: b.len(),
            refined_size: r.len(),
            energy: e_b,
            refined_energy: e_r,
            stop,
        });
        if stop {
            return Ok(RefineOutcome { rule: rule.name(), b, refined: r, epsilon: eps, c2, steps });
        }
        b = r;
    }
    Err(Error::NonTermination(max_steps as u64))
}

fn check_c1(c1: &BigRational) -> Result<()> {
    if !c1.is_positive() || *c1 >= BigRational::one() {
        return Err(Error::InvalidParameter(format!("c1 must lie in (0, 1), got {}", format_rational(c1))));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

/// One pass of the rule on `A_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// `|A_i|`.
    pub size: usize,
    /// `t_i` and `|D_i|` of the dominant class of `A_i op V`.
    pub t: u64,
    pub class_size: usize,
    /// Number of dyadic classes of `A_i op V`.
    pub classes: usize,
    /// `|P_{A_i}| = sum_{d in D_i} r(d)`.
    pub p: u64,
    /// `|R(A_i)|`.
    pub kept: usize,
    /// `|G_i|`.
    pub g: u64,
    pub stop: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionCertificate {
    pub op: SetOp,
    pub k: Exponent,
    pub c1: BigRational,
    pub epsilon: BigRational,
    pub a: FiniteSet,
    pub v: FiniteSet,
    pub b: FiniteSet,
    pub c: FiniteSet,
    pub t: u64,
    pub d_t: FiniteSet,
    /// Number of refinement steps taken before stopping.
    pub iterations: usize,
    pub trace: Vec<StepRecord>,
}

fn log_a(n: usize) -> Real {
    Real::guarded_log2(n as u64)
}

fn two_pow(k: Exponent) -> Real {
    Real::int(2).pow(k)
}

/// `eps = c1 / (2^k ln2 (k-1) L^2 - 2^k L ln(1-c1))` with `L = L(|A|)`,
/// rounded down to a rational with denominator `2^20` in the divisor.
pub fn decomposition_epsilon(a_len: usize, k: Exponent, c1: &BigRational) -> Result<BigRational> {
    let l = log_a(a_len);
    let km1 = Real::rat(exponent_rational(k) - BigRational::one());
    let den = two_pow(k) * Real::Ln2 * km1 * l.clone() * l.clone()
        - two_pow(k) * l * numeric::ln(Real::rat(BigRational::one() - c1));
    let hi = den
        .enclose(64)
        .ok_or_else(|| Error::InvalidParameter("epsilon denominator is not finite".into()))?
        .hi;
    let scale = BigRational::from_integer(BigInt::one() << 20);
    let hi = (hi * &scale).ceil() / scale;
    let eps = c1 / hi;
    if !eps.is_positive() || eps >= BigRational::one() {
        return Err(Error::InvalidParameter(format!("epsilon {} is outside (0, 1)", format_rational(&eps))));
    }
    Ok(eps)
}

/// `ceil(c1 / eps)`, the step budget.
pub fn step_budget(c1: &BigRational, eps: &BigRational) -> u64 {
    (c1 / eps).ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// The data of one rule application.
struct Pass {
    record: StepRecord,
    class: crate::energy::DyadicClass,
    kept: FiniteSet,
    degrees: Vec<u64>,
}

/// `deg(a) = |{v : a op v in D}|`, i.e. `r_{D op' V}(a)` with `op'` the
/// inverse operation.
fn degrees(a: &FiniteSet, op: SetOp, v: &FiniteSet, d: &FiniteSet) -> Result<Vec<u64>> {
    let rep = rep_function(d, op.inverse(), v)?;
    Ok(a.iter().map(|x| rep.get(x)).collect())
}

fn run_pass(a_i: &FiniteSet, v: &FiniteSet, op: SetOp, k: Exponent, eps: &BigRational) -> Result<Pass> {
    let rep = rep_function(a_i, op, v)?;
    let classes = dyadic_decompose(&rep, k)?;
    let n_classes = classes.len();
    let class = pick_dominant(classes).expect("nonempty decomposition");
    let p: u64 = class.profile().iter().map(|(c, m)| c * m).sum();
    let deg = degrees(a_i, op, v, &class.members)?;
    debug_assert_eq!(deg.iter().sum::<u64>(), p);
    // keep a iff deg(a) * eps * |A_i| <= |P|
    let size = BigRational::from_integer(a_i.len().into());
    let pq = BigRational::from_integer(p.into());
    let keep: Vec<bool> = deg
        .iter()
        .map(|&d| BigRational::from_integer(d.into()) * eps * &size <= pq)
        .collect();
    let g: u64 = deg.iter().zip(&keep).filter(|(_, &k)| k).map(|(d, _)| d).sum();
    let mut it = keep.iter();
    let kept = a_i.filter(|_| *it.next().expect("one flag per element"));
    let stop = (two_pow(k) * Real::from(g)).ge(&Real::from(p)).passed();
    Ok(Pass {
        record: StepRecord {
            size: a_i.len(),
            t: class.t,
            class_size: class.size(),
            classes: n_classes,
            p,
            kept: kept.len(),
            g,
            stop,
        },
        class,
        kept,
        degrees: deg,
    })
}

fn check_decomp_inputs(a: &FiniteSet, v: &FiniteSet, op: SetOp, k: Exponent, c1: &BigRational) -> Result<()> {
    if k <= Exponent::one() {
        return Err(Error::ExponentTooSmall(format!("decomposition needs k > 1, got {k}")));
    }
    check_c1(c1)?;
    if !matches!(op, SetOp::Diff | SetOp::Ratio) {
        return Err(Error::InvalidParameter(format!("decomposition op must be diff or ratio, got {op}")));
    }
    if a.len() < 4 {
        return Err(Error::TooSmall(format!("decomposition needs |A| >= 4, got {}", a.len())));
    }
    if v.is_empty() {
        return Err(Error::TooSmall("decomposition needs a nonempty V".into()));
    }
    if a.backend() == BackendKind::Tolerant || v.backend() == BackendKind::Tolerant {
        return Err(Error::TolerantRejected("decomposition"));
    }
    if op == SetOp::Ratio && (a.contains_zero() || v.contains_zero()) {
        return Err(Error::ZeroElement("ratio decomposition"));
    }
    Ok(())
}

/// Runs the decomposition with `eps` from [`decomposition_epsilon`].
pub fn decomp(a: &FiniteSet, v: &FiniteSet, op: SetOp, k: Exponent, c1: &BigRational) -> Result<DecompositionCertificate> {
    check_decomp_inputs(a, v, op, k, c1)?;
    let eps = decomposition_epsilon(a.len(), k, c1)?;
    let budget = step_budget(c1, &eps);
    run_decomp(a, v, op, k, c1, eps, budget)
}

/// Runs the same iteration with a caller-chosen `eps`. The step budget is
/// `|A|`, which always suffices because a non-stopping step removes at least
/// one element. Certificates from this entry point fail the epsilon check of
/// [`verify_certificate`] unless `eps` happens to match.
pub fn decomp_with_epsilon(
    a: &FiniteSet,
    v: &FiniteSet,
    op: SetOp,
    k: Exponent,
    c1: &BigRational,
    eps: BigRational,
) -> Result<DecompositionCertificate> {
    check_decomp_inputs(a, v, op, k, c1)?;
    if !eps.is_positive() || eps >= BigRational::one() {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {}", format_rational(&eps))));
    }
    run_decomp(a, v, op, k, c1, eps, a.len() as u64)
}

fn run_decomp(
    a: &FiniteSet,
    v: &FiniteSet,
    op: SetOp,
    k: Exponent,
    c1: &BigRational,
    eps: BigRational,
    budget: u64,
) -> Result<DecompositionCertificate> {
    let mut a_i = a.clone();
    let mut trace = Vec::new();
    for n in 0..=budget {
        let pass = run_pass(&a_i, v, op, k, &eps)?;
        log::debug!("decomp step {n}: {:?}", pass.record);
        let stop = pass.record.stop;
        trace.push(pass.record.clone());
        if stop {
            let c = select_c(&a_i, &pass, k)?;
            return Ok(DecompositionCertificate {
                op,
                k,
                c1: c1.clone(),
                epsilon: eps,
                a: a.clone(),
                v: v.clone(),
                b: a_i,
                c,
                t: pass.class.t,
                d_t: pass.class.members,
                iterations: n as usize,
                trace,
            });
        }
        a_i = pass.kept;
    }
    Err(Error::NonTermination(budget))
}

/// `C = {c in R(B) : deg(c) >= |P_B| / (2^{k+1} |B|)}`.
fn select_c(b: &FiniteSet, pass: &Pass, k: Exponent) -> Result<FiniteSet> {
    let threshold = Real::from(pass.record.p) / (two_pow(k) * Real::int(2) * Real::from(b.len()));
    let mut cache: std::collections::HashMap<u64, bool> = std::collections::HashMap::new();
    let mut keep = Vec::with_capacity(b.len());
    let kept = &pass.kept;
    for (x, &d) in b.iter().zip(&pass.degrees) {
        let high = *cache
            .entry(d)
            .or_insert_with(|| Real::from(d).ge(&threshold).passed());
        keep.push(high && kept.contains(x));
    }
    let mut it = keep.into_iter();
    Ok(b.filter(|_| it.next().expect("one flag per element")))
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// One checked inequality with its two sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub holds: Option<bool>,
    pub lhs: String,
    pub rhs: String,
}

impl Check {
    fn from_decision(name: impl Into<String>, d: &Decision) -> Check {
        Check {
            name: name.into(),
            holds: d.holds,
            lhs: d.lhs.to_string(),
            rhs: d.rhs.to_string(),
        }
    }

    fn flag(name: impl Into<String>, ok: bool, lhs: impl fmt::Display, rhs: impl fmt::Display) -> Check {
        Check {
            name: name.into(),
            holds: Some(ok),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.holds == Some(true)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.holds {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "undecided",
        };
        write!(f, "{verdict:<9} {}: lhs={} rhs={}", self.name, self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Re-derives every guarantee of `cert` from `A`, `V`, `op`, `k` and `c1`.
/// Failures are report entries; nothing here returns an error.
pub fn verify_certificate(cert: &DecompositionCertificate) -> VerificationReport {
    let mut r = VerificationReport::default();
    if let Err(e) = verify_into(cert, &mut r) {
        r.checks.push(Check::flag("recomputation", false, e, "no error"));
    }
    r
}

fn verify_into(cert: &DecompositionCertificate, r: &mut VerificationReport) -> Result<()> {
    let (a, v, b, c, k) = (&cert.a, &cert.v, &cert.b, &cert.c, cert.k);
    check_decomp_inputs(a, v, cert.op, k, &cert.c1)?;
    let c1 = &cert.c1;

    let eps = decomposition_epsilon(a.len(), k, c1)?;
    r.checks.push(Check::flag(
        "epsilon matches the formula",
        eps == cert.epsilon,
        format_rational(&cert.epsilon),
        format_rational(&eps),
    ));
    let budget = step_budget(c1, &cert.epsilon);
    r.checks.push(Check::flag(
        "iterations N <= ceil(c1/eps)",
        cert.iterations as u64 <= budget,
        cert.iterations,
        budget,
    ));

    // replay the iteration with the certificate's epsilon
    let mut a_i = a.clone();
    let mut replay_ok = true;
    let mut final_pass = None;
    for (i, rec) in cert.trace.iter().enumerate() {
        let pass = run_pass(&a_i, v, cert.op, k, &cert.epsilon)?;
        if pass.record != *rec {
            replay_ok = false;
        }
        let is_last = i + 1 == cert.trace.len();
        if pass.record.stop != is_last {
            replay_ok = false;
        }
        let size = Real::from(a_i.len());
        let keep_bound = (Real::int(1) - Real::rat(cert.epsilon.clone())) * size;
        r.checks.push(Check::from_decision(
            format!("step {i}: |A_(i+1)| > (1-eps)|A_i|"),
            &Real::from(pass.kept.len()).gt(&keep_bound),
        ));
        if !pass.record.stop {
            let e_now = energy(&a_i, v, k, cert.op)?.as_real();
            let e_next = energy(&pass.kept, v, k, cert.op)?.as_real();
            let f = Real::int(1) - two_pow(-k) / log_a(a_i.len());
            r.checks.push(Check::from_decision(
                format!("step {i}: E(A_(i+1)) <= (1 - 2^-k/L(|A_i|)) E(A_i)"),
                &e_next.le(&(f * e_now.clone())),
            ));
            let f = Real::int(1) - Real::int(1) / (Real::int(2) * Real::from(pass.record.classes));
            r.checks.push(Check::from_decision(
                format!("step {i}: E(A_(i+1)) <= (1 - 1/(2 classes)) E(A_i)"),
                &e_next.le(&(f * e_now)),
            ));
            a_i = pass.kept;
        } else {
            final_pass = Some(pass);
        }
    }
    r.checks.push(Check::flag(
        "trace replays from A",
        replay_ok && cert.trace.len() == cert.iterations + 1,
        format!("{} recorded steps", cert.trace.len()),
        format!("N + 1 = {}", cert.iterations + 1),
    ));
    let Some(pass) = final_pass else {
        r.checks.push(Check::flag("trace ends in a stop", false, "no stop", "stop"));
        return Ok(());
    };
    r.checks.push(Check::flag("B is the final iterate", a_i == *b, b.len(), a_i.len()));
    let expect_c = select_c(&a_i, &pass, k)?;
    r.checks.push(Check::flag("C matches the selection rule", expect_c == *c, c.len(), expect_c.len()));

    r.checks.push(Check::flag("C ⊆ B", c.is_subset(b), c.len(), b.len()));
    r.checks.push(Check::flag("B ⊆ A", b.is_subset(a), b.len(), a.len()));
    let min_b = (BigRational::one() - c1) * BigRational::from_integer(a.len().into());
    r.checks.push(Check::flag(
        "|B| >= (1-c1)|A|",
        BigRational::from_integer(b.len().into()) >= min_b,
        b.len(),
        format_rational(&min_b),
    ));

    // the dyadic class, recomputed from B and V
    let rep = rep_function(b, cert.op, v)?;
    let classes = dyadic_decompose(&rep, k)?;
    let n_classes = classes.len();
    let dominant = pick_dominant(classes).expect("nonempty decomposition");
    r.checks.push(Check::flag(
        "D_t is the dominant class of B op V",
        dominant.t == cert.t && dominant.members == cert.d_t,
        format!("t={} |D_t|={}", cert.t, cert.d_t.len()),
        format!("t={} |D_t|={}", dominant.t, dominant.size()),
    ));
    let in_range = cert.d_t.iter().all(|x| {
        let m = rep.get(x);
        cert.t <= m && m < 2 * cert.t
    });
    r.checks.push(Check::flag("t <= r(d) < 2t on D_t", in_range, cert.d_t.len(), "all"));
    r.checks.push(Check::flag("1 <= t <= |B|", cert.t >= 1 && cert.t <= b.len() as u64, cert.t, b.len()));

    let s = sandwich_with(&rep, &dominant, log_a(b.len()), n_classes);
    r.checks.push(Check::from_decision("|D_t|t^k <= E_k(B,V)", &s.lower));
    r.checks.push(Check::from_decision("E_k(B,V) <= 2^k|D_t|t^k L(|B|)", &s.upper));
    let sharp = sandwich_with(&rep, &dominant, Real::from(n_classes), n_classes);
    r.checks.push(Check::from_decision("E_k(B,V) <= 2^k|D_t|t^k classes", &sharp.upper));

    // r_{D_t op' V}(c) interval over C
    let deg = degrees(c, cert.op, v, &cert.d_t)?;
    let mass = Real::from(cert.d_t.len()) * Real::from(cert.t);
    let size_b = Real::from(b.len());
    let lower = mass.clone() / (two_pow(k) * Real::int(2) * size_b.clone());
    let l = log_a(a.len());
    let upper = Real::int(2) * mass / size_b * Real::rat(exponent_rational(k)) * two_pow(k) * l.clone() * l.clone()
        / Real::rat(c1.clone());
    let (lo, hi) = (deg.iter().min().copied(), deg.iter().max().copied());
    match (lo, hi) {
        (Some(lo), Some(hi)) => {
            r.checks.push(Check::from_decision(
                "min_C r_{D_t+V}(c) >= |D_t|t/(2^{k+1}|B|)",
                &Real::from(lo).ge(&lower),
            ));
            r.checks.push(Check::from_decision(
                "max_C r_{D_t+V}(c) <= (2|D_t|t/|B|) k 2^k L(|A|)^2 / c1",
                &Real::from(hi).le(&upper),
            ));
        }
        _ => r.checks.push(Check::flag("C is nonempty", false, 0, 1)),
    }

    let ln2_k = Real::Ln2 * Real::rat(exponent_rational(k) - BigRational::one());
    let stated = Real::rat(c1 * (BigRational::one() - c1)) * Real::from(a.len())
        / (two_pow(k) * two_pow(k) * Real::int(2) * ln2_k * l.clone() * l);
    r.checks.push(Check::from_decision(
        "|C| >= c1(1-c1)/(2^{2k+1} ln2 (k-1)) |A|/L(|A|)^2",
        &Real::from(c.len()).ge(&stated),
    ));
    let sharp_c = Real::rat(cert.epsilon.clone()) * Real::from(b.len()) / (two_pow(k) * Real::int(2));
    r.checks.push(Check::from_decision("|C| >= eps|B|/2^{k+1}", &Real::from(c.len()).ge(&sharp_c)));
    Ok(())
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

const HEADER: &str = "energylab-certificate v1";

fn write_set(out: &mut String, key: &str, s: &FiniteSet) {
    out.push_str(key);
    out.push(':');
    for x in s {
        out.push(' ');
        out.push_str(&x.to_string());
    }
    out.push('\n');
}

impl DecompositionCertificate {
    /// One `key: value` field per line; sets are space-separated exact values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str(&format!("op: {}\n", self.op));
        out.push_str(&format!("k: {}\n", self.k));
        out.push_str(&format!("c1: {}\n", format_rational(&self.c1)));
        out.push_str(&format!("epsilon: {}\n", format_rational(&self.epsilon)));
        out.push_str(&format!("iterations: {}\n", self.iterations));
        out.push_str(&format!("t: {}\n", self.t));
        write_set(&mut out, "A", &self.a);
        write_set(&mut out, "V", &self.v);
        write_set(&mut out, "B", &self.b);
        write_set(&mut out, "C", &self.c);
        write_set(&mut out, "D_t", &self.d_t);
        for s in &self.trace {
            out.push_str(&format!(
                "step: size={} t={} class_size={} classes={} p={} kept={} g={} stop={}\n",
                s.size, s.t, s.class_size, s.classes, s.p, s.kept, s.g, u8::from(s.stop)
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(HEADER) {
            return Err(Error::Parse(format!("certificate must start with {HEADER:?}")));
        }
        let mut fields: std::collections::HashMap<&str, &str> = std::collections::HashMap::new();
        let mut trace = Vec::new();
        for line in lines {
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("certificate line without a key: {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "step" {
                trace.push(parse_step(value)?);
            } else if fields.insert(key, value).is_some() {
                return Err(Error::Parse(format!("duplicate certificate field {key:?}")));
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("certificate is missing field {k:?}")))
        };
        let set = |k: &str| -> Result<FiniteSet> {
            let vals = get(k)?
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<Result<Vec<_>>>()?;
            FiniteSet::from_values(vals)
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Parse(format!("certificate field {k:?} is not an integer")))
        };
        Ok(DecompositionCertificate {
            op: SetOp::from_str(get("op")?)?,
            k: parse_exponent(get("k")?)?,
            c1: parse_rational(get("c1")?)?,
            epsilon: parse_rational(get("epsilon")?)?,
            a: set("A")?,
            v: set("V")?,
            b: set("B")?,
            c: set("C")?,
            t: int("t")?,
            d_t: set("D_t")?,
            iterations: int("iterations")? as usize,
            trace,
        })
    }
}

fn parse_step(s: &str) -> Result<StepRecord> {
    let mut map = std::collections::HashMap::new();
    for part in s.split_whitespace() {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad step entry {part:?}")))?;
        let v: u64 = v.parse().map_err(|_| Error::Parse(format!("bad step value {part:?}")))?;
        map.insert(k, v);
    }
    let get = |k: &str| map.get(k).copied().ok_or_else(|| Error::Parse(format!("step is missing {k:?}")));
    Ok(StepRecord {
        size: get("size")? as usize,
        t: get("t")?,
        class_size: get("class_size")? as usize,
        classes: get("classes")? as usize,
        p: get("p")?,
        kept: get("kept")? as usize,
        g: get("g")?,
        stop: get("stop")? != 0,
    })
}

impl fmt::Display for DecompositionCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Energy of the final `B` against `V`, for reporting.
pub fn certificate_energy(cert: &DecompositionCertificate) -> Result<crate::energy::EnergyValue> {
    Ok(energy_of(&rep_function(&cert.b, cert.op, &cert.v)?, cert.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::FamilySpec;
    use crate::numeric::Scalar;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn ap(n: usize) -> FiniteSet {
        FamilySpec::ap(0, 1).generate(n).unwrap()
    }

    #[test]
    fn epsilon_is_below_the_formula() {
        let k = Exponent::from_integer(2);
        let eps = decomposition_epsilon(64, k, &q("1/2")).unwrap();
        // L = 6: 4 ln2 * 36 + 24 ln2 = 168 ln2 = 116.4...
        let exact = 0.5 / (168.0 * std::f64::consts::LN_2);
        let e = numeric::rational_to_f64(&eps);
        assert!(e <= exact && e > exact * (1.0 - 1e-7), "{e} vs {exact}");
        assert_eq!(step_budget(&q("1/2"), &eps), 117);
    }

    #[test]
    fn ap_certificate_passes() {
        let a = ap(64);
        let cert = decomp(&a, &a, SetOp::Diff, Exponent::from_integer(2), &q("1/2")).unwrap();
        let report = verify_certificate(&cert);
        assert!(report.passed(), "{report}");
        assert_eq!(cert.iterations, 0);
        assert_eq!(cert.b, a);
    }

    #[test]
    fn gp_ratio_certificate_passes() {
        let a = FamilySpec::gp(1, 2).generate(64).unwrap();
        let cert = decomp(&a, &a, SetOp::Ratio, Exponent::from_integer(3), &q("1/4")).unwrap();
        let report = verify_certificate(&cert);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn input_errors() {
        let a = ap(8);
        assert!(matches!(
            decomp(&a, &a, SetOp::Diff, Exponent::from_integer(1), &q("1/2")),
            Err(Error::ExponentTooSmall(_))
        ));
        assert!(matches!(decomp(&ap(3), &a, SetOp::Diff, Exponent::from_integer(2), &q("1/2")), Err(Error::TooSmall(_))));
        assert!(decomp(&a, &a, SetOp::Diff, Exponent::from_integer(2), &q("1")).is_err());
        assert!(matches!(
            decomp(&a, &a, SetOp::Ratio, Exponent::from_integer(2), &q("1/2")),
            Err(Error::ZeroElement(_))
        ));
        assert!(decomp(&a, &a, SetOp::Sum, Exponent::from_integer(2), &q("1/2")).is_err());
    }

    #[test]
    fn tampered_c_fails_the_lower_bound() {
        let a = FamilySpec::random(400, 11).generate(40).unwrap();
        let v = FamilySpec::random(400, 12).generate(40).unwrap();
        let mut cert = decomp(&a, &v, SetOp::Diff, Exponent::from_integer(2), &q("1/2")).unwrap();
        assert!(verify_certificate(&cert).passed());
        // add an element of B \ C with degree zero against D_t + V
        let deg = degrees(&cert.b, cert.op, &cert.v, &cert.d_t).unwrap();
        let weak = cert.b.iter().zip(&deg).find(|(x, &d)| d == 0 && !cert.c.contains(x));
        let extra = match weak {
            Some((x, _)) => x.clone(),
            None => {
                // push a new element far outside A; it has degree zero
                let far = Scalar::int(1_000_000);
                cert.b = FiniteSet::from_values(cert.b.iter().cloned().chain([far.clone()]).collect()).unwrap();
                far
            }
        };
        cert.c = FiniteSet::from_values(cert.c.iter().cloned().chain([extra]).collect()).unwrap();
        let report = verify_certificate(&cert);
        assert!(!report.passed());
        let c = report.get("min_C r_{D_t+V}(c) >= |D_t|t/(2^{k+1}|B|)").unwrap();
        assert_eq!(c.holds, Some(false), "{report}");
    }

    #[test]
    fn forced_epsilon_runs_several_steps_and_loses_energy() {
        // a lopsided set: a dense block plus sparse outliers
        let mut vals: Vec<i64> = (0..24).collect();
        vals.extend([100, 250, 400, 777, 1000, 1500, 2100, 3000]);
        let a = FiniteSet::from_ints(&vals);
        let cert = decomp_with_epsilon(&a, &a, SetOp::Diff, Exponent::from_integer(2), &q("1/2"), q("9/10")).unwrap();
        let report = verify_certificate(&cert);
        for check in &report.checks {
            if check.name.starts_with("step") {
                assert!(check.passed(), "{check}");
            }
        }
        assert!(!report.get("epsilon matches the formula").unwrap().passed());
    }

    #[test]
    fn certificate_text_round_trip() {
        let a = FamilySpec::gp(1, 3).generate(6).unwrap();
        let v = FamilySpec::gp(1, 2).generate(5).unwrap();
        let cert = decomp(&a, &v, SetOp::Ratio, Exponent::new(5, 2), &q("1/4")).unwrap();
        let text = cert.to_text();
        let back = DecompositionCertificate::from_text(&text).unwrap();
        assert_eq!(back, cert);
        assert!(verify_certificate(&back).passed(), "{}", verify_certificate(&back));
        assert!(DecompositionCertificate::from_text("nope").is_err());
        assert!(DecompositionCertificate::from_text(&text.replace("epsilon", "eps")).is_err());
    }

    #[test]
    fn refinement_rules() {
        let a = ap(32);
        let m = Exponent::from_integer(2);
        let c1 = q("1/2");
        let out = regu_refine(&a, &IdentityRule, m, &c1).unwrap();
        assert_eq!(out.b, a);
        assert_eq!(out.steps.len(), 1);

        let out = regu_refine(&a, &DropLargestRule, m, &c1).unwrap();
        assert!(out.size_condition(a.len(), &c1));
        assert!(out.energy_condition(m).unwrap().passed());

        let out = regu_refine(&a, &PopularSumRule { c: a.clone() }, m, &c1).unwrap();
        assert!(out.size_condition(a.len(), &c1));
        assert!(out.energy_condition(m).unwrap().passed());
    }

    struct HalvingRule;

    impl RefinementRule for HalvingRule {
        fn name(&self) -> String {
            "halving".into()
        }

        fn apply(&self, x: &FiniteSet, _eps: &Real) -> Result<FiniteSet> {
            let keep = x.len() / 2;
            let mut i = 0;
            Ok(x.filter(|_| {
                i += 1;
                i <= keep
            }))
        }
    }

    #[test]
    fn violating_rule_is_rejected() {
        let a = ap(32);
        let err = regu_refine(&a, &HalvingRule, Exponent::from_integer(2), &q("1/2")).unwrap_err();
        assert!(matches!(err, Error::RuleViolation { step: 0, kept: 16, size: 32 }), "{err}");
    }
}
