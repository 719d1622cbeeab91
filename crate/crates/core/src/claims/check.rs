use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::popular::{
    class_keys_well_defined, class_solution_bound, equiv_classes, popular_set, refined_lower_bound, refined_set,
};
use super::quantity::{Mono, Side};
use super::{ClaimId, ClaimInputs, ClaimReport, ConditionKind, Direction, PassMode, SideCondition, Verdict};
use crate::convexfn::ConvexFn;
use crate::energy::{dominant_class, energy, mixed_sum, Exponent};
use crate::error::{Error, Result};
use crate::generators::verify_convexity;
use crate::incidence::{count_grid_incidences, count_solutions_qr, lines_from, ratio_quadruple_count};
use crate::numeric::{format_rational, BackendKind, Real, Scalar};
use crate::regularize::{decomp, verify_certificate};
use crate::set::{rep_function, FiniteSet, SetOp};
use crate::Exec;

/// Above this size the exact popular-set pipeline of `prop_energy_general`
/// is skipped; the triple enumeration is quartic.
pub const PIPELINE_LIMIT: usize = 32;

/// Size limit for the octuple count of `ratio_count`.
pub const RATIO_CLAIM_GUARD: usize = 40;

use ConditionKind::{ConstantFree, Exact, Required};

/// Evaluates `claim` on `inputs`.
///
/// Defaults for absent inputs: `B = V = U = A`, `C = A - B` (`lem_count`),
/// `C = A` (`prop_energy_general`, `holder_mixed`), `C = AB + A`
/// (`thm_incidence`), `f = g = square`, `k = 2`, `c1 = 1/2`, `lambda = 1`.
/// Without `Q, R` the multiplicative claims use `Q = AA`, `R = A` in ratio
/// form (`a = ab / b`) and the convex claim uses `Q = A + A`, `R = A`
/// (`a = (a + b) - b`); `T` defaults to the least representation count
/// over `A`.
///
/// A violated hypothesis is an [`Error::SideCondition`] naming the
/// inequality.
pub fn check(claim: ClaimId, inputs: &ClaimInputs) -> Result<ClaimReport> {
    let mut b = Builder::new(claim, inputs);
    let (lhs, rhs, dir) = match claim {
        ClaimId::LemCount => lem_count(inputs, &mut b)?,
        ClaimId::LemE3 => lem_e3(inputs, &mut b)?,
        ClaimId::LemE3Convex => lem_e3_convex(inputs, &mut b)?,
        ClaimId::CorE3Product => cor_e3_product(inputs, &mut b)?,
        ClaimId::PropEnergyGeneral => prop_energy_general(inputs, &mut b)?,
        ClaimId::ThmMain38 => thm_main_38(inputs, &mut b)?,
        ClaimId::ThmMainDiff => thm_main_diff(inputs, &mut b)?,
        ClaimId::CorConvex4938 => cor_convex_49_38(inputs, &mut b)?,
        ClaimId::CorConvexDiff => cor_convex_diff(inputs, &mut b)?,
        ClaimId::CorSumprodAsym => cor_sumprod_asym(inputs, &mut b)?,
        ClaimId::CorAAplus1 => cor_a_aplus1(inputs, &mut b)?,
        ClaimId::ThmIncidence => thm_incidence(inputs, &mut b)?,
        ClaimId::ThmABplusA => thm_ab_plus_a(inputs, &mut b)?,
        ClaimId::CsSandwich => cs_sandwich(inputs, &mut b)?,
        ClaimId::HolderMixed => holder_mixed(inputs, &mut b)?,
        ClaimId::E32Convex => e32_convex(inputs, &mut b)?,
        ClaimId::RatioCount => ratio_count(inputs, &mut b)?,
    };
    Ok(b.finish(lhs, rhs, dir))
}

struct Builder {
    claim: ClaimId,
    label: String,
    n: usize,
    inputs: BTreeMap<String, String>,
    log_sizes: BTreeMap<String, f64>,
    sides: Vec<SideCondition>,
    details: BTreeMap<String, String>,
}

impl Builder {
    fn new(claim: ClaimId, inputs: &ClaimInputs) -> Self {
        Builder {
            claim,
            label: inputs.label.clone(),
            n: inputs.a.len(),
            inputs: BTreeMap::new(),
            log_sizes: BTreeMap::new(),
            sides: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.insert(key.into(), value.to_string());
    }

    fn set(&mut self, name: &str, s: &FiniteSet) {
        self.inputs.insert(format!("|{name}|"), s.len().to_string());
        self.log_sizes.insert(name.into(), (s.len().max(1) as f64).ln());
    }

    fn detail(&mut self, key: &str, value: impl ToString) {
        self.details.insert(key.into(), value.to_string());
    }

    fn side(&mut self, c: SideCondition) {
        self.sides.push(c);
    }

    /// Records a hypothesis and rejects the check if it fails.
    fn require(&mut self, c: SideCondition) -> Result<()> {
        let ok = c.passed();
        let msg = format!("{} (lhs={} rhs={})", c.name, c.lhs, c.rhs);
        self.sides.push(c);
        if ok {
            Ok(())
        } else {
            Err(Error::SideCondition(msg))
        }
    }

    fn finish(self, lhs: Side, rhs: Side, dir: Direction) -> ClaimReport {
        let (holds, log_margin) = match dir {
            Direction::AtLeast => (rhs.le(&lhs).holds, lhs.ln - rhs.ln),
            Direction::AtMost => (lhs.le(&rhs).holds, rhs.ln - lhs.ln),
        };
        let pass_mode = self.claim.pass_mode();
        let verdict = match pass_mode {
            PassMode::Trend => Verdict::Trend,
            PassMode::Exact => {
                let sides_ok = self.sides.iter().filter(|c| c.kind == Exact).all(SideCondition::passed);
                if holds == Some(true) && sides_ok {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };
        ClaimReport {
            claim: self.claim,
            family: self.label,
            n: self.n,
            inputs: self.inputs,
            ratio: lhs.ratio(&rhs),
            lhs: lhs.value,
            rhs: rhs.value,
            direction: dir,
            log_margin,
            log_sizes: self.log_sizes,
            holds,
            pass_mode,
            side_conditions: self.sides,
            details: self.details,
            verdict,
        }
    }
}

type Outcome = (Side, Side, Direction);

fn size(x: &FiniteSet) -> BigInt {
    BigInt::from(x.len())
}

fn e_int(a: &FiniteSet, b: &FiniteSet, k: i64, op: SetOp) -> Result<BigInt> {
    let e = energy(a, b, Exponent::from_integer(k), op)?;
    Ok(BigInt::from(e.exact().expect("integer moment")))
}

fn square() -> ConvexFn {
    ConvexFn::Square
}

/// `x` on the backend of `like`, so that the two can be combined.
fn align(x: &FiniteSet, like: &FiniteSet) -> Result<FiniteSet> {
    if like.backend() == BackendKind::Tolerant && x.backend() == BackendKind::Exact {
        x.to_tolerant(like.tolerance())
    } else {
        Ok(x.clone())
    }
}

fn combine_aligned(x: &FiniteSet, op: SetOp, y: &FiniteSet) -> Result<FiniteSet> {
    align(x, y)?.combine(op, &align(y, x)?)
}

fn reciprocal(x: &FiniteSet) -> Result<FiniteSet> {
    let one = Scalar::int(1);
    FiniteSet::from_values(x.iter().map(|v| one.div(v)).collect::<Result<Vec<_>>>()?)
}

fn without_zero(x: &FiniteSet) -> FiniteSet {
    x.filter(|v| !v.is_zero())
}

fn int_le(name: &str, kind: ConditionKind, lhs: BigInt, rhs: BigInt) -> SideCondition {
    SideCondition::flag(name, kind, lhs <= rhs, &lhs, &rhs)
}

fn fn_label(f: &ConvexFn) -> String {
    f.to_string()
}

/// The data `r_{Q op R}(a) >= T` used by the incidence-based claims.
struct QrData {
    q: FiniteSet,
    r: FiniteSet,
    op: SetOp,
    t: u64,
}

fn qr_data(inputs: &ClaimInputs, multiplicative: bool, b: &mut Builder) -> Result<QrData> {
    let a = &inputs.a;
    let (q, r, op) = match (&inputs.q, &inputs.r) {
        (Some(q), Some(r)) => {
            let op = inputs
                .qr_op
                .unwrap_or(if multiplicative { SetOp::Prod } else { SetOp::Diff });
            (q.clone(), r.clone(), op)
        }
        (None, None) if multiplicative => {
            if a.contains_zero() {
                return Err(Error::ZeroElement("the default Q = AA, R = A construction"));
            }
            (a.prodset(a)?, a.clone(), SetOp::Ratio)
        }
        (None, None) => (a.sumset(a)?, a.clone(), SetOp::Diff),
        _ => return Err(Error::InvalidParameter("Q and R must be given together".into())),
    };
    let allowed = if multiplicative {
        matches!(op, SetOp::Prod | SetOp::Ratio)
    } else {
        op == SetOp::Diff
    };
    if !allowed {
        return Err(Error::InvalidParameter(format!("representation data cannot use {op} here")));
    }
    let rep = rep_function(&q, op, &r)?;
    let least = a.iter().map(|x| rep.get(x)).min().unwrap_or(0);
    let t = inputs.t.unwrap_or(least);
    b.set("Q", &q);
    b.set("R", &r);
    b.input("qr_op", op);
    b.input("T", t);
    b.require(SideCondition::flag("T >= 1", Required, t >= 1, t, 1))?;
    b.require(SideCondition::flag(
        format!("r_(Q {op} R)(a) >= T for all a in A"),
        Required,
        least >= t,
        least,
        t,
    ))?;
    Ok(QrData { q, r, op, t })
}

// ---------------------------------------------------------------------------

fn lem_count(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let b = inputs.b.clone().unwrap_or_else(|| a.clone());
    let c = match &inputs.c {
        Some(c) => c.clone(),
        None => a.diffset(&b)?,
    };
    bd.set("A", a);
    bd.set("B", &b);
    bd.set("C", &c);
    let d = qr_data(inputs, true, bd)?;
    let rep = rep_function(a, SetOp::Diff, &b)?;
    let count: u64 = c.iter().map(|x| rep.get(x)).sum();
    let (nq, nr, nb, nc) = (size(&d.q), size(&d.r), size(&b), size(&c));
    bd.side(int_le(
        "|R||C| <= (|Q||B|)^2",
        ConstantFree,
        &nr * &nc,
        (&nq * &nb).pow(2),
    ));
    // the first step of the proof: each a contributes at least T products
    let r_prod = if d.op == SetOp::Ratio { reciprocal(&d.r)? } else { d.r.clone() };
    let lifted = count_solutions_qr(&d.q, &r_prod, &b, &c)?;
    bd.side(int_le(
        "T |{c = a - b}| <= |{c = qr - b}|",
        Exact,
        BigInt::from(d.t) * BigInt::from(count),
        BigInt::from(lifted),
    ));
    let rhs = Mono::one()
        .times_frac(&nq * &nr * &nb * &nc, Exponent::new(2, 3))
        .times(d.t, -1);
    Ok((Side::exact(count), Side::mono(rhs), Direction::AtMost))
}

fn lem_e3(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let b = inputs.b.clone().unwrap_or_else(|| a.clone());
    bd.set("A", a);
    bd.set("B", &b);
    let d = qr_data(inputs, true, bd)?;
    let (na, nq, nr, nb) = (size(a), size(&d.q), size(&d.r), size(&b));
    bd.require(int_le("|R||A| <= |Q|^2|B|", Required, &nr * &na, nq.pow(2) * &nb))?;
    // the condition the proof actually verifies, recorded next to the stated one
    bd.side(int_le("|Q||A| <= |R|^2|B|", ConstantFree, &nq * &na, nr.pow(2) * &nb));
    let lhs = e_int(a, &b, 3, SetOp::Diff)?;
    let rhs = Mono::one()
        .times(nq, 2)
        .times(nr, 2)
        .times(nb, 2)
        .times(d.t, -3)
        .times_log(a.len() as u64, 1);
    Ok((Side::exact(lhs), Side::mono(rhs), Direction::AtMost))
}

fn lem_e3_convex(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let f = inputs.f.clone().unwrap_or_else(square);
    let fa = a.image(&f)?;
    let b = align(&inputs.b.clone().unwrap_or_else(|| a.clone()), &fa)?;
    bd.input("f", fn_label(&f));
    bd.set("A", a);
    bd.set("B", &b);
    let d = qr_data(inputs, false, bd)?;
    let (na, nq, nr, nb) = (size(a), size(&d.q), size(&d.r), size(&b));
    bd.require(SideCondition::flag("|Q| >= |R|", Required, nq >= nr, &nq, &nr))?;
    bd.side(int_le("|R||A| <= |Q|^2|B|", ConstantFree, &nr * &na, nq.pow(2) * &nb));
    let lhs = e_int(&fa, &b, 3, SetOp::Diff)?;
    let rhs = Mono::one()
        .times(nq, 2)
        .times(nr, 2)
        .times(nb, 2)
        .times(d.t, -3)
        .times_log(a.len() as u64, 1);
    Ok((Side::exact(lhs), Side::mono(rhs), Direction::AtMost))
}

fn cor_e3_product(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let f = inputs.f.clone().unwrap_or_else(square);
    let v = inputs.v.clone().unwrap_or_else(|| a.clone());
    let c1 = inputs.c1.clone().unwrap_or_else(|| BigRational::new(1.into(), 2.into()));
    bd.input("f", fn_label(&f));
    bd.input("c1", format_rational(&c1));
    bd.input("k", 3);
    bd.set("A", a);
    bd.set("V", &v);
    let cert = decomp(a, &v, SetOp::Diff, Exponent::from_integer(3), &c1)?;
    let report = verify_certificate(&cert);
    let failed: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
    bd.side(SideCondition::flag(
        "decomposition certificate verifies",
        Exact,
        report.passed(),
        format!("{} failed checks", failed.len()),
        0,
    ));
    if !failed.is_empty() {
        bd.detail("certificate failures", failed.join("; "));
    }
    let fc = cert.c.image(&f)?;
    let u = align(&inputs.u.clone().unwrap_or_else(|| v.clone()), &fc)?;
    bd.set("U", &u);
    bd.set("B", &cert.b);
    bd.set("C", &cert.c);
    bd.detail("t", cert.t);
    bd.detail("|D_t|", cert.d_t.len());
    bd.detail("iterations", cert.iterations);
    bd.side(int_le("|A| <= |U||V|", ConstantFree, size(a), size(&u) * size(&v)));
    let lhs = e_int(&cert.b, &v, 3, SetOp::Diff)? * e_int(&fc, &u, 3, SetOp::Diff)?;
    let rhs = Mono::one().times(size(&u), 2).times(size(&v), 2).times(size(a), 3);
    Ok((Side::exact(lhs), Side::mono(rhs), Direction::AtMost))
}

fn prop_energy_general(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let c = inputs.c.clone().unwrap_or_else(|| a.clone());
    let k = inputs.k.unwrap_or_else(|| Exponent::from_integer(2));
    bd.input("k", k);
    bd.set("A", a);
    bd.set("C", &c);
    let rep_a = rep_function(a, SetOp::Diff, a)?;
    let class = dominant_class(&rep_a, k)?;
    let (d, delta) = (&class.members, class.t);
    bd.set("D", d);
    bd.input("Delta", delta);
    let a_plus_c = a.sumset(&c)?;
    bd.set("A+C", &a_plus_c);
    let e3a = e_int(a, a, 3, SetOp::Diff)?;
    let e3c = e_int(&c, &c, 3, SetOp::Diff)?;
    let e3ad = e_int(a, d, 3, SetOp::Diff)?;
    let e3cs = e_int(&c, &a_plus_c, 3, SetOp::Diff)?;
    let lhs = Mono::one().times(size(d), 9).times(delta, 12);
    let rhs = Mono::one().times(size(&a_plus_c), 6)
        .times(e3a.clone(), 4)
        .times(e3c.clone(), 2)
        .times(e3ad, 1)
        .times(e3cs, 2)
        .times(size(&c), -18)
        .times(size(a), -3);

    let rep_c = rep_function(&c, SetOp::Diff, &c)?;
    let mixed = BigInt::from(mixed_sum(&rep_a, &rep_c));
    bd.side(int_le(
        "(sum_t r_(A-A)(t)^2 r_(C-C)(t))^3 <= E3(A)^2 E3(C)",
        Exact,
        mixed.pow(3),
        e3a.pow(2) * &e3c,
    ));
    if a.len() <= PIPELINE_LIMIT && c.len() <= PIPELINE_LIMIT && a.len() >= 2 {
        popular_pipeline(a, &c, k, bd)?;
    } else {
        bd.detail("pipeline", format!("skipped above |A|, |C| = {PIPELINE_LIMIT}"));
    }
    Ok((Side::mono(lhs), Side::mono(rhs), Direction::AtMost))
}

/// The exact counting steps of the proof on a small instance.
fn popular_pipeline(a: &FiniteSet, c: &FiniteSet, k: Exponent, bd: &mut Builder) -> Result<()> {
    let p = popular_set(a, c)?;
    let refined = refined_set(a, c, &p)?;
    bd.set("P", &p);
    bd.set("A'", &refined);
    bd.side(SideCondition::from_decision(
        "|A'| >= (1 - 2/L(|A|))|A|",
        Exact,
        &Real::from(refined.len()).ge(&refined_lower_bound(a.len())),
    ));
    let base = if refined.is_empty() { a } else { &refined };
    let d = dominant_class(&rep_function(base, SetOp::Diff, base)?, k)?;
    let table = equiv_classes(a, c, &d.members, &p)?;
    let second = BigInt::from(table.second_moment.clone());
    let classes = BigInt::from(table.len());
    let total = BigInt::from(table.total);
    bd.detail("N", &total);
    bd.detail("classes", &classes);
    bd.side(SideCondition::flag(
        "class keys are translation invariant",
        Exact,
        class_keys_well_defined(a, c)?,
        "keys",
        "invariant",
    ));
    bd.side(int_le("N^2 <= |classes| sum |class|^2", Exact, total.pow(2), &classes * &second));
    let mixed = BigInt::from(mixed_sum(
        &rep_function(a, SetOp::Diff, a)?,
        &rep_function(c, SetOp::Diff, c)?,
    ));
    bd.side(int_le("sum |class|^2 <= sum_t r_(A-A)(t)^2 r_(C-C)(t)", Exact, second, mixed));
    bd.side(int_le(
        "|classes| <= |{(d, s1, s2) : d = s1 - s2}|",
        Exact,
        classes,
        BigInt::from(class_solution_bound(a, c, &d.members, &p)?),
    ));
    bd.side(int_le(
        "|C||D|t <= 2N",
        ConstantFree,
        size(c) * size(&d.members) * BigInt::from(d.t),
        total * 2,
    ));
    Ok(())
}

fn images(inputs: &ClaimInputs, bd: &mut Builder) -> Result<(FiniteSet, FiniteSet, FiniteSet, FiniteSet)> {
    let a = inputs.a.clone();
    let b = inputs.b.clone().unwrap_or_else(|| a.clone());
    let f = inputs.f.clone().unwrap_or_else(square);
    let g = inputs.g.clone().unwrap_or_else(|| f.clone());
    bd.input("f", fn_label(&f));
    bd.input("g", fn_label(&g));
    bd.set("A", &a);
    bd.set("B", &b);
    let fa = a.image(&f)?;
    let gb = b.image(&g)?;
    Ok((a, b, fa, gb))
}

fn thm_main_38(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let (a, b, fa, gb) = images(inputs, bd)?;
    let s1 = a.sumset(&b)?;
    let s2 = combine_aligned(&fa, SetOp::Sum, &gb)?;
    bd.set("A+B", &s1);
    bd.set("f(A)+g(B)", &s2);
    let lhs = Mono::one().times(size(&s1), 38).times(size(&s2), 38);
    let rhs = Mono::one().times(size(&a), 49).times(size(&b), 49);
    Ok((Side::mono(lhs), Side::mono(rhs), Direction::AtLeast))
}

fn thm_main_diff(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let (a, b, fa, gb) = images(inputs, bd)?;
    let sign = inputs.sign.unwrap_or(SetOp::Sum);
    if !matches!(sign, SetOp::Sum | SetOp::Diff) {
        return Err(Error::InvalidParameter(format!("sign must be sum or diff, got {sign}")));
    }
    bd.input("sign", sign);
    let s1 = a.combine(sign, &b)?;
    let s2 = combine_aligned(&fa, sign, &gb)?;
    let (da, db) = (a.diffset(&a)?, b.diffset(&b)?);
    let (dfa, dgb) = (fa.diffset(&fa)?, gb.diffset(&gb)?);
    let lhs = Mono::one().times(size(&a), 39).times(size(&b), 39);
    let rhs = Mono::one().times(size(&s1), 20)
        .times(size(&s2), 20)
        .times(size(&da), 5)
        .times(size(&db), 5)
        .times(size(&dfa), 5)
        .times(size(&dgb), 5);

    // the 12/7-energy decomposition of the four sets
    let k = Exponent::new(12, 7);
    let mut prod = Mono::one();
    for (name, x) in [("A", &a), ("B", &b), ("f(A)", &fa), ("g(B)", &gb)] {
        let class = dominant_class(&rep_function(x, SetOp::Diff, x)?, k)?;
        bd.detail(&format!("D({name})"), format!("|D|={} t={}", class.size(), class.t));
        prod = prod.times(class.size(), 7).times(class.t, 12);
    }
    let sums = a.sumset(&b)?;
    let fsums = combine_aligned(&fa, SetOp::Sum, &gb)?;
    let bound = Mono::one().times(size(&sums), 20)
        .times(size(&fsums), 20)
        .times(size(&a), 9)
        .times(size(&b), 9);
    bd.side(SideCondition::from_decision(
        "prod |D_i|^7 t_i^12 <= |A+B|^20 |f(A)+g(B)|^20 |A|^9 |B|^9",
        ConstantFree,
        &Side::mono(prod).le(&Side::mono(bound)),
    ));
    Ok((Side::mono(lhs), Side::mono(rhs), Direction::AtMost))
}

fn cor_convex_49_38(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let f = inputs.f.clone().unwrap_or_else(square);
    bd.input("f", fn_label(&f));
    bd.set("A", a);
    let fa = a.image(&f)?;
    let mixed = combine_aligned(a, SetOp::Sum, &fa)?;
    bd.set("A+f(A)", &mixed);
    let rhs = Side::mono(Mono::one().times_frac(size(a), Exponent::new(49, 38)));
    let either = a.sumset(a)?.len() + fa.sumset(&fa)?.len();
    bd.side(SideCondition::from_decision(
        "|A+A| + |f(A)+f(A)| >= |A|^(49/38)",
        ConstantFree,
        &rhs.le(&Side::exact(either)),
    ));
    Ok((Side::exact(mixed.len()), rhs, Direction::AtLeast))
}

fn cor_convex_diff(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let f = inputs.f.clone().unwrap_or_else(square);
    bd.input("f", fn_label(&f));
    bd.set("A", a);
    let fa = a.image(&f)?;
    let (da, dfa) = (a.diffset(a)?, fa.diffset(&fa)?);
    bd.set("A-A", &da);
    bd.set("f(A)-f(A)", &dfa);
    let lhs = Mono::one().times(size(&da), 5).times(size(&dfa), 5);
    let rhs = Mono::one().times(size(a), 13);
    Ok((Side::mono(lhs), Side::mono(rhs), Direction::AtLeast))
}

fn cor_sumprod_asym(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let b = inputs.b.clone().unwrap_or_else(|| a.clone());
    bd.set("A", a);
    bd.set("B", &b);
    let (prod, sum) = (a.prodset(&b)?, a.sumset(&b)?);
    bd.set("AB", &prod);
    bd.set("A+B", &sum);
    let lhs = Mono::one().times(size(&prod), 38).times(size(&sum), 38);
    let rhs = Mono::one().times(size(a), 49).times(size(&b), 49);
    Ok((Side::mono(lhs), Side::mono(rhs), Direction::AtLeast))
}

fn cor_a_aplus1(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let b = inputs.b.clone().unwrap_or_else(|| a.clone());
    bd.set("A", a);
    bd.set("B", &b);
    let one = Scalar::int(1);
    let shift = |x: &FiniteSet| x.affine(&one, &one);
    let ab = a.prodset(&b)?;
    let shifted = shift(a)?.prodset(&shift(&b)?)?;
    bd.set("AB", &ab);
    bd.set("(A+1)(B+1)", &shifted);
    let single = a.prodset(&shift(a)?)?;
    bd.set("A(A+1)", &single);
    bd.side(SideCondition::from_decision(
        "|A(A+1)| >= |A|^(49/38)",
        ConstantFree,
        &Side::mono(Mono::one().times_frac(size(a), Exponent::new(49, 38))).le(&Side::exact(single.len())),
    ));
    let lhs = Side::exact(ab.len() + shifted.len());
    let rhs = Mono::one()
        .times_frac(size(a), Exponent::new(49, 76))
        .times_frac(size(&b), Exponent::new(49, 76));
    Ok((lhs, Side::mono(rhs), Direction::AtLeast))
}

fn thm_incidence(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let b = inputs.b.clone().unwrap_or_else(|| a.clone());
    let default_c = inputs.c.is_none();
    let c = match &inputs.c {
        Some(c) => c.clone(),
        None => a.prodset(&b)?.sumset(a)?,
    };
    bd.set("A", a);
    bd.set("B", &b);
    bd.set("C", &c);
    let lines = lines_from(a)?;
    let incidences = count_grid_incidences(&b, &c, &lines, Exec::default())?;
    if default_c {
        bd.side(int_le(
            "|A|^2|B| <= I(B x (AB+A), L)",
            Exact,
            size(a).pow(2) * size(&b),
            BigInt::from(incidences),
        ));
    }
    let e4 = e_int(a, a, 4, SetOp::Ratio)?;
    bd.detail("E4x(A)", &e4);
    let p = Exponent::new;
    let (na, nb, nc) = (Real::from(a.len()), Real::from(b.len()), Real::from(c.len()));
    let rhs = Real::rat(BigRational::from_integer(e4)).pow(p(1, 12))
        * na.clone().pow(p(7, 6))
        * nb.pow(p(2, 3))
        * nc.clone().pow(p(1, 2))
        + na.pow(p(2, 1)) * nc.pow(p(1, 2));
    Ok((Side::exact(incidences), Side::real(rhs), Direction::AtMost))
}

fn thm_ab_plus_a(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let b = inputs.b.clone().unwrap_or_else(|| a.clone());
    let lambda = inputs.lambda.clone().unwrap_or_else(|| Scalar::int(1));
    bd.set("A", a);
    bd.set("B", &b);
    bd.input("lambda", &lambda);
    let ab_a = a.prodset(&b)?.sumset(a)?;
    bd.set("AB+A", &ab_a);
    bd.detail("|A|/|B|", BigRational::new(size(a), size(&b).max(BigInt::one())));
    // multiplicative energies are taken over A without 0
    let a0 = without_zero(a);
    if a0.is_empty() {
        return Err(Error::TooSmall("AB+A needs a nonzero element".into()));
    }
    let e3 = e_int(&a0, &a0, 3, SetOp::Ratio)?;
    let e4 = e_int(&a0, &a0, 4, SetOp::Ratio)?;
    bd.side(int_le("E4x(A) <= |A| E3x(A)", Exact, e4.clone(), size(&a0) * &e3));
    let bound1 = Mono::one().times_frac(size(&a0), Exponent::new(7, 3));
    let bound1_rhs = Mono::of(size(&ab_a)).times_frac(e4, Exponent::new(1, 6));
    bd.side(SideCondition::from_decision(
        "|A|^(7/3) <= |AB+A| E4x(A)^(1/6)",
        ConstantFree,
        &Side::mono(bound1).le(&Side::mono(bound1_rhs)),
    ));
    let dilated = a.sumset(&a.affine(&lambda, &Scalar::int(0))?)?;
    bd.set("A+lambda A", &dilated);
    bd.side(SideCondition::from_decision(
        "E3x(A)^11/|A|^14 <= |A+lambda A|^19",
        ConstantFree,
        &Side::mono(Mono::one().times(e3, 11).times(size(a), -14))
            .le(&Side::mono(Mono::one().times(size(&dilated), 19))),
    ));
    let rhs = Mono::one().times_frac(size(a), Exponent::new(129, 85));
    Ok((Side::exact(ab_a.len()), Side::mono(rhs), Direction::AtLeast))
}

fn cs_sandwich(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let x = &inputs.a;
    let y = inputs.b.clone().unwrap_or_else(|| x.clone());
    bd.set("X", x);
    bd.set("Y", &y);
    let exy = e_int(x, &y, 2, SetOp::Diff)?;
    let ex = e_int(x, x, 2, SetOp::Diff)?;
    let ey = e_int(&y, &y, 2, SetOp::Diff)?;
    let sums = x.sumset(&y)?;
    bd.set("X+Y", &sums);
    bd.side(int_le(
        "|X|^2|Y|^2 <= E2(X,Y)|X+Y|",
        Exact,
        (size(x) * size(&y)).pow(2),
        &exy * size(&sums),
    ));
    Ok((Side::exact(exy.pow(2)), Side::exact(ex * ey), Direction::AtMost))
}

fn holder_mixed(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let c = inputs.c.clone().unwrap_or_else(|| a.clone());
    bd.set("A", a);
    bd.set("C", &c);
    let mixed = BigInt::from(mixed_sum(
        &rep_function(a, SetOp::Diff, a)?,
        &rep_function(&c, SetOp::Diff, &c)?,
    ));
    bd.detail("sum_t r_(A-A)(t)^2 r_(C-C)(t)", &mixed);
    let e3a = e_int(a, a, 3, SetOp::Diff)?;
    let e3c = e_int(&c, &c, 3, SetOp::Diff)?;
    Ok((Side::exact(mixed.pow(3)), Side::exact(e3a.pow(2) * e3c), Direction::AtMost))
}

fn e32_convex(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    let b = align(&inputs.b.clone().unwrap_or_else(|| a.clone()), a)?;
    bd.set("A", a);
    bd.set("B", &b);
    let convex = a.len() >= 3 && verify_convexity(a)?;
    bd.require(SideCondition::flag("A is a convex set", Required, convex, convex, true))?;
    let e = energy(a, &b, Exponent::new(3, 2), SetOp::Diff)?;
    let sums = a.sumset(&b)?;
    bd.set("A+B", &sums);
    let rhs = Mono::one().times_frac(size(&sums), Exponent::new(3, 2));
    Ok((Side::real(e.as_real()), Side::mono(rhs), Direction::AtMost))
}

fn ratio_count(inputs: &ClaimInputs, bd: &mut Builder) -> Result<Outcome> {
    let a = &inputs.a;
    bd.set("A", a);
    let count = ratio_quadruple_count(a, RATIO_CLAIM_GUARD)?;
    let rhs = Mono::one().times(size(a), 6).times_log(a.len() as u64, 1);
    Ok((Side::exact(BigInt::from(count)), Side::mono(rhs), Direction::AtMost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::FamilySpec;

    fn ap(n: usize) -> FiniteSet {
        FamilySpec::ap(1, 1).generate(n).unwrap()
    }

    fn run(claim: ClaimId, inputs: ClaimInputs) -> ClaimReport {
        check(claim, &inputs).unwrap_or_else(|e| panic!("{claim}: {e}"))
    }

    #[test]
    fn every_claim_runs_on_a_small_progression() {
        for &claim in ClaimId::ALL {
            let a = match claim {
                ClaimId::E32Convex => FamilySpec::convex(ConvexFn::Square).generate(8).unwrap(),
                _ => ap(8),
            };
            let r = run(claim, ClaimInputs::new(a));
            assert!(r.log_margin.is_finite(), "{claim}");
            assert!(r.exact_failures().is_empty(), "{claim}: {:?}", r.exact_failures());
            assert_eq!(r.pass_mode == PassMode::Exact, r.verdict != Verdict::Trend);
        }
    }

    #[test]
    fn exact_claims_pass() {
        let a = FiniteSet::from_ints(&[0, 1, 3, 7, 12]);
        let b = FiniteSet::from_ints(&[2, 5, 6]);
        let r = run(ClaimId::CsSandwich, ClaimInputs::new(a.clone()).with_b(b.clone()));
        assert_eq!(r.verdict, Verdict::Pass);
        let r = run(ClaimId::HolderMixed, ClaimInputs::new(a).with_c(b));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn count_lemma_with_ratio_data() {
        let a = FamilySpec::gp(2, 2).generate(6).unwrap();
        let r = run(ClaimId::LemCount, ClaimInputs::new(a.clone()));
        assert_eq!(r.inputs["T"], "6");
        assert!(r.side("T |{c = a - b}| <= |{c = qr - b}|").unwrap().passed());
        // with C = A - B the count is |A||B|
        assert_eq!(r.lhs.to_string(), "36");
    }

    #[test]
    fn e3_lemma_side_conditions() {
        let a = FamilySpec::gp(2, 2).generate(16).unwrap();
        let r = run(ClaimId::LemE3, ClaimInputs::new(a.clone()));
        assert_eq!(r.inputs["T"], "16");
        assert!(r.side("|R||A| <= |Q|^2|B|").unwrap().passed());
        assert!(r.side("|Q||A| <= |R|^2|B|").is_some());
        // demanding more than the data gives is rejected by name
        let bad = ClaimInputs::new(a.clone()).with_qrt(a.prodset(&a).unwrap(), a.clone(), SetOp::Ratio, 17);
        let err = check(ClaimId::LemE3, &bad).unwrap_err();
        assert!(err.to_string().contains("r_(Q ratio R)(a) >= T"), "{err}");
        assert!(check(ClaimId::LemE3, &ClaimInputs::new(FiniteSet::from_ints(&[0, 1, 2]))).is_err());
    }

    #[test]
    fn convex_lemma_defaults() {
        let r = run(ClaimId::LemE3Convex, ClaimInputs::new(ap(10)).with_f(ConvexFn::Exp));
        assert_eq!(r.inputs["T"], "10");
        assert!(r.side("|Q| >= |R|").unwrap().passed());
    }

    #[test]
    fn headline_exponents() {
        let r = run(ClaimId::ThmMain38, ClaimInputs::new(ap(16)));
        // |A+A| = 31
        assert_eq!(r.inputs["|A+B|"], "31");
        assert!(r.log_margin > 0.0);
        let r = run(ClaimId::CorConvex4938, ClaimInputs::new(ap(16)));
        assert_eq!(r.lhs.to_string(), r.inputs["|A+f(A)|"]);
        assert_eq!(r.holds, Some(true));
        assert!(!r.rhs.is_exact());
    }

    #[test]
    fn twelve_sevenths_classes_are_reported() {
        let r = run(ClaimId::ThmMainDiff, ClaimInputs::new(ap(12)));
        for key in ["D(A)", "D(B)", "D(f(A))", "D(g(B))"] {
            assert!(r.details.contains_key(key), "{key}");
        }
    }

    #[test]
    fn pipeline_runs_below_the_limit() {
        let a = FiniteSet::from_ints(&[0, 1, 3, 4, 8, 9, 11, 15]);
        let r = run(ClaimId::PropEnergyGeneral, ClaimInputs::new(a).with_c(FiniteSet::from_ints(&[0, 2, 3, 7])));
        assert!(r.side("N^2 <= |classes| sum |class|^2").unwrap().passed());
        assert!(r.side("class keys are translation invariant").unwrap().passed());
        let r = run(ClaimId::PropEnergyGeneral, ClaimInputs::new(ap(40)));
        assert!(r.details["pipeline"].starts_with("skipped"));
    }

    #[test]
    fn incidence_lower_bound_is_exact() {
        let a = FamilySpec::gp(1, 2).generate(6).unwrap();
        let r = run(ClaimId::ThmIncidence, ClaimInputs::new(a));
        assert!(r.side("|A|^2|B| <= I(B x (AB+A), L)").unwrap().passed());
        assert!(check(ClaimId::ThmIncidence, &ClaimInputs::new(FiniteSet::from_ints(&[0, 1, 2]))).is_err());
    }

    #[test]
    fn convexity_is_required() {
        let err = check(ClaimId::E32Convex, &ClaimInputs::new(ap(8))).unwrap_err();
        assert!(matches!(err, Error::SideCondition(_)));
    }

    #[test]
    fn ratio_count_small() {
        let r = run(ClaimId::RatioCount, ClaimInputs::new(FiniteSet::from_ints(&[0, 1])));
        assert_eq!(r.lhs.to_string(), "24");
    }
}
