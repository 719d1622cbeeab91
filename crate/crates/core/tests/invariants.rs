use energylab::claims::{check, ClaimId, ClaimInputs, Verdict};
use energylab::energy::{energy, sandwich, Exponent};
use energylab::numeric::parse_rational;
use energylab::regularize::{decomp, verify_certificate, DecompositionCertificate};
use energylab::set::rep_function_with;
use energylab::{Exec, FiniteSet, SetOp};
use num_bigint::BigUint;
use proptest::prelude::*;

fn arb_set(max: usize) -> impl Strategy<Value = FiniteSet> {
    prop::collection::vec(-60i64..60, 1..max).prop_map(|v| FiniteSet::from_ints(&v))
}

fn e2(a: &FiniteSet, b: &FiniteSet, op: SetOp) -> BigUint {
    energy(a, b, Exponent::from_integer(2), op).unwrap().exact().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_translation_invariant(a in arb_set(20), shift in -1000i64..1000) {
        let moved = FiniteSet::from_ints(&a.small_ints().unwrap().iter().map(|x| x + shift).collect::<Vec<_>>());
        prop_assert_eq!(e2(&a, &a, SetOp::Diff), e2(&moved, &moved, SetOp::Diff));
    }

    #[test]
    fn additive_energies_agree_for_symmetric_pairs(a in arb_set(20)) {
        // E(A, A) counts a1 + a2 = a3 + a4, i.e. a1 - a3 = a4 - a2
        prop_assert_eq!(e2(&a, &a, SetOp::Sum), e2(&a, &a, SetOp::Diff));
    }

    #[test]
    fn energy_is_between_the_trivial_bounds(a in arb_set(20), b in arb_set(20)) {
        let (n, m) = (a.len() as u64, b.len() as u64);
        let e = e2(&a, &b, SetOp::Sum);
        prop_assert!(e >= BigUint::from(n * m));
        prop_assert!(e <= BigUint::from(n * m * n.min(m)));
    }

    #[test]
    fn parallel_histograms_match_sequential(a in arb_set(30), b in arb_set(30)) {
        for op in [SetOp::Sum, SetOp::Diff] {
            prop_assert_eq!(
                rep_function_with(&a, op, &b, Exec::Sequential).unwrap(),
                rep_function_with(&a, op, &b, Exec::Parallel).unwrap()
            );
        }
    }

    #[test]
    fn sandwich_holds_for_fractional_k(a in arb_set(25), num in 3i64..9) {
        let k = Exponent::new(num, 2);
        let rep = rep_function_with(&a, SetOp::Diff, &a, Exec::Sequential).unwrap();
        let (_, s) = sandwich(&rep, k).unwrap();
        prop_assert!(s.holds());
    }

    #[test]
    fn cauchy_schwarz_never_fails(a in arb_set(16), b in arb_set(16)) {
        let r = check(ClaimId::CsSandwich, &ClaimInputs::new(a).with_b(b)).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass);
    }
}

#[test]
fn certificates_survive_a_file_round_trip() {
    let a = FiniteSet::from_ints(&(1..=48).map(|x| x * x).collect::<Vec<_>>());
    let cert = decomp(&a, &a, SetOp::Diff, Exponent::new(5, 2), &parse_rational("1/4").unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.txt");
    std::fs::write(&path, cert.to_text()).unwrap();
    let back = DecompositionCertificate::from_text(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(verify_certificate(&back).passed());
    assert_eq!(back.to_text(), cert.to_text());
}

#[test]
fn certificate_with_a_foreign_c_is_rejected() {
    let a = FiniteSet::from_ints(&(0..40).collect::<Vec<_>>());
    let mut cert = decomp(&a, &a, SetOp::Diff, Exponent::from_integer(2), &parse_rational("1/2").unwrap()).unwrap();
    cert.c = FiniteSet::from_ints(&[1000, 2000]);
    let report = verify_certificate(&cert);
    assert!(!report.passed());
}
