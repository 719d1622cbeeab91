//! Values frozen from an independent brute-force enumeration.

use energylab::energy::{energy, mixed_sum, Exponent};
use energylab::generators::SplitMix64;
use energylab::incidence::{count_grid_incidences, ratio_quadruple_count, Line};
use energylab::{rep_function, Exec, FiniteSet, SetOp};
use num_bigint::BigUint;

fn e(a: &[i64], k: i64, op: SetOp) -> BigUint {
    let s = FiniteSet::from_ints(a);
    energy(&s, &s, Exponent::from_integer(k), op).unwrap().exact().unwrap()
}

#[test]
fn small_energies() {
    assert_eq!(e(&[0, 1, 2, 3], 2, SetOp::Diff), 44u32.into());
    assert_eq!(e(&[0, 1, 2], 3, SetOp::Diff), 45u32.into());
    assert_eq!(e(&[1, 2, 4], 2, SetOp::Ratio), 19u32.into());
    // a1 a2 = a3 a4 and a1/a3 = a4/a2 describe the same quadruples
    assert_eq!(e(&[1, 2, 4], 2, SetOp::Prod), 19u32.into());
}

#[test]
fn mixed_sum_of_a_pair() {
    let a = FiniteSet::from_ints(&[0, 1]);
    let r = rep_function(&a, SetOp::Diff, &a).unwrap();
    assert_eq!(mixed_sum(&r, &r), 10u32.into());
}

#[test]
fn ratio_octuples() {
    assert_eq!(ratio_quadruple_count(&FiniteSet::from_ints(&[0, 1]), 8).unwrap(), 24u32.into());
    assert_eq!(ratio_quadruple_count(&FiniteSet::from_ints(&[0, 1, 2]), 8).unwrap(), 588u32.into());
}

#[test]
fn diagonals_of_a_three_by_three_grid() {
    let g = FiniteSet::from_ints(&[0, 1, 2]);
    let lines = [Line::ints(1, 0), Line::ints(-1, 2)];
    for exec in [Exec::Sequential, Exec::Parallel] {
        assert_eq!(count_grid_incidences(&g, &g, &lines, exec).unwrap(), 6);
    }
}

#[test]
fn splitmix_streams() {
    let take = |seed| {
        let mut r = SplitMix64::new(seed);
        (0..5).map(|_| r.next_u64()).collect::<Vec<_>>()
    };
    assert_eq!(
        take(0),
        [16294208416658607535, 7960286522194355700, 487617019471545679, 17909611376780542444, 1961750202426094747]
    );
    assert_eq!(
        take(1234567),
        [6457827717110365317, 3203168211198807973, 9817491932198370423, 4593380528125082431, 16408922859458223821]
    );
}
