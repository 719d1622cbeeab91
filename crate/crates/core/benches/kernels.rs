use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use energylab::generators::FamilySpec;
use energylab::incidence::{count_incidences_hash, count_incidences_naive, grid_points, lines_from};
use energylab::set::rep_function_with;
use energylab::{Exec, SetOp};

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn histograms(c: &mut Criterion) {
    let mut group = c.benchmark_group("rep_function");
    group.sample_size(20);
    for n in [256usize, 1024] {
        let a = FamilySpec::random(1 << 40, 7).generate(n).unwrap();
        for (name, exec) in EXECS {
            group.bench_with_input(BenchmarkId::new(format!("diff/{name}"), n), &a, |bch, a| {
                bch.iter(|| rep_function_with(black_box(a), SetOp::Diff, a, exec).unwrap())
            });
            group.bench_with_input(BenchmarkId::new(format!("ratio/{name}"), n), &a, |bch, a| {
                bch.iter(|| rep_function_with(black_box(a), SetOp::Ratio, a, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn incidences(c: &mut Criterion) {
    let mut group = c.benchmark_group("incidences");
    group.sample_size(20);
    let a = FamilySpec::random(500, 3).generate(10).unwrap();
    let sums = a.prodset(&a).unwrap().sumset(&a).unwrap();
    let points = grid_points(&a, &sums).unwrap();
    let lines = lines_from(&a).unwrap();
    for (name, exec) in EXECS {
        group.bench_function(BenchmarkId::new("hash", name), |bch| {
            bch.iter(|| count_incidences_hash(black_box(&points), &lines, exec))
        });
        group.bench_function(BenchmarkId::new("naive", name), |bch| {
            bch.iter(|| count_incidences_naive(black_box(&points), &lines, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, histograms, incidences);
criterion_main!(benches);
