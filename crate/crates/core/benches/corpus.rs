use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scrollnet::batch::Exec;
use scrollnet::correctness::sequentialize;
use scrollnet::gen::{self, Shape};
use scrollnet::id::Atom;
use scrollnet::oracle::cross_check;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn derivations(c: &mut Criterion) {
    let mut g = c.benchmark_group("fuzzed_derivations");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec.map_range(200, |k| {
                    let t = gen::trace(&mut gen::rng(k as u64), Shape::default(), 12, 3);
                    t.replay().unwrap().premiss().unwrap().len()
                })
            })
        });
    }
    g.finish();
}

fn round_trips(c: &mut Criterion) {
    let nets: Vec<_> = (0..100u64)
        .map(|k| gen::trace(&mut gen::rng(k), Shape::default(), 12, 3).replay().unwrap().without_certificate())
        .collect();
    let mut g = c.benchmark_group("sequentialization");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(nets.clone(), |n| sequentialize(black_box(&n)).unwrap().trace().map(|t| t.len())))
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let atoms = [Atom::new("a"), Atom::new("b")];
    let mut g = c.benchmark_group("oracle_cross_check");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| cross_check(&atoms, 5, 3, exec).formulas));
    }
    g.finish();
}

criterion_group!(benches, derivations, round_trips, oracle);
criterion_main!(benches);
