use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use cdsolve_bench::{clique, cycle, pixley2, planted_batch};
use cdsolve_core::ideals::{minimal_ideal_members, Carrier};
use cdsolve_core::strategy::{enforce, init_full, Schedule};
use cdsolve_core::{solve, FiniteAlgebra, IdealSide, Power, SolveOptions};

fn closure(c: &mut Criterion) {
    let alg = FiniteAlgebra::majority(3);
    let cube = Power::new(&alg, 3).unwrap();
    let seed = [cube.encode(&[0, 1, 2]), cube.encode(&[1, 2, 0]), cube.encode(&[2, 0, 1])];
    c.bench_function("sg_closure/majority3^3", |b| b.iter(|| cube.sg_closure(black_box(seed))));

    let sq = Power::new(&alg, 2).unwrap();
    let whole = Carrier::new(sq, sq.full_set()).unwrap();
    c.bench_function("minimal_ideals/majority3^2", |b| {
        b.iter(|| minimal_ideal_members(black_box(&whole), IdealSide::R))
    });
}

fn consistency(c: &mut Criterion) {
    let (a, b) = (cycle(9), clique(3));
    c.bench_function("enforce/c9->k3", |bench| {
        bench.iter_batched(
            || init_full(&a, &b, 3).unwrap().into_strategy().unwrap(),
            |h| enforce(h, Schedule::Sequential),
            BatchSize::SmallInput,
        )
    });
}

fn solving(c: &mut Criterion) {
    let alg = pixley2();
    let (a, b) = (cycle(8), clique(2));
    c.bench_function("solve/pixley c8->k2", |bench| {
        bench.iter(|| solve(black_box(&a), &b, &alg, SolveOptions::default()).unwrap())
    });

    let batch = planted_batch(20);
    c.bench_function("solve/planted x20", |bench| {
        bench.iter(|| {
            for g in &batch {
                black_box(solve(&g.instance, &g.template, &g.algebra, SolveOptions::default()).unwrap());
            }
        })
    });
}

criterion_group!(benches, closure, consistency, solving);
criterion_main!(benches);
