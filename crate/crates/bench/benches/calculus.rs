use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use holocalc::complex::{homology_basis, verify_homology_compat, VerifyOptions, DEFAULT_RANK_TOL};
use holocalc::measure::mu_f;
use holocalc::operator::{func_calc_series, func_calc_via_measure, oracle_eigen};
use holocalc::random::{random_chain, random_diagonalizable, rng};
use holocalc::series::PowerSeries;

fn matrix_functions(c: &mut Criterion) {
    let mut group = c.benchmark_group("matrix");
    let exp = PowerSeries::exp();
    for dim in [2, 8, 32] {
        let t = random_diagonalizable(&mut rng(dim as u64), dim, 2.0, 100.0);
        group.bench_with_input(BenchmarkId::new("series", dim), &t, |b, t| {
            b.iter(|| func_calc_series(&exp, black_box(t), 1e-14, 500).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("via_measure", dim), &t, |b, t| {
            b.iter(|| func_calc_via_measure(&exp, black_box(t), 1.0, 64, 1e-14).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("oracle", dim), &t, |b, t| {
            b.iter(|| oracle_eigen(&exp, black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn measures(c: &mut Criterion) {
    let cos = PowerSeries::cos();
    c.bench_function("mu_f/cos/depth200", |b| b.iter(|| mu_f(&cos, black_box(0.75), 200).unwrap()));
}

fn complexes(c: &mut Criterion) {
    let mut r = rng(5);
    let chains: Vec<_> = (0..16)
        .map(|_| {
            let len = r.random_range(1..=4);
            random_chain(&mut r, 0, len, 6, 4.0, 2.0)
        })
        .collect();
    c.bench_function("homology_basis/16 complexes", |b| {
        b.iter(|| {
            for chain in &chains {
                black_box(homology_basis(&chain.complex, DEFAULT_RANK_TOL));
            }
        })
    });
    let sin = PowerSeries::sin();
    let opts = VerifyOptions::new(1e-8);
    c.bench_function("verify/sin/16 complexes", |b| {
        b.iter(|| {
            for chain in &chains {
                black_box(verify_homology_compat(&chain.complex, &chain.endo, &sin, &opts));
            }
        })
    });
}

criterion_group!(benches, matrix_functions, measures, complexes);
criterion_main!(benches);
