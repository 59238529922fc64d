use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oteg_bench::{random_symmetric, random_tensor};
use oteg_core::spectral::tensor_exp;
use oteg_core::tensor::{fft3, t_product, t_svd};

fn algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("algebra");
    for &(n, d) in &[(10, 4), (30, 8), (60, 16)] {
        let x = random_tensor(n, n, d, "x");
        let y = random_tensor(n, n, d, "y");
        let s = random_symmetric(n, d, "s");
        let id = format!("{n}x{n}x{d}");
        g.bench_with_input(BenchmarkId::new("fft3", &id), &x, |b, x| b.iter(|| fft3(x)));
        g.bench_with_input(
            BenchmarkId::new("t_product", &id),
            &(&x, &y),
            |b, (x, y)| b.iter(|| t_product(x, y).unwrap()),
        );
        g.bench_with_input(BenchmarkId::new("t_svd", &id), &x, |b, x| {
            b.iter(|| t_svd(x).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("tensor_exp", &id), &s, |b, s| {
            b.iter(|| tensor_exp(s).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, algebra);
criterion_main!(benches);
