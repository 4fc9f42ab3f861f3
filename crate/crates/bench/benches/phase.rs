use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use pomalg::phase::{circular_deviation, FockState, NumberPhase};
use pomalg::random::rng;
use pomalg::Tolerance;

fn phase(c: &mut Criterion) {
    let tol = Tolerance::default();
    let mut group = c.benchmark_group("circular_deviation");
    for n in [4.0, 64.0] {
        let psi = FockState::coherent(Complex64::new(f64::sqrt(n), 0.0), 1e-14);
        group.bench_with_input(BenchmarkId::from_parameter(n), &psi, |b, psi| {
            b.iter(|| circular_deviation(psi, &tol).unwrap())
        });
    }
    group.finish();

    let psi = FockState::random(32, &mut rng(1));
    let mut group = c.benchmark_group("number_phase_bound");
    group.sample_size(10);
    for bins in [64, 256] {
        group.bench_with_input(BenchmarkId::new("setup", bins), &bins, |b, &m| {
            b.iter(|| NumberPhase::new(32, m, &tol).unwrap())
        });
        let np = NumberPhase::new(32, bins, &tol).unwrap();
        group.bench_with_input(BenchmarkId::new("bound", bins), &np, |b, np| b.iter(|| np.bound(&psi, &tol).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, phase);
criterion_main!(benches);
