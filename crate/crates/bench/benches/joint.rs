use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pomalg::random::{random_pom_pair, random_state, rng};
use pomalg::{build_joint_space, uncertainty, OpExpr, Tolerance};

fn joint(c: &mut Criterion) {
    let tol = Tolerance::default();
    let g = OpExpr::parse("sym(a, b)").unwrap();
    let mut group = c.benchmark_group("joint");
    for d in [3, 6] {
        let mut r = rng(d as u64);
        let (a, b) = random_pom_pair(d, d + 2, 1, d + 1, &mut r);
        let psi = random_state(d, &mut r);
        group.bench_with_input(BenchmarkId::new("build_joint_space", d), &(), |bench, _| {
            bench.iter(|| build_joint_space(&a, &b, &tol).unwrap())
        });
        let js = build_joint_space(&a, &b, &tol).unwrap();
        group.bench_with_input(BenchmarkId::new("combine", d), &(), |bench, _| {
            bench.iter(|| js.combine(&g, &tol).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("uncertainty", d), &(), |bench, _| {
            bench.iter(|| uncertainty(&a, &b, &psi, &tol).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, joint);
criterion_main!(benches);
