use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hcont::dethom::{self, PencilWorkspace, SymmetricPencil};
use hcont::poly::PolySystem;
use hcont::systems;
use hcont::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn system(name: &str) -> PolySystem {
    systems::by_name(name).expect("known system").system
}

fn horner_vs_naive(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for name in ["heart", "ipp2", "cyclic7", "katsura11"] {
        let f = system(name);
        let x = point(&mut rng, f.nvars());
        let mut out = vec![C64::new(0.0, 0.0); f.npolys()];
        let mut stack = f.scratch();
        group.bench_with_input(BenchmarkId::new("horner", name), &x, |b, x| {
            b.iter(|| f.evaluate_into(black_box(x), &mut out, &mut stack))
        });
        group.bench_with_input(BenchmarkId::new("naive", name), &x, |b, x| {
            b.iter(|| {
                for (o, p) in out.iter_mut().zip(f.polys()) {
                    *o = p.evaluate(black_box(x)).unwrap();
                }
            })
        });
    }
    group.finish();
}

fn jacobian(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobian");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for name in ["heart", "cyclic7", "katsura11"] {
        let f = system(name);
        let x = point(&mut rng, f.nvars());
        let mut jac = hcont::CMatrix::zeros(f.npolys(), f.nvars());
        let mut stack = f.scratch();
        group.bench_with_input(BenchmarkId::from_parameter(name), &x, |b, x| {
            b.iter(|| f.jacobian_into(black_box(x), &mut jac, &mut stack))
        });
    }
    group.finish();
}

fn determinant_derivatives(c: &mut Criterion) {
    let mut group = c.benchmark_group("symmetroid");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [3usize, 5, 10, 20] {
        let pencil = SymmetricPencil::random(n, &mut rng);
        let x = point(&mut rng, 4);
        let mut ws = PencilWorkspace::new(n);
        group.bench_with_input(BenchmarkId::new("gradient_hessian", n), &x, |b, x| {
            b.iter(|| {
                ws.refresh(pencil.complex_matrices(), black_box(x));
                (ws.gradient(), ws.hessian())
            })
        });
        if n <= 5 {
            let expanded = dethom::expanded_determinant(&pencil);
            let grads: Vec<_> = (0..4).map(|i| expanded.differentiate(i).unwrap()).collect();
            group.bench_with_input(BenchmarkId::new("expanded_gradient", n), &x, |b, x| {
                b.iter(|| grads.iter().map(|g| g.evaluate(black_box(x)).unwrap()).collect::<Vec<_>>())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, horner_vs_naive, jacobian, determinant_derivatives);
criterion_main!(benches);
