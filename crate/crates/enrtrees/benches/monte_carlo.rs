use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use enrtrees::metrics::{diameter_height, PatchedSpace};
use enrtrees::models::{decode, Model};
use enrtrees::par::collect_indexed;
use enrtrees::samplers::{CriticalSampler, ExactTables, RngStream};

fn diameters(c: &mut Criterion) {
    let model = Model::Cacti3;
    let s = model.species();
    let ctx = CriticalSampler::new(&s).unwrap();
    let tables = ExactTables::build(&s, ctx.rho(), 512);
    let decoding = model.decoding();
    let work = |i: u64| {
        let t = tables.sample(512, None, &mut RngStream::new(1, i).rng()).unwrap();
        diameter_height(&PatchedSpace::from_graph(&decode(&t, &decoding).unwrap())).diameter
    };
    let threads = std::thread::available_parallelism().map_or(2, |n| n.get()).max(2);
    let mut g = c.benchmark_group("cacti3_n512_x64");
    g.sample_size(10);
    for t in [1, threads] {
        let label = if t == 1 { "sequential" } else { "parallel" };
        g.bench_with_input(BenchmarkId::new(label, t), &t, |b, &t| b.iter(|| collect_indexed(64, t, work)));
    }
    g.finish();
}

criterion_group!(benches, diameters);
criterion_main!(benches);
