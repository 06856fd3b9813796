use criterion::{criterion_group, criterion_main, Criterion};
use statecheck_core::chess::movegen::{perft, perft_serial};
use statecheck_core::chess::ChessState;

fn bench_perft(c: &mut Criterion) {
    let initial = ChessState::initial();
    let mut group = c.benchmark_group("perft_depth4");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| perft(&initial, 4)));
    group.bench_function("serial", |b| b.iter(|| perft_serial(&initial, 4)));
    group.finish();
}

criterion_group!(benches, bench_perft);
criterion_main!(benches);
