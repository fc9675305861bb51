//! Microbenchmarks for the replay-side hot paths: sum-tree priority
//! maintenance, graph insertion, and reverse-sweep batch assembly.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::Rng;

use ter_core::baselines::SumTree;
use ter_core::{
    stream_rng, ProjectionMatrix, Prng, RootsMode, Stream, SweepBudgets, SweepState,
    TopologicalGraph, Transition, TransitionStore,
};

fn one_hot(i: usize, d: usize) -> ter_core::Observation {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    ter_core::Observation(v)
}

/// Random walk on an N-state chain with a terminal tail state, the same
/// shape the offline experiments replay.
fn chain_walk(n: usize, steps: usize, rng: &mut Prng) -> Vec<Transition> {
    let mut out = Vec::with_capacity(steps);
    let mut pos = 0usize;
    for step in 0..steps {
        let action = rng.gen_range(0..2usize);
        let next = if action == 1 {
            (pos + 1).min(n - 1)
        } else {
            pos.saturating_sub(1)
        };
        let terminal = next == n - 1;
        out.push(Transition {
            state: one_hot(pos, n),
            action,
            reward: if terminal { 1.0 } else { 0.0 },
            next_state: one_hot(next, n),
            terminal,
            timeout: false,
            insert_step: step as u64,
        });
        pos = if terminal { 0 } else { next };
    }
    out
}

fn bench_sum_tree(c: &mut Criterion) {
    let mut rng = stream_rng(0, Stream::Sampler);
    let n = 1 << 14;
    let mut tree = SumTree::new(n);
    for i in 0..n {
        tree.set(i, rng.gen_range(0.01..1.0));
    }
    c.bench_function("sum_tree_set_16k", |b| {
        b.iter(|| {
            let leaf = rng.gen_range(0..n);
            tree.set(leaf, rng.gen_range(0.01..1.0));
        })
    });
    c.bench_function("sum_tree_find_16k", |b| {
        b.iter(|| {
            let p = rng.gen_range(0.0..tree.total());
            std::hint::black_box(tree.find(p));
        })
    });
}

fn bench_graph_insert(c: &mut Criterion) {
    let mut rng = stream_rng(1, Stream::Env);
    let data = chain_walk(16, 10_000, &mut rng);
    let phi = ProjectionMatrix::new(0, 16, 8);
    c.bench_function("graph_insert_10k", |b| {
        b.iter_batched(
            || (TopologicalGraph::new(), TransitionStore::new(20_000)),
            |(mut g, mut store)| {
                for t in &data {
                    let idx = store.append(t.clone()).unwrap();
                    g.insert_transition(idx, t, &phi).unwrap();
                }
                std::hint::black_box(g.vertices().count());
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_sweep_batches(c: &mut Criterion) {
    let mut rng = stream_rng(2, Stream::Env);
    let data = chain_walk(16, 10_000, &mut rng);
    let phi = ProjectionMatrix::new(0, 16, 8);
    let mut g = TopologicalGraph::new();
    let mut store = TransitionStore::new(20_000);
    for t in &data {
        let idx = store.append(t.clone()).unwrap();
        g.insert_transition(idx, t, &phi).unwrap();
    }
    let budgets = SweepBudgets::default();
    let mut sampler_rng = stream_rng(3, Stream::Sampler);
    c.bench_function("sweep_next_batch_32", |b| {
        let mut sw = SweepState::new(RootsMode::Terminal);
        b.iter(|| {
            let batch = sw
                .next_batch(&mut g, &store, 32, &budgets, &mut sampler_rng)
                .unwrap();
            std::hint::black_box(batch.len());
        })
    });
}

criterion_group!(benches, bench_sum_tree, bench_graph_insert, bench_sweep_batches);
criterion_main!(benches);
