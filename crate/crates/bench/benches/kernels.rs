use blockgcl_bench::{citation_like_graph, gaussian};
use blockgcl_core::encoder::{layer_backward, layer_forward, LayerTape};
use blockgcl_core::linalg::{matmul, spmm};
use blockgcl_core::objective::cca_loss;
use blockgcl_core::trainer::{init_encoder, train_blockwise_epoch, train_end2end_epoch, AdamState};
use blockgcl_core::{normalized_adjacency, Activation, GcnLayer, Rng, TrainConfig, TrainMode};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const HIDDEN: usize = 128;

fn kernels(c: &mut Criterion) {
    let g = citation_like_graph(256);
    let adj = normalized_adjacency(&g);
    let n = g.num_nodes();
    let h = gaussian(n, HIDDEN, 1);
    let w = gaussian(HIDDEN, HIDDEN, 2);

    c.bench_function("spmm", |b| b.iter(|| spmm(black_box(&adj), black_box(&h)).unwrap()));
    c.bench_function("matmul", |b| b.iter(|| matmul(black_box(&h), black_box(&w), false, false).unwrap()));
    c.bench_function("matmul_at_b", |b| b.iter(|| matmul(black_box(&h), black_box(&h), true, false).unwrap()));

    let layer = GcnLayer::new(w.clone(), Activation::Relu);
    c.bench_function("layer_forward", |b| {
        b.iter(|| layer_forward(&layer, &adj, black_box(&h), &mut LayerTape::new()).unwrap())
    });
    let mut tape = LayerTape::new();
    let out = layer_forward(&layer, &adj, &h, &mut tape).unwrap();
    c.bench_function("layer_backward", |b| {
        b.iter(|| layer_backward(&layer, &adj, black_box(&out), &tape).unwrap())
    });

    let za = gaussian(n, HIDDEN, 3);
    let zb = gaussian(n, HIDDEN, 4);
    c.bench_function("cca_loss", |b| b.iter(|| cca_loss(black_box(&za), black_box(&zb), 1e-3).unwrap()));
}

fn epochs(c: &mut Criterion) {
    let g = citation_like_graph(256);
    let mut group = c.benchmark_group("epoch");
    group.sample_size(10);
    for depth in [2usize, 8] {
        for mode in [TrainMode::Blockwise, TrainMode::End2End] {
            let cfg = TrainConfig {
                depth,
                hidden_dim: HIDDEN,
                mode,
                ..TrainConfig::default()
            };
            let mut enc = init_encoder::<f64>(g.num_features(), &cfg).unwrap();
            let mut state = AdamState::new(enc.weights());
            let mut rng = Rng::new(0);
            group.bench_with_input(BenchmarkId::new(mode.as_str(), depth), &depth, |b, _| {
                b.iter(|| match mode {
                    TrainMode::Blockwise => {
                        train_blockwise_epoch(&mut enc, &g, &cfg, &mut state, &mut rng).unwrap();
                    }
                    TrainMode::End2End => {
                        train_end2end_epoch(&mut enc, &g, &cfg, &mut state, &mut rng).unwrap();
                    }
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, kernels, epochs);
criterion_main!(benches);
