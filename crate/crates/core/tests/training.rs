use blockgcl_core::encoder::forward_all_layers;
use blockgcl_core::graph::Split;
use blockgcl_core::trainer::{
    init_encoder, train_blockwise_epoch, train_end2end_epoch, AdamState, AUGMENT_STREAM,
};
use blockgcl_core::{
    fit, generate_sbm, linear_probe, mad_profile, run_experiment, Activation, BlockEncoder, DenseMatrix,
    GcnLayer, GraphDataset, ProbeConfig, Rng, TrainConfig, TrainMode,
};

fn loss_decreases(mode: TrainMode) -> usize {
    let g = generate_sbm(2, 50, 0.5, 0.05, 16, 3).unwrap();
    (0..5)
        .filter(|&seed| {
            let cfg = TrainConfig {
                epochs: 10,
                seed,
                mode,
                record_timing: false,
                ..TrainConfig::default()
            };
            let (_, record) = fit::<f64>(&g, &cfg).unwrap();
            let first = record.epochs.first().unwrap().total_loss();
            let last = record.epochs.last().unwrap().total_loss();
            last < first
        })
        .count()
}

#[test]
fn end2end_loss_decreases_on_sbm() {
    let n = loss_decreases(TrainMode::End2End);
    assert!(n >= 4, "loss decreased for only {n} of 5 seeds");
}

#[test]
fn blockwise_loss_decreases_on_sbm() {
    let n = loss_decreases(TrainMode::Blockwise);
    assert!(n >= 4, "loss decreased for only {n} of 5 seeds");
}

#[test]
fn single_block_matches_end2end_update() {
    let g = generate_sbm(2, 20, 0.5, 0.1, 6, 9).unwrap();
    for depth in [1, 3] {
        let block = TrainConfig {
            depth,
            block_size: depth,
            hidden_dim: 8,
            mode: TrainMode::Blockwise,
            ..TrainConfig::default()
        };
        let e2e = TrainConfig {
            mode: TrainMode::End2End,
            ..block.clone()
        };
        let mut enc_a = init_encoder::<f64>(g.num_features(), &block).unwrap();
        let mut enc_b = init_encoder::<f64>(g.num_features(), &e2e).unwrap();
        assert_eq!(enc_a, enc_b);
        let mut sa = AdamState::new(enc_a.weights());
        let mut sb = AdamState::new(enc_b.weights());
        let mut ra = Rng::with_stream(1, AUGMENT_STREAM);
        let mut rb = Rng::with_stream(1, AUGMENT_STREAM);
        for _ in 0..3 {
            let la = train_blockwise_epoch(&mut enc_a, &g, &block, &mut sa, &mut ra).unwrap();
            let lb = train_end2end_epoch(&mut enc_b, &g, &e2e, &mut sb, &mut rb).unwrap();
            assert_eq!(la, vec![lb]);
        }
        assert_eq!(enc_a, enc_b);
    }
}

#[test]
fn fit_records_every_epoch_and_is_finite() {
    let g = generate_sbm(3, 15, 0.5, 0.05, 8, 2).unwrap();
    let cfg = TrainConfig {
        depth: 5,
        block_size: 2,
        hidden_dim: 16,
        epochs: 7,
        ..TrainConfig::default()
    };
    let (enc, record) = fit::<f32>(&g, &cfg).unwrap();
    assert_eq!(enc.blocks(), &[0..3, 3..5]);
    assert_eq!(record.epochs.len(), 7);
    assert!(record
        .epochs
        .iter()
        .all(|e| e.block_losses.len() == 2 && e.block_losses.iter().all(|l| l.is_finite())));
}

#[test]
fn mad_profile_one_entry_per_layer() {
    let g = generate_sbm(2, 10, 0.8, 0.1, 4, 1).unwrap();
    let cfg = TrainConfig {
        depth: 1,
        hidden_dim: 6,
        ..TrainConfig::default()
    };
    let enc = init_encoder::<f64>(4, &cfg).unwrap();
    let profile = mad_profile(&enc, &g).unwrap();
    assert_eq!(profile.len(), 1);
    let adj = blockgcl_core::normalized_adjacency(&g);
    let h = forward_all_layers(&enc, &adj, g.features()).unwrap();
    assert_eq!(profile[0], blockgcl_core::mad(&h[0], &g).unwrap());
}

#[test]
fn identity_encoder_on_disjoint_cliques_has_zero_mad() {
    let g = generate_sbm(2, 5, 1.0, 0.0, 2, 0).unwrap();
    // block-constant features: one-hot of the block
    let x = DenseMatrix::from_fn(10, 2, |i, j| f64::from(u8::from(g.labels()[i] == j)));
    let g = GraphDataset::new(x, g.labels().to_vec(), g.edges().to_vec(), g.split().to_vec()).unwrap();
    let layers = (0..3)
        .map(|_| GcnLayer::new(DenseMatrix::<f64>::identity(2), Activation::Relu))
        .collect();
    let enc = BlockEncoder::new(layers, vec![0..3]).unwrap();
    let profile = mad_profile(&enc, &g).unwrap();
    assert_eq!(profile, vec![Some(0.0); 3]);
}

fn labelled_line(n: usize, classes: usize, seed: u64) -> (GraphDataset, Rng) {
    let rng = Rng::new(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let split: Vec<Split> = (0..n)
        .map(|i| match (i / classes) % 5 {
            0 | 1 => Split::Train,
            2 => Split::Val,
            _ => Split::Test,
        })
        .collect();
    let g = GraphDataset::new(DenseMatrix::zeros(n, 1), labels, vec![], split).unwrap();
    (g, rng.fork(1))
}

#[test]
fn probe_separable_sign_is_perfect() {
    let (g, _) = labelled_line(200, 2, 0);
    let z = DenseMatrix::from_fn(200, 1, |i, _| if g.labels()[i] == 0 { -1.0 - (i as f64) * 0.01 } else { 1.0 + (i as f64) * 0.01 });
    let r = linear_probe(&z, &g, &ProbeConfig::default(), 0).unwrap();
    assert_eq!(r.accuracies.len(), 5);
    assert_eq!(r.mean, 1.0);
    assert_eq!(r.std, 0.0);
}

#[test]
fn probe_shuffled_labels_is_chance() {
    let n = 1400;
    let (g, mut rng) = labelled_line(n, 7, 4);
    let z = DenseMatrix::from_fn(n, 16, |_, _| rng.normal());
    let mut labels = g.labels().to_vec();
    rng.shuffle(&mut labels);
    let g = GraphDataset::new(g.features().clone(), labels, vec![], g.split().to_vec()).unwrap();
    let r = linear_probe(&z, &g, &ProbeConfig::default(), 1).unwrap();
    let n_test = g.nodes_in(Split::Test).len() as f64;
    let p = 1.0 / 7.0;
    let sigma = (p * (1.0 - p) / n_test).sqrt();
    for acc in &r.accuracies {
        assert!((acc - p).abs() <= 3.0 * sigma, "accuracy {acc} vs chance {p} (3σ = {})", 3.0 * sigma);
    }
}

#[test]
fn probe_rotation_within_one_point() {
    let g = generate_sbm(4, 60, 0.3, 0.02, 12, 5).unwrap();
    let cfg = TrainConfig {
        depth: 2,
        hidden_dim: 16,
        epochs: 20,
        ..TrainConfig::default()
    };
    let (enc, _) = fit::<f64>(&g, &cfg).unwrap();
    let adj = blockgcl_core::normalized_adjacency(&g);
    let z = blockgcl_core::full_forward(&enc, &adj, g.features()).unwrap();
    // random orthogonal matrix from Gram-Schmidt on a Gaussian draw
    let mut rng = Rng::new(99);
    let d = z.cols();
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for u in &q {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let rot = DenseMatrix::from_rows(&q).unwrap();
    let zr = blockgcl_core::linalg::matmul(&z, &rot, false, false).unwrap();
    let probe = ProbeConfig::default();
    let a = linear_probe(&z, &g, &probe, 3).unwrap();
    let b = linear_probe(&zr, &g, &probe, 3).unwrap();
    assert!((a.mean - b.mean).abs() <= 0.01, "{} vs {}", a.mean, b.mean);
}

#[test]
fn probe_rejects_empty_partition() {
    let labels = vec![0, 1, 0, 1];
    let split = vec![Split::Train, Split::Train, Split::Test, Split::Test];
    let g = GraphDataset::new(DenseMatrix::zeros(4, 1), labels, vec![], split).unwrap();
    assert!(linear_probe(&DenseMatrix::<f64>::zeros(4, 2), &g, &ProbeConfig::default(), 0).is_err());
}

#[test]
fn sbm_experiment_beats_chance() {
    let g = generate_sbm(3, 40, 0.3, 0.02, 12, 8).unwrap();
    for mode in [TrainMode::Blockwise, TrainMode::End2End] {
        let cfg = TrainConfig {
            depth: 2,
            hidden_dim: 32,
            epochs: 30,
            mode,
            ..TrainConfig::default()
        };
        let out = run_experiment(&g, &cfg, Some(&ProbeConfig::default())).unwrap();
        let probe = out.record.probe.unwrap();
        assert!(probe.mean > 0.8, "{mode}: {}", probe.mean);
        assert_eq!(out.record.mad.len(), 2);
        assert_eq!(out.embeddings.shape(), (120, 32));
    }
}

