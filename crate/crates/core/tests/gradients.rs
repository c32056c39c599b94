mod common;

use blockgcl_core::encoder::{layer_backward, layer_forward, LayerTape};
use blockgcl_core::graph::normalized_adjacency_from_edges;
use blockgcl_core::objective::{standardize_backward, StandardizeTape};
use blockgcl_core::trainer::{blockwise_gradients, blockwise_losses, end2end_gradients};
use blockgcl_core::{Activation, Contrast, ContrastLoss, DenseMatrix, GcnLayer, Rng};
use common::*;

const H: f64 = 1e-5;

fn random_mat(rng: &mut Rng, r: usize, c: usize) -> Mat {
    (0..r).map(|_| (0..c).map(|_| rng.normal()).collect()).collect()
}

#[test]
fn layer_gradients_match_finite_differences() {
    let mut rng = Rng::new(11);
    for case in 0..20 {
        let n = 5;
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|_| rng.bernoulli(0.5))
            .collect();
        let (din, dout) = (3, 4);
        let x = random_mat(&mut rng, n, din);
        let w = random_mat(&mut rng, din, dout);
        let act = if case % 2 == 0 { Activation::Relu } else { Activation::Identity };
        let adj_dense = dense_adjacency(n, &edges);
        let pre = layer_pre(&adj_dense, &x, &w);
        if act == Activation::Relu && pre.iter().flatten().any(|v| v.abs() < 1e-3) {
            continue;
        }
        // scalar functional: squared norm of the output
        let f = |x: &Mat, w: &Mat| -> f64 {
            activate(&layer_pre(&adj_dense, x, w), act == Activation::Relu)
                .iter()
                .flatten()
                .map(|v| v * v)
                .sum()
        };
        let adj = normalized_adjacency_from_edges(n, &edges);
        let layer = GcnLayer::new(from_mat(&w), act);
        let mut tape = LayerTape::new();
        let out = layer_forward(&layer, &adj, &from_mat(&x), &mut tape).unwrap();
        let (gw, gx) = layer_backward(&layer, &adj, &out.scale(2.0), &tape).unwrap();

        let fd_w = fd_gradient(&[w.clone()], 0, H, |ws| f(&x, &ws[0]));
        let fd_x = fd_gradient(&[x.clone()], 0, H, |xs| f(&xs[0], &w));
        assert!(relative_error(&gw, &fd_w, f(&x, &w)) < 1e-5, "case {case} weight");
        assert!(relative_error(&gx, &fd_x, f(&x, &w)) < 1e-5, "case {case} input");
    }
}

#[test]
fn objective_gradient_matches_finite_differences() {
    let mut rng = Rng::new(5);
    for _ in 0..10 {
        let (n, d) = (6, 3);
        let za = random_mat(&mut rng, n, d);
        let zb = random_mat(&mut rng, n, d);
        let lambda = rng.uniform_in(0.0, 1.0);
        let loss = ContrastLoss::new(lambda, 1e-8).unwrap();
        let out = loss.loss_and_grad(&from_mat(&za), &from_mat(&zb)).unwrap();
        assert!((out.loss - contrast(&za, &zb, lambda, 1e-8)).abs() < 1e-12);
        let fa = fd_gradient(&[za.clone()], 0, H, |m| contrast(&m[0], &zb, lambda, 1e-8));
        let fb = fd_gradient(&[zb.clone()], 0, H, |m| contrast(&za, &m[0], lambda, 1e-8));
        assert!(relative_error(&out.grad_a, &fa, out.loss) < 1e-5);
        assert!(relative_error(&out.grad_b, &fb, out.loss) < 1e-5);
    }
}

#[test]
fn standardize_backward_matches_finite_differences() {
    let mut rng = Rng::new(8);
    let (n, d) = (7, 4);
    let z = random_mat(&mut rng, n, d);
    let probe = random_mat(&mut rng, n, d);
    // scalar functional: <probe, standardize(z)>
    let f = |z: &Mat| -> f64 {
        standardize(z, 1e-8)
            .iter()
            .flatten()
            .zip(probe.iter().flatten())
            .map(|(a, b)| a * b)
            .sum()
    };
    let mut tape = StandardizeTape::new();
    blockgcl_core::objective::standardize(&from_mat(&z), 1e-8, &mut tape).unwrap();
    let grad = standardize_backward(&from_mat(&probe), &tape).unwrap();
    let fd = fd_gradient(&[z.clone()], 0, H, |m| f(&m[0]));
    assert!(relative_error(&grad, &fd, f(&z)) < 1e-5);
}

#[test]
fn blockwise_gradients_match_local_loss_only() {
    let mut rng = Rng::new(21);
    for case in 0..30 {
        let inst = random_instance(&mut rng, 8, 3, 5);
        let (va, vb) = inst.views();
        let enc = inst.encoder();
        let contrast = ContrastLoss::new(inst.lambda, inst.eps).unwrap();
        let (losses, grads) = blockwise_gradients(&enc, &va, &vb, &contrast).unwrap();
        let oracle = inst.block_losses(&inst.weights);
        for (a, b) in losses.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "case {case}: loss {a} vs {b}");
        }
        for l in 0..inst.weights.len() {
            let i = block_of(&inst.blocks, l);
            let fd = fd_gradient(&inst.weights, l, H, |w| inst.block_losses(w)[i]);
            let err = relative_error(&grads[l], &fd, losses[i]);
            assert!(err < 1e-4, "case {case}, layer {l}: rel err {err}");
        }
    }
}

#[test]
fn end2end_gradients_match_top_loss() {
    let mut rng = Rng::new(34);
    for case in 0..30 {
        let inst = random_instance(&mut rng, 8, 3, 5);
        let (va, vb) = inst.views();
        let enc = inst.encoder();
        let contrast = ContrastLoss::new(inst.lambda, inst.eps).unwrap();
        let (loss, grads) = end2end_gradients(&enc, &va, &vb, &contrast).unwrap();
        assert!((loss - inst.top_loss(&inst.weights)).abs() < 1e-10 * loss.abs().max(1.0));
        for l in 0..inst.weights.len() {
            let fd = fd_gradient(&inst.weights, l, H, |w| inst.top_loss(w));
            let err = relative_error(&grads[l], &fd, loss);
            assert!(err < 1e-4, "case {case}, layer {l}: rel err {err}");
        }
    }
}

#[test]
fn six_node_two_block_first_block_ignores_second_loss() {
    let mut rng = Rng::new(2);
    // two triangles joined by one bridge
    let edges = vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)];
    let inst = loop {
        let weights = vec![random_mat(&mut rng, 3, 3), random_mat(&mut rng, 3, 3)];
        let features = [0, 1].map(|_| random_mat(&mut rng, 6, 3));
        let inst = Instance {
            n: 6,
            edges: [edges.clone(), edges.clone()],
            features,
            weights,
            relu: vec![true, true],
            blocks: vec![0..1, 1..2],
            lambda: 1e-3,
            eps: 1e-8,
        };
        if inst.kink_margin() > 1e-3 && inst.min_std() > 1e-3 {
            break inst;
        }
    };
    let (va, vb) = inst.views();
    let contrast = ContrastLoss::default();
    let (losses, grads) = blockwise_gradients(&inst.encoder(), &va, &vb, &contrast).unwrap();
    let local = fd_gradient(&inst.weights, 0, H, |w| inst.block_losses(w)[0]);
    let through_top = fd_gradient(&inst.weights, 0, H, |w| inst.block_losses(w)[1]);
    assert!(relative_error(&grads[0], &local, losses[0]) < 1e-4);
    // the second loss does depend on W1, so mixing it in would be detected
    let mixed: Mat = local
        .iter()
        .zip(&through_top)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    assert!(relative_error(&grads[0], &mixed, losses[0] + losses[1]) > 1e-3);
}

#[test]
fn perturbing_later_block_leaves_earlier_losses_bitwise() {
    let mut rng = Rng::new(77);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 8, 3, 5);
        if inst.blocks.len() < 2 {
            continue;
        }
        let (va, vb) = inst.views();
        let contrast = ContrastLoss::new(inst.lambda, inst.eps).unwrap();
        let mut enc = inst.encoder();
        let before = blockwise_losses(&enc, &va, &vb, &contrast).unwrap();
        let last = inst.blocks.len() - 1;
        for l in inst.blocks[last].clone() {
            let w = enc.layer_mut(l).weight_mut();
            *w = DenseMatrix::from_fn(w.rows(), w.cols(), |i, j| (i as f64 * 3.1 - j as f64).sin() * 5.0);
        }
        let after = blockwise_losses(&enc, &va, &vb, &contrast).unwrap();
        for j in 0..last {
            assert_eq!(before[j].to_bits(), after[j].to_bits());
        }
    }
}
