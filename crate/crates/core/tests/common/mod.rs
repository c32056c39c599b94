//! Independent dense reference implementation used as a test oracle.
//!
//! Everything here is written from the definitions with nested `Vec`s and
//! naive loops; nothing calls the library's forward or loss code.

#![allow(dead_code)]

use std::ops::Range;

use blockgcl_core::augment::GraphView;
use blockgcl_core::graph::normalized_adjacency_from_edges;
use blockgcl_core::{Activation, BlockEncoder, DenseMatrix, GcnLayer, Rng};

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(m: &DenseMatrix<f64>) -> Mat {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn from_mat(m: &Mat) -> DenseMatrix<f64> {
    DenseMatrix::from_rows(m).unwrap()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// `D̂^{-1/2}(A+I)D̂^{-1/2}` built entry by entry from an edge list.
pub fn dense_adjacency(n: usize, edges: &[(usize, usize)]) -> Mat {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in edges {
        if u != v {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    (0..n)
        .map(|u| {
            (0..n)
                .map(|v| a[u][v] / (deg[u] * deg[v]).sqrt())
                .collect()
        })
        .collect()
}

pub fn layer_pre(adj: &Mat, h: &Mat, w: &Mat) -> Mat {
    matmul(&matmul(adj, h), w)
}

pub fn activate(pre: &Mat, relu: bool) -> Mat {
    pre.iter()
        .map(|r| r.iter().map(|&v| if relu && v <= 0.0 { 0.0 } else { v }).collect())
        .collect()
}

/// Column-wise `(z - mean) / ((std + eps) * sqrt(N))`, population std.
pub fn standardize(z: &Mat, eps: f64) -> Mat {
    let n = z.len();
    let d = z[0].len();
    let mut out = vec![vec![0.0; d]; n];
    for j in 0..d {
        let mean = z.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
        let denom = (var.sqrt() + eps) * (n as f64).sqrt();
        for i in 0..n {
            out[i][j] = (z[i][j] - mean) / denom;
        }
    }
    out
}

/// `‖A - B‖² + λ(‖AᵀA - I‖² + ‖BᵀB - I‖²)` on already standardized views.
pub fn cca(a: &Mat, b: &Mat, lambda: f64) -> f64 {
    let inv: f64 = a
        .iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).powi(2)))
        .sum();
    let decor = |m: &Mat| -> f64 {
        let c = matmul(&transpose(m), m);
        c.iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (v - if i == j { 1.0 } else { 0.0 }).powi(2)))
            .sum()
    };
    inv + lambda * (decor(a) + decor(b))
}

pub fn contrast(za: &Mat, zb: &Mat, lambda: f64, eps: f64) -> f64 {
    cca(&standardize(za, eps), &standardize(zb, eps), lambda)
}

/// Two fixed views plus an encoder, all in plain nested vectors.
#[derive(Clone, Debug)]
pub struct Instance {
    pub n: usize,
    pub edges: [Vec<(usize, usize)>; 2],
    pub features: [Mat; 2],
    pub weights: Vec<Mat>,
    pub relu: Vec<bool>,
    pub blocks: Vec<Range<usize>>,
    pub lambda: f64,
    pub eps: f64,
}

impl Instance {
    fn adjacency(&self, view: usize) -> Mat {
        dense_adjacency(self.n, &self.edges[view])
    }

    /// Pre-activations and outputs of every layer for one view.
    pub fn trace(&self, weights: &[Mat], view: usize) -> (Vec<Mat>, Vec<Mat>) {
        let adj = self.adjacency(view);
        let mut pres = Vec::new();
        let mut outs: Vec<Mat> = Vec::new();
        for (l, w) in weights.iter().enumerate() {
            let h = outs.last().unwrap_or(&self.features[view]);
            let pre = layer_pre(&adj, h, w);
            outs.push(activate(&pre, self.relu[l]));
            pres.push(pre);
        }
        (pres, outs)
    }

    /// Local loss of each block: forward is a plain chain, so block `i`'s
    /// loss only depends on weights up to the end of block `i`.
    pub fn block_losses(&self, weights: &[Mat]) -> Vec<f64> {
        let (_, oa) = self.trace(weights, 0);
        let (_, ob) = self.trace(weights, 1);
        self.blocks
            .iter()
            .map(|r| contrast(&oa[r.end - 1], &ob[r.end - 1], self.lambda, self.eps))
            .collect()
    }

    pub fn top_loss(&self, weights: &[Mat]) -> f64 {
        let (_, oa) = self.trace(weights, 0);
        let (_, ob) = self.trace(weights, 1);
        contrast(oa.last().unwrap(), ob.last().unwrap(), self.lambda, self.eps)
    }

    /// Smallest |pre-activation| feeding a ReLU, over both views.
    pub fn kink_margin(&self) -> f64 {
        let mut m = f64::INFINITY;
        for view in 0..2 {
            let (pres, _) = self.trace(&self.weights, view);
            for (l, p) in pres.iter().enumerate() {
                if self.relu[l] {
                    for v in p.iter().flatten() {
                        m = m.min(v.abs());
                    }
                }
            }
        }
        m
    }

    /// Smallest column std of any loss input, over both views.
    pub fn min_std(&self) -> f64 {
        let mut m = f64::INFINITY;
        for view in 0..2 {
            let (_, outs) = self.trace(&self.weights, view);
            for r in &self.blocks {
                let z = &outs[r.end - 1];
                for j in 0..z[0].len() {
                    let mean = z.iter().map(|row| row[j]).sum::<f64>() / z.len() as f64;
                    let var = z.iter().map(|row| (row[j] - mean).powi(2)).sum::<f64>() / z.len() as f64;
                    m = m.min(var.sqrt());
                }
            }
        }
        m
    }

    pub fn encoder(&self) -> BlockEncoder<f64> {
        let layers = self
            .weights
            .iter()
            .zip(&self.relu)
            .map(|(w, &r)| {
                GcnLayer::new(
                    from_mat(w),
                    if r { Activation::Relu } else { Activation::Identity },
                )
            })
            .collect();
        BlockEncoder::new(layers, self.blocks.clone()).unwrap()
    }

    pub fn views(&self) -> (GraphView<f64>, GraphView<f64>) {
        let make = |v: usize| GraphView {
            edges: self.edges[v].clone(),
            adjacency: normalized_adjacency_from_edges(self.n, &self.edges[v]),
            features: from_mat(&self.features[v]),
        };
        (make(0), make(1))
    }
}

/// `depth / size` contiguous blocks whose lengths differ by at most one,
/// longer blocks first: block `b` holds `ceil((depth - b) / k)` layers.
pub fn blocks_for(depth: usize, size: usize) -> Vec<Range<usize>> {
    let k = depth / size;
    let mut out = Vec::new();
    let mut start = 0;
    for b in 0..k {
        let len = (depth - b).div_ceil(k);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Random instance with `N ≤ max_n`, `L ≤ max_depth`, widths `≤ max_d`.
///
/// Instances whose ReLU pre-activations sit within `1e-3` of the kink or
/// whose loss inputs have a near-constant column are redrawn, since central
/// differences are not meaningful there.
pub fn random_instance(rng: &mut Rng, max_n: usize, max_depth: usize, max_d: usize) -> Instance {
    loop {
        let n = 3 + (rng.next_u64() as usize) % (max_n - 2);
        let depth = 1 + (rng.next_u64() as usize) % max_depth;
        let block_size = 1 + (rng.next_u64() as usize) % depth;
        let dims: Vec<usize> = (0..=depth).map(|_| 2 + (rng.next_u64() as usize) % (max_d - 1)).collect();
        let blocks = blocks_for(depth, block_size);
        let identity_at_block_end = rng.bernoulli(0.5);
        let relu = (0..depth)
            .map(|l| !(identity_at_block_end && blocks.iter().any(|r| r.end - 1 == l)))
            .collect();
        let mut all_edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.bernoulli(0.4) {
                    all_edges.push((u, v));
                }
            }
        }
        let edges = [0, 1].map(|_| all_edges.iter().copied().filter(|_| !rng.bernoulli(0.3)).collect());
        let features = [0, 1].map(|_| (0..n).map(|_| (0..dims[0]).map(|_| rng.normal()).collect()).collect());
        let weights = dims
            .windows(2)
            .map(|w| (0..w[0]).map(|_| (0..w[1]).map(|_| rng.normal() * 0.8).collect()).collect())
            .collect();
        let inst = Instance {
            n,
            edges,
            features,
            weights,
            relu,
            blocks,
            lambda: rng.uniform_in(0.0, 1.0),
            eps: 1e-8,
        };
        if inst.kink_margin() > 1e-3 && inst.min_std() > 1e-3 {
            return inst;
        }
    }
}

/// Entry-wise relative error `|a - n| / max(|a|, |n|, floor)`.
///
/// The floor is `1e-6` times the larger of the tensor's largest entry and the
/// magnitude of the differentiated scalar `value` (at least 1). Central
/// differences with step `h` carry roundoff of order `ε·|value|/h`, so entries
/// below the floor are compared in absolute terms against that noise.
pub fn relative_error(analytic: &DenseMatrix<f64>, numeric: &Mat, value: f64) -> f64 {
    let scale = analytic
        .as_slice()
        .iter()
        .chain(numeric.iter().flatten())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-6 * scale.max(value.abs()).max(1.0);
    let mut worst = 0.0f64;
    for (i, row) in numeric.iter().enumerate() {
        for (j, &num) in row.iter().enumerate() {
            let a = analytic.get(i, j);
            let err = (a - num).abs() / a.abs().max(num.abs()).max(floor);
            worst = worst.max(err);
        }
    }
    worst
}

/// Central-difference gradient of `f` with respect to `weights[l]`.
pub fn fd_gradient(weights: &[Mat], l: usize, h: f64, f: impl Fn(&[Mat]) -> f64) -> Mat {
    let mut w = weights.to_vec();
    let (rows, cols) = (w[l].len(), w[l][0].len());
    let mut out = vec![vec![0.0; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            let orig = w[l][i][j];
            w[l][i][j] = orig + h;
            let plus = f(&w);
            w[l][i][j] = orig - h;
            let minus = f(&w);
            w[l][i][j] = orig;
            out[i][j] = (plus - minus) / (2.0 * h);
        }
    }
    out
}

pub fn block_of(blocks: &[Range<usize>], layer: usize) -> usize {
    blocks.iter().position(|r| r.contains(&layer)).unwrap()
}
