//! Stochastic graph views: edge dropping and feature masking.

use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency_from_edges, GraphDataset, NormalizedAdjacency};
use crate::linalg::{DenseMatrix, Real, Rng};

/// How feature masking picks what to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MaskMode {
    /// A masked feature dimension is zero for every node.
    #[default]
    Column,
    /// Every entry is masked independently.
    Entry,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentationSpec {
    pub p_edge_drop: f64,
    pub p_feat_mask: f64,
    pub mask_mode: MaskMode,
}

impl AugmentationSpec {
    pub fn new(p_edge_drop: f64, p_feat_mask: f64) -> Result<Self> {
        let spec = Self {
            p_edge_drop,
            p_feat_mask,
            mask_mode: MaskMode::Column,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("edge drop", self.p_edge_drop), ("feature mask", self.p_feat_mask)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One augmented view with its adjacency renormalized on the surviving edges.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphView<T = f64> {
    pub edges: Vec<(usize, usize)>,
    pub adjacency: NormalizedAdjacency,
    pub features: DenseMatrix<T>,
}

/// Removes each undirected edge (both directions together) with probability `p`.
pub fn drop_edges(g: &GraphDataset, p: f64, rng: &mut Rng) -> Vec<(usize, usize)> {
    drop_edge_list(g.edges(), p, rng)
}

pub(crate) fn drop_edge_list(edges: &[(usize, usize)], p: f64, rng: &mut Rng) -> Vec<(usize, usize)> {
    edges
        .iter()
        .copied()
        .filter(|_| !rng.bernoulli(p))
        .collect()
}

/// Draws which of `f` feature dimensions to mask.
pub fn column_mask(f: usize, p: f64, rng: &mut Rng) -> Vec<bool> {
    (0..f).map(|_| rng.bernoulli(p)).collect()
}

/// Zeros each feature column independently with probability `p`.
pub fn mask_features<T: Real>(x: &DenseMatrix<T>, p: f64, rng: &mut Rng) -> DenseMatrix<T> {
    let mask = column_mask(x.cols(), p, rng);
    let mut out = x.clone();
    if mask.iter().any(|&m| m) {
        for i in 0..out.rows() {
            for (v, &m) in out.row_mut(i).iter_mut().zip(&mask) {
                if m {
                    *v = T::zero();
                }
            }
        }
    }
    out
}

/// Zeros each entry independently with probability `p`.
pub fn mask_entries<T: Real>(x: &DenseMatrix<T>, p: f64, rng: &mut Rng) -> DenseMatrix<T> {
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        if rng.bernoulli(p) {
            *v = T::zero();
        }
    }
    out
}

fn make_view<T: Real>(
    n: usize,
    edges: &[(usize, usize)],
    features: &DenseMatrix<T>,
    spec: &AugmentationSpec,
    rng: &mut Rng,
) -> GraphView<T> {
    let kept = drop_edge_list(edges, spec.p_edge_drop, rng);
    let adjacency = normalized_adjacency_from_edges(n, &kept);
    let features = match spec.mask_mode {
        MaskMode::Column => mask_features(features, spec.p_feat_mask, rng),
        MaskMode::Entry => mask_entries(features, spec.p_feat_mask, rng),
    };
    GraphView {
        edges: kept,
        adjacency,
        features,
    }
}

/// Two independently augmented views of `g`.
pub fn make_views<T: Real>(
    g: &GraphDataset,
    spec: &AugmentationSpec,
    rng: &mut Rng,
) -> (GraphView<T>, GraphView<T>) {
    make_views_with_features(g, &g.features().cast(), spec, rng)
}

/// As [`make_views`] with the features already converted to `T`.
pub fn make_views_with_features<T: Real>(
    g: &GraphDataset,
    features: &DenseMatrix<T>,
    spec: &AugmentationSpec,
    rng: &mut Rng,
) -> (GraphView<T>, GraphView<T>) {
    let a = make_view(g.num_nodes(), g.edges(), features, spec, rng);
    let b = make_view(g.num_nodes(), g.edges(), features, spec, rng);
    (a, b)
}
