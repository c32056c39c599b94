use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split tag {other:?} (expected train, val or test)")),
        }
    }
}

/// A node-classification benchmark graph.
///
/// Edges are undirected and stored once as `(u, v)` with `u < v`, sorted.
/// Self-loops are never stored; normalization adds them.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset {
    features: DenseMatrix<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    split: Vec<Split>,
}

impl GraphDataset {
    /// Validates and canonicalizes. Reversed and repeated edges collapse into one.
    pub fn new(
        features: DenseMatrix<f64>,
        labels: Vec<usize>,
        edges: Vec<(usize, usize)>,
        split: Vec<Split>,
    ) -> Result<Self> {
        let mut g = Self::without_split(features, labels, edges)?;
        if split.len() != g.num_nodes() {
            return Err(Error::InvalidDataset(format!(
                "split has {} tags for {} nodes",
                split.len(),
                g.num_nodes()
            )));
        }
        g.split = split;
        g.check_train_covers_classes()?;
        Ok(g)
    }

    /// Builds a dataset whose split is still to be assigned (every node tagged
    /// `Train` until then).
    pub(crate) fn without_split(
        features: DenseMatrix<f64>,
        labels: Vec<usize>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} feature rows",
                labels.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidDataset(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidDataset(format!("self-loop on node {u}")));
            }
            canonical.push((u.min(v), u.max(v)));
        }
        canonical.sort_unstable();
        canonical.dedup();
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        Ok(Self {
            features,
            labels,
            num_classes,
            edges: canonical,
            split: vec![Split::Train; n],
        })
    }

    pub(crate) fn check_train_covers_classes(&self) -> Result<()> {
        match self.classes_missing_from_train().first() {
            Some(c) => Err(Error::InvalidDataset(format!(
                "class {c} has no node in the train split"
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn classes_missing_from_train(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_classes];
        for (&y, &s) in self.labels.iter().zip(&self.split) {
            if s == Split::Train {
                seen[y] = true;
            }
        }
        (0..self.num_classes).filter(|&c| !seen[c]).collect()
    }

    pub(crate) fn set_split(&mut self, split: Vec<Split>) {
        debug_assert_eq!(split.len(), self.num_nodes());
        self.split = split;
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge count under the directed-entry convention (each edge counted twice).
    pub fn num_directed_entries(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn features(&self) -> &DenseMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn nodes_in(&self, which: Split) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&i| self.split[i] == which)
            .collect()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes()];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Sorted neighbor list per node.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Copy with every feature row scaled to unit L1 norm (all-zero rows stay zero).
    pub fn row_normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..out.num_nodes() {
            let row = out.features.row_mut(i);
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        out
    }
}
