use crate::encoder::{forward_all_layers, BlockEncoder};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, GraphDataset};
use crate::linalg::{DenseMatrix, Real};

/// Rows with norm at or below this are excluded from MAD.
pub const MAD_ZERO_NORM: f64 = 1e-12;

/// Mean average cosine distance over graph neighbors.
///
/// For each node with non-zero representation, average `1 - cos(z_u, z_v)`
/// over neighbors `v` whose representation is also non-zero; then average
/// over the nodes that had at least one such neighbor. `None` when no node
/// qualifies.
pub fn mad<T: Real>(z: &DenseMatrix<T>, g: &GraphDataset) -> Result<Option<f64>> {
    if z.rows() != g.num_nodes() {
        return Err(Error::ShapeMismatch {
            op: "mad",
            lhs: z.shape(),
            rhs: (g.num_nodes(), z.cols()),
        });
    }
    let norms: Vec<f64> = (0..z.rows())
        .map(|i| z.row(i).iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt())
        .collect();
    let n = g.num_nodes();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for &(u, v) in g.edges() {
        if norms[u] <= MAD_ZERO_NORM || norms[v] <= MAD_ZERO_NORM {
            continue;
        }
        let dot: f64 = z
            .row(u)
            .iter()
            .zip(z.row(v))
            .map(|(a, b)| a.as_f64() * b.as_f64())
            .sum();
        let cos = (dot / (norms[u] * norms[v])).clamp(-1.0, 1.0);
        let d = 1.0 - cos;
        sum[u] += d;
        sum[v] += d;
        count[u] += 1;
        count[v] += 1;
    }
    let per_node: Vec<f64> = sum
        .iter()
        .zip(&count)
        .filter(|&(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .collect();
    if per_node.is_empty() {
        Ok(None)
    } else {
        Ok(Some(per_node.iter().sum::<f64>() / per_node.len() as f64))
    }
}

/// MAD of every layer output `H1..HL` on the clean (un-augmented) graph.
pub fn mad_profile<T: Real>(enc: &BlockEncoder<T>, g: &GraphDataset) -> Result<Vec<Option<f64>>> {
    let adj = normalized_adjacency(g);
    let x: DenseMatrix<T> = g.features().cast();
    forward_all_layers(enc, &adj, &x)?
        .iter()
        .map(|h| mad(h, g))
        .collect()
}
