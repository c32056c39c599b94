use super::GraphDataset;
use crate::linalg::DenseMatrix;

/// `D̂^{-1/2} (A + I) D̂^{-1/2}` in CSR form. Symmetric, with a self-loop in
/// every row and column indices sorted within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    row_offsets: Vec<usize>,
    column_indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.column_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, u: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[u]..self.row_offsets[u + 1];
        (&self.column_indices[r.clone()], &self.values[r])
    }

    /// Entry `(u, v)`, zero when absent.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        let (cols, vals) = self.row(u);
        cols.binary_search(&v).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let n = self.num_nodes();
        let mut m = DenseMatrix::zeros(n, n);
        for u in 0..n {
            let (cols, vals) = self.row(u);
            for (&v, &w) in cols.iter().zip(vals) {
                m.set(u, v, w);
            }
        }
        m
    }
}

/// Normalized adjacency of a dataset's stored edge set.
pub fn normalized_adjacency(g: &GraphDataset) -> NormalizedAdjacency {
    normalized_adjacency_from_edges(g.num_nodes(), g.edges())
}

/// Normalized adjacency for `n` nodes and an undirected edge list. Repeated,
/// reversed and self-loop entries are ignored; degrees count distinct neighbors.
pub fn normalized_adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> NormalizedAdjacency {
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u != v {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
    }
    for (u, list) in neighbors.iter_mut().enumerate() {
        list.sort_unstable();
        list.dedup();
        let at = list.partition_point(|&v| v < u);
        list.insert(at, u);
    }
    // self-loop included, so this is |N(u)| + 1
    let scale: Vec<f64> = neighbors.iter().map(|l| l.len() as f64).collect();

    let mut row_offsets = Vec::with_capacity(n + 1);
    let nnz = neighbors.iter().map(Vec::len).sum();
    let mut column_indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_offsets.push(0);
    for (u, list) in neighbors.iter().enumerate() {
        for &v in list {
            column_indices.push(v);
            values.push(1.0 / (scale[u] * scale[v]).sqrt());
        }
        row_offsets.push(column_indices.len());
    }
    NormalizedAdjacency {
        row_offsets,
        column_indices,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// D̂^{-1/2}(A+I)D̂^{-1/2} assembled densely, entry by entry.
    fn brute_force(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for &(u, v) in edges {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
        (0..n)
            .map(|i| (0..n).map(|j| a[i][j] / (d[i].sqrt() * d[j].sqrt())).collect())
            .collect()
    }

    #[test]
    fn path_graph_values() {
        let a = normalized_adjacency_from_edges(3, &[(0, 1), (1, 2)]);
        let s6 = 1.0 / 6f64.sqrt();
        assert!((a.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((a.get(0, 1) - s6).abs() < 1e-12);
        assert!((a.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((a.get(1, 2) - s6).abs() < 1e-12);
        assert!((a.get(2, 2) - 0.5).abs() < 1e-12);
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn isolated_node_is_identity() {
        let a = normalized_adjacency_from_edges(1, &[]);
        assert_eq!(a.to_dense().as_slice(), &[1.0]);
    }

    #[test]
    fn matches_brute_force_and_is_symmetric() {
        let edges = [(0, 1), (0, 2), (1, 2), (3, 4), (2, 4)];
        let a = normalized_adjacency_from_edges(6, &edges);
        let want = brute_force(6, &edges);
        let dense = a.to_dense();
        for i in 0..6 {
            for j in 0..6 {
                assert!((dense.get(i, j) - want[i][j]).abs() < 1e-12);
                assert_eq!(dense.get(i, j), dense.get(j, i));
            }
        }
        // node 5 isolated
        assert_eq!(a.row(5), (&[5usize][..], &[1.0][..]));
    }

    #[test]
    fn duplicate_and_reversed_entries_do_not_inflate_degree() {
        let a = normalized_adjacency_from_edges(2, &[(0, 1), (1, 0), (0, 1), (1, 1)]);
        assert!((a.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(a.nnz(), 4);
    }
}
