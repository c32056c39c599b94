//! Dense storage, sparse-dense products and seeded randomness.

mod dense;
mod real;
mod rng;

pub use dense::{matmul, DenseMatrix};
pub use real::Real;
pub use rng::{glorot_init, Rng};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

/// `Â · X` for a CSR adjacency. Each output row is accumulated in CSR order,
/// so results are bit-reproducible.
pub fn spmm<T: Real>(a: &NormalizedAdjacency, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.num_nodes();
    if x.rows() != n {
        return Err(Error::ShapeMismatch {
            op: "spmm",
            lhs: (n, n),
            rhs: x.shape(),
        });
    }
    let d = x.cols();
    let mut out = DenseMatrix::zeros(n, d);
    for u in 0..n {
        let (cols, vals) = a.row(u);
        let dst = out.row_mut(u);
        for (&v, &w) in cols.iter().zip(vals) {
            let w = T::of(w);
            for (o, &s) in dst.iter_mut().zip(x.row(v)) {
                *o = *o + w * s;
            }
        }
    }
    Ok(out)
}
