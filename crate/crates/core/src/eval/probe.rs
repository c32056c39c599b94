use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphDataset, Split};
use crate::linalg::{glorot_init, matmul, DenseMatrix, Real, Rng};
use crate::trainer::{adam_step, AdamState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub repeats: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 1e-2,
            weight_decay: 1e-4,
            repeats: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Test accuracy of each repeat at its best-validation epoch.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
}

impl ProbeResult {
    pub fn from_accuracies(accuracies: Vec<f64>) -> Self {
        let n = accuracies.len().max(1) as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        Self {
            accuracies,
            mean,
            std: var.sqrt(),
        }
    }
}

/// Centers columns and divides by one global RMS. Both steps commute with
/// rotations of the embedding space, so the probe only sees scale-free inputs.
fn prepare(z: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let (n, d) = z.shape();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(z.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut out = DenseMatrix::from_fn(n, d, |i, j| z.get(i, j) - mean[j]);
    let rms = (out.frobenius_sq() / (n * d).max(1) as f64).sqrt();
    if rms > 0.0 && rms.is_finite() {
        out = out.scale(1.0 / rms);
    }
    out
}

fn gather(x: &DenseMatrix<f64>, idx: &[usize]) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(idx.len(), x.cols(), |i, j| x.get(idx[i], j))
}

fn logits(x: &DenseMatrix<f64>, w: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> Result<DenseMatrix<f64>> {
    let mut out = matmul(x, w, false, false)?;
    for i in 0..out.rows() {
        for (o, bv) in out.row_mut(i).iter_mut().zip(b.as_slice()) {
            *o += bv;
        }
    }
    Ok(out)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

fn accuracy(scores: &DenseMatrix<f64>, labels: &[usize]) -> f64 {
    let hits = (0..scores.rows())
        .filter(|&i| argmax(scores.row(i)) == labels[i])
        .count();
    hits as f64 / labels.len() as f64
}

/// Gradient of the mean cross-entropy with respect to the logits: `(softmax - onehot) / n`.
fn softmax_ce_grad(scores: &DenseMatrix<f64>, labels: &[usize]) -> DenseMatrix<f64> {
    let n = scores.rows() as f64;
    let mut g = scores.clone();
    for (i, &y) in labels.iter().enumerate() {
        let row = g.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total * n;
        }
        row[y] -= 1.0 / n;
    }
    g
}

/// Trains a softmax classifier on frozen representations of the train nodes,
/// picks the epoch with the best validation accuracy and reports test accuracy
/// there. Each repeat re-seeds the classifier initialization.
pub fn linear_probe<T: Real>(
    z: &DenseMatrix<T>,
    g: &GraphDataset,
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<ProbeResult> {
    if z.rows() != g.num_nodes() {
        return Err(Error::ShapeMismatch {
            op: "linear_probe",
            lhs: z.shape(),
            rhs: (g.num_nodes(), z.cols()),
        });
    }
    if cfg.repeats == 0 {
        return Err(Error::invalid("probe needs at least one repeat"));
    }
    let sets = [Split::Train, Split::Val, Split::Test].map(|s| g.nodes_in(s));
    if let Some(empty) = sets.iter().position(|s| s.is_empty()) {
        return Err(Error::invalid(format!(
            "probe needs a non-empty {} split",
            [Split::Train, Split::Val, Split::Test][empty]
        )));
    }
    if !z.is_finite() {
        return Err(Error::invalid("representations contain non-finite values"));
    }
    let x = prepare(&z.cast());
    let [x_tr, x_va, x_te] = [0, 1, 2].map(|k| gather(&x, &sets[k]));
    let [y_tr, y_va, y_te]: [Vec<usize>; 3] =
        [0, 1, 2].map(|k| sets[k].iter().map(|&i| g.labels()[i]).collect());
    let c = g.num_classes();

    let mut accuracies = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let mut rng = Rng::with_stream(seed, r as u64);
        let mut w: DenseMatrix<f64> = glorot_init(x.cols(), c, &mut rng);
        let mut b = DenseMatrix::zeros(1, c);
        let mut state = AdamState::new([&w, &b]);
        let mut best_val = f64::NEG_INFINITY;
        let mut test_at_best = 0.0;
        for _ in 0..cfg.epochs {
            let grad_logits = softmax_ce_grad(&logits(&x_tr, &w, &b)?, &y_tr);
            let grad_w = matmul(&x_tr, &grad_logits, true, false)?;
            let grad_b = DenseMatrix::from_fn(1, c, |_, k| {
                (0..grad_logits.rows()).map(|i| grad_logits.get(i, k)).sum()
            });
            adam_step(
                &mut [&mut w, &mut b],
                &[grad_w, grad_b],
                &mut state,
                cfg.learning_rate,
                cfg.weight_decay,
            )?;
            let val = accuracy(&logits(&x_va, &w, &b)?, &y_va);
            if val > best_val {
                best_val = val;
                test_at_best = accuracy(&logits(&x_te, &w, &b)?, &y_te);
            }
        }
        if cfg.epochs == 0 {
            test_at_best = accuracy(&logits(&x_te, &w, &b)?, &y_te);
        }
        accuracies.push(test_at_best);
    }
    Ok(ProbeResult::from_accuracies(accuracies))
}
