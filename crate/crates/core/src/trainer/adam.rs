use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Real};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Moment estimates for Adam with decoupled weight decay.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T = f64> {
    first: Vec<DenseMatrix<T>>,
    second: Vec<DenseMatrix<T>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a DenseMatrix<T>>) -> Self {
        let first: Vec<_> = params
            .into_iter()
            .map(|p| DenseMatrix::zeros(p.rows(), p.cols()))
            .collect();
        Self {
            second: first.clone(),
            first,
            step: 0,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        }
    }

    /// Number of completed optimizer steps.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[DenseMatrix<T>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[DenseMatrix<T>] {
        &self.second
    }
}

/// One bias-corrected Adam step:
///
/// ```text
/// m ← β1 m + (1-β1) g          v ← β2 v + (1-β2) g²
/// p ← p - lr·wd·p - lr · m̂ / (sqrt(v̂) + ε),   m̂ = m/(1-β1ᵗ), v̂ = v/(1-β2ᵗ)
/// ```
///
/// Nothing is modified if any gradient is non-finite.
pub fn adam_step<T: Real>(
    params: &mut [&mut DenseMatrix<T>],
    grads: &[DenseMatrix<T>],
    state: &mut AdamState<T>,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::invalid(format!(
            "adam_step: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || state.first[k].shape() != g.shape() {
            return Err(Error::ShapeMismatch {
                op: "adam_step",
                lhs: p.shape(),
                rhs: g.shape(),
            });
        }
        if !g.is_finite() {
            return Err(Error::invalid(format!("non-finite gradient for parameter {k}")));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = state.first[k].as_mut_slice();
        let v = state.second[k].as_mut_slice();
        for (((pv, &gv), mv), vv) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
            let gf = gv.as_f64();
            let mf = b1 * mv.as_f64() + (1.0 - b1) * gf;
            let vf = b2 * vv.as_f64() + (1.0 - b2) * gf * gf;
            *mv = T::of(mf);
            *vv = T::of(vf);
            let pf = pv.as_f64();
            let update = lr * (mf / c1) / ((vf / c2).sqrt() + eps) + lr * weight_decay * pf;
            *pv = T::of(pf - update);
        }
    }
    Ok(())
}
