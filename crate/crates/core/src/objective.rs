//! Column standardization and the canonical-correlation contrastive loss.
//!
//! Standardization maps each column to mean 0 and population standard
//! deviation `1/sqrt(N)`, so non-degenerate columns have unit L2 norm:
//!
//! ```text
//! Z̃ = (Z - μ) / ((σ + eps) · sqrt(N))
//! ```
//!
//! The loss on two standardized views is
//!
//! ```text
//! ‖Z̃A - Z̃B‖²_F + λ (‖Z̃AᵀZ̃A - I‖²_F + ‖Z̃BᵀZ̃B - I‖²_F)
//! ```

use crate::error::{Error, Result};
use crate::linalg::{matmul, DenseMatrix, Real};

pub const DEFAULT_LAMBDA: f64 = 1e-3;
pub const DEFAULT_EPSILON_STD: f64 = 1e-8;

/// Per-column statistics kept from [`standardize`] for [`standardize_backward`].
#[derive(Clone, Debug)]
pub struct StandardizeTape<T = f64> {
    mean: Vec<f64>,
    std: Vec<f64>,
    eps: f64,
    output: Option<DenseMatrix<T>>,
}

impl<T: Real> Default for StandardizeTape<T> {
    fn default() -> Self {
        Self {
            mean: Vec::new(),
            std: Vec::new(),
            eps: 0.0,
            output: None,
        }
    }
}

impl<T: Real> StandardizeTape<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population standard deviation of each column.
    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn output(&self) -> Option<&DenseMatrix<T>> {
        self.output.as_ref()
    }
}

pub fn standardize<T: Real>(
    z: &DenseMatrix<T>,
    eps: f64,
    tape: &mut StandardizeTape<T>,
) -> Result<DenseMatrix<T>> {
    let (n, d) = z.shape();
    if n < 2 {
        return Err(Error::invalid(format!("standardize needs at least 2 rows, got {n}")));
    }
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(z.row(i)) {
            *m += v.as_f64();
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut var = vec![0.0; d];
    for i in 0..n {
        for ((s, v), m) in var.iter_mut().zip(z.row(i)).zip(&mean) {
            let c = v.as_f64() - m;
            *s += c * c;
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / nf).sqrt()).collect();
    let denom: Vec<f64> = std.iter().map(|s| (s + eps) * nf.sqrt()).collect();

    let mut out = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let src = z.row(i);
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = T::of((src[j].as_f64() - mean[j]) / denom[j]);
        }
    }
    tape.mean = mean;
    tape.std = std;
    tape.eps = eps;
    tape.output = Some(out.clone());
    Ok(out)
}

/// Gradient with respect to the raw input of [`standardize`], accounting for
/// the dependence of both μ and σ on every entry of its column:
///
/// ```text
/// ∂L/∂Z_j = (1/sqrt(N)) · [ (g_j - mean(g)) / (σ + eps)  -  Z̃_j · Σ_i g_i Z̃_i / σ ]
/// ```
pub fn standardize_backward<T: Real>(
    grad_zstd: &DenseMatrix<T>,
    tape: &StandardizeTape<T>,
) -> Result<DenseMatrix<T>> {
    let zt = tape
        .output
        .as_ref()
        .ok_or(Error::MissingTape("standardize_backward"))?;
    if grad_zstd.shape() != zt.shape() {
        return Err(Error::ShapeMismatch {
            op: "standardize_backward",
            lhs: zt.shape(),
            rhs: grad_zstd.shape(),
        });
    }
    let (n, d) = zt.shape();
    let nf = n as f64;
    let mut g_mean = vec![0.0; d];
    let mut g_dot = vec![0.0; d];
    for i in 0..n {
        for (j, (g, z)) in grad_zstd.row(i).iter().zip(zt.row(i)).enumerate() {
            let g = g.as_f64();
            g_mean[j] += g;
            g_dot[j] += g * z.as_f64();
        }
    }
    g_mean.iter_mut().for_each(|m| *m /= nf);
    let k = 1.0 / nf.sqrt();
    let s: Vec<f64> = tape.std.iter().map(|s| s + tape.eps).collect();
    // A zero-variance column standardizes to zeros, so its σ term vanishes.
    let proj: Vec<f64> = tape
        .std
        .iter()
        .zip(&g_dot)
        .map(|(&sd, &dot)| if sd > 0.0 { dot / sd } else { 0.0 })
        .collect();

    let mut out = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let g = grad_zstd.row(i);
        let z = zt.row(i);
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            let v = k * ((g[j].as_f64() - g_mean[j]) / s[j] - z[j].as_f64() * proj[j]);
            *o = T::of(v);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct LossTerms {
    pub invariance: f64,
    pub decorrelation: f64,
    pub total: f64,
}

/// Loss and gradients on already standardized views.
///
/// ```text
/// ∂L/∂Z̃A =  2 (Z̃A - Z̃B) + 4λ Z̃A (Z̃AᵀZ̃A - I)
/// ∂L/∂Z̃B = -2 (Z̃A - Z̃B) + 4λ Z̃B (Z̃BᵀZ̃B - I)
/// ```
pub fn cca_loss<T: Real>(
    za_std: &DenseMatrix<T>,
    zb_std: &DenseMatrix<T>,
    lambda: f64,
) -> Result<(f64, DenseMatrix<T>, DenseMatrix<T>)> {
    let (terms, ga, gb) = cca_loss_terms(za_std, zb_std, lambda, true)?;
    Ok((terms.total, ga.expect("requested"), gb.expect("requested")))
}

/// Loss split into its two terms; gradients only when `with_grad`.
pub fn cca_loss_terms<T: Real>(
    za: &DenseMatrix<T>,
    zb: &DenseMatrix<T>,
    lambda: f64,
    with_grad: bool,
) -> Result<(LossTerms, Option<DenseMatrix<T>>, Option<DenseMatrix<T>>)> {
    if za.shape() != zb.shape() {
        return Err(Error::ShapeMismatch {
            op: "cca_loss",
            lhs: za.shape(),
            rhs: zb.shape(),
        });
    }
    let diff = za.sub(zb)?;
    let invariance = diff.frobenius_sq();
    let gram_minus_identity = |z: &DenseMatrix<T>| -> Result<DenseMatrix<T>> {
        let mut c = matmul(z, z, true, false)?;
        for j in 0..c.rows() {
            c.set(j, j, c.get(j, j) - T::one());
        }
        Ok(c)
    };
    let ca = gram_minus_identity(za)?;
    let cb = gram_minus_identity(zb)?;
    let decorrelation = ca.frobenius_sq() + cb.frobenius_sq();
    let terms = LossTerms {
        invariance,
        decorrelation,
        total: invariance + lambda * decorrelation,
    };
    if !with_grad {
        return Ok((terms, None, None));
    }
    let two = T::of(2.0);
    let four_lambda = T::of(4.0 * lambda);
    let mut ga = diff.scale(two);
    ga.axpy(four_lambda, &matmul(za, &ca, false, false)?)?;
    let mut gb = diff.scale(-two);
    gb.axpy(four_lambda, &matmul(zb, &cb, false, false)?)?;
    Ok((terms, Some(ga), Some(gb)))
}

/// Loss value and gradients with respect to the two raw (unstandardized) views.
#[derive(Clone, Debug)]
pub struct ContrastOutput<T = f64> {
    pub loss: f64,
    pub grad_a: DenseMatrix<T>,
    pub grad_b: DenseMatrix<T>,
}

/// A two-view contrastive objective on raw block outputs.
pub trait Contrast {
    fn name(&self) -> &'static str;

    fn loss<T: Real>(&self, za: &DenseMatrix<T>, zb: &DenseMatrix<T>) -> Result<f64>;

    fn loss_and_grad<T: Real>(&self, za: &DenseMatrix<T>, zb: &DenseMatrix<T>) -> Result<ContrastOutput<T>>;
}

/// The canonical-correlation objective: standardize each view, then
/// invariance plus `lambda`-weighted decorrelation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContrastLoss {
    pub lambda: f64,
    pub epsilon_std: f64,
}

impl Default for ContrastLoss {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            epsilon_std: DEFAULT_EPSILON_STD,
        }
    }
}

impl ContrastLoss {
    pub fn new(lambda: f64, epsilon_std: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
        }
        if !(epsilon_std > 0.0 && epsilon_std.is_finite()) {
            return Err(Error::invalid(format!("epsilon_std must be positive, got {epsilon_std}")));
        }
        Ok(Self { lambda, epsilon_std })
    }
}

impl Contrast for ContrastLoss {
    fn name(&self) -> &'static str {
        "cca"
    }

    fn loss<T: Real>(&self, za: &DenseMatrix<T>, zb: &DenseMatrix<T>) -> Result<f64> {
        let sa = standardize(za, self.epsilon_std, &mut StandardizeTape::new())?;
        let sb = standardize(zb, self.epsilon_std, &mut StandardizeTape::new())?;
        Ok(cca_loss_terms(&sa, &sb, self.lambda, false)?.0.total)
    }

    fn loss_and_grad<T: Real>(&self, za: &DenseMatrix<T>, zb: &DenseMatrix<T>) -> Result<ContrastOutput<T>> {
        let mut ta = StandardizeTape::new();
        let mut tb = StandardizeTape::new();
        let sa = standardize(za, self.epsilon_std, &mut ta)?;
        let sb = standardize(zb, self.epsilon_std, &mut tb)?;
        let (loss, ga, gb) = cca_loss(&sa, &sb, self.lambda)?;
        Ok(ContrastOutput {
            loss,
            grad_a: standardize_backward(&ga, &ta)?,
            grad_b: standardize_backward(&gb, &tb)?,
        })
    }
}
