use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DenseMatrix, Real};

/// Seeded ChaCha8 stream. Identical `(seed, stream, call sequence)` gives
/// identical output on every platform.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            seed,
            stream,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh generator on another stream of the same seed; does not advance `self`.
    pub fn fork(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.inner.random_bool(p)
        }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

/// Glorot/Xavier uniform initialization in `±sqrt(6 / (rows + cols))`.
pub fn glorot_init<T: Real>(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| T::of(rng.uniform_in(-bound, bound)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = Rng::with_stream(42, 1);
        assert_ne!(Rng::new(42).next_u64(), c.next_u64());
    }

    #[test]
    fn fork_is_independent_of_parent_position() {
        let mut a = Rng::new(9);
        let f1 = a.fork(3);
        a.next_u64();
        let f2 = a.fork(3);
        assert_eq!(f1.clone().next_u64(), f2.clone().next_u64());
    }

    #[test]
    fn glorot_is_deterministic() {
        let a: DenseMatrix = glorot_init(4, 4, &mut Rng::new(5));
        let b: DenseMatrix = glorot_init(4, 4, &mut Rng::new(5));
        assert_eq!(a, b);
    }

    #[test]
    fn glorot_bound() {
        let w: DenseMatrix = glorot_init(100, 100, &mut Rng::new(1));
        assert!(w.max_abs() <= (6.0f64 / 200.0).sqrt());
    }

    #[test]
    fn glorot_mean_within_three_sigma() {
        // U(-a, a) has variance a^2 / 3; the sample mean of n draws has sd a / sqrt(3n).
        let n = 1000 * 1000;
        let a = (6.0f64 / 2000.0).sqrt();
        let w: DenseMatrix = glorot_init(1000, 1000, &mut Rng::new(17));
        let mean = w.as_slice().iter().sum::<f64>() / n as f64;
        let sd = a / (3.0 * n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd, "mean {mean} vs 3sd {}", 3.0 * sd);
    }
}
