//! Reproducible Monte Carlo.
//!
//! A run of `n` samples is cut into chunks of [`CHUNK_SIZE`]. Chunk `k`
//! draws from `ChaCha8Rng::seed_from_u64(seed ^ tag)` on stream `k`, so
//! every sample is fixed by `(seed, tag, index)` and the chunk sums are
//! added in index order whatever the thread schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;

pub const CHUNK_SIZE: u64 = 1 << 16;

/// Per-component sums of a vector-valued sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments<const K: usize> {
    pub n: u64,
    #[serde(with = "serde_arrays")]
    pub sum: [f64; K],
    #[serde(with = "serde_arrays")]
    pub sum_sq: [f64; K],
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const K: usize>(v: &[f64; K], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const K: usize>(d: D) -> Result<[f64; K], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"fixed-size array"))
    }
}

impl<const K: usize> Moments<K> {
    fn zero() -> Self {
        Moments {
            n: 0,
            sum: [0.0; K],
            sum_sq: [0.0; K],
        }
    }

    fn push(&mut self, x: &[f64; K]) {
        self.n += 1;
        for i in 0..K {
            self.sum[i] += x[i];
            self.sum_sq[i] += x[i] * x[i];
        }
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        for i in 0..K {
            self.sum[i] += o.sum[i];
            self.sum_sq[i] += o.sum_sq[i];
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n as f64
    }

    /// Sample standard deviation of component `i`.
    pub fn std_dev(&self, i: usize) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let m = self.mean(i);
        ((self.sum_sq[i] - n * m * m) / (n - 1.0)).max(0.0).sqrt()
    }

    /// Standard error of [`Moments::mean`].
    pub fn std_error(&self, i: usize) -> f64 {
        self.std_dev(i) / (self.n as f64).sqrt()
    }
}

/// Generator for chunk `chunk` of the run `(seed, tag)`.
pub fn chunk_rng(seed: u64, tag: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag);
    rng.set_stream(chunk);
    rng
}

/// Draws `n` samples of `f` and accumulates their sums.
pub fn sample_moments<const K: usize, F>(seed: u64, tag: u64, n: u64, exec: Execution, f: F) -> Moments<K>
where
    F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    let parts = exec.map(chunks as usize, |k| {
        let k = k as u64;
        let mut rng = chunk_rng(seed, tag, k);
        let len = CHUNK_SIZE.min(n - k * CHUNK_SIZE);
        let mut m = Moments::zero();
        for _ in 0..len {
            m.push(&f(&mut rng));
        }
        m
    });
    let mut total = Moments::zero();
    for p in &parts {
        total.merge(p);
    }
    total
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}
