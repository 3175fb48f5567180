use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LinearMap;
use crate::{Error, Result};

/// A reproducible random stream addressed by `(seed, stream_id)`.
///
/// Streams with the same seed and different ids are independent ChaCha
/// streams, so parallel trials can each own one without coordination.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream for a sub-task. Depends only on this stream's address and
    /// `id`, never on how many draws were already taken.
    pub fn substream(&self, id: u64) -> RngStream {
        let mixed = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x9e37_79b9)));
        RngStream::new(mixed, id)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// `k` distinct indices from `0..n`, sorted.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = rand::seq::index::sample(&mut self.rng, n, k).into_vec();
        idx.sort_unstable();
        idx
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `m × d` matrix with i.i.d. N(0, 1) entries, filled row by row.
pub fn gaussian_matrix(rng: &mut RngStream, m: usize, d: usize) -> Result<LinearMap> {
    if m == 0 || d == 0 {
        return Err(Error::invalid("gaussian_matrix needs m, d >= 1"));
    }
    let entries: Vec<f64> = (0..m * d).map(|_| rng.normal()).collect();
    LinearMap::new(DMatrix::from_row_slice(m, d, &entries))
}

pub fn gaussian_vector(rng: &mut RngStream, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.normal())
}

/// Uniformly distributed point on the unit sphere of ℝ^d.
pub fn unit_vector(rng: &mut RngStream, d: usize) -> DVector<f64> {
    loop {
        let g = gaussian_vector(rng, d);
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}
