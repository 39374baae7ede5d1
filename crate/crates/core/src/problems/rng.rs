// SPDX-License-Identifier: Apache-2.0

//! Seeded random streams used by the instance generators.
//!
//! Every instance is drawn from ChaCha20 seeded with `seed_from_u64(seed)`;
//! retries use successive stream numbers of the same key. Gaussian samples
//! come from `rand_distr::StandardNormal` (ziggurat).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn instance_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Entries are drawn in column-major order.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| gaussian(rng))
}
