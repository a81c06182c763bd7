//! Workloads shared by the criterion benches.

use lsmc_core::data::{synthesize, NoiseMode, Synthetic, SyntheticSpec};
use lsmc_core::rng::{gaussian_matrix, stream};
use ndarray::Array2;

/// Softmax-link data with sampled one-hot labels.
pub fn softmax_problem(n: usize, d: usize, k: usize) -> Synthetic {
    let spec = SyntheticSpec::new(n, d, k, "softmax").with_noise(NoiseMode::MultinomialSample);
    synthesize(&spec, 17).expect("valid spec")
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    gaussian_matrix(rows, cols, &mut stream(seed))
}
