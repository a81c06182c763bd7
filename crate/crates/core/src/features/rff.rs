//! Random Fourier features for the Gaussian kernel `exp(−‖x − x′‖²/s)`.
//!
//! `z(x)ⱼ = √(2/m) cos(ωⱼᵀx + bⱼ)` with `ωⱼ ~ N(0, (2/s) I)` and
//! `bⱼ ~ U[0, 2π)`, so that `E[z(x)ᵀz(x′)]` equals the kernel.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::row_chunks;
use crate::rng;

/// A drawn frequency bank. Only `(input_dim, m, bandwidth, seed)` need to be
/// stored; the bank is regenerated from them.
#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    input_dim: usize,
    bandwidth: f64,
    seed: u64,
    /// `input_dim × m`.
    omega: Array2<f64>,
    phase: Array1<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RffSpec {
    pub input_dim: usize,
    pub m: usize,
    pub bandwidth: f64,
    pub seed: u64,
}

impl RffMap {
    pub fn new(input_dim: usize, m: usize, bandwidth: f64, seed: u64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if m == 0 {
            return Err(Error::invalid("number of random features must be at least 1"));
        }
        let mut r = rng::stream(seed);
        let normal = Normal::new(0.0, (2.0 / bandwidth).sqrt()).expect("finite positive std");
        let omega = Array2::from_shape_simple_fn((input_dim, m), || normal.sample(&mut r));
        let phase = Array1::from_shape_simple_fn(m, || r.random_range(0.0..std::f64::consts::TAU));
        Ok(Self {
            input_dim,
            bandwidth,
            seed,
            omega,
            phase,
        })
    }

    pub fn from_spec(spec: &RffSpec) -> Result<Self> {
        Self::new(spec.input_dim, spec.m, spec.bandwidth, spec.seed)
    }

    pub fn spec(&self) -> RffSpec {
        RffSpec {
            input_dim: self.input_dim,
            m: self.m(),
            bandwidth: self.bandwidth,
            seed: self.seed,
        }
    }

    pub fn m(&self) -> usize {
        self.phase.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim {
            return Err(Error::shape(format!(
                "random features expect {} input columns, got {}",
                self.input_dim,
                x.ncols()
            )));
        }
        let scale = (2.0 / self.m() as f64).sqrt();
        let chunks: Vec<Array2<f64>> = row_chunks(x)
            .into_par_iter()
            .map(|c| {
                let mut z = c.dot(&self.omega);
                z += &self.phase;
                z.mapv_inplace(|v| scale * v.cos());
                z
            })
            .collect();
        let views: Vec<_> = chunks.iter().map(|c| c.view()).collect();
        if views.is_empty() {
            return Ok(Array2::zeros((0, self.m())));
        }
        ndarray::concatenate(Axis(0), &views).map_err(|e| Error::shape(e.to_string()))
    }
}

/// `n × m` random Fourier features of `x`.
pub fn rff_block(x: ArrayView2<'_, f64>, m: usize, bandwidth: f64, seed: u64) -> Result<Array2<f64>> {
    RffMap::new(x.ncols(), m, bandwidth, seed)?.transform(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::stream(seed);
        Array2::from_shape_simple_fn((n, d), || r.random_range(-1.0..1.0))
    }

    #[test]
    fn entries_bounded_by_amplitude() {
        let z = rff_block(points(30, 4, 1).view(), 64, 2.0, 3).unwrap();
        let amp = (2.0 / 64.0_f64).sqrt();
        assert!(z.iter().all(|v| v.abs() <= amp));
    }

    #[test]
    fn deterministic_given_seed() {
        let x = points(10, 3, 0);
        assert_eq!(rff_block(x.view(), 32, 1.0, 9).unwrap(), rff_block(x.view(), 32, 1.0, 9).unwrap());
        assert_ne!(rff_block(x.view(), 32, 1.0, 9).unwrap(), rff_block(x.view(), 32, 1.0, 10).unwrap());
    }

    #[test]
    fn rejects_bad_bandwidth() {
        let x = points(2, 2, 0);
        assert!(rff_block(x.view(), 4, 0.0, 0).is_err());
        assert!(rff_block(x.view(), 4, -1.0, 0).is_err());
        assert!(rff_block(x.view(), 0, 1.0, 0).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let map = RffMap::new(3, 8, 0.5, 17).unwrap();
        assert_eq!(RffMap::from_spec(&map.spec()).unwrap(), map);
    }
}
