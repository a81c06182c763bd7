//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use lsmc_core::glm::{loss, LabeledBatch, LinkSpec};
use lsmc_core::rng;
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::stream(seed);
    Array2::from_shape_simple_fn((n, d), || r.sample(StandardNormal))
}

pub fn random_labels(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed);
    (0..n).map(|i| if i < k { i } else { r.random_range(0..k) }).collect()
}

pub fn one_hot(labels: &[usize], k: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), k));
    for (i, &c) in labels.iter().enumerate() {
        y[[i, c]] = 1.0;
    }
    y
}

pub fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Minimum-norm least squares `argmin_W ‖X Wᵀ − Y‖²` via SVD; returns `k × d`.
pub fn ls_oracle(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Array2<f64> {
    let svd = to_na(x).svd(true, true);
    let sol = svd.solve(&to_na(y), 1e-12).expect("svd solve");
    from_na(&sol).reversed_axes()
}

pub fn max_abs_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Exact simplex projection by enumerating every support set.
pub fn simplex_bruteforce(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let tau = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        if support.iter().any(|&i| v[i] - tau < 0.0) {
            continue;
        }
        let mut p = vec![0.0; k];
        for &i in &support {
            p[i] = v[i] - tau;
        }
        let dist: f64 = p.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, p));
        }
    }
    best.expect("some support is always feasible").1
}

/// Largest violation of the projection's optimality conditions: `p ≥ 0`,
/// `Σp = 1`, and `p = max(v − τ, 0)` for a common threshold `τ`.
pub fn kkt_residual(v: &[f64], p: &[f64]) -> f64 {
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let tau = support.iter().map(|&i| v[i] - p[i]).sum::<f64>() / support.len().max(1) as f64;
    let mut worst = (p.iter().sum::<f64>() - 1.0).abs();
    for i in 0..p.len() {
        worst = worst.max((-p[i]).max(0.0));
        worst = worst.max((p[i] - (v[i] - tau).max(0.0)).abs());
    }
    worst
}

/// Central differences of the loss, entry by entry.
pub fn fd_gradient(link: &LinkSpec, w: &Array2<f64>, batch: &LabeledBatch<'_>, h: f64) -> Array2<f64> {
    let mut g = Array2::zeros(w.dim());
    for idx in ndarray::indices(w.dim()) {
        let mut wp = w.clone();
        let mut wm = w.clone();
        wp[idx] += h;
        wm[idx] -= h;
        g[idx] = (loss(link, wp.view(), batch).unwrap() - loss(link, wm.view(), batch).unwrap()) / (2.0 * h);
    }
    g
}

/// `exp(−‖a − b‖²/s)` for every pair of rows.
pub fn gaussian_kernel(x: ArrayView2<'_, f64>, s: f64) -> Array2<f64> {
    let n = x.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let d: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d / s).exp()
    })
}

/// `U diag(s) Vᵀ` with seeded orthonormal `U` (n × r) and `V` (d × r).
pub fn matrix_with_singular_values(n: usize, d: usize, s: &[f64], seed: u64) -> Array2<f64> {
    let r = s.len();
    let u = to_na(gaussian(n, r, seed).view()).qr().q();
    let v = to_na(gaussian(d, r, seed + 1).view()).qr().q();
    let m = u * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(s)) * v.transpose();
    from_na(&m)
}
