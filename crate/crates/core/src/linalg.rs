//! Dense linear-algebra kernels.
//!
//! The preconditioner used by every solver is the empirical second moment
//! `(1/n) XᵀX`, optionally shifted by a ridge `λI`. It is factored once with a
//! Cholesky decomposition and the factor is reused for every solve; the
//! inverse is never formed.
//!
//! Row reductions run in fixed-size chunks that are combined in chunk order,
//! so results are bit-for-bit identical for any thread count.

use nalgebra::DMatrix;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureSource;
use crate::error::{Error, Result};
use crate::rng;

/// Rows per reduction chunk.
pub const CHUNK_ROWS: usize = 2048;

/// Relative pivot floor for the Cholesky factorization.
const PIVOT_FLOOR: f64 = 4.0 * f64::EPSILON;

/// Row cap for spectrum estimation on tall matrices.
pub const SPECTRUM_ROW_CAP: usize = 10_000;

/// Empirical second moment `(1/n) Σ xᵢxᵢᵀ` together with a ridge shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    matrix: Array2<f64>,
    n: usize,
    ridge: f64,
}

impl SecondMoment {
    pub fn from_parts(matrix: Array2<f64>, n: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::shape("second moment must be square"));
        }
        if n == 0 {
            return Err(Error::NoExamples);
        }
        Ok(Self {
            matrix,
            n,
            ridge: 0.0,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_ridge(mut self, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::invalid(format!("ridge must be finite and >= 0, got {ridge}")));
        }
        self.ridge = ridge;
        Ok(self)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().sum()
    }

    /// `matrix + ridge·I`.
    pub fn regularized(&self) -> Array2<f64> {
        let mut a = self.matrix.clone();
        a.diag_mut().mapv_inplace(|v| v + self.ridge);
        a
    }

    /// Sample-size weighted average of two moments over disjoint example sets.
    pub fn merge(&self, other: &SecondMoment) -> Result<SecondMoment> {
        if self.dim() != other.dim() {
            return Err(Error::shape(format!(
                "cannot merge moments of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let n = self.n + other.n;
        let (wa, wb) = (self.n as f64 / n as f64, other.n as f64 / n as f64);
        let matrix = &self.matrix * wa + &other.matrix * wb;
        Ok(SecondMoment {
            matrix,
            n,
            ridge: self.ridge,
        })
    }

    pub fn factor(&self) -> Result<CholeskyFactor> {
        CholeskyFactor::new(self.regularized().view())
    }

    /// Factors the regularized moment. If that fails with a zero ridge, retries
    /// with `1e-8 · trace/d` and returns the substituted value.
    pub fn factor_with_fallback(&self) -> Result<(CholeskyFactor, Option<f64>)> {
        match self.factor() {
            Ok(f) => Ok((f, None)),
            Err(Error::NotPositiveDefinite { .. }) if self.ridge == 0.0 => {
                let d = self.dim().max(1) as f64;
                let floor = 1e-8 * self.trace() / d;
                let floor = if floor > 0.0 { floor } else { 1e-8 };
                let shifted = self.clone().with_ridge(floor)?;
                Ok((shifted.factor()?, Some(floor)))
            }
            Err(e) => Err(e),
        }
    }
}

/// Consecutive `CHUNK_ROWS`-row views of `x`.
pub(crate) fn row_chunks(x: ArrayView2<'_, f64>) -> Vec<ArrayView2<'_, f64>> {
    let n = x.nrows();
    (0..n)
        .step_by(CHUNK_ROWS)
        .map(|start| x.slice_move(s![start..(start + CHUNK_ROWS).min(n), ..]))
        .collect()
}

/// `(1/n) XᵀX` for an `n × d` data matrix.
pub fn accumulate_second_moment(x: ArrayView2<'_, f64>) -> Result<SecondMoment> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::NoExamples);
    }
    let d = x.ncols();
    let partials: Vec<Array2<f64>> = row_chunks(x)
        .into_par_iter()
        .map(|c| c.t().dot(&c))
        .collect();
    let mut m = Array2::<f64>::zeros((d, d));
    for p in &partials {
        m += p;
    }
    m /= n as f64;
    symmetrize_lower(&mut m);
    SecondMoment::from_parts(m, n)
}

/// `(1/n) AᵀB` for row-aligned `A` (n × p) and `B` (n × k).
pub fn cross_moment(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if n != b.nrows() {
        return Err(Error::shape(format!(
            "row counts differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if n == 0 {
        return Err(Error::NoExamples);
    }
    let chunks: Vec<_> = row_chunks(a).into_iter().zip(row_chunks(b)).collect();
    let partials: Vec<Array2<f64>> = chunks
        .into_par_iter()
        .map(|(ca, cb)| ca.t().dot(&cb))
        .collect();
    let mut m = Array2::<f64>::zeros((a.ncols(), b.ncols()));
    for p in &partials {
        m += p;
    }
    m /= n as f64;
    Ok(m)
}

fn symmetrize_lower(m: &mut Array2<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in 0..i {
            m[[j, i]] = m[[i, j]];
        }
    }
}

/// Lower-triangular Cholesky factor `A = LLᵀ`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    // Row-major d×d, upper triangle unused.
    lower: Vec<f64>,
    dim: usize,
}

impl CholeskyFactor {
    pub fn new(a: ArrayView2<'_, f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::shape("cholesky needs a square matrix"));
        }
        let d = a.nrows();
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let (ri, rj) = (&l[i * d..i * d + j], &l[j * d..j * d + j]);
                let dot: f64 = ri.iter().zip(rj).map(|(p, q)| p * q).sum();
                let s = a[[i, j]] - dot;
                if i == j {
                    let floor = PIVOT_FLOOR * (d as f64) * a[[i, i]].abs();
                    if !(s > floor) {
                        return Err(Error::NotPositiveDefinite { index: i, value: s });
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Ok(Self { lower: l, dim: d })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> Array2<f64> {
        let d = self.dim;
        Array2::from_shape_fn((d, d), |(i, j)| if j <= i { self.lower[i * d + j] } else { 0.0 })
    }

    /// Solves `A Z = B` for a `d × k` right-hand side.
    pub fn solve(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let d = self.dim;
        if b.nrows() != d {
            return Err(Error::shape(format!(
                "right-hand side has {} rows, factor has dimension {d}",
                b.nrows()
            )));
        }
        let k = b.ncols();
        let l = &self.lower;
        let mut z = b.to_owned();
        // L y = b, one row of the k-wide block at a time.
        for i in 0..d {
            for p in 0..i {
                let lip = l[i * d + p];
                if lip != 0.0 {
                    for c in 0..k {
                        z[[i, c]] -= lip * z[[p, c]];
                    }
                }
            }
            let diag = l[i * d + i];
            for c in 0..k {
                z[[i, c]] /= diag;
            }
        }
        // Lᵀ z = y
        for i in (0..d).rev() {
            let diag = l[i * d + i];
            for c in 0..k {
                z[[i, c]] /= diag;
            }
            for p in 0..i {
                let lip = l[i * d + p];
                if lip != 0.0 {
                    for c in 0..k {
                        z[[p, c]] -= lip * z[[i, c]];
                    }
                }
            }
        }
        Ok(z)
    }
}

/// Solves `(S + λI) Z = B`.
pub fn solve_spd(s: &SecondMoment, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    s.factor()?.solve(b)
}

fn to_nalgebra(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
/// Eigenvectors are the columns of the returned matrix.
pub fn symmetric_eigen(a: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    if !a.is_square() {
        return Err(Error::shape("eigen-decomposition needs a square matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symmetric eigen-decomposition input"));
    }
    let d = a.nrows();
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(a));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((d, d), |(r, c)| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn largest_eigenvalue(a: ArrayView2<'_, f64>) -> Result<f64> {
    let (values, _) = symmetric_eigen(a)?;
    Ok(values.first().copied().unwrap_or(0.0))
}

/// Least-squares fit of `targets` (n × k) on `features` (n × p).
#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    /// `k × p`, so that predictions are `features · weightsᵀ`.
    pub weights: Array2<f64>,
    /// Set when the normal equations were singular and a fallback was used.
    pub note: Option<String>,
}

/// Minimizes `(1/n)‖T − F Wᵀ‖² + λ‖W‖²`. When the regularized Gram matrix is
/// singular the minimum-norm solution is returned instead.
pub fn least_squares(
    features: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    ridge: f64,
) -> Result<LeastSquaresFit> {
    let moment = accumulate_second_moment(features)?.with_ridge(ridge)?;
    let rhs = cross_moment(features, targets)?;
    match moment.factor() {
        Ok(f) => Ok(LeastSquaresFit {
            weights: f.solve(rhs.view())?.reversed_axes(),
            note: None,
        }),
        Err(Error::NotPositiveDefinite { index, .. }) => {
            let w = pseudo_inverse_solve(moment.regularized().view(), rhs.view())?;
            Ok(LeastSquaresFit {
                weights: w.reversed_axes(),
                note: Some(format!(
                    "singular normal equations (pivot {index}); used minimum-norm solution"
                )),
            })
        }
        Err(e) => Err(e),
    }
}

/// Minimum-norm solution of `A Z = B` for symmetric PSD `A`.
pub fn pseudo_inverse_solve(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (values, vectors) = symmetric_eigen(a)?;
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = top * 1e-12 * a.nrows() as f64;
    let proj = vectors.t().dot(&b);
    let mut scaled = proj;
    for (i, mut row) in scaled.axis_iter_mut(Axis(0)).enumerate() {
        let v = values[i];
        if v > cutoff && v > 0.0 {
            row.mapv_inplace(|x| x / v);
        } else {
            row.fill(0.0);
        }
    }
    Ok(vectors.dot(&scaled))
}

/// Top singular values of a data matrix and the condition proxy `σ₂/σ_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub singular_values: Vec<f64>,
    /// `None` when `r < 2` or `σ_r = 0`.
    pub condition_proxy: Option<f64>,
    pub rows_used: usize,
    pub rows_total: usize,
}

impl SpectrumReport {
    fn from_values(mut values: Vec<f64>, rows_used: usize, rows_total: usize) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let condition_proxy = match values.as_slice() {
            [_, second, .., last] if *last > 0.0 => Some(second / last),
            [_, second] if *second > 0.0 => Some(1.0),
            _ => None,
        };
        Self {
            singular_values: values,
            condition_proxy,
            rows_used,
            rows_total,
        }
    }
}

/// Top-`r` singular values from a Gram matrix (`XᵀX` or `XXᵀ`).
pub fn spectrum_from_gram(
    gram: ArrayView2<'_, f64>,
    r: usize,
    rows_used: usize,
    rows_total: usize,
) -> Result<SpectrumReport> {
    if r == 0 {
        return Err(Error::invalid("number of singular values must be at least 1"));
    }
    if r > gram.nrows() {
        return Err(Error::invalid(format!(
            "requested {r} singular values from a rank-{} problem",
            gram.nrows()
        )));
    }
    let (values, _) = symmetric_eigen(gram)?;
    let top: Vec<f64> = values.iter().take(r).map(|&v| v.max(0.0).sqrt()).collect();
    Ok(SpectrumReport::from_values(top, rows_used, rows_total))
}

/// Top-`r` singular values of `X`. Matrices with more than
/// [`SPECTRUM_ROW_CAP`] rows are estimated on a seeded uniform row subsample,
/// rescaled by `√(n/m)`.
pub fn top_singular_values(x: ArrayView2<'_, f64>, r: usize) -> Result<SpectrumReport> {
    top_singular_values_capped(x, r, SPECTRUM_ROW_CAP, 0)
}

pub fn top_singular_values_capped(
    x: ArrayView2<'_, f64>,
    r: usize,
    row_cap: usize,
    seed: u64,
) -> Result<SpectrumReport> {
    let (n, d) = x.dim();
    if r == 0 {
        return Err(Error::invalid("number of singular values must be at least 1"));
    }
    if r > n.min(d) {
        return Err(Error::invalid(format!(
            "requested {r} singular values from a {n}×{d} matrix"
        )));
    }
    let sub;
    let xs = if n > row_cap {
        let rows = subsample_rows(n, row_cap, seed);
        sub = x.select(Axis(0), &rows);
        sub.view()
    } else {
        x
    };
    let m = xs.nrows();
    let gram = if d <= m { xs.t().dot(&xs) } else { xs.dot(&xs.t()) };
    let mut report = spectrum_from_gram(gram.view(), r, m, n)?;
    if m < n {
        let scale = (n as f64 / m as f64).sqrt();
        report.singular_values.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(report)
}

/// [`top_singular_values_capped`] for dense or sparse features. Sparse
/// matrices are never densified; the Gram matrix is formed in the smaller of
/// the two dimensions.
pub fn spectrum_of(source: FeatureSource<'_>, r: usize, row_cap: usize, seed: u64) -> Result<SpectrumReport> {
    let csr = match source {
        FeatureSource::Dense(x) => return top_singular_values_capped(x, r, row_cap, seed),
        FeatureSource::Sparse(csr) => csr,
    };
    let (n, d) = (csr.nrows(), csr.ncols());
    if r == 0 {
        return Err(Error::invalid("number of singular values must be at least 1"));
    }
    if r > n.min(d) {
        return Err(Error::invalid(format!(
            "requested {r} singular values from a {n}×{d} matrix"
        )));
    }
    let sub;
    let xs = if n > row_cap {
        sub = csr.select_rows(&subsample_rows(n, row_cap, seed));
        &sub
    } else {
        csr
    };
    let m = xs.nrows();
    let gram = if d <= m { xs.gram_columns() } else { xs.gram_rows() };
    let mut report = spectrum_from_gram(gram.view(), r, m, n)?;
    if m < n {
        let scale = (n as f64 / m as f64).sqrt();
        report.singular_values.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(report)
}

/// Sorted indices of a seeded uniform subsample of `m` out of `n` rows.
pub fn subsample_rows(n: usize, m: usize, seed: u64) -> Vec<usize> {
    use rand::seq::index::sample;
    let mut r = rng::stream(seed);
    let mut rows = sample(&mut r, n, m.min(n)).into_vec();
    rows.sort_unstable();
    rows
}

/// Max-abs entry of `A Z − B`.
pub fn residual_max_abs(a: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let r = a.dot(&z) - b;
    r.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Splits a matrix into its first `rows` rows and the rest.
pub fn split_rows(x: ArrayView2<'_, f64>, rows: usize) -> (ArrayView2<'_, f64>, ArrayView2<'_, f64>) {
    x.split_at(Axis(0), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::stream(seed);
        Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut r))
    }

    #[test]
    fn second_moment_single_sample() {
        let m = accumulate_second_moment(array![[1.0, 0.0]].view()).unwrap();
        assert_eq!(m.matrix(), &array![[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(m.ridge(), 0.0);
    }

    #[test]
    fn second_moment_identity_rows() {
        let m = accumulate_second_moment(array![[1.0, 0.0], [0.0, 1.0]].view()).unwrap();
        assert_eq!(m.matrix(), &array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn second_moment_matches_triple_loop() {
        let x = random_matrix(5, 3, 1);
        let m = accumulate_second_moment(x.view()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for r in 0..5 {
                    acc += x[[r, i]] * x[[r, j]];
                }
                assert!((m.matrix()[[i, j]] - acc / 5.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn second_moment_rejects_empty() {
        let x = Array2::<f64>::zeros((0, 3));
        assert!(matches!(accumulate_second_moment(x.view()), Err(Error::NoExamples)));
    }

    #[test]
    fn chunked_merge_matches_whole() {
        let x = random_matrix(3 * CHUNK_ROWS + 17, 4, 2);
        let whole = accumulate_second_moment(x.view()).unwrap();
        let (a, b) = split_rows(x.view(), 1000);
        let merged = accumulate_second_moment(a)
            .unwrap()
            .merge(&accumulate_second_moment(b).unwrap())
            .unwrap();
        assert_eq!(merged.n(), whole.n());
        let diff = (merged.matrix() - whole.matrix()).mapv(f64::abs);
        assert!(diff.iter().all(|&v| v <= 1e-12));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let s = SecondMoment::from_parts(Array2::eye(3), 1).unwrap();
        let b = random_matrix(3, 2, 3);
        assert_eq!(solve_spd(&s, b.view()).unwrap(), b);

        let s = SecondMoment::from_parts(array![[2.0, 0.0], [0.0, 4.0]], 1).unwrap();
        let z = solve_spd(&s, array![[2.0], [4.0]].view()).unwrap();
        assert!(z.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn solve_random_spd_residual() {
        let a = random_matrix(10, 6, 4);
        let s = accumulate_second_moment(a.view()).unwrap().with_ridge(0.3).unwrap();
        let b = random_matrix(6, 3, 5);
        let z = solve_spd(&s, b.view()).unwrap();
        assert!(residual_max_abs(s.regularized().view(), z.view(), b.view()) <= 1e-10);
    }

    #[test]
    fn singular_system_names_pivot() {
        let s = SecondMoment::from_parts(array![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]], 1)
            .unwrap();
        match s.factor() {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected pivot failure, got {other:?}"),
        }
        let msg = s.factor().unwrap_err().to_string();
        assert!(msg.contains("index 1"), "{msg}");
    }

    #[test]
    fn fallback_ridge_is_reported() {
        let s = SecondMoment::from_parts(array![[2.0, 0.0], [0.0, 0.0]], 1).unwrap();
        let (_, used) = s.factor_with_fallback().unwrap();
        assert_eq!(used, Some(1e-8 * 2.0 / 2.0));
    }

    #[test]
    fn spectrum_trivial_cases() {
        let r = top_singular_values(Array2::<f64>::eye(3).view(), 3).unwrap();
        for v in &r.singular_values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((r.condition_proxy.unwrap() - 1.0).abs() < 1e-12);

        let x = Array2::from_diag(&array![3.0, 2.0, 1.0]);
        let r = top_singular_values(x.view(), 3).unwrap();
        for (v, e) in r.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
        assert!((r.condition_proxy.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_matches_full_svd() {
        let x = random_matrix(20, 8, 6);
        let r = top_singular_values(x.view(), 8).unwrap();
        let svd = nalgebra::SVD::new(to_nalgebra(x.view()), false, false);
        let mut oracle: Vec<f64> = svd.singular_values.iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (v, e) in r.singular_values.iter().zip(&oracle) {
            assert!((v - e).abs() <= 1e-8 * e);
        }
    }

    #[test]
    fn spectrum_row_permutation_invariant() {
        let x = random_matrix(15, 5, 7);
        let mut rows: Vec<usize> = (0..15).collect();
        rows.reverse();
        let y = x.select(Axis(0), &rows);
        let a = top_singular_values(x.view(), 5).unwrap();
        let b = top_singular_values(y.view(), 5).unwrap();
        for (p, q) in a.singular_values.iter().zip(&b.singular_values) {
            assert!((p - q).abs() <= 1e-10 * p.max(1.0));
        }
    }

    #[test]
    fn spectrum_errors_and_markers() {
        let x = Array2::<f64>::eye(3);
        assert!(top_singular_values(x.view(), 0).is_err());
        assert!(top_singular_values(x.view(), 4).is_err());
        let r = top_singular_values(x.view(), 1).unwrap();
        assert_eq!(r.condition_proxy, None);
        let z = Array2::from_diag(&array![1.0, 0.0]);
        assert_eq!(top_singular_values(z.view(), 2).unwrap().condition_proxy, None);
    }

    #[test]
    fn least_squares_falls_back_on_singular_features() {
        // Duplicated column makes the Gram matrix singular.
        let f = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let t = array![[1.0], [2.0], [3.0]];
        let fit = least_squares(f.view(), t.view(), 0.0).unwrap();
        assert!(fit.note.is_some());
        let pred = f.dot(&fit.weights.t());
        assert!((&pred - &t).iter().all(|v| v.abs() < 1e-10));
        assert!((fit.weights[[0, 0]] - 0.5).abs() < 1e-10);
    }
}
