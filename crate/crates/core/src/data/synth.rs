//! Synthetic GLM data: Gaussian features with a prescribed covariance
//! spectrum and labels drawn from `g(W*x)`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureMatrix, Split};
use crate::error::{Error, Result};
use crate::glm::{argmax_rows, LinkSpec};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `yᵢ = g(W*xᵢ)` exactly.
    NoiselessSoft,
    /// One-hot `yᵢ` with class drawn from `g(W*xᵢ)`.
    MultinomialSample,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noiseless-soft" | "noiseless" => Ok(NoiseMode::NoiselessSoft),
            "multinomial-sample" | "multinomial" => Ok(NoiseMode::MultinomialSample),
            _ => Err(Error::invalid(format!("unknown noise mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// `identity` or `softmax`.
    pub link: String,
    /// Frobenius norm of `W*` (softmax only; see [`synthesize`]).
    pub w_norm: f64,
    /// Eigenvalues of the feature covariance, one per feature.
    pub spectrum: Vec<f64>,
    pub noise: NoiseMode,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize, k: usize, link: &str) -> Self {
        Self {
            n,
            d,
            k,
            link: link.to_string(),
            w_norm: 1.0,
            spectrum: vec![1.0; d],
            noise: NoiseMode::NoiselessSoft,
        }
    }

    pub fn with_spectrum(mut self, spectrum: Vec<f64>) -> Self {
        self.spectrum = spectrum;
        self
    }

    /// Eigenvalues spaced log-uniformly from `hi` down to `lo`.
    pub fn with_log_spectrum(self, lo: f64, hi: f64) -> Self {
        let d = self.d;
        let spectrum = (0..d)
            .map(|i| {
                let f = if d > 1 { i as f64 / (d - 1) as f64 } else { 0.0 };
                (hi.ln() + f * (lo.ln() - hi.ln())).exp()
            })
            .collect();
        self.with_spectrum(spectrum)
    }

    pub fn with_noise(mut self, noise: NoiseMode) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_w_norm(mut self, w_norm: f64) -> Self {
        self.w_norm = w_norm;
        self
    }

    fn validate(&self) -> Result<LinkSpec> {
        if self.n == 0 {
            return Err(Error::NoExamples);
        }
        if self.d == 0 || self.k == 0 {
            return Err(Error::invalid("d and k must be positive"));
        }
        if self.spectrum.len() != self.d {
            return Err(Error::invalid(format!(
                "spectrum has {} entries for d = {}",
                self.spectrum.len(),
                self.d
            )));
        }
        if self.spectrum.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("spectrum entries must be positive"));
        }
        if !(self.w_norm >= 0.0) || !self.w_norm.is_finite() {
            return Err(Error::invalid("w_norm must be finite and nonnegative"));
        }
        LinkSpec::by_name(&self.link)
    }
}

/// A synthetic draw with its generating weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    /// `n × d'`; for the identity link `d' = d + 1`, the last column being a
    /// constant intercept.
    pub x: Array2<f64>,
    /// Label rows on the simplex (soft or one-hot depending on the noise mode).
    pub y: Array2<f64>,
    /// `g(W*xᵢ)`.
    pub mean: Array2<f64>,
    pub labels: Vec<usize>,
    /// `k × d'`.
    pub w_star: Array2<f64>,
    pub link: LinkSpec,
}

impl Synthetic {
    /// Dense dataset with the drawn (multinomial) or most-likely (soft) class.
    pub fn dataset(&self) -> Result<Dataset> {
        let k = self.y.ncols();
        let names = (0..k).map(|c| c.to_string()).collect();
        Ok(Dataset::new(FeatureMatrix::Dense(self.x.clone()), self.labels.clone(), names)?
            .with_split(Split::Train)
            .with_source("synthetic"))
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `diag(R)` folded into `Q`.
fn random_orthogonal(d: usize, r: &mut rng::Rng) -> Array2<f64> {
    let g = rng::gaussian_matrix(d, d, r);
    let qr = DMatrix::from_fn(d, d, |i, j| g[[i, j]]).qr();
    let (q, rr) = (qr.q(), qr.r());
    Array2::from_shape_fn((d, d), |(i, j)| {
        let s = if rr[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        q[(i, j)] * s
    })
}

/// Draws a dataset from `spec`.
///
/// For the softmax link `W*` is Gaussian rescaled to Frobenius norm `w_norm`.
/// For the identity link the labels must stay on the simplex, so an intercept
/// column is appended and `W* = [W₀ | 1/k]` where every column of `W₀` sums to
/// zero and `W₀` is scaled so that `|W₀x|∞ ≤ 1/(2k)` on the sample; `w_norm`
/// is then ignored.
pub fn synthesize(spec: &SyntheticSpec, seed: u64) -> Result<Synthetic> {
    let link = spec.validate()?;
    let (n, d, k) = (spec.n, spec.d, spec.k);

    let q = random_orthogonal(d, &mut rng::stream(rng::derive_seed(seed, 0)));
    let scale = Array1::from_iter(spec.spectrum.iter().map(|s| s.sqrt()));
    let g = rng::gaussian_matrix(n, d, &mut rng::stream(rng::derive_seed(seed, 1)));
    // rows xᵢ = Q diag(√s) gᵢ
    let mut x = (g * &scale).dot(&q.t());

    let mut w = rng::gaussian_matrix(k, d, &mut rng::stream(rng::derive_seed(seed, 2)));
    let identity = link.name() == "identity";
    if identity {
        let mean = w.mean_axis(Axis(0)).expect("k > 0");
        w -= &mean;
        let spread = x.dot(&w.t()).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if spread > 0.0 {
            w *= 0.5 / (k as f64 * spread);
        }
        let ones = Array2::ones((n, 1));
        x = ndarray::concatenate![Axis(1), x, ones];
        let bias = Array2::from_elem((k, 1), 1.0 / k as f64);
        w = ndarray::concatenate![Axis(1), w, bias];
    } else {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            w *= spec.w_norm / norm;
        }
    }

    let mut mean = link.apply_rows(x.dot(&w.t()).view());
    if identity {
        // Clean the last ulp so rows are nonnegative and sum to one.
        for mut row in mean.rows_mut() {
            row.mapv_inplace(|v| v.max(0.0));
            let s = row.sum();
            row /= s;
        }
    }
    let (y, labels) = match spec.noise {
        NoiseMode::NoiselessSoft => (mean.clone(), argmax_rows(mean.view())),
        NoiseMode::MultinomialSample => {
            let mut r = rng::stream(rng::derive_seed(seed, 3));
            let labels: Vec<usize> = mean
                .rows()
                .into_iter()
                .map(|p| {
                    let u: f64 = r.random();
                    let mut acc = 0.0;
                    for (c, &pc) in p.iter().enumerate() {
                        acc += pc;
                        if u < acc {
                            return c;
                        }
                    }
                    k - 1
                })
                .collect();
            (crate::glm::one_hot(&labels, k), labels)
        }
    };
    Ok(Synthetic {
        x,
        y,
        mean,
        labels,
        w_star: w,
        link,
    })
}
