//! Link functions, the calibrated loss and its gradient.
//!
//! A link is the gradient `g = ∇Φ` of a convex potential `Φ : ℝᵏ → ℝ`. For
//! weights `W` (k × d) the per-example loss is `Φ(Wx) − yᵀWx`; its sample
//! average is the objective every solver in [`crate::solvers`] minimizes.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::CHUNK_ROWS;

/// Tolerance for label rows lying on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A convex potential and its gradient.
pub trait Potential: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    fn phi(&self, u: &[f64]) -> f64;
    /// Writes `∇Φ(u)` into `out`.
    fn link(&self, u: &[f64], out: &mut [f64]);
}

/// `Φ(u) = ½‖u‖²`, so `g` is the identity.
#[derive(Debug, Clone, Copy)]
pub struct SquaredNorm;

impl Potential for SquaredNorm {
    fn name(&self) -> &str {
        "identity"
    }

    fn phi(&self, u: &[f64]) -> f64 {
        0.5 * u.iter().map(|v| v * v).sum::<f64>()
    }

    fn link(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(u);
    }
}

/// `Φ(u) = log Σ exp(uⱼ)`, whose gradient is the softmax.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp;

impl Potential for LogSumExp {
    fn name(&self) -> &str {
        "softmax"
    }

    fn phi(&self, u: &[f64]) -> f64 {
        log_sum_exp(u)
    }

    fn link(&self, u: &[f64], out: &mut [f64]) {
        softmax_into(u, out);
    }
}

pub fn log_sum_exp(u: &[f64]) -> f64 {
    let m = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + u.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax_into(u: &[f64], out: &mut [f64]) {
    let m = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, v) in out.iter_mut().zip(u) {
        *o = (v - m).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Softmax with max-subtraction.
pub fn softmax_link(u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    softmax_into(u, &mut out);
    out
}

/// A link bundled with its Lipschitz constant `L` and strong-monotonicity
/// constant `μ` (zero when the link is not strongly monotone).
#[derive(Clone)]
pub struct LinkSpec {
    potential: Arc<dyn Potential>,
    lipschitz: f64,
    strong_mono: f64,
}

impl fmt::Debug for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinkSpec")
            .field("name", &self.name())
            .field("lipschitz", &self.lipschitz)
            .field("strong_mono", &self.strong_mono)
            .finish()
    }
}

impl PartialEq for LinkSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name() && self.lipschitz == other.lipschitz && self.strong_mono == other.strong_mono
    }
}

impl LinkSpec {
    /// Identity link: `L = μ = 1`.
    pub fn identity() -> Self {
        Self {
            potential: Arc::new(SquaredNorm),
            lipschitz: 1.0,
            strong_mono: 1.0,
        }
    }

    /// Softmax link with the conservative `L = 1`.
    pub fn softmax() -> Self {
        Self {
            potential: Arc::new(LogSumExp),
            lipschitz: 1.0,
            strong_mono: 0.0,
        }
    }

    /// Softmax link with `L = 1/2`. The Hessian of log-sum-exp is
    /// `diag(p) − ppᵀ`, whose spectral norm never exceeds 1/2.
    pub fn softmax_tight() -> Self {
        Self {
            lipschitz: 0.5,
            ..Self::softmax()
        }
    }

    pub fn custom(potential: Arc<dyn Potential>, lipschitz: f64, strong_mono: f64) -> Result<Self> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::invalid(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        if !(strong_mono >= 0.0) || strong_mono > lipschitz {
            return Err(Error::invalid(format!(
                "strong monotonicity must lie in [0, L], got {strong_mono}"
            )));
        }
        Ok(Self {
            potential,
            lipschitz,
            strong_mono,
        })
    }

    /// Looks up a shipped link by name. `logistic` is an alias of `softmax`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "identity" | "linear" => Ok(Self::identity()),
            "softmax" | "logistic" => Ok(Self::softmax()),
            other => Err(Error::invalid(format!("unknown link '{other}'"))),
        }
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::invalid(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        self.potential.name()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strong_mono(&self) -> f64 {
        self.strong_mono
    }

    /// `κ_Φ = L/μ`, or `None` when `μ = 0`.
    pub fn kappa(&self) -> Option<f64> {
        (self.strong_mono > 0.0).then(|| self.lipschitz / self.strong_mono)
    }

    pub fn phi(&self, u: &[f64]) -> f64 {
        self.potential.phi(u)
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.potential.link(u, out)
    }

    pub fn apply_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply(u, &mut out);
        out
    }

    /// Applies the link to every row of a score matrix.
    pub fn apply_rows(&self, scores: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros(scores.raw_dim());
        Zip::from(out.rows_mut())
            .and(scores.rows())
            .for_each(|mut o, s| self.apply_row(s, o.as_slice_mut().expect("owned rows are contiguous")));
        out
    }

    fn apply_row(&self, s: ArrayView1<'_, f64>, out: &mut [f64]) {
        match s.as_slice() {
            Some(u) => self.apply(u, out),
            None => self.apply(&s.to_vec(), out),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LinkRecord {
    name: String,
    lipschitz: f64,
    strong_mono: f64,
}

impl Serialize for LinkSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LinkRecord {
            name: self.name().to_string(),
            lipschitz: self.lipschitz,
            strong_mono: self.strong_mono,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LinkSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = LinkRecord::deserialize(deserializer)?;
        let base = LinkSpec::by_name(&rec.name).map_err(serde::de::Error::custom)?;
        LinkSpec::custom(base.potential, rec.lipschitz, rec.strong_mono).map_err(serde::de::Error::custom)
    }
}

/// Features with soft or one-hot labels.
#[derive(Debug, Clone, Copy)]
pub struct LabeledBatch<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView2<'a, f64>,
}

impl<'a> LabeledBatch<'a> {
    /// Checks shapes and that every label row lies on the probability simplex.
    pub fn new(x: ArrayView2<'a, f64>, y: ArrayView2<'a, f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::shape(format!(
                "{} feature rows but {} label rows",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::NoExamples);
        }
        if y.ncols() == 0 {
            return Err(Error::shape("labels need at least one class"));
        }
        for (i, row) in y.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if row.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::invalid(format!("label row {i} is not on the probability simplex")));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> ArrayView2<'a, f64> {
        self.x
    }

    pub fn y(&self) -> ArrayView2<'a, f64> {
        self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn k(&self) -> usize {
        self.y.ncols()
    }

    fn check_weights(&self, w: ArrayView2<'_, f64>) -> Result<()> {
        if w.dim() != (self.k(), self.d()) {
            return Err(Error::shape(format!(
                "weights are {}×{}, expected {}×{}",
                w.nrows(),
                w.ncols(),
                self.k(),
                self.d()
            )));
        }
        Ok(())
    }
}

/// Loss, squared residual and gradient evaluated in one pass over the data.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    /// `(1/n) Σ ‖g(sᵢ) − yᵢ‖²`.
    pub mse: f64,
    /// `(1/n) Σ (g(sᵢ) − yᵢ) xᵢᵀ`, k × d.
    pub gradient: Array2<f64>,
}

/// Evaluates the objective at `W`. Scores are `Wxᵢ + offsetᵢ`; the offset
/// carries predictions from earlier stages of a stagewise fit.
pub fn evaluate(
    link: &LinkSpec,
    w: ArrayView2<'_, f64>,
    batch: &LabeledBatch<'_>,
    offset: Option<ArrayView2<'_, f64>>,
    with_gradient: bool,
) -> Result<Evaluation> {
    batch.check_weights(w)?;
    if let Some(o) = offset {
        if o.dim() != (batch.n(), batch.k()) {
            return Err(Error::shape("offset must be n × k"));
        }
    }
    let (n, k, d) = (batch.n(), batch.k(), batch.d());
    let starts: Vec<usize> = (0..n).step_by(CHUNK_ROWS).collect();
    let partials: Vec<(f64, f64, Option<Array2<f64>>)> = starts
        .into_par_iter()
        .map(|start| {
            let end = (start + CHUNK_ROWS).min(n);
            let xc = batch.x.slice(ndarray::s![start..end, ..]);
            let yc = batch.y.slice(ndarray::s![start..end, ..]);
            let mut scores = xc.dot(&w.t()).as_standard_layout().into_owned();
            if let Some(o) = offset {
                scores += &o.slice(ndarray::s![start..end, ..]);
            }
            let mut resid = Array2::<f64>::zeros((end - start, k));
            let mut loss = 0.0;
            let mut sq = 0.0;
            let mut pred = vec![0.0; k];
            for ((s, y), mut r) in scores.rows().into_iter().zip(yc.rows()).zip(resid.rows_mut()) {
                let s = s.as_slice().expect("owned rows are contiguous");
                link.apply(s, &mut pred);
                let lin: f64 = s.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
                loss += link.phi(s) - lin;
                for j in 0..k {
                    let e = pred[j] - y[j];
                    r[j] = e;
                    sq += e * e;
                }
            }
            let grad = with_gradient.then(|| resid.t().dot(&xc));
            (loss, sq, grad)
        })
        .collect();
    let mut loss = 0.0;
    let mut mse = 0.0;
    let mut gradient = Array2::<f64>::zeros((k, if with_gradient { d } else { 0 }));
    for (l, s, g) in partials {
        loss += l;
        mse += s;
        if let Some(g) = g {
            gradient += &g;
        }
    }
    let nf = n as f64;
    gradient /= nf;
    Ok(Evaluation {
        loss: loss / nf,
        mse: mse / nf,
        gradient,
    })
}

/// Sample loss `(1/n) Σ [Φ(Wxᵢ) − yᵢᵀWxᵢ]`.
pub fn loss(link: &LinkSpec, w: ArrayView2<'_, f64>, batch: &LabeledBatch<'_>) -> Result<f64> {
    Ok(evaluate(link, w, batch, None, false)?.loss)
}

/// Gradient of the sample loss, `(1/n) Σ (g(Wxᵢ) − yᵢ) xᵢᵀ`.
pub fn loss_gradient(link: &LinkSpec, w: ArrayView2<'_, f64>, batch: &LabeledBatch<'_>) -> Result<Array2<f64>> {
    Ok(evaluate(link, w, batch, None, true)?.gradient)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

pub fn argmax_rows(scores: ArrayView2<'_, f64>) -> Vec<usize> {
    scores.axis_iter(Axis(0)).map(argmax).collect()
}

/// One-hot encoding of class indices.
pub fn one_hot(labels: &[usize], k: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), k));
    for (i, &c) in labels.iter().enumerate() {
        y[[i, c]] = 1.0;
    }
    y
}

pub fn row_norm_sq(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().map(|a| a * a).sum()
}

pub fn mean_squared_residual(pred: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> f64 {
    let n = pred.nrows().max(1) as f64;
    Zip::from(pred).and(y).fold(0.0, |acc, p, t| acc + (p - t) * (p - t)) / n
}

pub fn column(values: &[f64]) -> Array1<f64> {
    Array1::from(values.to_vec())
}
