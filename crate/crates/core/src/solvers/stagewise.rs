//! Stagewise regression: at every stage draw a block of features from a
//! generator, fit the current residual on it, and add the fit to the running
//! predictions.

use std::str::FromStr;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::gls::{gls_with_preconditioner, Preconditioner};
use super::predict::Prediction;
use super::trace::{Clock, IterRecord, SolverOptions, TrainTrace};
use crate::data::FeatureSource;
use crate::error::{Error, Result};
use crate::features::{BlockSpec, FeatureGenerator, GeneratorKind};
use crate::glm::{log_sum_exp, mean_squared_residual, LabeledBatch, LinkSpec};
use crate::linalg::least_squares;

pub const DEFAULT_LOGISTIC_INNER_ITERS: usize = 50;

/// How each stage fits the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InnerSolver {
    /// Least squares of the residual on the block.
    Linear,
    /// Softmax GLM on the block with the earlier stages' scores as offset.
    Logistic { inner_iters: usize },
    /// Least squares of the residual on the block plus the current predictions.
    CalibratedLinear,
}

impl InnerSolver {
    pub fn logistic() -> Self {
        InnerSolver::Logistic {
            inner_iters: DEFAULT_LOGISTIC_INNER_ITERS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InnerSolver::Linear => "linear",
            InnerSolver::Logistic { .. } => "logistic",
            InnerSolver::CalibratedLinear => "calibrated-linear",
        }
    }
}

impl FromStr for InnerSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(InnerSolver::Linear),
            "logistic" | "softmax" => Ok(InnerSolver::logistic()),
            "calibrated-linear" | "calibrated" => Ok(InnerSolver::CalibratedLinear),
            _ => Err(Error::invalid(format!("unknown inner solver '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagewiseOptions {
    pub block_size: usize,
    pub stages: usize,
    pub inner: InnerSolver,
    pub ridge: f64,
    pub auto_ridge: bool,
    pub record_time: bool,
}

impl StagewiseOptions {
    pub fn new(block_size: usize, stages: usize, inner: InnerSolver) -> Self {
        Self {
            block_size,
            stages,
            inner,
            ridge: 0.0,
            auto_ridge: false,
            record_time: false,
        }
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn with_auto_ridge(mut self, on: bool) -> Self {
        self.auto_ridge = on;
        self
    }

    pub fn with_timing(mut self, on: bool) -> Self {
        self.record_time = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub block: BlockSpec,
    /// `k × width`, where the width includes the `k` prediction columns for
    /// the calibrated-linear inner solver.
    pub weights: Array2<f64>,
}

/// Block descriptions and per-stage weights; enough to replay predictions on
/// any data with the original columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagewiseModel {
    pub inner: InnerSolver,
    pub k: usize,
    pub input_dim: usize,
    pub generator: GeneratorKind,
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub feature_meta: String,
}

#[derive(Debug, Clone)]
pub struct StagewiseFit {
    pub model: StagewiseModel,
    pub trace: TrainTrace,
    /// Final training predictions `ŷ`.
    pub train_predictions: Array2<f64>,
}

fn predictions(inner: InnerSolver, scores: &Array2<f64>) -> Array2<f64> {
    match inner {
        InnerSolver::Logistic { .. } => LinkSpec::softmax().apply_rows(scores.view()),
        _ => scores.clone(),
    }
}

fn softmax_loss(scores: &Array2<f64>, y: ArrayView2<'_, f64>) -> f64 {
    let n = scores.nrows().max(1) as f64;
    scores
        .rows()
        .into_iter()
        .zip(y.rows())
        .map(|(s, yi)| log_sum_exp(&s.to_vec()) - s.dot(&yi))
        .sum::<f64>()
        / n
}

/// Design of one stage: the block, plus the current predictions for the
/// calibrated-linear solver.
fn stage_design(inner: InnerSolver, block: Array2<f64>, yhat: &Array2<f64>) -> Result<Array2<f64>> {
    match inner {
        InnerSolver::CalibratedLinear => {
            concatenate(Axis(1), &[block.view(), yhat.view()]).map_err(|e| Error::shape(e.to_string()))
        }
        _ => Ok(block),
    }
}

impl StagewiseModel {
    pub fn predict(&self, x: FeatureSource<'_>) -> Result<Prediction> {
        if x.ncols() != self.input_dim {
            return Err(Error::shape(format!(
                "model expects d = {} feature columns, data has {}",
                self.input_dim,
                x.ncols()
            )));
        }
        let mut scores = Array2::zeros((x.nrows(), self.k));
        for stage in &self.stages {
            let yhat = predictions(self.inner, &scores);
            let design = stage_design(self.inner, stage.block.materialize(x)?, &yhat)?;
            scores += &design.dot(&stage.weights.t());
        }
        Ok(Prediction::from_scores(predictions(self.inner, &scores)))
    }
}

/// Runs up to `opts.stages` stages starting from zero scores. Stops early,
/// with a note in the trace, when the generator runs out of features.
pub fn stagewise(
    x: FeatureSource<'_>,
    y: ArrayView2<'_, f64>,
    gen: &mut FeatureGenerator,
    opts: &StagewiseOptions,
) -> Result<StagewiseFit> {
    let (n, k) = y.dim();
    // label validation only
    let empty = Array2::<f64>::zeros((n, 0));
    LabeledBatch::new(empty.view(), y)?;
    if x.nrows() != n {
        return Err(Error::shape(format!("{} feature rows but {n} label rows", x.nrows())));
    }
    if opts.block_size == 0 || opts.stages == 0 {
        return Err(Error::invalid("block size and stage count must be at least 1"));
    }
    if !(opts.ridge >= 0.0) || !opts.ridge.is_finite() {
        return Err(Error::invalid(format!("ridge must be finite and >= 0, got {}", opts.ridge)));
    }
    if let InnerSolver::Logistic { inner_iters: 0 } = opts.inner {
        return Err(Error::invalid("logistic inner solver needs at least one iteration"));
    }

    let clock = Clock::new(opts.record_time);
    let mut trace = TrainTrace::new(&format!("stagewise-{}", opts.inner.name()), opts.ridge);
    let mut scores = Array2::<f64>::zeros((n, k));
    let record = |t: usize, scores: &Array2<f64>| {
        let yhat = predictions(opts.inner, scores);
        let mse = mean_squared_residual(yhat.view(), y);
        let loss = match opts.inner {
            InnerSolver::Logistic { .. } => softmax_loss(scores, y),
            _ => mse,
        };
        IterRecord {
            t,
            loss,
            mse,
            seconds: clock.seconds(),
        }
    };
    trace.initial = record(0, &scores);
    let mut stages = Vec::with_capacity(opts.stages);

    for t in 1..=opts.stages {
        let yhat = predictions(opts.inner, &scores);
        let residual = &y - &yhat;
        let Some(block) = gen.next_block(opts.block_size, x, residual.view())? else {
            trace.stopped_early = Some(format!("feature generator exhausted after {} stages", t - 1));
            break;
        };
        let design = stage_design(opts.inner, block.materialize(x)?, &yhat)?;
        let weights = match opts.inner {
            InnerSolver::Linear | InnerSolver::CalibratedLinear => {
                let fit = least_squares(design.view(), residual.view(), opts.ridge)?;
                if let Some(note) = fit.note {
                    trace.notes.push(format!("stage {t}: {note}"));
                }
                fit.weights
            }
            InnerSolver::Logistic { inner_iters } => {
                let batch = LabeledBatch::new(design.view(), y)?;
                let pre = Preconditioner::new(design.view(), opts.ridge, opts.auto_ridge)?;
                if let Some(note) = pre.note() {
                    trace.notes.push(format!("stage {t}: {note}"));
                }
                let w0 = Array2::zeros((k, design.ncols()));
                let inner = SolverOptions::new(inner_iters);
                let (w, _) =
                    gls_with_preconditioner(&batch, &LinkSpec::softmax(), Some(scores.view()), w0, &inner, &pre)?;
                w
            }
        };
        scores += &design.dot(&weights.t());
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("stagewise scores"));
        }
        stages.push(Stage { block, weights });
        trace.iterations.push(record(t, &scores));
    }

    let model = StagewiseModel {
        inner: opts.inner,
        k,
        input_dim: x.ncols(),
        generator: gen.kind().clone(),
        seed: gen.seed(),
        stages,
        feature_meta: String::new(),
    };
    Ok(StagewiseFit {
        model,
        trace,
        train_predictions: predictions(opts.inner, &scores),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, NoiseMode, SyntheticSpec};

    fn data() -> (Array2<f64>, Array2<f64>) {
        let s = synthesize(
            &SyntheticSpec::new(120, 6, 3, "softmax")
                .with_w_norm(4.0)
                .with_noise(NoiseMode::MultinomialSample),
            1,
        )
        .unwrap();
        (s.x, s.y)
    }

    #[test]
    fn exhausted_generator_stops_cleanly() {
        let (x, y) = data();
        let mut gen = FeatureGenerator::new(GeneratorKind::Sequential, 0).unwrap();
        let fit = stagewise(
            FeatureSource::Dense(x.view()),
            y.view(),
            &mut gen,
            &StagewiseOptions::new(4, 10, InnerSolver::Linear),
        )
        .unwrap();
        assert_eq!(fit.model.stages.len(), 2);
        assert!(fit.trace.stopped_early.as_deref().unwrap().contains("after 2 stages"));
    }

    #[test]
    fn logistic_inner_reduces_loss() {
        let (x, y) = data();
        let mut gen = FeatureGenerator::new(GeneratorKind::SubsetRandom, 3).unwrap().with_passes(2);
        let fit = stagewise(
            FeatureSource::Dense(x.view()),
            y.view(),
            &mut gen,
            &StagewiseOptions::new(2, 6, InnerSolver::logistic()),
        )
        .unwrap();
        let losses = fit.trace.losses();
        assert!((losses[0] - 3.0_f64.ln()).abs() < 1e-12);
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{losses:?}");
        let replay = fit.model.predict(FeatureSource::Dense(x.view())).unwrap();
        let diff = (&replay.scores - &fit.train_predictions).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(diff <= 1e-10);
    }

    #[test]
    fn inner_solver_names_parse() {
        for s in ["linear", "logistic", "calibrated-linear"] {
            assert_eq!(s.parse::<InnerSolver>().unwrap().name(), s);
        }
        assert!("ridge".parse::<InnerSolver>().is_err());
    }
}
