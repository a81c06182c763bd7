//! Calibrated least squares.
//!
//! Each iteration alternates two unregularized (or ridge) least-squares fits:
//!
//! 1. fit the residual `y − ŷ⁽ᵗ⁻¹⁾` on `x`, giving `Ŵ_t` and
//!    `z⁽ᵗ⁾ = ŷ⁽ᵗ⁻¹⁾ + Ŵ_t x`;
//! 2. fit `y` on the calibration features `G(z⁽ᵗ⁾)`, giving `W̃_t`, then
//!    project `W̃_t G(z⁽ᵗ⁾)` row-wise onto the simplex to get `ŷ⁽ᵗ⁾`.
//!
//! The design for step 1 never changes, so it is factored once; step 2 is
//! refit from scratch every iteration.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::gls::Preconditioner;
use super::predict::Prediction;
use super::trace::{Clock, IterRecord, TrainTrace};
use crate::data::FeatureSource;
use crate::error::{Error, Result};
use crate::features::{apply_basis, CalibrationBasis};
use crate::glm::{mean_squared_residual, LabeledBatch};
use crate::linalg::{cross_moment, least_squares};
use crate::simplex::project_rows;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedOptions {
    pub iters: usize,
    pub ridge: f64,
    pub basis: CalibrationBasis,
    pub auto_ridge: bool,
    pub record_time: bool,
}

impl CalibratedOptions {
    pub fn new(iters: usize, basis: CalibrationBasis) -> Self {
        Self {
            iters,
            ridge: 0.0,
            basis,
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

/// Weights of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStage {
    /// `Ŵ_t`, `k × d`.
    pub x_weights: Array2<f64>,
    /// `W̃_t`, `k × (k·|G|)`.
    pub cal_weights: Array2<f64>,
}

/// Training-side state after the latest iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionState {
    /// `ŷ⁽ᵗ⁾`, rows on the simplex.
    pub yhat: Array2<f64>,
    /// `z⁽ᵗ⁾`.
    pub z: Array2<f64>,
    /// `W̃_t G(z⁽ᵗ⁾)` before projection.
    pub yhat_unclipped: Array2<f64>,
    pub stages: Vec<CalibrationStage>,
}

/// Everything needed to replay the iterations on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub basis: CalibrationBasis,
    pub k: usize,
    pub d: usize,
    pub stages: Vec<CalibrationStage>,
    pub feature_meta: String,
}

impl CalibratedModel {
    /// Replays every stored iteration on `x`, starting from `ŷ = 0`.
    pub fn predict(&self, x: FeatureSource<'_>) -> Result<Prediction> {
        if x.ncols() != self.d {
            return Err(Error::shape(format!(
                "model expects d = {} feature columns, data has {}",
                self.d,
                x.ncols()
            )));
        }
        let mut yhat = Array2::zeros((x.nrows(), self.k));
        for stage in &self.stages {
            let z = yhat + x.dot(stage.x_weights.t())?;
            yhat = apply_basis(&self.basis, z.view()).dot(&stage.cal_weights.t());
            project_rows(&mut yhat)?;
        }
        Ok(Prediction::from_scores(yhat))
    }
}

/// Step-by-step driver; [`calibrated_least_squares`] runs it to completion.
pub struct CalibratedRun<'a> {
    batch: LabeledBatch<'a>,
    basis: CalibrationBasis,
    ridge: f64,
    pre: Preconditioner,
    state: PredictionState,
    notes: Vec<String>,
}

impl<'a> CalibratedRun<'a> {
    pub fn new(batch: LabeledBatch<'a>, basis: CalibrationBasis, ridge: f64, auto_ridge: bool) -> Result<Self> {
        if !basis.contains_identity() {
            return Err(Error::MissingIdentity);
        }
        let pre = Preconditioner::new(batch.x(), ridge, auto_ridge)?;
        let zeros = Array2::zeros((batch.n(), batch.k()));
        let notes = pre.note().map(str::to_string).into_iter().collect();
        Ok(Self {
            batch,
            basis,
            ridge,
            pre,
            state: PredictionState {
                yhat: zeros.clone(),
                z: zeros.clone(),
                yhat_unclipped: zeros,
                stages: Vec::new(),
            },
            notes,
        })
    }

    pub fn state(&self) -> &PredictionState {
        &self.state
    }

    pub fn mse(&self) -> f64 {
        mean_squared_residual(self.state.yhat.view(), self.batch.y())
    }

    /// Runs one iteration and returns the new state.
    pub fn step(&mut self) -> Result<&PredictionState> {
        let x = self.batch.x();
        let y = self.batch.y();
        let residual = &y - &self.state.yhat;
        let x_weights = self.pre.apply(cross_moment(residual.view(), x)?.view())?;
        let z = &self.state.yhat + &x.dot(&x_weights.t());

        let g = apply_basis(&self.basis, z.view());
        let fit = least_squares(g.view(), y, self.ridge)?;
        if let Some(note) = fit.note {
            self.notes.push(format!("iteration {}: {note}", self.state.stages.len() + 1));
        }
        let unclipped = g.dot(&fit.weights.t());
        let mut yhat = unclipped.clone();
        project_rows(&mut yhat)?;

        self.state.stages.push(CalibrationStage {
            x_weights,
            cal_weights: fit.weights,
        });
        self.state.z = z;
        self.state.yhat_unclipped = unclipped;
        self.state.yhat = yhat;
        Ok(&self.state)
    }

    pub fn into_parts(self) -> (PredictionState, CalibratedModel, Vec<String>) {
        let model = CalibratedModel {
            basis: self.basis,
            k: self.batch.k(),
            d: self.batch.d(),
            stages: self.state.stages.clone(),
            feature_meta: String::new(),
        };
        (self.state, model, self.notes)
    }
}

/// Runs `opts.iters` iterations from `ŷ⁽⁰⁾ = 0`. The trace's loss and mse
/// are both the mean squared residual `(1/n) Σ ‖ŷᵢ − yᵢ‖²`.
pub fn calibrated_least_squares(
    batch: &LabeledBatch<'_>,
    opts: &CalibratedOptions,
) -> Result<(PredictionState, CalibratedModel, TrainTrace)> {
    if opts.iters == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    let clock = Clock::new(opts.record_time);
    let mut run = CalibratedRun::new(*batch, opts.basis.clone(), opts.ridge, opts.auto_ridge)?;
    let mut trace = TrainTrace::new("calibrated", run.pre.ridge());
    let rec = |t, mse| IterRecord {
        t,
        loss: mse,
        mse,
        seconds: clock.seconds(),
    };
    trace.initial = rec(0, run.mse());
    for t in 1..=opts.iters {
        run.step()?;
        let mse = run.mse();
        if !mse.is_finite() {
            return Err(Error::NonFinite("calibrated predictions"));
        }
        trace.iterations.push(rec(t, mse));
    }
    let (state, model, notes) = run.into_parts();
    trace.notes = notes;
    Ok((state, model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, SyntheticSpec};

    #[test]
    fn identity_data_is_solved_in_one_iteration() {
        let s = synthesize(&SyntheticSpec::new(100, 4, 3, "identity"), 2).unwrap();
        let batch = LabeledBatch::new(s.x.view(), s.y.view()).unwrap();
        let (_, _, trace) =
            calibrated_least_squares(&batch, &CalibratedOptions::new(2, CalibrationBasis::identity())).unwrap();
        assert!(trace.iterations[0].mse <= 1e-10, "{}", trace.iterations[0].mse);
    }

    #[test]
    fn basis_without_identity_is_rejected() {
        let s = synthesize(&SyntheticSpec::new(20, 2, 2, "softmax"), 0).unwrap();
        let batch = LabeledBatch::new(s.x.view(), s.y.view()).unwrap();
        let basis: CalibrationBasis = "y2,y3".parse().unwrap();
        assert!(matches!(
            calibrated_least_squares(&batch, &CalibratedOptions::new(1, basis)),
            Err(Error::MissingIdentity)
        ));
    }

    #[test]
    fn replay_matches_training_predictions() {
        let s = synthesize(&SyntheticSpec::new(150, 5, 3, "softmax").with_w_norm(3.0), 8).unwrap();
        let batch = LabeledBatch::new(s.x.view(), s.y.view()).unwrap();
        let (state, model, _) =
            calibrated_least_squares(&batch, &CalibratedOptions::new(5, CalibrationBasis::polynomial(3))).unwrap();
        let replay = model.predict(FeatureSource::Dense(s.x.view())).unwrap();
        let diff = (&replay.scores - &state.yhat).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(diff <= 1e-10, "{diff}");
    }
}
