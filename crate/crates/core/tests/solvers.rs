mod common;

use common::*;
use lsmc_core::data::{synthesize, NoiseMode, SyntheticSpec};
use lsmc_core::diagnostics::check_majorization;
use lsmc_core::features::{CalibrationBasis, FeatureGenerator, GeneratorKind};
use lsmc_core::glm::{LabeledBatch, LinkSpec};
use lsmc_core::solvers::{
    calibrated_least_squares, generalized_least_squares, gradient_descent, stagewise, CalibratedOptions, InnerSolver,
    SolverOptions, StagewiseOptions, TrainTrace,
};
use lsmc_core::{Error, FeatureSource};
use ndarray::Array2;

fn softmax_data(seed: u64) -> lsmc_core::data::Synthetic {
    let spec = SyntheticSpec::new(300, 6, 4, "softmax").with_noise(NoiseMode::MultinomialSample);
    synthesize(&spec, seed).unwrap()
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

#[test]
fn identity_gls_is_least_squares_for_many_shapes() {
    for (n, d, k) in [(30, 2, 2), (100, 15, 5), (64, 64, 3), (500, 7, 10)] {
        let x = gaussian(n, d, (n * d) as u64);
        let y = one_hot(&random_labels(n, k, 7), k);
        let batch = LabeledBatch::new(x.view(), y.view()).unwrap();
        let (w, _) = generalized_least_squares(&batch, &LinkSpec::identity(), None, &SolverOptions::new(1)).unwrap();
        let err = max_abs_diff(w.w.view(), ls_oracle(x.view(), y.view()).view());
        assert!(err < 1e-8, "({n},{d},{k}): {err}");
    }
}

#[test]
fn gls_descends_monotonically_for_softmax() {
    let data = softmax_data(1);
    let batch = LabeledBatch::new(data.x.view(), data.y.view()).unwrap();
    let (_, trace) = generalized_least_squares(&batch, &LinkSpec::softmax(), None, &SolverOptions::new(100)).unwrap();
    assert_eq!(trace.iterations.len(), 100);
    assert!(non_increasing(&trace.losses()));
}

#[test]
fn every_gls_step_is_majorized() {
    // W_{t+1} minimizes the quadratic upper bound at W_t, so the bound holds
    // between successive iterates.
    let data = softmax_data(2);
    let batch = LabeledBatch::new(data.x.view(), data.y.view()).unwrap();
    let link = LinkSpec::softmax();
    let mut w = Array2::zeros((4, 6));
    for _ in 0..10 {
        let (next, _) = generalized_least_squares(&batch, &link, Some(w.view()), &SolverOptions::new(1)).unwrap();
        let c = check_majorization(&link, &batch, next.w.view(), w.view()).unwrap();
        assert!(c.pass, "{c:?}");
        w = next.w;
    }
}

#[test]
fn gls_beats_gd_on_an_ill_conditioned_problem() {
    let spec = SyntheticSpec::new(500, 8, 3, "softmax")
        .with_log_spectrum(1e-4, 1.0)
        .with_w_norm(2.0);
    let data = synthesize(&spec, 3).unwrap();
    let batch = LabeledBatch::new(data.x.view(), data.y.view()).unwrap();
    let link = LinkSpec::softmax();
    let (_, gls) = generalized_least_squares(&batch, &link, None, &SolverOptions::new(50)).unwrap();
    let (_, gd) = gradient_descent(&batch, &link, None, &SolverOptions::new(50)).unwrap();
    assert!(gls.last().loss < gd.last().loss);
}

#[test]
fn runs_are_deterministic_and_traces_round_trip() {
    let data = softmax_data(4);
    let batch = LabeledBatch::new(data.x.view(), data.y.view()).unwrap();
    let run = || generalized_least_squares(&batch, &LinkSpec::softmax(), None, &SolverOptions::new(20)).unwrap();
    let (a, ta) = run();
    let (b, tb) = run();
    assert_eq!(a.w, b.w);
    let json = serde_json::to_string(&ta).unwrap();
    assert_eq!(json, serde_json::to_string(&tb).unwrap());
    let back: TrainTrace = serde_json::from_str(&json).unwrap();
    assert_eq!(back, ta);
}

#[test]
fn singular_design_needs_ridge_or_fallback() {
    let mut x = gaussian(50, 4, 5);
    let c0 = x.column(0).to_owned();
    x.column_mut(3).assign(&c0);
    let y = one_hot(&random_labels(50, 3, 6), 3);
    let batch = LabeledBatch::new(x.view(), y.view()).unwrap();
    let link = LinkSpec::softmax();
    let err = generalized_least_squares(&batch, &link, None, &SolverOptions::new(5)).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    let (_, trace) =
        generalized_least_squares(&batch, &link, None, &SolverOptions::new(5).with_auto_ridge(true)).unwrap();
    assert!(trace.ridge > 0.0 && !trace.notes.is_empty());
}

#[test]
fn calibrated_model_replays_its_training_predictions() {
    let data = softmax_data(7);
    let batch = LabeledBatch::new(data.x.view(), data.y.view()).unwrap();
    let opts = CalibratedOptions::new(15, CalibrationBasis::polynomial(3));
    let (state, model, trace) = calibrated_least_squares(&batch, &opts).unwrap();
    let replay = model.predict(FeatureSource::Dense(data.x.view())).unwrap();
    assert!(max_abs_diff(replay.scores.view(), state.yhat.view()) < 1e-10);
    assert!(non_increasing(&trace.mses()));
    for row in state.yhat.rows() {
        assert!(row.iter().all(|&v| v >= 0.0) && (row.sum() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn calibration_basis_without_identity_is_rejected() {
    let data = softmax_data(8);
    let batch = LabeledBatch::new(data.x.view(), data.y.view()).unwrap();
    let basis: CalibrationBasis = "y2".parse().unwrap();
    let err = calibrated_least_squares(&batch, &CalibratedOptions::new(3, basis)).unwrap_err();
    assert!(matches!(err, Error::MissingIdentity), "{err}");
}

#[test]
fn stagewise_replay_matches_training_predictions() {
    let data = softmax_data(9);
    for inner in [InnerSolver::Linear, InnerSolver::CalibratedLinear, InnerSolver::logistic()] {
        let mut gen = FeatureGenerator::new(GeneratorKind::Rff { bandwidth: 12.0 }, 3).unwrap();
        let fit = stagewise(
            FeatureSource::Dense(data.x.view()),
            data.y.view(),
            &mut gen,
            &StagewiseOptions::new(20, 4, inner),
        )
        .unwrap();
        let replay = fit.model.predict(FeatureSource::Dense(data.x.view())).unwrap();
        let err = max_abs_diff(replay.scores.view(), fit.train_predictions.view());
        assert!(err < 1e-10, "{}: {err}", inner.name());
    }
}

#[test]
fn logistic_stagewise_lowers_the_loss() {
    let data = softmax_data(10);
    let mut gen = FeatureGenerator::new(GeneratorKind::Sequential, 0).unwrap();
    let fit = stagewise(
        FeatureSource::Dense(data.x.view()),
        data.y.view(),
        &mut gen,
        &StagewiseOptions::new(2, 3, InnerSolver::logistic()),
    )
    .unwrap();
    let losses = fit.trace.losses();
    assert!(non_increasing(&losses), "{losses:?}");
    assert!(losses.last().unwrap() < &losses[0]);
}

#[test]
fn stagewise_stops_when_features_run_out() {
    let data = softmax_data(11);
    let mut gen = FeatureGenerator::new(GeneratorKind::Sequential, 0).unwrap();
    let fit = stagewise(
        FeatureSource::Dense(data.x.view()),
        data.y.view(),
        &mut gen,
        &StagewiseOptions::new(4, 10, InnerSolver::Linear),
    )
    .unwrap();
    assert_eq!(fit.model.stages.len(), 2);
    assert!(fit.trace.stopped_early.is_some());
}

#[test]
fn sparse_and_dense_stagewise_agree() {
    let data = softmax_data(12);
    let csr = lsmc_core::data::CsrMatrix::from_dense(data.x.view());
    let run = |src: FeatureSource<'_>| {
        let mut gen = FeatureGenerator::new(GeneratorKind::SubsetRandom, 5).unwrap();
        stagewise(src, data.y.view(), &mut gen, &StagewiseOptions::new(3, 2, InnerSolver::Linear)).unwrap()
    };
    let dense = run(FeatureSource::Dense(data.x.view()));
    let sparse = run(FeatureSource::Sparse(&csr));
    assert!(max_abs_diff(dense.train_predictions.view(), sparse.train_predictions.view()) < 1e-12);
}
