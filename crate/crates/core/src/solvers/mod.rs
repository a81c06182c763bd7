//! Training algorithms. Every solver returns its fitted model together with a
//! [`TrainTrace`] of per-iteration losses.

mod calibrated;
mod gls;
mod predict;
mod stagewise;
mod trace;

pub use calibrated::{
    calibrated_least_squares, CalibratedModel, CalibratedOptions, CalibratedRun, CalibrationStage, PredictionState,
};
pub use gls::{generalized_least_squares, gls_with_preconditioner, gradient_descent, Preconditioner};
pub use predict::{Prediction, WeightMatrix};
pub use stagewise::{
    stagewise, InnerSolver, Stage, StagewiseFit, StagewiseModel, StagewiseOptions, DEFAULT_LOGISTIC_INNER_ITERS,
};
pub use trace::{IterRecord, SolverOptions, TrainTrace, EARLY_STOP_TOL, EARLY_STOP_WINDOW};
