pub mod data;
pub mod diagnostics;
pub mod error;
pub mod features;
pub mod glm;
pub mod linalg;
pub mod rng;
pub mod simplex;
pub mod solvers;

pub use error::{Error, Result};
pub use data::{Dataset, FeatureMatrix, FeatureSource, Split};
pub use features::{CalibrationBasis, FeatureGenerator, GeneratorKind};
pub use glm::{LabeledBatch, LinkSpec};
pub use solvers::{
    calibrated_least_squares, generalized_least_squares, gradient_descent, stagewise, CalibratedOptions,
    InnerSolver, SolverOptions, StagewiseOptions, TrainTrace, WeightMatrix,
};
