//! Feature maps, preprocessing and stagewise block generators.

mod bandwidth;
mod basis;
mod generator;
mod pca;
mod rff;

pub use bandwidth::{median_bandwidth, BandwidthMode, DEFAULT_BANDWIDTH_SAMPLE};
pub use basis::{apply_basis, BasisFn, CalibrationBasis};
pub use generator::{gradient_scores, rank_by_gradient, BlockSpec, FeatureGenerator, GeneratorKind, RerankPolicy};
pub use pca::{pca_fit_project, PcaBasis};
pub use rff::{rff_block, RffMap, RffSpec};

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// A fitted preprocessing chain (optional PCA, then optional random Fourier
/// features, then an optional constant column), stored with models so test
/// data goes through the same maps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub pca: Option<PcaBasis>,
    pub rff: Option<RffSpec>,
    #[serde(default)]
    pub intercept: bool,
}

impl FeaturePipeline {
    pub fn is_identity(&self) -> bool {
        self.pca.is_none() && self.rff.is_none() && !self.intercept
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = match &self.pca {
            Some(p) => p.project(x)?,
            None => x.to_owned(),
        };
        if let Some(spec) = &self.rff {
            out = RffMap::from_spec(spec)?.transform(out.view())?;
        }
        if self.intercept {
            let ones = Array2::ones((out.nrows(), 1));
            out = concatenate![Axis(1), out, ones];
        }
        Ok(out)
    }

    /// [`transform`](Self::transform) that keeps sparse input sparse when
    /// only an intercept is requested.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        match x {
            FeatureMatrix::Sparse(c) if self.pca.is_none() && self.rff.is_none() => Ok(FeatureMatrix::Sparse(
                if self.intercept { c.with_constant_column(1.0) } else { c.clone() },
            )),
            FeatureMatrix::Sparse(c) => {
                log::info!("densifying a {}×{} sparse matrix for the feature map", c.nrows(), c.ncols());
                self.transform(c.to_dense().view()).map(FeatureMatrix::Dense)
            }
            FeatureMatrix::Dense(d) => self.transform(d.view()).map(FeatureMatrix::Dense),
        }
    }

    /// Input width the pipeline was fitted on, when it constrains one.
    pub fn input_dim(&self) -> Option<usize> {
        match (&self.pca, &self.rff) {
            (Some(p), _) => Some(p.input_dim()),
            (None, Some(s)) => Some(s.input_dim),
            (None, None) => None,
        }
    }

    pub fn check_input(&self, d: usize) -> Result<()> {
        match self.input_dim() {
            Some(want) if want != d => Err(Error::shape(format!(
                "feature pipeline expects d = {want} input columns, data has {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// Short identifier of the column space this pipeline produces.
    pub fn describe(&self, input_dim: usize) -> String {
        let mut parts = vec![format!("raw{input_dim}")];
        if let Some(p) = &self.pca {
            parts.push(format!("pca{}", p.dim()));
        }
        if let Some(s) = &self.rff {
            parts.push(format!("rff{}(s={},seed={})", s.m, s.bandwidth, s.seed));
        }
        if self.intercept {
            parts.push("intercept".into());
        }
        parts.join("+")
    }
}
