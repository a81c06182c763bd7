use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::FeatureSource;
use crate::error::{Error, Result};
use crate::glm::{argmax_rows, LinkSpec};

/// Predictions in label space and their argmax classes (ties → lowest index).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Array2<f64>,
    pub labels: Vec<usize>,
}

impl Prediction {
    pub fn from_scores(scores: Array2<f64>) -> Self {
        let labels = argmax_rows(scores.view());
        Self { scores, labels }
    }
}

/// Fitted `k × d` weights of a single GLM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub w: Array2<f64>,
    pub link: LinkSpec,
    /// Identifier of the column space the weights act on.
    pub feature_meta: String,
}

impl WeightMatrix {
    pub fn new(w: Array2<f64>, link: LinkSpec) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight matrix"));
        }
        Ok(Self {
            w,
            link,
            feature_meta: String::new(),
        })
    }

    pub fn with_feature_meta(mut self, meta: impl Into<String>) -> Self {
        self.feature_meta = meta.into();
        self
    }

    pub fn k(&self) -> usize {
        self.w.nrows()
    }

    pub fn d(&self) -> usize {
        self.w.ncols()
    }

    /// Raw scores `Wx` for every row.
    pub fn scores(&self, x: FeatureSource<'_>) -> Result<Array2<f64>> {
        if x.ncols() != self.d() {
            return Err(Error::shape(format!(
                "model expects d = {} feature columns, data has {}",
                self.d(),
                x.ncols()
            )));
        }
        x.dot(self.w.t())
    }

    /// `g(Wx)` and the predicted classes.
    pub fn predict(&self, x: FeatureSource<'_>) -> Result<Prediction> {
        let s = self.scores(x)?;
        Ok(Prediction::from_scores(self.link.apply_rows(s.view())))
    }

    pub fn predict_dense(&self, x: ArrayView2<'_, f64>) -> Result<Prediction> {
        self.predict(FeatureSource::Dense(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_weights_predict_class_zero() {
        let m = WeightMatrix::new(Array2::zeros((3, 2)), LinkSpec::softmax()).unwrap();
        let p = m.predict_dense(array![[1.0, 2.0], [-3.0, 0.5]].view()).unwrap();
        assert_eq!(p.labels, vec![0, 0]);
        assert!(p.scores.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch_names_expected_width() {
        let m = WeightMatrix::new(Array2::zeros((2, 4)), LinkSpec::identity()).unwrap();
        let err = m.predict_dense(Array2::zeros((1, 3)).view()).unwrap_err().to_string();
        assert!(err.contains("d = 4"), "{err}");
    }

    #[test]
    fn rejects_non_finite_weights() {
        assert!(WeightMatrix::new(array![[f64::NAN]], LinkSpec::identity()).is_err());
    }
}
