//! Dataset containers, file loaders, text preprocessing and synthetic GLM data.

mod container;
mod idx;
mod libsvm;
mod sparse;
mod synth;
mod text;

pub use container::{
    decode_dataset, encode_dataset, read_dataset, read_model_container, write_dataset, write_model_container, CONTAINER_MAGIC,
    CONTAINER_VERSION,
};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IMAGES_MAGIC, LABELS_MAGIC};
pub use libsvm::{load_libsvm, load_libsvm_multilabel, parse_libsvm, parse_libsvm_multilabel, MultiLabelRows};
pub use sparse::CsrMatrix;
pub use synth::{synthesize, NoiseMode, Synthetic, SyntheticSpec};
pub use text::{log_tf, prune_rare_terms, rcv1_four_class, PrunedSplits, RCV1_TOPICS};

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::one_hot;
use crate::rng;

/// Example-by-feature matrix, dense or sparse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMatrix {
    Dense(Array2<f64>),
    Sparse(CsrMatrix),
}

impl FeatureMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            FeatureMatrix::Dense(x) => x.nrows(),
            FeatureMatrix::Sparse(x) => x.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            FeatureMatrix::Dense(x) => x.ncols(),
            FeatureMatrix::Sparse(x) => x.ncols(),
        }
    }

    pub fn source(&self) -> FeatureSource<'_> {
        match self {
            FeatureMatrix::Dense(x) => FeatureSource::Dense(x.view()),
            FeatureMatrix::Sparse(x) => FeatureSource::Sparse(x),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            FeatureMatrix::Dense(x) => x.clone(),
            FeatureMatrix::Sparse(x) => x.to_dense(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Dense(x) => FeatureMatrix::Dense(x.select(Axis(0), rows)),
            FeatureMatrix::Sparse(x) => FeatureMatrix::Sparse(x.select_rows(rows)),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<FeatureMatrix> {
        match self {
            FeatureMatrix::Dense(x) => {
                if let Some(&c) = cols.iter().find(|&&c| c >= x.ncols()) {
                    return Err(Error::shape(format!("column {c} out of range")));
                }
                Ok(FeatureMatrix::Dense(x.select(Axis(1), cols)))
            }
            FeatureMatrix::Sparse(x) => Ok(FeatureMatrix::Sparse(x.select_columns(cols)?)),
        }
    }
}

/// Borrowed view of a [`FeatureMatrix`].
#[derive(Debug, Clone, Copy)]
pub enum FeatureSource<'a> {
    Dense(ArrayView2<'a, f64>),
    Sparse(&'a CsrMatrix),
}

impl<'a> FeatureSource<'a> {
    pub fn nrows(&self) -> usize {
        match self {
            FeatureSource::Dense(x) => x.nrows(),
            FeatureSource::Sparse(x) => x.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            FeatureSource::Dense(x) => x.ncols(),
            FeatureSource::Sparse(x) => x.ncols(),
        }
    }

    /// Dense `n × p` block of the listed columns.
    pub fn columns(&self, cols: &[usize]) -> Result<Array2<f64>> {
        match self {
            FeatureSource::Dense(x) => {
                if let Some(&c) = cols.iter().find(|&&c| c >= x.ncols()) {
                    return Err(Error::shape(format!("column {c} out of range for {} columns", x.ncols())));
                }
                Ok(x.select(Axis(1), cols))
            }
            FeatureSource::Sparse(x) => x.columns_dense(cols),
        }
    }

    /// `X B` for dense `B`.
    pub fn dot(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            FeatureSource::Dense(x) => {
                if x.ncols() != b.nrows() {
                    return Err(Error::shape("inner dimensions differ"));
                }
                Ok(x.dot(&b))
            }
            FeatureSource::Sparse(x) => x.dot_dense(b),
        }
    }

    /// `Xᵀ R`.
    pub fn transpose_dot(&self, r: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            FeatureSource::Dense(x) => {
                if x.nrows() != r.nrows() {
                    return Err(Error::shape("row counts differ"));
                }
                Ok(x.t().dot(&r))
            }
            FeatureSource::Sparse(x) => x.transpose_dot(r),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            FeatureSource::Dense(x) => x.to_owned(),
            FeatureSource::Sparse(x) => x.to_dense(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Unspecified,
}

/// Where a dataset came from and what was done to it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub transforms: Vec<String>,
}

/// Features with one-hot labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<usize>,
    targets: Array2<f64>,
    class_names: Vec<String>,
    pub split: Split,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(features: FeatureMatrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        let k = class_names.len();
        if k == 0 {
            return Err(Error::invalid("a dataset needs at least one class"));
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= k) {
            return Err(Error::invalid(format!("label {c} out of range for {k} classes")));
        }
        let targets = one_hot(&labels, k);
        Ok(Self {
            features,
            labels,
            targets,
            class_names,
            split: Split::Unspecified,
            provenance: Provenance::default(),
        })
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.provenance.source = source.into();
        self
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn k(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// One-hot `n × k` label matrix.
    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub(crate) fn replace_features(&mut self, features: FeatureMatrix, transform: impl Into<String>) {
        debug_assert_eq!(features.nrows(), self.n());
        self.features = features;
        self.provenance.transforms.push(transform.into());
    }

    pub fn map_features(
        mut self,
        transform: impl Into<String>,
        f: impl FnOnce(FeatureMatrix) -> Result<FeatureMatrix>,
    ) -> Result<Self> {
        let features = std::mem::replace(&mut self.features, FeatureMatrix::Dense(Array2::zeros((0, 0))));
        let mapped = f(features)?;
        if mapped.nrows() != self.n() {
            return Err(Error::shape("feature transform changed the number of rows"));
        }
        self.replace_features(mapped, transform);
        Ok(self)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let labels: Vec<usize> = rows.iter().map(|&i| self.labels[i]).collect();
        let mut out = Dataset::new(self.features.select_rows(rows), labels, self.class_names.clone())
            .expect("row subset of a valid dataset");
        out.split = self.split;
        out.provenance = self.provenance.clone();
        out
    }

    /// Seeded random split into `n_train` training rows and the rest.
    pub fn split_seeded(&self, n_train: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        use rand::seq::SliceRandom;
        if n_train > self.n() {
            return Err(Error::invalid(format!("cannot take {n_train} training rows from {}", self.n())));
        }
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.shuffle(&mut rng::stream(seed));
        let (a, b) = order.split_at(n_train);
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        a.sort_unstable();
        b.sort_unstable();
        let tag = format!("split(seed={seed}, train={n_train})");
        let mut train = self.select_rows(&a).with_split(Split::Train);
        let mut test = self.select_rows(&b).with_split(Split::Test);
        train.provenance.transforms.push(tag.clone());
        test.provenance.transforms.push(tag);
        Ok((train, test))
    }
}
