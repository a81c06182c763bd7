//! Bag-of-words preprocessing.

use super::{libsvm::MultiLabelRows, CsrMatrix, Dataset, FeatureMatrix, Split};
use crate::error::{Error, Result};

/// The four top-level topics of the single-label RCV1 task.
pub const RCV1_TOPICS: [&str; 4] = ["CCAT", "ECAT", "GCAT", "MCAT"];

/// Entrywise `log(1 + c)`; zeros stay zeros.
pub fn log_tf(counts: &CsrMatrix) -> Result<CsrMatrix> {
    if let Some(v) = counts.values().iter().find(|&&v| v < 0.0) {
        return Err(Error::invalid(format!("negative term count {v}")));
    }
    Ok(counts.map_values(f64::ln_1p))
}

/// Training and held-out splits after rare-term pruning.
#[derive(Debug, Clone)]
pub struct PrunedSplits {
    pub train: Dataset,
    pub others: Vec<Dataset>,
    /// Original column index of every kept column.
    pub kept_columns: Vec<usize>,
}

/// Drops columns whose total training count is below `min_count` from the
/// training set and every other split. Counts are column sums of the raw
/// (untransformed) training matrix.
pub fn prune_rare_terms(train: &Dataset, others: &[Dataset], min_count: f64) -> Result<PrunedSplits> {
    let d = train.d();
    if let Some(o) = others.iter().find(|o| o.d() != d) {
        return Err(Error::shape(format!("split has {} columns, training set has {d}", o.d())));
    }
    let sums = match train.features() {
        FeatureMatrix::Sparse(m) => m.column_sums(),
        FeatureMatrix::Dense(x) => x.sum_axis(ndarray::Axis(0)).to_vec(),
    };
    let kept_columns: Vec<usize> = (0..d).filter(|&j| sums[j] >= min_count).collect();
    let tag = format!("prune_rare_terms(min_count={min_count}, kept={})", kept_columns.len());
    let prune = |ds: &Dataset| -> Result<Dataset> {
        ds.clone()
            .map_features(tag.clone(), |f| f.select_columns(&kept_columns))
    };
    Ok(PrunedSplits {
        train: prune(train)?,
        others: others.iter().map(prune).collect::<Result<_>>()?,
        kept_columns,
    })
}

/// Keeps stories carrying exactly one of the four RCV1 topics and drops
/// multi-topic ones. Classes are ordered as in [`RCV1_TOPICS`].
pub fn rcv1_four_class(rows: &MultiLabelRows, split: Split) -> Result<Dataset> {
    let mut keep = Vec::new();
    let mut labels = Vec::new();
    for (i, set) in rows.labels.iter().enumerate() {
        let hits: Vec<usize> = RCV1_TOPICS
            .iter()
            .enumerate()
            .filter(|(_, t)| set.contains(**t))
            .map(|(c, _)| c)
            .collect();
        if let [c] = hits.as_slice() {
            keep.push(i);
            labels.push(*c);
        }
    }
    let features = FeatureMatrix::Sparse(rows.features.select_rows(&keep));
    let names = RCV1_TOPICS.iter().map(|s| s.to_string()).collect();
    let mut ds = Dataset::new(features, labels, names)?
        .with_split(split)
        .with_source(rows.source.clone());
    ds.provenance
        .transforms
        .push(format!("rcv1_four_class(kept={} of {})", keep.len(), rows.labels.len()));
    Ok(ds)
}
