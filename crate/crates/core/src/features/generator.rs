//! Feature-block generators for stagewise fitting.
//!
//! A generator is a pure function of its seed and call sequence: it emits
//! [`BlockSpec`]s, which are small descriptions (column lists or random-feature
//! seeds) that can be materialized against any data matrix with the original
//! columns. Models store block specs, never generated features.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::rff::{RffMap, RffSpec};
use crate::data::FeatureSource;
use crate::error::{Error, Result};
use crate::rng;

/// One stage's features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockSpec {
    /// Original columns, in this order.
    Columns(Vec<usize>),
    Rff(RffSpec),
}

impl BlockSpec {
    pub fn width(&self) -> usize {
        match self {
            BlockSpec::Columns(c) => c.len(),
            BlockSpec::Rff(s) => s.m,
        }
    }

    /// `n × width` dense block computed from the original features.
    pub fn materialize(&self, source: FeatureSource<'_>) -> Result<Array2<f64>> {
        match self {
            BlockSpec::Columns(cols) => source.columns(cols),
            BlockSpec::Rff(spec) => {
                let map = RffMap::from_spec(spec)?;
                match source {
                    FeatureSource::Dense(x) => map.transform(x),
                    FeatureSource::Sparse(_) => map.transform(source.to_dense().view()),
                }
            }
        }
    }
}

/// When gradient-ordered subsets recompute their ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RerankPolicy {
    /// Once at the start of every pass over the features.
    #[default]
    PerPass,
    /// Before every block, over the features not yet used in this pass.
    PerBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GeneratorKind {
    /// All original columns as a single block.
    Identity,
    /// Contiguous blocks `0..p`, `p..2p`, ...
    Sequential,
    /// Blocks of a seeded permutation, without replacement within a pass.
    SubsetRandom,
    /// Unused columns with the largest `‖(1/n) Σᵢ rᵢ xᵢⱼ‖₂` first.
    SubsetGradient { rerank: RerankPolicy },
    /// Fresh random Fourier features at every call.
    Rff { bandwidth: f64 },
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Identity => "identity",
            GeneratorKind::Sequential => "sequential",
            GeneratorKind::SubsetRandom => "subset-random",
            GeneratorKind::SubsetGradient { .. } => "subset-gradient",
            GeneratorKind::Rff { .. } => "rff",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureGenerator {
    kind: GeneratorKind,
    seed: u64,
    passes: usize,
    pass: usize,
    calls: u64,
    queue: VecDeque<usize>,
}

/// Per-column gradient magnitudes `‖(1/n) Σᵢ rᵢ xᵢⱼ‖₂` for residual rows `rᵢ`.
pub fn gradient_scores(source: FeatureSource<'_>, residual: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let n = source.nrows().max(1) as f64;
    let g = source.transpose_dot(residual)?;
    Ok(g.rows().into_iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt() / n).collect())
}

/// Candidates sorted by descending score; ties keep ascending column order.
pub fn rank_by_gradient(
    source: FeatureSource<'_>,
    residual: ArrayView2<'_, f64>,
    candidates: &[usize],
) -> Result<Vec<usize>> {
    let scores = gradient_scores(source, residual)?;
    let mut order = candidates.to_vec();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order)
}

impl FeatureGenerator {
    pub fn new(kind: GeneratorKind, seed: u64) -> Result<Self> {
        if let GeneratorKind::Rff { bandwidth } = kind {
            if !(bandwidth > 0.0) || !bandwidth.is_finite() {
                return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
            }
        }
        Ok(Self {
            kind,
            seed,
            passes: 1,
            pass: 0,
            calls: 0,
            queue: VecDeque::new(),
        })
    }

    /// Number of passes over the original columns before the generator is
    /// exhausted (subset kinds only).
    pub fn with_passes(mut self, passes: usize) -> Self {
        self.passes = passes.max(1);
        self
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Current pass, counting from 0.
    pub fn pass(&self) -> usize {
        self.pass.saturating_sub(1)
    }

    fn start_pass(&mut self, source: FeatureSource<'_>, residual: ArrayView2<'_, f64>) -> Result<bool> {
        if self.pass >= self.passes {
            return Ok(false);
        }
        let d = source.ncols();
        let order: Vec<usize> = match &self.kind {
            GeneratorKind::SubsetRandom => {
                let mut order: Vec<usize> = (0..d).collect();
                order.shuffle(&mut rng::stream(rng::derive_seed(self.seed, self.pass as u64)));
                order
            }
            GeneratorKind::SubsetGradient { .. } => {
                let all: Vec<usize> = (0..d).collect();
                rank_by_gradient(source, residual, &all)?
            }
            _ => (0..d).collect(),
        };
        self.pass += 1;
        self.queue = order.into();
        Ok(!self.queue.is_empty())
    }

    /// Next block of (up to) `p` features, or `None` once every pass is used up.
    /// `residual` is the current `n × k` residual `y − ŷ`.
    pub fn next_block(
        &mut self,
        p: usize,
        source: FeatureSource<'_>,
        residual: ArrayView2<'_, f64>,
    ) -> Result<Option<BlockSpec>> {
        if p == 0 {
            return Err(Error::invalid("block size must be at least 1"));
        }
        if residual.nrows() != source.nrows() {
            return Err(Error::shape("residual and features differ in row count"));
        }
        let call = self.calls;
        let block = match self.kind.clone() {
            GeneratorKind::Rff { bandwidth } => Some(BlockSpec::Rff(RffSpec {
                input_dim: source.ncols(),
                m: p,
                bandwidth,
                seed: rng::derive_seed(self.seed, call),
            })),
            GeneratorKind::Identity => {
                if self.pass >= self.passes || source.ncols() == 0 {
                    None
                } else {
                    self.pass += 1;
                    Some(BlockSpec::Columns((0..source.ncols()).collect()))
                }
            }
            kind => {
                if self.queue.is_empty() && !self.start_pass(source, residual)? {
                    None
                } else {
                    if let GeneratorKind::SubsetGradient {
                        rerank: RerankPolicy::PerBlock,
                    } = kind
                    {
                        let remaining: Vec<usize> = self.queue.iter().copied().collect();
                        self.queue = rank_by_gradient(source, residual, &remaining)?.into();
                    }
                    let take = p.min(self.queue.len());
                    Some(BlockSpec::Columns(self.queue.drain(..take).collect()))
                }
            }
        };
        if block.is_some() {
            self.calls += 1;
        }
        Ok(block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn drain(mut g: FeatureGenerator, p: usize, x: &Array2<f64>) -> Vec<BlockSpec> {
        let r = Array2::zeros((x.nrows(), 1));
        let mut out = Vec::new();
        while let Some(b) = g.next_block(p, FeatureSource::Dense(x.view()), r.view()).unwrap() {
            out.push(b);
            assert!(out.len() < 1000);
        }
        out
    }

    fn cols(b: &BlockSpec) -> Vec<usize> {
        match b {
            BlockSpec::Columns(c) => c.clone(),
            _ => panic!("expected columns"),
        }
    }

    #[test]
    fn one_block_covers_everything() {
        let x = Array2::zeros((3, 7));
        for kind in [GeneratorKind::SubsetRandom, GeneratorKind::Sequential, GeneratorKind::Identity] {
            let blocks = drain(FeatureGenerator::new(kind, 4).unwrap(), 7, &x);
            assert_eq!(blocks.len(), 1);
            let mut c = cols(&blocks[0]);
            c.sort_unstable();
            assert_eq!(c, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn random_subsets_are_without_replacement_and_seeded() {
        let x = Array2::zeros((2, 10));
        let a = drain(FeatureGenerator::new(GeneratorKind::SubsetRandom, 1).unwrap(), 3, &x);
        let b = drain(FeatureGenerator::new(GeneratorKind::SubsetRandom, 1).unwrap(), 3, &x);
        assert_eq!(a, b);
        assert_eq!(a.iter().map(BlockSpec::width).collect::<Vec<_>>(), vec![3, 3, 3, 1]);
        let mut all: Vec<usize> = a.iter().flat_map(cols).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn passes_repeat_the_columns() {
        let x = Array2::zeros((2, 4));
        let g = FeatureGenerator::new(GeneratorKind::Sequential, 0).unwrap().with_passes(2);
        let blocks = drain(g, 3, &x);
        let seen: Vec<Vec<usize>> = blocks.iter().map(cols).collect();
        assert_eq!(seen, vec![vec![0, 1, 2], vec![3], vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn gradient_order_prefers_the_residual_column() {
        let r = array![[1.0, 0.5], [-2.0, 0.0], [0.5, -1.0], [0.0, 0.25]];
        // column 2 equals the residual's second component
        let x = array![
            [0.1, 0.0, 0.5, 0.2],
            [0.0, 0.3, 0.0, 0.1],
            [0.2, 0.0, -1.0, 0.0],
            [0.0, 0.1, 0.25, 0.3]
        ];
        let mut g = FeatureGenerator::new(
            GeneratorKind::SubsetGradient {
                rerank: RerankPolicy::PerPass,
            },
            0,
        )
        .unwrap();
        let first = g.next_block(1, FeatureSource::Dense(x.view()), r.view()).unwrap().unwrap();
        assert_eq!(first, BlockSpec::Columns(vec![2]));
    }

    #[test]
    fn gradient_ties_keep_column_order() {
        let x = array![[1.0, 1.0, 1.0]];
        let r = array![[1.0]];
        assert_eq!(rank_by_gradient(FeatureSource::Dense(x.view()), r.view(), &[2, 0, 1]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn rff_blocks_replay() {
        let x = array![[0.0, 1.0], [1.0, 0.5]];
        let r = Array2::zeros((2, 1));
        let mut g = FeatureGenerator::new(GeneratorKind::Rff { bandwidth: 1.0 }, 5).unwrap();
        let b0 = g.next_block(8, FeatureSource::Dense(x.view()), r.view()).unwrap().unwrap();
        let b1 = g.next_block(8, FeatureSource::Dense(x.view()), r.view()).unwrap().unwrap();
        assert_ne!(b0, b1);
        let z = b0.materialize(FeatureSource::Dense(x.view())).unwrap();
        assert_eq!(z, b0.materialize(FeatureSource::Dense(x.view())).unwrap());
        assert_eq!(z.dim(), (2, 8));
    }
}
