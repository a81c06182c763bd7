use std::collections::BTreeMap;
use std::path::Path;

use lsmc_core::data::{read_model_container, write_model_container, FeatureMatrix};
use lsmc_core::diagnostics::{classification_error, Confusion};
use lsmc_core::features::{
    median_bandwidth, pca_fit_project, BandwidthMode, CalibrationBasis, FeatureGenerator, FeaturePipeline,
    GeneratorKind, RerankPolicy, RffSpec,
};
use lsmc_core::glm::{LabeledBatch, LinkSpec};
use lsmc_core::linalg::{spectrum_of, subsample_rows};
use lsmc_core::rng::derive_seed;
use lsmc_core::solvers::{
    calibrated_least_squares, generalized_least_squares, gradient_descent, stagewise, CalibratedModel,
    CalibratedOptions, InnerSolver, IterRecord, Prediction, SolverOptions, StagewiseModel, StagewiseOptions,
    TrainTrace, WeightMatrix,
};
use lsmc_core::{Dataset, FeatureSource};
use serde::{Deserialize, Serialize};

use crate::config::{Algo, BandwidthArg, EvalArgs, FeatureArgs, GenArg, InnerArg, RerankArg, SpectrumArgs, TrainArgs};
use crate::failure::{io_failure, CliResult, Failure};
use crate::source::{self, git_blob_hash};

pub const MODEL_FILE: &str = "model.lsmc";
pub const TRACE_FILE: &str = "trace.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SavedModel {
    Glm(WeightMatrix),
    Calibrated(CalibratedModel),
    Stagewise(StagewiseModel),
}

impl SavedModel {
    pub fn predict(&self, x: FeatureSource<'_>) -> lsmc_core::Result<Prediction> {
        match self {
            SavedModel::Glm(m) => m.predict(x),
            SavedModel::Calibrated(m) => m.predict(x),
            SavedModel::Stagewise(m) => m.predict(x),
        }
    }
}

/// Solver payload of the model container.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    /// Width of the raw input features.
    pub input_dim: usize,
    pub class_names: Vec<String>,
    pub pipeline: FeaturePipeline,
    pub model: SavedModel,
}

#[derive(Debug, Serialize)]
struct FinalSummary {
    algorithm: String,
    train_error: f64,
    test_error: Option<f64>,
    loss: f64,
    mse: f64,
    iterations: usize,
    ridge: f64,
    stopped_early: Option<String>,
    notes: Vec<String>,
    feature_meta: String,
}

#[derive(Debug, Serialize)]
struct TraceFile<'a> {
    config: &'a TrainArgs,
    seed: u64,
    inputs: &'a BTreeMap<String, String>,
    initial: &'a IterRecord,
    iterations: &'a [IterRecord],
    #[serde(rename = "final")]
    summary: FinalSummary,
}

fn bandwidth_mode(m: BandwidthArg) -> BandwidthMode {
    match m {
        BandwidthArg::Squared => BandwidthMode::Squared,
        BandwidthArg::Unsquared => BandwidthMode::Unsquared,
    }
}

/// Median-heuristic bandwidth on a seeded row sample (sparse rows are
/// densified only for the sample).
fn auto_bandwidth(x: &FeatureMatrix, args: &FeatureArgs, seed: u64) -> CliResult<f64> {
    let rows = subsample_rows(x.nrows(), args.bandwidth_sample, seed);
    let sample = x.select_rows(&rows).to_dense();
    let s = median_bandwidth(sample.view(), args.bandwidth_sample, seed, bandwidth_mode(args.bandwidth_mode))?;
    log::info!("median bandwidth {s}");
    Ok(s)
}

/// Fits the preprocessing chain on training features and applies it.
fn fit_pipeline(x: &FeatureMatrix, args: &FeatureArgs, seed: u64) -> CliResult<(FeaturePipeline, FeatureMatrix)> {
    let mut pipeline = FeaturePipeline::default();
    let mut current = x.clone();
    if let Some(r) = args.pca {
        let (basis, projected) = pca_fit_project(current.to_dense().view(), r)?;
        pipeline.pca = Some(basis);
        current = FeatureMatrix::Dense(projected);
    }
    if let Some(m) = args.rff {
        let bandwidth = match args.bandwidth {
            Some(s) => s,
            None => auto_bandwidth(&current, args, derive_seed(seed, 101))?,
        };
        let spec = RffSpec {
            input_dim: current.ncols(),
            m,
            bandwidth,
            seed: derive_seed(seed, 102),
        };
        pipeline.rff = Some(spec);
    }
    pipeline.intercept = args.intercept;
    let pre_rff = FeaturePipeline {
        pca: None,
        ..pipeline.clone()
    };
    let out = pre_rff.apply(&current)?;
    Ok((pipeline, out))
}

fn apply_pipeline(pipeline: &FeaturePipeline, ds: &Dataset) -> CliResult<FeatureMatrix> {
    pipeline.check_input(ds.d())?;
    Ok(pipeline.apply(ds.features())?)
}

fn dense(x: &FeatureMatrix) -> ndarray::Array2<f64> {
    if let FeatureMatrix::Sparse(c) = x {
        log::info!("densifying {}×{} sparse features for a full-matrix solver", c.nrows(), c.ncols());
    }
    x.to_dense()
}

fn link_of(args: &TrainArgs) -> CliResult<LinkSpec> {
    let link = LinkSpec::by_name(&args.solver.link)?;
    Ok(match args.solver.lipschitz {
        Some(l) => link.with_lipschitz(l)?,
        None => link,
    })
}

fn solver_options(args: &TrainArgs, iters: usize) -> SolverOptions {
    SolverOptions::new(iters)
        .with_ridge(args.solver.ridge)
        .with_auto_ridge(args.solver.auto_ridge)
        .with_early_stop(args.solver.early_stop)
        .with_timing(args.timing)
}

fn generator_kind(args: &TrainArgs, x: &FeatureMatrix) -> CliResult<GeneratorKind> {
    Ok(match args.solver.gen {
        GenArg::Identity => GeneratorKind::Identity,
        GenArg::Sequential => GeneratorKind::Sequential,
        GenArg::Random => GeneratorKind::SubsetRandom,
        GenArg::Gradient => GeneratorKind::SubsetGradient {
            rerank: match args.solver.rerank {
                RerankArg::PerPass => RerankPolicy::PerPass,
                RerankArg::PerBlock => RerankPolicy::PerBlock,
            },
        },
        GenArg::Rff => GeneratorKind::Rff {
            bandwidth: match args.features.bandwidth {
                Some(s) => s,
                None => auto_bandwidth(x, &args.features, derive_seed(args.seed, 103))?,
            },
        },
    })
}

fn fit(args: &TrainArgs, x: &FeatureMatrix, ds: &Dataset) -> CliResult<(SavedModel, TrainTrace)> {
    let y = ds.targets();
    let s = &args.solver;
    match s.algo {
        Algo::Gls | Algo::Gd => {
            let xd = dense(x);
            let batch = LabeledBatch::new(xd.view(), y.view())?;
            let link = link_of(args)?;
            let opts = solver_options(args, s.iters);
            let (w, trace) = if s.algo == Algo::Gls {
                generalized_least_squares(&batch, &link, None, &opts)?
            } else {
                gradient_descent(&batch, &link, None, &opts)?
            };
            Ok((SavedModel::Glm(w), trace))
        }
        Algo::Calibrated => {
            let xd = dense(x);
            let batch = LabeledBatch::new(xd.view(), y.view())?;
            let basis: CalibrationBasis = s.basis.parse()?;
            let opts = CalibratedOptions::new(s.iters, basis)
                .with_ridge(s.ridge)
                .with_auto_ridge(s.auto_ridge)
                .with_timing(args.timing);
            let (_, model, trace) = calibrated_least_squares(&batch, &opts)?;
            Ok((SavedModel::Calibrated(model), trace))
        }
        Algo::Stagewise => {
            let inner = match s.inner {
                InnerArg::Linear => InnerSolver::Linear,
                InnerArg::Calibrated => InnerSolver::CalibratedLinear,
                InnerArg::Logistic => InnerSolver::Logistic {
                    inner_iters: s.inner_iters,
                },
            };
            let kind = generator_kind(args, x)?;
            let mut gen = FeatureGenerator::new(kind, derive_seed(args.seed, 104))?.with_passes(s.passes);
            let opts = StagewiseOptions::new(s.block, s.stages, inner)
                .with_ridge(s.ridge)
                .with_auto_ridge(s.auto_ridge)
                .with_timing(args.timing);
            let fit = stagewise(x.source(), y.view(), &mut gen, &opts)?;
            Ok((SavedModel::Stagewise(fit.model), fit.trace))
        }
    }
}

fn set_meta(model: &mut SavedModel, meta: String) {
    match model {
        SavedModel::Glm(m) => m.feature_meta = meta,
        SavedModel::Calibrated(m) => m.feature_meta = meta,
        SavedModel::Stagewise(m) => m.feature_meta = meta,
    }
}

/// Writes a line to stdout; a closed pipe (`lsmc eval ... | head`) is not an error.
pub fn emit(text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::usage(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let loaded = source::load(&args.data, args.seed)?;
    let ds = &loaded.dataset;
    let (pipeline, x) = fit_pipeline(ds.features(), &args.features, args.seed)?;
    let meta = pipeline.describe(ds.d());
    let (mut model, trace) = fit(args, &x, ds)?;
    set_meta(&mut model, meta.clone());

    let train_pred = model.predict(x.source())?;
    let train_error = classification_error(train_pred.scores.view(), ds.labels())?;
    let mut inputs = loaded.hashes.clone();
    let test_error = match &args.test_data {
        Some(t) => {
            let test_args = crate::config::DataArgs {
                data: t.clone(),
                ..args.data.clone()
            };
            let test = source::load(&test_args, args.seed)?;
            inputs.extend(test.hashes.clone());
            let tx = apply_pipeline(&pipeline, &test.dataset)?;
            let pred = model.predict(tx.source())?;
            Some(classification_error(pred.scores.view(), test.dataset.labels())?)
        }
        None => None,
    };

    std::fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let config = serde_json::to_value(args).map_err(|e| Failure::usage(e.to_string()))?;
    let file = ModelFile {
        config,
        inputs: inputs.clone(),
        input_dim: ds.d(),
        class_names: ds.class_names().to_vec(),
        pipeline,
        model,
    };
    let model_path = args.out.join(MODEL_FILE);
    write_model_container(&model_path, ds.d(), ds.k(), &file)?;

    let last = trace.last();
    let summary = FinalSummary {
        algorithm: trace.algorithm.clone(),
        train_error,
        test_error,
        loss: last.loss,
        mse: last.mse,
        iterations: trace.iterations.len(),
        ridge: trace.ridge,
        stopped_early: trace.stopped_early.clone(),
        notes: trace.notes.clone(),
        feature_meta: meta,
    };
    let trace_path = args.out.join(TRACE_FILE);
    write_json(
        &trace_path,
        &TraceFile {
            config: args,
            seed: args.seed,
            inputs: &inputs,
            initial: &trace.initial,
            iterations: &trace.iterations,
            summary,
        },
    )?;
    emit(&format!(
        "{} iterations, train error {:.4}{}; wrote {} and {}",
        trace.iterations.len(),
        train_error,
        test_error.map(|e| format!(", test error {e:.4}")).unwrap_or_default(),
        model_path.display(),
        trace_path.display()
    ))
}

#[derive(Debug, Serialize)]
struct ClassRow {
    class: usize,
    name: String,
    count: usize,
    errors: usize,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    model: String,
    model_hash: String,
    inputs: BTreeMap<String, String>,
    n: usize,
    error: f64,
    per_class: Vec<ClassRow>,
    /// `confusion[true][predicted]`.
    confusion: Vec<Vec<usize>>,
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let bytes = std::fs::read(&args.model).map_err(|e| io_failure(&args.model, e))?;
    let (d, k, file): (usize, usize, ModelFile) = read_model_container(&args.model)?;
    let seed = file.config.get("seed").and_then(|s| s.as_u64()).unwrap_or(0);
    let loaded = source::load(&args.data, seed)?;
    let ds = &loaded.dataset;
    if ds.d() != d {
        return Err(Failure::usage(format!(
            "model was trained on d = {d} features but {} has {}",
            args.data.data,
            ds.d()
        )));
    }
    if ds.k() > k {
        return Err(Failure::usage(format!(
            "model has {k} classes but {} has {}",
            args.data.data,
            ds.k()
        )));
    }
    let x = apply_pipeline(&file.pipeline, ds)?;
    let pred = file.model.predict(x.source())?;
    let error = classification_error(pred.scores.view(), ds.labels())?;
    let confusion = Confusion::new(&pred.labels, ds.labels(), k)?;
    let per_class = (0..k)
        .map(|c| {
            let count: usize = confusion.counts[c].iter().sum();
            ClassRow {
                class: c,
                name: file.class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                count,
                errors: count - confusion.counts[c][c],
            }
        })
        .collect();
    let report = EvalReport {
        model: args.model.display().to_string(),
        model_hash: git_blob_hash(&bytes),
        inputs: loaded.hashes,
        n: ds.n(),
        error,
        per_class,
        confusion: confusion.counts,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::usage(e.to_string()))?;
    emit(&text)?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SpectrumOutput<'a> {
    config: &'a SpectrumArgs,
    inputs: BTreeMap<String, String>,
    feature_meta: String,
    report: lsmc_core::linalg::SpectrumReport,
}

pub fn spectrum(args: &SpectrumArgs) -> CliResult<()> {
    let loaded = source::load(&args.data, args.seed)?;
    let (pipeline, x) = fit_pipeline(loaded.dataset.features(), &args.features, args.seed)?;
    let report = spectrum_of(x.source(), args.r, args.row_cap, args.seed)?;
    let out = SpectrumOutput {
        config: args,
        inputs: loaded.hashes,
        feature_meta: pipeline.describe(loaded.dataset.d()),
        report,
    };
    let text = serde_json::to_string_pretty(&out).map_err(|e| Failure::usage(e.to_string()))?;
    emit(&text)
}
