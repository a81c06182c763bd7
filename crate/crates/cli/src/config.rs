//! Command-line definitions and the `key=value` config-file layer.
//!
//! A config file holds one `key = value` per line, where keys are long flag
//! names (`iters`, `ridge`, `gen`, ...); `#` starts a comment. Entries are
//! spliced in right after the subcommand, before the real flags, and clap's
//! override-self behavior lets anything given on the command line win.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::failure::{io_failure, CliResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "lsmc", version, about = "Least-squares solvers for multiclass GLMs", args_override_self = true)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// key=value file with defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model; writes model.lsmc and trace.json into --out.
    Train(TrainArgs),
    /// Classification error and confusion counts of a saved model.
    Eval(EvalArgs),
    /// Top singular values and the σ₂/σ_r condition proxy.
    Spectrum(SpectrumArgs),
    /// Run a named benchmark suite.
    Bench(BenchArgs),
}

pub const SUBCOMMANDS: [&str; 4] = ["train", "eval", "spectrum", "bench"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    Auto,
    Glmd,
    Libsvm,
    Idx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdxSet {
    Train,
    T10k,
}

/// Where the data comes from. See `source::load` for the accepted forms.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Path (GLMD container, libsvm file, or directory of IDX files),
    /// `mnist`/`mnist-test` (uses $MNIST_DIR) or `synth:key=value,...`.
    #[arg(long)]
    pub data: String,
    #[arg(long, value_enum, default_value_t = DataFormat::Auto)]
    pub format: DataFormat,
    /// Which IDX pair to read from a directory.
    #[arg(long, value_enum, default_value_t = IdxSet::Train)]
    pub idx_set: IdxSet,
    /// Feature count for libsvm files (default: largest index seen).
    #[arg(long)]
    pub n_features: Option<usize>,
    /// Apply log(1 + count) to sparse term counts.
    #[arg(long)]
    pub log_tf: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthArg {
    Squared,
    Unsquared,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeatureArgs {
    /// Project onto the top principal components first.
    #[arg(long)]
    pub pca: Option<usize>,
    /// Map through this many random Fourier features.
    #[arg(long)]
    pub rff: Option<usize>,
    /// Kernel bandwidth s in exp(−‖x−x′‖²/s); default: median heuristic.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = BandwidthArg::Squared)]
    pub bandwidth_mode: BandwidthArg,
    /// Rows sampled for the median heuristic.
    #[arg(long, default_value_t = 1000)]
    pub bandwidth_sample: usize,
    /// Append a constant feature.
    #[arg(long)]
    pub intercept: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// Preconditioned GLM fitting.
    Gls,
    /// Plain gradient descent baseline.
    Gd,
    /// Calibrated least squares.
    Calibrated,
    /// Stagewise fitting over feature blocks.
    Stagewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenArg {
    Identity,
    Sequential,
    Random,
    Gradient,
    Rff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RerankArg {
    PerPass,
    PerBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerArg {
    Linear,
    Logistic,
    Calibrated,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Algo::Gls)]
    pub algo: Algo,
    /// `logistic` (softmax) or `identity`.
    #[arg(long, default_value = "logistic")]
    pub link: String,
    /// Override the link's Lipschitz constant (e.g. 0.5 for softmax).
    #[arg(long)]
    pub lipschitz: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    /// Retry a singular factorization with a small ridge instead of failing.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub auto_ridge: bool,
    /// Stop once the loss stalls for ten iterations.
    #[arg(long)]
    pub early_stop: bool,
    /// Calibration functions, e.g. `y,y2,y3`.
    #[arg(long, default_value = "y,y2,y3")]
    pub basis: String,
    #[arg(long, value_enum, default_value_t = GenArg::Sequential)]
    pub gen: GenArg,
    #[arg(long, value_enum, default_value_t = RerankArg::PerPass)]
    pub rerank: RerankArg,
    /// Features per stagewise block.
    #[arg(long, default_value_t = 256)]
    pub block: usize,
    #[arg(long, default_value_t = 10)]
    pub stages: usize,
    /// Passes over the columns for subset generators.
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    #[arg(long, value_enum, default_value_t = InnerArg::Linear)]
    pub inner: InnerArg,
    /// Iterations of the logistic inner solver.
    #[arg(long, default_value_t = 50)]
    pub inner_iters: usize,
}

/// Everything that determines a training run. Embedded verbatim in the trace
/// and the model file.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Held-out data evaluated after training (same forms as --data).
    #[arg(long)]
    pub test_data: Option<String>,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record wall-clock seconds per iteration (makes traces non-reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value = "lsmc-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Also write the metrics JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Number of singular values.
    #[arg(short, long, default_value_t = 10)]
    pub r: usize,
    /// Larger inputs are estimated on a seeded row subsample of this size.
    #[arg(long, default_value_t = lsmc_core::linalg::SPECTRUM_ROW_CAP)]
    pub row_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Theorem1Synthetic,
    Conditioning,
    Theorem2,
    Majorization,
    Simplex,
    Stagewise,
    Rff,
    MnistRaw,
    MnistRff,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory with the MNIST IDX files (default: $MNIST_DIR).
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    /// Write the report JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `key = value` lines to `--key=value` tokens (`true` → bare flag,
/// `false` → omitted for switches).
pub fn config_tokens(text: &str, origin: &str) -> CliResult<Vec<OsString>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::usage(format!("{origin}:{}: expected key=value, got '{line}'", i + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(Failure::usage(format!("{origin}:{}: invalid key '{key}'", i + 1)));
        }
        match (SWITCHES.contains(&key.as_str()), value) {
            (true, "true") => out.push(format!("--{key}").into()),
            (true, "false") => {}
            (true, other) => {
                return Err(Failure::usage(format!(
                    "{origin}:{}: '{key}' takes true or false, got '{other}'",
                    i + 1
                )))
            }
            (false, _) => out.push(format!("--{key}={value}").into()),
        }
    }
    Ok(out)
}

/// Boolean flags that take no value on the command line.
const SWITCHES: [&str; 4] = ["intercept", "early-stop", "timing", "log-tf"];

/// Splices the config file named by `--config` into the argument list.
pub fn expand_args(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path = None;
    let mut iter = args.iter().enumerate();
    while let Some((_, a)) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = iter.next().map(|(_, p)| PathBuf::from(p));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| io_failure(&path, e))?;
    let tokens = config_tokens(&text, &path.display().to_string())?;
    let Some(at) = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    let mut out = args[..=at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}
