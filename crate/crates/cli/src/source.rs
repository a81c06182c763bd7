//! Resolves `--data` strings into datasets, with content hashes of the inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lsmc_core::data::{
    encode_dataset, load_idx, parse_libsvm, read_dataset, synthesize, FeatureMatrix, NoiseMode, SyntheticSpec,
    CONTAINER_MAGIC,
};
use lsmc_core::Dataset;
use sha1::{Digest, Sha1};

use crate::config::{DataArgs, DataFormat, IdxSet};
use crate::failure::{io_failure, CliResult, Failure};

pub struct Loaded {
    pub dataset: Dataset,
    /// Input name → git blob hash of its bytes.
    pub hashes: BTreeMap<String, String>,
}

/// Same digest as `git hash-object`.
pub fn git_blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    if !path.exists() {
        return Err(Failure::usage(format!("{}: no such file or directory", path.display())));
    }
    std::fs::read(path).map_err(|e| io_failure(path, e))
}

fn mnist_dir() -> CliResult<PathBuf> {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .ok_or_else(|| Failure::usage("MNIST_DIR is not set; point it at the directory holding the MNIST IDX files"))
}

fn idx_file(dir: &Path, stem: &str) -> CliResult<PathBuf> {
    [stem.to_string(), format!("{stem}.gz")]
        .into_iter()
        .map(|n| dir.join(n))
        .find(|p| p.exists())
        .ok_or_else(|| Failure::usage(format!("{}: no such file or directory", dir.join(stem).display())))
}

pub fn load_idx_dir(dir: &Path, set: IdxSet) -> CliResult<Loaded> {
    if !dir.is_dir() {
        return Err(Failure::usage(format!("{}: not a directory of IDX files", dir.display())));
    }
    let prefix = match set {
        IdxSet::Train => "train",
        IdxSet::T10k => "t10k",
    };
    let images = idx_file(dir, &format!("{prefix}-images-idx3-ubyte"))?;
    let labels = idx_file(dir, &format!("{prefix}-labels-idx1-ubyte"))?;
    let mut hashes = BTreeMap::new();
    for p in [&images, &labels] {
        hashes.insert(p.display().to_string(), git_blob_hash(&read(p)?));
    }
    Ok(Loaded {
        dataset: load_idx(&images, &labels)?,
        hashes,
    })
}

/// `synth:n=500,d=10,k=5,link=softmax,noise=multinomial,spectrum=1e-6:1,w_norm=1,seed=3`.
/// `spectrum=lo:hi` spaces the covariance eigenvalues logarithmically.
/// `skip=m` draws `m + n` rows from the same model and keeps the last `n`,
/// which gives a held-out sample that shares the generating weights.
pub struct SynthRequest {
    pub spec: SyntheticSpec,
    pub seed: u64,
    pub skip: usize,
}

pub fn parse_synth(spec: &str, default_seed: u64) -> CliResult<SynthRequest> {
    let mut n = 500;
    let mut d = 10;
    let mut k = 3;
    let mut link = "softmax".to_string();
    let mut noise = NoiseMode::MultinomialSample;
    let mut spectrum = None;
    let mut w_norm = None;
    let mut seed = default_seed;
    let mut skip = 0;
    let bad = |m: String| Failure::usage(format!("synthetic data spec '{spec}': {m}"));
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got '{part}'")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("'{key}' needs a number, got '{v}'")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("'{key}' needs an integer, got '{v}'")));
        match key {
            "n" => n = int(value)?,
            "d" => d = int(value)?,
            "k" => k = int(value)?,
            "link" => link = value.to_string(),
            "noise" => noise = value.parse().map_err(|e: lsmc_core::Error| bad(e.to_string()))?,
            "spectrum" => {
                let (lo, hi) = value.split_once(':').ok_or_else(|| bad("spectrum needs lo:hi".into()))?;
                spectrum = Some((num(lo)?, num(hi)?));
            }
            "w_norm" => w_norm = Some(num(value)?),
            "skip" => skip = int(value)?,
            "seed" => seed = value.parse().map_err(|_| bad(format!("bad seed '{value}'")))?,
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }
    let mut s = SyntheticSpec::new(n + skip, d, k, &link).with_noise(noise);
    if let Some((lo, hi)) = spectrum {
        s = s.with_log_spectrum(lo, hi);
    }
    if let Some(w) = w_norm {
        s = s.with_w_norm(w);
    }
    Ok(SynthRequest { spec: s, seed, skip })
}

pub fn load(args: &DataArgs, seed: u64) -> CliResult<Loaded> {
    let src = args.data.as_str();
    let mut loaded = if let Some(spec) = src.strip_prefix("synth:") {
        let req = parse_synth(spec, seed)?;
        let mut dataset = synthesize(&req.spec, req.seed)?.dataset()?;
        if req.skip > 0 {
            let keep: Vec<usize> = (req.skip..dataset.n()).collect();
            dataset = dataset.select_rows(&keep);
        }
        let dataset = dataset.with_source(src);
        let hash = git_blob_hash(&encode_dataset(&dataset)?);
        Loaded {
            dataset,
            hashes: BTreeMap::from([(src.to_string(), hash)]),
        }
    } else if src == "mnist" || src == "mnist-test" {
        let set = if src == "mnist-test" { IdxSet::T10k } else { args.idx_set };
        load_idx_dir(&mnist_dir()?, set)?
    } else {
        let path = Path::new(src);
        let format = match args.format {
            DataFormat::Auto if path.is_dir() => DataFormat::Idx,
            DataFormat::Auto => {
                let bytes = read(path)?;
                if bytes.starts_with(CONTAINER_MAGIC) {
                    DataFormat::Glmd
                } else {
                    DataFormat::Libsvm
                }
            }
            f => f,
        };
        match format {
            DataFormat::Idx => load_idx_dir(path, args.idx_set)?,
            DataFormat::Glmd => {
                let hash = git_blob_hash(&read(path)?);
                Loaded {
                    dataset: read_dataset(path)?,
                    hashes: BTreeMap::from([(src.to_string(), hash)]),
                }
            }
            DataFormat::Libsvm => {
                let bytes = read(path)?;
                let dataset = parse_libsvm(bytes.as_slice(), src, args.n_features)?;
                Loaded {
                    dataset,
                    hashes: BTreeMap::from([(src.to_string(), git_blob_hash(&bytes))]),
                }
            }
            DataFormat::Auto => unreachable!("resolved above"),
        }
    };
    if args.log_tf {
        if !matches!(loaded.dataset.features(), FeatureMatrix::Sparse(_)) {
            return Err(Failure::usage("--log-tf needs sparse term counts (libsvm input)"));
        }
        loaded.dataset = loaded.dataset.map_features("log-tf", |f| match f {
            FeatureMatrix::Sparse(c) => lsmc_core::data::log_tf(&c).map(FeatureMatrix::Sparse),
            dense => Ok(dense),
        })?;
    }
    log::info!(
        "loaded {}: n = {}, d = {}, k = {}",
        args.data,
        loaded.dataset.n(),
        loaded.dataset.d(),
        loaded.dataset.k()
    );
    Ok(loaded)
}
