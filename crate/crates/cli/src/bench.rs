//! Self-checking benchmark suites: each runs a fixed experiment, prints a
//! PASS/FAIL table with timings and optionally writes the same as JSON.

use std::path::PathBuf;
use std::time::Instant;

use lsmc_core::data::{synthesize, NoiseMode, SyntheticSpec};
use lsmc_core::diagnostics::{
    check_majorization, classification_error, estimate_link_constants, theorem1_monitor, theorem2_monitor,
};
use lsmc_core::features::{
    median_bandwidth, pca_fit_project, rff_block, BandwidthMode, CalibrationBasis, FeatureGenerator, GeneratorKind,
    RerankPolicy, RffMap,
};
use lsmc_core::glm::{loss, LabeledBatch, LinkSpec};
use lsmc_core::linalg::least_squares;
use lsmc_core::rng::{derive_seed, gaussian_matrix, stream};
use lsmc_core::simplex::project_simplex;
use lsmc_core::solvers::{
    calibrated_least_squares, generalized_least_squares, gradient_descent, stagewise, CalibratedOptions,
    InnerSolver, SolverOptions, StagewiseOptions,
};
use lsmc_core::FeatureSource;
use ndarray::{concatenate, s, Array2, Axis};
use serde::Serialize;

use crate::commands::emit;
use crate::config::{BenchArgs, IdxSet, Suite};
use crate::failure::{io_failure, CliResult, Failure};
use crate::source::load_idx_dir;

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    pass: bool,
    /// Reported but not counted towards the suite verdict.
    advisory: bool,
    seconds: f64,
    detail: String,
}

#[derive(Debug, Serialize)]
struct SuiteReport {
    suite: Suite,
    seed: u64,
    pass: bool,
    seconds: f64,
    checks: Vec<Check>,
}

/// Collects checks, timing each from the end of the previous one.
struct Recorder {
    checks: Vec<Check>,
    mark: Instant,
}

impl Recorder {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            mark: Instant::now(),
        }
    }

    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.record(name, pass, false, detail);
    }

    fn advisory(&mut self, name: &str, pass: bool, detail: String) {
        self.record(name, pass, true, detail);
    }

    fn record(&mut self, name: &str, pass: bool, advisory: bool, detail: String) {
        let now = Instant::now();
        self.checks.push(Check {
            name: name.into(),
            pass,
            advisory,
            seconds: (now - self.mark).as_secs_f64(),
            detail,
        });
        self.mark = now;
    }
}

type Outcome = CliResult<()>;

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let seed = args.seed;
    match args.suite {
        Suite::Theorem1Synthetic => theorem1(&mut rec, seed)?,
        Suite::Conditioning => conditioning(&mut rec, seed)?,
        Suite::Theorem2 => theorem2(&mut rec, seed)?,
        Suite::Majorization => majorization(&mut rec, seed)?,
        Suite::Simplex => simplex(&mut rec, seed)?,
        Suite::Stagewise => stagewise_suite(&mut rec, seed)?,
        Suite::Rff => rff(&mut rec, seed)?,
        Suite::MnistRaw => mnist(&mut rec, args, false)?,
        Suite::MnistRff => mnist(&mut rec, args, true)?,
    }
    let pass = rec.checks.iter().all(|c| c.pass || c.advisory);
    let report = SuiteReport {
        suite: args.suite,
        seed,
        pass,
        seconds: start.elapsed().as_secs_f64(),
        checks: rec.checks,
    };
    print_table(&report)?;
    if let Some(out) = &args.out {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::usage(e.to_string()))? + "\n";
        std::fs::write(out, text).map_err(|e| io_failure(out, e))?;
    }
    if pass {
        Ok(())
    } else {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass && !c.advisory).map(|c| c.name.as_str()).collect();
        Err(Failure::checks(format!("failed checks: {}", failed.join(", "))))
    }
}

fn print_table(report: &SuiteReport) -> CliResult<()> {
    let name = serde_json::to_value(report.suite).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut lines = vec![format!("suite {name} (seed {})", report.seed)];
    for c in &report.checks {
        let tag = match (c.pass, c.advisory) {
            (true, _) => "PASS",
            (false, true) => "WARN",
            (false, false) => "FAIL",
        };
        lines.push(format!("  {tag}  {:<width$}  {:>8.3} s  {}", c.name, c.seconds, c.detail));
    }
    lines.push(format!(
        "{} in {:.2} s",
        if report.pass { "PASS" } else { "FAIL" },
        report.seconds
    ));
    emit(&lines.join("\n"))
}

fn theorem1(rec: &mut Recorder, seed: u64) -> Outcome {
    let spec = SyntheticSpec::new(500, 10, 5, "softmax").with_noise(NoiseMode::MultinomialSample);
    let data = synthesize(&spec, seed)?;
    let batch = LabeledBatch::new(data.x.view(), data.y.view())?;
    let link = LinkSpec::softmax();
    let (w_hat, long) = generalized_least_squares(&batch, &link, None, &SolverOptions::new(50_000))?;
    let loss_hat = long.last().loss;
    rec.push("reference-fit", loss_hat.is_finite(), format!("50000 iterations, loss {loss_hat:.12}"));

    let (_, trace) = generalized_least_squares(&batch, &link, None, &SolverOptions::new(200))?;
    let zero = Array2::zeros(w_hat.w.dim());
    let report = theorem1_monitor(&trace, zero.view(), w_hat.w.view(), loss_hat, &link)?;
    let tightest = report.rows.iter().map(|r| r.value / r.bound).fold(f64::NEG_INFINITY, f64::max);
    rec.push(
        "sublinear-bound",
        report.violations().is_empty(),
        format!(
            "{} of {} iterates above 2L‖Ŵ*‖²/(t+4); max gap/bound {tightest:.3}",
            report.violations().len(),
            report.rows.len()
        ),
    );
    let below = trace.losses().iter().filter(|&&l| l < loss_hat - 1e-12).count();
    rec.push("reference-is-minimal", below == 0, format!("{below} iterates below the reference loss"));
    Ok(())
}

fn hitting_time(losses: &[f64], best: f64, tol: f64) -> Option<usize> {
    losses.iter().position(|&l| l - best <= tol)
}

fn conditioning(rec: &mut Recorder, seed: u64) -> Outcome {
    const GAP: f64 = 1e-6;
    const GD_CAP: usize = 200_000;
    let link = LinkSpec::identity();
    let mut times = Vec::new();
    for (name, spec) in [
        ("well", SyntheticSpec::new(1000, 10, 3, "identity")),
        ("ill", SyntheticSpec::new(1000, 10, 3, "identity").with_log_spectrum(1e-6, 1.0)),
    ] {
        let data = synthesize(&spec, seed)?;
        let batch = LabeledBatch::new(data.x.view(), data.y.view())?;
        let best = loss(&link, least_squares(data.x.view(), data.y.view(), 0.0)?.weights.view(), &batch)?;
        let (_, gls) = generalized_least_squares(&batch, &link, None, &SolverOptions::new(5))?;
        let gls_t = hitting_time(&gls.losses(), best, GAP);
        rec.push(
            &format!("gls-{name}"),
            gls_t == Some(1),
            format!("iterations to gap {GAP:e}: {}", gls_t.map_or("never".into(), |t| t.to_string())),
        );
        let (mut w, mut done, mut gd_t) = (None::<Array2<f64>>, 0, None);
        while done < GD_CAP && gd_t.is_none() {
            let opts = SolverOptions::new(GD_CAP.min(done + 1000) - done);
            let (fit, trace) = gradient_descent(&batch, &link, w.as_ref().map(|w| w.view()), &opts)?;
            gd_t = hitting_time(&trace.losses(), best, GAP).map(|t| t + done);
            done += opts.iters;
            w = Some(fit.w);
        }
        rec.push(
            &format!("gd-{name}"),
            true,
            format!("iterations to gap {GAP:e}: {}", gd_t.map_or(format!(">{GD_CAP}"), |t| t.to_string())),
        );
        times.push((gls_t, gd_t));
    }
    let (gls_ill, gd_ill) = times[1];
    let ratio = match (gls_ill, gd_ill) {
        (Some(g), Some(d)) => d as f64 / g as f64,
        (Some(g), None) => GD_CAP as f64 / g as f64,
        _ => 0.0,
    };
    let gd_growth = match (times[0].1, gd_ill) {
        (Some(a), Some(b)) => format!("{:.0}×", b as f64 / a as f64),
        _ => "n/a".into(),
    };
    rec.push(
        "gd-vs-gls-ill",
        ratio >= 100.0,
        format!("ratio {ratio:.0} (needs ≥ 100); gd ill/well {gd_growth}"),
    );
    Ok(())
}

fn theorem2(rec: &mut Recorder, seed: u64) -> Outcome {
    let data = synthesize(&SyntheticSpec::new(400, 8, 3, "softmax"), seed)?;
    let batch = LabeledBatch::new(data.x.view(), data.y.view())?;
    let opts = CalibratedOptions::new(100, CalibrationBasis::polynomial(3));
    let (_, _, trace) = calibrated_least_squares(&batch, &opts)?;
    let scores = data.x.dot(&data.w_star.t());
    let c = estimate_link_constants(&data.link, scores.view(), 5000, derive_seed(seed, 1))?;
    let report = theorem2_monitor(&trace, c.lipschitz, c.strong_mono);
    rec.push(
        "residual-monotone",
        report.monotone_violations.is_empty(),
        format!(
            "{} increases over {} iterations; final mse {:.3e}",
            report.monotone_violations.len(),
            trace.iterations.len(),
            trace.last().mse
        ),
    );
    rec.advisory(
        "envelope",
        report.violations().is_empty(),
        format!("22κ̂²/t with κ̂ = {:.3e}: {} violations", c.kappa, report.violations().len()),
    );
    Ok(())
}

fn majorization(rec: &mut Recorder, seed: u64) -> Outcome {
    let data = synthesize(&SyntheticSpec::new(300, 6, 4, "softmax"), seed)?;
    let batch = LabeledBatch::new(data.x.view(), data.y.view())?;
    let link = LinkSpec::softmax();
    let mut r = stream(derive_seed(seed, 1));
    let (mut fails, mut min_slack) = (0, f64::INFINITY);
    for i in 0..1000 {
        let scale = [0.1, 1.0, 5.0][i % 3];
        let w1 = gaussian_matrix(4, 6, &mut r) * scale;
        let w2 = gaussian_matrix(4, 6, &mut r) * scale;
        let c = check_majorization(&link, &batch, w1.view(), w2.view())?;
        fails += usize::from(!c.pass);
        min_slack = min_slack.min(c.slack);
    }
    rec.push("random-pairs-L1", fails == 0, format!("{fails}/1000 fail, min slack {min_slack:.2e}"));

    // two classes share the mass, the others are ~0
    let n = 300;
    let mut r = stream(derive_seed(seed, 2));
    let x = concatenate![Axis(1), gaussian_matrix(n, 5, &mut r) * 0.01, Array2::ones((n, 1))];
    let mut y = Array2::zeros((n, 4));
    for i in 0..n {
        y[[i, i % 4]] = 1.0;
    }
    let tight_batch = LabeledBatch::new(x.view(), y.view())?;
    let tight = LinkSpec::softmax_tight();
    let mut w2 = Array2::zeros((4, 6));
    w2.slice_mut(s![2.., 5]).fill(-30.0);
    let (mut fails, mut min_slack) = (0, f64::INFINITY);
    for i in 0..1000 {
        let eps = [1e-3, 1e-2, 0.1, 1.0][i % 4];
        let w1 = &w2 + &(gaussian_matrix(4, 6, &mut r) * eps);
        let c = check_majorization(&tight, &tight_batch, w1.view(), w2.view())?;
        fails += usize::from(!c.pass);
        min_slack = min_slack.min(c.slack);
    }
    rec.push(
        "near-worst-case-L1/2",
        fails == 0,
        format!("probabilities ≈ (½,½,0,0): {fails}/1000 fail, min slack {min_slack:.2e}"),
    );
    Ok(())
}

/// Largest violation of the projection's optimality conditions: a common
/// shift τ with `v − p = τ` on the support and `v ≤ τ` off it.
fn kkt_residual(v: &[f64], p: &[f64]) -> f64 {
    let support: Vec<usize> = (0..v.len()).filter(|&i| p[i] > 0.0).collect();
    let tau = support.iter().map(|&i| v[i] - p[i]).sum::<f64>() / support.len().max(1) as f64;
    let mut worst = (p.iter().sum::<f64>() - 1.0).abs();
    for i in 0..v.len() {
        worst = worst.max((-p[i]).max(0.0));
        worst = worst.max(if p[i] > 0.0 { (v[i] - p[i] - tau).abs() } else { (v[i] - tau).max(0.0) });
    }
    worst
}

fn simplex(rec: &mut Recorder, seed: u64) -> Outcome {
    for k in [2usize, 3, 5, 10] {
        let raw = gaussian_matrix(1000, k, &mut stream(derive_seed(seed, k as u64)));
        let (mut kkt, mut idem, mut expand) = (0.0_f64, 0.0_f64, f64::NEG_INFINITY);
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for (i, row) in raw.rows().into_iter().enumerate() {
            let scale = [0.1, 1.0, 10.0][i % 3];
            let v: Vec<f64> = row.iter().map(|x| x * scale).collect();
            let p = project_simplex(&v)?.into_inner();
            kkt = kkt.max(kkt_residual(&v, &p));
            let pp = project_simplex(&p)?.into_inner();
            idem = idem.max(p.iter().zip(&pp).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
            if let Some((pv, pprev)) = &prev {
                let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                expand = expand.max(dist(&p, pprev) - dist(&v, pv));
            }
            prev = Some((v, p));
        }
        rec.push(
            &format!("k={k}"),
            kkt <= 1e-8 && idem <= 1e-12 && expand <= 1e-12,
            format!("1000 vectors: KKT {kkt:.1e}, idempotence {idem:.1e}, ‖Pa−Pb‖−‖a−b‖ ≤ {expand:.1e}"),
        );
    }
    Ok(())
}

fn stagewise_suite(rec: &mut Recorder, seed: u64) -> Outcome {
    let spec = SyntheticSpec::new(300, 24, 4, "softmax").with_noise(NoiseMode::MultinomialSample);
    let data = synthesize(&spec, seed)?;
    let x = FeatureSource::Dense(data.x.view());

    let mut gen = FeatureGenerator::new(GeneratorKind::Identity, seed)?;
    let fit = stagewise(x, data.y.view(), &mut gen, &StagewiseOptions::new(24, 1, InnerSolver::Linear))?;
    let full = least_squares(data.x.view(), data.y.view(), 0.0)?.weights;
    let diff = (&fit.model.stages[0].weights - &full).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    rec.push("single-block", diff <= 1e-10, format!("max |W − W_ls| = {diff:.1e}"));

    let bw = median_bandwidth(data.x.view(), 300, seed, BandwidthMode::Squared)?;
    let kinds = [
        ("identity", GeneratorKind::Identity, 24),
        ("sequential", GeneratorKind::Sequential, 6),
        ("random", GeneratorKind::SubsetRandom, 6),
        ("gradient-per-pass", GeneratorKind::SubsetGradient { rerank: RerankPolicy::PerPass }, 6),
        ("gradient-per-block", GeneratorKind::SubsetGradient { rerank: RerankPolicy::PerBlock }, 6),
        ("rff", GeneratorKind::Rff { bandwidth: bw }, 32),
    ];
    for (label, kind, p) in kinds {
        for inner in [InnerSolver::Linear, InnerSolver::CalibratedLinear] {
            let mut gen = FeatureGenerator::new(kind.clone(), derive_seed(seed, 1))?.with_passes(2);
            let fit = stagewise(x, data.y.view(), &mut gen, &StagewiseOptions::new(p, 8, inner))?;
            let m = fit.trace.mses();
            let ups = m.windows(2).filter(|w| w[1] > w[0] + 1e-12).count();
            rec.push(
                &format!("{label}/{}", inner.name()),
                ups == 0,
                format!("mse {:.4} → {:.4} over {} stages, {ups} increases", m[0], m[m.len() - 1], m.len() - 1),
            );
        }
    }
    Ok(())
}

fn rff(rec: &mut Recorder, seed: u64) -> Outcome {
    let x = gaussian_matrix(200, 5, &mut stream(seed));
    let s = median_bandwidth(x.view(), 200, seed, BandwidthMode::Squared)?;
    let z = rff_block(x.view(), 4096, s, derive_seed(seed, 1))?;
    let approx = z.dot(&z.t());
    let mut total = 0.0;
    for i in 0..200 {
        for j in 0..200 {
            let d2: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
            total += (approx[[i, j]] - (-d2 / s).exp()).abs();
        }
    }
    let mae = total / 40_000.0;
    rec.push("kernel-mae", mae <= 0.05, format!("m = 4096, s = {s:.3}, mean |K̂ − K| = {mae:.4}"));
    Ok(())
}

fn mnist_dir(args: &BenchArgs) -> CliResult<PathBuf> {
    args.mnist_dir
        .clone()
        .or_else(|| std::env::var_os("MNIST_DIR").map(PathBuf::from))
        .ok_or_else(|| Failure::usage("MNIST suites need --mnist-dir or MNIST_DIR"))
}

fn with_intercept(x: &Array2<f64>) -> Array2<f64> {
    concatenate![Axis(1), *x, Array2::ones((x.nrows(), 1))]
}

fn mnist(rec: &mut Recorder, args: &BenchArgs, random_features: bool) -> Outcome {
    let dir = mnist_dir(args)?;
    let train = load_idx_dir(&dir, IdxSet::Train)?.dataset;
    let test = load_idx_dir(&dir, IdxSet::T10k)?.dataset;
    let (mut xtr, mut xte) = (train.features().to_dense(), test.features().to_dense());
    if random_features {
        let (pca, p_train) = pca_fit_project(xtr.view(), 50)?;
        let p_test = pca.project(xte.view())?;
        let bw = median_bandwidth(p_train.view(), 1000, args.seed, BandwidthMode::Squared)?;
        let map = RffMap::new(50, 4000, bw, derive_seed(args.seed, 102))?;
        xtr = map.transform(p_train.view())?;
        xte = map.transform(p_test.view())?;
        rec.push("features", true, format!("PCA 50 → 4000 random features, bandwidth {bw:.3}"));
    } else {
        rec.push("features", true, "raw pixels".into());
    }
    let (xtr, xte) = (with_intercept(&xtr), with_intercept(&xte));
    let (want, tol) = if random_features {
        ([0.0183, 0.0148, 0.0154], 0.004)
    } else {
        ([0.141, 0.078, 0.081], 0.01)
    };
    let batch = LabeledBatch::new(xtr.view(), train.targets().view())?;
    let src = FeatureSource::Dense(xte.view());
    let opts = |t| SolverOptions::new(t).with_ridge(1e-6).with_auto_ridge(true);
    let mut check = |name: &str, scores: Array2<f64>, want: f64| -> Outcome {
        let err = classification_error(scores.view(), test.labels())?;
        rec.push(
            name,
            (err - want).abs() <= tol,
            format!("test error {:.2}% vs {:.2}% ± {:.1}", 100.0 * err, 100.0 * want, 100.0 * tol),
        );
        Ok(())
    };
    let (lin, _) = generalized_least_squares(&batch, &LinkSpec::identity(), None, &opts(1))?;
    check("linear", lin.predict(src)?.scores, want[0])?;
    let (log, _) = generalized_least_squares(&batch, &LinkSpec::softmax(), None, &opts(200))?;
    check("logistic", log.predict(src)?.scores, want[1])?;
    let cal_opts = CalibratedOptions::new(50, CalibrationBasis::polynomial(3)).with_ridge(1e-6).with_auto_ridge(true);
    let (_, cal, _) = calibrated_least_squares(&batch, &cal_opts)?;
    check("calibrated", cal.predict(src)?.scores, want[2])?;
    Ok(())
}
