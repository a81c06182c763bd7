use ndarray::{Array2, ArrayView2};

use super::predict::WeightMatrix;
use super::trace::{Clock, IterRecord, SolverOptions, TrainTrace};
use crate::error::{Error, Result};
use crate::glm::{evaluate, Evaluation, LabeledBatch, LinkSpec};
use crate::linalg::{accumulate_second_moment, largest_eigenvalue, CholeskyFactor};

/// Factored `Σ̂ + λI` for a fixed design.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    factor: CholeskyFactor,
    ridge: f64,
    note: Option<String>,
}

impl Preconditioner {
    pub fn new(x: ArrayView2<'_, f64>, ridge: f64, auto_ridge: bool) -> Result<Self> {
        let moment = accumulate_second_moment(x)?.with_ridge(ridge)?;
        if auto_ridge {
            let (factor, substituted) = moment.factor_with_fallback()?;
            let note = substituted.map(|r| {
                let msg = format!("second moment is singular; factored with ridge {r:e} instead of 0");
                log::warn!("{msg}");
                msg
            });
            Ok(Self {
                factor,
                ridge: substituted.unwrap_or(ridge),
                note,
            })
        } else {
            Ok(Self {
                factor: moment.factor()?,
                ridge,
                note: None,
            })
        }
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Set when the automatic ridge fallback fired.
    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    /// `(Σ̂ + λI)⁻¹ Gᵀ`, transposed back to `k × d`.
    pub fn apply(&self, gradient: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.factor.solve(gradient.t())?.reversed_axes())
    }
}

fn record(t: usize, ev: &Evaluation, clock: &Clock) -> Result<IterRecord> {
    if !ev.loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok(IterRecord {
        t,
        loss: ev.loss,
        mse: ev.mse,
        seconds: clock.seconds(),
    })
}

fn push(trace: &mut TrainTrace, rec: IterRecord) {
    if rec.t == 0 {
        trace.initial = rec;
    } else {
        trace.iterations.push(rec);
    }
}

/// Shared loop of the first-order methods: `W ← W − step(∇ℓ_n(W))`.
pub(crate) fn descend(
    batch: &LabeledBatch<'_>,
    link: &LinkSpec,
    offset: Option<ArrayView2<'_, f64>>,
    mut w: Array2<f64>,
    opts: &SolverOptions,
    trace: &mut TrainTrace,
    mut step: impl FnMut(ArrayView2<'_, f64>) -> Result<Array2<f64>>,
) -> Result<Array2<f64>> {
    let clock = Clock::new(opts.record_time);
    for t in 0..opts.iters {
        let ev = evaluate(link, w.view(), batch, offset, true)?;
        push(trace, record(t, &ev, &clock)?);
        if opts.early_stop && trace.stalled() {
            trace.stopped_early = Some(format!("loss stalled at iteration {t}"));
            return Ok(w);
        }
        w -= &step(ev.gradient.view())?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
    }
    let ev = evaluate(link, w.view(), batch, offset, false)?;
    push(trace, record(opts.iters, &ev, &clock)?);
    Ok(w)
}

fn initial_weights(batch: &LabeledBatch<'_>, w0: Option<ArrayView2<'_, f64>>) -> Result<Array2<f64>> {
    match w0 {
        None => Ok(Array2::zeros((batch.k(), batch.d()))),
        Some(w) if w.dim() == (batch.k(), batch.d()) => Ok(w.to_owned()),
        Some(w) => Err(Error::shape(format!(
            "initial weights are {}×{}, expected {}×{}",
            w.nrows(),
            w.ncols(),
            batch.k(),
            batch.d()
        ))),
    }
}

/// Preconditioned gradient descent with the fixed preconditioner `Σ̂ + λI`:
/// `Wᵀ ← Wᵀ − (1/L)(Σ̂ + λI)⁻¹ (1/n) Σ (g(Wxᵢ) − yᵢ) xᵢᵀ`.
///
/// Starts from `w0` (zero when `None`). The trace holds the loss at the start
/// point and after each of the `opts.iters` updates.
pub fn generalized_least_squares(
    batch: &LabeledBatch<'_>,
    link: &LinkSpec,
    w0: Option<ArrayView2<'_, f64>>,
    opts: &SolverOptions,
) -> Result<(WeightMatrix, TrainTrace)> {
    opts.validate()?;
    let w = initial_weights(batch, w0)?;
    let pre = Preconditioner::new(batch.x(), opts.ridge, opts.auto_ridge)?;
    let (w, trace) = gls_with_preconditioner(batch, link, None, w, opts, &pre)?;
    Ok((WeightMatrix::new(w, link.clone())?, trace))
}

/// [`generalized_least_squares`] with a precomputed preconditioner and an
/// optional score offset (scores are `Wxᵢ + offsetᵢ`).
pub fn gls_with_preconditioner(
    batch: &LabeledBatch<'_>,
    link: &LinkSpec,
    offset: Option<ArrayView2<'_, f64>>,
    w0: Array2<f64>,
    opts: &SolverOptions,
    pre: &Preconditioner,
) -> Result<(Array2<f64>, TrainTrace)> {
    opts.validate()?;
    let mut trace = TrainTrace::new("gls", pre.ridge());
    trace.notes.extend(pre.note.clone());
    let inv_l = 1.0 / link.lipschitz();
    let w = descend(batch, link, offset, w0, opts, &mut trace, |g| {
        let mut s = pre.apply(g)?;
        s *= inv_l;
        Ok(s)
    })?;
    Ok((w, trace))
}

/// Plain gradient descent with step `1/(L · σ_max(Σ̂))`.
pub fn gradient_descent(
    batch: &LabeledBatch<'_>,
    link: &LinkSpec,
    w0: Option<ArrayView2<'_, f64>>,
    opts: &SolverOptions,
) -> Result<(WeightMatrix, TrainTrace)> {
    opts.validate()?;
    let w = initial_weights(batch, w0)?;
    let moment = accumulate_second_moment(batch.x())?;
    let sigma_max = largest_eigenvalue(moment.matrix().view())?;
    if !(sigma_max > 0.0) {
        return Err(Error::invalid("features are identically zero"));
    }
    let step = 1.0 / (link.lipschitz() * sigma_max);
    let mut trace = TrainTrace::new("gd", 0.0);
    trace.notes.push(format!("step size {step:e}"));
    let w = descend(batch, link, None, w, opts, &mut trace, |g| Ok(&g * step))?;
    Ok((WeightMatrix::new(w, link.clone())?, trace))
}
