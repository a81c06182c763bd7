//! Compare recorded traces with the convergence bounds.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::LinkSpec;
use crate::solvers::TrainTrace;

/// Absolute slack on every bound comparison (covers rounding in the gap).
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub t: usize,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub lipschitz: f64,
    pub strong_mono: f64,
    pub kappa: f64,
    /// `‖W*‖_F` (first theorem only).
    pub w_star_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: String,
    pub constants: BoundConstants,
    pub rows: Vec<BoundRow>,
    /// Geometric-rate form, emitted only for strongly monotone links.
    pub linear_rate: Option<Vec<BoundRow>>,
    /// Iterations whose value increased over the previous one (second
    /// theorem only).
    pub monotone_violations: Vec<usize>,
}

impl BoundReport {
    pub fn violations(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().filter(|r| !r.pass).map(|r| r.t).collect();
        if let Some(lin) = &self.linear_rate {
            v.extend(lin.iter().filter(|r| !r.pass).map(|r| r.t));
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn pass(&self) -> bool {
        self.violations().is_empty() && self.monotone_violations.is_empty()
    }
}

fn row(t: usize, value: f64, bound: f64) -> BoundRow {
    BoundRow {
        t,
        value,
        bound,
        pass: value <= bound + BOUND_TOL,
    }
}

/// Checks `ℓ_n(W_t) − ℓ_n(W*) ≤ 2L‖W*‖²_F/(t+4)` for `t ≥ 1`, and for links
/// with `μ > 0` also `≤ (L/2)((κ−1)/(κ+1))ᵗ ‖W*‖²_F`.
///
/// `w0` is the starting point of the run; the bound assumes `W₀ = 0` and the
/// monitor refuses anything else.
pub fn theorem1_monitor(
    trace: &TrainTrace,
    w0: ArrayView2<'_, f64>,
    w_star: ArrayView2<'_, f64>,
    loss_star: f64,
    link: &LinkSpec,
) -> Result<BoundReport> {
    if w0.iter().any(|&v| v != 0.0) {
        return Err(Error::Hypothesis("the sublinear bound requires the run to start at W₀ = 0".into()));
    }
    if trace.algorithm != "gls" {
        return Err(Error::Hypothesis(format!(
            "expected a generalized least squares trace, got '{}'",
            trace.algorithm
        )));
    }
    let l = link.lipschitz();
    let norm_sq: f64 = w_star.iter().map(|v| v * v).sum();
    let rows = trace
        .iterations
        .iter()
        .map(|r| row(r.t, r.loss - loss_star, 2.0 * l * norm_sq / (r.t as f64 + 4.0)))
        .collect();
    let linear_rate = link.kappa().map(|kappa| {
        let q = (kappa - 1.0) / (kappa + 1.0);
        trace
            .iterations
            .iter()
            .map(|r| row(r.t, r.loss - loss_star, 0.5 * l * q.powi(r.t as i32) * norm_sq))
            .collect()
    });
    Ok(BoundReport {
        theorem: "sublinear".into(),
        constants: BoundConstants {
            lipschitz: l,
            strong_mono: link.strong_mono(),
            kappa: link.kappa().unwrap_or(f64::INFINITY),
            w_star_norm: Some(norm_sq.sqrt()),
        },
        rows,
        linear_rate,
        monotone_violations: Vec::new(),
    })
}

/// Checks `(1/n) Σ ‖ŷ⁽ᵗ⁾ − yᵢ‖² ≤ 22κ²/t` and that the residual never
/// increases. `kappa` is usually estimated with
/// [`estimate_link_constants`](super::estimate_link_constants).
pub fn theorem2_monitor(trace: &TrainTrace, lipschitz: f64, strong_mono: f64) -> BoundReport {
    let kappa = if strong_mono > 0.0 { lipschitz / strong_mono } else { f64::INFINITY };
    let rows = trace
        .iterations
        .iter()
        .map(|r| row(r.t, r.mse, 22.0 * kappa * kappa / r.t as f64))
        .collect();
    let mses = trace.mses();
    let monotone_violations = mses
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + BOUND_TOL)
        .map(|(i, _)| i + 1)
        .collect();
    BoundReport {
        theorem: "calibrated".into(),
        constants: BoundConstants {
            lipschitz,
            strong_mono,
            kappa,
            w_star_norm: None,
        },
        rows,
        linear_rate: None,
        monotone_violations,
    }
}
