//! Executable forms of the inequalities behind the convergence proofs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{evaluate, LabeledBatch, LinkSpec};
use crate::linalg::{accumulate_second_moment, pseudo_inverse_solve, symmetric_eigen, SecondMoment};
use crate::rng;

/// Slack allowed by the pass/fail checks in this module.
pub const CHECK_TOL: f64 = 1e-10;

/// `‖W‖²_M = Σᵢ W⁽ⁱ⁾ᵀ M W⁽ⁱ⁾` over the rows `W⁽ⁱ⁾` of `W` (k × d).
pub fn mahalanobis_norm(w: ArrayView2<'_, f64>, m: ArrayView2<'_, f64>) -> Result<f64> {
    let d = m.nrows();
    if !m.is_square() || w.ncols() != d {
        return Err(Error::shape(format!("weights are {}×{}, metric is {}×{}", w.nrows(), w.ncols(), d, m.ncols())));
    }
    let scale = m.diag().iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..d {
        for j in 0..i {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 * scale {
                return Err(Error::invalid("metric matrix is not symmetric"));
            }
        }
    }
    let (values, _) = symmetric_eigen(m)?;
    let smallest = values.last().copied().unwrap_or(0.0);
    if smallest < -1e-10 * scale {
        return Err(Error::NotPsd(smallest));
    }
    Ok(quadratic_form(w, m))
}

fn quadratic_form(w: ArrayView2<'_, f64>, m: ArrayView2<'_, f64>) -> f64 {
    (&w.dot(&m) * &w).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorizationCheck {
    /// `ℓ_n(W₁)`.
    pub lhs: f64,
    /// `ℓ_n(W₂) + ⟨∇ℓ_n(W₂), W₁ − W₂⟩ + (L/2)‖W₁ − W₂‖²_Σ̂`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub pass: bool,
}

/// Quadratic upper bound of the loss in the metric of the second moment.
pub fn check_majorization(
    link: &LinkSpec,
    batch: &LabeledBatch<'_>,
    w1: ArrayView2<'_, f64>,
    w2: ArrayView2<'_, f64>,
) -> Result<MajorizationCheck> {
    let moment = accumulate_second_moment(batch.x())?;
    check_majorization_with(link, batch, &moment, w1, w2)
}

/// [`check_majorization`] with a precomputed second moment.
pub fn check_majorization_with(
    link: &LinkSpec,
    batch: &LabeledBatch<'_>,
    moment: &SecondMoment,
    w1: ArrayView2<'_, f64>,
    w2: ArrayView2<'_, f64>,
) -> Result<MajorizationCheck> {
    if w1.dim() != w2.dim() {
        return Err(Error::shape("weight matrices differ in shape"));
    }
    let lhs = evaluate(link, w1, batch, None, false)?.loss;
    let at2 = evaluate(link, w2, batch, None, true)?;
    let delta = &w1 - &w2;
    let rhs = at2.loss
        + (&at2.gradient * &delta).sum()
        + 0.5 * link.lipschitz() * quadratic_form(delta.view(), moment.matrix().view());
    let slack = rhs - lhs;
    Ok(MajorizationCheck {
        lhs,
        rhs,
        slack,
        pass: lhs <= rhs + CHECK_TOL,
    })
}

/// Solves `g(z) = u` by damped Newton on `Φ(z) − uᵀz`, with a
/// finite-difference Hessian and a minimum-norm step. For links that are
/// invariant to shifts along `1` (softmax) the returned point has mean zero.
pub fn invert_link(link: &LinkSpec, u: &[f64], tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let k = u.len();
    let objective = |z: &[f64]| link.phi(z) - z.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
    let residual = |z: &[f64]| -> Vec<f64> { link.apply_vec(z).iter().zip(u).map(|(a, b)| a - b).collect() };
    let center = |z: &mut Vec<f64>| {
        if link.name() == "softmax" {
            let mean = z.iter().sum::<f64>() / k as f64;
            z.iter_mut().for_each(|v| *v -= mean);
        }
    };
    let mut z = vec![0.0; k];
    for _ in 0..max_iter {
        let r = residual(&z);
        if r.iter().all(|v| v.abs() <= tol) {
            center(&mut z);
            return Some(z);
        }
        let h = 1e-6;
        let mut hess = Array2::zeros((k, k));
        for j in 0..k {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let (gp, gm) = (link.apply_vec(&zp), link.apply_vec(&zm));
            for i in 0..k {
                hess[[i, j]] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + &hess.t()) * 0.5;
        let rhs = Array2::from_shape_vec((k, 1), r.clone()).ok()?;
        let step = pseudo_inverse_solve(hess.view(), rhs.view()).ok()?;
        let f0 = objective(&z);
        let mut alpha = 1.0;
        loop {
            let cand: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - alpha * s).collect();
            if objective(&cand) <= f0 || alpha < 1e-12 {
                z = cand;
                break;
            }
            alpha *= 0.5;
        }
        center(&mut z);
    }
    let r = residual(&z);
    r.iter().all(|v| v.abs() <= tol).then_some(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub checked: usize,
    /// Pairs outside the inversion domain or where inversion did not converge.
    pub skipped: usize,
    /// Indices violating `⟨∇Φ*(u) − ∇Φ*(v), u − v⟩ ≥ (1/L)‖u − v‖²`.
    pub lower_violations: Vec<usize>,
    /// Indices violating `⟨∇Φ*(u) − ∇Φ*(v), u − v⟩ ≤ (1/μ)‖u − v‖²`; only
    /// evaluated when `μ > 0`.
    pub upper_violations: Vec<usize>,
    pub upper_applicable: bool,
    pub min_lower_slack: f64,
}

impl DualReport {
    pub fn pass(&self) -> bool {
        self.lower_violations.is_empty() && self.upper_violations.is_empty()
    }
}

/// Minimum entry for softmax points used in the dual checks.
pub const DUAL_MIN_ENTRY: f64 = 1e-3;

/// Both dual inequalities on the given pairs of points in the link's range.
pub fn check_dual_inequalities(link: &LinkSpec, pairs: &[(Vec<f64>, Vec<f64>)]) -> DualReport {
    let softmax = link.name() == "softmax";
    let in_domain = |p: &[f64]| !softmax || p.iter().all(|&v| v >= DUAL_MIN_ENTRY);
    let inv_l = 1.0 / link.lipschitz();
    let mu = link.strong_mono();
    let outcomes: Vec<Option<(f64, f64)>> = pairs
        .par_iter()
        .map(|(u, v)| {
            if u.len() != v.len() || !in_domain(u) || !in_domain(v) {
                return None;
            }
            let zu = invert_link(link, u, 1e-10, 100)?;
            let zv = invert_link(link, v, 1e-10, 100)?;
            let inner: f64 = zu.iter().zip(&zv).zip(u.iter().zip(v)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
            let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            Some((inner, sq))
        })
        .collect();
    let mut report = DualReport {
        checked: 0,
        skipped: 0,
        lower_violations: Vec::new(),
        upper_violations: Vec::new(),
        upper_applicable: mu > 0.0,
        min_lower_slack: f64::INFINITY,
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        let Some((inner, sq)) = o else {
            report.skipped += 1;
            continue;
        };
        report.checked += 1;
        let slack = inner - inv_l * sq;
        report.min_lower_slack = report.min_lower_slack.min(slack);
        if slack < -CHECK_TOL {
            report.lower_violations.push(i);
        }
        if mu > 0.0 && inner > sq / mu + CHECK_TOL {
            report.upper_violations.push(i);
        }
    }
    report
}

/// Empirical Lipschitz and monotonicity constants of a link on a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConstants {
    /// `max ‖g(u) − g(v)‖ / ‖u − v‖`.
    pub lipschitz: f64,
    /// `min ⟨g(u) − g(v), u − v⟩ / ‖u − v‖²`.
    pub strong_mono: f64,
    /// `lipschitz / strong_mono` (infinite when the latter is not positive).
    pub kappa: f64,
    pub pairs: usize,
}

/// Estimates link constants from `pairs` random pairs of rows of `scores`
/// (typically the realized `W*xᵢ`).
pub fn estimate_link_constants(
    link: &LinkSpec,
    scores: ArrayView2<'_, f64>,
    pairs: usize,
    seed: u64,
) -> Result<LinkConstants> {
    let n = scores.nrows();
    if n < 2 {
        return Err(Error::invalid("need at least two points to estimate link constants"));
    }
    let mut r = rng::stream(seed);
    let idx: Vec<(usize, usize)> = (0..pairs)
        .map(|_| {
            let i = r.random_range(0..n);
            let mut j = r.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    let ratios: Vec<(f64, f64)> = idx
        .par_iter()
        .filter_map(|&(i, j)| {
            let (u, v): (ArrayView1<'_, f64>, ArrayView1<'_, f64>) = (scores.row(i), scores.row(j));
            let du = &u - &v;
            let sq = du.dot(&du);
            if !(sq > 0.0) {
                return None;
            }
            let gu = Array1::from(link.apply_vec(&u.to_vec()));
            let gv = Array1::from(link.apply_vec(&v.to_vec()));
            let dg = &gu - &gv;
            Some((dg.dot(&dg).sqrt() / sq.sqrt(), dg.dot(&du) / sq))
        })
        .collect();
    if ratios.is_empty() {
        return Err(Error::invalid("all sampled pairs coincide"));
    }
    let lipschitz = ratios.iter().fold(0.0_f64, |m, r| m.max(r.0));
    let strong_mono = ratios.iter().fold(f64::INFINITY, |m, r| m.min(r.1));
    let kappa = if strong_mono > 0.0 { lipschitz / strong_mono } else { f64::INFINITY };
    Ok(LinkConstants {
        lipschitz,
        strong_mono,
        kappa,
        pairs: ratios.len(),
    })
}
