use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window and threshold of the optional early stop: fires when the loss fell
/// by less than `EARLY_STOP_TOL` over the last `EARLY_STOP_WINDOW` iterations.
pub const EARLY_STOP_WINDOW: usize = 10;
pub const EARLY_STOP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub t: usize,
    /// Objective of the algorithm: the calibrated GLM loss for the GLM
    /// solvers, the mean squared residual for least-squares fits.
    pub loss: f64,
    /// `(1/n) Σ ‖ŷᵢ − yᵢ‖²`.
    pub mse: f64,
    /// Wall time since the start of the run; zero unless timing is enabled.
    pub seconds: f64,
}

/// Per-iteration history of a run. `initial` is the starting point (`t = 0`);
/// `iterations` holds one record per completed iteration or stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub algorithm: String,
    pub initial: IterRecord,
    pub iterations: Vec<IterRecord>,
    /// Ridge actually used by the preconditioner (may differ from the request
    /// when the automatic fallback fired).
    pub ridge: f64,
    pub stopped_early: Option<String>,
    pub notes: Vec<String>,
}

impl TrainTrace {
    pub(crate) fn new(algorithm: &str, ridge: f64) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            initial: IterRecord {
                t: 0,
                loss: f64::NAN,
                mse: f64::NAN,
                seconds: 0.0,
            },
            iterations: Vec::new(),
            ridge,
            stopped_early: None,
            notes: Vec::new(),
        }
    }

    /// `initial` followed by `iterations`.
    pub fn records(&self) -> impl Iterator<Item = &IterRecord> + '_ {
        std::iter::once(&self.initial).chain(&self.iterations)
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records().map(|r| r.loss).collect()
    }

    pub fn mses(&self) -> Vec<f64> {
        self.records().map(|r| r.mse).collect()
    }

    pub fn last(&self) -> &IterRecord {
        self.iterations.last().unwrap_or(&self.initial)
    }

    /// True when the early-stop rule fires on the records so far.
    pub(crate) fn stalled(&self) -> bool {
        let n = self.iterations.len();
        if n < EARLY_STOP_WINDOW {
            return false;
        }
        let before = if n == EARLY_STOP_WINDOW {
            self.initial.loss
        } else {
            self.iterations[n - EARLY_STOP_WINDOW - 1].loss
        };
        before - self.iterations[n - 1].loss < EARLY_STOP_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub iters: usize,
    /// `λ` added to the diagonal of the second moment.
    pub ridge: f64,
    /// With `λ = 0`, retry a failed factorization with `1e-8 · trace/d`.
    pub auto_ridge: bool,
    pub early_stop: bool,
    pub record_time: bool,
}

impl SolverOptions {
    pub fn new(iters: usize) -> Self {
        Self {
            iters,
            ridge: 0.0,
            auto_ridge: false,
            early_stop: false,
            record_time: false,
        }
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn with_auto_ridge(mut self, on: bool) -> Self {
        self.auto_ridge = on;
        self
    }

    pub fn with_early_stop(mut self, on: bool) -> Self {
        self.early_stop = on;
        self
    }

    pub fn with_timing(mut self, on: bool) -> Self {
        self.record_time = on;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::invalid("iteration count must be at least 1"));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::invalid(format!("ridge must be finite and >= 0, got {}", self.ridge)));
        }
        Ok(())
    }
}

pub(crate) struct Clock {
    start: Option<Instant>,
}

impl Clock {
    pub(crate) fn new(enabled: bool) -> Self {
        Self {
            start: enabled.then(Instant::now),
        }
    }

    pub(crate) fn seconds(&self) -> f64 {
        self.start.map_or(0.0, |s| s.elapsed().as_secs_f64())
    }
}
