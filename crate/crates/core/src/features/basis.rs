use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An elementwise function of a prediction entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFn {
    Identity,
    /// `y ↦ yᵖ` for `p ≥ 2`.
    Power(u32),
}

impl BasisFn {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            BasisFn::Identity => y,
            BasisFn::Power(p) => y.powi(p as i32),
        }
    }
}

impl fmt::Display for BasisFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisFn::Identity => write!(f, "y"),
            BasisFn::Power(p) => write!(f, "y{p}"),
        }
    }
}

impl FromStr for BasisFn {
    type Err = Error;

    /// Accepts `y`, `y2`, `y^2`, `y**2`, ...
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let rest = s
            .strip_prefix('y')
            .ok_or_else(|| Error::invalid(format!("unknown basis function '{s}'")))?;
        let digits = rest.trim_start_matches("**").trim_start_matches('^');
        if digits.is_empty() {
            return Ok(BasisFn::Identity);
        }
        match digits.parse::<u32>() {
            Ok(1) => Ok(BasisFn::Identity),
            Ok(p) if p >= 2 => Ok(BasisFn::Power(p)),
            _ => Err(Error::invalid(format!("unknown basis function '{s}'"))),
        }
    }
}

/// A finite dictionary `G` of elementwise functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationBasis {
    functions: Vec<BasisFn>,
}

impl CalibrationBasis {
    pub fn new(functions: Vec<BasisFn>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::invalid("calibration basis is empty"));
        }
        Ok(Self { functions })
    }

    pub fn identity() -> Self {
        Self {
            functions: vec![BasisFn::Identity],
        }
    }

    /// `{y, y², …, yᵈ}`.
    pub fn polynomial(degree: u32) -> Self {
        let functions = (1..=degree.max(1))
            .map(|p| if p == 1 { BasisFn::Identity } else { BasisFn::Power(p) })
            .collect();
        Self { functions }
    }

    pub fn functions(&self) -> &[BasisFn] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn contains_identity(&self) -> bool {
        self.functions.contains(&BasisFn::Identity)
    }
}

impl fmt::Display for CalibrationBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.functions.iter().map(|g| g.to_string()).collect();
        write!(f, "{}", names.join(","))
    }
}

impl FromStr for CalibrationBasis {
    type Err = Error;

    /// Comma-separated list, e.g. `y,y2,y3`.
    fn from_str(s: &str) -> Result<Self> {
        let functions = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(functions)
    }
}

/// `[g₁(Z) | g₂(Z) | …]`, each block `n × k`, in basis order.
pub fn apply_basis(basis: &CalibrationBasis, z: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, k) = z.dim();
    let mut out = Array2::zeros((n, k * basis.len()));
    for (b, g) in basis.functions.iter().enumerate() {
        let mut block = out.slice_mut(ndarray::s![.., b * k..(b + 1) * k]);
        block.zip_mut_with(&z, |o, &v| *o = g.eval(v));
    }
    out
}
