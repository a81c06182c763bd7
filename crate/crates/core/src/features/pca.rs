use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{accumulate_second_moment, symmetric_eigen};

/// Mean and top principal directions of a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Array1<f64>,
    /// `d × r`, orthonormal columns in descending-variance order.
    pub components: Array2<f64>,
    /// Variance captured by each component.
    pub variances: Vec<f64>,
    /// Set when fewer than the requested components were kept.
    pub warning: Option<String>,
}

impl PcaBasis {
    pub fn input_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn project(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "PCA basis expects {} columns, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok((&x - &self.mean).dot(&self.components))
    }

    pub fn reconstruct(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        z.dot(&self.components.t()) + &self.mean
    }
}

/// Centers `x` and projects it onto its top-`r` principal directions. If the
/// centered data has rank below `r`, only the nonzero-variance directions are
/// kept and the basis carries a warning.
pub fn pca_fit_project(x: ArrayView2<'_, f64>, r: usize) -> Result<(PcaBasis, Array2<f64>)> {
    let (n, d) = x.dim();
    if r == 0 {
        return Err(Error::invalid("PCA needs at least one component"));
    }
    if r > n.min(d) {
        return Err(Error::invalid(format!("cannot keep {r} components of a {n}×{d} matrix")));
    }
    let mean = x.mean_axis(Axis(0)).ok_or(Error::NoExamples)?;
    let centered = &x - &mean;
    let cov = accumulate_second_moment(centered.view())?;
    let (values, vectors) = symmetric_eigen(cov.matrix().view())?;
    let top = values[0].max(0.0);
    let floor = top * d as f64 * 1e-12;
    let rank = values.iter().take_while(|&&v| v > floor).count();
    let keep = r.min(rank).max(1);
    let warning = (keep < r).then(|| {
        let msg = format!("requested {r} components but the data has rank {rank}; kept {keep}");
        log::warn!("{msg}");
        msg
    });
    let components = vectors.slice(ndarray::s![.., ..keep]).to_owned();
    let projected = centered.dot(&components);
    Ok((
        PcaBasis {
            mean,
            components,
            variances: values.iter().take(keep).copied().collect(),
            warning,
        },
        projected,
    ))
}
