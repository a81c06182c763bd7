use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::subsample_rows;

pub const DEFAULT_BANDWIDTH_SAMPLE: usize = 1000;

/// Whether the median trick uses squared or plain distances. The kernel
/// `exp(−‖x − x′‖²/s)` divides a squared distance, so squared is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthMode {
    #[default]
    Squared,
    Unsquared,
}

impl std::str::FromStr for BandwidthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(BandwidthMode::Squared),
            "unsquared" => Ok(BandwidthMode::Unsquared),
            _ => Err(Error::invalid(format!("unknown bandwidth mode '{s}'"))),
        }
    }
}

/// Median pairwise distance over a seeded subsample of at most `sample_size`
/// rows. An even number of pairs averages the two middle values.
pub fn median_bandwidth(x: ArrayView2<'_, f64>, sample_size: usize, seed: u64, mode: BandwidthMode) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("median bandwidth needs at least two points"));
    }
    if sample_size < 2 {
        return Err(Error::invalid("bandwidth sample must hold at least two points"));
    }
    let sub;
    let xs = if n > sample_size {
        sub = x.select(Axis(0), &subsample_rows(n, sample_size, seed));
        sub.view()
    } else {
        x
    };
    let m = xs.nrows();
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        let a = xs.row(i);
        for j in 0..i {
            let sq: f64 = a.iter().zip(xs.row(j)).map(|(p, q)| (p - q) * (p - q)).sum();
            dists.push(match mode {
                BandwidthMode::Squared => sq,
                BandwidthMode::Unsquared => sq.sqrt(),
            });
        }
    }
    dists.sort_by(f64::total_cmp);
    let len = dists.len();
    let median = if len % 2 == 1 {
        dists[len / 2]
    } else {
        0.5 * (dists[len / 2 - 1] + dists[len / 2])
    };
    if !(median > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_pair() {
        let x = array![[0.0, 0.0], [2.0, 0.0]];
        assert_eq!(median_bandwidth(x.view(), 1000, 0, BandwidthMode::Squared).unwrap(), 4.0);
        assert_eq!(median_bandwidth(x.view(), 1000, 0, BandwidthMode::Unsquared).unwrap(), 2.0);
    }

    #[test]
    fn three_points_on_a_line() {
        let x = array![[0.0], [1.0], [3.0]];
        assert_eq!(median_bandwidth(x.view(), 1000, 0, BandwidthMode::Squared).unwrap(), 4.0);
    }

    #[test]
    fn scales_quadratically() {
        let x = array![[0.0, 1.0], [1.0, 5.0], [3.0, -2.0], [0.5, 0.5]];
        let s = median_bandwidth(x.view(), 1000, 0, BandwidthMode::Squared).unwrap();
        let y = &x * 3.0;
        let t = median_bandwidth(y.view(), 1000, 0, BandwidthMode::Squared).unwrap();
        assert!((t - 9.0 * s).abs() < 1e-12 * t);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let x = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        assert!(matches!(
            median_bandwidth(x.view(), 1000, 0, BandwidthMode::Squared),
            Err(Error::DegenerateBandwidth)
        ));
    }
}
