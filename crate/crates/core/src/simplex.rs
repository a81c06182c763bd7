//! Euclidean projection onto the probability simplex `{p ≥ 0, Σp = 1}`.
//!
//! Sort-and-threshold: with `u` sorted descending, `ρ` is the largest index
//! with `u_ρ − (Σ_{i≤ρ} uᵢ − 1)/ρ > 0`, and the projection is
//! `max(v − θ, 0)` with `θ = (Σ_{i≤ρ} uᵢ − 1)/ρ`.

use std::ops::Deref;

use ndarray::{Array2, ArrayViewMut1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SimplexVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn on_simplex(v: &[f64]) -> bool {
    let tol = 4.0 * v.len() as f64 * f64::EPSILON;
    v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// Threshold `θ` such that `max(v − θ, 0)` is the projection of `v`.
pub fn simplex_threshold(v: &[f64]) -> f64 {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    theta
}

fn project_in_place(v: &mut [f64]) {
    if on_simplex(v) {
        return;
    }
    let theta = simplex_threshold(v);
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

pub fn project_simplex(v: &[f64]) -> Result<SimplexVector> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project a zero-length vector onto the simplex"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("simplex projection input"));
    }
    let mut p = v.to_vec();
    project_in_place(&mut p);
    Ok(SimplexVector(p))
}

pub fn project_row(mut row: ArrayViewMut1<'_, f64>) {
    match row.as_slice_mut() {
        Some(s) => project_in_place(s),
        None => {
            let mut tmp = row.to_vec();
            project_in_place(&mut tmp);
            row.iter_mut().zip(tmp).for_each(|(r, t)| *r = t);
        }
    }
}

/// Projects every row of `m` onto the simplex.
pub fn project_rows(m: &mut Array2<f64>) -> Result<()> {
    if m.ncols() == 0 {
        return Err(Error::invalid("cannot project zero-width rows onto the simplex"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("simplex projection input"));
    }
    for row in m.rows_mut() {
        project_row(row);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn fixed_points_and_symmetry() {
        assert_eq!(&*project_simplex(&[0.5, 0.5]).unwrap(), &[0.5, 0.5]);
        assert_eq!(&*project_simplex(&[1.0, 1.0]).unwrap(), &[0.5, 0.5]);
    }

    #[test]
    fn threshold_example() {
        // θ = 0.1: (0.9 − 0.1) + (0.3 − 0.1) = 1 and −0.2 < θ.
        assert!((simplex_threshold(&[0.9, 0.3, -0.2]) - 0.1).abs() < 1e-15);
        let p = project_simplex(&[0.9, 0.3, -0.2]).unwrap();
        assert!(close(&p, &[0.8, 0.2, 0.0], 1e-15));
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        assert!(project_simplex(&[]).is_err());
        assert!(project_simplex(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn single_entry_maps_to_one() {
        assert_eq!(&*project_simplex(&[-3.0]).unwrap(), &[1.0]);
    }

    proptest! {
        #[test]
        fn output_on_simplex_and_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
            let p = project_simplex(&v).unwrap();
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let q = project_simplex(&p).unwrap();
            prop_assert_eq!(&*p, &*q);
        }

        #[test]
        fn non_expansive(
            pair in (1usize..10).prop_flat_map(|k| (
                prop::collection::vec(-5.0f64..5.0, k),
                prop::collection::vec(-5.0f64..5.0, k),
            ))
        ) {
            let (u, v) = pair;
            let pu = project_simplex(&u).unwrap();
            let pv = project_simplex(&v).unwrap();
            let dp: f64 = pu.iter().zip(pv.iter()).map(|(a, b)| (a - b).powi(2)).sum();
            let dv: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(dp.sqrt() <= dv.sqrt() + 1e-12);
        }

        #[test]
        fn pythagoras_against_simplex_points(
            pair in (1usize..10).prop_flat_map(|k| (
                prop::collection::vec(-5.0f64..5.0, k),
                prop::collection::vec(0.0f64..1.0, k),
            ))
        ) {
            let (v, raw) = pair;
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let y: Vec<f64> = raw.iter().map(|r| (r + 1e-9 / raw.len() as f64) / total).collect();
            let p = project_simplex(&v).unwrap();
            let lhs: f64 = p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            let rhs: f64 = v.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
