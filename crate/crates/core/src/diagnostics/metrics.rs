use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::argmax_rows;

/// Fraction of rows whose argmax (ties → lowest index) differs from the label.
pub fn classification_error(scores: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    if scores.nrows() != labels.len() {
        return Err(Error::shape(format!(
            "{} score rows but {} labels",
            scores.nrows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::NoExamples);
    }
    let wrong = argmax_rows(scores).iter().zip(labels).filter(|(p, l)| p != l).count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// `counts[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: Vec<Vec<usize>>,
}

impl Confusion {
    pub fn new(predicted: &[usize], labels: &[usize], k: usize) -> Result<Self> {
        if predicted.len() != labels.len() {
            return Err(Error::shape("predictions and labels differ in length"));
        }
        let mut counts = vec![vec![0; k]; k];
        for (&p, &l) in predicted.iter().zip(labels) {
            if p >= k || l >= k {
                return Err(Error::invalid(format!("class index out of range for {k} classes")));
            }
            counts[l][p] += 1;
        }
        Ok(Self { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn error(&self) -> f64 {
        let correct: usize = (0..self.counts.len()).map(|c| self.counts[c][c]).sum();
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            1.0 - correct as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn perfect_and_uniform_scores() {
        let labels = [2, 0, 1];
        let perfect = crate::glm::one_hot(&labels, 3);
        assert_eq!(classification_error(perfect.view(), &labels).unwrap(), 0.0);
        let uniform = Array2::from_elem((3, 3), 0.25);
        assert_eq!(classification_error(uniform.view(), &[1, 2, 1]).unwrap(), 1.0);
    }

    #[test]
    fn ten_row_fixture() {
        let scores = array![
            [0.9, 0.1],
            [0.2, 0.8],
            [0.5, 0.5],
            [0.4, 0.6],
            [0.7, 0.3],
            [0.1, 0.9],
            [0.6, 0.4],
            [0.3, 0.7],
            [0.5, 0.5],
            [0.8, 0.2]
        ];
        let labels = [0, 1, 1, 0, 0, 1, 1, 1, 0, 1];
        // predicted: 0 1 0 1 0 1 0 1 0 0 → wrong at rows 2, 3, 6, 9
        assert_eq!(classification_error(scores.view(), &labels).unwrap(), 0.4);
        let c = Confusion::new(&argmax_rows(scores.view()), &labels, 2).unwrap();
        assert_eq!(c.counts, vec![vec![3, 1], vec![3, 3]]);
        assert!((c.error() - 0.4).abs() < 1e-15);
    }
}
