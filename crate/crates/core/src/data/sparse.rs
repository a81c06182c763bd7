use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed sparse row matrix with strictly ascending column indices per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || *indptr.last().unwrap() != indices.len() {
            return Err(Error::Format("inconsistent CSR row pointers".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::Format("CSR index and value arrays differ in length".into()));
        }
        for i in 0..nrows {
            if indptr[i] > indptr[i + 1] {
                return Err(Error::Format(format!("row pointer decreases at row {i}")));
            }
            let cols = &indices[indptr[i]..indptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!("column indices of row {i} are not ascending")));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::Format(format!("column index out of range in row {i}")));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for &(c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self::new(rows.len(), ncols, indptr, indices, values)
    }

    pub fn from_dense(x: ArrayView2<'_, f64>) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = x
            .rows()
            .into_iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
            .collect();
        Self::from_rows(x.ncols(), &rows).expect("dense rows are well formed")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out[[i, c]] = v;
            }
        }
        out
    }

    /// Dense `n × p` block holding the requested columns in the given order.
    pub fn columns_dense(&self, cols: &[usize]) -> Result<Array2<f64>> {
        let mut slot = vec![usize::MAX; self.ncols];
        for (p, &c) in cols.iter().enumerate() {
            if c >= self.ncols {
                return Err(Error::shape(format!("column {c} out of range for {} columns", self.ncols)));
            }
            slot[c] = p;
        }
        let mut out = Array2::zeros((self.nrows, cols.len()));
        for i in 0..self.nrows {
            let (idx, vals) = self.row(i);
            for (&c, &v) in idx.iter().zip(vals) {
                if slot[c] != usize::MAX {
                    out[[i, slot[c]]] = v;
                }
            }
        }
        Ok(out)
    }

    /// Keeps the listed (ascending) columns, renumbered `0..keep.len()`.
    pub fn select_columns(&self, keep: &[usize]) -> Result<CsrMatrix> {
        let mut remap = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.ncols {
                return Err(Error::shape(format!("column {old} out of range")));
            }
            remap[old] = new;
        }
        let rows: Vec<Vec<(usize, f64)>> = (0..self.nrows)
            .map(|i| {
                let (idx, vals) = self.row(i);
                let mut r: Vec<(usize, f64)> = idx
                    .iter()
                    .zip(vals)
                    .filter(|(c, _)| remap[**c] != usize::MAX)
                    .map(|(c, v)| (remap[*c], *v))
                    .collect();
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        Self::from_rows(keep.len(), &rows)
    }

    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let picked: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|&i| {
                let (idx, vals) = self.row(i);
                idx.iter().copied().zip(vals.iter().copied()).collect()
            })
            .collect();
        Self::from_rows(self.ncols, &picked).expect("row subset of a valid matrix")
    }

    /// `X B` for dense `B` (d × m).
    pub fn dot_dense(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if b.nrows() != self.ncols {
            return Err(Error::shape(format!(
                "cannot multiply {}×{} by {}×{}",
                self.nrows,
                self.ncols,
                b.nrows(),
                b.ncols()
            )));
        }
        let mut out = Array2::zeros((self.nrows, b.ncols()));
        for i in 0..self.nrows {
            let (idx, vals) = self.row(i);
            let mut orow = out.row_mut(i);
            for (&c, &v) in idx.iter().zip(vals) {
                orow.scaled_add(v, &b.row(c));
            }
        }
        Ok(out)
    }

    /// `Xᵀ R` for dense `R` (n × k).
    pub fn transpose_dot(&self, r: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if r.nrows() != self.nrows {
            return Err(Error::shape("row counts differ"));
        }
        let mut out = Array2::zeros((self.ncols, r.ncols()));
        for i in 0..self.nrows {
            let (idx, vals) = self.row(i);
            let rrow = r.row(i);
            for (&c, &v) in idx.iter().zip(vals) {
                out.row_mut(c).scaled_add(v, &rrow);
            }
        }
        Ok(out)
    }

    /// Appends a column of `value` (an intercept).
    pub fn with_constant_column(&self, value: f64) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.indices.len() + self.nrows);
        let mut values = Vec::with_capacity(self.values.len() + self.nrows);
        indptr.push(0);
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            indices.extend_from_slice(idx);
            values.extend_from_slice(val);
            indices.push(self.ncols);
            values.push(value);
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols + 1,
            indptr,
            indices,
            values,
        }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CsrMatrix {
        CsrMatrix {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.ncols];
        for (&c, &v) in self.indices.iter().zip(&self.values) {
            sums[c] += v;
        }
        sums
    }

    /// `Xᵀ X`, accumulated row by row.
    pub fn gram_columns(&self) -> Array2<f64> {
        let mut g = Array2::zeros((self.ncols, self.ncols));
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (p, &a) in idx.iter().enumerate() {
                for (q, &b) in idx.iter().enumerate() {
                    g[[a, b]] += val[p] * val[q];
                }
            }
        }
        g
    }

    /// `X Xᵀ`.
    pub fn gram_rows(&self) -> Array2<f64> {
        let n = self.nrows;
        let mut g = Array2::zeros((n, n));
        for i in 0..n {
            let (ai, av) = self.row(i);
            for j in 0..=i {
                let (bi, bv) = self.row(j);
                let (mut p, mut q, mut acc) = (0, 0, 0.0);
                while p < ai.len() && q < bi.len() {
                    match ai[p].cmp(&bi[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += av[p] * bv[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                g[[i, j]] = acc;
                g[[j, i]] = acc;
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_rows(4, &[vec![(0, 1.0), (3, 2.0)], vec![], vec![(1, 3.0), (2, 4.0)]]).unwrap()
    }

    #[test]
    fn dense_conversion() {
        let m = sample();
        assert_eq!(
            m.to_dense(),
            array![[1.0, 0.0, 0.0, 2.0], [0.0, 0.0, 0.0, 0.0], [0.0, 3.0, 4.0, 0.0]]
        );
        assert_eq!(CsrMatrix::from_dense(m.to_dense().view()), m);
    }

    #[test]
    fn rejects_unsorted_columns() {
        assert!(CsrMatrix::from_rows(4, &[vec![(2, 1.0), (1, 1.0)]]).is_err());
        assert!(CsrMatrix::from_rows(2, &[vec![(2, 1.0)]]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let m = sample();
        let d = m.to_dense();
        let b = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        assert_eq!(m.dot_dense(b.view()).unwrap(), d.dot(&b));
        let r = array![[1.0], [2.0], [3.0]];
        assert_eq!(m.transpose_dot(r.view()).unwrap(), d.t().dot(&r));
        assert_eq!(m.gram_rows(), d.dot(&d.t()));
    }

    #[test]
    fn column_selection() {
        let m = sample();
        assert_eq!(m.columns_dense(&[3, 1]).unwrap(), array![[2.0, 0.0], [0.0, 0.0], [0.0, 3.0]]);
        let s = m.select_columns(&[1, 3]).unwrap();
        assert_eq!(s.to_dense(), array![[0.0, 2.0], [0.0, 0.0], [3.0, 0.0]]);
        assert_eq!(m.column_sums(), vec![1.0, 3.0, 4.0, 2.0]);
    }
}
