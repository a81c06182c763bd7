//! libsvm text format: `label idx:val idx:val ...` with 1-based ascending
//! indices. Class labels are mapped to contiguous indices in ascending
//! numeric order of the label values.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{CsrMatrix, Dataset, FeatureMatrix};
use crate::error::{Error, Result};

type Row = Vec<(usize, f64)>;

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Parsed lines: raw label field and sparse features.
fn parse_lines<R: BufRead>(reader: R, source: &str) -> Result<Vec<(usize, String, Row)>> {
    let mut out = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line_no = ln + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let label = fields.next().expect("non-empty line").to_string();
        let mut row: Row = Vec::new();
        for f in fields {
            let (i, v) = f
                .split_once(':')
                .ok_or_else(|| parse_err(source, line_no, format!("expected idx:value, found '{f}'")))?;
            let idx: usize = i
                .parse()
                .map_err(|_| parse_err(source, line_no, format!("non-numeric feature index '{i}'")))?;
            let val: f64 = v
                .parse()
                .map_err(|_| parse_err(source, line_no, format!("non-numeric feature value '{v}'")))?;
            if idx == 0 {
                return Err(parse_err(source, line_no, "feature indices are 1-based"));
            }
            if let Some(&(prev, _)) = row.last() {
                if idx - 1 <= prev {
                    return Err(parse_err(source, line_no, format!("feature index {idx} is not ascending")));
                }
            }
            if !val.is_finite() {
                return Err(parse_err(source, line_no, format!("non-finite feature value '{v}'")));
            }
            row.push((idx - 1, val));
        }
        out.push((line_no, label, row));
    }
    Ok(out)
}

fn width(rows: &[Row], hint: Option<usize>) -> usize {
    let max = rows.iter().filter_map(|r| r.last().map(|e| e.0 + 1)).max().unwrap_or(0);
    max.max(hint.unwrap_or(0))
}

/// Parses single-label libsvm text.
pub fn parse_libsvm<R: BufRead>(reader: R, source: &str, n_features: Option<usize>) -> Result<Dataset> {
    let lines = parse_lines(reader, source)?;
    let mut values = Vec::with_capacity(lines.len());
    for (ln, label, _) in &lines {
        let v: f64 = label
            .parse()
            .map_err(|_| parse_err(source, *ln, format!("non-numeric label '{label}'")))?;
        if !v.is_finite() {
            return Err(parse_err(source, *ln, format!("non-finite label '{label}'")));
        }
        values.push(v);
    }
    let mut distinct: Vec<f64> = values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let labels: Vec<usize> = values
        .iter()
        .map(|v| distinct.binary_search_by(|p| p.total_cmp(v)).expect("label is present"))
        .collect();
    let names: Vec<String> = distinct.iter().map(|v| format!("{v}")).collect();
    let rows: Vec<Row> = lines.into_iter().map(|(_, _, r)| r).collect();
    let d = width(&rows, n_features);
    let x = CsrMatrix::from_rows(d, &rows)?;
    Ok(Dataset::new(FeatureMatrix::Sparse(x), labels, names)?.with_source(source.to_string()))
}

pub fn load_libsvm(path: impl AsRef<Path>, n_features: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(BufReader::new(file), &path.display().to_string(), n_features)
}

/// Multi-label rows (comma-separated label field), before any filtering.
#[derive(Debug, Clone)]
pub struct MultiLabelRows {
    pub labels: Vec<BTreeSet<String>>,
    pub features: CsrMatrix,
    pub source: String,
}

pub fn parse_libsvm_multilabel<R: BufRead>(
    reader: R,
    source: &str,
    n_features: Option<usize>,
) -> Result<MultiLabelRows> {
    let lines = parse_lines(reader, source)?;
    let mut labels = Vec::with_capacity(lines.len());
    let mut rows = Vec::with_capacity(lines.len());
    for (_, label, row) in lines {
        labels.push(label.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect());
        rows.push(row);
    }
    let d = width(&rows, n_features);
    Ok(MultiLabelRows {
        labels,
        features: CsrMatrix::from_rows(d, &rows)?,
        source: source.to_string(),
    })
}

pub fn load_libsvm_multilabel(path: impl AsRef<Path>, n_features: Option<usize>) -> Result<MultiLabelRows> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm_multilabel(BufReader::new(file), &path.display().to_string(), n_features)
}
