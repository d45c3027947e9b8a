//! Labelled dense datasets and their text formats.
//!
//! LIBSVM: one sample per line, `<label> <index>:<value> ...` with 1-based
//! feature indices separated by ASCII whitespace. Missing indices are zero.
//! Text after `#` is ignored, blank lines are skipped.
//!
//! CSV: comma-separated numbers, one sample per line, label in the last
//! column. A first line that does not parse as numbers is treated as a
//! header. Lines starting with `#` and blank lines are skipped.
//!
//! In both formats labels must be integral. Distinct raw labels are sorted
//! ascending and mapped to class ids `0..C`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major `n_samples x n_features`.
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    n_classes: usize,
    /// Raw label of each class id, when loaded from a file.
    class_values: Vec<i64>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        n_features: usize,
        n_classes: usize,
    ) -> Result<Self> {
        let class_values = (0..n_classes as i64).collect();
        Self::with_class_values(features, labels, n_features, n_classes, class_values)
    }

    fn with_class_values(
        features: Vec<f64>,
        labels: Vec<usize>,
        n_features: usize,
        n_classes: usize,
        class_values: Vec<i64>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n_features == 0 {
            return Err(Error::InconsistentDimensions("zero features".into()));
        }
        if n_classes < 2 {
            return Err(Error::InvalidProblem(format!(
                "need at least two classes, found {n_classes}"
            )));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::InconsistentDimensions(format!(
                "{} feature values for {} samples of dimension {}",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidProblem(format!(
                "label {l} out of range for {n_classes} classes"
            )));
        }
        crate::linalg::check_finite(&features)?;
        Ok(Dataset {
            features,
            labels,
            n_features,
            n_classes,
            class_values,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_values(&self) -> &[i64] {
        &self.class_values
    }

    /// FNV-1a over the feature bit patterns followed by the labels.
    pub fn checksum(&self) -> u64 {
        const OFFSET: u64 = 0xcbf29ce484222325;
        const PRIME: u64 = 0x100000001b3;
        let mut h = OFFSET;
        let mut eat = |word: u64| {
            for byte in word.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for v in &self.features {
            eat(v.to_bits());
        }
        for &l in &self.labels {
            eat(l as u64);
        }
        h
    }
}

fn parse_label(token: &str, line: usize) -> Result<i64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad label {token:?}"),
    })?;
    if !v.is_finite() || v.fract() != 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("label {token:?} is not an integer"),
        });
    }
    Ok(v as i64)
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad number {token:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value {token:?}"),
        });
    }
    Ok(v)
}

fn remap(
    raw: Vec<i64>,
    features: Vec<f64>,
    n_features: usize,
) -> Result<Dataset> {
    let classes: Vec<i64> = raw.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw
        .iter()
        .map(|r| classes.binary_search(r).expect("label present"))
        .collect();
    let n_classes = classes.len();
    Dataset::with_class_values(features, labels, n_features, n_classes, classes)
}

/// Parses LIBSVM text. With `n_features = None` the dimension is the largest
/// index seen.
pub fn parse_libsvm(text: &str, n_features: Option<usize>) -> Result<Dataset> {
    let mut raw = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    for (ln, full) in text.lines().enumerate() {
        let line = ln + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_ascii_whitespace();
        let label = parse_label(tokens.next().expect("non-empty line"), line)?;
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected index:value, got {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    message: "feature indices are 1-based".into(),
                });
            }
            if let Some(d) = n_features {
                if idx > d {
                    return Err(Error::InconsistentDimensions(format!(
                        "line {line}: index {idx} exceeds declared dimension {d}"
                    )));
                }
            }
            max_index = max_index.max(idx);
            row.push((idx - 1, parse_value(val, line)?));
        }
        raw.push(label);
        rows.push(row);
    }
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = n_features.unwrap_or(max_index);
    if d == 0 {
        return Err(Error::InconsistentDimensions("no features present".into()));
    }
    let mut features = vec![0.0; rows.len() * d];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[i * d + j] = v;
        }
    }
    remap(raw, features, d)
}

pub fn load_libsvm(path: impl AsRef<Path>, n_features: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(&text, n_features)
}

/// Serializes in LIBSVM form with shortest round-trip float formatting;
/// zero entries are omitted.
pub fn to_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..data.n_samples() {
        let _ = write!(out, "{}", data.class_values[data.labels[i]]);
        for (j, v) in data.row(i).iter().enumerate() {
            if *v != 0.0 {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
        }
        out.push('\n');
    }
    out
}

pub fn save_libsvm(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_libsvm(data)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut raw = Vec::new();
    let mut features = Vec::new();
    let mut width: Option<usize> = None;
    let mut seen_first = false;
    for (ln, full) in text.lines().enumerate() {
        let line = ln + 1;
        let content = full.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if !seen_first {
            seen_first = true;
            if fields.iter().any(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        if fields.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "need at least one feature and a label".into(),
            });
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::InconsistentDimensions(format!(
                    "line {line} has {} columns, expected {w}",
                    fields.len()
                )))
            }
            _ => {}
        }
        let (label, feats) = fields.split_last().expect("at least two fields");
        for f in feats {
            features.push(parse_value(f, line)?);
        }
        raw.push(parse_label(label, line)?);
    }
    let Some(w) = width else {
        return Err(Error::EmptyDataset);
    };
    remap(raw, features, w - 1)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

/// Gaussian class blobs.
///
/// Draws, in order: for each class a standard-normal direction of length
/// `d`, normalized and scaled by `separation` (the class mean); then for each
/// sample `i` the label `i mod C` and `d` standard-normal noise entries added
/// to that class mean.
pub fn make_synthetic(seed: u64, n: usize, d: usize, c: usize, separation: f64) -> Result<Dataset> {
    if n == 0 || d == 0 || c < 2 || !(separation >= 0.0) {
        return Err(Error::InvalidProblem(format!(
            "synthetic dataset needs n>=1, d>=1, C>=2, separation>=0 (got {n}, {d}, {c}, {separation})"
        )));
    }
    let mut rng = Stream::new(seed);
    let mut centers = Vec::with_capacity(c * d);
    for _ in 0..c {
        let mut dir = rng.normal_vec(d);
        let len = norm(&dir);
        for v in dir.iter_mut() {
            *v *= separation / len;
        }
        centers.extend(dir);
    }
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % c;
        labels.push(label);
        let center = &centers[label * d..(label + 1) * d];
        for m in center {
            features.push(m + rng.normal());
        }
    }
    Dataset::new(features, labels, d, c)
}
