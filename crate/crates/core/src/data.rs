//! Datasets: synthetic spectra and dense loaders for CSV and libsvm text.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    CsvFile,
    LibsvmFile,
    SyntheticExp,
    SyntheticPoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumDecay {
    /// `sigma_j = 0.95^j`
    Exp,
    /// `sigma_j = 1 / j`
    Poly,
}

impl SpectrumDecay {
    pub fn singular_values(self, d: usize) -> Vec<f64> {
        (1..=d)
            .map(|j| match self {
                SpectrumDecay::Exp => 0.95f64.powi(j as i32),
                SpectrumDecay::Poly => 1.0 / j as f64,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n: usize,
    pub d: usize,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub source: DataSource,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    fn new(source: DataSource, a: DMatrix<f64>, b: DVector<f64>, provenance: String) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Shape("dataset has no rows or no columns".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset contains non-finite values".into()));
        }
        let meta = DatasetMeta {
            n: a.nrows(),
            d: a.ncols(),
            provenance,
        };
        Ok(Dataset { source, a, b, meta })
    }

    pub fn to_problem(&self, nu: f64) -> Result<ProblemInstance> {
        ProblemInstance::from_shape(self.a.clone(), self.b.clone(), nu)
    }
}

/// Orthonormal `rows x cols` factor from the QR of a seeded Gaussian matrix.
fn random_orthonormal(rows: usize, cols: usize, seed: u64, stream: u64) -> DMatrix<f64> {
    let mut rng = substream(seed, stream);
    let g = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng));
    g.qr().q()
}

/// `A = U diag(sigma) V^T` with a planted model `b = A x + noise`, where
/// `x ~ N(0, I/d)` and `noise ~ N(0, I/n)`.
pub fn generate_synthetic(decay: SpectrumDecay, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if d == 0 || n < d {
        return Err(Error::InvalidInput(format!("need n >= d >= 1, got n = {n}, d = {d}")));
    }
    let sigma = decay.singular_values(d);
    let a = synthetic_matrix(&sigma, n, seed);
    let mut rng = substream(seed, 2);
    let planted = DVector::from_fn(d, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z / (d as f64).sqrt()
    });
    let mut rng = substream(seed, 3);
    let noise = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z / (n as f64).sqrt()
    });
    let b = &a * planted + noise;
    let (source, name) = match decay {
        SpectrumDecay::Exp => (DataSource::SyntheticExp, "exp"),
        SpectrumDecay::Poly => (DataSource::SyntheticPoly, "poly"),
    };
    Dataset::new(source, a, b, format!("synthetic-{name} n={n} d={d} seed={seed}"))
}

/// `U diag(sigma) V^T` with seeded orthonormal factors, `U` of size `n x d`.
pub fn synthetic_matrix(sigma: &[f64], n: usize, seed: u64) -> DMatrix<f64> {
    let d = sigma.len();
    let u = random_orthonormal(n, d, seed, 0);
    let v = random_orthonormal(d, d, seed, 1);
    let mut us = u;
    for (j, s) in sigma.iter().enumerate() {
        us.column_mut(j).scale_mut(*s);
    }
    us * v.transpose()
}

/// Dense CSV without header; the last column is `b`.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() < 2 {
            return Err(Error::Shape(format!("line {line}: need at least one feature and a target")));
        }
        if let Some(first) = rows.first() {
            if first.len() != vals.len() {
                return Err(Error::Shape(format!(
                    "line {line}: {} columns, expected {}",
                    vals.len(),
                    first.len()
                )));
            }
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty file".into(),
        });
    }
    let (n, w) = (rows.len(), rows[0].len());
    let a = DMatrix::from_fn(n, w - 1, |i, j| rows[i][j]);
    let b = DVector::from_fn(n, |i, _| rows[i][w - 1]);
    Dataset::new(DataSource::CsvFile, a, b, format!("csv:{}", path.display()))
}

/// libsvm text `label idx:value ...` with 1-based indices, densified. The
/// width is the largest index seen unless `width` is given.
pub fn load_libsvm(path: &Path, width: Option<usize>) -> Result<Dataset> {
    let file = File::open(path)?;
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_idx = 0usize;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(format!("bad label {label_tok:?}")))?;
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err("indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(format!("bad value {val:?}")))?;
            if let Some(w) = width {
                if idx > w {
                    return Err(Error::Shape(format!(
                        "line {line_no}: index {idx} exceeds width {w}"
                    )));
                }
            }
            max_idx = max_idx.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(label);
        entries.push(row);
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty file".into(),
        });
    }
    let d = width.unwrap_or(max_idx);
    if d == 0 {
        return Err(Error::Shape("no features in file".into()));
    }
    let mut a = DMatrix::zeros(labels.len(), d);
    for (i, row) in entries.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] = v;
        }
    }
    Dataset::new(
        DataSource::LibsvmFile,
        a,
        DVector::from_vec(labels),
        format!("libsvm:{}", path.display()),
    )
}
