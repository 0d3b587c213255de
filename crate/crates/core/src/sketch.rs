//! Random embeddings `S` (m x n) applied to dense matrices.
//!
//! Two families are supported:
//!
//! * Gaussian: i.i.d. `N(0, 1/m)` entries, cost `m * n * d` to form `S A`.
//! * SRHT: `S = sqrt(n_pad / m) * R * H * diag(eps)`, where `eps` are Rademacher
//!   signs, `H` is the orthonormal Walsh-Hadamard transform of size `n_pad`
//!   (the next power of two `>= n`, rows past `n` being zero) and `R` samples
//!   `m` rows without replacement. Cost `n_pad * d * log2(n_pad)`.
//!
//! A sketch is a pure function of `(kind, m, n, seed)`; the SRHT signs and the
//! row subset come from independent streams of the seed.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::counters::OpCounts;
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    Gaussian,
    Srht,
}

impl std::fmt::Display for SketchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SketchKind::Gaussian => write!(f, "gaussian"),
            SketchKind::Srht => write!(f, "srht"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub kind: SketchKind,
    pub m: usize,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(kind: SketchKind, m: usize, seed: u64) -> Self {
        SketchConfig { kind, m, seed }
    }

    /// Draws the embedding for inputs with `n` rows.
    pub fn sample(&self, n: usize) -> Result<SketchOperator> {
        if self.m == 0 {
            return Err(Error::InvalidInput("sketch size must be >= 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidInput("cannot sketch zero rows".into()));
        }
        match self.kind {
            SketchKind::Gaussian => {
                let mut rng = substream(self.seed, 0);
                let scale = 1.0 / (self.m as f64).sqrt();
                let s = DMatrix::from_fn(self.m, n, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * scale
                });
                Ok(SketchOperator::Gaussian { s })
            }
            SketchKind::Srht => {
                let n_pad = n.next_power_of_two();
                if self.m > n_pad {
                    return Err(Error::SketchTooLarge { m: self.m, n_pad });
                }
                let mut sign_rng = substream(self.seed, 1);
                let signs = (0..n)
                    .map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let mut row_rng = substream(self.seed, 2);
                let mut rows = index::sample(&mut row_rng, n_pad, self.m).into_vec();
                rows.sort_unstable();
                Ok(SketchOperator::Srht {
                    n,
                    n_pad,
                    signs,
                    rows,
                    scale: (n_pad as f64 / self.m as f64).sqrt(),
                })
            }
        }
    }
}

/// A sampled embedding, reusable on any matrix with `n` rows.
#[derive(Debug, Clone)]
pub enum SketchOperator {
    Gaussian {
        s: DMatrix<f64>,
    },
    Srht {
        n: usize,
        n_pad: usize,
        signs: Vec<f64>,
        rows: Vec<usize>,
        scale: f64,
    },
    /// A caller-provided `S`, e.g. an orthogonal matrix in tests.
    Explicit {
        s: DMatrix<f64>,
    },
}

impl SketchOperator {
    /// Output dimension.
    pub fn m(&self) -> usize {
        match self {
            SketchOperator::Gaussian { s } | SketchOperator::Explicit { s } => s.nrows(),
            SketchOperator::Srht { rows, .. } => rows.len(),
        }
    }

    /// Input dimension.
    pub fn n(&self) -> usize {
        match self {
            SketchOperator::Gaussian { s } | SketchOperator::Explicit { s } => s.ncols(),
            SketchOperator::Srht { n, .. } => *n,
        }
    }

    /// Forms `S * a`.
    pub fn apply(&self, a: &DMatrix<f64>, counts: &mut OpCounts) -> Result<DMatrix<f64>> {
        if a.nrows() != self.n() {
            return Err(Error::Shape(format!(
                "sketch expects {} rows, matrix has {}",
                self.n(),
                a.nrows()
            )));
        }
        let d = a.ncols() as u64;
        match self {
            SketchOperator::Gaussian { s } | SketchOperator::Explicit { s } => {
                counts.sketch += s.nrows() as u64 * s.ncols() as u64 * d;
                Ok(s * a)
            }
            SketchOperator::Srht {
                n,
                n_pad,
                signs,
                rows,
                scale,
            } => {
                let mut out = DMatrix::zeros(rows.len(), a.ncols());
                let mut buf = vec![0.0; *n_pad];
                for j in 0..a.ncols() {
                    let col = a.column(j);
                    for i in 0..*n {
                        buf[i] = signs[i] * col[i];
                    }
                    buf[*n..].iter_mut().for_each(|v| *v = 0.0);
                    fwht_inplace(&mut buf)?;
                    for (k, &r) in rows.iter().enumerate() {
                        out[(k, j)] = scale * buf[r];
                    }
                }
                let log = n_pad.trailing_zeros() as u64;
                counts.sketch += d * (*n_pad as u64 * log + rows.len() as u64);
                Ok(out)
            }
        }
    }

    /// The embedding as an explicit `m x n` matrix.
    pub fn dense(&self, n: usize) -> Result<DMatrix<f64>> {
        self.apply(&DMatrix::identity(n, n), &mut OpCounts::default())
    }
}

/// Gaussian sketch `S a` with `S` drawn from `seed`.
pub fn gaussian_sketch(a: &DMatrix<f64>, m: usize, seed: u64) -> Result<DMatrix<f64>> {
    SketchConfig::new(SketchKind::Gaussian, m, seed)
        .sample(a.nrows())?
        .apply(a, &mut OpCounts::default())
}

/// SRHT sketch `S a` with signs and rows drawn from `seed`.
pub fn srht_sketch(a: &DMatrix<f64>, m: usize, seed: u64) -> Result<DMatrix<f64>> {
    SketchConfig::new(SketchKind::Srht, m, seed)
        .sample(a.nrows())?
        .apply(a, &mut OpCounts::default())
}

/// In-place orthonormal fast Walsh-Hadamard transform. Each butterfly stage is
/// scaled by `1/sqrt(2)`, so the transform is its own inverse.
pub fn fwht_inplace(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "FWHT length must be a power of two, got {n}"
        )));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let x = v[i];
                let y = v[i + h];
                v[i] = (x + y) * inv_sqrt2;
                v[i + h] = (x - y) * inv_sqrt2;
            }
        }
        h *= 2;
    }
    Ok(())
}
