//! SVD-derived diagnostics: singular factors, the `D`/`D'` scalings, the
//! effective dimension and the sketch-dependent matrix `C_S`.
//!
//! Everything here costs at least one dense SVD and is meant for tests, the
//! concentration lab and `--oracle` diagnostics, never for the solver loop.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::counters::OpCounts;
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::sketch::SketchOperator;

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug)]
pub struct SpectralOracle {
    nu: f64,
    sigma: DVector<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    dvec: DVector<f64>,
    dprime: DVector<f64>,
    d_eff: f64,
    d_eff_trace: f64,
    x_star: DVector<f64>,
    stacked_u: OnceLock<DMatrix<f64>>,
}

impl SpectralOracle {
    pub fn new(a: &DMatrix<f64>, b: &DVector<f64>, nu: f64) -> Result<Self> {
        let (n, d) = a.shape();
        if n < d {
            return Err(Error::Shape(format!("oracle needs n >= d, got {n} x {d}")));
        }
        let svd = a.clone().svd(true, true);
        let u_raw = svd.u.ok_or_else(|| Error::NumericalBreakdown("SVD returned no U".into()))?;
        let vt_raw = svd
            .v_t
            .ok_or_else(|| Error::NumericalBreakdown("SVD returned no V^T".into()))?;
        let s_raw = svd.singular_values;

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| s_raw[j].total_cmp(&s_raw[i]));
        let sigma = DVector::from_fn(d, |k, _| s_raw[order[k]]);
        let u = DMatrix::from_fn(n, d, |i, k| u_raw[(i, order[k])]);
        let v = DMatrix::from_fn(d, d, |i, k| vt_raw[(order[k], i)]);

        let s_max = sigma[0];
        let s_min = sigma[d - 1];
        if !(s_max > 0.0) || s_min < RANK_TOLERANCE * s_max {
            return Err(Error::RankDeficient {
                ratio: if s_max > 0.0 { s_min / s_max } else { 0.0 },
            });
        }

        let nu2 = nu * nu;
        let dvec = sigma.map(|s| s / (s * s + nu2).sqrt());
        let dprime = sigma.map(|s| nu / (s * s + nu2).sqrt());
        let sq: Vec<f64> = dvec.iter().map(|x| x * x).collect();
        let d_eff_trace: f64 = sq.iter().sum();
        let d_eff = d_eff_trace / sq[0];

        // x* = V diag(s / (s^2 + nu^2)) U^T b
        let utb = u.tr_mul(b);
        let coeffs = DVector::from_fn(d, |k, _| sigma[k] / (sigma[k] * sigma[k] + nu2) * utb[k]);
        let x_star = &v * coeffs;

        Ok(SpectralOracle {
            nu,
            sigma,
            u,
            v,
            dvec,
            dprime,
            d_eff,
            d_eff_trace,
            x_star,
            stacked_u: OnceLock::new(),
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn dvec(&self) -> &DVector<f64> {
        &self.dvec
    }

    pub fn dprime(&self) -> &DVector<f64> {
        &self.dprime
    }

    /// `|D|_F^2 / |D|_2^2`.
    pub fn d_eff(&self) -> f64 {
        self.d_eff
    }

    /// `|D|_F^2`, the trace form.
    pub fn d_eff_trace(&self) -> f64 {
        self.d_eff_trace
    }

    /// `|D|_2^2 = s_1^2 / (s_1^2 + nu^2)`.
    pub fn dnorm2(&self) -> f64 {
        self.dvec[0] * self.dvec[0]
    }

    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    /// Left singular vectors of `[A; nu I]`: `U_bar = [U D; V D']`.
    pub fn stacked_u(&self) -> &DMatrix<f64> {
        self.stacked_u.get_or_init(|| {
            let (n, d) = self.u.shape();
            DMatrix::from_fn(n + d, d, |i, k| {
                if i < n {
                    self.u[(i, k)] * self.dvec[k]
                } else {
                    self.v[(i - n, k)] * self.dprime[k]
                }
            })
        })
    }

    /// `diag(sqrt(s^2 + nu^2))`, the singular values of the stacked matrix.
    pub fn stacked_sigma(&self) -> DVector<f64> {
        self.sigma.map(|s| (s * s + self.nu * self.nu).sqrt())
    }

    /// Error coordinates `e = U_bar^T A_bar (x - x*)`; `0.5 |e|^2` is the
    /// prediction error.
    pub fn error_coordinates(&self, p: &ProblemInstance, x: &DVector<f64>) -> DVector<f64> {
        let diff = x - &self.x_star;
        self.stacked_u().tr_mul(&p.stacked_apply(&diff))
    }

    /// `C_S = D (U^T S^T S U - I) D + I` for the given sketch.
    pub fn build_cs(&self, op: &SketchOperator) -> Result<DMatrix<f64>> {
        let su = op.apply(&self.u, &mut OpCounts::default())?;
        Ok(self.cs_from_sketched_u(&su))
    }

    /// `C_S` from an already formed `S U`.
    pub fn cs_from_sketched_u(&self, su: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.u.ncols();
        let gram = su.tr_mul(su);
        let mut cs = DMatrix::from_fn(d, d, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            self.dvec[i] * (gram[(i, j)] - delta) * self.dvec[j] + delta
        });
        symmetrize(&mut cs);
        cs
    }

    /// `0.5 e^T C_S^{-1} e`, the quantity the sketched Newton decrement equals.
    pub fn decrement_from_cs(
        &self,
        p: &ProblemInstance,
        cs: &DMatrix<f64>,
        x: &DVector<f64>,
    ) -> Result<f64> {
        let e = self.error_coordinates(p, x);
        let chol = cs
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("C_S is not positive definite".into()))?;
        Ok(0.5 * e.dot(&chol.solve(&e)))
    }
}

/// Largest and smallest eigenvalue of a symmetric matrix, as `(min, max)`.
pub fn symmetric_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
