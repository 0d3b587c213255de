//! Regularized least-squares instances and their exact solutions.
//!
//! The objective is `f(x) = 0.5 * |Ax - b|^2 + 0.5 * nu^2 * |x|^2`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::SpectralOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// `n >= d`; solved directly.
    Overdetermined,
    /// `d >= n`; solved through the dual.
    Underdetermined,
}

/// An immutable problem instance. The spectral oracle is built on first use
/// and cached; solvers never touch it.
#[derive(Debug)]
pub struct ProblemInstance {
    a: DMatrix<f64>,
    b: DVector<f64>,
    nu: f64,
    orientation: Orientation,
    oracle: OnceLock<Result<SpectralOracle>>,
}

impl Clone for ProblemInstance {
    fn clone(&self) -> Self {
        ProblemInstance {
            a: self.a.clone(),
            b: self.b.clone(),
            nu: self.nu,
            orientation: self.orientation,
            oracle: OnceLock::new(),
        }
    }
}

impl ProblemInstance {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        nu: f64,
        orientation: Orientation,
    ) -> Result<Self> {
        let (n, d) = a.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("empty data matrix".into()));
        }
        if b.len() != n {
            return Err(Error::Shape(format!(
                "b has length {} but A has {} rows",
                b.len(),
                n
            )));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "nu must be finite and > 0, got {nu}"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in A or b".into()));
        }
        match orientation {
            Orientation::Overdetermined if n < d => {
                return Err(Error::Shape(format!(
                    "overdetermined instance needs n >= d, got {n} x {d}"
                )))
            }
            Orientation::Underdetermined if d < n => {
                return Err(Error::Shape(format!(
                    "underdetermined instance needs d >= n, got {n} x {d}"
                )))
            }
            _ => {}
        }
        Ok(ProblemInstance {
            a,
            b,
            nu,
            orientation,
            oracle: OnceLock::new(),
        })
    }

    /// Picks the orientation from the shape (`n >= d` is overdetermined).
    pub fn from_shape(a: DMatrix<f64>, b: DVector<f64>, nu: f64) -> Result<Self> {
        let orientation = if a.nrows() >= a.ncols() {
            Orientation::Overdetermined
        } else {
            Orientation::Underdetermined
        };
        Self::new(a, b, nu, orientation)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    /// Same data with a different regularization scale.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), nu, self.orientation)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let r = &self.a * x - &self.b;
        0.5 * r.norm_squared() + 0.5 * self.nu * self.nu * x.norm_squared()
    }

    /// SVD-derived quantities, computed once. Only valid for overdetermined
    /// instances with full column rank.
    pub fn oracle(&self) -> Result<&SpectralOracle> {
        self.oracle
            .get_or_init(|| {
                if self.orientation != Orientation::Overdetermined {
                    return Err(Error::InvalidInput(
                        "spectral oracle requires an overdetermined instance".into(),
                    ));
                }
                SpectralOracle::new(&self.a, &self.b, self.nu)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `A_bar * v` where `A_bar = [A; nu I]`.
    pub fn stacked_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let (n, d) = self.a.shape();
        let av = &self.a * v;
        DVector::from_fn(n + d, |i, _| if i < n { av[i] } else { self.nu * v[i - n] })
    }
}

/// Exact minimizer via a Householder QR of the stacked matrix `[A; nu I]`.
/// Works for either orientation since the stack always has full column rank.
pub fn direct_solve(p: &ProblemInstance) -> Result<DVector<f64>> {
    let (n, d) = p.a.shape();
    let mut stacked = DMatrix::zeros(n + d, d);
    stacked.view_mut((0, 0), (n, d)).copy_from(&p.a);
    for j in 0..d {
        stacked[(n + j, j)] = p.nu;
    }
    let mut rhs = DVector::zeros(n + d);
    rhs.rows_mut(0, n).copy_from(&p.b);

    let qr = stacked.qr();
    let qtb = qr.q().tr_mul(&rhs);
    let r = qr.r();
    r.solve_upper_triangular(&qtb)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::NumericalBreakdown("singular R in direct solve".into()))
}

/// `d_e = |D|_F^2 / |D|_2^2` with `D_ii = s_i / sqrt(s_i^2 + nu^2)`.
pub fn effective_dimension(sigma: &[f64], nu: f64) -> Result<f64> {
    let ratios = leverage_ratios(sigma, nu)?;
    let total: f64 = ratios.iter().sum();
    let max = ratios.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(Error::InvalidInput("all singular values are zero".into()));
    }
    Ok(total / max)
}

/// The trace form `tr(A (A^T A + nu^2 I)^{-1} A^T) = |D|_F^2`, kept for
/// diagnostics alongside [`effective_dimension`].
pub fn effective_dimension_trace(sigma: &[f64], nu: f64) -> Result<f64> {
    Ok(leverage_ratios(sigma, nu)?.iter().sum())
}

fn leverage_ratios(sigma: &[f64], nu: f64) -> Result<Vec<f64>> {
    if sigma.is_empty() {
        return Err(Error::InvalidInput("empty singular value list".into()));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidInput(format!("nu must be > 0, got {nu}")));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidInput("singular values must be finite and >= 0".into()));
    }
    let nu2 = nu * nu;
    Ok(sigma.iter().map(|s| s * s / (s * s + nu2)).collect())
}

/// Prediction error `0.5 |A(x - x*)|^2 + 0.5 nu^2 |x - x*|^2`.
pub fn prediction_error(
    p: &ProblemInstance,
    x: &DVector<f64>,
    x_star: &DVector<f64>,
) -> Result<f64> {
    if x.len() != p.d() || x_star.len() != p.d() {
        return Err(Error::Shape(format!(
            "expected vectors of length {}, got {} and {}",
            p.d(),
            x.len(),
            x_star.len()
        )));
    }
    let e = x - x_star;
    let ae = &p.a * &e;
    Ok(0.5 * ae.norm_squared() + 0.5 * p.nu * p.nu * e.norm_squared())
}
