//! The sketched Hessian `H_S = (SA)^T (SA) + nu^2 I` and its cached inverse.
//!
//! When `m < d` the factor is the Cholesky of the `m x m` matrix
//! `nu^2 I_m + SA SA^T` and solves go through the Woodbury identity
//!
//! ```text
//! H_S^{-1} g = (g - SA^T (nu^2 I_m + SA SA^T)^{-1} SA g) / nu^2
//! ```
//!
//! costing `O(md)` per solve. Otherwise the `d x d` Gram is factored directly.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::counters::OpCounts;
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    /// Cholesky of `nu^2 I_m + SA SA^T`, used when `m < d`.
    WoodburyInner,
    /// Cholesky of `SA^T SA + nu^2 I_d`, used when `m >= d`.
    DirectGram,
}

/// Negative decrements smaller than this in magnitude are rounding noise.
pub const DECREMENT_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone)]
pub struct SketchedSystem {
    sa: DMatrix<f64>,
    nu: f64,
    kind: FactorKind,
    factor: Cholesky<f64, Dyn>,
}

impl SketchedSystem {
    /// Factors `H_S`, choosing the branch by `m < d`.
    pub fn factorize(sa: DMatrix<f64>, nu: f64, counts: &mut OpCounts) -> Result<Self> {
        let kind = if sa.nrows() < sa.ncols() {
            FactorKind::WoodburyInner
        } else {
            FactorKind::DirectGram
        };
        Self::factorize_as(sa, nu, kind, counts)
    }

    /// Factors `H_S` with an explicit branch.
    pub fn factorize_as(
        sa: DMatrix<f64>,
        nu: f64,
        kind: FactorKind,
        counts: &mut OpCounts,
    ) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidInput(format!("nu must be > 0, got {nu}")));
        }
        if sa.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in sketched matrix".into()));
        }
        let (m, d) = sa.shape();
        let nu2 = nu * nu;
        let (mat, cost) = match kind {
            FactorKind::WoodburyInner => {
                let mut inner = &sa * sa.transpose();
                for i in 0..m {
                    inner[(i, i)] += nu2;
                }
                (inner, (m * m * d + m * m * m / 3) as u64)
            }
            FactorKind::DirectGram => {
                let mut gram = sa.tr_mul(&sa);
                for i in 0..d {
                    gram[(i, i)] += nu2;
                }
                (gram, (m * d * d + d * d * d / 3) as u64)
            }
        };
        counts.factor += cost;
        let factor = mat
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("sketched Hessian not positive definite".into()))?;
        Ok(SketchedSystem { sa, nu, kind, factor })
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn sa(&self) -> &DMatrix<f64> {
        &self.sa
    }

    pub fn m(&self) -> usize {
        self.sa.nrows()
    }

    pub fn d(&self) -> usize {
        self.sa.ncols()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `H_S^{-1} g`.
    pub fn solve(&self, g: &DVector<f64>, counts: &mut OpCounts) -> DVector<f64> {
        let (m, d) = self.sa.shape();
        match self.kind {
            FactorKind::WoodburyInner => {
                let w = &self.sa * g;
                let y = self.factor.solve(&w);
                let z = self.sa.tr_mul(&y);
                counts.solve += (2 * m * d + m * m + d) as u64;
                (g - z) / (self.nu * self.nu)
            }
            FactorKind::DirectGram => {
                counts.solve += (d * d) as u64;
                self.factor.solve(g)
            }
        }
    }

    /// `H_S z` computed from `SA` (for residual checks).
    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        self.sa.tr_mul(&(&self.sa * z)) + z * (self.nu * self.nu)
    }
}

/// `A^T (A x - b) + nu^2 x`.
pub fn gradient(p: &ProblemInstance, x: &DVector<f64>, counts: &mut OpCounts) -> DVector<f64> {
    counts.matvec += 2 * (p.n() * p.d()) as u64;
    let r = p.a() * x - p.b();
    p.a().tr_mul(&r) + x * (p.nu() * p.nu())
}

/// Sketched Newton decrement `0.5 g . H_S^{-1} g`.
pub fn newton_decrement(g: &DVector<f64>, g_tilde: &DVector<f64>) -> Result<f64> {
    let r = 0.5 * g.dot(g_tilde);
    if r.is_nan() || r < DECREMENT_FLOOR {
        return Err(Error::NumericalBreakdown(format!(
            "negative sketched Newton decrement {r:e}"
        )));
    }
    Ok(r.max(0.0))
}
