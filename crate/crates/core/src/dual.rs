//! Wide problems (`d >= n`) solved through their dual.
//!
//! The dual variable `z` lives in `R^n` and minimizes
//! `0.5 |A^T z|^2 + 0.5 nu^2 |z|^2 - b.z`, an overdetermined ridge problem with
//! data matrix `A^T`. Its gradient is `A A^T z - b + nu^2 z` and the primal
//! solution is recovered as `x = A^T z`.

use nalgebra::{DMatrix, DVector};

use crate::counters::OpCounts;
use crate::error::{Error, Result};
use crate::problem::{Orientation, ProblemInstance};
use crate::solver::{solve_objective, Objective, SolveOptions, SolveReport, SolverConfig};

pub struct DualObjective<'a> {
    at: DMatrix<f64>,
    b: &'a DVector<f64>,
    nu: f64,
}

impl<'a> DualObjective<'a> {
    pub fn new(p: &'a ProblemInstance) -> Self {
        DualObjective {
            at: p.a().transpose(),
            b: p.b(),
            nu: p.nu(),
        }
    }
}

impl Objective for DualObjective<'_> {
    fn data(&self) -> &DMatrix<f64> {
        &self.at
    }

    fn nu(&self) -> f64 {
        self.nu
    }

    fn gradient(&self, z: &DVector<f64>, counts: &mut OpCounts) -> DVector<f64> {
        let (d, n) = self.at.shape();
        counts.matvec += 2 * (n * d) as u64;
        let w = &self.at * z;
        self.at.tr_mul(&w) - self.b + z * (self.nu * self.nu)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DualReport {
    /// Primal solution `A^T z`.
    #[serde(serialize_with = "crate::solver::serialize_vector")]
    pub x: DVector<f64>,
    /// Report of the solve in the dual variable.
    pub dual: SolveReport,
}

pub fn solve_underdetermined(p: &ProblemInstance, cfg: &SolverConfig) -> Result<DualReport> {
    solve_underdetermined_with(p, cfg, SolveOptions::default())
}

pub fn solve_underdetermined_with(
    p: &ProblemInstance,
    cfg: &SolverConfig,
    opts: SolveOptions<'_>,
) -> Result<DualReport> {
    if p.orientation() != Orientation::Underdetermined {
        return Err(Error::InvalidInput(
            "overdetermined instance: use the primal solver".into(),
        ));
    }
    let obj = DualObjective::new(p);
    let dual = solve_objective(&obj, cfg, opts)?;
    let x = p.a().tr_mul(&dual.x);
    Ok(DualReport { x, dual })
}

/// `A^T (A A^T + nu^2 I)^{-1} b`, the closed form of the wide solution.
pub fn kernel_solve(p: &ProblemInstance) -> Result<DVector<f64>> {
    let a = p.a();
    let mut k = a * a.transpose();
    for i in 0..k.nrows() {
        k[(i, i)] += p.nu() * p.nu();
    }
    let chol = k
        .cholesky()
        .ok_or_else(|| Error::NumericalBreakdown("kernel matrix not positive definite".into()))?;
    Ok(a.tr_mul(&chol.solve(p.b())))
}
