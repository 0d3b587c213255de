//! Fixed-sketch iterative Hessian sketch, used to inspect convergence rates.

use nalgebra::{DMatrix, DVector};

use crate::counters::OpCounts;
use crate::error::Result;
use crate::hessian::{gradient, SketchedSystem};
use crate::problem::ProblemInstance;
use crate::sketch::SketchOperator;
use crate::tuning::TuningParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `mu = mu_gd`, no momentum.
    Gradient,
    /// `mu = mu_p`, `beta = beta_p`.
    HeavyBall,
}

impl StepRule {
    pub fn coefficients(self, params: &TuningParams) -> (f64, f64) {
        match self {
            StepRule::Gradient => (params.mu_gd, 0.0),
            StepRule::HeavyBall => (params.mu_p, params.beta_p),
        }
    }
}

/// Runs `steps` heavy-ball updates with one fixed sketch, starting from
/// `x_0 = x_1 = x_init`. Returns `x_1, ..., x_{steps+1}`.
pub fn fixed_sketch_ihs(
    p: &ProblemInstance,
    op: &SketchOperator,
    params: &TuningParams,
    steps: usize,
    rule: StepRule,
    x_init: Option<&DVector<f64>>,
) -> Result<Vec<DVector<f64>>> {
    let (mu, beta) = rule.coefficients(params);
    run_with_coefficients(p, op, mu, beta, steps, x_init)
}

/// Same as [`fixed_sketch_ihs`] with explicit step size and momentum.
pub fn run_with_coefficients(
    p: &ProblemInstance,
    op: &SketchOperator,
    mu: f64,
    beta: f64,
    steps: usize,
    x_init: Option<&DVector<f64>>,
) -> Result<Vec<DVector<f64>>> {
    let mut counts = OpCounts::default();
    let sa = op.apply(p.a(), &mut counts)?;
    let system = SketchedSystem::factorize(sa, p.nu(), &mut counts)?;
    let x0 = x_init.cloned().unwrap_or_else(|| DVector::zeros(p.d()));
    let mut out = Vec::with_capacity(steps + 1);
    let mut prev = x0.clone();
    let mut cur = x0;
    out.push(cur.clone());
    for _ in 0..steps {
        let g = gradient(p, &cur, &mut counts);
        let dir = system.solve(&g, &mut counts);
        let next = &cur - dir * mu + (&cur - &prev) * beta;
        prev = std::mem::replace(&mut cur, next);
        out.push(cur.clone());
    }
    Ok(out)
}

/// One step of the error dynamics in whitened coordinates:
/// `e_next = (I - mu C^{-1}) e_t + beta (e_t - e_prev)`.
pub fn error_recursion(
    cs: &DMatrix<f64>,
    mu: f64,
    beta: f64,
    e_t: &DVector<f64>,
    e_prev: &DVector<f64>,
) -> Result<DVector<f64>> {
    let chol = cs.clone().cholesky().ok_or_else(|| {
        crate::error::Error::NumericalBreakdown("C_S not positive definite".into())
    })?;
    Ok(e_t - chol.solve(e_t) * mu + (e_t - e_prev) * beta)
}
