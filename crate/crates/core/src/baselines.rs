//! Conjugate gradient on the regularized normal equations, plain and with a
//! sketched preconditioner.

use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use crate::counters::OpCounts;
use crate::error::{Error, Result};
use crate::hessian::{FactorKind, SketchedSystem};
use crate::problem::{Orientation, ProblemInstance};
use crate::sketch::{SketchConfig, SketchKind, SketchOperator};

#[derive(Debug, Clone, Serialize)]
pub struct CgReport {
    #[serde(serialize_with = "crate::solver::serialize_vector")]
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `|H x_k - A^T b| / |A^T b|` for `k = 0..=iterations`.
    pub residual_trace: Vec<f64>,
    pub counts: OpCounts,
    /// Work spent building the preconditioner (zero for plain CG).
    pub setup: OpCounts,
    /// Sketch size of the preconditioner, if any.
    pub m: Option<usize>,
    pub sketch_kind: Option<SketchKind>,
    pub rho: Option<f64>,
    /// The default sketch size was cut down to the padded row count.
    pub m_clamped: bool,
    pub tol: f64,
    pub wall_time_s: f64,
}

fn hessian_apply(p: &ProblemInstance, v: &DVector<f64>, counts: &mut OpCounts) -> DVector<f64> {
    counts.matvec += 2 * (p.n() * p.d()) as u64;
    p.a().tr_mul(&(p.a() * v)) + v * (p.nu() * p.nu())
}

fn check_overdetermined(p: &ProblemInstance) -> Result<()> {
    if p.orientation() != Orientation::Overdetermined {
        return Err(Error::InvalidInput("baselines expect n >= d".into()));
    }
    Ok(())
}

/// Plain CG on `(A^T A + nu^2 I) x = A^T b`. Stops once
/// `|H x - A^T b| <= tol |A^T b|`.
pub fn cg_solve(
    p: &ProblemInstance,
    tol: f64,
    max_iters: usize,
    x0: Option<&DVector<f64>>,
) -> Result<CgReport> {
    check_overdetermined(p)?;
    let start = Instant::now();
    let mut counts = OpCounts::default();
    let mut rep = pcg_core(p, tol, max_iters, x0, None, &mut counts)?;
    rep.counts = counts;
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Default preconditioner sketch size: `d / rho` (Gaussian) or
/// `d ln d / rho` (SRHT), rounded up.
pub fn pcg_sketch_size(kind: SketchKind, d: usize, rho: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho must lie in (0, 1), got {rho}")));
    }
    let d = d as f64;
    let m = match kind {
        SketchKind::Gaussian => d / rho,
        SketchKind::Srht => d * d.ln().max(1.0) / rho,
    };
    Ok(m.ceil() as usize)
}

#[derive(Debug, Clone)]
pub struct PcgConfig {
    pub kind: SketchKind,
    pub rho: f64,
    pub seed: u64,
    /// Overrides the default sketch size.
    pub m: Option<usize>,
}

/// CG preconditioned by the Cholesky factor of `(SA)^T SA + nu^2 I`. The
/// default SRHT size is capped at the padded row count.
pub fn pcg_solve(
    p: &ProblemInstance,
    cfg: &PcgConfig,
    tol: f64,
    max_iters: usize,
    x0: Option<&DVector<f64>>,
) -> Result<CgReport> {
    check_overdetermined(p)?;
    let (m, clamped) = match (cfg.m, cfg.kind) {
        (Some(m), _) => (m, false),
        (None, SketchKind::Gaussian) => (pcg_sketch_size(cfg.kind, p.d(), cfg.rho)?, false),
        (None, SketchKind::Srht) => {
            let m = pcg_sketch_size(cfg.kind, p.d(), cfg.rho)?;
            let cap = p.n().next_power_of_two();
            (m.min(cap), m > cap)
        }
    };
    let op = SketchConfig::new(cfg.kind, m, cfg.seed).sample(p.n())?;
    let mut rep = pcg_with_sketch(p, &op, tol, max_iters, x0)?;
    rep.sketch_kind = Some(cfg.kind);
    rep.rho = Some(cfg.rho);
    rep.m_clamped = clamped;
    Ok(rep)
}

/// Preconditioned CG with a caller-supplied sketch.
pub fn pcg_with_sketch(
    p: &ProblemInstance,
    op: &SketchOperator,
    tol: f64,
    max_iters: usize,
    x0: Option<&DVector<f64>>,
) -> Result<CgReport> {
    check_overdetermined(p)?;
    let start = Instant::now();
    let mut setup = OpCounts::default();
    let sa = op.apply(p.a(), &mut setup)?;
    let pre = SketchedSystem::factorize_as(sa, p.nu(), FactorKind::DirectGram, &mut setup)?;
    let mut counts = OpCounts::default();
    let mut rep = pcg_core(p, tol, max_iters, x0, Some(&pre), &mut counts)?;
    counts.merge(&setup);
    rep.counts = counts;
    rep.setup = setup;
    rep.m = Some(op.m());
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn pcg_core(
    p: &ProblemInstance,
    tol: f64,
    max_iters: usize,
    x0: Option<&DVector<f64>>,
    pre: Option<&SketchedSystem>,
    counts: &mut OpCounts,
) -> Result<CgReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be > 0, got {tol}")));
    }
    let rhs = p.a().tr_mul(p.b());
    counts.matvec += (p.n() * p.d()) as u64;
    let rhs_norm = rhs.norm();
    let mut x = match x0 {
        Some(x) if x.len() != p.d() => {
            return Err(Error::Shape(format!("x0 has length {}, expected {}", x.len(), p.d())))
        }
        Some(x) => x.clone(),
        None => DVector::zeros(p.d()),
    };
    let report = |x: DVector<f64>, iterations, converged, trace| CgReport {
        x,
        iterations,
        converged,
        residual_trace: trace,
        counts: OpCounts::default(),
        setup: OpCounts::default(),
        m: None,
        sketch_kind: None,
        rho: None,
        m_clamped: false,
        tol,
        wall_time_s: 0.0,
    };
    if rhs_norm == 0.0 {
        return Ok(report(DVector::zeros(p.d()), 0, true, vec![0.0]));
    }
    let mut r = &rhs - hessian_apply(p, &x, counts);
    let mut trace = vec![r.norm() / rhs_norm];
    if trace[0] <= tol {
        return Ok(report(x, 0, true, trace));
    }
    let precondition = |r: &DVector<f64>, counts: &mut OpCounts| match pre {
        Some(s) => s.solve(r, counts),
        None => r.clone(),
    };
    let mut z = precondition(&r, counts);
    let mut dir = z.clone();
    let mut rz = r.dot(&z);
    for k in 1..=max_iters {
        let hd = hessian_apply(p, &dir, counts);
        let curv = dir.dot(&hd);
        if !(curv > 0.0) {
            return Err(Error::NumericalBreakdown(format!("non-positive curvature {curv:e}")));
        }
        let alpha = rz / curv;
        x += &dir * alpha;
        r -= &hd * alpha;
        let res = r.norm() / rhs_norm;
        trace.push(res);
        if res <= tol {
            return Ok(report(x, k, true, trace));
        }
        z = precondition(&r, counts);
        let rz_new = r.dot(&z);
        dir = &z + &dir * (rz_new / rz);
        rz = rz_new;
    }
    Ok(report(x, max_iters, false, trace))
}
