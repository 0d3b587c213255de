//! Adaptive sketch-size Polyak-IHS.
//!
//! The solver starts from a tiny sketch and doubles it whenever neither the
//! heavy-ball candidate nor the plain preconditioned gradient candidate makes
//! the progress promised by the target rates. Progress is measured through the
//! sketched Newton decrement `r_t = 0.5 g_t . H_S^{-1} g_t`, which is cheap to
//! compute alongside the search direction.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};

use crate::counters::OpCounts;
use crate::error::{Error, Result};
use crate::hessian::{gradient, newton_decrement, SketchedSystem};
use crate::problem::{Orientation, ProblemInstance};
use crate::rng::derive_seed;
use crate::sketch::{SketchConfig, SketchKind, SketchOperator};
use crate::tuning::TuningParams;

/// A regularized least-squares objective as seen by the solver: the matrix
/// that gets sketched, the regularizer and the exact gradient.
pub trait Objective {
    /// The `rows x dim` matrix `M` with `H = M^T M + nu^2 I`.
    fn data(&self) -> &DMatrix<f64>;
    fn nu(&self) -> f64;
    fn gradient(&self, x: &DVector<f64>, counts: &mut OpCounts) -> DVector<f64>;

    fn dim(&self) -> usize {
        self.data().ncols()
    }
}

impl Objective for ProblemInstance {
    fn data(&self) -> &DMatrix<f64> {
        self.a()
    }

    fn nu(&self) -> f64 {
        ProblemInstance::nu(self)
    }

    fn gradient(&self, x: &DVector<f64>, counts: &mut OpCounts) -> DVector<f64> {
        gradient(self, x, counts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    /// Try the heavy-ball candidate first, fall back to the gradient candidate.
    PolyakThenGradient,
    /// Only ever try the gradient candidate.
    GradientOnly,
}

/// What happens to the current decrement `r_t` after the sketch is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecrementRefresh {
    /// Recompute `r_t` under the new sketch.
    Recompute,
    /// Keep the value computed under the previous sketch.
    Keep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub eta: f64,
    pub sketch_kind: SketchKind,
    pub m_initial: usize,
    pub eps: f64,
    pub max_iters: usize,
    pub max_sketch: Option<usize>,
    pub mode: SolverMode,
    pub seed: u64,
    pub refresh: DecrementRefresh,
    /// Accept Gaussian `(rho, eta)` outside the range the bounds are stated for.
    pub permissive: bool,
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 0.1,
            eta: 0.01,
            sketch_kind: SketchKind::Srht,
            m_initial: 1,
            eps: 1e-10,
            max_iters: 1000,
            max_sketch: None,
            mode: SolverMode::PolyakThenGradient,
            seed: 0,
            refresh: DecrementRefresh::Recompute,
            permissive: false,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.m_initial == 0 {
            return Err(Error::InvalidInput("m_initial must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        if self.max_sketch == Some(0) {
            return Err(Error::InvalidInput("max_sketch must be >= 1".into()));
        }
        Ok(())
    }

    pub fn tuning(&self) -> Result<TuningParams> {
        TuningParams::for_sketch(self.sketch_kind, self.rho, self.eta, self.permissive)
    }

    /// Largest sketch size the solver may grow to for `rows` data rows.
    pub fn sketch_cap(&self, rows: usize) -> usize {
        let natural = match self.sketch_kind {
            SketchKind::Gaussian => rows,
            SketchKind::Srht => rows.next_power_of_two(),
        };
        self.max_sketch.map_or(natural, |c| c.min(natural))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Polyak,
    Gradient,
    Resketch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    /// Iteration index the step started from.
    pub t: usize,
    /// Sketch size in force after the step.
    pub m: usize,
    pub branch: Branch,
    /// `r_{t+1}` for accepted steps, the (possibly refreshed) `r_t` after a resketch.
    pub r: f64,
    /// Improvement ratio tested for acceptance (`NaN` for resketches).
    pub ratio: f64,
    /// `r_t` under the discarded sketch (resketch records only).
    pub r_previous_sketch: Option<f64>,
    /// Accepted with the tests disabled because the sketch hit its cap.
    pub forced: bool,
}

/// Seed and size of every sketch drawn during a solve, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchDraw {
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(serialize_with = "serialize_vector")]
    pub x: DVector<f64>,
    pub iterations: usize,
    pub rejections: usize,
    pub initial_m: usize,
    pub final_m: usize,
    pub converged: bool,
    pub sketch_exhausted: bool,
    pub r_anchor: f64,
    pub r_final: f64,
    pub tuning: TuningParams,
    pub sketch_kind: SketchKind,
    pub draws: Vec<SketchDraw>,
    pub log: Vec<StepRecord>,
    pub counts: OpCounts,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub iterates: Vec<DVector<f64>>,
}

pub(crate) fn serialize_vector<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

impl SolveReport {
    /// `r_t` at every iterate `t = 1..=T`, taken from the log.
    pub fn decrement_trace(&self) -> Vec<f64> {
        let mut out = vec![self.r_anchor];
        for rec in &self.log {
            match rec.branch {
                Branch::Polyak | Branch::Gradient => out.push(rec.r),
                Branch::Resketch => {}
            }
        }
        out
    }
}

/// Returns `true` to end a solve at the given iterate.
pub type StopProbe<'a> = &'a dyn Fn(&DVector<f64>) -> bool;

/// Optional knobs that only tests and drivers need.
#[derive(Default)]
pub struct SolveOptions<'a> {
    /// Starting point `x_0 = x_1`; zero when absent.
    pub x_init: Option<DVector<f64>>,
    /// Called on every iterate; returning `true` stops the solve as converged.
    pub stop_probe: Option<StopProbe<'a>>,
    /// Replaces the random sketch draw, e.g. with an orthogonal square matrix.
    pub sketch_override: Option<&'a dyn Fn(usize, u64) -> Result<SketchOperator>>,
    /// Replaces the step sizes and target rates derived from the config.
    pub tuning_override: Option<TuningParams>,
}

/// Runs the adaptive solver on an overdetermined instance.
pub fn adaptive_solve(p: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    adaptive_solve_with(p, cfg, SolveOptions::default())
}

pub fn adaptive_solve_with(
    p: &ProblemInstance,
    cfg: &SolverConfig,
    opts: SolveOptions<'_>,
) -> Result<SolveReport> {
    if p.orientation() != Orientation::Overdetermined {
        return Err(Error::InvalidInput(
            "underdetermined instance: use the dual solver".into(),
        ));
    }
    solve_objective(p, cfg, opts)
}

struct Sketcher<'a> {
    kind: SketchKind,
    base_seed: u64,
    rows: usize,
    data: &'a DMatrix<f64>,
    nu: f64,
    override_fn: Option<&'a dyn Fn(usize, u64) -> Result<SketchOperator>>,
    draws: Vec<SketchDraw>,
}

impl Sketcher<'_> {
    fn draw(&mut self, m: usize, counts: &mut OpCounts) -> Result<SketchedSystem> {
        let seed = derive_seed(self.base_seed, self.draws.len() as u64);
        self.draws.push(SketchDraw { m, seed });
        let op = match self.override_fn {
            Some(f) => f(m, seed)?,
            None => SketchConfig::new(self.kind, m, seed).sample(self.rows)?,
        };
        let sa = op.apply(self.data, counts)?;
        SketchedSystem::factorize(sa, self.nu, counts)
    }
}

/// Decrements below this fraction of the decrement at the origin are at the
/// rounding level of the gradient.
pub const DECREMENT_NOISE_FLOOR: f64 = 1e-28;

/// Generic driver shared by the primal and dual solvers.
pub fn solve_objective(
    obj: &dyn Objective,
    cfg: &SolverConfig,
    opts: SolveOptions<'_>,
) -> Result<SolveReport> {
    cfg.validate()?;
    let tuning = match opts.tuning_override {
        Some(t) => t,
        None => cfg.tuning()?,
    };
    let start = Instant::now();
    let data = obj.data();
    let (rows, dim) = data.shape();
    let cap = cfg.sketch_cap(rows);
    let mut counts = OpCounts::default();

    let x_init = match opts.x_init {
        Some(x) if x.len() != dim => {
            return Err(Error::Shape(format!(
                "initial point has length {}, expected {dim}",
                x.len()
            )))
        }
        Some(x) => x,
        None => DVector::zeros(dim),
    };

    let mut sketcher = Sketcher {
        kind: cfg.sketch_kind,
        base_seed: cfg.seed,
        rows,
        data,
        nu: obj.nu(),
        override_fn: opts.sketch_override,
        draws: Vec::new(),
    };
    let initial_m = cfg.m_initial.min(cap);
    let mut m = initial_m;
    let mut system = sketcher.draw(m, &mut counts)?;

    let mut x_prev = x_init.clone();
    let mut x = x_init;
    let mut g = obj.gradient(&x, &mut counts);
    let mut gt = system.solve(&g, &mut counts);
    let mut r = newton_decrement(&g, &gt)?;
    let r_anchor = r;
    let floor = {
        let g0 = obj.gradient(&DVector::zeros(dim), &mut counts);
        let g0t = system.solve(&g0, &mut counts);
        DECREMENT_NOISE_FLOOR * newton_decrement(&g0, &g0t)?.max(r_anchor)
    };
    let done = |r: f64| r <= cfg.eps * r_anchor || r <= floor;

    let mut t = 1usize;
    let mut rejections = 0usize;
    let mut exhausted = false;
    let mut log = Vec::new();
    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(x.clone());
    }

    let probe_stop = |x: &DVector<f64>| opts.stop_probe.is_some_and(|f| f(x));
    let mut converged = done(r) || probe_stop(&x);

    while !converged && t < cfg.max_iters {
        if cfg.mode == SolverMode::PolyakThenGradient {
            let xp = &x - &gt * tuning.mu_p + (&x - &x_prev) * tuning.beta_p;
            let gp = obj.gradient(&xp, &mut counts);
            let gtp = system.solve(&gp, &mut counts);
            let rp = newton_decrement(&gp, &gtp)?;
            let ratio = (rp / r_anchor).powf(1.0 / t as f64);
            if ratio <= tuning.c_p {
                log.push(StepRecord {
                    t,
                    m,
                    branch: Branch::Polyak,
                    r: rp,
                    ratio,
                    r_previous_sketch: None,
                    forced: false,
                });
                x_prev = std::mem::replace(&mut x, xp);
                (g, gt, r) = (gp, gtp, rp);
                t += 1;
                if cfg.record_iterates {
                    iterates.push(x.clone());
                }
                converged = done(r) || probe_stop(&x);
                continue;
            }
        }

        let xg = &x - &gt * tuning.mu_gd;
        let gg = obj.gradient(&xg, &mut counts);
        let gtg = system.solve(&gg, &mut counts);
        let rg = newton_decrement(&gg, &gtg)?;
        let ratio = rg / r;
        let at_cap = m >= cap;
        if ratio <= tuning.c_gd || at_cap {
            if at_cap && ratio > tuning.c_gd {
                exhausted = true;
            }
            log.push(StepRecord {
                t,
                m,
                branch: Branch::Gradient,
                r: rg,
                ratio,
                r_previous_sketch: None,
                forced: ratio > tuning.c_gd,
            });
            x_prev = std::mem::replace(&mut x, xg);
            (g, gt, r) = (gg, gtg, rg);
            t += 1;
            if cfg.record_iterates {
                iterates.push(x.clone());
            }
            converged = done(r) || probe_stop(&x);
            continue;
        }

        m = (2 * m).min(cap);
        rejections += 1;
        system = sketcher.draw(m, &mut counts)?;
        gt = system.solve(&g, &mut counts);
        let r_old = r;
        if cfg.refresh == DecrementRefresh::Recompute {
            r = newton_decrement(&g, &gt)?;
        }
        log.push(StepRecord {
            t,
            m,
            branch: Branch::Resketch,
            r,
            ratio: f64::NAN,
            r_previous_sketch: Some(r_old),
            forced: false,
        });
        if done(r) {
            converged = true;
        }
    }

    Ok(SolveReport {
        x,
        iterations: t,
        rejections,
        initial_m,
        final_m: m,
        converged,
        sketch_exhausted: exhausted,
        r_anchor,
        r_final: r,
        tuning,
        sketch_kind: cfg.sketch_kind,
        draws: sketcher.draws,
        log,
        counts,
        wall_time_s: start.elapsed().as_secs_f64(),
        iterates,
    })
}
