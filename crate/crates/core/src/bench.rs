//! Regularization-path driver and solver comparison harness.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{cg_solve, pcg_solve, PcgConfig};
use crate::data::{DataSource, Dataset};
use crate::dual::solve_underdetermined_with;
use crate::error::{Error, Result};
use crate::problem::{direct_solve, prediction_error, Orientation, ProblemInstance};
use crate::rng::derive_seed;
use crate::sketch::SketchKind;
use crate::solver::{adaptive_solve_with, SolveOptions, SolverConfig, SolverMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "kebab-case")]
pub enum SolverSpec {
    Adaptive {
        kind: SketchKind,
        mode: SolverMode,
        rho: f64,
        eta: f64,
        m_initial: usize,
    },
    Cg,
    Pcg {
        kind: SketchKind,
        rho: f64,
    },
}

impl SolverSpec {
    pub fn adaptive(kind: SketchKind, mode: SolverMode, rho: f64) -> Self {
        SolverSpec::Adaptive {
            kind,
            mode,
            rho,
            eta: 0.01,
            m_initial: 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SolverSpec::Adaptive { kind, mode, .. } => match mode {
                SolverMode::PolyakThenGradient => format!("adaptive-{kind}"),
                SolverMode::GradientOnly => format!("adaptive-gd-{kind}"),
            },
            SolverSpec::Cg => "cg".into(),
            SolverSpec::Pcg { kind, .. } => format!("pcg-{kind}"),
        }
    }
}

/// How the exact solution is used during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    Off,
    /// Record the prediction error of every returned solution.
    Record,
    /// Record it and stop adaptive solves once `delta_t / delta_1 <= eps`,
    /// in place of the decrement test.
    Stop,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub eps: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub oracle: OracleMode,
    pub warm_start: bool,
    /// Accept Gaussian `(rho, eta)` outside the stated range.
    pub permissive: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            eps: 1e-10,
            seed: 0,
            max_iters: 1000,
            oracle: OracleMode::Off,
            warm_start: true,
            permissive: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathStep {
    pub nu: f64,
    pub iterations: usize,
    pub final_m: Option<usize>,
    pub rejections: Option<usize>,
    pub converged: bool,
    pub wall_time_s: f64,
    pub cumulative_time_s: f64,
    /// Prediction error of the returned point relative to that of the start.
    pub delta_ratio: Option<f64>,
    /// `|A_bar (x - x*)| / |A_bar x*|`.
    pub relative_error: Option<f64>,
    pub error: Option<String>,
    #[serde(serialize_with = "crate::solver::serialize_vector")]
    pub x: DVector<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathResult {
    pub solver: SolverSpec,
    pub steps: Vec<PathStep>,
}

impl PathResult {
    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.converged && s.error.is_none())
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    pub fn max_m(&self) -> Option<usize> {
        self.steps.iter().filter_map(|s| s.final_m).max()
    }

    pub fn total_time_s(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_time_s)
    }
}

/// `{10^hi, ..., 10^lo}` in decreasing order.
pub fn decade_path(hi: i32, lo: i32) -> Vec<f64> {
    (lo..=hi).rev().map(|j| 10f64.powi(j)).collect()
}

/// `{1, ..., 1e-4}` for synthetic data, `{1e4, ..., 1e-2}` otherwise.
pub fn default_path(source: DataSource) -> Vec<f64> {
    match source {
        DataSource::SyntheticExp | DataSource::SyntheticPoly => decade_path(0, -4),
        DataSource::CsvFile | DataSource::LibsvmFile => decade_path(4, -2),
    }
}

fn check_path(nus: &[f64]) -> Result<()> {
    if nus.is_empty() {
        return Err(Error::InvalidInput("empty regularization path".into()));
    }
    if nus.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("path values must be finite and > 0".into()));
    }
    if nus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("path must be strictly decreasing".into()));
    }
    Ok(())
}

struct SingleSolve {
    x: DVector<f64>,
    iterations: usize,
    final_m: Option<usize>,
    rejections: Option<usize>,
    converged: bool,
}

fn solve_once(
    p: &ProblemInstance,
    spec: &SolverSpec,
    opts: &RunOptions,
    x_init: Option<DVector<f64>>,
    x_star: Option<&DVector<f64>>,
) -> Result<SingleSolve> {
    match spec {
        SolverSpec::Adaptive {
            kind,
            mode,
            rho,
            eta,
            m_initial,
        } => {
            let cfg = SolverConfig {
                rho: *rho,
                eta: *eta,
                sketch_kind: *kind,
                m_initial: *m_initial,
                eps: opts.eps,
                max_iters: opts.max_iters,
                mode: *mode,
                seed: opts.seed,
                permissive: opts.permissive,
                ..SolverConfig::default()
            };
            let start_delta = match (x_star, p.orientation()) {
                (Some(xs), Orientation::Overdetermined) if opts.oracle == OracleMode::Stop => {
                    let x0 = x_init.clone().unwrap_or_else(|| DVector::zeros(p.d()));
                    Some((xs, prediction_error(p, &x0, xs)?))
                }
                _ => None,
            };
            let probe = |x: &DVector<f64>| match start_delta {
                Some((xs, d1)) => prediction_error(p, x, xs).is_ok_and(|d| d <= opts.eps * d1),
                None => false,
            };
            let cfg = match start_delta {
                // the oracle probe replaces the decrement test
                Some(_) => SolverConfig { eps: f64::MIN_POSITIVE, ..cfg },
                None => cfg,
            };
            let sopts = SolveOptions {
                stop_probe: start_delta.is_some().then_some(&probe as &dyn Fn(&DVector<f64>) -> bool),
                ..SolveOptions::default()
            };
            match p.orientation() {
                Orientation::Overdetermined => {
                    let rep = adaptive_solve_with(p, &cfg, SolveOptions { x_init, ..sopts })?;
                    Ok(SingleSolve {
                        x: rep.x,
                        iterations: rep.iterations,
                        final_m: Some(rep.final_m),
                        rejections: Some(rep.rejections),
                        converged: rep.converged,
                    })
                }
                Orientation::Underdetermined => {
                    let rep = solve_underdetermined_with(p, &cfg, sopts)?;
                    Ok(SingleSolve {
                        x: rep.x,
                        iterations: rep.dual.iterations,
                        final_m: Some(rep.dual.final_m),
                        rejections: Some(rep.dual.rejections),
                        converged: rep.dual.converged,
                    })
                }
            }
        }
        SolverSpec::Cg => {
            let rep = cg_solve(p, opts.eps.sqrt(), opts.max_iters, x_init.as_ref())?;
            Ok(SingleSolve {
                x: rep.x,
                iterations: rep.iterations,
                final_m: None,
                rejections: None,
                converged: rep.converged,
            })
        }
        SolverSpec::Pcg { kind, rho } => {
            let cfg = PcgConfig {
                kind: *kind,
                rho: *rho,
                seed: opts.seed,
                m: None,
            };
            let rep = pcg_solve(p, &cfg, opts.eps.sqrt(), opts.max_iters, x_init.as_ref())?;
            Ok(SingleSolve {
                x: rep.x,
                iterations: rep.iterations,
                final_m: rep.m,
                rejections: None,
                converged: rep.converged,
            })
        }
    }
}

/// Solves along a strictly decreasing path of regularizers, warm-starting each
/// solve at the previous solution. Failures are recorded and the path goes on.
pub fn run_path(dataset: &Dataset, nus: &[f64], spec: &SolverSpec, opts: &RunOptions) -> Result<PathResult> {
    check_path(nus)?;
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {}", opts.eps)));
    }
    let mut steps = Vec::with_capacity(nus.len());
    let mut cumulative = 0.0;
    let mut warm: Option<DVector<f64>> = None;
    for &nu in nus {
        let start = Instant::now();
        let outcome = (|| {
            let p = dataset.to_problem(nu)?;
            let x_star = match opts.oracle {
                OracleMode::Off => None,
                _ => Some(direct_solve(&p)?),
            };
            let x_init = if opts.warm_start { warm.clone() } else { None };
            let solved = solve_once(&p, spec, opts, x_init.clone(), x_star.as_ref())?;
            let errs = match &x_star {
                Some(xs) => {
                    let x0 = x_init.unwrap_or_else(|| DVector::zeros(p.d()));
                    let d0 = prediction_error(&p, &x0, xs)?;
                    let dt = prediction_error(&p, &solved.x, xs)?;
                    let scale = 2.0 * prediction_error(&p, &DVector::zeros(p.d()), &-xs)?;
                    let ratio = if d0 > 0.0 { dt / d0 } else { 0.0 };
                    let rel = if scale > 0.0 { (2.0 * dt / scale).sqrt() } else { 0.0 };
                    Some((ratio, rel))
                }
                None => None,
            };
            Ok::<_, Error>((solved, errs))
        })();
        let elapsed = start.elapsed().as_secs_f64();
        cumulative += elapsed;
        match outcome {
            Ok((solved, errs)) => {
                warm = Some(solved.x.clone());
                steps.push(PathStep {
                    nu,
                    iterations: solved.iterations,
                    final_m: solved.final_m,
                    rejections: solved.rejections,
                    converged: solved.converged,
                    wall_time_s: elapsed,
                    cumulative_time_s: cumulative,
                    delta_ratio: errs.map(|e| e.0),
                    relative_error: errs.map(|e| e.1),
                    error: None,
                    x: solved.x,
                });
            }
            Err(e) => steps.push(PathStep {
                nu,
                iterations: 0,
                final_m: None,
                rejections: None,
                converged: false,
                wall_time_s: elapsed,
                cumulative_time_s: cumulative,
                delta_ratio: None,
                relative_error: None,
                error: Some(e.to_string()),
                x: warm.clone().unwrap_or_else(|| DVector::zeros(dataset.meta.d)),
            }),
        }
    }
    Ok(PathResult {
        solver: spec.clone(),
        steps,
    })
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Summary::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Summary { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub solver: String,
    pub spec: SolverSpec,
    pub repeats: usize,
    pub failures: usize,
    pub not_converged: usize,
    pub wall_time_s: Summary,
    pub iterations: Summary,
    pub final_m: Option<Summary>,
    /// Largest relative error over repeats and path steps (oracle modes only).
    pub worst_relative_error: Option<f64>,
    /// Per path step: `(nu, mean cumulative time, mean iterations, mean m)`.
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub nu: f64,
    pub cumulative_time_s: f64,
    pub iterations: f64,
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub provenance: String,
    pub nus: Vec<f64>,
    pub eps: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn any_failure(&self) -> bool {
        self.rows.iter().any(|r| r.failures > 0 || r.not_converged > 0)
    }
}

/// Runs every solver `repeats` times (seed `derive_seed(base_seed, r)`) over
/// the path `nus` and aggregates the results.
pub fn compare_solvers(
    dataset: &Dataset,
    nus: &[f64],
    specs: &[SolverSpec],
    opts: &RunOptions,
    repeats: usize,
) -> Result<ComparisonReport> {
    check_path(nus)?;
    if repeats == 0 || specs.is_empty() {
        return Err(Error::InvalidInput("need at least one solver and one repeat".into()));
    }
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let runs: Vec<Result<PathResult>> = (0..repeats)
            .into_par_iter()
            .map(|r| {
                let o = RunOptions {
                    seed: derive_seed(opts.seed, r as u64),
                    ..opts.clone()
                };
                run_path(dataset, nus, spec, &o)
            })
            .collect();
        let mut ok = Vec::new();
        let mut failures = 0;
        for run in runs {
            match run {
                Ok(p) if p.steps.iter().all(|s| s.error.is_none()) => ok.push(p),
                _ => failures += 1,
            }
        }
        let times: Vec<f64> = ok.iter().map(|p| p.total_time_s()).collect();
        let iters: Vec<f64> = ok.iter().map(|p| p.total_iterations() as f64).collect();
        let ms: Vec<f64> = ok.iter().filter_map(|p| p.max_m().map(|m| m as f64)).collect();
        let worst = ok
            .iter()
            .flat_map(|p| p.steps.iter().filter_map(|s| s.relative_error))
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
        let series = (0..nus.len())
            .map(|i| {
                let col = |f: &dyn Fn(&PathStep) -> Option<f64>| {
                    let v: Vec<f64> = ok.iter().filter_map(|p| f(&p.steps[i])).collect();
                    (!v.is_empty()).then(|| Summary::of(&v).mean)
                };
                SeriesPoint {
                    nu: nus[i],
                    cumulative_time_s: col(&|s| Some(s.cumulative_time_s)).unwrap_or(f64::NAN),
                    iterations: col(&|s| Some(s.iterations as f64)).unwrap_or(f64::NAN),
                    m: col(&|s| s.final_m.map(|m| m as f64)),
                }
            })
            .collect();
        rows.push(ComparisonRow {
            solver: spec.label(),
            spec: spec.clone(),
            repeats,
            failures,
            not_converged: ok.iter().filter(|p| !p.all_converged()).count(),
            wall_time_s: Summary::of(&times),
            iterations: Summary::of(&iters),
            final_m: (!ms.is_empty()).then(|| Summary::of(&ms)),
            worst_relative_error: worst,
            series,
        });
    }
    Ok(ComparisonReport {
        provenance: dataset.meta.provenance.clone(),
        nus: nus.to_vec(),
        eps: opts.eps,
        rows,
    })
}

/// Long-format plot data: one row per (solver, nu).
pub const PLOT_HEADER: [&str; 5] = ["solver", "nu", "cumulative_time_s", "iterations", "m"];

pub fn write_plot_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(PLOT_HEADER).map_err(io)?;
    for row in &report.rows {
        for pt in &row.series {
            w.write_record([
                row.solver.clone(),
                format!("{:e}", pt.nu),
                format!("{}", pt.cumulative_time_s),
                format!("{}", pt.iterations),
                pt.m.map_or(String::new(), |m| format!("{m}")),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}
