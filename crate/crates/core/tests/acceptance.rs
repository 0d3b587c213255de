//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use ridge_sketch::baselines::{cg_solve, pcg_sketch_size, pcg_solve, PcgConfig};
use ridge_sketch::counters::OpCounts;
use ridge_sketch::data::{generate_synthetic, SpectrumDecay};
use ridge_sketch::dual::{kernel_solve, solve_underdetermined};
use ridge_sketch::hessian::{gradient, newton_decrement, FactorKind, SketchedSystem};
use ridge_sketch::ihs::{fixed_sketch_ihs, error_recursion, StepRule};
use ridge_sketch::lab::{cs_spectrum, ALMOST_SURE_TOL, run_gaussian_trials, run_srht_trials, Spectrum, TrialConfig};
use ridge_sketch::oracle::symmetric_extremes;
use ridge_sketch::rng::substream;
use ridge_sketch::sketch::{SketchConfig, SketchKind};
use ridge_sketch::solver::{adaptive_solve, DecrementRefresh, SolveReport, SolverConfig, SolverMode};
use ridge_sketch::tuning::{
    aspect_factor, predicted_iterations, rates_from_bounds, srht_oversampling, srht_targets,
    TuningParams,
};
use ridge_sketch::{direct_solve, ProblemInstance};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian_matrix(rng: &mut impl Rng, n: usize, d: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

fn gaussian_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Random tall instance with geometrically scaled columns.
fn random_instance(seed: u64, n: usize, d: usize, nu: f64) -> ProblemInstance {
    let mut rng = substream(seed, 11);
    let mut a = gaussian_matrix(&mut rng, n, d, 1.0 / (n as f64).sqrt());
    for j in 0..d {
        a.column_mut(j).scale_mut(0.9f64.powi(j as i32));
    }
    let b = gaussian_vector(&mut rng, n);
    ProblemInstance::from_shape(a, b, nu).unwrap()
}

fn half_sq(v: &DVector<f64>) -> f64 {
    0.5 * v.norm_squared()
}

// ---------------------------------------------------------------- criterion 1

fn closed_form_rate() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 1..=99 {
        let rho = k as f64 / 100.0;
        let (lo, hi) = srht_targets(rho).map_err(|e| e.to_string())?;
        let params = rates_from_bounds(lo, hi).map_err(|e| e.to_string())?;
        worst = worst.max((params.c_gd - rho).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-14 && elapsed < 1.0,
        format!("max |c_gd - rho| = {worst:.2e} over 99 grid points, {elapsed:.3}s"),
    )
}

// ---------------------------------------------------------------- criterion 2

fn decrement_matches_oracle() -> Outcome {
    let start = Instant::now();
    let errors: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(1000 + i, 0);
            let d = rng.random_range(2..=64);
            let n = rng.random_range(d..=256);
            let nu = rng.random_range(0.05..2.0);
            let p = random_instance(1000 + i, n, d, nu);
            let kind = if i % 2 == 0 { SketchKind::Gaussian } else { SketchKind::Srht };
            let m = rng.random_range(1..=2 * d);
            let op = SketchConfig::new(kind, m, 77 + i).sample(n).unwrap();
            let x = gaussian_vector(&mut rng, d);
            let mut counts = OpCounts::default();
            let g = gradient(&p, &x, &mut counts);
            let sa = op.apply(p.a(), &mut counts).unwrap();
            let system = SketchedSystem::factorize(sa, nu, &mut counts).unwrap();
            let r = newton_decrement(&g, &system.solve(&g, &mut counts)).unwrap();
            let oracle = p.oracle().unwrap();
            let cs = oracle.build_cs(&op).unwrap();
            let reference = oracle.decrement_from_cs(&p, &cs, &x).unwrap();
            (r - reference).abs() / reference.abs()
        })
        .collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && elapsed < 30.0,
        format!("50 instances, max relative gap {worst:.2e}, {elapsed:.2}s"),
    )
}

// ---------------------------------------------------------------- criterion 3

fn per_step_contraction() -> Outcome {
    let start = Instant::now();
    let results: Vec<(usize, f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let n = 256;
            let d = 24 + (i as usize % 4) * 8;
            let p = random_instance(2000 + i, n, d, 0.05);
            let kind = if i % 2 == 0 { SketchKind::Gaussian } else { SketchKind::Srht };
            // m = d keeps c_gd near 0.8-0.97, so 50 steps stay clear of rounding
            let op = SketchConfig::new(kind, d, 300 + i).sample(n).unwrap();
            let oracle = p.oracle().unwrap();
            let (gd, g1) = symmetric_extremes(&oracle.build_cs(&op).unwrap());
            let params = rates_from_bounds(0.99 * gd, 1.01 * g1).unwrap();
            let xs = fixed_sketch_ihs(&p, &op, &params, 50, StepRule::Gradient, None).unwrap();
            let deltas: Vec<f64> =
                xs.iter().map(|x| half_sq(&oracle.error_coordinates(&p, x))).collect();
            let mut violations = 0;
            let mut worst = 0.0f64;
            for w in deltas.windows(2) {
                let ratio = w[1] / w[0];
                worst = worst.max(ratio);
                if ratio > params.c_gd {
                    violations += 1;
                }
            }
            (violations, worst, params.c_gd)
        })
        .collect();
    let violations: usize = results.iter().map(|r| r.0).sum();
    let slack = results.iter().map(|r| r.1 / r.2).fold(0.0, f64::max);
    let rates = results.iter().map(|r| r.2);
    let (lo, hi) = rates.fold((1.0f64, 0.0f64), |(a, b), c| (a.min(c), b.max(c)));
    let elapsed = start.elapsed().as_secs_f64();
    check(
        violations == 0 && elapsed < 60.0,
        format!(
            "1000 steps, {violations} violations, c_gd in [{lo:.3}, {hi:.3}], max ratio/c_gd {slack:.3}, {elapsed:.2}s"
        ),
    )
}

// ---------------------------------------------------------------- criterion 4

fn error_recursion_matches() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let n = 128;
        let d = 8 + 2 * i as usize;
        let p = random_instance(3000 + i, n, d, 0.3);
        let kind = if i % 2 == 0 { SketchKind::Srht } else { SketchKind::Gaussian };
        let op = SketchConfig::new(kind, 3 * d, 400 + i).sample(n).unwrap();
        let oracle = p.oracle().unwrap();
        let cs = oracle.build_cs(&op).unwrap();
        let params = TuningParams::for_sketch(SketchKind::Srht, 0.25, 0.01, false).unwrap();
        for rule in [StepRule::HeavyBall, StepRule::Gradient] {
            let (mu, beta) = rule.coefficients(&params);
            let xs = fixed_sketch_ihs(&p, &op, &params, 20, rule, None).unwrap();
            let es: Vec<DVector<f64>> = xs.iter().map(|x| oracle.error_coordinates(&p, x)).collect();
            let scale = es[0].norm();
            let mut prev = es[0].clone();
            for t in 0..20 {
                let predicted = error_recursion(&cs, mu, beta, &es[t], &prev).unwrap();
                worst = worst.max((&predicted - &es[t + 1]).norm() / scale);
                prev = es[t].clone();
            }
        }
    }
    check(
        worst <= 1e-9,
        format!("10 instances x 20 steps x 2 rules, max relative gap {worst:.2e}"),
    )
}

// ---------------------------------------------------------------- criterion 5

fn gaussian_monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for spectrum in [Spectrum::Flat { d: 64, value: 1.0 }, Spectrum::Exponential { d: 64 }] {
        let cfg = TrialConfig {
            spectrum: spectrum.clone(),
            n: 1024,
            nu: 0.1,
            kind: SketchKind::Gaussian,
            rho: 0.1,
            eta: 0.01,
            trials: 200,
            base_seed: 5,
            basis_seed: 17,
            m: None,
        };
        let rep = run_gaussian_trials(&cfg).map_err(|e| e.to_string())?;
        ok &= rep.pass && rep.almost_sure_violations == 0;
        lines.push(format!(
            "{}: m={} freq={:.3} bound={:.3}+{:.3} floor-violations={}",
            match spectrum {
                Spectrum::Flat { .. } => "flat",
                _ => "exp",
            },
            rep.m,
            rep.empirical_frequency,
            rep.failure_probability,
            rep.margin,
            rep.almost_sure_violations
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 300.0;
    check(ok, format!("{}; {elapsed:.1}s", lines.join("; ")))
}

// ---------------------------------------------------------------- criterion 6

fn srht_monte_carlo() -> Outcome {
    let mut cfg = TrialConfig {
        spectrum: Spectrum::StepTop { d: 32, high_count: 16, high: 1.0, low: 1e-3 },
        n: 1024,
        nu: 0.1,
        kind: SketchKind::Srht,
        rho: 0.5,
        eta: 0.01,
        trials: 200,
        base_seed: 6,
        basis_seed: 19,
        m: None,
    };
    let prescribed = run_srht_trials(&cfg).map_err(|e| e.to_string())?;
    let de = prescribed.d_eff;
    let (rep, bound_part) = if prescribed.infeasible {
        // The probability bound is out of reach; the almost-sure claims hold
        // for any m, so they are checked at the size without the oversampling factor.
        cfg.m = Some((de * de.ln() / cfg.rho).ceil() as usize);
        let rep = run_srht_trials(&cfg).map_err(|e| e.to_string())?;
        let note = format!(
            "prescribed m={} > n_pad (flagged, bound not asserted; at m={} freq={:.3} vs {:.3}+{:.3})",
            prescribed.prescribed_m, rep.m, rep.empirical_frequency, rep.failure_probability, rep.margin
        );
        (rep, (true, note))
    } else {
        let note = format!(
            "m={} freq={:.3} bound={:.3}+{:.3}",
            prescribed.m, prescribed.empirical_frequency, prescribed.failure_probability, prescribed.margin
        );
        let pass = prescribed.pass;
        (prescribed, (pass, note))
    };
    let max_gamma = rep.trials.iter().map(|t| t.gamma_max).fold(0.0, f64::max);
    let min_gamma = rep.trials.iter().map(|t| t.gamma_min).fold(f64::INFINITY, f64::min);
    let above_two = rep.trials.iter().filter(|t| t.gamma_max > 2.0 + ALMOST_SURE_TOL).count();
    check(
        bound_part.0 && rep.almost_sure_violations == 0,
        format!(
            "d_e={de:.2}, {}; {} trials: gamma range [{min_gamma:.3}, {max_gamma:.3}], floor 1-|D|^2={:.3}, gamma_1 > 2 in {above_two}, almost-sure violations {}",
            bound_part.1,
            rep.trials.len(),
            1.0 - rep.dnorm2,
            rep.almost_sure_violations
        ),
    )
}

// ------------------------------------------------------------ criteria 7 to 9

struct AdaptiveSuite {
    p: ProblemInstance,
    d_eff: f64,
    gaussian: Vec<SolveReport>,
    srht: Vec<SolveReport>,
}

fn adaptive_suite() -> AdaptiveSuite {
    let data = generate_synthetic(SpectrumDecay::Exp, 1024, 128, 7).unwrap();
    let p = data.to_problem(0.1).unwrap();
    let d_eff = p.oracle().unwrap().d_eff();
    let run = |kind: SketchKind| -> Vec<SolveReport> {
        (0..100u64)
            .into_par_iter()
            .map(|seed| {
                let cfg = SolverConfig {
                    rho: 0.1,
                    eta: 0.01,
                    sketch_kind: kind,
                    m_initial: 1,
                    eps: 1e-10,
                    seed,
                    refresh: DecrementRefresh::Recompute,
                    record_iterates: kind == SketchKind::Srht,
                    ..SolverConfig::default()
                };
                adaptive_solve(&p, &cfg).unwrap()
            })
            .collect()
    };
    let gaussian = run(SketchKind::Gaussian);
    let srht = run(SketchKind::Srht);
    AdaptiveSuite { p, d_eff, gaussian, srht }
}

fn adaptive_bounds(s: &AdaptiveSuite) -> Outcome {
    let de = s.d_eff;
    let m_bound = 10.0 * de / 0.1;
    let k_bound = (5.0 * de / 0.1).log2() + 1.0;
    let good = s
        .gaussian
        .iter()
        .filter(|r| r.final_m as f64 <= m_bound && r.rejections as f64 <= k_bound)
        .count();
    let max_m = s.gaussian.iter().map(|r| r.final_m).max().unwrap_or(0);
    let max_k = s.gaussian.iter().map(|r| r.rejections).max().unwrap_or(0);
    let n_pad = s.p.n().next_power_of_two();
    let m_bar = aspect_factor(0.1).unwrap() * srht_oversampling(s.p.n(), de) * de * de.ln() / 0.1;
    let srht_note = if 2.0 * m_bar > n_pad as f64 {
        format!("SRHT skipped: bound {:.0} > n_pad {n_pad} (flagged)", 2.0 * m_bar)
    } else {
        let k_srht = m_bar.log2() + 1.0;
        let good_srht = s
            .srht
            .iter()
            .filter(|r| r.final_m as f64 <= 2.0 * m_bar && r.rejections as f64 <= k_srht)
            .count();
        if good_srht < 95 {
            return Err(format!("SRHT within bounds in {good_srht}/100 runs"));
        }
        format!("SRHT within bounds in {good_srht}/100 runs")
    };
    check(
        good >= 95,
        format!(
            "d_e={de:.2}; Gaussian within m<={m_bound:.0}, K<={k_bound:.2} in {good}/100 runs (max m {max_m}, max K {max_k}); {srht_note}"
        ),
    )
}

fn rate_envelope(s: &AdaptiveSuite) -> Outcome {
    let mut anchor_violations = 0;
    let mut runs_checked = 0;
    for rep in s.gaussian.iter().chain(s.srht.iter()) {
        runs_checked += 1;
        let trace = rep.decrement_trace();
        let c = rep.tuning.c_gd;
        for (t, r) in trace.iter().enumerate() {
            if *r > trace[0] * c.powi(t as i32) * (1.0 + 1e-12) {
                anchor_violations += 1;
            }
        }
    }
    let oracle = s.p.oracle().unwrap();
    let sigma1 = oracle.sigma_max();
    let nu = s.p.nu();
    let c_rho = rates_from_bounds(srht_targets(0.1).unwrap().0, srht_targets(0.1).unwrap().1)
        .unwrap()
        .c_gd;
    let lead = 2.0 * (1.0 + sigma1 * sigma1 / (nu * nu));
    let mut delta_violations = 0;
    let mut worst = 0.0f64;
    for rep in &s.srht {
        let deltas: Vec<f64> = rep
            .iterates
            .iter()
            .map(|x| half_sq(&oracle.error_coordinates(&s.p, x)))
            .collect();
        for (t, dt) in deltas.iter().enumerate() {
            let envelope = lead * c_rho.powi(t as i32);
            worst = worst.max(dt / deltas[0] / envelope);
            if dt / deltas[0] > envelope {
                delta_violations += 1;
            }
        }
    }
    check(
        anchor_violations == 0 && delta_violations == 0,
        format!(
            "{runs_checked} runs: anchor-decay violations {anchor_violations}, SRHT error-envelope violations {delta_violations} (max ratio to envelope {worst:.2e})"
        ),
    )
}

fn iteration_count(s: &AdaptiveSuite) -> Outcome {
    let sigma1 = s.p.oracle().unwrap().sigma_max();
    let eps = 1e-10;
    let adjustment = 1.0;
    let predicted = predicted_iterations(0.1, eps * adjustment, sigma1, s.p.nu()).unwrap() as usize;
    let mut bad = 0;
    let mut worst_excess = i64::MIN;
    for rep in &s.srht {
        let on_criterion = rep.converged && rep.r_final <= eps * rep.r_anchor;
        let excess = rep.iterations as i64 - (predicted + rep.rejections) as i64;
        worst_excess = worst_excess.max(excess);
        if !on_criterion || excess > 0 {
            bad += 1;
        }
    }
    check(
        bad == 0,
        format!(
            "predicted T={predicted}; {bad}/100 SRHT runs over T+K or not stopped on the decrement (max T-(pred+K) = {worst_excess})"
        ),
    )
}

// --------------------------------------------------------------- criterion 10

fn dual_consistency() -> Outcome {
    let errors: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(5000 + i, 0);
            let n = rng.random_range(4..=64);
            let d = rng.random_range((n + 1).max(65)..=512);
            let a = gaussian_matrix(&mut rng, n, d, 1.0 / (d as f64).sqrt());
            let b = gaussian_vector(&mut rng, n);
            let p = ProblemInstance::from_shape(a, b, 1.0).unwrap();
            let cfg = SolverConfig {
                eps: 1e-12,
                seed: i,
                sketch_kind: if i % 2 == 0 { SketchKind::Srht } else { SketchKind::Gaussian },
                ..SolverConfig::default()
            };
            let rep = solve_underdetermined(&p, &cfg).unwrap();
            let reference = kernel_solve(&p).unwrap();
            (&rep.x - &reference).norm() / reference.norm()
        })
        .collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let over = errors.iter().filter(|e| **e > 1e-6).count();
    check(
        worst <= 1e-6,
        format!("20 instances, max relative error {worst:.2e}, {over} above 1e-6"),
    )
}

// --------------------------------------------------------------- criterion 11

fn baseline_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut runs = 0;
    for decay in [SpectrumDecay::Exp, SpectrumDecay::Poly] {
        let data = generate_synthetic(decay, 1024, 32, 11).unwrap();
        for nu in [0.1, 0.01] {
            let p = data.to_problem(nu).unwrap();
            let x_star = direct_solve(&p).unwrap();
            let scale = p.stacked_apply(&x_star).norm();
            let mut xs = vec![x_star.clone()];
            xs.push(cg_solve(&p, 1e-12, 10_000, None).unwrap().x);
            for kind in [SketchKind::Gaussian, SketchKind::Srht] {
                let cfg = PcgConfig { kind, rho: 0.25, seed: 3, m: None };
                let rep = pcg_solve(&p, &cfg, 1e-12, 10_000, None).unwrap();
                if !rep.converged {
                    return Err(format!("pCG {kind} did not converge at nu={nu}"));
                }
                xs.push(rep.x);
                for mode in [SolverMode::PolyakThenGradient, SolverMode::GradientOnly] {
                    let cfg = SolverConfig {
                        sketch_kind: kind,
                        mode,
                        // the anchor sits under an m = 1 sketch and overstates the
                        // initial error by up to 1 + sigma_1^2 / nu^2
                        eps: 1e-18,
                        seed: 9,
                        ..SolverConfig::default()
                    };
                    let rep = adaptive_solve(&p, &cfg).unwrap();
                    if !rep.converged {
                        return Err(format!("adaptive {kind} {mode:?} did not converge at nu={nu}"));
                    }
                    xs.push(rep.x);
                }
            }
            for i in 0..xs.len() {
                for j in i + 1..xs.len() {
                    let gap = p.stacked_apply(&(&xs[i] - &xs[j])).norm() / scale;
                    worst = worst.max(gap);
                }
            }
            runs += 1;
        }
    }

    // Preconditioned spectrum at the default pCG size.
    let data = generate_synthetic(SpectrumDecay::Exp, 1024, 32, 11).unwrap();
    let p = data.to_problem(0.1).unwrap();
    let oracle = p.oracle().unwrap();
    let rho: f64 = 0.25;
    let m = pcg_sketch_size(SketchKind::Srht, p.d(), rho).unwrap();
    let inside = (0..100u64)
        .into_par_iter()
        .filter(|seed| {
            let op = SketchConfig::new(SketchKind::Srht, m, *seed).sample(p.n()).unwrap();
            let eig = cs_spectrum(oracle, &op).unwrap();
            let lo = eig.min();
            let hi = eig.max();
            lo >= 1.0 - rho.sqrt() && hi <= 1.0 + rho.sqrt()
        })
        .count();
    let de = oracle.d_eff();
    let needed = 1.0 - 9.0 / de - 0.1;
    let freq = inside as f64 / 100.0;
    check(
        worst <= 1e-6 && freq >= needed,
        format!(
            "{runs} problems x 8 solvers, max pairwise gap {worst:.2e}; pCG-SRHT m={m}: spectrum inside [1-sqrt(rho), 1+sqrt(rho)] in {inside}/100 (need >= {needed:.3})"
        ),
    )
}

// --------------------------------------------------------------- criterion 12

fn cost_counters() -> Outcome {
    let d = 1024;
    let mut rng = substream(12, 0);
    let mut ms = Vec::new();
    let mut costs = Vec::new();
    let mut m = 16;
    while m <= 512 {
        let sa = gaussian_matrix(&mut rng, m, d, 1.0);
        let mut setup = OpCounts::default();
        let system = SketchedSystem::factorize(sa, 0.5, &mut setup).unwrap();
        if system.kind() != FactorKind::WoodburyInner {
            return Err(format!("m={m} did not take the Woodbury branch"));
        }
        let g = gaussian_vector(&mut rng, d);
        let mut counts = OpCounts::default();
        system.solve(&g, &mut counts);
        ms.push(m as f64);
        costs.push(counts.solve as f64);
        m *= 2;
    }
    let r2 = r_squared(&ms, &costs);

    // SRHT: cost per row against n log n, and against m at fixed n.
    let cols = 4;
    let sketch_cost = |n: usize, m: usize| -> f64 {
        let mut rng = substream(n as u64, 1);
        let a = gaussian_matrix(&mut rng, n, cols, 1.0);
        let op = SketchConfig::new(SketchKind::Srht, m, 1).sample(n).unwrap();
        let mut counts = OpCounts::default();
        op.apply(&a, &mut counts).unwrap();
        counts.sketch as f64
    };
    let per_nlogn: Vec<f64> = [512usize, 2048, 8192, 32768]
        .iter()
        .map(|&n| sketch_cost(n, 64) / (cols as f64 * n as f64 * (n as f64).log2()))
        .collect();
    let spread = per_nlogn.iter().cloned().fold(0.0, f64::max)
        / per_nlogn.iter().cloned().fold(f64::INFINITY, f64::min);
    let m_growth = sketch_cost(8192, 512) / sketch_cost(8192, 8);
    check(
        r2 >= 0.99 && spread <= 1.1 && m_growth <= 1.1,
        format!(
            "Woodbury solve cost vs m: R^2={r2:.5}; SRHT cost/(n log n) spread {spread:.3} over n in 512..32768; cost(m=512)/cost(m=8) = {m_growth:.3}"
        ),
    )
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

// ---------------------------------------------------------------------- main

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {id:>2} PASS  {name} [{secs:.1}s] {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {id:>2} FAIL  {name} [{secs:.1}s] {detail}");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run(1, "closed-form SRHT rate", closed_form_rate);
    ok &= run(2, "decrement equals oracle quadratic form", decrement_matches_oracle);
    ok &= run(3, "per-step contraction of gradient IHS", per_step_contraction);
    ok &= run(4, "error recursion in whitened coordinates", error_recursion_matches);
    ok &= run(5, "Gaussian concentration Monte Carlo", gaussian_monte_carlo);
    ok &= run(6, "SRHT concentration Monte Carlo", srht_monte_carlo);
    let start = Instant::now();
    let suite = adaptive_suite();
    println!("adaptive suite: 200 solves in {:.1}s", start.elapsed().as_secs_f64());
    ok &= run(7, "adaptive sketch size and rejection bounds", || adaptive_bounds(&suite));
    ok &= run(8, "convergence-rate envelope", || rate_envelope(&suite));
    ok &= run(9, "iteration count formula", || iteration_count(&suite));
    ok &= run(10, "dual consistency", dual_consistency);
    ok &= run(11, "baseline agreement", baseline_agreement);
    ok &= run(12, "cost counters", cost_counters);
    if !ok {
        std::process::exit(1);
    }
}
