//! Monte Carlo checks of the extreme eigenvalues of `C_S` against their
//! closed-form concentration bounds.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{synthetic_matrix, SpectrumDecay};
use crate::error::{Error, Result};
use crate::oracle::{symmetric_extremes, SpectralOracle};
use crate::rng::derive_seed;
use crate::sketch::{SketchConfig, SketchKind, SketchOperator};
use crate::tuning::{gaussian_concentration_bounds, srht_oversampling, srht_concentration_bounds};

/// Slack for the almost-sure eigenvalue checks.
pub const ALMOST_SURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Spectrum {
    Explicit { sigma: Vec<f64> },
    Exponential { d: usize },
    Polynomial { d: usize },
    Flat { d: usize, value: f64 },
    /// `high_count` values equal to `high` followed by values equal to `low`.
    StepTop { d: usize, high_count: usize, high: f64, low: f64 },
}

impl Spectrum {
    pub fn singular_values(&self) -> Vec<f64> {
        match self {
            Spectrum::Explicit { sigma } => sigma.clone(),
            Spectrum::Exponential { d } => SpectrumDecay::Exp.singular_values(*d),
            Spectrum::Polynomial { d } => SpectrumDecay::Poly.singular_values(*d),
            Spectrum::Flat { d, value } => vec![*value; *d],
            Spectrum::StepTop {
                d,
                high_count,
                high,
                low,
            } => (0..*d).map(|i| if i < *high_count { *high } else { *low }).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialConfig {
    pub spectrum: Spectrum,
    pub n: usize,
    pub nu: f64,
    pub kind: SketchKind,
    pub rho: f64,
    pub eta: f64,
    pub trials: usize,
    pub base_seed: u64,
    /// Seed of the orthonormal factors of the test matrix.
    pub basis_seed: u64,
    /// Overrides the sketch size the bound prescribes.
    pub m: Option<usize>,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        let d = self.spectrum.singular_values().len();
        if d == 0 || self.n < d {
            return Err(Error::InvalidInput(format!(
                "need n >= d >= 1, got n = {}, d = {d}",
                self.n
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidInput(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        Ok(())
    }

    /// Spectral oracle of `U diag(sigma) V^T` with seeded factors.
    pub fn oracle(&self) -> Result<SpectralOracle> {
        self.validate()?;
        let a = synthetic_matrix(&self.spectrum.singular_values(), self.n, self.basis_seed);
        SpectralOracle::new(&a, &DVector::zeros(self.n), self.nu)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub violates_bound: bool,
    pub almost_sure_violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub config: TrialConfig,
    pub d_eff: f64,
    pub dnorm2: f64,
    /// Sketch size the bound asks for.
    pub prescribed_m: usize,
    /// Sketch size actually used.
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
    /// Failure probability of the bound (may exceed 1 when vacuous).
    pub failure_probability: f64,
    pub empirical_frequency: f64,
    /// Two-sigma binomial margin at the (clamped) failure probability.
    pub margin: f64,
    pub pass: bool,
    /// `m` is at least the prescribed size, so the bound applies.
    pub in_regime: bool,
    /// The prescribed size does not fit in the padded row count.
    pub infeasible: bool,
    pub almost_sure_violations: usize,
    pub trials: Vec<TrialOutcome>,
}

/// `(gamma_min, gamma_max)` of `C_S` for one sketch.
pub fn extreme_eigs(oracle: &SpectralOracle, op: &SketchOperator) -> Result<(f64, f64)> {
    Ok(symmetric_extremes(&oracle.build_cs(op)?))
}

/// Two-sigma binomial margin for `trials` draws at probability `p`.
pub fn binomial_margin(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    2.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

pub fn run_gaussian_trials(cfg: &TrialConfig) -> Result<ConcentrationReport> {
    if cfg.kind != SketchKind::Gaussian {
        return Err(Error::InvalidInput("config is not for a Gaussian sketch".into()));
    }
    let oracle = cfg.oracle()?;
    let prescribed = (oracle.d_eff() / cfg.rho).ceil() as usize;
    let m = cfg.m.unwrap_or(prescribed);
    let (lower, upper) = gaussian_concentration_bounds(cfg.rho, cfg.eta, oracle.dnorm2())?;
    let p_fail = 8.0 * (-(m as f64) * cfg.rho * cfg.eta / 2.0).exp();
    run_trials(cfg, &oracle, prescribed, m, (lower, upper), p_fail, false)
}

pub fn run_srht_trials(cfg: &TrialConfig) -> Result<ConcentrationReport> {
    if cfg.kind != SketchKind::Srht {
        return Err(Error::InvalidInput("config is not for an SRHT sketch".into()));
    }
    let oracle = cfg.oracle()?;
    let de = oracle.d_eff();
    let prescribed = (srht_oversampling(cfg.n, de) * de * de.ln().max(0.0) / cfg.rho).ceil() as usize;
    let m = cfg.m.unwrap_or(prescribed);
    let (lower, upper) = srht_concentration_bounds(cfg.rho, oracle.dnorm2())?;
    let p_fail = 9.0 / de;
    let n_pad = cfg.n.next_power_of_two();
    if m > n_pad {
        return Ok(ConcentrationReport {
            config: cfg.clone(),
            d_eff: de,
            dnorm2: oracle.dnorm2(),
            prescribed_m: prescribed,
            m,
            lower,
            upper,
            failure_probability: p_fail,
            empirical_frequency: 0.0,
            margin: 0.0,
            pass: false,
            in_regime: false,
            infeasible: true,
            almost_sure_violations: 0,
            trials: Vec::new(),
        });
    }
    let mut rep = run_trials(cfg, &oracle, prescribed, m, (lower, upper), p_fail, true)?;
    rep.infeasible = prescribed > n_pad;
    Ok(rep)
}

/// `Err(InfeasibleAtDeskScale)` when a report could not run at the prescribed size.
pub fn require_feasible(rep: &ConcentrationReport) -> Result<()> {
    if rep.infeasible && rep.trials.is_empty() {
        return Err(Error::InfeasibleAtDeskScale(format!(
            "prescribed m = {} exceeds {} padded rows",
            rep.prescribed_m,
            rep.config.n.next_power_of_two()
        )));
    }
    Ok(())
}

fn run_trials(
    cfg: &TrialConfig,
    oracle: &SpectralOracle,
    prescribed: usize,
    m: usize,
    (lower, upper): (f64, f64),
    p_fail: f64,
    srht: bool,
) -> Result<ConcentrationReport> {
    if m == 0 {
        return Err(Error::InvalidInput("sketch size must be >= 1".into()));
    }
    let floor = 1.0 - oracle.dnorm2();
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.base_seed, i as u64);
            let op = SketchConfig::new(cfg.kind, m, seed).sample(cfg.n)?;
            let (gamma_min, gamma_max) = extreme_eigs(oracle, &op)?;
            let almost_sure_violation = gamma_min < floor - ALMOST_SURE_TOL
                || (srht && gamma_max > 2.0 + ALMOST_SURE_TOL);
            Ok(TrialOutcome {
                gamma_min,
                gamma_max,
                violates_bound: gamma_min < lower || gamma_max > upper,
                almost_sure_violation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = trials.iter().filter(|t| t.violates_bound).count();
    let empirical = violations as f64 / trials.len() as f64;
    let margin = binomial_margin(p_fail, trials.len());
    Ok(ConcentrationReport {
        config: cfg.clone(),
        d_eff: oracle.d_eff(),
        dnorm2: oracle.dnorm2(),
        prescribed_m: prescribed,
        m,
        lower,
        upper,
        failure_probability: p_fail,
        empirical_frequency: empirical,
        margin,
        pass: empirical <= p_fail.min(1.0) + margin,
        in_regime: m >= prescribed,
        infeasible: false,
        almost_sure_violations: trials.iter().filter(|t| t.almost_sure_violation).count(),
        trials,
    })
}

/// Dense `C_S` eigenvalues for diagnostics.
pub fn cs_spectrum(oracle: &SpectralOracle, op: &SketchOperator) -> Result<DVector<f64>> {
    let cs: DMatrix<f64> = oracle.build_cs(op)?;
    Ok(nalgebra::SymmetricEigen::new(cs).eigenvalues)
}
