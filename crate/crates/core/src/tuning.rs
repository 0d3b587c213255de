//! Closed-form step sizes, momentum and contraction rates.
//!
//! Given bounds `lower <= eig(C_S) <= upper`, the preconditioned gradient step
//! contracts the prediction error by `c_gd` per step and the heavy-ball step
//! asymptotically by `c_p`. The target bounds themselves come either from the
//! Gaussian or the SRHT concentration bounds, parameterized by the aspect
//! ratio `rho` (and a slack `eta` for Gaussian embeddings).
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::SketchKind;

/// Largest `rho` for which the Gaussian bounds are stated.
pub const GAUSSIAN_RHO_MAX: f64 = 0.18;
/// Largest `eta` for which the Gaussian bounds are stated.
pub const GAUSSIAN_ETA_MAX: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    pub lower: f64,
    pub upper: f64,
    pub mu_gd: f64,
    pub c_gd: f64,
    pub mu_p: f64,
    pub beta_p: f64,
    pub c_p: f64,
}

impl TuningParams {
    /// Parameters for the adaptive solver with the practical targets of the
    /// given sketch family (`|D|_2` replaced by 1).
    pub fn for_sketch(kind: SketchKind, rho: f64, eta: f64, permissive: bool) -> Result<Self> {
        let (lo, hi) = match kind {
            SketchKind::Gaussian if permissive => gaussian_targets_permissive(rho, eta)?,
            SketchKind::Gaussian => gaussian_targets(rho, eta)?,
            SketchKind::Srht => srht_targets(rho)?,
        };
        rates_from_bounds(lo, hi)
    }
}

pub fn rates_from_bounds(lower: f64, upper: f64) -> Result<TuningParams> {
    if !(lower > 0.0 && lower.is_finite() && upper.is_finite() && lower <= upper) {
        return Err(Error::InvalidInput(format!(
            "need 0 < lower <= upper, got lower = {lower}, upper = {upper}"
        )));
    }
    let mu_gd = 2.0 / (1.0 / lower + 1.0 / upper);
    let c_gd = ((upper - lower) / (upper + lower)).powi(2);
    let (sl, su) = (lower.sqrt(), upper.sqrt());
    let mu_p = 4.0 / (1.0 / sl + 1.0 / su).powi(2);
    let beta_p = ((su - sl) / (su + sl)).powi(2);
    Ok(TuningParams {
        lower,
        upper,
        mu_gd,
        c_gd,
        mu_p,
        beta_p,
        c_p: beta_p,
    })
}

/// `c_eta = (1 + 3 sqrt(eta))^2`.
pub fn c_eta(eta: f64) -> f64 {
    (1.0 + 3.0 * eta.sqrt()).powi(2)
}

fn check_gaussian_region(rho: f64, eta: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= GAUSSIAN_RHO_MAX) {
        return Err(Error::OutOfValidityRange {
            name: "rho",
            value: rho,
            range: "(0, 0.18]",
        });
    }
    if !(eta > 0.0 && eta <= GAUSSIAN_ETA_MAX) {
        return Err(Error::OutOfValidityRange {
            name: "eta",
            value: eta,
            range: "(0, 0.01]",
        });
    }
    Ok(())
}

/// `((1 - sqrt(c_eta rho))^2, (1 + sqrt(c_eta rho))^2)` for `rho <= 0.18`,
/// `eta <= 0.01`.
pub fn gaussian_targets(rho: f64, eta: f64) -> Result<(f64, f64)> {
    check_gaussian_region(rho, eta)?;
    Ok(gaussian_pair(rho, eta))
}

/// Same formula without the validity region; only requires the lower bound to
/// stay positive (`c_eta rho < 1`).
pub fn gaussian_targets_permissive(rho: f64, eta: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0 && eta > 0.0 && c_eta(eta) * rho < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need rho, eta > 0 and c_eta * rho < 1, got rho = {rho}, eta = {eta}"
        )));
    }
    Ok(gaussian_pair(rho, eta))
}

fn gaussian_pair(rho: f64, eta: f64) -> (f64, f64) {
    let s = (c_eta(eta) * rho).sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// `(1 - sqrt(rho), 1 + sqrt(rho))`.
pub fn srht_targets(rho: f64) -> Result<(f64, f64)> {
    check_unit_rho(rho)?;
    let s = rho.sqrt();
    Ok((1.0 - s, 1.0 + s))
}

fn check_unit_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(())
}

/// SRHT oversampling factor `16/3 (1 + sqrt(8 ln(d_e n) / d_e))^2`.
pub fn srht_oversampling(n: usize, d_e: f64) -> f64 {
    let corr = (8.0 * (d_e * n as f64).ln() / d_e).max(0.0).sqrt();
    16.0 / 3.0 * (1.0 + corr).powi(2)
}

/// Two-sided Gaussian bounds on the spectrum of `C_S` with the true `|D|_2^2`:
/// `1 - |D|^2 + |D|^2 (1 -/+ sqrt(c_eta rho))^2`.
pub fn gaussian_concentration_bounds(rho: f64, eta: f64, dnorm2: f64) -> Result<(f64, f64)> {
    check_gaussian_region(rho, eta)?;
    check_dnorm(dnorm2)?;
    let (lo, hi) = gaussian_pair(rho, eta);
    Ok((1.0 - dnorm2 + dnorm2 * lo, 1.0 - dnorm2 + dnorm2 * hi))
}

/// SRHT bounds `1 -/+ |D|_2^2 sqrt(rho)`.
pub fn srht_concentration_bounds(rho: f64, dnorm2: f64) -> Result<(f64, f64)> {
    check_unit_rho(rho)?;
    check_dnorm(dnorm2)?;
    let s = dnorm2 * rho.sqrt();
    Ok((1.0 - s, 1.0 + s))
}

fn check_dnorm(dnorm2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&dnorm2) {
        return Err(Error::InvalidInput(format!("|D|_2^2 must lie in [0, 1], got {dnorm2}")));
    }
    Ok(())
}

/// `a_rho = (1 + sqrt(rho)) / (1 - sqrt(rho))`.
pub fn aspect_factor(rho: f64) -> Result<f64> {
    check_unit_rho(rho)?;
    let s = rho.sqrt();
    Ok((1.0 + s) / (1.0 - s))
}

/// Iterations sufficient for an `eps`-accurate SRHT solution:
/// `ceil((ln 2 + ln(1 + s1^2/nu^2) + ln(1/eps)) / ln(1/rho))`, at least 1.
pub fn predicted_iterations(rho: f64, eps: f64, sigma1: f64, nu: f64) -> Result<u64> {
    check_unit_rho(rho)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidInput(format!("nu must be > 0, got {nu}")));
    }
    let num = 2f64.ln() + (1.0 + (sigma1 / nu).powi(2)).ln() + (1.0 / eps).ln();
    let t = (num / (1.0 / rho).ln()).ceil();
    Ok((t as u64).max(1))
}
