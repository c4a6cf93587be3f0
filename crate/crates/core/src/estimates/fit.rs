//! Empirical constant of the L^α differential inequality
//! J' + α(α−λ)χ_*^{−2}/(2^{3−a}λ)·I₀ ≤ C̄χ_*^{γ_*}[(1+J)^{1+μ_*/α} + M_α],
//! with J = ∫φu^α and I₀ the weighted gradient energy, fitted as the largest
//! observed ratio of the two sides.

use serde::Serialize;
use thiserror::Error;

use super::exponents::{ExponentBundle, ExponentError};
use crate::functionals::{log_add_exp, FunctionalError, KFunctionals};
use crate::solver::Trajectory;

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("trajectory does not record α = {0}")]
    MissingAlpha(f64),
    #[error("need {expected} M_α samples, got {got}")]
    Samples { expected: usize, got: usize },
    #[error("need at least two snapshots")]
    TooShort,
}

/// Per-snapshot sides of the inequality and the fitted constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CbarFit {
    pub alpha: f64,
    pub chi_star: f64,
    pub times: Vec<f64>,
    /// dJ/dt + coefficient·I₀.
    pub lhs: Vec<f64>,
    /// ln of χ_*^{γ_*}[(1+J)^{1+μ_*/α} + M_α].
    pub ln_shape: Vec<f64>,
    /// lhs / shape.
    pub ratios: Vec<f64>,
    /// max(0, max ratio).
    pub cbar: f64,
    pub argmax_time: f64,
    /// True when every ratio was ≤ 0 and C̄ was clamped to 0.
    pub clamped: bool,
}

/// α(α−λ)χ_*^{−2}/(2^{3−a}λ).
pub fn gradient_coefficient(b: &ExponentBundle, chi_star: f64) -> f64 {
    b.alpha * (b.alpha - b.lambda) / (chi_star * chi_star * 2f64.powf(3.0 - b.a) * b.lambda)
}

/// Centered differences in time; one-sided at both ends.
pub fn time_derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|k| {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (values[hi] - values[lo]) / (times[hi] - times[lo])
        })
        .collect()
}

/// Both sides of the inequality along a trajectory; `m_values[k]` is M_α at `traj.times[k]`.
pub fn inequality_sides(
    traj: &Trajectory,
    b: &ExponentBundle,
    chi_star: f64,
    m_values: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), FitError> {
    let idx = traj
        .alphas
        .iter()
        .position(|&a| (a - b.alpha).abs() <= 1e-12 * b.alpha)
        .ok_or(FitError::MissingAlpha(b.alpha))?;
    let n = traj.times.len();
    if n < 2 {
        return Err(FitError::TooShort);
    }
    if m_values.len() != n {
        return Err(FitError::Samples { expected: n, got: m_values.len() });
    }
    // J = ‖u‖^α; kept in logs for the shape, exponentiated for the derivative.
    let ln_j: Vec<f64> = traj.diagnostics.iter().map(|d| b.alpha * d.norms[idx].ln()).collect();
    let j: Vec<f64> = ln_j.iter().map(|l| l.exp()).collect();
    let dj = time_derivative(&traj.times, &j);
    let coef = gradient_coefficient(b, chi_star);
    let lhs = (0..n).map(|k| dj[k] + coef * traj.diagnostics[k].gradient_energy[idx]).collect();
    let growth = 1.0 + b.mu_star / b.alpha;
    let ln_shape = (0..n)
        .map(|k| b.gamma_star * chi_star.ln() + log_add_exp(growth * log_add_exp(0.0, ln_j[k]), m_values[k].ln()))
        .collect();
    Ok((lhs, ln_shape))
}

/// Fits C̄ on one calibration trajectory.
pub fn fit_cbar(
    traj: &Trajectory,
    b: &ExponentBundle,
    k: &KFunctionals,
    chi_star: f64,
    m_values: &[f64],
) -> Result<CbarFit, FitError> {
    b.require_above_alpha_star()?;
    k.require_finite()?;
    let (lhs, ln_shape) = inequality_sides(traj, b, chi_star, m_values)?;
    let ratios: Vec<f64> = lhs.iter().zip(&ln_shape).map(|(l, s)| l * (-s).exp()).collect();
    let (mut best, mut at) = (f64::NEG_INFINITY, 0);
    for (i, &r) in ratios.iter().enumerate() {
        if r > best {
            best = r;
            at = i;
        }
    }
    Ok(CbarFit {
        alpha: b.alpha,
        chi_star,
        times: traj.times.clone(),
        lhs,
        ln_shape,
        cbar: best.max(0.0),
        argmax_time: traj.times[at],
        clamped: best <= 0.0,
        ratios,
    })
}

/// Combined constant over several calibration fits.
pub fn combine(fits: &[CbarFit]) -> f64 {
    fits.iter().map(|f| f.cbar).fold(0.0, f64::max)
}

/// Largest lhs/(C̄·shape) over an assertion trajectory; ≤ 1 means the inequality holds.
pub fn assertion_ratio(
    traj: &Trajectory,
    b: &ExponentBundle,
    chi_star: f64,
    m_values: &[f64],
    cbar: f64,
) -> Result<f64, FitError> {
    let (lhs, ln_shape) = inequality_sides(traj, b, chi_star, m_values)?;
    Ok(lhs
        .iter()
        .zip(&ln_shape)
        .map(|(l, s)| if *l <= 0.0 { 0.0 } else { (l.ln() - s - cbar.ln()).exp() })
        .fold(0.0, f64::max))
}

/// |a − b|/max(a, b); 0 when both vanish.
pub fn relative_variation(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Spread max/min − 1 of a set of positive constants.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo - 1.0
}
