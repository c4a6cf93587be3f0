//! The L^∞ certification shape
//! χ_*^{ω₀}ε^{−ω₂}(1+T)^{ω₁+ν̃/β₁}δ(T)^{−ν̃/μ_*}(1+‖u₀‖_{L^{β₁}_φ})^{ν̃}Ψ_T^{ω₂}
//! and the fit of its constant Ĉ over a sweep of runs.

use serde::Serialize;

use super::moser::MoserSchedule;
use crate::solver::Trajectory;

/// Run data entering the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeInputs {
    pub chi_star: f64,
    pub eps: f64,
    pub t_end: f64,
    /// δ(T) of the envelope at α = β₁.
    pub delta_t: f64,
    /// ‖u₀‖_{L^{β₁}_φ}.
    pub u0_norm: f64,
    pub psi_t: f64,
    pub mu_star: f64,
}

/// ln of the shape.
pub fn ln_shape(s: &MoserSchedule, x: &ShapeInputs) -> f64 {
    let [w0, w1, w2, _] = s.omegas;
    let nu = s.nu_tilde.value();
    let beta1 = s.kappa_tilde * s.alpha0;
    w0 * x.chi_star.ln() - w2 * x.eps.ln() + (w1 + nu / beta1) * x.t_end.ln_1p() - nu / x.mu_star * x.delta_t.ln()
        + nu * x.u0_norm.ln_1p()
        + w2 * x.psi_t.ln()
}

/// sup u over snapshots with ε ≤ t ≤ T.
pub fn measured_sup(traj: &Trajectory, eps: f64) -> f64 {
    traj.times
        .iter()
        .zip(&traj.snapshots)
        .filter(|(&t, _)| t >= eps)
        .flat_map(|(_, u)| u.iter().cloned())
        .fold(0.0, f64::max)
}

/// One run of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunCertificate {
    pub label: String,
    pub inputs: ShapeInputs,
    pub ln_shape: f64,
    pub sup: f64,
    /// ln(sup/shape); −∞ for an identically zero run.
    pub ln_ratio: f64,
}

impl RunCertificate {
    pub fn new(label: impl Into<String>, s: &MoserSchedule, inputs: ShapeInputs, sup: f64) -> Self {
        let ln_shape = ln_shape(s, &inputs);
        RunCertificate { label: label.into(), inputs, ln_shape, sup, ln_ratio: sup.ln() - ln_shape }
    }
}

/// Fitted Ĉ over a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFit {
    /// ln Ĉ = max ln(sup/shape).
    pub ln_c_hat: f64,
    /// max/min of sup/shape over runs with sup > 0.
    pub variation: f64,
    /// Per-run ln margins ln Ĉ + ln shape − ln sup (≥ 0).
    pub ln_margins: Vec<f64>,
}

pub fn fit_sweep(runs: &[RunCertificate]) -> SweepFit {
    let live: Vec<f64> = runs.iter().map(|r| r.ln_ratio).filter(|l| l.is_finite()).collect();
    let hi = live.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = live.iter().cloned().fold(f64::INFINITY, f64::min);
    SweepFit {
        ln_c_hat: hi,
        variation: if live.is_empty() { 1.0 } else { (hi - lo).exp() },
        ln_margins: runs.iter().map(|r| hi - r.ln_ratio).collect(),
    }
}

/// ln of the permitted growth factor minus ln of the observed growth:
/// (factor_hi/factor_lo)^{exponent} against sup_b/sup_a. Nonnegative means within bounds.
pub fn growth_margin(sup_a: f64, sup_b: f64, factor_a: f64, factor_b: f64, exponent: f64) -> f64 {
    exponent * (factor_b / factor_a).ln().abs() - (sup_b / sup_a).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::exponents::{default_alpha, ExponentBundle, ExponentParams};

    fn schedule() -> (ExponentBundle, MoserSchedule) {
        let base = ExponentParams::default_point(100.0);
        let (alpha0, beta1) = default_alpha(&base, 1.05).unwrap();
        let b = ExponentBundle::compute(&ExponentParams { alpha: beta1, ..base }).unwrap();
        let s = MoserSchedule::compute(&b, alpha0, 0.5, 1.0).unwrap();
        (b, s)
    }

    fn inputs(mu_star: f64) -> ShapeInputs {
        ShapeInputs { chi_star: 1.0, eps: 0.1, t_end: 0.5, delta_t: 0.9, u0_norm: 0.5, psi_t: 1.0, mu_star }
    }

    #[test]
    fn shape_exponents_follow_schedule() {
        let (b, s) = schedule();
        let x = inputs(b.mu_star);
        let base = ln_shape(&s, &x);
        let chi2 = ln_shape(&s, &ShapeInputs { chi_star: 2.0, ..x });
        assert!((chi2 - base - s.omegas[0] * 2f64.ln()).abs() < 1e-9);
        let eps2 = ln_shape(&s, &ShapeInputs { eps: 0.05, ..x });
        assert!((eps2 - base - s.omegas[2] * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn zero_run_certifies_trivially() {
        let (b, s) = schedule();
        let zero = RunCertificate::new("zero", &s, inputs(b.mu_star), 0.0);
        let one = RunCertificate::new("one", &s, inputs(b.mu_star), 0.7);
        let fit = fit_sweep(&[zero, one]);
        assert_eq!(fit.variation, 1.0);
        assert!(fit.ln_margins.iter().all(|&m| m >= 0.0));
        assert_eq!(fit.ln_margins[0], f64::INFINITY);
    }

    #[test]
    fn growth_margin_sign() {
        assert!(growth_margin(1.0, 1.5, 1.0, 2.0, 1.0) > 0.0);
        assert!(growth_margin(1.0, 3.0, 1.0, 2.0, 1.0) < 0.0);
    }
}
