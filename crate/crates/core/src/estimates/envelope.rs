//! The L^α envelope: with V = 1 + ∫φu₀^α and
//! δ(t) = 1 − 2μ_*χ_*^{γ_*}C̄V^{μ_*/α}α^{−1}∫₀^t M_α,
//! every solution satisfies ‖u(t)‖_{L^α_φ} ≤ V^{1/α}δ(t)^{−1/μ_*} while δ > 0.

use serde::Serialize;
use thiserror::Error;

use super::exponents::ExponentBundle;
use crate::fields::Grid;
use crate::functionals::{ln_phi_moment, log_add_exp, m_alpha, pairwise_sum, FunctionalError};
use crate::solver::{BoundarySource, SolverError};

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("smallness fails: δ reaches 0 at t = {critical_time} ≤ T = {t_end}")]
    Smallness { critical_time: f64, t_end: f64 },
    #[error("η = {eta} must lie in (0, α = {alpha}); at η = α use the weighted bound itself")]
    Eta { eta: f64, alpha: f64 },
    #[error("invalid envelope input: {0}")]
    Input(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Scalars entering δ(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeParams {
    pub alpha: f64,
    pub mu_star: f64,
    pub gamma_star: f64,
    pub chi_star: f64,
    pub cbar: f64,
    /// ln V_{α,0}.
    pub ln_v0: f64,
}

impl EnvelopeParams {
    pub fn new(b: &ExponentBundle, chi_star: f64, cbar: f64, ln_v0: f64) -> Self {
        EnvelopeParams { alpha: b.alpha, mu_star: b.mu_star, gamma_star: b.gamma_star, chi_star, cbar, ln_v0 }
    }

    /// ln of the rate c in δ(t) = 1 − c∫₀^t M_α; −∞ when C̄ = 0.
    pub fn ln_rate(&self) -> f64 {
        if self.cbar == 0.0 {
            return f64::NEG_INFINITY;
        }
        (2.0 * self.mu_star / self.alpha).ln()
            + self.gamma_star * self.chi_star.ln()
            + self.cbar.ln()
            + self.mu_star / self.alpha * self.ln_v0
    }

    /// δ for a given ∫₀^t M_α.
    pub fn delta(&self, m_integral: f64) -> f64 {
        1.0 - (self.ln_rate() + m_integral.ln()).exp()
    }

    /// ln of V^{1/α}δ^{−1/μ_*}; +∞ once δ ≤ 0.
    pub fn ln_bound(&self, m_integral: f64) -> f64 {
        let d = self.delta(m_integral);
        if d <= 0.0 {
            return f64::INFINITY;
        }
        self.ln_v0 / self.alpha - d.ln() / self.mu_star
    }
}

/// δ(t) and the bound on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub params: EnvelopeParams,
    pub times: Vec<f64>,
    pub m_values: Vec<f64>,
    /// Cumulative trapezoid ∫₀^{t_k} M_α.
    pub m_integral: Vec<f64>,
    pub delta: Vec<f64>,
    pub ln_bound: Vec<f64>,
    /// Time at which δ reaches zero, if it does (M_α piecewise linear between samples).
    pub critical_time: Option<f64>,
}

impl Envelope {
    /// Builds the envelope from samples of M_α at increasing times starting at 0.
    pub fn new(params: EnvelopeParams, times: &[f64], m_values: &[f64]) -> Result<Self, EnvelopeError> {
        if times.is_empty() || times.len() != m_values.len() || times[0] != 0.0 {
            return Err(EnvelopeError::Input("times must start at 0 and match the M samples".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EnvelopeError::Input("times must increase".into()));
        }
        if m_values.iter().any(|&m| !(m >= 1.0 && m.is_finite())) {
            return Err(EnvelopeError::Input("M_α samples must be finite and ≥ 1".into()));
        }
        let mut m_integral = vec![0.0; times.len()];
        for k in 1..times.len() {
            m_integral[k] = m_integral[k - 1] + 0.5 * (times[k] - times[k - 1]) * (m_values[k] + m_values[k - 1]);
        }
        let rate = params.ln_rate().exp();
        let mut critical_time = None;
        for k in 1..times.len() {
            if rate * m_integral[k] >= 1.0 {
                // Solve rate·(I_{k−1} + m_{k−1}s + (m_k−m_{k−1})s²/(2h)) = 1 on the segment.
                let h = times[k] - times[k - 1];
                let need = 1.0 / rate - m_integral[k - 1];
                let (m0, dm) = (m_values[k - 1], (m_values[k] - m_values[k - 1]) / h);
                let s = if dm.abs() < 1e-14 * m0 {
                    need / m0
                } else {
                    (-m0 + (m0 * m0 + 2.0 * dm * need).sqrt()) / dm
                };
                critical_time = Some(times[k - 1] + s.clamp(0.0, h));
                break;
            }
        }
        let delta = m_integral.iter().map(|&i| params.delta(i)).collect();
        let ln_bound = m_integral.iter().map(|&i| params.ln_bound(i)).collect();
        Ok(Envelope { params, times: times.to_vec(), m_values: m_values.to_vec(), m_integral, delta, ln_bound, critical_time })
    }

    /// Errors with the critical time when δ hits zero on the grid.
    pub fn require_admissible(&self) -> Result<(), EnvelopeError> {
        match self.critical_time {
            Some(critical_time) => {
                Err(EnvelopeError::Smallness { critical_time, t_end: *self.times.last().unwrap() })
            }
            None => Ok(()),
        }
    }

    /// Largest T with δ(T) > 0 when M_α is constant beyond the last sample.
    pub fn largest_admissible_time(&self) -> f64 {
        if let Some(t) = self.critical_time {
            return t;
        }
        let rate = self.params.ln_rate().exp();
        let last = self.times.len() - 1;
        self.times[last] + (1.0 / rate - self.m_integral[last]) / self.m_values[last]
    }
}

/// M_α(t) at each time from the boundary source.
pub fn m_series(
    source: &dyn BoundarySource,
    grid: &Grid,
    times: &[f64],
    b: &ExponentBundle,
) -> Result<Vec<f64>, EnvelopeError> {
    times
        .iter()
        .map(|&t| Ok(m_alpha(&source.values(t)?, grid, b.alpha, b.r, b.lambda)?))
        .collect()
}

/// ln V_{α,0} = ln(1 + ∫φu₀^α).
pub fn ln_v0(u0: &[f64], alpha: f64, phi: &[f64], grid: &Grid) -> f64 {
    log_add_exp(0.0, ln_phi_moment(u0, alpha, phi, grid))
}

/// C_{α,η} = ∫φ^{−η/(α−η)}.
pub fn c_alpha_eta(alpha: f64, eta: f64, phi: &[f64], grid: &Grid) -> Result<f64, EnvelopeError> {
    if !(eta > 0.0 && eta < alpha) {
        return Err(EnvelopeError::Eta { eta, alpha });
    }
    let e = -eta / (alpha - eta);
    let terms: Vec<f64> = phi.iter().map(|&p| p.powf(e)).collect();
    Ok(pairwise_sum(&terms) * grid.cell_area())
}

/// ln of the unweighted bound ‖u‖_{L^η} ≤ C_{α,η}^{1/η−1/α}V^{1/α}δ^{−1/μ_*}.
pub fn ln_eta_bound(ln_weighted_bound: f64, alpha: f64, eta: f64, c: f64) -> f64 {
    (1.0 / eta - 1.0 / alpha) * c.ln() + ln_weighted_bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::exponents::ExponentParams;
    use crate::functionals::{lp_phi_norm, BoundaryValues};

    fn params(cbar: f64) -> EnvelopeParams {
        let b = ExponentBundle::compute(&ExponentParams::default_point(97.0)).unwrap();
        EnvelopeParams::new(&b, 1.0, cbar, 0.01)
    }

    #[test]
    fn starts_at_one_with_initial_bound() {
        let p = params(1e-3);
        let e = Envelope::new(p, &[0.0, 0.1, 0.2], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(e.delta[0], 1.0);
        assert!((e.ln_bound[0] - p.ln_v0 / p.alpha).abs() < 1e-15);
    }

    #[test]
    fn constant_forcing_gives_affine_delta() {
        let p = params(1e-3);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.05).collect();
        let e = Envelope::new(p, &times, &vec![1.0; 11]).unwrap();
        let slope = (e.delta[1] - e.delta[0]) / 0.05;
        for k in 0..=10 {
            assert!((e.delta[k] - (1.0 + slope * times[k])).abs() < 1e-14);
        }
        assert!(slope < 0.0);
        assert!(e.delta.windows(2).all(|w| w[1] <= w[0]));
        let t_star = e.largest_admissible_time();
        assert!((t_star - 1.0 / (-slope)).abs() < 1e-9 * t_star);
    }

    #[test]
    fn smallness_failure_reports_critical_time() {
        let p = params(10.0);
        let rate = p.ln_rate().exp();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 / rate / 10.0).collect();
        let ms: Vec<f64> = times.iter().map(|&t| 1.0 + rate * t).collect();
        let e = Envelope::new(p, &times, &ms).unwrap();
        let tc = e.critical_time.unwrap();
        // ∫₀^t (1 + ct) = t + ct²/2 = 1/c.
        let exact = (-1.0 + 3f64.sqrt()) / rate;
        assert!((tc - exact).abs() < 1e-9 * exact);
        assert!(matches!(e.require_admissible(), Err(EnvelopeError::Smallness { .. })));
    }

    #[test]
    fn zero_constant_never_closes() {
        let e = Envelope::new(params(0.0), &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(e.delta, vec![1.0, 1.0]);
        assert_eq!(e.largest_admissible_time(), f64::INFINITY);
    }

    #[test]
    fn eta_requires_strictly_below_alpha() {
        let grid = Grid::new(1.0, 1.0, 4, 4).unwrap();
        let phi = vec![0.5; 16];
        assert!(matches!(c_alpha_eta(3.0, 3.0, &phi, &grid), Err(EnvelopeError::Eta { .. })));
        let c = c_alpha_eta(3.0, 1.0, &phi, &grid).unwrap();
        assert!((c - 0.5f64.powf(-0.5)).abs() < 1e-14);
        // Hölder: ‖u‖_{L^1} ≤ C^{1−1/3}‖u‖_{L^3_φ}.
        let u: Vec<f64> = (0..16).map(|i| 0.1 + i as f64 * 0.07).collect();
        let l1: f64 = u.iter().sum::<f64>() / 16.0;
        let l3 = lp_phi_norm(&u, 3.0, &phi, &grid).unwrap();
        assert!(l1.ln() <= ln_eta_bound(l3.ln(), 3.0, 1.0, c) + 1e-12);
    }

    #[test]
    fn m_series_is_one_without_negative_data() {
        struct Zero(Grid);
        impl BoundarySource for Zero {
            fn values(&self, _t: f64) -> Result<BoundaryValues, SolverError> {
                Ok(BoundaryValues::zeros(&self.0))
            }
        }
        let grid = Grid::new(1.0, 1.0, 4, 4).unwrap();
        let b = ExponentBundle::compute(&ExponentParams::default_point(97.0)).unwrap();
        let ms = m_series(&Zero(grid.clone()), &grid, &[0.0, 0.5], &b).unwrap();
        assert_eq!(ms, vec![1.0, 1.0]);
    }
}
