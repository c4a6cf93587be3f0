//! The certification pipeline: exponents and thresholds, weight functionals,
//! C̄ calibration on scaled initial data, the L^α envelope on the configured
//! run, the Moser schedule and the L^∞ shape.

use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, Resolved, RunConfig};
use crate::constitutive::Medium;
use crate::estimates::envelope::{ln_v0, m_series};
use crate::estimates::exponents::default_alpha;
use crate::estimates::fit::{assertion_ratio, combine};
use crate::estimates::theorem55::measured_sup;
use crate::estimates::{
    fit_cbar, CbarFit, Envelope, EnvelopeError, EnvelopeParams, ExponentBundle, ExponentError, FitError, MoserSchedule,
    RunCertificate, ShapeInputs,
};
use crate::fields::{materialize, FieldError, Grid};
use crate::functionals::{lp_phi_norm, psi_t, FunctionalError, KFunctionals, WeightIntegrator};
use crate::solver::{Solver, SolverError, TaggedForcing, Trajectory};

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("smallness fails: δ reaches 0 at t = {critical_time} ≤ T = {t_end}; largest admissible T is {largest_admissible_time}")]
    Smallness { critical_time: f64, t_end: f64, largest_admissible_time: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Envelope(EnvelopeError),
    #[error(transparent)]
    Fit(FitError),
}

impl From<FitError> for CertifyError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Exponent(e) => CertifyError::Exponent(e),
            FitError::Functional(e) => CertifyError::Functional(e),
            other => CertifyError::Fit(other),
        }
    }
}

impl From<EnvelopeError> for CertifyError {
    fn from(e: EnvelopeError) -> Self {
        match e {
            EnvelopeError::Solver(e) => CertifyError::Solver(e),
            EnvelopeError::Functional(e) => CertifyError::Functional(e),
            other => CertifyError::Envelope(other),
        }
    }
}

impl CertifyError {
    /// 1 for input errors, 2 for solver failures, 3 for failed preconditions of the estimates.
    pub fn exit_code(&self) -> i32 {
        match self {
            CertifyError::Config(_) | CertifyError::Field(_) => 1,
            CertifyError::Solver(_) => 2,
            CertifyError::Exponent(_) | CertifyError::Smallness { .. } => 3,
            CertifyError::Functional(FunctionalError::Divergent { .. }) => 3,
            CertifyError::Functional(_) | CertifyError::Envelope(_) | CertifyError::Fit(_) => 1,
        }
    }

    /// Machine-readable reason for the report.
    pub fn reason(&self) -> &'static str {
        match self {
            CertifyError::Config(_) | CertifyError::Field(_) => "invalid_config",
            CertifyError::Solver(_) => "solver_failure",
            CertifyError::Exponent(ExponentError::AlphaTooSmall { .. }) => "alpha_below_threshold",
            CertifyError::Exponent(_) => "exponent_precondition",
            CertifyError::Smallness { .. } => "smallness",
            CertifyError::Functional(FunctionalError::Divergent { .. }) => "divergent_functional",
            CertifyError::Functional(_) => "functional",
            CertifyError::Envelope(_) => "envelope_input",
            CertifyError::Fit(_) => "fit_input",
        }
    }
}

/// (α₀, β₁ = κ̃α₀) from the config, or derived from the thresholds.
pub fn certification_alphas(cfg: &RunConfig, medium: &Medium) -> Result<(f64, f64), ExponentError> {
    match cfg.estimates.alpha {
        Some(a) => Ok((a / cfg.estimates.kappa_tilde, a)),
        None => default_alpha(&cfg.exponent_params(medium, 1e6), cfg.estimates.alpha_margin),
    }
}

/// Runs the solver from `scale`·u₀ recording the norm at `alpha`.
pub fn run_scaled(res: &Resolved, scale: f64, alpha: f64) -> Result<(Trajectory, Vec<f64>, Vec<f64>), CertifyError> {
    let cfg = crate::solver::SolverConfig { alphas: vec![alpha], ..res.solver.clone() };
    let solver = Solver::with_forcing(
        res.grid.clone(),
        res.medium.clone(),
        cfg,
        res.forcing.clone(),
        &res.partition,
        res.source.clone(),
    )?;
    let u0: Vec<f64> = materialize(&res.u0, &res.grid, 0.0)?.into_iter().map(|v| scale * v).collect();
    let traj = solver.run(&u0)?;
    Ok((traj, u0, solver.phi().to_vec()))
}

/// M_α at the trajectory times.
pub fn m_values(res: &Resolved, traj: &Trajectory, b: &ExponentBundle) -> Result<Vec<f64>, CertifyError> {
    let tf = TaggedForcing::new(res.forcing.clone(), &res.partition, &res.grid)?;
    Ok(m_series(&tf, &res.grid, &traj.times, b)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentSummary {
    pub alpha0: f64,
    pub beta1: f64,
    pub alpha_star: f64,
    pub alpha_star_binding: &'static str,
    pub mu_star: f64,
    pub gamma_star: f64,
    pub chi_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSummary {
    pub scales: Vec<f64>,
    pub per_run: Vec<f64>,
    pub clamped: bool,
    pub safety: f64,
    pub cbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSummary {
    pub delta_final: f64,
    pub delta_nonincreasing: bool,
    pub largest_admissible_time: f64,
    /// min over snapshots of ln bound − ln ‖u‖.
    pub min_ln_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoserSummary {
    pub chain_margin: f64,
    pub mu_tilde: f64,
    pub nu_tilde: f64,
    pub truncation: usize,
    pub converged: bool,
    pub omegas: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub exponents: ExponentSummary,
    pub k_functionals: KFunctionals,
    pub calibration: CalibrationSummary,
    /// Largest LHS/(C̄·shape) on the assertion run.
    pub assertion_ratio: f64,
    pub envelope: EnvelopeSummary,
    pub moser: MoserSummary,
    pub linf: RunCertificate,
    /// Each must be ≥ 0 for the certificate to pass.
    pub margins: Vec<Margin>,
    pub passed: bool,
    #[serde(skip)]
    pub envelope_series: Envelope,
    #[serde(skip)]
    pub norms: Vec<f64>,
    #[serde(skip)]
    pub fits: Vec<CbarFit>,
}

/// Runs the whole pipeline on a config.
pub fn certify(cfg: &RunConfig) -> Result<Certification, CertifyError> {
    let res = cfg.resolve()?;
    let (alpha0, beta1) = certification_alphas(cfg, &res.medium)?;
    let b = ExponentBundle::compute(&cfg.exponent_params(&res.medium, beta1))?;
    b.require_above_alpha_star()?;
    let t_end = res.solver.t_end;
    let schedule = MoserSchedule::compute(&b, alpha0, cfg.estimates.sigma, t_end)?;
    let chi = res.medium.chi_star();

    let kgrid = Grid::new(res.grid.lx, res.grid.ly, cfg.estimates.kfun_n, cfg.estimates.kfun_n)
        .map_err(FunctionalError::from)?;
    let k = KFunctionals::compute(&b, &WeightIntegrator::for_medium(&res.medium, &kgrid)?)?;
    k.require_finite()?;

    let mut fits = Vec::new();
    for &s in &cfg.estimates.calibration_scales {
        let (traj, _, _) = run_scaled(&res, s, beta1)?;
        let m = m_values(&res, &traj, &b)?;
        fits.push(fit_cbar(&traj, &b, &k, chi, &m)?);
    }
    let cbar = cfg.estimates.cbar_safety * combine(&fits);

    let (traj, u0, phi) = run_scaled(&res, 1.0, beta1)?;
    let m = m_values(&res, &traj, &b)?;
    let ratio = if cbar > 0.0 { assertion_ratio(&traj, &b, chi, &m, cbar)? } else { 0.0 };

    let params = EnvelopeParams::new(&b, chi, cbar, ln_v0(&u0, beta1, &phi, &res.grid));
    let env = Envelope::new(params, &traj.times, &m)?;
    if let Some(critical_time) = env.critical_time {
        return Err(CertifyError::Smallness { critical_time, t_end, largest_admissible_time: env.largest_admissible_time() });
    }
    let norms: Vec<f64> = traj.diagnostics.iter().map(|d| d.norms[0]).collect();
    let min_ln_margin = env.ln_bound.iter().zip(&norms).map(|(lb, n)| lb - n.ln()).fold(f64::INFINITY, f64::min);
    let envelope = EnvelopeSummary {
        delta_final: *env.delta.last().expect("nonempty"),
        delta_nonincreasing: env.delta[0] == 1.0 && env.delta.windows(2).all(|w| w[1] <= w[0]),
        largest_admissible_time: env.largest_admissible_time(),
        min_ln_margin,
    };

    let inputs = ShapeInputs {
        chi_star: chi,
        eps: cfg.eps(),
        t_end,
        delta_t: envelope.delta_final,
        u0_norm: lp_phi_norm(&u0, beta1, &phi, &res.grid)?,
        psi_t: psi_t(&res.forcing, &res.partition, &res.grid, t_end, cfg.estimates.p[2], b.a)?,
        mu_star: b.mu_star,
    };
    let linf = RunCertificate::new("assertion", &schedule, inputs, measured_sup(&traj, cfg.eps()));

    let moser = MoserSummary {
        chain_margin: schedule.chain_margin,
        mu_tilde: schedule.mu_tilde.value(),
        nu_tilde: schedule.nu_tilde.value(),
        truncation: schedule.nu_tilde.truncation.max(schedule.mu_tilde.truncation),
        converged: schedule.mu_tilde.converged && schedule.nu_tilde.converged,
        omegas: schedule.omegas,
    };
    let margins = vec![
        Margin { name: "cbar_assertion", value: if ratio > 0.0 { -ratio.ln() } else { f64::INFINITY } },
        Margin { name: "envelope", value: min_ln_margin },
        Margin { name: "delta_monotone", value: if envelope.delta_nonincreasing { 0.0 } else { -1.0 } },
        Margin { name: "moser_chain", value: schedule.chain_margin },
        Margin { name: "moser_products", value: if moser.converged { 0.0 } else { -1.0 } },
    ];
    let passed = margins.iter().all(|m| m.value >= 0.0);
    Ok(Certification {
        exponents: ExponentSummary {
            alpha0,
            beta1,
            alpha_star: b.alpha_star,
            alpha_star_binding: b.alpha_star_binding,
            mu_star: b.mu_star,
            gamma_star: b.gamma_star,
            chi_star: chi,
        },
        k_functionals: k,
        calibration: CalibrationSummary {
            scales: cfg.estimates.calibration_scales.clone(),
            per_run: fits.iter().map(|f| f.cbar).collect(),
            clamped: fits.iter().all(|f| f.clamped),
            safety: cfg.estimates.cbar_safety,
            cbar,
        },
        assertion_ratio: ratio,
        envelope,
        moser,
        linf,
        margins,
        passed,
        envelope_series: env,
        norms,
        fits,
    })
}
