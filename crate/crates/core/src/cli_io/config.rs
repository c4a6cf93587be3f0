//! The TOML run configuration. Every section except `domain`, `law` and
//! `initial` has defaults; unknown keys are rejected. The resolved value
//! (defaults filled in) is what gets echoed into reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{ConstitutiveError, FluidEos, ForchheimerLaw, Medium, RotationGravity, DEFAULT_TOL};
use crate::estimates::exponents::DEFAULT_P;
use crate::estimates::ExponentParams;
use crate::fields::{BoundaryForcing, BoundaryPartition, BoundaryTag, FieldExpr, Grid, ParseError, PartitionError, Segment};
use crate::solver::{default_eps_reg, DtPolicy, SolverConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config key `{key}`: {source}")]
    Expr {
        key: String,
        #[source]
        source: ParseError,
    },
    #[error("config key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

fn parse_expr(key: impl Into<String>, src: &str) -> Result<FieldExpr, ConfigError> {
    FieldExpr::parse(src).map_err(|source| ConfigError::Expr { key: key.into(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the `--out` flag and `ROTFLOW_OUT` take precedence.
    #[serde(default)]
    pub out: Option<String>,
    pub domain: DomainSection,
    pub law: LawSection,
    #[serde(default)]
    pub eos: FluidEos,
    #[serde(default)]
    pub rotation: RotationSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub estimates: EstimateSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub mms: MmsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
    pub n: usize,
    /// Scaled porosity φ̃ ∈ (0, 1); φ = c̄φ̃.
    pub porosity: String,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSection {
    pub degrees: Vec<f64>,
    pub coefficients: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationSection {
    pub omega: f64,
    pub gravity: f64,
    /// Components of the gravity direction e₀(t).
    pub e0: [String; 2],
}

impl Default for RotationSection {
    fn default() -> Self {
        RotationSection { omega: 0.0, gravity: 1.0, e0: ["0".into(), "1".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub psi1: String,
    pub psi2: String,
    /// Tag of the whole boundary when `segments` is empty.
    pub default_tag: BoundaryTag,
    pub segments: Vec<Segment>,
}

impl Default for BoundarySection {
    fn default() -> Self {
        BoundarySection { psi1: "0".into(), psi2: "0".into(), default_tag: BoundaryTag::Gamma1, segments: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub u0: String,
    /// Optional volumetric source f(x, y, t).
    #[serde(default)]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    pub dt: DtPolicy,
    /// Defaults to 0 for λ = 1 and 1e-10 otherwise.
    pub eps_reg: Option<f64>,
    pub snapshots: usize,
    pub alphas: Vec<f64>,
    pub tol: f64,
    pub probe_every: usize,
    pub max_steps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            t_end: 0.01,
            dt: DtPolicy::Adaptive { safety: 0.5 },
            eps_reg: None,
            snapshots: 20,
            alphas: vec![2.0],
            tol: DEFAULT_TOL,
            probe_every: 10,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    /// Certification exponent α = β₁; derived from the thresholds when absent.
    pub alpha: Option<f64>,
    /// Factor over the binding threshold when α is derived.
    pub alpha_margin: f64,
    pub r: f64,
    pub r1: f64,
    pub kappa_tilde: f64,
    pub p: [f64; 5],
    pub sigma: f64,
    /// Lower end of the L^∞ window (ε, T]; defaults to T/2.
    pub eps: Option<f64>,
    /// u₀ multipliers of the calibration runs for C̄; the configured u₀ is the assertion run.
    pub calibration_scales: Vec<f64>,
    pub cbar_safety: f64,
    /// Base grid of the K-functional quadrature (refined twice).
    pub kfun_n: usize,
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            alpha: None,
            alpha_margin: 1.05,
            r: 2.5,
            r1: 0.8,
            kappa_tilde: 1.1,
            p: DEFAULT_P,
            sigma: 0.5,
            eps: None,
            calibration_scales: vec![0.9, 1.1],
            cbar_safety: 1.1,
            kfun_n: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub corpus_size: usize,
    pub calibration_seed: u64,
    pub assertion_seed: u64,
    pub grid_n: usize,
    pub alpha: f64,
    /// Calibration artifact; defaults to `<out>/calibration.json`.
    pub artifact: Option<String>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection { corpus_size: 200, calibration_seed: 1001, assertion_seed: 2002, grid_n: 48, alpha: 40.0, artifact: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub constitutive_samples: usize,
    pub constitutive_laws: usize,
    pub elementary_samples: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { constitutive_samples: 100_000, constitutive_laws: 20, elementary_samples: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSection {
    pub grids: Vec<usize>,
    pub t_end: f64,
    pub temporal_n: usize,
    pub temporal_t_end: f64,
    pub temporal_dt0: f64,
    pub temporal_halvings: usize,
}

impl Default for MmsSection {
    fn default() -> Self {
        MmsSection { grids: vec![16, 32, 64, 128], t_end: 1e-3, temporal_n: 8, temporal_t_end: 0.02, temporal_dt0: 1e-3, temporal_halvings: 2 }
    }
}

/// Objects built from a validated config.
pub struct Resolved {
    pub grid: Grid,
    pub medium: Medium,
    pub partition: BoundaryPartition,
    pub forcing: BoundaryForcing,
    pub u0: FieldExpr,
    pub source: Option<FieldExpr>,
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// Checks that do not need the built objects.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.domain.n < 2 {
            return Err(invalid("domain.n", "need at least 2 cells per direction"));
        }
        if self.solver.snapshots == 0 {
            return Err(invalid("solver.snapshots", "need at least one snapshot"));
        }
        let e = &self.estimates;
        let eps = self.eps();
        if !(eps > 0.0 && eps < self.solver.t_end) {
            return Err(invalid("estimates.eps", format!("need 0 < ε < T = {}, got {eps}", self.solver.t_end)));
        }
        if !(e.cbar_safety >= 1.0) {
            return Err(invalid("estimates.cbar_safety", "must be ≥ 1"));
        }
        if e.calibration_scales.is_empty() || e.calibration_scales.iter().any(|&s| !(s > 0.0) || s == 1.0) {
            return Err(invalid("estimates.calibration_scales", "need positive scales different from 1"));
        }
        if self.mms.grids.len() < 2 {
            return Err(invalid("mms.grids", "need at least two grids"));
        }
        Ok(())
    }

    /// Builds the grid, medium, boundary data and solver settings.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let d = &self.domain;
        let grid = Grid::new(d.lx, d.ly, d.n, d.n).map_err(|e| invalid("domain", e.to_string()))?;
        let coeffs = self
            .law
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, s)| parse_expr(format!("law.coefficients[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?;
        let law = ForchheimerLaw::new(self.law.degrees.clone(), coeffs)?;
        let r = &self.rotation;
        let rot = RotationGravity::new(r.omega, r.gravity, [parse_expr("rotation.e0[0]", &r.e0[0])?, parse_expr("rotation.e0[1]", &r.e0[1])?])?;
        let medium = Medium::new(law, self.eos, &rot, parse_expr("domain.porosity", &d.porosity)?, d.lx, d.ly)?;
        let b = &self.boundary;
        let partition = if b.segments.is_empty() {
            BoundaryPartition::uniform(b.default_tag, d.lx, d.ly)
        } else {
            BoundaryPartition::new(b.segments.clone(), d.lx, d.ly)?
        };
        let forcing = BoundaryForcing { psi1: parse_expr("boundary.psi1", &b.psi1)?, psi2: parse_expr("boundary.psi2", &b.psi2)? };
        let s = &self.solver;
        let solver = SolverConfig {
            dt: s.dt,
            eps_reg: s.eps_reg.unwrap_or_else(|| default_eps_reg(medium.lambda())),
            t_end: s.t_end,
            snapshot_interval: s.t_end / s.snapshots as f64,
            alphas: s.alphas.clone(),
            tol: s.tol,
            probe_every: s.probe_every,
            max_steps: s.max_steps,
        };
        solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        Ok(Resolved {
            grid,
            medium,
            partition,
            forcing,
            u0: parse_expr("initial.u0", &self.initial.u0)?,
            source: self.initial.source.as_deref().map(|s| parse_expr("initial.source", s)).transpose()?,
            solver,
        })
    }

    pub fn eps(&self) -> f64 {
        self.estimates.eps.unwrap_or(self.solver.t_end / 2.0)
    }

    /// Exponent parameters at a given α, with a and λ taken from the medium.
    pub fn exponent_params(&self, medium: &Medium, alpha: f64) -> ExponentParams {
        let e = &self.estimates;
        ExponentParams { a: medium.a(), lambda: medium.lambda(), r1: e.r1, r: e.r, alpha, kappa_tilde: e.kappa_tilde, p: e.p }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
[domain]
n = 8
porosity = "0.5"

[law]
degrees = [0.0, 1.0]
coefficients = ["1", "1"]

[initial]
u0 = "0.5"
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.domain.lx, 1.0);
        assert_eq!(c.estimates.r, 2.5);
        let r = c.resolve().unwrap();
        assert_eq!(r.grid.cell_count(), 64);
        assert_eq!(r.solver.eps_reg, 0.0);
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("u0 = \"0.5\"", "");
        let msg = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("u0"), "{msg}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{MINIMAL}\n[solver]\nt_end = 0.1\nbogus = 1\n");
        let msg = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn bad_expression_names_key() {
        let text = MINIMAL.replace("\"0.5\"\n\n[law]", "\"0.5 +\"\n\n[law]");
        let c = RunConfig::from_toml(&text).unwrap();
        let msg = c.resolve().err().unwrap().to_string();
        assert!(msg.contains("domain.porosity"), "{msg}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }
}
