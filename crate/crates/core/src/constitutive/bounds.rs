//! Randomised check of the growth and coercivity bounds of X, together with
//! the inversion residual, over log-uniform samples of (x, z, y).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConstitutiveError, ForchheimerLaw, Medium};
use crate::fields::{FieldExpr, Preset};

/// Sampling ranges; magnitudes are drawn log-uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRanges {
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Fraction of samples taken at exactly z = 0.
    pub z_zero_fraction: f64,
}

impl Default for SampleRanges {
    fn default() -> Self {
        SampleRanges { y_min: 1e-6, y_max: 1e6, z_min: 1e-6, z_max: 1e6, z_zero_fraction: 0.01 }
    }
}

/// Relative slack granted to both bounds.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub samples: usize,
    pub growth_violations: usize,
    pub coercivity_violations: usize,
    /// min over samples of (W₀|y|^{1−a} − |X|)/(W₀|y|^{1−a}).
    pub worst_growth_margin: f64,
    /// min over samples of (X·y − lower)/max(|X·y|, |lower|).
    pub worst_coercivity_margin: f64,
    /// max over samples of |F(X(y)) − y|/(1+|y|).
    pub max_inverse_residual: f64,
}

impl BoundCheckReport {
    pub fn violations(&self) -> usize {
        self.growth_violations + self.coercivity_violations
    }

    /// Folds another report into this one.
    pub fn merge(&mut self, other: &BoundCheckReport) {
        self.samples += other.samples;
        self.growth_violations += other.growth_violations;
        self.coercivity_violations += other.coercivity_violations;
        self.worst_growth_margin = self.worst_growth_margin.min(other.worst_growth_margin);
        self.worst_coercivity_margin = self.worst_coercivity_margin.min(other.worst_coercivity_margin);
        self.max_inverse_residual = self.max_inverse_residual.max(other.max_inverse_residual);
    }

    pub fn empty() -> Self {
        BoundCheckReport {
            samples: 0,
            growth_violations: 0,
            coercivity_violations: 0,
            worst_growth_margin: f64::INFINITY,
            worst_coercivity_margin: f64::INFINITY,
            max_inverse_residual: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sample {index} (x = {x:?}, z = {z}, y = {y:?}): {source}")]
pub struct BoundCheckError {
    pub index: usize,
    pub x: [f64; 2],
    pub z: f64,
    pub y: [f64; 2],
    #[source]
    pub source: ConstitutiveError,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..=hi.log10()))
}

pub fn verify_x_bounds(
    medium: &Medium,
    ranges: &SampleRanges,
    sample_count: usize,
    seed: u64,
    tol: f64,
) -> Result<BoundCheckReport, BoundCheckError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundCheckReport::empty();
    let (lambda, chi2) = (medium.lambda(), medium.chi_star().powi(2));
    let a = medium.a();
    for index in 0..sample_count {
        let x = [rng.gen_range(0.0..=medium.lx), rng.gen_range(0.0..=medium.ly)];
        let z = if rng.gen_bool(ranges.z_zero_fraction) {
            0.0
        } else {
            log_uniform(&mut rng, ranges.z_min, ranges.z_max)
        };
        let m = log_uniform(&mut rng, ranges.y_min, ranges.y_max);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let y = [m * angle.cos(), m * angle.sin()];
        let wrap = |source| BoundCheckError { index, x, z, y, source };
        let local = medium.at(x).map_err(wrap)?;
        let w = local.weights().map_err(wrap)?;
        let v = local.x(z, y, tol).map_err(wrap)?;

        let fv = local.f(z, v);
        let residual = (fv[0] - y[0]).hypot(fv[1] - y[1]) / (1.0 + m);
        report.max_inverse_residual = report.max_inverse_residual.max(residual);

        let growth = w.w0 * m.powf(1.0 - a);
        let vm = v[0].hypot(v[1]);
        report.worst_growth_margin = report.worst_growth_margin.min((growth - vm) / growth);
        if vm > growth * (1.0 + BOUND_SLACK) {
            report.growth_violations += 1;
        }

        let inner = v[0] * y[0] + v[1] * y[1];
        let lower = w.w1 * m.powf(2.0 - a) / (chi2 * (1.0 + z).powf(2.0 * lambda)) - w.w2;
        let scale = inner.abs().max(lower.abs());
        report.worst_coercivity_margin = report.worst_coercivity_margin.min((inner - lower) / scale);
        if inner < lower - BOUND_SLACK * scale {
            report.coercivity_violations += 1;
        }
        report.samples += 1;
    }
    Ok(report)
}

/// A random heterogeneous law with N ∈ {1,2,3} and degrees in (0,4].
pub fn random_law(rng: &mut ChaCha8Rng) -> ForchheimerLaw {
    let n = rng.gen_range(1..=3);
    let mut degrees = vec![0.0];
    for _ in 0..n {
        let prev: f64 = *degrees.last().unwrap();
        let room = 4.0 - prev;
        degrees.push(prev + rng.gen_range(0.05 * room..=room / 1.5f64.max(n as f64 - 0.5)));
    }
    let coeffs = (0..=n)
        .map(|i| {
            let base = 10f64.powf(rng.gen_range(-2.0..2.0));
            // Middle coefficients may vanish somewhere; the outer ones stay positive.
            let depth = if i == 0 || i == n { rng.gen_range(0.0..0.9) } else { rng.gen_range(0.0..=1.0) };
            let (kx, ky) = (rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0));
            let src = Preset::Constant { value: base }.source();
            FieldExpr::parse(&format!("{src}*(1 + {depth}*sin({kx}*x + {ky}*y))")).expect("grammatical")
        })
        .collect();
    ForchheimerLaw::new(degrees, coeffs).expect("random degrees are increasing")
}
