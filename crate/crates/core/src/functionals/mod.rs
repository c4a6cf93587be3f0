//! Weighted integrals over cells, faces and time.
//!
//! Spatial quadrature is the midpoint rule on cell averages, temporal
//! quadrature the trapezoid rule on snapshots. Every reduction goes through
//! [`pairwise_sum`], whose summation tree depends only on the input length, so
//! results are bit-reproducible.

pub mod kfun;

use thiserror::Error;

use crate::constitutive::ConstitutiveError;
use crate::fields::{BoundaryForcing, BoundaryPartition, EvalContext, FieldError, Grid, GridError, PartitionError};

pub use kfun::{compute_k, ln_v_alpha, KFunctionals, KValue, WeightFields, WeightIntegrator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("space-time norm needs at least two snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("snapshot times must be strictly increasing")]
    NonMonotoneTimes,
    #[error("horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("{name} diverges under refinement")]
    Divergent { name: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

/// Leaf size below which the pairwise tree sums sequentially.
const PAIRWISE_LEAF: usize = 16;

/// Sum over a fixed binary tree: halves split at `len/2` down to leaves of
/// at most [`PAIRWISE_LEAF`] terms.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let (lo, hi) = xs.split_at(xs.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// ln Σ exp(lᵢ); −∞ for an empty or all −∞ input, +∞ if any term is +∞.
pub fn log_sum_exp(ls: &[f64]) -> f64 {
    let m = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let shifted: Vec<f64> = ls.iter().map(|&l| (l - m).exp()).collect();
    m + (pairwise_sum(&shifted) - 1.0).ln_1p()
}

/// ln(eˣ + eʸ).
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (x.min(y) - m).exp().ln_1p()
}

/// ∫ φ|f|^α by the midpoint rule.
pub fn phi_moment(f: &[f64], alpha: f64, phi: &[f64], grid: &Grid) -> f64 {
    let terms: Vec<f64> = f.iter().zip(phi).map(|(&v, &p)| v.abs().powf(alpha) * p).collect();
    pairwise_sum(&terms) * grid.cell_area()
}

/// ln ∫ φ|f|^α, evaluated without overflow for large α.
pub fn ln_phi_moment(f: &[f64], alpha: f64, phi: &[f64], grid: &Grid) -> f64 {
    let ls: Vec<f64> = f.iter().zip(phi).map(|(&v, &p)| alpha * v.abs().ln() + p.ln()).collect();
    log_sum_exp(&ls) + grid.cell_area().ln()
}

/// ‖f‖_{L^α_φ} for α ≥ 1.
pub fn lp_phi_norm(f: &[f64], alpha: f64, phi: &[f64], grid: &Grid) -> Result<f64, FunctionalError> {
    if !(alpha >= 1.0) {
        return Err(FunctionalError::InvalidExponent(format!("norm needs α ≥ 1, got {alpha}; use the quasi-norm")));
    }
    Ok(scaled_norm(f, alpha, phi, grid))
}

/// The same expression for 0 < α < 1, where it is only a quasi-norm.
pub fn lp_phi_quasi_norm(f: &[f64], alpha: f64, phi: &[f64], grid: &Grid) -> Result<f64, FunctionalError> {
    if !(alpha > 0.0) {
        return Err(FunctionalError::InvalidExponent(format!("quasi-norm needs α > 0, got {alpha}")));
    }
    Ok(scaled_norm(f, alpha, phi, grid))
}

/// max|f| · (∫φ(|f|/max|f|)^α)^{1/α}: exact in real arithmetic, overflow-free.
fn scaled_norm(f: &[f64], alpha: f64, phi: &[f64], grid: &Grid) -> f64 {
    let m = f.iter().fold(0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = f.iter().zip(phi).map(|(&v, &p)| (v.abs() / m).powf(alpha) * p).collect();
    m * (pairwise_sum(&terms) * grid.cell_area()).powf(1.0 / alpha)
}

/// Trapezoid weights for strictly increasing nodes.
pub fn trapezoid_weights(times: &[f64]) -> Result<Vec<f64>, FunctionalError> {
    if times.len() < 2 {
        return Err(FunctionalError::TooFewSnapshots(times.len()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FunctionalError::NonMonotoneTimes);
    }
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let h = times[k + 1] - times[k];
        w[k] += h / 2.0;
        w[k + 1] += h / 2.0;
    }
    Ok(w)
}

/// ‖u‖_{L^α_φ(U×(t₀,t_end))}: trapezoid in time over the snapshots.
pub fn spacetime_lp_phi_norm(
    times: &[f64],
    fields: &[Vec<f64>],
    alpha: f64,
    phi: &[f64],
    grid: &Grid,
) -> Result<f64, FunctionalError> {
    if !(alpha > 0.0) {
        return Err(FunctionalError::InvalidExponent(format!("α must be positive, got {alpha}")));
    }
    let w = trapezoid_weights(times)?;
    let ls: Vec<f64> = fields
        .iter()
        .zip(&w)
        .map(|(u, &wk)| ln_phi_moment(u, alpha, phi, grid) + wk.ln())
        .collect();
    Ok((log_sum_exp(&ls) / alpha).exp())
}

/// Σ_f |v_f|^power · |f| over the boundary faces, `values` aligned with
/// `grid.boundary_faces()`.
pub fn boundary_integral(values: &[f64], power: f64, grid: &Grid) -> f64 {
    let terms: Vec<f64> = values
        .iter()
        .zip(grid.boundary_faces())
        .map(|(&v, &f)| if v == 0.0 { 0.0 } else { v.abs().powf(power) * grid.face(f).length })
        .collect();
    pairwise_sum(&terms)
}

/// z⁻ = max{0, −z}.
#[inline]
pub fn neg_part(z: f64) -> f64 {
    (-z).max(0.0)
}

/// ψ₁ and ψ₂ on the boundary faces at one time, zero-extended off their parts.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
}

impl BoundaryValues {
    pub fn evaluate(
        forcing: &BoundaryForcing,
        partition: &BoundaryPartition,
        grid: &Grid,
        t: f64,
    ) -> Result<Self, FunctionalError> {
        let tags = partition.tag_faces(grid)?;
        Self::evaluate_tagged(forcing, &tags, grid, t)
    }

    /// As [`BoundaryValues::evaluate`] with precomputed face tags.
    pub fn evaluate_tagged(
        forcing: &BoundaryForcing,
        tags: &[crate::fields::BoundaryTag],
        grid: &Grid,
        t: f64,
    ) -> Result<Self, FunctionalError> {
        let mut psi1 = Vec::with_capacity(tags.len());
        let mut psi2 = Vec::with_capacity(tags.len());
        for (&f, &tag) in grid.boundary_faces().iter().zip(tags) {
            let [x, y] = grid.face(f).center;
            let (p1, p2) = forcing.eval(tag, &EvalContext::new(x, y, t, grid.lx, grid.ly)).map_err(|source| {
                FieldError::Face { expr: format!("{} | {}", forcing.psi1.source(), forcing.psi2.source()), face: f, source }
            })?;
            psi1.push(p1);
            psi2.push(p2);
        }
        Ok(BoundaryValues { psi1, psi2 })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.boundary_faces().len();
        BoundaryValues { psi1: vec![0.0; n], psi2: vec![0.0; n] }
    }

    /// ∫_Γ (ψ₁⁻)^{e₁} + (ψ₂⁻)^{e₂} dS.
    pub fn negative_part_integral(&self, e1: f64, e2: f64, grid: &Grid) -> f64 {
        let n1: Vec<f64> = self.psi1.iter().map(|&v| neg_part(v)).collect();
        let n2: Vec<f64> = self.psi2.iter().map(|&v| neg_part(v)).collect();
        boundary_integral(&n1, e1, grid) + boundary_integral(&n2, e2, grid)
    }
}

/// M_α = 1 + ∫_Γ[(ψ₁⁻)^{(α+r)/(r+λ)} + (ψ₂⁻)^{(α+r)/r}] dS.
pub fn m_alpha(bv: &BoundaryValues, grid: &Grid, alpha: f64, r: f64, lambda: f64) -> Result<f64, FunctionalError> {
    if !(r > 0.0) {
        return Err(FunctionalError::InvalidExponent(format!("M_α needs r > 0, got {r}")));
    }
    Ok(1.0 + bv.negative_part_integral((alpha + r) / (r + lambda), (alpha + r) / r, grid))
}

/// Composite Simpson intervals used for time integrals of boundary data.
pub const TIME_INTERVALS: usize = 256;

/// Composite Simpson rule for ∫₀^T h(t) dt; exact in one evaluation when `steady`.
pub fn time_integral<F>(t_end: f64, steady: bool, mut h: F) -> Result<f64, FunctionalError>
where
    F: FnMut(f64) -> Result<f64, FunctionalError>,
{
    if steady {
        return Ok(t_end * h(0.0)?);
    }
    let n = TIME_INTERVALS;
    let dt = t_end / n as f64;
    let mut terms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        terms.push(w * h(k as f64 * dt)?);
    }
    Ok(pairwise_sum(&terms) * dt / 3.0)
}

/// Ψ_T = 1 + (∫₀^T∫_Γ (ψ₁⁻)^{q₃} + (ψ₂⁻)^{q₃})^{p₃(2−a)/(q₃(p₃(2−a)−1))}.
pub fn psi_t(
    forcing: &BoundaryForcing,
    partition: &BoundaryPartition,
    grid: &Grid,
    t_end: f64,
    p3: f64,
    a: f64,
) -> Result<f64, FunctionalError> {
    if !(t_end > 0.0) {
        return Err(FunctionalError::Horizon(t_end));
    }
    let d = p3 * (2.0 - a) - 1.0;
    if !(d > 0.0) || !(p3 > 1.0) {
        return Err(FunctionalError::InvalidExponent(format!("Ψ_T needs p3 > 1 and p3(2-a) > 1, got p3 = {p3}")));
    }
    let q3 = p3 / (p3 - 1.0);
    let tags = partition.tag_faces(grid)?;
    let total = time_integral(t_end, forcing.is_steady(), |t| {
        Ok(BoundaryValues::evaluate_tagged(forcing, &tags, grid, t)?.negative_part_integral(q3, q3, grid))
    })?;
    Ok(1.0 + total.powf(p3 * (2.0 - a) / (q3 * d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{materialize, BoundaryTag, FieldExpr};
    use proptest::prelude::*;

    fn unit(n: usize) -> Grid {
        Grid::new(1.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn norm_examples() {
        let g = unit(8);
        let ones = vec![1.0; 64];
        assert!((lp_phi_norm(&ones, 2.0, &ones, &g).unwrap() - 1.0).abs() < 1e-15);
        let twos = vec![2.0; 64];
        assert!((lp_phi_norm(&twos, 3.0, &ones, &g).unwrap() - 2.0).abs() < 1e-14);
        let x = materialize(&FieldExpr::parse("x").unwrap(), &g, 0.0).unwrap();
        assert!((lp_phi_norm(&x, 1.0, &ones, &g).unwrap() - 0.5).abs() < 1e-14);
        assert!(lp_phi_norm(&x, 0.5, &ones, &g).is_err());
        assert!(lp_phi_quasi_norm(&x, 0.5, &ones, &g).is_ok());
        assert_eq!(lp_phi_norm(&vec![0.0; 64], 4.0, &ones, &g).unwrap(), 0.0);
    }

    #[test]
    fn large_exponent_does_not_overflow() {
        let g = unit(4);
        let u = vec![50.0; 16];
        let phi = vec![1.0; 16];
        let n = lp_phi_norm(&u, 400.0, &phi, &g).unwrap();
        assert!((n - 50.0).abs() < 1e-12);
        assert!((ln_phi_moment(&u, 400.0, &phi, &g) - 400.0 * 50f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn affine_quadrature_is_exact() {
        let g = Grid::new(2.0, 3.0, 7, 5).unwrap();
        let f = materialize(&FieldExpr::parse("1 + 2*x - 3*y").unwrap(), &g, 0.0).unwrap();
        let ones = vec![1.0; g.cell_count()];
        let int = pairwise_sum(&f) * g.cell_area();
        // ∫(1+2x−3y) over [0,2]×[0,3] = 6 + 12 − 27.
        assert!((int - (6.0 + 12.0 - 27.0)).abs() < 1e-13);
        let pos: Vec<f64> = f.iter().map(|v| v + 10.0).collect();
        assert!((phi_moment(&pos, 1.0, &ones, &g) - (-9.0 + 60.0)).abs() < 1e-12);
    }

    #[test]
    fn spacetime_examples() {
        let g = unit(4);
        let u = vec![1.0; 16];
        let phi = vec![1.0; 16];
        let n = spacetime_lp_phi_norm(&[0.0, 1.0, 2.0], &[u.clone(), u.clone(), u.clone()], 4.0, &phi, &g).unwrap();
        assert!((n - 2f64.powf(0.25)).abs() < 1e-15);
        let c = vec![3.0; 16];
        let n = spacetime_lp_phi_norm(&[0.0, 0.5], &[c.clone(), c.clone()], 2.0, &phi, &g).unwrap();
        assert!((n - 0.5f64.sqrt() * 3.0).abs() < 1e-14);
        assert!(matches!(
            spacetime_lp_phi_norm(&[0.0], &[u], 4.0, &phi, &g),
            Err(FunctionalError::TooFewSnapshots(1))
        ));
    }

    fn forcing(p1: &str, p2: &str) -> BoundaryForcing {
        BoundaryForcing { psi1: FieldExpr::parse(p1).unwrap(), psi2: FieldExpr::parse(p2).unwrap() }
    }

    #[test]
    fn boundary_examples() {
        let g = unit(4);
        let nb = g.boundary_faces().len();
        assert_eq!(boundary_integral(&vec![0.0; nb], 2.0, &g), 0.0);
        assert!((boundary_integral(&vec![1.0; nb], 2.0, &g) - 4.0).abs() < 1e-15);
        let part = BoundaryPartition::uniform(BoundaryTag::Gamma1, 1.0, 1.0);
        let bv = BoundaryValues::evaluate(&forcing("1 + x", "0"), &part, &g, 0.0).unwrap();
        let neg: Vec<f64> = bv.psi1.iter().map(|&v| neg_part(v)).collect();
        assert_eq!(boundary_integral(&neg, 3.0, &g), 0.0);
    }

    #[test]
    fn m_alpha_examples() {
        let g = unit(4);
        let p1 = BoundaryPartition::uniform(BoundaryTag::Gamma1, 1.0, 1.0);
        let bv = BoundaryValues::evaluate(&forcing("1", "0"), &p1, &g, 0.0).unwrap();
        assert_eq!(m_alpha(&bv, &g, 3.0, 1.0, 1.0).unwrap(), 1.0);
        let bv = BoundaryValues::evaluate(&forcing("-1", "0"), &p1, &g, 0.0).unwrap();
        assert!((m_alpha(&bv, &g, 3.0, 1.0, 1.0).unwrap() - 5.0).abs() < 1e-14);
        let p2 = BoundaryPartition::uniform(BoundaryTag::Gamma2, 1.0, 1.0);
        let bv = BoundaryValues::evaluate(&forcing("-1", "-0.5"), &p2, &g, 0.0).unwrap();
        // ψ₁ is zero-extended off Γ₁; ψ₂ = −c contributes 4c^{(α+r)/r}.
        assert!((m_alpha(&bv, &g, 3.0, 1.0, 1.0).unwrap() - (1.0 + 4.0 * 0.5f64.powi(4))).abs() < 1e-14);
        assert!(m_alpha(&bv, &g, 3.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn psi_t_examples() {
        let g = unit(4);
        let p2 = BoundaryPartition::uniform(BoundaryTag::Gamma2, 1.0, 1.0);
        assert_eq!(psi_t(&forcing("0", "1 + t"), &p2, &g, 1.0, 2.0, 0.5).unwrap(), 1.0);
        // q₃ = 2 at p₃ = 2; exponent p₃(2−a)/(q₃(p₃(2−a)−1)) = 3/4 at a = 1/2.
        let v = psi_t(&forcing("0", "-1"), &p2, &g, 1.0, 2.0, 0.5).unwrap();
        assert!((v - (1.0 + 4f64.powf(0.75))).abs() < 1e-13);
        // A time-dependent integrand goes through Simpson: ∫₀¹ 4t² dt = 4/3.
        let v = psi_t(&forcing("0", "-t"), &p2, &g, 1.0, 2.0, 0.5).unwrap();
        assert!((v - (1.0 + (4.0f64 / 3.0).powf(0.75))).abs() < 1e-12);
        assert!(matches!(psi_t(&forcing("0", "-1"), &p2, &g, 0.0, 2.0, 0.5), Err(FunctionalError::Horizon(_))));
        assert!(psi_t(&forcing("0", "-1"), &p2, &g, 1.0, 0.6, 0.5).is_err());
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0).collect();
        assert_eq!(pairwise_sum(&xs).to_bits(), pairwise_sum(&xs.clone()).to_bits());
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-10);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn moments_scale_homogeneously(c in 0.1f64..10.0, alpha in 1.0f64..50.0) {
            let g = unit(4);
            let u: Vec<f64> = (0..16).map(|i| 0.5 + i as f64 / 16.0).collect();
            let phi: Vec<f64> = (0..16).map(|i| 0.2 + (i % 3) as f64 / 10.0).collect();
            let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
            let a = lp_phi_norm(&cu, alpha, &phi, &g).unwrap();
            let b = c * lp_phi_norm(&u, alpha, &phi, &g).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }
    }
}
