//! The weight functionals K₀–K₆ and the aggregates 𝒩₁, 𝒩₂, 𝒩₃, ℰ₁–ℰ₃.
//!
//! Each is a power of ∫_U Π wₖ(x)^{eₖ} dx for positive weights wₖ. The
//! exponents reach the hundreds at admissible α, so integrands are summed as
//! ln-values with log-sum-exp and every result is carried as a logarithm.
//!
//! Finiteness is tested numerically: the integral is evaluated on the base
//! grid and two uniform refinements, and flagged divergent when it grows by
//! more than [`DIVERGENCE_RATIO`] at both steps without the growth decaying
//! by more than half. Midpoint sums of non-integrable weights grow by a
//! steady or slowly shrinking factor; an under-resolved smooth but sharply
//! peaked integrand also grows, but its quadrature error shrinks about
//! fourfold per refinement.

use serde::Serialize;

use super::{log_add_exp, log_sum_exp, FunctionalError};
use crate::constitutive::Medium;
use crate::estimates::exponents::{ExponentBundle, BOUNDARY_REL};
use crate::fields::Grid;

/// Growth factor per refinement above which an integral is declared divergent.
pub const DIVERGENCE_RATIO: f64 = 1.05;
/// Relative distance to an admissibility boundary that triggers a warning.
pub const NEAR_BOUNDARY_REL: f64 = 0.01;

/// A functional value, or the sentinel for a divergent integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KValue {
    Finite { ln: f64 },
    Divergent,
}

impl KValue {
    pub fn from_value(v: f64) -> Self {
        KValue::Finite { ln: v.ln() }
    }

    /// ln of the value; +∞ when divergent.
    pub fn ln(&self) -> f64 {
        match *self {
            KValue::Finite { ln } => ln,
            KValue::Divergent => f64::INFINITY,
        }
    }

    /// The value itself; may overflow to +∞ even when finite.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, KValue::Finite { .. })
    }

    pub fn powf(self, e: f64) -> Self {
        self.map(|l| e * l)
    }

    pub fn mul(self, other: KValue) -> Self {
        match other {
            KValue::Finite { ln } => self.map(|l| l + ln),
            KValue::Divergent => KValue::Divergent,
        }
    }

    /// 1 + self.
    pub fn one_plus(self) -> Self {
        self.map(|l| log_add_exp(0.0, l))
    }

    pub fn max(self, other: KValue) -> Self {
        match (self, other) {
            (KValue::Finite { ln: a }, KValue::Finite { ln: b }) => KValue::Finite { ln: a.max(b) },
            _ => KValue::Divergent,
        }
    }

    fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        match self {
            KValue::Finite { ln } => KValue::Finite { ln: f(ln) },
            KValue::Divergent => KValue::Divergent,
        }
    }

    pub fn require(self, name: &str) -> Result<f64, FunctionalError> {
        match self {
            KValue::Finite { ln } => Ok(ln),
            KValue::Divergent => Err(FunctionalError::Divergent { name: name.to_string() }),
        }
    }
}

/// Sum of finite values; divergent if any term is.
pub fn ksum(terms: &[KValue]) -> KValue {
    if terms.iter().any(|k| !k.is_finite()) {
        return KValue::Divergent;
    }
    let ls: Vec<f64> = terms.iter().map(KValue::ln).collect();
    KValue::Finite { ln: log_sum_exp(&ls) }
}

/// Cell samples of φ and the structural weights W₁, W₃, W₄.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFields {
    pub phi: Vec<f64>,
    pub w1: Vec<f64>,
    pub w3: Vec<f64>,
    pub w4: Vec<f64>,
}

impl WeightFields {
    pub fn sample(medium: &Medium, grid: &Grid) -> Result<Self, FunctionalError> {
        let n = grid.cell_count();
        let mut wf = WeightFields {
            phi: Vec::with_capacity(n),
            w1: Vec::with_capacity(n),
            w3: Vec::with_capacity(n),
            w4: Vec::with_capacity(n),
        };
        for c in 0..n {
            let local = medium.at(grid.cell_center(c))?;
            let w = local.weights()?;
            wf.phi.push(local.phi);
            wf.w1.push(w.w1);
            wf.w3.push(w.w3);
            wf.w4.push(w.w4);
        }
        Ok(wf)
    }

    /// Every weight equal to `phi` at every cell; handy for closed-form checks.
    pub fn uniform(grid: &Grid, phi: f64, w: f64) -> Self {
        let n = grid.cell_count();
        WeightFields { phi: vec![phi; n], w1: vec![w; n], w3: vec![w; n], w4: vec![w; n] }
    }
}

/// Pointwise weights handed to integrands.
#[derive(Debug, Clone, Copy)]
pub struct WeightPoint {
    pub phi: f64,
    pub w1: f64,
    pub w3: f64,
    pub w4: f64,
}

/// Weight samples on a grid and its two uniform refinements.
pub struct WeightIntegrator {
    levels: Vec<(Grid, WeightFields)>,
}

impl WeightIntegrator {
    pub fn new<S>(grid: &Grid, mut sampler: S) -> Result<Self, FunctionalError>
    where
        S: FnMut(&Grid) -> Result<WeightFields, FunctionalError>,
    {
        let mut levels = Vec::with_capacity(3);
        for k in 0..3 {
            let g = Grid::new(grid.lx, grid.ly, grid.nx << k, grid.ny << k)?;
            let w = sampler(&g)?;
            levels.push((g, w));
        }
        Ok(WeightIntegrator { levels })
    }

    pub fn for_medium(medium: &Medium, grid: &Grid) -> Result<Self, FunctionalError> {
        Self::new(grid, |g| WeightFields::sample(medium, g))
    }

    /// The finest grid, on which finite values are reported.
    pub fn finest(&self) -> &Grid {
        &self.levels[2].0
    }

    /// ln ∫ on each refinement level of the integrand given by `ln_f`.
    pub fn ln_integrals(&self, ln_f: impl Fn(WeightPoint) -> f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, (g, w)) in self.levels.iter().enumerate() {
            let ls: Vec<f64> = (0..g.cell_count())
                .map(|c| ln_f(WeightPoint { phi: w.phi[c], w1: w.w1[c], w3: w.w3[c], w4: w.w4[c] }))
                .collect();
            out[k] = log_sum_exp(&ls) + g.cell_area().ln();
        }
        out
    }

    /// ∫ e^{ln_f}, flagged divergent if it grows by the ratio test at both refinements.
    pub fn integrate(&self, ln_f: impl Fn(WeightPoint) -> f64) -> KValue {
        let l = self.ln_integrals(ln_f);
        let step = DIVERGENCE_RATIO.ln();
        let (g1, g2) = (l[1] - l[0], l[2] - l[1]);
        if l[2] == f64::INFINITY || (g1 > step && g2 > step && g2 > 0.5 * g1) {
            KValue::Divergent
        } else {
            KValue::Finite { ln: l[2] }
        }
    }

    /// (∫ φ^{e_φ} W₁^{e₁})^{outer}.
    fn phi_w1_power(&self, e_phi: f64, e_w1: f64, outer: f64) -> KValue {
        self.integrate(|w| e_phi * w.phi.ln() + e_w1 * w.w1.ln()).powf(outer)
    }
}

/// Fails at, warns near, an admissibility boundary `lhs > rhs`.
fn admissible(name: &str, lhs: f64, rhs: f64) -> Result<(), FunctionalError> {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    let gap = (lhs - rhs) / scale;
    if !(gap > BOUNDARY_REL) {
        return Err(FunctionalError::InvalidExponent(format!("{name} requires {lhs} > {rhs}")));
    }
    if gap < NEAR_BOUNDARY_REL {
        log::warn!("{name}: within {:.2}% of the admissibility boundary ({lhs} vs {rhs})", 100.0 * gap);
    }
    Ok(())
}

/// K_j at the bundle's α.
pub fn compute_k(j: usize, b: &ExponentBundle, wi: &WeightIntegrator) -> Result<KValue, FunctionalError> {
    let (alpha, a, lambda, r1) = (b.alpha, b.a, b.lambda, b.r1);
    Ok(match j {
        0 => wi.integrate(|w| w.phi.ln()).one_plus(),
        1 => {
            admissible("K1: 1 + mu1/alpha > 0", 1.0 + b.mu1 / alpha, 0.0)?;
            wi.phi_w1_power(-1.0, 0.0, 1.0 + b.mu1 / alpha)
        }
        2 => {
            let d = alpha * (1.0 - a) - 1.0 + lambda + a;
            admissible("K2: alpha(1-a) > 1 - lambda - a", alpha * (1.0 - a), 1.0 - lambda - a)?;
            wi.phi_w1_power(-(alpha + 1.0 - lambda - a) / d, 0.0, d / alpha)
        }
        3 => {
            admissible("K3: alpha(1-r1) > 2 lambda r1", alpha * (1.0 - r1), 2.0 * lambda * r1)?;
            let d = alpha * (1.0 - r1) - 2.0 * lambda * r1;
            wi.phi_w1_power(-2.0 * lambda * r1 / d, -r1 * alpha / d, d / (alpha * r1))
        }
        4 => {
            let bs = b.beta_star;
            admissible("K4: alpha > beta_*", alpha, bs)?;
            admissible("K4: 1 + mu1~/alpha > 0", 1.0 + b.mu1_tilde / alpha, 0.0)?;
            let e_phi = -(alpha + bs) / (alpha - bs);
            let e_w1 = -bs * alpha / (2.0 * lambda * (alpha - bs));
            wi.phi_w1_power(e_phi, e_w1, (alpha - bs) * (1.0 + b.mu1_tilde / alpha) / alpha)
        }
        5 => {
            let e_phi = -(alpha - lambda - 1.0) / (lambda + 1.0);
            let e_w4 = alpha / (lambda + 1.0);
            wi.integrate(|w| e_phi * w.phi.ln() + e_w4 * w.w4.ln())
        }
        6 => {
            let d = b.r - lambda * (5.0 - 4.0 * a) + 1.0;
            admissible("K6: r + 1 > lambda(5-4a)", b.r + 1.0, lambda * (5.0 - 4.0 * a))?;
            let e = (alpha + b.r) / d;
            wi.integrate(|w| e * w.w3.ln())
        }
        _ => return Err(FunctionalError::InvalidExponent(format!("no functional K{j}"))),
    })
}

/// Every weight functional of the estimates, at the bundle's α and p-tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KFunctionals {
    pub k: [KValue; 7],
    pub n1: KValue,
    pub n2: KValue,
    pub n3: KValue,
    pub e1: KValue,
    pub e2: KValue,
    pub e3: KValue,
    /// 1 + ∫φ.
    pub phi_star: KValue,
    /// ∫φ^{2/r_* − 1}.
    pub phi_star2: KValue,
    /// ∫φ⁻¹.
    pub phi_dstar: KValue,
    /// Ψ_T, once a horizon and forcing are supplied.
    pub psi_t: Option<f64>,
    /// ln V_{α,0} = ln(1 + ∫φu₀^α), once an initial datum is supplied.
    pub ln_v_alpha0: Option<f64>,
}

impl KFunctionals {
    pub fn compute(b: &ExponentBundle, wi: &WeightIntegrator) -> Result<Self, FunctionalError> {
        let mut k = [KValue::Divergent; 7];
        for (j, slot) in k.iter_mut().enumerate() {
            *slot = compute_k(j, b, wi)?;
        }
        let n1 = compute_n1(b, wi)?;
        let (n2, e1, e2, e3) = compute_n2(b, wi)?;
        let phi_star = e1;
        let phi_star2 = wi.integrate(|w| (2.0 / b.r_star - 1.0) * w.phi.ln());
        let phi_dstar = wi.integrate(|w| -w.phi.ln());
        Ok(KFunctionals {
            k,
            n1,
            n2,
            n3: n1.max(n2),
            e1,
            e2,
            e3,
            phi_star,
            phi_star2,
            phi_dstar,
            psi_t: None,
            ln_v_alpha0: None,
        })
    }

    /// Fails with the name of the first divergent functional.
    pub fn require_finite(&self) -> Result<(), FunctionalError> {
        for (j, v) in self.k.iter().enumerate() {
            v.require(&format!("K{j}"))?;
        }
        for (name, v) in [("N1", self.n1), ("N2", self.n2), ("E1", self.e1), ("E2", self.e2), ("E3", self.e3)] {
            v.require(name)?;
        }
        Ok(())
    }
}

/// 𝒩₁ from the Caccioppoli-type estimate; depends on p₁…p₅ but not on α.
pub fn compute_n1(b: &ExponentBundle, wi: &WeightIntegrator) -> Result<KValue, FunctionalError> {
    let (a, p, q) = (b.a, b.p, b.q);
    let d3 = p[2] * (2.0 - a) - 1.0;
    admissible("N1: p3(2-a) > 1", p[2] * (2.0 - a), 1.0)?;
    for (i, &pi) in p.iter().take(5).enumerate() {
        admissible(["N1: p1 > 1", "N1: p2 > 1", "N1: p3 > 1", "N1: p4 > 1", "N1: p5 > 1"][i], pi, 1.0)?;
    }
    let t1 = wi.integrate(|w| q[0] * w.w4.ln() - q[0] / p[0] * w.phi.ln()).powf(1.0 / q[0]);
    let t2 = wi.integrate(|w| q[1] * w.w3.ln() - q[1] / p[1] * w.phi.ln()).powf(1.0 / q[1]);
    let t4 = wi.integrate(|w| -q[3] / p[3] * w.phi.ln()).powf(1.0 / (p[2] * q[3]));
    let t5 = wi
        .integrate(|w| -q[4] / (1.0 - a) * w.w1.ln() - q[4] / p[4] * w.phi.ln())
        .powf((1.0 - a) / (q[4] * d3));
    let e1 = wi.integrate(|w| w.phi.ln()).one_plus();
    Ok(e1.mul(ksum(&[KValue::Finite { ln: 0.0 }, t1, t2, t4, t5])))
}

/// (𝒩₂, ℰ₁, ℰ₂, ℰ₃) from the parabolic embedding.
pub fn compute_n2(
    b: &ExponentBundle,
    wi: &WeightIntegrator,
) -> Result<(KValue, KValue, KValue, KValue), FunctionalError> {
    let (r1, rs, lambda) = (b.r1, b.r_star, b.lambda);
    admissible("N2: r1 < 1", 1.0, r1)?;
    let e1 = wi.integrate(|w| w.phi.ln()).one_plus();
    let e2 = wi.integrate(|w| (2.0 / rs - 1.0) * w.phi.ln()).powf(rs / 2.0);
    let (s1, s2) = (r1 / (1.0 - r1), r1 / ((1.0 - r1) * (1.0 - r1)));
    let e3 = wi
        .integrate(|w| s1 * (1.0 + 1.0 / w.phi).ln() + s2 * (1.0 + 1.0 / w.w1).ln())
        .one_plus()
        .powf((1.0 - r1) / r1);
    let n2 = e1.powf((1.0 - r1).min(2.0 * lambda / (1.0 + lambda))).mul(e2).mul(e3);
    Ok((n2, e1, e2, e3))
}

/// ln V_α = ln(1 + ∫φu^α).
pub fn ln_v_alpha(u: &[f64], alpha: f64, phi: &[f64], grid: &Grid) -> f64 {
    log_add_exp(0.0, super::ln_phi_moment(u, alpha, phi, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{FluidEos, ForchheimerLaw, RotationGravity};
    use crate::estimates::exponents::{ExponentParams, DEFAULT_P};
    use crate::fields::FieldExpr;

    fn unit(n: usize) -> Grid {
        Grid::new(1.0, 1.0, n, n).unwrap()
    }

    fn bundle(alpha: f64) -> ExponentBundle {
        ExponentBundle::compute(&ExponentParams::default_point(alpha)).unwrap()
    }

    fn uniform(phi: f64) -> WeightIntegrator {
        WeightIntegrator::new(&unit(4), |g| Ok(WeightFields::uniform(g, phi, 0.5))).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let b = bundle(120.0);
        let wi = uniform(1.0);
        assert!((compute_k(0, &b, &wi).unwrap().value() - 2.0).abs() < 1e-14);
        assert!((compute_k(1, &b, &wi).unwrap().value() - 1.0).abs() < 1e-14);
        assert!((compute_k(2, &b, &wi).unwrap().value() - 1.0).abs() < 1e-14);
        // K₆ = W₃^{(α+r)/(r−λ(5−4a)+1)} for constant weights.
        let e = (120.0 + b.r) / (b.r - 3.0 + 1.0);
        assert!((compute_k(6, &b, &wi).unwrap().ln() - e * 0.5f64.ln()).abs() < 1e-10);
        assert!(compute_k(7, &b, &wi).is_err());
    }

    #[test]
    fn k3_boundary_is_an_error() {
        // α(1−r₁) = 2λr₁ at r₁ = 0.8, λ = 1 means α = 8.
        let mut b = bundle(120.0);
        b.alpha = 8.0;
        match compute_k(3, &b, &uniform(1.0)) {
            Err(FunctionalError::InvalidExponent(msg)) => assert!(msg.contains("K3"), "{msg}"),
            other => panic!("expected an exponent error, got {other:?}"),
        }
        b.alpha = 8.01;
        assert!(compute_k(3, &b, &uniform(1.0)).unwrap().is_finite());
    }

    #[test]
    fn aggregates_are_at_least_one() {
        let b = bundle(120.0);
        let f = KFunctionals::compute(&b, &uniform(0.3)).unwrap();
        f.require_finite().unwrap();
        assert!(f.k[0].ln() >= 0.0 && f.n3.ln() >= 0.0 && f.n1.ln() >= 0.0);
        assert!(f.n3.ln() >= f.n2.ln() && f.n3.ln() >= f.n1.ln());
        assert!((f.phi_dstar.value() - 1.0 / 0.3).abs() < 1e-12);
        assert_eq!(b.p[..5], DEFAULT_P);
    }

    #[test]
    fn singular_weight_is_flagged() {
        let g = unit(8);
        let singular = |g: &Grid| {
            let phi: Vec<f64> = (0..g.cell_count()).map(|c| g.cell_center(c)[0].powi(2)).collect();
            Ok(WeightFields { w1: phi.clone(), w3: phi.clone(), w4: phi.clone(), phi })
        };
        let wi = WeightIntegrator::new(&g, singular).unwrap();
        // ∫x⁻² diverges; ∫x^{−1/2} converges.
        assert_eq!(wi.integrate(|w| -w.phi.ln()), KValue::Divergent);
        assert!(wi.integrate(|w| -0.25 * w.phi.ln()).is_finite());
        let b = bundle(120.0);
        let f = KFunctionals::compute(&b, &wi).unwrap();
        assert!(matches!(f.require_finite(), Err(FunctionalError::Divergent { .. })));
    }

    #[test]
    fn smooth_medium_refines_monotonically() {
        let rot = RotationGravity::vertical(1.0, 1.0).unwrap();
        let m = Medium::new(
            ForchheimerLaw::two_term(1.0, 1.0),
            FluidEos::default(),
            &rot,
            FieldExpr::parse("0.3 + 0.2*sin(3*x)*cos(2*y)").unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let wi = WeightIntegrator::for_medium(&m, &unit(32)).unwrap();
        let b = bundle(120.0);
        for (name, e_phi, e_w1) in [("K1", -1.0, 0.0), ("K3", -0.03, -1.5), ("phi", 1.0, 0.0)] {
            let l = wi.ln_integrals(|w| e_phi * w.phi.ln() + e_w1 * w.w1.ln());
            let (d1, d2) = ((l[1] - l[0]).abs(), (l[2] - l[1]).abs());
            assert!(d2 < d1, "{name}: {l:?}");
        }
        let f = KFunctionals::compute(&b, &wi).unwrap();
        f.require_finite().unwrap();
    }

    #[test]
    fn v_alpha_is_at_least_one() {
        let g = unit(4);
        let u = vec![0.5; 16];
        let phi = vec![1.0; 16];
        let l = ln_v_alpha(&u, 100.0, &phi, &g);
        assert!(l > 0.0 && (l / 0.5f64.powi(100) - 1.0).abs() < 1e-12);
    }
}
