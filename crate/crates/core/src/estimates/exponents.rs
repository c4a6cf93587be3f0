//! Exponents and thresholds of the L^α and L^∞ estimates.
//!
//! Everything is specialised to the planar case n = 2 with the structural
//! choices p = 2 − a, s = λ + 1 and β = 2λ used throughout the estimates.
//! The free functions are the raw formulas; [`ExponentBundle::compute`]
//! validates the parameter point and evaluates all of them together.

use serde::Serialize;
use thiserror::Error;

/// Spatial dimension of the estimates.
pub const DIM: f64 = 2.0;

/// Relative distance below which a strict inequality counts as violated.
pub const BOUNDARY_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExponentError {
    #[error("constraint `{name}` violated: {detail}")]
    Violated { name: &'static str, detail: String },
    #[error("α = {alpha} does not exceed α_* = {alpha_star}; binding term `{binding}`")]
    AlphaTooSmall { alpha: f64, alpha_star: f64, binding: &'static str },
}

fn violated(name: &'static str, detail: String) -> ExponentError {
    ExponentError::Violated { name, detail }
}

/// Requires lhs > rhs with a relative gap above [`BOUNDARY_REL`].
pub fn require_gt(name: &'static str, lhs: f64, rhs: f64) -> Result<(), ExponentError> {
    let scale = lhs.abs().max(rhs.abs()).max(1e-300);
    if lhs.is_finite() && rhs.is_finite() && (lhs - rhs) / scale > BOUNDARY_REL {
        Ok(())
    } else {
        Err(violated(name, format!("need {lhs} > {rhs}")))
    }
}

/// r_* = 1 + (2−a)/n − 1/r₁.
pub fn r_star(a: f64, r1: f64) -> f64 {
    1.0 + (2.0 - a) / DIM - 1.0 / r1
}

/// r̃ = ((2−a)r − 1 + λ + a)/(1−a).
pub fn r_tilde(a: f64, lambda: f64, r: f64) -> f64 {
    ((2.0 - a) * r - 1.0 + lambda + a) / (1.0 - a)
}

/// θ(r) = (α+2r)/(α(1+r_*) + 2(1−a−λ)); also gives θ̃ when fed r̃.
pub fn theta(alpha: f64, r_star: f64, a: f64, lambda: f64, r: f64) -> f64 {
    (alpha + 2.0 * r) / (alpha * (1.0 + r_star) + 2.0 * (1.0 - a - lambda))
}

/// μ₁(r,θ) = (r + θ(a+λ−1))/(1−θ).
pub fn mu1(theta: f64, a: f64, lambda: f64, r: f64) -> f64 {
    (r + theta * (a + lambda - 1.0)) / (1.0 - theta)
}

/// κ(α) = 1 + r_*/2 + (1−λ−a)/α.
pub fn kappa(alpha: f64, r_star: f64, lambda: f64, a: f64) -> f64 {
    1.0 + r_star / 2.0 + (1.0 - lambda - a) / alpha
}

/// θ₀ = 1/(1 + r_*α/(2(α+1−λ−a))).
pub fn theta0(alpha: f64, r_star: f64, lambda: f64, a: f64) -> f64 {
    1.0 / (1.0 + r_star * alpha / (2.0 * (alpha + 1.0 - lambda - a)))
}

/// θ_** = 1/(1 + r_*/2), the common upper bound of θ and θ̃ for large α.
pub fn theta_2star(r_star: f64) -> f64 {
    1.0 / (1.0 + r_star / 2.0)
}

/// α past which θ(r) ≤ θ_**: 2r(1+2/r_*) + 4λ/r_*.
pub fn claim_threshold(r: f64, r_star: f64, lambda: f64) -> f64 {
    2.0 * r * (1.0 + 2.0 / r_star) + 4.0 * lambda / r_star
}

/// h₁ = λ + 1.
pub fn h1(lambda: f64) -> f64 {
    lambda + 1.0
}

/// h₂ = max{0, λ(5−4a)−1, (a+3λ−1)/(p₃(2−a)−1)}.
pub fn h2(a: f64, lambda: f64, p3: f64) -> f64 {
    0f64.max(lambda * (5.0 - 4.0 * a) - 1.0).max((a + 3.0 * lambda - 1.0) / (p3 * (2.0 - a) - 1.0))
}

/// h₃ = max{h₂, 1−a−λ}.
pub fn h3(h2: f64, a: f64, lambda: f64) -> f64 {
    h2.max(1.0 - a - lambda)
}

/// μ̄ = 1 + r_*/2 + min{1−r₁, 2λ/(λ+1)}.
pub fn mu_bar(r_star: f64, r1: f64, lambda: f64) -> f64 {
    1.0 + r_star / 2.0 + (1.0 - r1).min(2.0 * lambda / (lambda + 1.0))
}

/// γ = 2 max{3−2a, 1/(p₃(2−a)−1)}.
pub fn gamma_caccioppoli(a: f64, p3: f64) -> f64 {
    2.0 * (3.0 - 2.0 * a).max(1.0 / (p3 * (2.0 - a) - 1.0))
}

/// ν₁(α) = (α−h₁)/(1 + 1/(α(1+r_*/2))).
pub fn nu1(alpha: f64, h1: f64, r_star: f64) -> f64 {
    (alpha - h1) / (1.0 + 1.0 / (alpha * (1.0 + r_star / 2.0)))
}

/// ν₂(α) = (α+h₃)(1 + 3λ/α).
pub fn nu2(alpha: f64, h3: f64, lambda: f64) -> f64 {
    (alpha + h3) * (1.0 + 3.0 * lambda / alpha)
}

/// Hölder conjugate q = p/(p−1).
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// A named entry of a threshold list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub name: &'static str,
    pub value: f64,
}

/// Largest entry of a threshold list (first one on ties).
pub fn binding(terms: &[Term]) -> Term {
    let mut best = terms[0];
    for t in &terms[1..] {
        if t.value > best.value {
            best = *t;
        }
    }
    best
}

/// Input point of the exponent calculator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentParams {
    pub a: f64,
    pub lambda: f64,
    pub r1: f64,
    pub r: f64,
    pub alpha: f64,
    pub kappa_tilde: f64,
    /// p₁..p₅.
    pub p: [f64; 5],
}

impl ExponentParams {
    /// The default certification point: a = 1/2, λ = 1, r₁ = 0.8, r = 2.5, κ̃ = 1.1.
    pub fn default_point(alpha: f64) -> Self {
        ExponentParams { a: 0.5, lambda: 1.0, r1: 0.8, r: 2.5, alpha, kappa_tilde: 1.1, p: DEFAULT_P }
    }
}

/// Default Hölder exponents p₁..p₅; p₃p₄ and p₆ stay below κ̃ = 1.1.
pub const DEFAULT_P: [f64; 5] = [1.05, 1.05, 1.005, 1.05, 1.02];

/// All exponents of the estimates at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentBundle {
    pub n: usize,
    pub a: f64,
    pub lambda: f64,
    pub r1: f64,
    pub r_star: f64,
    pub r: f64,
    pub r_tilde: f64,
    /// Structural triple p = 2−a, s = λ+1, β = 2λ.
    pub p_struct: f64,
    pub s_struct: f64,
    pub beta_struct: f64,
    pub alpha: f64,
    pub m: f64,
    pub theta: f64,
    pub theta_tilde: f64,
    pub theta0: f64,
    pub theta0_hat: f64,
    pub theta_2star: f64,
    pub mu1: f64,
    pub mu1_tilde: f64,
    /// μ̂₁..μ̂₅.
    pub mu_hat: [f64; 5],
    pub mu_star: f64,
    pub beta_star: f64,
    /// β̂₁..β̂₃.
    pub beta_hat: [f64; 3],
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub alpha_2star: f64,
    pub alpha_star: f64,
    pub alpha_star_binding: &'static str,
    pub gamma_star: f64,
    pub gamma: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub mu_bar: f64,
    /// p₁..p₆ and their conjugates.
    pub p: [f64; 6],
    pub q: [f64; 6],
    pub nu1: f64,
    pub nu2: f64,
}

impl ExponentBundle {
    /// Validates the structural inequalities and evaluates every exponent.
    pub fn compute(pp: &ExponentParams) -> Result<Self, ExponentError> {
        let ExponentParams { a, lambda, r1, r, alpha, kappa_tilde: kt, p: p5 } = *pp;
        if !(a > 0.0 && a < 1.0) {
            return Err(violated("0 < a < 1", format!("a = {a}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(violated("λ > 0", format!("λ = {lambda}")));
        }
        let p_struct = 2.0 - a;
        require_gt("r1 > n/(n+2-a)", r1, DIM / (DIM + p_struct))?;
        require_gt("r1 < 1", 1.0, r1)?;
        require_gt("r1 (2-a) > 1", r1 * p_struct, 1.0)?;
        let rs = r_star(a, r1);
        let r_lo = 0f64.max(lambda * (5.0 - 4.0 * a) - 1.0).max((1.0 - a - lambda) / (2.0 - a));
        require_gt("r > max{0, λ(5-4a)-1, (1-a-λ)/(2-a)}", r, r_lo)?;
        let rt = r_tilde(a, lambda, r);
        require_gt("r~ > 0", rt, 0.0)?;
        require_gt("α ≥ 1+λ", alpha + BOUNDARY_REL * alpha, 1.0 + lambda)?;
        require_gt("κ~ > 1", kt, 1.0)?;
        require_gt("κ~ < sqrt(1+r_*/2)", (1.0 + rs / 2.0).sqrt(), kt)?;
        for (i, &pi) in p5.iter().enumerate() {
            if !(pi > 1.0 && pi.is_finite()) {
                return Err(violated("p_i > 1", format!("p{} = {pi}", i + 1)));
            }
        }
        require_gt("p1 < κ~", kt, p5[0])?;
        require_gt("p2 < κ~", kt, p5[1])?;
        require_gt("p3 p4 < κ~", kt, p5[2] * p5[3])?;
        require_gt("p3 (2-a) > 1", p5[2] * p_struct, 1.0)?;
        let p6 = p5[4] * (p5[2] * p_struct - 1.0) / (1.0 - a);
        require_gt("p6 > 1", p6, 1.0)?;
        require_gt("p6 < κ~", kt, p6)?;

        let th = theta(alpha, rs, a, lambda, r);
        let tht = theta(alpha, rs, a, lambda, rt);
        for (name, v) in [("0 < θ < 1", th), ("0 < θ~ < 1", tht)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(violated(name, format!("value {v} at α = {alpha}")));
            }
        }
        let m1 = mu1(th, a, lambda, r);
        let m1t = mu1(tht, a, lambda, rt);
        require_gt("μ1 > -α", m1, -alpha)?;
        require_gt("μ1~ > -α", m1t, -alpha)?;
        let m = (alpha + 1.0 - lambda - a) / p_struct;
        if !(m >= 1.0 && m < alpha) {
            return Err(violated("1 ≤ m < α", format!("m = {m}")));
        }

        let beta = 2.0 * lambda;
        let mh1 = m1 + beta * th / (1.0 - th);
        let mh2 = r.min(m1);
        let mh3 = r.max(mh1);
        let bh1 = beta * th / (1.0 - th) * (1.0 + 1.0 / alpha);
        let bh2 = beta / (1.0 - a) * (1.0 + 1.0 / alpha);
        let bh3 = beta / (1.0 - tht) * (1.0 / (1.0 - a) + tht);
        let mh4 = r.min(m1).min(rt).min(m1t);
        let mh5 = r.max(mh1).max(rt + beta / (1.0 - a)).max(m1t + bh3);
        let beta_star = beta / ((1.0 - a) * (1.0 - tht) * (1.0 + m1t / alpha));

        let t2 = theta_2star(rs);
        let alpha_2star = 2.0 * lambda * (2.0 + rs) / ((1.0 - a) * rs) + 2.0 / rs;
        let terms = alpha_star_terms(a, lambda, r1, r, rs);
        let bind = binding(&terms);
        let mu_star = ((r + t2 * (a + 3.0 * lambda)) / (1.0 - t2))
            .max((rt + t2 * (a + 3.0 * lambda)) / (1.0 - t2) + 2.0 * lambda / ((1.0 - t2) * (1.0 - a)));
        let gamma_star = (2.0 * (3.0 - 2.0 * a) + 4.0 * (2.0 - a) * t2 / (1.0 - t2))
            .max(2.0 / (1.0 - a) + 2.0 * (2.0 - a) / (1.0 - a) * t2 / (1.0 - t2));

        let k = kappa(alpha, rs, lambda, a);
        let th0 = theta0(alpha, rs, lambda, a);
        let hh1 = h1(lambda);
        let hh2 = h2(a, lambda, p5[2]);
        let hh3 = h3(hh2, a, lambda);
        let p = [p5[0], p5[1], p5[2], p5[3], p5[4], p6];
        Ok(ExponentBundle {
            n: 2,
            a,
            lambda,
            r1,
            r_star: rs,
            r,
            r_tilde: rt,
            p_struct,
            s_struct: lambda + 1.0,
            beta_struct: beta,
            alpha,
            m,
            theta: th,
            theta_tilde: tht,
            theta0: th0,
            theta0_hat: th0 - beta / (k * alpha),
            theta_2star: t2,
            mu1: m1,
            mu1_tilde: m1t,
            mu_hat: [mh1, mh2, mh3, mh4, mh5],
            mu_star,
            beta_star,
            beta_hat: [bh1, bh2, bh3],
            kappa: k,
            kappa_tilde: kt,
            alpha_2star,
            alpha_star: bind.value,
            alpha_star_binding: bind.name,
            gamma_star,
            gamma: gamma_caccioppoli(a, p5[2]),
            h1: hh1,
            h2: hh2,
            h3: hh3,
            mu_bar: mu_bar(rs, r1, lambda),
            p,
            q: p.map(conjugate),
            nu1: nu1(alpha, hh1, rs),
            nu2: nu2(alpha, hh3, lambda),
        })
    }

    /// Errors unless α > α_*, naming the binding term.
    pub fn require_above_alpha_star(&self) -> Result<(), ExponentError> {
        if self.alpha > self.alpha_star * (1.0 + BOUNDARY_REL) {
            Ok(())
        } else {
            Err(ExponentError::AlphaTooSmall {
                alpha: self.alpha,
                alpha_star: self.alpha_star,
                binding: self.alpha_star_binding,
            })
        }
    }

    /// Lower bounds on α₀ required by the L^∞ estimate started from L^α bounds.
    pub fn alpha0_terms(&self) -> Vec<Term> {
        alpha0_terms(self)
    }

    /// The L^∞ ladder threshold list (without the L^α-estimate terms).
    pub fn moser_terms(&self) -> Vec<Term> {
        moser_terms(self)
    }
}

/// The five candidates whose maximum is α_*.
pub fn alpha_star_terms(a: f64, lambda: f64, r1: f64, r: f64, rs: f64) -> [Term; 5] {
    let rt = r_tilde(a, lambda, r);
    [
        Term { name: "2λr1/(1-r1)", value: 2.0 * lambda * r1 / (1.0 - r1) },
        Term { name: "2(2-a)(r+a+λ-1)/(r_*(1-a))", value: 2.0 * (2.0 - a) * (r + a + lambda - 1.0) / (rs * (1.0 - a)) },
        Term { name: "α_**", value: 2.0 * lambda * (2.0 + rs) / ((1.0 - a) * rs) + 2.0 / rs },
        Term { name: "2r(1+2/r_*)+4λ/r_*", value: claim_threshold(r, rs, lambda) },
        Term { name: "2r~(1+2/r_*)+4λ/r_*", value: claim_threshold(rt, rs, lambda) },
    ]
}

fn moser_terms(b: &ExponentBundle) -> Vec<Term> {
    let (a, l, kt) = (b.a, b.lambda, b.kappa_tilde);
    vec![
        Term { name: "1+λ", value: 1.0 + l },
        Term { name: "p2(λ(5-4a)-1)/(κ~-p2)", value: b.p[1] * (l * (5.0 - 4.0 * a) - 1.0) / (kt - b.p[1]) },
        Term { name: "p5(a+3λ-1)/((1-a)(κ~-p6))", value: b.p[4] * (a + 3.0 * l - 1.0) / ((1.0 - a) * (kt - b.p[5])) },
        Term { name: "(1-λ-a)/(κ~-1)", value: (1.0 - l - a) / (kt - 1.0) },
        Term { name: "2λ/(1-r1)", value: 2.0 * l / (1.0 - b.r1) },
        Term { name: "(λ+a-1)/(1+r_*/2-κ~²)", value: (l + a - 1.0) / (1.0 + b.r_star / 2.0 - kt * kt) },
    ]
}

fn alpha0_terms(b: &ExponentBundle) -> Vec<Term> {
    let (a, l, kt, rs) = (b.a, b.lambda, b.kappa_tilde, b.r_star);
    let mut t: Vec<Term> = moser_terms(b).into_iter().skip(1).collect();
    t.push(Term {
        name: "2(2-a)(r+a+λ-1)/(κ~ r_*(1-a))",
        value: 2.0 * (2.0 - a) * (b.r + a + l - 1.0) / (kt * rs * (1.0 - a)),
    });
    t.push(Term { name: "α_**/κ~", value: b.alpha_2star / kt });
    t.push(Term { name: "[2max{r,r~}(1+2/r_*)+4λ/r_*]/κ~", value: claim_threshold(b.r.max(b.r_tilde), rs, l) / kt });
    t
}

/// Hölder exponents satisfying the p-constraints for any a ∈ (0,1) and κ̃ > 1.
pub fn admissible_p(a: f64, kappa_tilde: f64) -> [f64; 5] {
    let d = (kappa_tilde - 1.0) / 4.0;
    let p3 = 1.0 + d * (1.0 - a) / (2.0 - a);
    [1.0 + 2.0 * d, 1.0 + 2.0 * d, p3, 1.0 + d, 1.0 + d]
}

/// The default exponent α = β₁ = κ̃α₀ with α₀ = `margin` × the binding threshold
/// among the L^∞ list and α_*/κ̃.
pub fn default_alpha(base: &ExponentParams, margin: f64) -> Result<(f64, f64), ExponentError> {
    // Thresholds do not depend on α except through validity, so probe at a large α.
    let probe = ExponentBundle::compute(&ExponentParams { alpha: 1e6, ..*base })?;
    let mut terms = probe.alpha0_terms();
    terms.push(Term { name: "α_*/κ~", value: probe.alpha_star / probe.kappa_tilde });
    let alpha0 = margin * binding(&terms).value;
    Ok((alpha0, alpha0 * probe.kappa_tilde))
}

/// Residuals of the two algebraic identities and the θ_** comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    /// (1−θ₀)κ − r_*/2.
    pub kappa_identity: f64,
    /// β_*(1−θ̃)(1+μ̃₁/α) − β/(p−1).
    pub beta_star_identity: f64,
    /// θ ≤ θ_**, checked only when α exceeds the r-threshold.
    pub theta_below_2star: Option<bool>,
    pub theta_tilde_below_2star: Option<bool>,
}

impl IdentityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.kappa_identity.abs() <= tol
            && self.beta_star_identity.abs() <= tol
            && self.theta_below_2star != Some(false)
            && self.theta_tilde_below_2star != Some(false)
    }
}

pub fn check_identities(b: &ExponentBundle) -> IdentityReport {
    let rs = b.r_star;
    let th_ok = (b.alpha >= claim_threshold(b.r, rs, b.lambda)).then_some(b.theta <= b.theta_2star);
    let tht_ok = (b.alpha >= claim_threshold(b.r_tilde, rs, b.lambda)).then_some(b.theta_tilde <= b.theta_2star);
    IdentityReport {
        kappa_identity: (1.0 - b.theta0) * b.kappa - rs / 2.0,
        beta_star_identity: b.beta_star * (1.0 - b.theta_tilde) * (1.0 + b.mu1_tilde / b.alpha)
            - b.beta_struct / (b.p_struct - 1.0),
        theta_below_2star: th_ok,
        theta_tilde_below_2star: tht_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn documented_values() {
        assert!((r_star(0.5, 0.8) - 0.5).abs() < 1e-15);
        assert_eq!(h1(1.0), 2.0);
        assert!((kappa(20.0, 0.5, 1.0, 0.5) - 1.225).abs() < 1e-15);
    }

    #[test]
    fn default_point_values() {
        let (alpha0, beta1) = default_alpha(&ExponentParams::default_point(0.0), 1.05).unwrap();
        // Binding term is the r~ claim threshold: (2·8.5·5 + 8)/1.1.
        assert!((alpha0 - 1.05 * 93.0 / 1.1).abs() < 1e-9, "{alpha0}");
        let b = ExponentBundle::compute(&ExponentParams::default_point(beta1)).unwrap();
        assert_eq!(b.r_tilde, 8.5);
        assert!((b.alpha_star - 93.0).abs() < 1e-12);
        assert_eq!(b.alpha_star_binding, "2r~(1+2/r_*)+4λ/r_*");
        assert!((b.theta_2star - 0.8).abs() < 1e-15);
        // μ_* = (8.5 + 0.8·3.5)/0.2 + 2/(0.2·0.5) = 76.5; γ_* = 4 + 6·4 = 28.
        assert!((b.mu_star - 76.5).abs() < 1e-9);
        assert!((b.gamma_star - 28.0).abs() < 1e-9);
        assert!(b.require_above_alpha_star().is_ok());
        assert!(check_identities(&b).holds(1e-12));
    }

    #[test]
    fn inadmissible_inputs_name_the_constraint() {
        let base = ExponentParams::default_point(200.0);
        let e = ExponentBundle::compute(&ExponentParams { r: 1.5, ..base }).unwrap_err();
        assert!(e.to_string().contains("λ(5-4a)-1"), "{e}");
        let e = ExponentBundle::compute(&ExponentParams { r1: 0.5, ..base }).unwrap_err();
        assert!(e.to_string().contains("n/(n+2-a)"), "{e}");
        let e = ExponentBundle::compute(&ExponentParams { kappa_tilde: 1.2, ..base }).unwrap_err();
        assert!(e.to_string().contains("sqrt"), "{e}");
        let b = ExponentBundle::compute(&ExponentParams { alpha: 90.0, ..base }).unwrap();
        match b.require_above_alpha_star().unwrap_err() {
            ExponentError::AlphaTooSmall { binding, .. } => assert_eq!(binding, "2r~(1+2/r_*)+4λ/r_*"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn claim_bound_at_twice_threshold() {
        let base = ExponentParams::default_point(0.0);
        let t = claim_threshold(r_tilde(0.5, 1.0, 2.5), 0.5, 1.0);
        let b = ExponentBundle::compute(&ExponentParams { alpha: 2.0 * t, ..base }).unwrap();
        assert_eq!(check_identities(&b).theta_tilde_below_2star, Some(true));
        assert!(b.theta_tilde <= b.theta_2star);
    }

    #[test]
    fn alpha_star_monotone_on_lattice() {
        for &a in &[0.2, 0.5, 0.8] {
            for &r1 in &[0.75, 0.85, 0.95] {
                if r1 * (2.0 - a) <= 1.0 || r1 <= 2.0 / (4.0 - a) {
                    continue;
                }
                let rs = r_star(a, r1);
                let mut prev_l = f64::NEG_INFINITY;
                for li in 1..=10 {
                    let l = li as f64 / 10.0;
                    let star = |r: f64, l: f64| binding(&alpha_star_terms(a, l, r1, r, rs)).value;
                    let mut prev_r = f64::NEG_INFINITY;
                    for ri in 0..10 {
                        let r = 0.5 + ri as f64 * 0.4;
                        let s = star(r, l);
                        assert!(s >= prev_r);
                        prev_r = s;
                    }
                    let s = star(2.0, l);
                    assert!(s >= prev_l);
                    prev_l = s;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn identities_hold_on_random_points(
            a in 0.05f64..0.95,
            lambda in 0.05f64..1.0,
            u1 in 0.01f64..0.99,
            u2 in 0.01f64..3.0,
            stretch in 1.01f64..4.0,
        ) {
            let lo = (2.0 / (4.0 - a)).max(1.0 / (2.0 - a));
            let r1 = lo + u1 * (1.0 - lo);
            let r_lo = 0f64.max(lambda * (5.0 - 4.0 * a) - 1.0).max((1.0 - a - lambda) / (2.0 - a));
            let r = r_lo + u2;
            let rs = r_star(a, r1);
            let kt = 1.0 + 0.5 * ((1.0 + rs / 2.0).sqrt() - 1.0);
            let alpha = stretch * binding(&alpha_star_terms(a, lambda, r1, r, rs)).value;
            let pp = ExponentParams { a, lambda, r1, r, alpha, kappa_tilde: kt, p: admissible_p(a, kt) };
            let rep = check_identities(&ExponentBundle::compute(&pp).unwrap());
            prop_assert!(rep.holds(1e-12), "{rep:?}");
        }
    }
}
