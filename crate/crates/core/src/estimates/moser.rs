//! The L^∞ ladder: exponents β_j = κ̃^j α₀, times t_j = σT(1 − 2^{−j}), and
//! the infinite products that fix the final exponents.
//!
//! Each product Π_j (1 + c κ̃^{−j}/α₀) converges only geometrically, so raw
//! partial products at κ̃ = 1.1 are still moving in the sixth digit after a
//! hundred factors. The estimator used here is the partial product times the
//! exact remainder Σ_{j>J} ln(1 + c q^j/α₀), q = 1/κ̃, expanded as a power
//! series in c/α₀ whose inner sums over j are geometric. Raw partials are
//! reported alongside.

use serde::Serialize;

use super::exponents::{binding, kappa, nu1, nu2, ExponentBundle, ExponentError, Term, BOUNDARY_REL};

/// Stop once consecutive estimates differ by less than this (relative).
pub const TRUNCATION_GAP: f64 = 1e-10;
/// Hard cap on the number of factors.
pub const TRUNCATION_CAP: usize = 10_000;

/// ln Π_{j>J} (1 + c q^j/α₀), computed termwise from the log series.
/// Requires |c| q^{J+1}/α₀ < 1.
pub fn log_tail(c: f64, alpha0: f64, q: f64, last: usize) -> f64 {
    let x = c / alpha0;
    let q0 = q.powi(last as i32 + 1);
    assert!((x * q0).abs() < 1.0, "log series outside its disc of convergence");
    let mut sum = 0.0;
    let mut pow = 1.0;
    for k in 1..=400 {
        pow *= x * q0;
        let qk = q.powi(k);
        let term = pow / (k as f64 * (1.0 - qk));
        sum += if k % 2 == 1 { term } else { -term };
        if term.abs() <= 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// A convergent product Π_{j≥first} Π_i (1 + c_i κ̃^{−j}/α₀), evaluated in logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductEstimate {
    /// ln of the tail-corrected limit.
    pub ln_value: f64,
    /// Last factor index used.
    pub truncation: usize,
    /// ln of the raw partial product at the truncation index.
    pub ln_raw_partial: f64,
    /// |ln(limit) − ln(raw partial)|, i.e. the size of the remainder.
    pub tail: f64,
    /// True when the estimator settled before the cap.
    pub converged: bool,
}

impl ProductEstimate {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// ln of one factor at index j.
fn ln_factor(coeffs: &[f64], alpha0: f64, q: f64, j: usize) -> f64 {
    let x = q.powi(j as i32) / alpha0;
    coeffs.iter().map(|&c| (c * x).ln_1p()).sum::<f64>()
}

/// ln Π_{j=first}^{last} of the factor, raw.
pub fn ln_partial(coeffs: &[f64], alpha0: f64, q: f64, first: usize, last: usize) -> f64 {
    (first..=last).map(|j| ln_factor(coeffs, alpha0, q, j)).sum()
}

/// Tail-corrected product with the consecutive-gap truncation rule.
pub fn product(coeffs: &[f64], alpha0: f64, q: f64, first: usize) -> ProductEstimate {
    let tail_at = |j: usize| coeffs.iter().map(|&c| log_tail(c, alpha0, q, j)).sum::<f64>();
    let mut raw = ln_factor(coeffs, alpha0, q, first);
    let mut prev = raw + tail_at(first);
    let mut j = first;
    let mut converged = false;
    while j < first + TRUNCATION_CAP {
        j += 1;
        raw += ln_factor(coeffs, alpha0, q, j);
        let est = raw + tail_at(j);
        let gap = (est.exp() - prev.exp()).abs() / prev.exp().max(1e-300);
        prev = est;
        if gap < TRUNCATION_GAP {
            converged = true;
            break;
        }
    }
    ProductEstimate { ln_value: prev, truncation: j, ln_raw_partial: raw, tail: (prev - raw).abs(), converged }
}

/// Everything the L^∞ ladder needs at one (α₀, σ, T).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoserSchedule {
    pub alpha0: f64,
    pub kappa_tilde: f64,
    pub sigma: f64,
    pub t_end: f64,
    /// β_j for j = 0..=50.
    pub beta: Vec<f64>,
    /// t_j for j = 0..=50.
    pub times: Vec<f64>,
    /// r̃_j = ν₁(β_j) and s̃_j = ν₂(β_j), j = 0..=50.
    pub r_tilde: Vec<f64>,
    pub s_tilde: Vec<f64>,
    /// μ̃ = Π_{j≥0} r̃_j/β_j.
    pub mu_tilde: ProductEstimate,
    /// ν̃ = Π_{j≥0} s̃_j/β_j.
    pub nu_tilde: ProductEstimate,
    /// 𝒢 = Π_{k≥1} s̃_k/β_k.
    pub g_cal: ProductEstimate,
    /// L₀ = Σ_j (j+1)/β_j.
    pub l0: f64,
    pub omega: f64,
    /// ω₀..ω₃.
    pub omegas: [f64; 4],
    /// Smallest slack of κ(β_j)β_j − β_{j+2} over j ≤ 50, relative to β_{j+2}.
    pub chain_margin: f64,
}

/// L₀ = Σ_{j≥0} (j+1) κ̃^{−j}/α₀ = 1/(α₀(1−1/κ̃)²).
pub fn l0(alpha0: f64, kappa_tilde: f64) -> f64 {
    let q = 1.0 / kappa_tilde;
    1.0 / (alpha0 * (1.0 - q) * (1.0 - q))
}

/// Factor coefficients of r̃_j/β_j = (1 − h₁x)/(1 + x/(1+r_*/2)), x = κ̃^{−j}/α₀.
fn mu_coeffs(b: &ExponentBundle) -> Vec<f64> {
    vec![-b.h1, 1.0 / (1.0 + b.r_star / 2.0)]
}

/// Factor coefficients of s̃_j/β_j = (1 + h₃x)(1 + 3λx).
fn nu_coeffs(b: &ExponentBundle) -> Vec<f64> {
    vec![b.h3, 3.0 * b.lambda]
}

impl MoserSchedule {
    /// Builds the schedule after checking α₀ against the ladder threshold list.
    pub fn compute(b: &ExponentBundle, alpha0: f64, sigma: f64, t_end: f64) -> Result<Self, ExponentError> {
        let terms = b.moser_terms();
        let bind = binding(&terms);
        if !(alpha0 > bind.value * (1.0 + BOUNDARY_REL)) {
            return Err(ExponentError::AlphaTooSmall { alpha: alpha0, alpha_star: bind.value, binding: bind.name });
        }
        if !(sigma > 0.0 && sigma < 1.0 && t_end > 0.0) {
            return Err(ExponentError::Violated {
                name: "0 < σ < 1, T > 0",
                detail: format!("σ = {sigma}, T = {t_end}"),
            });
        }
        let kt = b.kappa_tilde;
        let q = 1.0 / kt;
        let beta: Vec<f64> = (0..=52).map(|j| kt.powi(j) * alpha0).collect();
        let chain_margin = (0..=50)
            .map(|j| {
                let bj = beta[j];
                (kappa(bj, b.r_star, b.lambda, b.a) * bj - beta[j + 2]) / beta[j + 2]
            })
            .fold(f64::INFINITY, f64::min);
        let beta: Vec<f64> = beta[..=50].to_vec();
        let times = (0..=50).map(|j| sigma * t_end * (1.0 - 0.5f64.powi(j as i32))).collect();
        let r_tilde = beta.iter().map(|&x| nu1(x, b.h1, b.r_star)).collect();
        let s_tilde = beta.iter().map(|&x| nu2(x, b.h3, b.lambda)).collect();

        // The μ̃ factors carry (1 − h₁x); α₀ > 1+λ = h₁ keeps every one positive.
        let mu_tilde = product(&mu_coeffs(b), alpha0, q, 0);
        let nu_tilde = product(&nu_coeffs(b), alpha0, q, 0);
        let g_cal = product(&nu_coeffs(b), alpha0, q, 1);
        let l0 = l0(alpha0, kt);
        let omega = g_cal.value() * l0;
        let mb = b.mu_bar;
        let omegas = [(2.0 + b.gamma * mb) * omega, (1.0 + mb) * omega, mb * omega, (2.0 + mb) * omega];
        Ok(MoserSchedule {
            alpha0,
            kappa_tilde: kt,
            sigma,
            t_end,
            beta,
            times,
            r_tilde,
            s_tilde,
            mu_tilde,
            nu_tilde,
            g_cal,
            l0,
            omega,
            omegas,
            chain_margin,
        })
    }

    /// The threshold list α₀ was checked against.
    pub fn terms(b: &ExponentBundle) -> Vec<Term> {
        b.moser_terms()
    }

    /// Raw partial products (μ̃, ν̃) through index `last`, for convergence reports.
    pub fn raw_partials(b: &ExponentBundle, alpha0: f64, last: usize) -> (f64, f64) {
        let q = 1.0 / b.kappa_tilde;
        (
            ln_partial(&mu_coeffs(b), alpha0, q, 0, last).exp(),
            ln_partial(&nu_coeffs(b), alpha0, q, 0, last).exp(),
        )
    }

    /// ln Ĉ₀ = ω ln[2^{1+μ̄} c₁₀ (κ̃α₀)^{6+5/(2(1−a))}] for a given c₁₀.
    pub fn ln_c0_hat(&self, b: &ExponentBundle, c10: f64) -> f64 {
        let base = (1.0 + b.mu_bar) * std::f64::consts::LN_2
            + c10.ln()
            + (6.0 + 5.0 / (2.0 * (1.0 - b.a))) * (self.kappa_tilde * self.alpha0).ln();
        self.omega * base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::exponents::{default_alpha, ExponentParams};

    fn bundle() -> (ExponentBundle, f64) {
        let base = ExponentParams::default_point(100.0);
        let (alpha0, beta1) = default_alpha(&base, 1.05).unwrap();
        (ExponentBundle::compute(&ExponentParams { alpha: beta1, ..base }).unwrap(), alpha0)
    }

    #[test]
    fn l0_closed_form_matches_series() {
        let closed = l0(20.0, 1.1);
        assert!((closed - 1.0 / (20.0 * (1.0 - 1.0 / 1.1f64).powi(2))).abs() < 1e-12);
        let series: f64 = (0..5000).map(|j| (j as f64 + 1.0) / (1.1f64.powi(j) * 20.0)).sum();
        assert!((closed - series).abs() / closed < 1e-12);
    }

    #[test]
    fn log_tail_matches_direct_sum() {
        for &(c, j) in &[(4.93, 3usize), (-2.0, 0), (3.0, 40)] {
            let direct: f64 = (j + 1..j + 3000).map(|i| (c * 1.1f64.powi(-(i as i32)) / 90.0).ln_1p()).sum();
            let series = log_tail(c, 90.0, 1.0 / 1.1, j);
            assert!((direct - series).abs() < 1e-14, "{c} {j}: {direct} vs {series}");
        }
    }

    #[test]
    fn chain_inequality_holds_through_fifty() {
        let (b, alpha0) = bundle();
        let s = MoserSchedule::compute(&b, alpha0, 0.5, 1.0).unwrap();
        assert!(s.chain_margin > 0.0);
        assert!(s.beta.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(s.times[0], 0.0);
        assert!(s.times.iter().all(|&t| t < 0.5));
    }

    #[test]
    fn products_stable_between_sixty_and_one_twenty() {
        let (b, alpha0) = bundle();
        let q = 1.0 / b.kappa_tilde;
        for coeffs in [mu_coeffs(&b), nu_coeffs(&b)] {
            let at = |j: usize| {
                (ln_partial(&coeffs, alpha0, q, 0, j) + coeffs.iter().map(|&c| log_tail(c, alpha0, q, j)).sum::<f64>())
                    .exp()
            };
            assert!((at(60) - at(120)).abs() < 1e-8);
        }
        let s = MoserSchedule::compute(&b, alpha0, 0.5, 1.0).unwrap();
        assert!(s.mu_tilde.converged && s.nu_tilde.converged);
        // The raw partial at the cap agrees with the corrected limit.
        let (mu_raw, nu_raw) = MoserSchedule::raw_partials(&b, alpha0, 600);
        assert!((mu_raw - s.mu_tilde.value()).abs() < 1e-12);
        assert!((nu_raw - s.nu_tilde.value()).abs() < 1e-12);
    }

    #[test]
    fn mu_below_nu_and_omegas_ordered() {
        let (b, alpha0) = bundle();
        let s = MoserSchedule::compute(&b, alpha0, 0.25, 2.0).unwrap();
        assert!(s.mu_tilde.value() < s.nu_tilde.value());
        assert!(s.r_tilde.iter().zip(&s.s_tilde).all(|(r, s)| r < s));
        let [w0, w1, w2, w3] = s.omegas;
        assert!(w2 < w1 && w1 < w3 && w3 < w0);
        // 𝒢 is ν̃ with the first factor removed.
        let first = s.s_tilde[0] / s.beta[0];
        assert!((s.g_cal.value() * first - s.nu_tilde.value()).abs() < 1e-12 * s.nu_tilde.value());
    }

    #[test]
    fn small_alpha0_names_binding_term() {
        let (b, _) = bundle();
        match MoserSchedule::compute(&b, 5.0, 0.5, 1.0) {
            Err(ExponentError::AlphaTooSmall { binding, .. }) => {
                assert_eq!(binding, crate::estimates::exponents::binding(&b.moser_terms()).name)
            }
            other => panic!("expected threshold error, got {other:?}"),
        }
    }

    #[test]
    fn c0_hat_scales_with_omega() {
        let (b, alpha0) = bundle();
        let s = MoserSchedule::compute(&b, alpha0, 0.5, 1.0).unwrap();
        let d = s.ln_c0_hat(&b, std::f64::consts::E) - s.ln_c0_hat(&b, 1.0);
        assert!((d - s.omega).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn mu_tilde_below_nu_tilde(alpha0 in 20.0f64..500.0, kt in 1.01f64..1.11) {
            let base = ExponentParams { kappa_tilde: kt, p: crate::estimates::exponents::admissible_p(0.5, kt), ..ExponentParams::default_point(200.0) };
            let b = ExponentBundle::compute(&base).unwrap();
            if let Ok(s) = MoserSchedule::compute(&b, alpha0, 0.5, 1.0) {
                proptest::prop_assert!(s.mu_tilde.ln_value < s.nu_tilde.ln_value);
            }
        }
    }
}
