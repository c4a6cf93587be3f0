//! Bound for sequences obeying y_{j+1} ≤ A^{ω_j/κ_j}(y_j^{r_j} + y_j^{s_j})^{1/κ_j}.
//!
//! With β_j = r_j/κ_j and γ_j = s_j/κ_j the limit superior is at most
//! (2A)^{Gᾱ} max{y₀^{β̄}, y₀^{γ̄}}, where ᾱ = Σω_j/κ_j, β̄ = Πβ_j, γ̄ = Πγ_j and
//! G is the limit of G_j = max{1, γ_m⋯γ_n : 1 ≤ m ≤ n < j}.

use serde::Serialize;
use thiserror::Error;

use crate::functionals::log_add_exp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("family violates {0} at j = {1}")]
    Precondition(&'static str, usize),
    #[error("Σω_j/κ_j does not converge: block sums {first} then {second}")]
    Divergent { first: f64, second: f64 },
    #[error("need at least 8 terms, got {0}")]
    TooShort(usize),
}

/// Parameters of one step of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub kappa: f64,
    pub r: f64,
    pub s: f64,
    pub omega: f64,
}

/// The assembled bound and its ingredients (exponents in natural form, bound in logs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceBound {
    pub alpha_bar: f64,
    pub beta_bar: f64,
    pub gamma_bar: f64,
    pub g: f64,
    /// ln of the bound; −∞ when y₀ = 0.
    pub ln_bound: f64,
}

/// Ratio of the last block sum to the previous one above which the series
/// counts as divergent. Harmonic-like tails give 1, geometric tails give ~0.
const DIVERGENCE_BLOCK_RATIO: f64 = 0.75;

/// Evaluates the bound on a truncated family (the tail must be negligible).
pub fn sequence_bound(y0: f64, steps: &[Step], a: f64) -> Result<SequenceBound, SequenceError> {
    let n = steps.len();
    if n < 8 {
        return Err(SequenceError::TooShort(n));
    }
    if !(a >= 1.0) {
        return Err(SequenceError::Precondition("A ≥ 1", 0));
    }
    if !(y0 >= 0.0) {
        return Err(SequenceError::Precondition("y0 ≥ 0", 0));
    }
    for (j, st) in steps.iter().enumerate() {
        if !(st.omega >= 1.0) {
            return Err(SequenceError::Precondition("ω_j ≥ 1", j));
        }
        if !(st.r > 0.0 && st.s >= st.r) {
            return Err(SequenceError::Precondition("s_j ≥ r_j > 0", j));
        }
        if !(st.kappa > 0.0 && st.kappa.is_finite() && st.s.is_finite() && st.omega.is_finite()) {
            return Err(SequenceError::Precondition("finite κ_j > 0", j));
        }
    }
    let terms: Vec<f64> = steps.iter().map(|st| st.omega / st.kappa).collect();
    let block = |lo: usize, hi: usize| terms[lo..hi].iter().sum::<f64>();
    let (first, second) = (block(n / 4, n / 2), block(n / 2, n));
    let alpha_bar: f64 = terms.iter().sum();
    if second > DIVERGENCE_BLOCK_RATIO * first && second > 1e-12 * alpha_bar {
        return Err(SequenceError::Divergent { first, second });
    }
    let ln_beta: f64 = steps.iter().map(|st| (st.r / st.kappa).ln()).sum();
    let ln_gammas: Vec<f64> = steps.iter().map(|st| (st.s / st.kappa).ln()).collect();
    let ln_gamma: f64 = ln_gammas.iter().sum();
    // G_j runs over consecutive products starting at index 1: a maximum
    // subarray sum in logs, floored at zero.
    let mut best = 0f64;
    let mut run = 0f64;
    for &lg in &ln_gammas[1..] {
        run = (run + lg).max(lg);
        best = best.max(run);
    }
    let g = best.exp();
    let ln_bound = if y0 == 0.0 {
        f64::NEG_INFINITY
    } else {
        let ly = y0.ln();
        g * alpha_bar * (2.0 * a).ln() + (ln_beta.exp() * ly).max(ln_gamma.exp() * ly)
    };
    Ok(SequenceBound { alpha_bar, beta_bar: ln_beta.exp(), gamma_bar: ln_gamma.exp(), g, ln_bound })
}

/// ln y_j of the recursion taken with equality, j = 0..=steps.
pub fn simulate_ln(y0: f64, steps: &[Step], a: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    let mut ly = y0.ln();
    out.push(ly);
    for st in &steps[..count] {
        ly = if ly == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            (st.omega * a.ln() + log_add_exp(st.r * ly, st.s * ly)) / st.kappa
        };
        out.push(ly);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A ladder-like family: κ_j = α₀/q^j, r_j = κ_j(1 − b q^j/α₀), s_j = κ_j(1 + c q^j/α₀).
    fn family(rng: &mut ChaCha8Rng, len: usize) -> (Vec<Step>, f64, f64) {
        let q: f64 = rng.gen_range(0.5..0.95);
        let alpha0: f64 = rng.gen_range(4.0..60.0);
        let b: f64 = rng.gen_range(0.0..0.9) * alpha0.min(3.0);
        let c = rng.gen_range(0.0..6.0);
        let steps = (0..len)
            .map(|j| {
                let x = q.powi(j as i32) / alpha0;
                let kappa = 1.0 / x;
                Step {
                    kappa,
                    r: kappa * (1.0 - b * x).max(1e-3),
                    s: kappa * (1.0 + c * x),
                    omega: rng.gen_range(1.0..(j as f64 + 2.0)),
                }
            })
            .collect();
        (steps, rng.gen_range(1.0..10.0), if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..10.0) })
    }

    #[test]
    fn zero_start_gives_zero_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (steps, a, _) = family(&mut rng, 400);
        let b = sequence_bound(0.0, &steps, a).unwrap();
        assert_eq!(b.ln_bound, f64::NEG_INFINITY);
        assert!(simulate_ln(0.0, &steps, a, 100).iter().all(|&l| l == f64::NEG_INFINITY));
    }

    #[test]
    fn unit_gammas_give_g_one() {
        let steps: Vec<Step> = (0..64)
            .map(|j| {
                let k = 2f64.powi(j);
                Step { kappa: k, r: 0.5 * k, s: k, omega: 1.0 }
            })
            .collect();
        let b = sequence_bound(2.0, &steps, 3.0).unwrap();
        assert_eq!(b.g, 1.0);
        assert!((b.gamma_bar - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_form_when_all_gammas_exceed_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (steps, _, _) = family(&mut rng, 400);
        let b = sequence_bound(1.0, &steps, 2.0).unwrap();
        let prod: f64 = steps[1..].iter().map(|s| s.s / s.kappa).product();
        assert!((b.g - prod).abs() < 1e-12 * prod);
    }

    #[test]
    fn harmonic_weights_are_divergent() {
        let steps: Vec<Step> = (0..1000)
            .map(|j| Step { kappa: j as f64 + 1.0, r: j as f64 + 1.0, s: j as f64 + 1.0, omega: 1.0 })
            .collect();
        assert!(matches!(sequence_bound(1.0, &steps, 2.0), Err(SequenceError::Divergent { .. })));
    }

    #[test]
    fn preconditions_are_checked() {
        let ok = Step { kappa: 1.0, r: 1.0, s: 1.0, omega: 1.0 };
        let mut steps = vec![ok; 10];
        steps[3].s = 0.5;
        assert_eq!(sequence_bound(1.0, &steps, 2.0), Err(SequenceError::Precondition("s_j ≥ r_j > 0", 3)));
        assert!(sequence_bound(1.0, &[ok; 10], 0.5).is_err());
    }

    #[test]
    fn fuzzed_families_respect_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut violations = 0;
        for _ in 0..200 {
            let (steps, a, y0) = family(&mut rng, 400);
            let bound = sequence_bound(y0, &steps, a).unwrap();
            let traj = simulate_ln(y0, &steps, a, 100);
            let tail = traj[50..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if tail > bound.ln_bound + 1e-9 * bound.ln_bound.abs().max(1.0) {
                violations += 1;
            }
        }
        assert_eq!(violations, 0);
    }
}
