//! Structural weights of the growth and coercivity bounds for X.
//!
//! |X(x,z,y)| ≤ W₀|y|^{1−a} and X·y ≥ W₁|y|^{2−a}/(χ_*²(1+z)^{2λ}) − W₂, with
//! the combined weights W₃ = W₀^{2−a}W₁^{a−1} + W₁ and W₄ = W₂ + W₃.

use serde::Serialize;

use super::law::LocalLaw;
use super::ConstitutiveError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSet {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub c4_tilde: f64,
}

impl WeightSet {
    /// Weights at a point with local law `law`, EOS constant c̄ and porosity φ = c̄φ̃.
    pub fn compute(law: &LocalLaw, cbar: f64, phi: f64) -> Result<Self, ConstitutiveError> {
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(ConstitutiveError::DegenerateCoefficient { index: usize::MAX, value: phi, at: None });
        }
        let a = law.a();
        let (a0, an) = (law.a0(), law.a_top());
        let chi0 = law.chi0();
        let c4_tilde = (1f64.min(a0).min(an) / 2f64.powf(law.deg_top())).powf(1.0 + a);
        let w0 = an.powf(a - 1.0);
        let pref = 2f64.powf(-a) * c4_tilde;
        let w1 = pref / ((1.0 + 2.0 * cbar).powi(2) * (chi0 + 1.0 / phi).powi(2));
        let w2 = pref / (chi0 * chi0);
        let w3 = w0.powf(2.0 - a) * w1.powf(a - 1.0) + w1;
        Ok(WeightSet { w0, w1, w2, w3, w4: w2 + w3, c4_tilde })
    }
}

/// χ₁(x,z) = χ₀(x) + R_*(x)z^λ.
pub fn chi1(law: &LocalLaw, r_star: f64, z: f64, lambda: f64) -> f64 {
    law.chi0() + r_star * z.powf(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn documented_values() {
        let l = LocalLaw::new(vec![0.0, 1.0], vec![1.0, 4.0]).unwrap();
        assert_eq!(WeightSet::compute(&l, 1.0, 0.5).unwrap().w0, 0.5);
        let l = LocalLaw::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let w = WeightSet::compute(&l, 1.0, 0.5).unwrap();
        assert!((w.c4_tilde - 0.5f64.powf(1.5)).abs() < 1e-16);
        // W₂ = 2^{-1/2} c̃₄ / χ₀² with χ₀ = 2.
        assert!((w.w2 - 2f64.powf(-0.5) * 0.5f64.powf(1.5) / 4.0).abs() < 1e-16);
        // W₁ = 2^{-1/2} c̃₄ / (3² (2 + 2)²).
        assert!((w.w1 - 2f64.powf(-0.5) * 0.5f64.powf(1.5) / 144.0).abs() < 1e-16);
        assert!(WeightSet::compute(&l, 1.0, 0.0).is_err());
    }

    #[test]
    fn w0_never_exceeds_w3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let d1 = rng.gen_range(0.05..4.0);
            let l = LocalLaw::new(
                vec![0.0, d1],
                vec![10f64.powf(rng.gen_range(-3.0..3.0)), 10f64.powf(rng.gen_range(-3.0..3.0))],
            )
            .unwrap();
            let w = WeightSet::compute(&l, rng.gen_range(0.1..3.0), rng.gen_range(0.01..3.0)).unwrap();
            assert!(w.w0 <= w.w3 * (1.0 + 1e-12), "{w:?}");
            assert!(w.w1 > 0.0 && w.w2 > 0.0 && w.w4 >= w.w3);
        }
    }
}
