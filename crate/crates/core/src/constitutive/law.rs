//! Generalised Forchheimer law g(x,s) = Σ aᵢ(x) s^ᾱᵢ with heterogeneous
//! coefficients.

use crate::fields::{EvalContext, FieldExpr};

use super::ConstitutiveError;

/// Degrees ᾱ₀ = 0 < ᾱ₁ < … < ᾱ_N together with coefficient fields aᵢ(x).
#[derive(Debug, Clone, PartialEq)]
pub struct ForchheimerLaw {
    degrees: Vec<f64>,
    coeffs: Vec<FieldExpr>,
}

fn check_degrees(degrees: &[f64]) -> Result<(), ConstitutiveError> {
    if degrees.len() < 2 {
        return Err(ConstitutiveError::InvalidInput(
            "a Forchheimer law needs at least one non-constant term".into(),
        ));
    }
    if degrees[0] != 0.0 {
        return Err(ConstitutiveError::InvalidInput(format!(
            "the first degree must be 0, got {}",
            degrees[0]
        )));
    }
    for w in degrees.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(ConstitutiveError::InvalidInput(format!(
                "degrees must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

impl ForchheimerLaw {
    pub fn new(degrees: Vec<f64>, coeffs: Vec<FieldExpr>) -> Result<Self, ConstitutiveError> {
        check_degrees(&degrees)?;
        if coeffs.len() != degrees.len() {
            return Err(ConstitutiveError::InvalidInput(format!(
                "{} degrees but {} coefficient fields",
                degrees.len(),
                coeffs.len()
            )));
        }
        Ok(ForchheimerLaw { degrees, coeffs })
    }

    /// Two-term law g(s) = a₀ + a₁ s with constant coefficients.
    pub fn two_term(a0: f64, a1: f64) -> Self {
        ForchheimerLaw {
            degrees: vec![0.0, 1.0],
            coeffs: vec![FieldExpr::constant(a0), FieldExpr::constant(a1)],
        }
    }

    /// Number of non-constant terms.
    pub fn n_terms(&self) -> usize {
        self.degrees.len() - 1
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn coeffs(&self) -> &[FieldExpr] {
        &self.coeffs
    }

    /// a = ᾱ_N/(1+ᾱ_N) ∈ (0,1).
    pub fn a(&self) -> f64 {
        let top = *self.degrees.last().expect("validated non-empty");
        top / (1.0 + top)
    }

    /// Coefficients frozen at `x`, validated for positivity.
    pub fn at(&self, x: [f64; 2], lx: f64, ly: f64) -> Result<LocalLaw, ConstitutiveError> {
        let ctx = EvalContext::new(x[0], x[1], 0.0, lx, ly);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.eval(&ctx))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ConstitutiveError::Field { at: x, source: e })?;
        LocalLaw::new(self.degrees.clone(), coeffs).map_err(|e| match e {
            ConstitutiveError::DegenerateCoefficient { index, value, .. } => {
                ConstitutiveError::DegenerateCoefficient { index, value, at: Some(x) }
            }
            other => other,
        })
    }
}

/// The law with coefficients evaluated at a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLaw {
    degrees: Vec<f64>,
    coeffs: Vec<f64>,
}

#[inline]
fn pow_deg(s: f64, d: f64) -> f64 {
    if d == 1.0 {
        s
    } else if d == 2.0 {
        s * s
    } else {
        s.powf(d)
    }
}

impl LocalLaw {
    pub fn new(degrees: Vec<f64>, coeffs: Vec<f64>) -> Result<Self, ConstitutiveError> {
        check_degrees(&degrees)?;
        if coeffs.len() != degrees.len() {
            return Err(ConstitutiveError::InvalidInput(format!(
                "{} degrees but {} coefficients",
                degrees.len(),
                coeffs.len()
            )));
        }
        let last = coeffs.len() - 1;
        for (i, &c) in coeffs.iter().enumerate() {
            let ok = if i == 0 || i == last { c > 0.0 } else { c >= 0.0 };
            if !ok || !c.is_finite() {
                return Err(ConstitutiveError::DegenerateCoefficient { index: i, value: c, at: None });
            }
        }
        Ok(LocalLaw { degrees, coeffs })
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn a0(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn a_top(&self) -> f64 {
        *self.coeffs.last().expect("validated non-empty")
    }

    pub fn deg_top(&self) -> f64 {
        *self.degrees.last().expect("validated non-empty")
    }

    pub fn a(&self) -> f64 {
        let top = self.deg_top();
        top / (1.0 + top)
    }

    /// χ₀ = g(x,1).
    pub fn chi0(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// g(s) for s ≥ 0 (unchecked).
    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        let mut acc = self.coeffs[0];
        for (c, d) in self.coeffs[1..].iter().zip(&self.degrees[1..]) {
            acc += c * pow_deg(s, *d);
        }
        acc
    }

    /// g(s) and g'(s) for s ≥ 0; g'(0) is +∞ when some ᾱᵢ < 1 has aᵢ > 0.
    #[inline]
    pub fn g_and_dg(&self, s: f64) -> (f64, f64) {
        let mut g = self.coeffs[0];
        let mut dg = 0.0;
        for (c, d) in self.coeffs[1..].iter().zip(&self.degrees[1..]) {
            if *c == 0.0 {
                continue;
            }
            if *d == 1.0 {
                g += c * s;
                dg += c;
            } else {
                let p = s.powf(d - 1.0);
                g += c * p * s;
                dg += c * d * p;
            }
        }
        (g, dg)
    }

    /// Checked evaluation of g.
    pub fn eval_g(&self, s: f64) -> Result<f64, ConstitutiveError> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(ConstitutiveError::InvalidInput(format!("g needs s ≥ 0, got {s}")));
        }
        Ok(self.g(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn law(coeffs: &[f64], degrees: &[f64]) -> LocalLaw {
        LocalLaw::new(degrees.to_vec(), coeffs.to_vec()).unwrap()
    }

    #[test]
    fn documented_values() {
        assert_eq!(law(&[1.0, 2.0], &[0.0, 1.0]).eval_g(0.0).unwrap(), 1.0);
        assert_eq!(law(&[1.0, 2.0], &[0.0, 2.0]).eval_g(2.0).unwrap(), 9.0);
        assert!(matches!(
            LocalLaw::new(vec![0.0, 1.0], vec![3.0, 0.0]),
            Err(ConstitutiveError::DegenerateCoefficient { index: 1, .. })
        ));
        assert!(law(&[1.0, 1.0], &[0.0, 1.0]).eval_g(-1.0).is_err());
    }

    #[test]
    fn degree_structure_is_validated() {
        assert!(LocalLaw::new(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
        assert!(LocalLaw::new(vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(LocalLaw::new(vec![0.0], vec![1.0]).is_err());
        // Middle coefficients may vanish.
        assert!(LocalLaw::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn heterogeneous_coefficients_are_checked_pointwise() {
        let l = ForchheimerLaw::new(
            vec![0.0, 1.0],
            vec![FieldExpr::parse("1").unwrap(), FieldExpr::parse("x - 0.5").unwrap()],
        )
        .unwrap();
        assert!(l.at([0.75, 0.5], 1.0, 1.0).is_ok());
        assert!(matches!(
            l.at([0.25, 0.5], 1.0, 1.0),
            Err(ConstitutiveError::DegenerateCoefficient { index: 1, at: Some(_), .. })
        ));
        assert_eq!(l.a(), 0.5);
        assert_eq!(l.at([0.75, 0.5], 1.0, 1.0).unwrap().chi0(), 1.25);
    }

    proptest! {
        #[test]
        fn g_is_nondecreasing_and_bounded_below(
            a0 in 0.01f64..10.0, a1 in 0.0f64..10.0, a2 in 0.01f64..10.0,
            d1 in 0.05f64..2.0, dd in 0.05f64..2.0,
            s in 0.0f64..50.0, ds in 0.0f64..5.0,
        ) {
            let l = law(&[a0, a1, a2], &[0.0, d1, d1 + dd]);
            let g0 = l.g(s);
            prop_assert!(g0 >= a0);
            prop_assert!(l.g(s + ds) >= g0);
            let (g, dg) = l.g_and_dg(s + 0.1);
            prop_assert!((g - l.g(s + 0.1)).abs() <= 1e-12 * g);
            let h = 1e-6;
            let fd = (l.g(s + 0.1 + h) - l.g(s + 0.1 - h)) / (2.0 * h);
            prop_assert!((fd - dg).abs() <= 1e-5 * (1.0 + dg));
        }
    }
}
