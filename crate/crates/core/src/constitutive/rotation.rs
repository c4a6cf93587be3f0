//! Rotation and gravity forcing in the rotating frame.
//!
//! In the plane the rotation axis is normal to the domain, so J is the
//! quarter turn J(v₁,v₂) = (−v₂,v₁) and J² = −I. In three dimensions
//! Jv = k̂ × v.

use crate::fields::{EvalContext, FieldExpr};

use super::eos::FluidEos;
use super::ConstitutiveError;

/// Skew map J entering F(v) = g(|v|)v + zJv.
pub trait SkewMap<const N: usize> {
    fn apply(&self, v: [f64; N]) -> [f64; N];
}

/// Quarter turn in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneRotation;

impl SkewMap<2> for PlaneRotation {
    #[inline]
    fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [-v[1], v[0]]
    }
}

/// Cross product with a unit axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisCross {
    k: [f64; 3],
}

impl AxisCross {
    pub fn new(k: [f64; 3]) -> Result<Self, ConstitutiveError> {
        let n = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(ConstitutiveError::InvalidInput(format!("rotation axis must be a unit vector, |k| = {n}")));
        }
        Ok(AxisCross { k })
    }

    pub fn axis(&self) -> [f64; 3] {
        self.k
    }
}

impl SkewMap<3> for AxisCross {
    #[inline]
    fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let k = self.k;
        [k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]]
    }
}

/// Unscaled rotation/gravity data: Ω̃, 𝒢̃ and the direction e₀(t).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationGravity {
    pub omega_tilde: f64,
    pub gravity_tilde: f64,
    /// Components of e₀(t); may depend on `t` only.
    pub e0: [FieldExpr; 2],
}

/// Times at which |e₀(t)| = 1 is checked.
const E0_SAMPLES: usize = 101;
const E0_HORIZON: f64 = 100.0;

impl RotationGravity {
    pub fn new(omega_tilde: f64, gravity_tilde: f64, e0: [FieldExpr; 2]) -> Result<Self, ConstitutiveError> {
        if !(omega_tilde >= 0.0) || !omega_tilde.is_finite() {
            return Err(ConstitutiveError::InvalidInput(format!("angular speed must be ≥ 0, got {omega_tilde}")));
        }
        if !(gravity_tilde > 0.0) || !gravity_tilde.is_finite() {
            return Err(ConstitutiveError::InvalidInput(format!("gravity constant must be > 0, got {gravity_tilde}")));
        }
        for (i, e) in e0.iter().enumerate() {
            for var in [crate::fields::Var::X, crate::fields::Var::Y] {
                if e.depends_on(var) {
                    return Err(ConstitutiveError::InvalidInput(format!(
                        "gravity direction component {i} may depend on t only"
                    )));
                }
            }
        }
        let rg = RotationGravity { omega_tilde, gravity_tilde, e0 };
        for k in 0..E0_SAMPLES {
            let t = E0_HORIZON * k as f64 / (E0_SAMPLES - 1) as f64;
            let e = rg.e0_at(t)?;
            let n = e[0].hypot(e[1]);
            if (n - 1.0).abs() > 1e-9 {
                return Err(ConstitutiveError::InvalidInput(format!("|e0(t)| = {n} at t = {t}, expected 1")));
            }
        }
        Ok(rg)
    }

    /// Gravity along −y: e₀ ≡ (0,1).
    pub fn vertical(omega_tilde: f64, gravity_tilde: f64) -> Result<Self, ConstitutiveError> {
        RotationGravity::new(omega_tilde, gravity_tilde, [FieldExpr::constant(0.0), FieldExpr::constant(1.0)])
    }

    pub fn e0_at(&self, t: f64) -> Result<[f64; 2], ConstitutiveError> {
        let ctx = EvalContext::unit(0.0, 0.0, t);
        let ev = |e: &FieldExpr| e.eval(&ctx).map_err(|source| ConstitutiveError::Field { at: [0.0, 0.0], source });
        Ok([ev(&self.e0[0])?, ev(&self.e0[1])?])
    }

    /// Applies the c̄ scalings of the equation of state.
    pub fn resolve(&self, eos: &FluidEos) -> ResolvedRotation {
        let cbar = eos.cbar();
        ResolvedRotation {
            cbar,
            omega: cbar * self.omega_tilde,
            gravity: cbar * cbar * self.gravity_tilde,
            e0: self.e0.clone(),
            steady: !self.e0[0].depends_on(crate::fields::Var::T) && !self.e0[1].depends_on(crate::fields::Var::T),
        }
    }
}

/// Rotation data after scaling: Ω = c̄Ω̃, 𝒢 = c̄²𝒢̃.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRotation {
    pub cbar: f64,
    pub omega: f64,
    pub gravity: f64,
    e0: [FieldExpr; 2],
    steady: bool,
}

impl ResolvedRotation {
    /// χ_* = 1 + Ω.
    pub fn chi_star(&self) -> f64 {
        1.0 + self.omega
    }

    /// R_*(x) = 2c̄Ω/φ(x).
    pub fn r_star(&self, phi: f64) -> f64 {
        2.0 * self.cbar * self.omega / phi
    }

    pub fn is_steady(&self) -> bool {
        self.steady
    }

    pub fn e0_at(&self, t: f64) -> Result<[f64; 2], ConstitutiveError> {
        let ctx = EvalContext::unit(0.0, 0.0, t);
        let ev = |e: &FieldExpr| e.eval(&ctx).map_err(|source| ConstitutiveError::Field { at: [0.0, 0.0], source });
        Ok([ev(&self.e0[0])?, ev(&self.e0[1])?])
    }

    /// Z(x,t) = 𝒢e₀(t) + Ω²J²x = 𝒢e₀(t) − Ω²x in the plane.
    pub fn z_with_e0(&self, x: [f64; 2], e0: [f64; 2]) -> [f64; 2] {
        let w2 = self.omega * self.omega;
        [self.gravity * e0[0] - w2 * x[0], self.gravity * e0[1] - w2 * x[1]]
    }

    pub fn eval_z(&self, x: [f64; 2], t: f64) -> Result<[f64; 2], ConstitutiveError> {
        Ok(self.z_with_e0(x, self.e0_at(t)?))
    }

    /// c_Z = 𝒢 + max |x| over the closed domain.
    pub fn c_z(&self, max_radius: f64) -> f64 {
        self.gravity + max_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spinning(omega: f64) -> ResolvedRotation {
        let e0 = [FieldExpr::parse("cos(t)").unwrap(), FieldExpr::parse("sin(t)").unwrap()];
        RotationGravity::new(omega, 1.5, e0).unwrap().resolve(&FluidEos::SlightlyCompressible { varpi: 0.8 })
    }

    #[test]
    fn scalings_and_chi_star() {
        let r = spinning(2.0);
        assert!((r.omega - 1.6).abs() < 1e-15);
        assert!((r.gravity - 0.96).abs() < 1e-15);
        assert!((r.chi_star() - 2.6).abs() < 1e-15);
        assert!((r.r_star(0.4) - 6.4).abs() < 1e-14);
        assert_eq!(spinning(0.0).chi_star(), 1.0);
    }

    #[test]
    fn z_without_rotation_is_gravity() {
        let r = spinning(0.0);
        let z = r.eval_z([0.3, 0.9], 0.0).unwrap();
        assert_eq!(z, [r.gravity, 0.0]);
        assert!((r.gravity - 0.96).abs() < 1e-15);
    }

    #[test]
    fn plane_j_squares_to_minus_identity() {
        let j = PlaneRotation;
        assert_eq!(j.apply(j.apply([0.3, -1.2])), [-0.3, 1.2]);
        let r = spinning(1.0);
        let e0 = r.e0_at(0.7).unwrap();
        let x = [0.25, 0.5];
        let jj = j.apply(j.apply(x));
        let w2 = r.omega * r.omega;
        let expected = [r.gravity * e0[0] + w2 * jj[0], r.gravity * e0[1] + w2 * jj[1]];
        assert_eq!(r.eval_z(x, 0.7).unwrap(), expected);
    }

    #[test]
    fn axis_cross_is_skew() {
        let k = AxisCross::new([0.0, 0.6, 0.8]).unwrap();
        let v = [1.0, 2.0, -0.5];
        let w = k.apply(v);
        assert!((w[0] * v[0] + w[1] * v[1] + w[2] * v[2]).abs() < 1e-15);
        assert!(AxisCross::new([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let e0 = [FieldExpr::parse("1").unwrap(), FieldExpr::parse("t").unwrap()];
        assert!(RotationGravity::new(1.0, 1.0, e0).is_err());
    }

    #[test]
    fn z_bound_holds_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (lx, ly) = (1.0, 2.0);
        for omega in [0.0, 0.5, 3.0] {
            let r = spinning(omega);
            let cz = r.c_z(f64::hypot(lx, ly));
            let bound = cz * r.chi_star().powi(2);
            for _ in 0..10_000 {
                let x = [rng.gen_range(0.0..=lx), rng.gen_range(0.0..=ly)];
                let t = rng.gen_range(0.0..50.0);
                let z = r.eval_z(x, t).unwrap();
                let mag = z[0].hypot(z[1]);
                assert!(mag <= r.chi_star().powi(2) * (r.gravity + x[0].hypot(x[1])) * (1.0 + 1e-14));
                assert!(mag <= bound * (1.0 + 1e-14));
            }
        }
    }
}
