//! Heterogeneous Forchheimer law, equations of state, rotation/gravity
//! forcing, the inverse map X and the structural weights.

pub mod bounds;
pub mod eos;
pub mod inverse;
pub mod law;
pub mod rotation;
pub mod weights;

use thiserror::Error;

use crate::fields::{EvalContext, EvalError, FieldExpr};

pub use bounds::{verify_x_bounds, BoundCheckReport, SampleRanges};
pub use eos::FluidEos;
pub use inverse::{forward_2d, invert_2d, invert_3d, DEFAULT_TOL};
pub use law::{ForchheimerLaw, LocalLaw};
pub use rotation::{AxisCross, PlaneRotation, ResolvedRotation, RotationGravity, SkewMap};
pub use weights::WeightSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstitutiveError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate coefficient {index} = {value}{}", at.map(|p| format!(" at ({}, {})", p[0], p[1])).unwrap_or_default())]
    DegenerateCoefficient { index: usize, value: f64, at: Option<[f64; 2]> },
    #[error("inversion did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { residual: f64, iterations: usize },
    #[error("coefficient field at ({}, {}): {source}", at[0], at[1])]
    Field {
        at: [f64; 2],
        #[source]
        source: EvalError,
    },
}

/// Everything needed to evaluate X at a point: law, EOS, rotation and porosity.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub law: ForchheimerLaw,
    pub eos: FluidEos,
    pub rotation: ResolvedRotation,
    pub porosity_tilde: FieldExpr,
    pub lx: f64,
    pub ly: f64,
}

impl Medium {
    pub fn new(
        law: ForchheimerLaw,
        eos: FluidEos,
        rotation: &RotationGravity,
        porosity_tilde: FieldExpr,
        lx: f64,
        ly: f64,
    ) -> Result<Self, ConstitutiveError> {
        eos.validate()?;
        Ok(Medium { law, eos, rotation: rotation.resolve(&eos), porosity_tilde, lx, ly })
    }

    pub fn lambda(&self) -> f64 {
        self.eos.lambda()
    }

    pub fn cbar(&self) -> f64 {
        self.eos.cbar()
    }

    pub fn a(&self) -> f64 {
        self.law.a()
    }

    pub fn chi_star(&self) -> f64 {
        self.rotation.chi_star()
    }

    /// All pointwise data frozen at `x`.
    pub fn at(&self, x: [f64; 2]) -> Result<LocalMedium, ConstitutiveError> {
        let law = self.law.at(x, self.lx, self.ly)?;
        let phi_tilde = self
            .porosity_tilde
            .eval(&EvalContext::new(x[0], x[1], 0.0, self.lx, self.ly))
            .map_err(|source| ConstitutiveError::Field { at: x, source })?;
        if !(phi_tilde > 0.0 && phi_tilde < 1.0) {
            return Err(ConstitutiveError::InvalidInput(format!(
                "porosity must lie in (0,1), got {phi_tilde} at ({}, {})",
                x[0], x[1]
            )));
        }
        let phi = self.cbar() * phi_tilde;
        Ok(LocalMedium { law, phi, r_star: self.rotation.r_star(phi), lambda: self.lambda(), cbar: self.cbar() })
    }
}

/// Pointwise constitutive data.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMedium {
    pub law: LocalLaw,
    pub phi: f64,
    pub r_star: f64,
    pub lambda: f64,
    pub cbar: f64,
}

impl LocalMedium {
    /// Rotation magnitude R_*z^λ entering F.
    #[inline]
    pub fn zeta(&self, z: f64) -> f64 {
        if self.r_star == 0.0 {
            0.0
        } else if self.lambda == 1.0 {
            self.r_star * z
        } else {
            self.r_star * z.powf(self.lambda)
        }
    }

    /// X(x,z,y) = F_{x,R_*z^λ}⁻¹(y).
    #[inline]
    pub fn x(&self, z: f64, y: [f64; 2], tol: f64) -> Result<[f64; 2], ConstitutiveError> {
        if !(z >= 0.0) {
            return Err(ConstitutiveError::InvalidInput(format!("pseudo-pressure argument must be ≥ 0, got {z}")));
        }
        invert_2d(&self.law, self.zeta(z), y, tol)
    }

    pub fn f(&self, z: f64, v: [f64; 2]) -> [f64; 2] {
        forward_2d(&self.law, self.zeta(z), v)
    }

    pub fn weights(&self) -> Result<WeightSet, ConstitutiveError> {
        WeightSet::compute(&self.law, self.cbar, self.phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_medium_combines_scalings() {
        let rot = RotationGravity::vertical(1.0, 1.0).unwrap();
        let m = Medium::new(
            ForchheimerLaw::two_term(1.0, 1.0),
            FluidEos::SlightlyCompressible { varpi: 0.5 },
            &rot,
            FieldExpr::parse("0.5").unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let lm = m.at([0.5, 0.5]).unwrap();
        assert_eq!(lm.phi, 0.25);
        // R_* = 2 c̄ Ω / φ with Ω = c̄ Ω̃ = 0.5.
        assert_eq!(lm.r_star, 2.0);
        assert_eq!(lm.zeta(3.0), 6.0);
        let y = lm.f(3.0, [0.2, -0.1]);
        let v = lm.x(3.0, y, DEFAULT_TOL).unwrap();
        assert!((v[0] - 0.2).abs() < 1e-14 && (v[1] + 0.1).abs() < 1e-14);
        assert!(lm.x(-1.0, y, DEFAULT_TOL).is_err());
    }
}
