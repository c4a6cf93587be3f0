//! Equations of state. Both reduce to ρ∇p = ∇u and ρ = c̄u^λ for the
//! pseudo-pressure u.

use serde::{Deserialize, Serialize};

use super::ConstitutiveError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluidEos {
    /// p = cρ^γ.
    Isentropic { c: f64, gamma: f64 },
    /// (1/ρ) dρ/dp = ϖ.
    SlightlyCompressible { varpi: f64 },
}

impl Default for FluidEos {
    fn default() -> Self {
        FluidEos::SlightlyCompressible { varpi: 1.0 }
    }
}

impl FluidEos {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let ok = match *self {
            FluidEos::Isentropic { c, gamma } => c > 0.0 && gamma > 0.0 && c.is_finite() && gamma.is_finite(),
            FluidEos::SlightlyCompressible { varpi } => varpi > 0.0 && varpi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ConstitutiveError::InvalidInput(format!("equation-of-state constants must be positive: {self:?}")))
        }
    }

    /// λ ∈ (0,1]: 1/(γ+1) for the gas, exactly 1 for the liquid.
    pub fn lambda(&self) -> f64 {
        match *self {
            FluidEos::Isentropic { gamma, .. } => 1.0 / (gamma + 1.0),
            FluidEos::SlightlyCompressible { .. } => 1.0,
        }
    }

    /// c̄ with ρ = c̄u^λ.
    pub fn cbar(&self) -> f64 {
        match *self {
            FluidEos::Isentropic { c, gamma } => ((gamma + 1.0) / (c * gamma)).powf(1.0 / (gamma + 1.0)),
            FluidEos::SlightlyCompressible { varpi } => varpi,
        }
    }
}
