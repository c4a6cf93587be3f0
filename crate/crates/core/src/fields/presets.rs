//! Heterogeneity presets expressed in the field grammar, so every preset is
//! also a valid config string.

use serde::{Deserialize, Serialize};

use super::expr::FieldExpr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Constant { value: f64 },
    /// `c + gx*x + gy*y`.
    Affine { c: f64, gx: f64, gy: f64 },
    /// Smooth jump from `low` (y < `at`) to `high` (y > `at`) over `width`.
    Layered { low: f64, high: f64, at: f64, width: f64 },
    /// `base + amp*exp(-|x-c|²/radius²)`.
    RadialBump { base: f64, amp: f64, cx: f64, cy: f64, radius: f64 },
    /// Alternating `low`/`high` blocks, `cells` blocks per unit length.
    Checkerboard { low: f64, high: f64, cells: f64 },
    /// `offset + scale*dist(x,Γ)^power`; degenerate at the boundary when `offset = 0`.
    DistPower { offset: f64, scale: f64, power: f64 },
}

fn lit(v: f64) -> String {
    if v < 0.0 {
        format!("({})", FieldExpr::constant(v))
    } else {
        FieldExpr::constant(v).to_string()
    }
}

impl Preset {
    pub fn source(&self) -> String {
        match *self {
            Preset::Constant { value } => lit(value),
            Preset::Affine { c, gx, gy } => format!("{} + {}*x + {}*y", lit(c), lit(gx), lit(gy)),
            Preset::Layered { low, high, at, width } => format!(
                "{lo} + ({hi} - {lo})*(1 + tanh((y - {at})/{w}))/2",
                lo = lit(low),
                hi = lit(high),
                at = lit(at),
                w = lit(width)
            ),
            Preset::RadialBump { base, amp, cx, cy, radius } => format!(
                "{} + {}*exp(-((x - {})^2 + (y - {})^2)/{}^2)",
                lit(base),
                lit(amp),
                lit(cx),
                lit(cy),
                lit(radius)
            ),
            Preset::Checkerboard { low, high, cells } => format!(
                "{lo} + ({hi} - {lo})*(1 + sign(sin(pi*{k}*x)*sin(pi*{k}*y)))/2",
                lo = lit(low),
                hi = lit(high),
                k = lit(cells)
            ),
            Preset::DistPower { offset, scale, power } => format!(
                "{} + {}*dist_boundary()^{}",
                lit(offset),
                lit(scale),
                lit(power)
            ),
        }
    }

    pub fn to_field(&self) -> FieldExpr {
        FieldExpr::parse(&self.source()).expect("preset sources are grammatical")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::expr::EvalContext;

    fn at(p: Preset, x: f64, y: f64) -> f64 {
        p.to_field().eval(&EvalContext::unit(x, y, 0.0)).unwrap()
    }

    #[test]
    fn presets_evaluate_as_described() {
        assert_eq!(at(Preset::Constant { value: 0.5 }, 0.3, 0.3), 0.5);
        assert_eq!(at(Preset::Affine { c: 1.0, gx: -2.0, gy: 0.5 }, 0.25, 0.5), 0.75);
        let layered = Preset::Layered { low: 0.2, high: 0.6, at: 0.5, width: 0.01 };
        assert!((at(layered.clone(), 0.1, 0.1) - 0.2).abs() < 1e-12);
        assert!((at(layered.clone(), 0.1, 0.9) - 0.6).abs() < 1e-12);
        assert!((at(layered, 0.1, 0.5) - 0.4).abs() < 1e-15);
        let bump = Preset::RadialBump { base: 1.0, amp: 2.0, cx: 0.5, cy: 0.5, radius: 0.1 };
        assert_eq!(at(bump, 0.5, 0.5), 3.0);
        let board = Preset::Checkerboard { low: 1.0, high: 3.0, cells: 2.0 };
        assert_eq!(at(board.clone(), 0.25, 0.25), 3.0);
        assert_eq!(at(board, 0.75, 0.25), 1.0);
        let degenerate = Preset::DistPower { offset: 0.0, scale: 1.0, power: 2.0 };
        assert!((at(degenerate, 0.1, 0.5) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn presets_round_trip_through_serde() {
        let p = Preset::DistPower { offset: 0.1, scale: 2.0, power: 0.5 };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Preset>(&text).unwrap(), p);
    }
}
