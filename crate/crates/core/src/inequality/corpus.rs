//! Synthetic test functions on the unit square with matched weights.
//!
//! Every member is an expression with symbolic gradient, so integrands are
//! sampled exactly at cell centres and boundary-face centres; the only
//! discretization is the midpoint quadrature shared by both sides of each
//! inequality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::fields::{materialize, EvalContext, FieldError, FieldExpr, Grid, Preset, Var};

/// Time profile g(t) of the space-time members u(x)g(t) on (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Decay { rate: f64 },
    Oscillating { amp: f64 },
}

impl TimeProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Decay { rate } => (-rate * t).exp(),
            TimeProfile::Oscillating { amp } => 1.0 + amp * (2.0 * std::f64::consts::PI * t).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Member {
    pub id: usize,
    pub family: &'static str,
    pub u: FieldExpr,
    pub phi: FieldExpr,
    /// The gradient weight W_*.
    pub w: FieldExpr,
    pub omega: FieldExpr,
    pub time: TimeProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionCorpus {
    pub seed: u64,
    pub members: Vec<Member>,
}

fn expr(src: String) -> FieldExpr {
    FieldExpr::parse(&src).expect("corpus sources are grammatical")
}

fn draw_u(rng: &mut ChaCha8Rng) -> (&'static str, FieldExpr) {
    match rng.gen_range(0..10) {
        0..=2 => {
            let (k, l) = (rng.gen_range(1..4), rng.gen_range(1..4));
            let (a, b) = (rng.gen_range(0.0..1.5), rng.gen_range(0.2..1.0));
            ("trigonometric", expr(format!("{a} + {b}*cos({k}*pi*x)*cos({l}*pi*y)")))
        }
        3..=5 => {
            let (c, a) = (rng.gen_range(0.0..0.5), rng.gen_range(0.3..1.5));
            let (x0, y0, w) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.1..0.5));
            ("radial_bump", expr(format!("{c} + {a}*exp(-((x - {x0})^2 + (y - {y0})^2)/{w}^2)")))
        }
        6..=8 => {
            let p = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
            let a = rng.gen_range(0.5..3.0);
            ("boundary_degenerate", expr(format!("{a}*dist_boundary()^{p}")))
        }
        _ => ("constant", FieldExpr::constant(rng.gen_range(0.1..2.0))),
    }
}

fn draw_weight(rng: &mut ChaCha8Rng, degenerate_power: f64) -> FieldExpr {
    let p = match rng.gen_range(0..4) {
        0 => Preset::Constant { value: rng.gen_range(0.2..1.0) },
        1 => Preset::RadialBump {
            base: rng.gen_range(0.2..0.6),
            amp: rng.gen_range(0.1..0.4),
            cx: rng.gen_range(0.0..1.0),
            cy: rng.gen_range(0.0..1.0),
            radius: rng.gen_range(0.2..0.6),
        },
        2 => Preset::Layered {
            low: rng.gen_range(0.2..0.5),
            high: rng.gen_range(0.5..1.0),
            at: rng.gen_range(0.3..0.7),
            width: 0.1,
        },
        _ => Preset::DistPower { offset: 0.0, scale: rng.gen_range(0.5..1.5), power: degenerate_power },
    };
    p.to_field()
}

impl FunctionCorpus {
    /// `count` members drawn from `seed`; the same pair always yields the same corpus.
    pub fn generate(seed: u64, count: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let members = (0..count)
            .map(|id| {
                let (family, u) = draw_u(&mut rng);
                let phi = draw_weight(&mut rng, 0.2);
                let w = draw_weight(&mut rng, 0.05);
                let omega = if rng.gen_bool(0.5) { FieldExpr::constant(1.0) } else { phi.clone() };
                let time = if rng.gen_bool(0.5) {
                    TimeProfile::Decay { rate: rng.gen_range(0.0..2.0) }
                } else {
                    TimeProfile::Oscillating { amp: rng.gen_range(0.0..0.8) }
                };
                Member { id, family, u, phi, w, omega, time }
            })
            .collect();
        FunctionCorpus { seed, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// SHA-256 over the member sources, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for m in &self.members {
            for e in [&m.u, &m.phi, &m.w, &m.omega] {
                h.update(e.source().as_bytes());
                h.update([0u8]);
            }
            h.update(format!("{:?}", m.time).as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A member sampled on a grid.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub u: Vec<f64>,
    /// |∇u| at cell centres.
    pub grad: Vec<f64>,
    pub phi: Vec<f64>,
    pub w: Vec<f64>,
    pub omega: Vec<f64>,
    /// u at boundary-face centres, aligned with `grid.boundary_faces()`.
    pub u_boundary: Vec<f64>,
}

impl Sampled {
    pub fn new(m: &Member, grid: &Grid) -> Result<Self, FieldError> {
        let dx = m.u.derivative(Var::X);
        let dy = m.u.derivative(Var::Y);
        let gx = materialize(&dx, grid, 0.0)?;
        let gy = materialize(&dy, grid, 0.0)?;
        let u_boundary = grid
            .boundary_faces()
            .iter()
            .map(|&f| {
                let [x, y] = grid.face(f).center;
                m.u.eval(&EvalContext::new(x, y, 0.0, grid.lx, grid.ly))
                    .map_err(|source| FieldError::Face { expr: m.u.source().to_string(), face: f, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let s = Sampled {
            u: materialize(&m.u, grid, 0.0)?,
            grad: gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect(),
            phi: materialize(&m.phi, grid, 0.0)?,
            w: materialize(&m.w, grid, 0.0)?,
            omega: materialize(&m.omega, grid, 0.0)?,
            u_boundary,
        };
        debug_assert!(s.phi.iter().chain(&s.w).all(|&v| v > 0.0));
        Ok(s)
    }
}
