//! Explicit finite-volume solver for φ(u^λ)_t = ∇·X(x,u,∇u+u^{2λ}Z) + f with
//! the flux condition X·ν + ψ₁ + ψ₂u^λ = 0.
//!
//! The evolved variable is w = u^λ, the time term of the equation taken
//! literally. Interior face fluxes evaluate X at the face centre with the
//! arithmetic face average of u and a compact gradient; boundary fluxes are
//! −(ψ₁ + ψ₂w_b) with w_b the adjacent cell value, so every face flux appears
//! in exactly two cell balances (or one, on Γ) and mass telescopes.
//!
//! The loop is sequential: fluxes are computed into a frozen array, then
//! cells are updated, and every reduction goes through the fixed-tree sum.

pub mod mms;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{ConstitutiveError, LocalMedium, Medium, DEFAULT_TOL};
use crate::fields::{materialize, BoundaryForcing, BoundaryPartition, BoundaryTag, FaceKind, FieldError, FieldExpr, Grid};
use crate::functionals::{pairwise_sum, BoundaryValues, FunctionalError};

pub use mms::{mms_study, temporal_study, MmsProblem, MmsReport, TemporalReport};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("X inversion failed at face {face}, t = {t}: {source}")]
    Flux {
        face: usize,
        t: f64,
        #[source]
        source: ConstitutiveError,
    },
    #[error("time step {dt:e} fell below 1e-14 * t_end at t = {t}; the problem is too stiff for explicit stepping (implicit integration is not provided)")]
    Stiff { dt: f64, t: f64 },
    #[error("invalid solver input: {0}")]
    Precondition(String),
    #[error("non-finite state at t = {t}, cell {cell}")]
    NonFinite { t: f64, cell: usize },
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Time-step selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// dt = safety · min_c φ_cA_c/S_c with S_c from the flux-sensitivity probe.
    Adaptive { safety: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: DtPolicy,
    /// Floor ε_reg on u applied after each step; 0 disables flooring below zero.
    pub eps_reg: f64,
    pub t_end: f64,
    /// Time between stored snapshots; steps are shortened to land on them.
    pub snapshot_interval: f64,
    /// Exponents α for the diagnostic norms and gradient energies.
    pub alphas: Vec<f64>,
    /// Tolerance of the X inversion.
    pub tol: f64,
    /// Steps between flux-sensitivity probes under the adaptive policy.
    pub probe_every: usize,
    pub max_steps: usize,
}

impl SolverConfig {
    /// Adaptive stepping with the default floor for this λ.
    pub fn adaptive(t_end: f64, lambda: f64) -> Self {
        SolverConfig {
            dt: DtPolicy::Adaptive { safety: 0.5 },
            eps_reg: default_eps_reg(lambda),
            t_end,
            snapshot_interval: t_end / 10.0,
            alphas: vec![2.0],
            tol: DEFAULT_TOL,
            probe_every: 1,
            max_steps: 10_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Precondition(m));
        if !(self.eps_reg >= 0.0) || !self.eps_reg.is_finite() {
            return bad(format!("eps_reg must be ≥ 0, got {}", self.eps_reg));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.snapshot_interval > 0.0) {
            return bad(format!("snapshot interval must be positive, got {}", self.snapshot_interval));
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt > 0.0) || !dt.is_finite() => return bad(format!("fixed dt must be positive, got {dt}")),
            DtPolicy::Adaptive { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return bad(format!("safety factor must lie in (0,1], got {safety}"))
            }
            _ => {}
        }
        if self.alphas.iter().any(|&a| !(a > 0.0)) {
            return bad("diagnostic exponents must be positive".into());
        }
        if self.probe_every == 0 {
            return bad("probe_every must be at least 1".into());
        }
        Ok(())
    }
}

/// 10⁻¹⁰ when λ ≠ 1, where 1/λ-th roots of round-off must be guarded; 0 for λ = 1.
pub fn default_eps_reg(lambda: f64) -> f64 {
    if lambda == 1.0 {
        0.0
    } else {
        1e-10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoPressureState {
    pub t: f64,
    pub u: Vec<f64>,
    /// w = u^λ.
    pub w: Vec<f64>,
    pub last_dt: f64,
    /// max over faces of the probed |∂flux/∂u| per unit length.
    pub last_max_face_speed: f64,
    /// Cumulative ∫φ(w_floored − w) added by flooring.
    pub floor_injection: f64,
}

/// Boundary data (ψ₁, ψ₂) on the boundary faces at a given time.
pub trait BoundarySource {
    fn values(&self, t: f64) -> Result<BoundaryValues, SolverError>;
    fn is_steady(&self) -> bool {
        false
    }
}

/// ψ₁, ψ₂ from expressions, restricted to the tagged boundary parts.
pub struct TaggedForcing {
    pub forcing: BoundaryForcing,
    tags: Vec<BoundaryTag>,
    grid: Grid,
    steady: Option<BoundaryValues>,
}

impl TaggedForcing {
    pub fn new(forcing: BoundaryForcing, partition: &BoundaryPartition, grid: &Grid) -> Result<Self, SolverError> {
        let tags = partition.tag_faces(grid).map_err(FunctionalError::from)?;
        let mut tf = TaggedForcing { forcing, tags, grid: grid.clone(), steady: None };
        if tf.forcing.is_steady() {
            tf.steady = Some(BoundaryValues::evaluate_tagged(&tf.forcing, &tf.tags, grid, 0.0)?);
        }
        Ok(tf)
    }
}

impl BoundarySource for TaggedForcing {
    fn values(&self, t: f64) -> Result<BoundaryValues, SolverError> {
        match &self.steady {
            Some(v) => Ok(v.clone()),
            None => Ok(BoundaryValues::evaluate_tagged(&self.forcing, &self.tags, &self.grid, t)?),
        }
    }

    fn is_steady(&self) -> bool {
        self.steady.is_some()
    }
}

/// Volumetric source f on cells.
pub trait SourceTerm {
    fn cells(&self, t: f64) -> Result<Vec<f64>, SolverError>;
}

/// A source given by an expression in (x, y, t), sampled at cell centres.
pub struct ExprSource {
    pub expr: FieldExpr,
    grid: Grid,
}

impl ExprSource {
    pub fn new(expr: FieldExpr, grid: &Grid) -> Self {
        ExprSource { expr, grid: grid.clone() }
    }
}

impl SourceTerm for ExprSource {
    fn cells(&self, t: f64) -> Result<Vec<f64>, SolverError> {
        Ok(materialize(&self.expr, &self.grid, t)?)
    }
}

/// Interior flux X(x_f, u_f, G)·ν with G = ∇u_f + u_f^{2λ}Z.
#[inline]
pub fn interior_flux(
    local: &LocalMedium,
    u_f: f64,
    grad: [f64; 2],
    z: [f64; 2],
    normal: [f64; 2],
    tol: f64,
) -> Result<f64, ConstitutiveError> {
    let s = pow_lambda(u_f, 2.0 * local.lambda);
    let y = [grad[0] + s * z[0], grad[1] + s * z[1]];
    let x = local.x(u_f, y, tol)?;
    Ok(x[0] * normal[0] + x[1] * normal[1])
}

/// Boundary flux −(ψ₁ + ψ₂w_b).
#[inline]
pub fn boundary_flux(psi1: f64, psi2: f64, w_b: f64) -> f64 {
    -(psi1 + psi2 * w_b)
}

#[inline]
fn pow_lambda(u: f64, e: f64) -> f64 {
    if e == 1.0 {
        u
    } else if e == 2.0 {
        u * u
    } else {
        u.powf(e)
    }
}

/// One explicit step's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    /// ∫φw before and after the step (after flooring).
    pub mass_before: f64,
    pub mass_after: f64,
    /// ∫_Γ(ψ₁ + ψ₂w) at the start of the step.
    pub outflux: f64,
    /// ∫f at the start of the step.
    pub source: f64,
    /// ∫φ(w_floored − w) injected by this step.
    pub floor_injection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mass: f64,
    pub outflux: f64,
    pub floor_injection: f64,
    /// ‖u‖_{L^α_φ} for each configured α.
    pub norms: Vec<f64>,
    /// ∫u^{α−λ−1}(1+u)^{−2λ}|∇u|^{2−a}W₁ for each configured α.
    pub gradient_energy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub diagnostics: Vec<Diagnostics>,
    pub steps: Vec<StepRecord>,
    pub alphas: Vec<f64>,
    pub final_state: PseudoPressureState,
}

/// Per-step residuals of d/dt∫φw = −∫_Γ(ψ₁+ψ₂w) + ∫f.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassBalance {
    /// (mass_{k+1} − mass_k)/dt + outflux_k − source_k.
    pub raw: Vec<f64>,
    /// raw minus the recorded floor injection rate.
    pub corrected: Vec<f64>,
    /// max|corrected| over the scale max_k(mass_k/t_end + |outflux_k| + |source_k|).
    pub max_normalized: f64,
}

pub fn mass_balance_residual(traj: &Trajectory) -> MassBalance {
    let mut raw = Vec::with_capacity(traj.steps.len());
    let mut corrected = Vec::with_capacity(traj.steps.len());
    let t_end = traj.final_state.t.max(f64::MIN_POSITIVE);
    let mut scale = f64::MIN_POSITIVE;
    for s in &traj.steps {
        let r = (s.mass_after - s.mass_before) / s.dt + s.outflux - s.source;
        raw.push(r);
        corrected.push(r - s.floor_injection / s.dt);
        scale = scale.max(s.mass_before.abs() / t_end + s.outflux.abs() + s.source.abs());
    }
    let max_normalized = corrected.iter().fold(0f64, |m, r| m.max(r.abs())) / scale;
    MassBalance { raw, corrected, max_normalized }
}

/// Solver for one medium, boundary source and optional volumetric source.
pub struct Solver {
    pub grid: Grid,
    pub medium: Medium,
    pub config: SolverConfig,
    phi: Vec<f64>,
    w1: Vec<f64>,
    /// Pointwise data at interior face centres; `None` on the boundary.
    face_media: Vec<Option<LocalMedium>>,
    boundary: Box<dyn BoundarySource>,
    source: Option<Box<dyn SourceTerm>>,
}

/// Fluxes at one state, with the probed sensitivities.
struct FluxField {
    /// X·ν with ν the stored face normal.
    flux: Vec<f64>,
    bv: BoundaryValues,
    source: Option<Vec<f64>>,
}

impl Solver {
    pub fn new(
        grid: Grid,
        medium: Medium,
        config: SolverConfig,
        boundary: Box<dyn BoundarySource>,
        source: Option<Box<dyn SourceTerm>>,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        if (grid.lx - medium.lx).abs() > 1e-12 * grid.lx || (grid.ly - medium.ly).abs() > 1e-12 * grid.ly {
            return Err(SolverError::Precondition("grid and medium extents differ".into()));
        }
        let mut phi = Vec::with_capacity(grid.cell_count());
        let mut w1 = Vec::with_capacity(grid.cell_count());
        for c in 0..grid.cell_count() {
            let local = medium.at(grid.cell_center(c))?;
            w1.push(local.weights()?.w1);
            phi.push(local.phi);
        }
        let face_media = grid
            .faces()
            .iter()
            .map(|f| match f.kind {
                FaceKind::Interior { .. } => medium.at(f.center).map(Some),
                FaceKind::Boundary { .. } => Ok(None),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Solver { grid, medium, config, phi, w1, face_media, boundary, source })
    }

    /// Solver with expression forcing on a partitioned boundary.
    pub fn with_forcing(
        grid: Grid,
        medium: Medium,
        config: SolverConfig,
        forcing: BoundaryForcing,
        partition: &BoundaryPartition,
        source: Option<FieldExpr>,
    ) -> Result<Self, SolverError> {
        let b = TaggedForcing::new(forcing, partition, &grid)?;
        let s = source.map(|e| Box::new(ExprSource::new(e, &grid)) as Box<dyn SourceTerm>);
        Solver::new(grid, medium, config, Box::new(b), s)
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn lambda(&self) -> f64 {
        self.medium.lambda()
    }

    pub fn initial_state(&self, u0: &[f64]) -> Result<PseudoPressureState, SolverError> {
        if u0.len() != self.grid.cell_count() {
            return Err(SolverError::Precondition(format!(
                "initial field has {} values, grid has {} cells",
                u0.len(),
                self.grid.cell_count()
            )));
        }
        if let Some(c) = u0.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(SolverError::Precondition(format!("initial pseudo-pressure must be ≥ 0, got {} at cell {c}", u0[c])));
        }
        let lambda = self.lambda();
        Ok(PseudoPressureState {
            t: 0.0,
            u: u0.to_vec(),
            w: u0.iter().map(|&u| pow_lambda(u, lambda)).collect(),
            last_dt: 0.0,
            last_max_face_speed: 0.0,
            floor_injection: 0.0,
        })
    }

    /// Cell gradient: central differences inside, second-order one-sided at walls.
    pub fn cell_gradient(&self, u: &[f64], c: usize) -> [f64; 2] {
        let g = &self.grid;
        let (i, j) = g.cell_ij(c);
        let at = |i: usize, j: usize| u[g.cell_index(i, j)];
        let d = |n: usize, k: usize, f: &dyn Fn(usize) -> f64, h: f64| {
            if k == 0 {
                (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
            } else if k == n - 1 {
                (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
            } else {
                (f(k + 1) - f(k - 1)) / (2.0 * h)
            }
        };
        let gx = if g.nx >= 3 { d(g.nx, i, &|k| at(k, j), g.hx) } else { (at(1, j) - at(0, j)) / g.hx };
        let gy = if g.ny >= 3 { d(g.ny, j, &|k| at(i, k), g.hy) } else { (at(i, 1) - at(i, 0)) / g.hy };
        [gx, gy]
    }

    /// Face value and gradient at an interior face between `lo` and `hi`.
    fn face_state(&self, u: &[f64], axis: usize, lo: usize, hi: usize) -> (f64, [f64; 2]) {
        let u_f = 0.5 * (u[lo] + u[hi]);
        let (gl, gh) = (self.cell_gradient(u, lo), self.cell_gradient(u, hi));
        let mut grad = [0.5 * (gl[0] + gh[0]), 0.5 * (gl[1] + gh[1])];
        grad[axis] = (u[hi] - u[lo]) / self.grid.spacing(axis);
        (u_f, grad)
    }

    fn fluxes(&self, state: &PseudoPressureState) -> Result<FluxField, SolverError> {
        let t = state.t;
        let e0 = self.medium.rotation.e0_at(t)?;
        let bv = self.boundary.values(t)?;
        let mut flux = vec![0.0; self.grid.faces().len()];
        let mut b = 0;
        for (f, face) in self.grid.faces().iter().enumerate() {
            flux[f] = match face.kind {
                FaceKind::Interior { lo, hi } => {
                    let (u_f, grad) = self.face_state(&state.u, face.axis, lo, hi);
                    let z = self.medium.rotation.z_with_e0(face.center, e0);
                    let local = self.face_media[f].as_ref().expect("interior faces carry media");
                    interior_flux(local, u_f, grad, z, face.normal, self.config.tol)
                        .map_err(|source| SolverError::Flux { face: f, t, source })?
                }
                FaceKind::Boundary { cell, .. } => {
                    let v = boundary_flux(bv.psi1[b], bv.psi2[b], state.w[cell]);
                    b += 1;
                    v
                }
            };
        }
        let source = match &self.source {
            Some(s) => Some(s.cells(t)?),
            None => None,
        };
        Ok(FluxField { flux, bv, source })
    }

    /// Face-wise |∂flux/∂u|-sum per cell (in w units) from finite-difference probes.
    fn sensitivities(&self, state: &PseudoPressureState) -> Result<(Vec<f64>, f64), SolverError> {
        let t = state.t;
        let e0 = self.medium.rotation.e0_at(t)?;
        let bv = self.boundary.values(t)?;
        let lambda = self.lambda();
        let tol = self.config.tol;
        let mut s = vec![0.0; self.grid.cell_count()];
        let mut max_speed = 0f64;
        let mut b = 0;
        for (f, face) in self.grid.faces().iter().enumerate() {
            match face.kind {
                FaceKind::Interior { lo, hi } => {
                    let (u_f, grad) = self.face_state(&state.u, face.axis, lo, hi);
                    let z = self.medium.rotation.z_with_e0(face.center, e0);
                    let local = self.face_media[f].as_ref().expect("interior faces carry media");
                    let nu = face.normal;
                    let wrap = |source| SolverError::Flux { face: f, t, source };
                    let f0 = interior_flux(local, u_f, grad, z, nu, tol).map_err(wrap)?;
                    let dg = 1e-6 * (1.0 + grad[0].hypot(grad[1]));
                    let gp = [grad[0] + dg * nu[0], grad[1] + dg * nu[1]];
                    let k = ((interior_flux(local, u_f, gp, z, nu, tol).map_err(wrap)? - f0) / dg).abs();
                    let du = 1e-6 * (1.0 + u_f);
                    let ku = ((interior_flux(local, u_f + du, grad, z, nu, tol).map_err(wrap)? - f0) / du).abs();
                    let h = self.grid.spacing(face.axis);
                    let speed = k / h + ku;
                    max_speed = max_speed.max(speed);
                    let per = speed * face.length;
                    s[lo] += per * dudw(state.u[lo], lambda);
                    s[hi] += per * dudw(state.u[hi], lambda);
                }
                FaceKind::Boundary { cell, .. } => {
                    s[cell] += bv.psi2[b].abs() * face.length;
                    b += 1;
                }
            }
        }
        Ok((s, max_speed))
    }

    fn adaptive_dt(&self, state: &PseudoPressureState, safety: f64) -> Result<(f64, f64), SolverError> {
        let (s, max_speed) = self.sensitivities(state)?;
        let area = self.grid.cell_area();
        let mut dt = f64::INFINITY;
        for (c, &sc) in s.iter().enumerate() {
            if sc > 0.0 {
                dt = dt.min(safety * self.phi[c] * area / sc);
            }
        }
        Ok((dt, max_speed))
    }

    /// ∫φw.
    pub fn mass(&self, w: &[f64]) -> f64 {
        let terms: Vec<f64> = w.iter().zip(&self.phi).map(|(w, p)| w * p).collect();
        pairwise_sum(&terms) * self.grid.cell_area()
    }

    /// ∫_Γ(ψ₁ + ψ₂w) at time t.
    pub fn outflux(&self, state: &PseudoPressureState) -> Result<f64, SolverError> {
        let bv = self.boundary.values(state.t)?;
        Ok(self.outflux_with(&bv, &state.w))
    }

    fn outflux_with(&self, bv: &BoundaryValues, w: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .grid
            .boundary_faces()
            .iter()
            .enumerate()
            .map(|(b, &f)| {
                let face = self.grid.face(f);
                let FaceKind::Boundary { cell, .. } = face.kind else { unreachable!("boundary list holds boundary faces") };
                (bv.psi1[b] + bv.psi2[b] * w[cell]) * face.length
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Advances by at most `dt_cap`.
    pub fn step(&self, state: &PseudoPressureState, dt_cap: f64, probe: bool) -> Result<(PseudoPressureState, StepRecord), SolverError> {
        let ff = self.fluxes(state)?;
        let (mut dt, speed) = match self.config.dt {
            DtPolicy::Fixed { dt } => (dt, state.last_max_face_speed),
            DtPolicy::Adaptive { safety } => {
                if probe || state.last_dt == 0.0 {
                    self.adaptive_dt(state, safety)?
                } else {
                    (state.last_dt, state.last_max_face_speed)
                }
            }
        };
        let probed_dt = dt;
        dt = dt.min(dt_cap);
        if !(dt >= 1e-14 * self.config.t_end) {
            return Err(SolverError::Stiff { dt, t: state.t });
        }
        let area = self.grid.cell_area();
        let lambda = self.lambda();
        let w_floor = pow_lambda(self.config.eps_reg, lambda);
        let mut w = state.w.clone();
        let mut u = vec![0.0; w.len()];
        let mut injected = Vec::with_capacity(w.len());
        for c in 0..w.len() {
            let [l, r, btm, top] = self.grid.cell_faces(c);
            // Outward contributions; interior normals point lo → hi.
            let out = |f: usize| {
                let face = self.grid.face(f);
                match face.kind {
                    FaceKind::Interior { lo, .. } if lo == c => ff.flux[f],
                    FaceKind::Interior { .. } => -ff.flux[f],
                    FaceKind::Boundary { .. } => ff.flux[f],
                }
            };
            let net = (out(l) * self.grid.hy + out(r) * self.grid.hy) + (out(btm) * self.grid.hx + out(top) * self.grid.hx);
            let src = ff.source.as_ref().map_or(0.0, |s| s[c] * area);
            let wn = w[c] + dt / (self.phi[c] * area) * (net + src);
            if !wn.is_finite() {
                return Err(SolverError::NonFinite { t: state.t, cell: c });
            }
            let wf = wn.max(w_floor);
            injected.push(self.phi[c] * (wf - wn) * area);
            w[c] = wf;
            u[c] = if lambda == 1.0 { wf } else { wf.powf(1.0 / lambda) };
        }
        let floor_injection = pairwise_sum(&injected);
        let record = StepRecord {
            t: state.t,
            dt,
            mass_before: self.mass(&state.w),
            mass_after: self.mass(&w),
            outflux: self.outflux_with(&ff.bv, &state.w),
            source: ff.source.as_ref().map_or(0.0, |s| pairwise_sum(s) * area),
            floor_injection,
        };
        let next = PseudoPressureState {
            t: state.t + dt,
            u,
            w,
            last_dt: probed_dt,
            last_max_face_speed: speed,
            floor_injection: state.floor_injection + floor_injection,
        };
        Ok((next, record))
    }

    pub fn diagnostics(&self, state: &PseudoPressureState, alphas: &[f64]) -> Result<Diagnostics, SolverError> {
        let a = self.medium.a();
        let lambda = self.lambda();
        let area = self.grid.cell_area();
        let norms = alphas
            .iter()
            .map(|&al| {
                let n = if al >= 1.0 {
                    crate::functionals::lp_phi_norm(&state.u, al, &self.phi, &self.grid)
                } else {
                    crate::functionals::lp_phi_quasi_norm(&state.u, al, &self.phi, &self.grid)
                };
                n.map_err(SolverError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let grads: Vec<f64> = (0..state.u.len())
            .map(|c| {
                let g = self.cell_gradient(&state.u, c);
                g[0].hypot(g[1])
            })
            .collect();
        let gradient_energy = alphas
            .iter()
            .map(|&al| {
                let terms: Vec<f64> = (0..state.u.len())
                    .map(|c| {
                        let (u, g) = (state.u[c], grads[c]);
                        if u == 0.0 || g == 0.0 {
                            return 0.0;
                        }
                        ((al - lambda - 1.0) * u.ln() - 2.0 * lambda * u.ln_1p() + (2.0 - a) * g.ln()).exp() * self.w1[c]
                    })
                    .collect();
                pairwise_sum(&terms) * area
            })
            .collect();
        Ok(Diagnostics {
            t: state.t,
            mass: self.mass(&state.w),
            outflux: self.outflux(state)?,
            floor_injection: state.floor_injection,
            norms,
            gradient_energy,
        })
    }

    pub fn run(&self, u0: &[f64]) -> Result<Trajectory, SolverError> {
        let cfg = &self.config;
        let mut state = self.initial_state(u0)?;
        let mut traj = Trajectory {
            times: vec![0.0],
            snapshots: vec![state.u.clone()],
            diagnostics: vec![self.diagnostics(&state, &cfg.alphas)?],
            steps: Vec::new(),
            alphas: cfg.alphas.clone(),
            final_state: state.clone(),
        };
        let n_snap = (cfg.t_end / cfg.snapshot_interval).ceil().max(1.0) as usize;
        let mut next_snap = 1;
        let target = |k: usize| if k >= n_snap { cfg.t_end } else { k as f64 * cfg.snapshot_interval };
        let mut steps = 0usize;
        while next_snap <= n_snap {
            let goal = target(next_snap);
            let cap = goal - state.t;
            let probe = steps % cfg.probe_every == 0;
            let (next, record) = self.step(&state, cap, probe).map_err(|e| annotate(e, state.t))?;
            state = next;
            traj.steps.push(record);
            steps += 1;
            if steps > cfg.max_steps {
                return Err(SolverError::Precondition(format!("exceeded {} steps before t = {}", cfg.max_steps, cfg.t_end)));
            }
            // Land exactly on the snapshot time when the capped step reached it.
            if goal - state.t <= 1e-12 * cfg.t_end.max(1.0) {
                state.t = goal;
                traj.times.push(goal);
                traj.snapshots.push(state.u.clone());
                traj.diagnostics.push(self.diagnostics(&state, &cfg.alphas)?);
                next_snap += 1;
            }
        }
        traj.final_state = state;
        Ok(traj)
    }

    /// Residual of the discrete energy balance
    /// (λ/α) d/dt∫φu^α + (α−λ)∫X·∇u u^{α−λ−1} + ∫_Γ(ψ₁+ψ₂u^λ)u^{α−λ} − ∫f u^{α−λ}
    /// over one fixed step `dt`, relative to the largest term.
    pub fn energy_identity_residual(&self, state: &PseudoPressureState, alpha: f64, dt: f64) -> Result<f64, SolverError> {
        let lambda = self.lambda();
        let ff = self.fluxes(state)?;
        let fixed = Solver {
            grid: self.grid.clone(),
            medium: self.medium.clone(),
            config: SolverConfig { dt: DtPolicy::Fixed { dt }, ..self.config.clone() },
            phi: self.phi.clone(),
            w1: self.w1.clone(),
            face_media: self.face_media.clone(),
            boundary: Box::new(Frozen(ff.bv.clone())),
            source: ff.source.clone().map(|s| Box::new(FrozenCells(s)) as Box<dyn SourceTerm>),
        };
        let (next, _) = fixed.step(state, dt, false)?;
        let e = |u: &[f64]| crate::functionals::phi_moment(u, alpha, &self.phi, &self.grid);
        let rate = lambda / alpha * (e(&next.u) - e(&state.u)) / dt;
        let pw: Vec<f64> = state.u.iter().map(|&u| if u == 0.0 { 0.0 } else { u.powf(alpha - lambda) }).collect();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut b = 0;
        for (f, face) in self.grid.faces().iter().enumerate() {
            match face.kind {
                FaceKind::Interior { lo, hi } => interior.push(ff.flux[f] * face.length * (pw[hi] - pw[lo])),
                FaceKind::Boundary { cell, .. } => {
                    boundary.push((ff.bv.psi1[b] + ff.bv.psi2[b] * state.w[cell]) * pw[cell] * face.length);
                    b += 1;
                }
            }
        }
        let area = self.grid.cell_area();
        let src: Vec<f64> = match &ff.source {
            Some(s) => s.iter().zip(&pw).map(|(f, p)| f * p * area).collect(),
            None => Vec::new(),
        };
        let (ti, tb, ts) = (pairwise_sum(&interior), pairwise_sum(&boundary), pairwise_sum(&src));
        let scale = rate.abs().max(ti.abs()).max(tb.abs()).max(ts.abs()).max(f64::MIN_POSITIVE);
        Ok((rate + ti + tb - ts) / scale)
    }
}

struct Frozen(BoundaryValues);

impl BoundarySource for Frozen {
    fn values(&self, _t: f64) -> Result<BoundaryValues, SolverError> {
        Ok(self.0.clone())
    }
}

struct FrozenCells(Vec<f64>);

impl SourceTerm for FrozenCells {
    fn cells(&self, _t: f64) -> Result<Vec<f64>, SolverError> {
        Ok(self.0.clone())
    }
}

/// du/dw = u^{1−λ}/λ.
#[inline]
fn dudw(u: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        1.0
    } else {
        u.powf(1.0 - lambda) / lambda
    }
}

fn annotate(e: SolverError, t: f64) -> SolverError {
    match e {
        SolverError::Constitutive(source) => SolverError::Flux { face: usize::MAX, t, source },
        other => other,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SolverError + '_ {
    move |source| SolverError::Io { path: path.display().to_string(), source }
}

/// Writes `snap_<i>.csv` per snapshot and `diag.csv` into `dir`.
pub fn write_csv(traj: &Trajectory, grid: &Grid, dir: &Path) -> Result<(), SolverError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (i, (t, u)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        let mut s = String::from("t,cell,x,y,u\n");
        for (c, v) in u.iter().enumerate() {
            let [x, y] = grid.cell_center(c);
            writeln!(s, "{t:e},{c},{x:e},{y:e},{v:e}").expect("writing to a String");
        }
        let p = dir.join(format!("snap_{i}.csv"));
        std::fs::write(&p, s).map_err(io_err(&p))?;
    }
    let mut s = String::from("t,mass,outflux,floor_injection");
    for a in &traj.alphas {
        write!(s, ",norm_{a},grad_energy_{a}").expect("writing to a String");
    }
    s.push('\n');
    for d in &traj.diagnostics {
        write!(s, "{:e},{:e},{:e},{:e}", d.t, d.mass, d.outflux, d.floor_injection).expect("writing to a String");
        for (n, g) in d.norms.iter().zip(&d.gradient_energy) {
            write!(s, ",{n:e},{g:e}").expect("writing to a String");
        }
        s.push('\n');
    }
    let p = dir.join("diag.csv");
    std::fs::write(&p, s).map_err(io_err(&p))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{FluidEos, ForchheimerLaw, LocalLaw, RotationGravity};
    use crate::fields::BoundaryTag;

    fn medium(omega: f64, eos: FluidEos) -> Medium {
        let rot = RotationGravity::vertical(omega, 1.0).unwrap();
        Medium::new(ForchheimerLaw::two_term(1.0, 1.0), eos, &rot, FieldExpr::parse("0.5").unwrap(), 1.0, 1.0).unwrap()
    }

    fn forcing(p1: &str, p2: &str) -> BoundaryForcing {
        BoundaryForcing { psi1: FieldExpr::parse(p1).unwrap(), psi2: FieldExpr::parse(p2).unwrap() }
    }

    fn solver(n: usize, omega: f64, f: BoundaryForcing, cfg: SolverConfig) -> Solver {
        solver_on(n, omega, f, cfg, &BoundaryPartition::uniform(BoundaryTag::Gamma1, 1.0, 1.0))
    }

    fn solver_on(n: usize, omega: f64, f: BoundaryForcing, cfg: SolverConfig, part: &BoundaryPartition) -> Solver {
        let g = Grid::new(1.0, 1.0, n, n).unwrap();
        Solver::with_forcing(g, medium(omega, FluidEos::default()), cfg, f, part, None).unwrap()
    }

    /// Γ₁ on the bottom and top, Γ₂ on the left and right.
    fn mixed() -> BoundaryPartition {
        use crate::fields::{Segment, Side};
        let seg = |side, tag| Segment { side, from: 0.0, to: 1.0, tag };
        BoundaryPartition::new(
            vec![
                seg(Side::Bottom, BoundaryTag::Gamma1),
                seg(Side::Top, BoundaryTag::Gamma1),
                seg(Side::Left, BoundaryTag::Gamma2),
                seg(Side::Right, BoundaryTag::Gamma2),
            ],
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn bump(g: &Grid) -> Vec<f64> {
        materialize(&FieldExpr::parse("0.5 + 0.3*sin(3*x)*cos(2*y)").unwrap(), g, 0.0).unwrap()
    }

    #[test]
    fn flux_examples() {
        let local = medium(0.0, FluidEos::default()).at([0.5, 0.5]).unwrap();
        // Constant u, Z = 0: zero gradient, X(0) = 0.
        assert_eq!(interior_flux(&local, 1.3, [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], 1e-12).unwrap(), 0.0);
        assert_eq!(boundary_flux(1.0, 0.0, 7.0), -1.0);
        // u = x with g(s) = 1 + s: |X| = s solves (1+s)s = 1.
        let l = LocalMedium { law: LocalLaw::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap(), ..local };
        let f = interior_flux(&l, 0.5, [1.0, 0.0], [0.0, 0.0], [1.0, 0.0], 1e-14).unwrap();
        assert!((f - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_system_conserves_mass() {
        let mut cfg = SolverConfig::adaptive(1.0, 1.0);
        cfg.snapshot_interval = 1.0;
        let s = solver(12, 1.0, forcing("0", "0"), cfg);
        let mut st = s.initial_state(&bump(&s.grid)).unwrap();
        let m0 = s.mass(&st.w);
        for k in 0..1000 {
            st = s.step(&st, f64::INFINITY, k % 10 == 0).unwrap().0;
        }
        assert!(st.t > 0.0);
        assert!((s.mass(&st.w) - m0).abs() <= 1e-12 * m0, "{} vs {m0}", s.mass(&st.w));
        assert_eq!(st.floor_injection, 0.0);
    }

    #[test]
    fn constant_state_is_fixed_without_forcing() {
        // Without rotation Z is spatially constant, so the flux is uniform and cancels.
        let mut cfg = SolverConfig::adaptive(0.05, 1.0);
        cfg.dt = DtPolicy::Fixed { dt: 1e-3 };
        let s = solver(6, 0.0, forcing("0", "0"), cfg);
        let st = s.initial_state(&vec![0.0; 36]).unwrap();
        let (next, _) = s.step(&st, 1.0, true).unwrap();
        assert!(next.u.iter().all(|&v| v == 0.0));
        let traj = s.run(&vec![0.0; 36]).unwrap();
        assert!(traj.final_state.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn injection_matches_balance() {
        let mut cfg = SolverConfig::adaptive(0.2, 1.0);
        cfg.snapshot_interval = 0.05;
        let s = solver(10, 1.0, forcing("-0.5", "0"), cfg);
        let traj = s.run(&bump(&s.grid)).unwrap();
        let m0 = traj.diagnostics[0].mass;
        let m1 = traj.diagnostics.last().unwrap().mass;
        // d/dt∫φw = −∫_Γψ₁ = 0.5 · perimeter.
        assert!((m1 - m0 - 0.5 * 4.0 * 0.2).abs() < 1e-12, "{}", m1 - m0);
        let mb = mass_balance_residual(&traj);
        assert!(mb.max_normalized < 1e-12, "{}", mb.max_normalized);
        assert_eq!(traj.times.len(), 5);
        assert!((traj.final_state.t - 0.2).abs() < 1e-15);
    }

    #[test]
    fn flooring_is_recorded() {
        // Strong extraction drives cells below zero; the floor injects mass.
        let mut cfg = SolverConfig::adaptive(0.2, 1.0);
        cfg.dt = DtPolicy::Fixed { dt: 2e-3 };
        cfg.snapshot_interval = 0.2;
        let s = solver(6, 0.5, forcing("5", "0"), cfg);
        let traj = s.run(&vec![0.05; 36]).unwrap();
        assert!(traj.final_state.floor_injection > 0.0);
        assert!(traj.final_state.u.iter().all(|&v| v >= 0.0));
        let mb = mass_balance_residual(&traj);
        assert!(mb.max_normalized < 1e-12);
        let worst_raw = mb.raw.iter().zip(&traj.steps).map(|(r, s)| (r - s.floor_injection / s.dt).abs()).fold(0.0, f64::max);
        assert!(worst_raw < 1e-9);
        assert!(mb.raw.iter().any(|r| r.abs() > 1e-6));
    }

    #[test]
    fn gas_run_respects_floor() {
        let eos = FluidEos::Isentropic { c: 1.0, gamma: 1.4 };
        let mut cfg = SolverConfig::adaptive(0.05, eos.lambda());
        cfg.snapshot_interval = 0.05;
        let g = Grid::new(1.0, 1.0, 8, 8).unwrap();
        let part = BoundaryPartition::uniform(BoundaryTag::Gamma2, 1.0, 1.0);
        let s = Solver::with_forcing(g, medium(1.0, eos), cfg, forcing("0", "0.2"), &part, None).unwrap();
        let traj = s.run(&bump(&s.grid)).unwrap();
        let st = &traj.final_state;
        let lam = eos.lambda();
        for (u, w) in st.u.iter().zip(&st.w) {
            assert!(*u >= 1e-10);
            assert!((u.powf(lam) - w).abs() <= 1e-14 * w.max(1e-300) * 4.0);
        }
    }

    #[test]
    fn mirror_symmetry_is_bit_exact() {
        let mut cfg = SolverConfig::adaptive(0.02, 1.0);
        cfg.snapshot_interval = 0.02;
        let s = solver_on(10, 0.0, forcing("-0.1", "0.3"), cfg, &mixed());
        let n = 10;
        let base = bump(&s.grid);
        let u0: Vec<f64> = (0..n * n).map(|c| base[(c / n) * n + (c % n).min(n - 1 - c % n)]).collect();
        let traj = s.run(&u0).unwrap();
        let u = &traj.final_state.u;
        for j in 0..n {
            for i in 0..n {
                assert_eq!(u[j * n + i].to_bits(), u[j * n + n - 1 - i].to_bits(), "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn energy_identity_converges_at_first_order() {
        let cfg = SolverConfig::adaptive(1.0, 1.0);
        let s = solver_on(10, 1.0, forcing("-0.2 + 0.1*x", "0.4"), cfg, &mixed());
        let st = s.initial_state(&bump(&s.grid)).unwrap();
        let r1 = s.energy_identity_residual(&st, 4.0, 1e-4).unwrap().abs();
        let r2 = s.energy_identity_residual(&st, 4.0, 5e-5).unwrap().abs();
        let r3 = s.energy_identity_residual(&st, 4.0, 2.5e-5).unwrap().abs();
        assert!(r1 < 1e-2, "{r1}");
        let (o1, o2) = ((r1 / r2).log2(), (r2 / r3).log2());
        assert!(o1 > 0.9 && o2 > 0.9, "orders {o1} {o2}");
    }

    #[test]
    fn csv_files_are_written() {
        let mut cfg = SolverConfig::adaptive(0.01, 1.0);
        cfg.snapshot_interval = 0.005;
        cfg.alphas = vec![2.0, 4.0];
        let s = solver(4, 1.0, forcing("0", "0"), cfg);
        let traj = s.run(&bump(&s.grid)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_csv(&traj, &s.grid, dir.path()).unwrap();
        let snap = std::fs::read_to_string(dir.path().join("snap_2.csv")).unwrap();
        assert_eq!(snap.lines().count(), 17);
        assert!(snap.starts_with("t,cell,x,y,u\n"));
        let diag = std::fs::read_to_string(dir.path().join("diag.csv")).unwrap();
        assert!(diag.lines().next().unwrap().ends_with("norm_4,grad_energy_4"));
        assert_eq!(diag.lines().count(), 4);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SolverConfig::adaptive(1.0, 1.0);
        cfg.dt = DtPolicy::Adaptive { safety: 1.5 };
        assert!(cfg.validate().is_err());
        let mut cfg = SolverConfig::adaptive(1.0, 1.0);
        cfg.eps_reg = -1.0;
        assert!(cfg.validate().is_err());
        let s = solver(4, 1.0, forcing("0", "0"), SolverConfig::adaptive(1.0, 1.0));
        assert!(s.initial_state(&vec![-1.0; 16]).is_err());
    }
}
