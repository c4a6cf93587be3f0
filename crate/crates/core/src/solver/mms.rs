//! Manufactured-solution verification.
//!
//! For a smooth positive u*, the source f = φ(u*^λ)_t − ∇·X(x,u*,∇u*+u*^{2λ}Z)
//! and the boundary data ψ₁ = −X(·)·ν, ψ₂ = 0 make u* an exact solution. Time
//! and space derivatives of u* are symbolic; the divergence of X is a
//! fourth-order central difference of the exact flux field.

use serde::Serialize;

use super::{BoundarySource, DtPolicy, SolverConfig, SolverError, SourceTerm};
use crate::constitutive::{LocalMedium, Medium, DEFAULT_TOL};
use crate::fields::{EvalContext, FaceKind, FieldExpr, Grid, Var};
use crate::functionals::{pairwise_sum, BoundaryValues};

#[derive(Debug, Clone, PartialEq)]
pub struct MmsProblem {
    pub medium: Medium,
    pub u_star: FieldExpr,
    pub t_end: f64,
    pub safety: f64,
}

impl MmsProblem {
    /// 2 + sin(πx)sin(πy)e^{−t} on the medium's rectangle.
    pub fn standard(medium: Medium, t_end: f64) -> Self {
        let u_star = FieldExpr::parse("2 + sin(pi*x/lx)*sin(pi*y/ly)*exp(-t)").expect("grammatical");
        MmsProblem { medium, u_star, t_end, safety: 0.5 }
    }
}

/// The exact field, its derivatives and the flux it induces.
struct Exact {
    medium: Medium,
    u: FieldExpr,
    ut: FieldExpr,
    ux: FieldExpr,
    uy: FieldExpr,
}

impl Exact {
    fn new(medium: &Medium, u: &FieldExpr) -> Self {
        Exact {
            medium: medium.clone(),
            ut: u.derivative(Var::T),
            ux: u.derivative(Var::X),
            uy: u.derivative(Var::Y),
            u: u.clone(),
        }
    }

    fn ctx(&self, p: [f64; 2], t: f64) -> EvalContext {
        EvalContext::new(p[0], p[1], t, self.medium.lx, self.medium.ly)
    }

    fn eval(&self, e: &FieldExpr, p: [f64; 2], t: f64) -> Result<f64, SolverError> {
        e.eval(&self.ctx(p, t))
            .map_err(|source| SolverError::Precondition(format!("evaluating `{}`: {source}", e.source())))
    }

    /// X(p, u*, ∇u* + u*^{2λ}Z) with precomputed pointwise medium data.
    fn flux(&self, local: &LocalMedium, p: [f64; 2], t: f64, e0: [f64; 2]) -> Result<[f64; 2], SolverError> {
        let u = self.eval(&self.u, p, t)?;
        let g = [self.eval(&self.ux, p, t)?, self.eval(&self.uy, p, t)?];
        let s = u.powf(2.0 * local.lambda);
        let z = self.medium.rotation.z_with_e0(p, e0);
        Ok(local.x(u, [g[0] + s * z[0], g[1] + s * z[1]], DEFAULT_TOL)?)
    }
}

/// Offsets of the fourth-order stencil.
const STENCIL: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];

struct MmsSource {
    exact: Exact,
    grid: Grid,
    phi: Vec<f64>,
    delta: f64,
    /// Per cell: media at the x-stencil points then the y-stencil points.
    stencil: Vec<[LocalMedium; 8]>,
}

impl MmsSource {
    fn new(exact: Exact, grid: &Grid) -> Result<Self, SolverError> {
        let delta = 1e-3f64.min(grid.hx.min(grid.hy) / 8.0);
        let mut phi = Vec::with_capacity(grid.cell_count());
        let mut stencil = Vec::with_capacity(grid.cell_count());
        for c in 0..grid.cell_count() {
            let x = grid.cell_center(c);
            phi.push(exact.medium.at(x)?.phi);
            let mut pts = Vec::with_capacity(8);
            for axis in 0..2 {
                for k in STENCIL {
                    let mut p = x;
                    p[axis] += k * delta;
                    pts.push(exact.medium.at(p)?);
                }
            }
            stencil.push(pts.try_into().expect("eight stencil points"));
        }
        Ok(MmsSource { exact, grid: grid.clone(), phi, delta, stencil })
    }

    fn at_cell(&self, c: usize, t: f64, e0: [f64; 2]) -> Result<f64, SolverError> {
        let x = self.grid.cell_center(c);
        let ex = &self.exact;
        let lambda = ex.medium.lambda();
        let u = ex.eval(&ex.u, x, t)?;
        let ut = ex.eval(&ex.ut, x, t)?;
        let dw = if lambda == 1.0 { ut } else { lambda * u.powf(lambda - 1.0) * ut };
        let mut div = 0.0;
        for axis in 0..2 {
            let mut v = [0.0; 4];
            for (k, off) in STENCIL.iter().enumerate() {
                let mut p = x;
                p[axis] += off * self.delta;
                v[k] = ex.flux(&self.stencil[c][4 * axis + k], p, t, e0)?[axis];
            }
            // Differences first, so a uniform flux gives exactly zero.
            div += (8.0 * (v[2] - v[1]) - (v[3] - v[0])) / (12.0 * self.delta);
        }
        Ok(self.phi[c] * dw - div)
    }
}

impl SourceTerm for MmsSource {
    fn cells(&self, t: f64) -> Result<Vec<f64>, SolverError> {
        let e0 = self.exact.medium.rotation.e0_at(t)?;
        (0..self.grid.cell_count()).map(|c| self.at_cell(c, t, e0)).collect()
    }
}

struct MmsBoundary {
    exact: Exact,
    /// (centre, outward normal, medium) per boundary face.
    faces: Vec<([f64; 2], [f64; 2], LocalMedium)>,
}

impl MmsBoundary {
    fn new(exact: Exact, grid: &Grid) -> Result<Self, SolverError> {
        let faces = grid
            .boundary_faces()
            .iter()
            .map(|&f| {
                let face = grid.face(f);
                Ok((face.center, face.normal, exact.medium.at(face.center)?))
            })
            .collect::<Result<Vec<_>, SolverError>>()?;
        Ok(MmsBoundary { exact, faces })
    }
}

impl BoundarySource for MmsBoundary {
    fn values(&self, t: f64) -> Result<BoundaryValues, SolverError> {
        let e0 = self.exact.medium.rotation.e0_at(t)?;
        let psi1 = self
            .faces
            .iter()
            .map(|(p, n, local)| {
                let x = self.exact.flux(local, *p, t, e0)?;
                Ok(-(x[0] * n[0] + x[1] * n[1]))
            })
            .collect::<Result<Vec<_>, SolverError>>()?;
        let psi2 = vec![0.0; psi1.len()];
        Ok(BoundaryValues { psi1, psi2 })
    }
}

fn check_positive(exact: &Exact, grid: &Grid, t_end: f64) -> Result<(), SolverError> {
    for k in 0..=8 {
        let t = t_end * k as f64 / 8.0;
        let cells = (0..grid.cell_count()).map(|c| grid.cell_center(c));
        let faces = grid.faces().iter().filter(|f| matches!(f.kind, FaceKind::Boundary { .. })).map(|f| f.center);
        for p in cells.chain(faces) {
            let u = exact.eval(&exact.u, p, t)?;
            if !(u > 0.0) {
                return Err(SolverError::Precondition(format!(
                    "manufactured solution must be positive, got {u} at ({}, {}), t = {t}",
                    p[0], p[1]
                )));
            }
        }
    }
    Ok(())
}

/// A solver whose source and boundary data reproduce u*.
pub fn mms_solver(problem: &MmsProblem, n: usize, dt: DtPolicy) -> Result<super::Solver, SolverError> {
    let m = &problem.medium;
    let grid = Grid::new(m.lx, m.ly, n, n).map_err(|e| SolverError::Precondition(e.to_string()))?;
    let exact = Exact::new(m, &problem.u_star);
    check_positive(&exact, &grid, problem.t_end)?;
    let config = SolverConfig {
        dt,
        eps_reg: 0.0,
        t_end: problem.t_end,
        snapshot_interval: problem.t_end,
        alphas: vec![2.0],
        tol: DEFAULT_TOL,
        probe_every: 1,
        max_steps: 10_000_000,
    };
    let source = MmsSource::new(Exact::new(m, &problem.u_star), &grid)?;
    let boundary = MmsBoundary::new(exact, &grid)?;
    super::Solver::new(grid, m.clone(), config, Box::new(boundary), Some(Box::new(source)))
}

fn exact_cells(problem: &MmsProblem, grid: &Grid, t: f64) -> Result<Vec<f64>, SolverError> {
    Ok(crate::fields::materialize(&problem.u_star, grid, t)?)
}

/// √(Σφ_c(a_c − b_c)²A).
pub fn l2_phi_distance(a: &[f64], b: &[f64], phi: &[f64], grid: &Grid) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).zip(phi).map(|((x, y), p)| p * (x - y) * (x - y)).collect();
    (pairwise_sum(&terms) * grid.cell_area()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsRow {
    pub n: usize,
    pub h: f64,
    pub steps: usize,
    pub l2_phi_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsReport {
    pub rows: Vec<MmsRow>,
    /// log₂(e_k/e_{k+1}) between consecutive grids.
    pub orders: Vec<f64>,
}

impl MmsReport {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// L²_φ errors at t_end on n×n grids under adaptive stepping, dt ∝ h².
pub fn mms_study(problem: &MmsProblem, grids: &[usize]) -> Result<MmsReport, SolverError> {
    let mut rows = Vec::with_capacity(grids.len());
    for &n in grids {
        let s = mms_solver(problem, n, DtPolicy::Adaptive { safety: problem.safety })?;
        let u0 = exact_cells(problem, &s.grid, 0.0)?;
        let traj = s.run(&u0)?;
        let exact = exact_cells(problem, &s.grid, problem.t_end)?;
        rows.push(MmsRow {
            n,
            h: s.grid.hx.max(s.grid.hy),
            steps: traj.steps.len(),
            l2_phi_error: l2_phi_distance(&traj.final_state.u, &exact, s.phi(), &s.grid),
        });
        log::info!("mms n = {n}: error {:e} after {} steps", rows.last().unwrap().l2_phi_error, traj.steps.len());
    }
    let orders = rows
        .windows(2)
        .map(|w| (w[0].l2_phi_error / w[1].l2_phi_error).ln() / (w[0].h / w[1].h).ln())
        .collect();
    Ok(MmsReport { rows, orders })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalReport {
    pub n: usize,
    pub dts: Vec<f64>,
    /// L²_φ distance between solutions at consecutive dt.
    pub differences: Vec<f64>,
    pub orders: Vec<f64>,
}

/// Fixed-dt runs at dt₀, dt₀/2, …; orders from the Richardson differences.
pub fn temporal_study(problem: &MmsProblem, n: usize, dt0: f64, halvings: usize) -> Result<TemporalReport, SolverError> {
    let mut sols = Vec::with_capacity(halvings + 1);
    let mut dts = Vec::with_capacity(halvings + 1);
    let mut phi = Vec::new();
    let mut grid = None;
    for k in 0..=halvings {
        let dt = dt0 / (1u64 << k) as f64;
        let s = mms_solver(problem, n, DtPolicy::Fixed { dt })?;
        let u0 = exact_cells(problem, &s.grid, 0.0)?;
        sols.push(s.run(&u0)?.final_state.u);
        dts.push(dt);
        phi = s.phi().to_vec();
        grid = Some(s.grid.clone());
    }
    let grid = grid.expect("at least one run");
    let differences: Vec<f64> = sols.windows(2).map(|w| l2_phi_distance(&w[0], &w[1], &phi, &grid)).collect();
    let orders = differences.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    Ok(TemporalReport { n, dts, differences, orders })
}
