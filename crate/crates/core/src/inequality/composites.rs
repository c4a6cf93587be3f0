//! Fully assembled weighted Sobolev, trace and parabolic Sobolev inequalities
//! evaluated on corpus members, all in the log domain.
//!
//! Each right-hand side is a sum of terms `coef · c^e` where c is the shared
//! value of the two Sobolev-interpolation constants c₃ = c₄; this form lets
//! the calibration invert for the smallest admissible c directly.

use serde::Serialize;

use super::corpus::{FunctionCorpus, Member, Sampled};
use crate::estimates::ExponentBundle;
use crate::fields::{FieldError, Grid};
use crate::functionals::{log_add_exp, log_sum_exp};

/// ε values every ε-dependent inequality is checked at.
pub const EPSILONS: [f64; 3] = [0.1, 1.0, 10.0];

/// Simpson intervals on the unit time window of the space-time members.
pub const TIME_STEPS: usize = 32;

/// `e·l` with the convention 0·(−∞) = 0.
#[inline]
fn mul_ln(e: f64, l: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * l
    }
}

/// One right-hand-side term: ln coefficient and the power of c₃ = c₄.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsTerm {
    pub ln_coef: f64,
    pub c_power: f64,
}

impl RhsTerm {
    fn fixed(ln_coef: f64) -> Self {
        RhsTerm { ln_coef, c_power: 0.0 }
    }
}

/// ln Σ coef·c^e.
pub fn ln_rhs(terms: &[RhsTerm], c: f64) -> f64 {
    let lc = c.ln();
    let ls: Vec<f64> = terms
        .iter()
        .map(|t| if t.c_power == 0.0 { t.ln_coef } else { t.ln_coef + t.c_power * lc })
        .collect();
    log_sum_exp(&ls)
}

/// Smallest c ≥ 0 with ln_rhs(c) ≥ ln_lhs; +∞ when no c works.
pub fn min_constant(terms: &[RhsTerm], ln_lhs: f64) -> f64 {
    if ln_rhs(terms, 0.0) >= ln_lhs {
        return 0.0;
    }
    if !terms.iter().any(|t| t.c_power > 0.0 && t.ln_coef.is_finite()) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-50.0f64, 50.0f64);
    while ln_rhs(terms, lo.exp()) >= ln_lhs {
        lo -= 50.0;
    }
    while ln_rhs(terms, hi.exp()) < ln_lhs {
        hi += 50.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_rhs(terms, mid.exp()) >= ln_lhs {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    hi.exp()
}

/// Which gradient weight enters: W_* itself or (1+|u|)^{−β}W_*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightMode {
    Plain,
    Damped,
}

/// Logs of the pointwise fields of one sampled member.
pub struct MemberLogs<'a> {
    pub grid: &'a Grid,
    pub ln_u: Vec<f64>,
    pub ln_grad: Vec<f64>,
    pub ln_phi: Vec<f64>,
    pub ln_w: Vec<f64>,
    pub ln_omega: Vec<f64>,
    /// ln(1+|u|).
    pub ln1p_u: Vec<f64>,
    pub abs_u: Vec<f64>,
    pub ln_u_boundary: Vec<f64>,
    pub ln_face_len: Vec<f64>,
    ln_area: f64,
}

impl<'a> MemberLogs<'a> {
    pub fn new(s: &Sampled, grid: &'a Grid) -> Self {
        let ln = |v: &[f64]| v.iter().map(|x| x.abs().ln()).collect::<Vec<_>>();
        MemberLogs {
            grid,
            ln_u: ln(&s.u),
            ln_grad: ln(&s.grad),
            ln_phi: ln(&s.phi),
            ln_w: ln(&s.w),
            ln_omega: ln(&s.omega),
            ln1p_u: s.u.iter().map(|x| x.abs().ln_1p()).collect(),
            abs_u: s.u.iter().map(|x| x.abs()).collect(),
            ln_u_boundary: ln(&s.u_boundary),
            ln_face_len: grid.boundary_faces().iter().map(|&f| grid.face(f).length.ln()).collect(),
            ln_area: grid.cell_area().ln(),
        }
    }

    /// ln ∫_U exp(g(c)) by the midpoint rule.
    pub fn lnint(&self, g: impl Fn(usize) -> f64) -> f64 {
        let ls: Vec<f64> = (0..self.ln_u.len()).map(g).collect();
        log_sum_exp(&ls) + self.ln_area
    }

    /// ln ∫_Γ exp(g(b)) over boundary faces.
    pub fn lnint_boundary(&self, g: impl Fn(usize) -> f64) -> f64 {
        let ls: Vec<f64> = (0..self.ln_u_boundary.len()).map(|b| g(b) + self.ln_face_len[b]).collect();
        log_sum_exp(&ls)
    }

    fn ln_weight(&self, mode: WeightMode, beta: f64, c: usize) -> f64 {
        match mode {
            WeightMode::Plain => self.ln_w[c],
            WeightMode::Damped => self.ln_w[c] - beta * self.ln1p_u[c],
        }
    }
}

/// Exponents of the lemmas at the structural triple (p, s, β) = (2−a, λ+1, 2λ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaExponents {
    pub alpha: f64,
    pub p: f64,
    pub s: f64,
    pub beta: f64,
    pub r: f64,
    pub r1: f64,
    pub r_star: f64,
    pub m: f64,
    pub theta: f64,
    pub mu1: f64,
    pub r_tilde: f64,
    pub theta_tilde: f64,
    pub mu1_tilde: f64,
    pub beta_star: f64,
    pub mu_hat: [f64; 5],
    pub beta_hat: [f64; 3],
    pub kappa: f64,
    pub theta0: f64,
    pub theta0_hat: f64,
}

impl LemmaExponents {
    pub fn from_bundle(b: &ExponentBundle) -> Self {
        LemmaExponents {
            alpha: b.alpha,
            p: b.p_struct,
            s: b.s_struct,
            beta: b.beta_struct,
            r: b.r,
            r1: b.r1,
            r_star: b.r_star,
            m: b.m,
            theta: b.theta,
            mu1: b.mu1,
            r_tilde: b.r_tilde,
            theta_tilde: b.theta_tilde,
            mu1_tilde: b.mu1_tilde,
            beta_star: b.beta_star,
            mu_hat: b.mu_hat,
            beta_hat: b.beta_hat,
            kappa: b.kappa,
            theta0: b.theta0,
            theta0_hat: b.theta0_hat,
        }
    }

    fn base_conditions(&self) -> Result<(), String> {
        let (a, p, s) = (self.alpha, self.p, self.s);
        if !(a >= s) {
            return Err(format!("α = {a} < s = {s}"));
        }
        if !(a > (p - s) / (p - 1.0)) {
            return Err(format!("α = {a} ≤ (p−s)/(p−1)"));
        }
        Ok(())
    }

    /// Preconditions of the weighted Sobolev inequality with the damped weight.
    pub fn sobolev_conditions(&self) -> Result<(), String> {
        self.base_conditions()?;
        let bound = 2.0 * (self.r + self.s - self.p) / self.r_star;
        if !(self.alpha > bound) {
            return Err(format!("α = {} ≤ 2(r+s−p)/r_* = {bound}", self.alpha));
        }
        let bound = self.r1 * self.beta / (1.0 - self.r1);
        if !(self.alpha > bound) {
            return Err(format!("α = {} ≤ r₁β/(1−r₁) = {bound}", self.alpha));
        }
        Ok(())
    }

    /// Preconditions of the weighted trace inequality (r̃ ≥ 0 case).
    pub fn trace_conditions(&self) -> Result<(), String> {
        self.base_conditions()?;
        if !(self.r_tilde >= 0.0) {
            return Err(format!("r̃ = {} < 0 is not covered", self.r_tilde));
        }
        let bound = 2.0 * (self.r_tilde + self.s - self.p) / self.r_star;
        if !(self.alpha > bound) {
            return Err(format!("α = {} ≤ 2(r̃+s−p)/r_* = {bound}", self.alpha));
        }
        if !(self.alpha > self.beta_star) {
            return Err(format!("α = {} ≤ β_* = {}", self.alpha, self.beta_star));
        }
        Ok(())
    }

    /// Preconditions of the parabolic Sobolev inequality.
    pub fn parabolic_conditions(&self) -> Result<(), String> {
        self.base_conditions()?;
        let bound = 2.0 * (self.s - self.p) / self.r_star;
        if !(self.alpha > bound) {
            return Err(format!("α = {} ≤ 2(s−p)/r_* = {bound}", self.alpha));
        }
        let bound = self.beta / (1.0 - self.r1);
        if !(self.alpha >= bound) {
            return Err(format!("α = {} < β/(1−r₁) = {bound}", self.alpha));
        }
        Ok(())
    }

    /// ln D₁(m, η) without c: θp·m·ln2, and its c power.
    fn d1(&self, eta: f64) -> RhsTerm {
        RhsTerm { ln_coef: eta * self.p * self.m * std::f64::consts::LN_2, c_power: eta * self.p }
    }

    /// ln D₂(m, η) without c.
    fn d2(&self, eta: f64) -> RhsTerm {
        let e = eta * self.p / (1.0 - eta);
        RhsTerm { ln_coef: e * (self.m.ln() + self.m * std::f64::consts::LN_2), c_power: e }
    }
}

/// Weight functionals and moments of one member (all natural logs).
pub struct Functionals {
    pub ln_j: f64,
    pub ln_e1: f64,
    pub ln_g1: f64,
    pub ln_g3: f64,
    pub ln_g4: f64,
    pub ln_g2_tilde: f64,
    pub ln_g5_tilde: f64,
    pub ln_i_damped: f64,
}

impl Functionals {
    pub fn new(ml: &MemberLogs, e: &LemmaExponents) -> Self {
        let (a, p, s, r1, beta) = (e.alpha, e.p, e.s, e.r1, e.beta);
        let g1_den = a * (p - 1.0) + s - p;
        let g3_e = 1.0 / ((1.0 - e.theta) * (1.0 + e.mu1 / a));
        let t2 = a * (1.0 - r1) - r1 * beta;
        let bs = e.beta_star;
        Functionals {
            ln_j: ml.lnint(|c| mul_ln(a, ml.ln_u[c]) + ml.ln_phi[c]),
            ln_e1: log_add_exp(0.0, ml.lnint(|c| ml.ln_phi[c])),
            ln_g1: g1_den / a * ml.lnint(|c| -(a - s + p) / g1_den * ml.ln_phi[c]),
            ln_g3: (1.0 + e.mu1 / a) * ml.lnint(|c| -ml.ln_phi[c] + g3_e * ml.ln_omega[c]),
            ln_g4: (1.0 + e.mu1 / a) * ml.lnint(|c| -ml.ln_phi[c]),
            ln_g2_tilde: t2 / (a * r1)
                * ml.lnint(|c| -(r1 * beta / t2) * ml.ln_phi[c] - (r1 * a / t2) * ml.ln_w[c]),
            ln_g5_tilde: (a - bs) / a
                * (1.0 + e.mu1_tilde / a)
                * ml.lnint(|c| -((a + bs) / (a - bs)) * ml.ln_phi[c] - (bs / beta) * (a / (a - bs)) * ml.ln_w[c]),
            ln_i_damped: gradient_energy(ml, e, WeightMode::Damped),
        }
    }

    /// ln min{J^{1+lo/α} + J^{1+hi/α}, (1+J)^{1+hi/α}}.
    fn ln_min_form(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        let (el, eh) = (1.0 + lo / alpha, 1.0 + hi / alpha);
        log_add_exp(el * self.ln_j, eh * self.ln_j).min(eh * log_add_exp(0.0, self.ln_j))
    }
}

/// ln ∫|u|^{α−s}|∇u|^p W.
fn gradient_energy(ml: &MemberLogs, e: &LemmaExponents, mode: WeightMode) -> f64 {
    ml.lnint(|c| mul_ln(e.alpha - e.s, ml.ln_u[c]) + mul_ln(e.p, ml.ln_grad[c]) + ml.ln_weight(mode, e.beta, c))
}

/// ln G₂ for the chosen weight.
fn ln_g2(ml: &MemberLogs, e: &LemmaExponents, mode: WeightMode) -> f64 {
    let r1 = e.r1;
    (1.0 - r1) / r1 * ml.lnint(|c| -(r1 / (1.0 - r1)) * ml.ln_weight(mode, e.beta, c))
}

/// ln G₅ for the chosen weight.
fn ln_g5(ml: &MemberLogs, e: &LemmaExponents, mode: WeightMode) -> f64 {
    let k = 1.0 + e.mu1_tilde / e.alpha;
    let ew = 1.0 / ((e.p - 1.0) * (1.0 - e.theta_tilde) * k);
    k * ml.lnint(|c| -ml.ln_phi[c] - ew * ml.ln_weight(mode, e.beta, c))
}

/// ln ∫|u|^{α+r}ω.
pub fn ln_volume_lhs(ml: &MemberLogs, e: &LemmaExponents) -> f64 {
    ml.lnint(|c| mul_ln(e.alpha + e.r, ml.ln_u[c]) + ml.ln_omega[c])
}

/// ln ∫_Γ|u|^{α+r}.
pub fn ln_trace_lhs(ml: &MemberLogs, e: &LemmaExponents) -> f64 {
    ml.lnint_boundary(|b| mul_ln(e.alpha + e.r, ml.ln_u_boundary[b]))
}

/// The base weighted Sobolev inequality (calibration target for c₃ = c₄).
pub fn base_sobolev_terms(ml: &MemberLogs, f: &Functionals, e: &LemmaExponents, mode: WeightMode, eps: f64) -> Vec<RhsTerm> {
    let (a, th) = (e.alpha, e.theta);
    let le = eps.ln();
    let ln_phi1 = th * f.ln_g1 + (1.0 - th) * f.ln_g3;
    let ln_phi2 = th / (1.0 - th) * ln_g2(ml, e, mode) + f.ln_g3;
    let (d1, d2) = (e.d1(th), e.d2(th));
    vec![
        RhsTerm::fixed(le + gradient_energy(ml, e, mode)),
        RhsTerm { ln_coef: d1.ln_coef + ln_phi1 + (1.0 + e.r / a) * f.ln_j, c_power: d1.c_power },
        RhsTerm {
            ln_coef: -th / (1.0 - th) * le + d2.ln_coef + ln_phi2 + (1.0 + e.mu1 / a) * f.ln_j,
            c_power: d2.c_power,
        },
    ]
}

/// The weighted Sobolev inequality with the damped weight (1+|u|)^{−β}W_*.
pub fn damped_sobolev_terms(f: &Functionals, e: &LemmaExponents, eps: f64) -> Vec<RhsTerm> {
    let (a, th, beta) = (e.alpha, e.theta, e.beta);
    let le = eps.ln();
    let ln_phi1 = th * f.ln_g1 + (1.0 - th) * f.ln_g3;
    let ln_phi2_tilde = th / (1.0 - th) * f.ln_g2_tilde + f.ln_g3 + beta * th / (a * (1.0 - th)) * f.ln_e1;
    let x = f.ln_min_form(a, e.mu_hat[1], e.mu_hat[2]);
    let (d1, d2) = (e.d1(th), e.d2(th));
    vec![
        RhsTerm::fixed(le + f.ln_i_damped),
        RhsTerm { ln_coef: d1.ln_coef + ln_phi1 + x, c_power: d1.c_power },
        RhsTerm {
            ln_coef: (1.0 + e.beta_hat[0]) * std::f64::consts::LN_2 - th / (1.0 - th) * le
                + d2.ln_coef
                + ln_phi2_tilde
                + x,
            c_power: d2.c_power,
        },
    ]
}

/// Trace constants entering the trace inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceConstants {
    pub c5: f64,
    pub c6: f64,
}

/// ln z₁..z₅ without the c powers, and those powers.
fn z_terms(e: &LemmaExponents, tc: TraceConstants) -> [RhsTerm; 4] {
    let (th, tt, p) = (e.theta, e.theta_tilde, e.p);
    let ln_z3 = p / (p - 1.0) * (tc.c6 * (e.alpha + e.r)).ln();
    let (d1, d2, d1t, d2t) = (e.d1(th), e.d2(th), e.d1(tt), e.d2(tt));
    [
        RhsTerm { ln_coef: tc.c5.ln() + d1.ln_coef, c_power: d1.c_power },
        RhsTerm { ln_coef: tc.c5.ln() / (1.0 - th) + d2.ln_coef, c_power: d2.c_power },
        RhsTerm { ln_coef: ln_z3 + d1t.ln_coef, c_power: d1t.c_power },
        RhsTerm { ln_coef: ln_z3 / (1.0 - tt) + d2t.ln_coef, c_power: d2t.c_power },
    ]
}

/// ε exponents of the four non-gradient trace terms.
fn trace_eps_powers(e: &LemmaExponents) -> [f64; 4] {
    let (th, tt, p) = (e.theta, e.theta_tilde, e.p);
    [0.0, -th / (1.0 - th), -1.0 / (p - 1.0), -(1.0 / (p - 1.0) + p / (p - 1.0) * tt / (1.0 - tt))]
}

/// The base weighted trace inequality (calibration target for c₃ = c₄).
pub fn base_trace_terms(
    ml: &MemberLogs,
    f: &Functionals,
    e: &LemmaExponents,
    tc: TraceConstants,
    mode: WeightMode,
    eps: f64,
) -> Vec<RhsTerm> {
    let (a, th, tt) = (e.alpha, e.theta, e.theta_tilde);
    let le = eps.ln();
    let g2 = ln_g2(ml, e, mode);
    let g5 = ln_g5(ml, e, mode);
    let phis = [
        th * f.ln_g1 + (1.0 - th) * f.ln_g4,
        th / (1.0 - th) * g2 + f.ln_g4,
        tt * f.ln_g1 + (1.0 - tt) * g5,
        tt / (1.0 - tt) * g2 + g5,
    ];
    let powers = [1.0 + e.r / a, 1.0 + e.mu1 / a, 1.0 + e.r_tilde / a, 1.0 + e.mu1_tilde / a];
    let z = z_terms(e, tc);
    let ep = trace_eps_powers(e);
    let mut terms = vec![RhsTerm::fixed(3f64.ln() + le + gradient_energy(ml, e, mode))];
    for i in 0..4 {
        terms.push(RhsTerm { ln_coef: ep[i] * le + z[i].ln_coef + phis[i] + powers[i] * f.ln_j, c_power: z[i].c_power });
    }
    terms
}

/// The weighted trace inequality with the damped weight.
pub fn damped_trace_terms(f: &Functionals, e: &LemmaExponents, tc: TraceConstants, eps: f64) -> Vec<RhsTerm> {
    let (a, th, tt, beta, p) = (e.alpha, e.theta, e.theta_tilde, e.beta, e.p);
    let [bh1, bh2, bh3] = e.beta_hat;
    let le = eps.ln();
    let ln2 = std::f64::consts::LN_2;
    let phis = [
        th * f.ln_g1 + (1.0 - th) * f.ln_g4,
        beta * th / (a * (1.0 - th)) * f.ln_e1 + th / (1.0 - th) * f.ln_g2_tilde + f.ln_g4,
        beta / (a * (p - 1.0)) * f.ln_e1 + tt * f.ln_g1 + (1.0 - tt) * f.ln_g5_tilde,
        bh3 / a * f.ln_e1 + tt / (1.0 - tt) * f.ln_g2_tilde + f.ln_g5_tilde,
    ];
    let doubling = [0.0, (1.0 + bh1) * ln2, (1.0 + bh2) * ln2, (1.0 + bh3 * (1.0 + 1.0 / a)) * ln2];
    let x = f.ln_min_form(a, e.mu_hat[3], e.mu_hat[4]);
    let z = z_terms(e, tc);
    let ep = trace_eps_powers(e);
    let mut terms = vec![RhsTerm::fixed(3f64.ln() + le + f.ln_i_damped)];
    for i in 0..4 {
        terms.push(RhsTerm { ln_coef: ep[i] * le + doubling[i] + z[i].ln_coef + phis[i] + x, c_power: z[i].c_power });
    }
    terms
}

/// Simpson weights on [0, 1] with [`TIME_STEPS`] intervals.
fn simpson_nodes() -> Vec<(f64, f64)> {
    let n = TIME_STEPS;
    let h = 1.0 / n as f64;
    (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            (k as f64 * h, w * h / 3.0)
        })
        .collect()
}

/// ln of both sides of the parabolic Sobolev inequality with the damped
/// weight, for u(x)g(t) on U × (0, 1).
pub fn parabolic_sides(ml: &MemberLogs, m: &Member, e: &LemmaExponents, c7: f64) -> (f64, f64) {
    let (a, s, p, beta, r1, rs) = (e.alpha, e.s, e.p, e.beta, e.r1, e.r_star);
    let ka = e.kappa * a;
    let base_ka = ml.lnint(|c| mul_ln(ka, ml.ln_u[c]) + ml.ln_phi[c]);
    let base_j = ml.lnint(|c| mul_ln(a - s + p, ml.ln_u[c]) + ml.ln_phi[c]);
    let base_a = ml.lnint(|c| mul_ln(a, ml.ln_u[c]) + ml.ln_phi[c]);
    let mut lhs = Vec::new();
    let mut i_star = Vec::new();
    let mut jj = Vec::new();
    let mut ln_sup = f64::NEG_INFINITY;
    for (t, w) in simpson_nodes() {
        let g = m.time.at(t);
        let lg = g.ln();
        let lw = w.ln();
        lhs.push(lw + ka * lg + base_ka);
        jj.push(lw + (a - s + p) * lg + base_j);
        i_star.push(
            lw + ml.lnint(|c| {
                mul_ln(a - s, lg + ml.ln_u[c]) - beta * (g * ml.abs_u[c]).ln_1p()
                    + mul_ln(p, lg + ml.ln_grad[c])
                    + ml.ln_w[c]
            }),
        );
        ln_sup = ln_sup.max(lg + base_a / a);
    }
    let ln_lhs = log_sum_exp(&lhs) / ka;
    let ln_e2 = rs / 2.0 * ml.lnint(|c| (2.0 / rs - 1.0) * ml.ln_phi[c]);
    let ln_e3 = (1.0 - r1) / r1
        * log_add_exp(
            0.0,
            ml.lnint(|c| {
                r1 / (1.0 - r1) * (-ml.ln_phi[c]).exp().ln_1p()
                    + r1 / ((1.0 - r1) * (1.0 - r1)) * (-ml.ln_w[c]).exp().ln_1p()
            }),
        );
    let ln_e1 = log_add_exp(0.0, ml.lnint(|c| ml.ln_phi[c]));
    let ln_phi3 = (1.0 + beta + 1.0 / r1) * std::f64::consts::LN_2 + p * c7.ln() + e.m.ln() / r1 + beta / a * ln_e1
        + ln_e2
        + ln_e3;
    let ln_rhs = (ln_phi3 + log_add_exp(log_sum_exp(&i_star), log_sum_exp(&jj))) / ka
        + log_add_exp((1.0 - e.theta0) * ln_sup, (1.0 - e.theta0_hat) * ln_sup);
    (ln_lhs, ln_rhs)
}

/// Outcome of one inequality family over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    /// Smallest ln RHS − ln LHS over all checks; +∞ if every LHS vanished.
    pub min_margin: f64,
    pub worst_member: Option<usize>,
    /// (member id, reason) for members whose preconditions fail.
    pub skipped: Vec<(usize, String)>,
}

impl LemmaReport {
    fn new(name: &'static str) -> Self {
        LemmaReport { name, checked: 0, violations: 0, min_margin: f64::INFINITY, worst_member: None, skipped: vec![] }
    }

    fn record(&mut self, id: usize, ln_lhs: f64, ln_rhs: f64) {
        self.checked += 1;
        let margin = if ln_lhs == f64::NEG_INFINITY { f64::INFINITY } else { ln_rhs - ln_lhs };
        if margin < self.min_margin {
            self.min_margin = margin;
            self.worst_member = Some(id);
        }
        if margin < 0.0 {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeReport {
    pub corpus_seed: u64,
    pub corpus_hash: String,
    pub alpha: f64,
    pub lemmas: Vec<LemmaReport>,
    /// RHS(ε=0.1) + RHS(ε=10) ≥ 2 min_ε RHS for every member and lemma.
    pub eps_tradeoff_ok: bool,
}

impl CompositeReport {
    pub fn total_violations(&self) -> usize {
        self.lemmas.iter().map(|l| l.violations).sum()
    }
}

/// Constants the composite inequalities are assembled with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssemblyConstants {
    pub c3_c4: f64,
    pub trace: TraceConstants,
    pub c7: f64,
}

/// Checks the three composite inequalities on every member of `corpus`.
pub fn verify_composites(
    corpus: &FunctionCorpus,
    b: &ExponentBundle,
    k: AssemblyConstants,
    grid: &Grid,
) -> Result<CompositeReport, FieldError> {
    let e = LemmaExponents::from_bundle(b);
    let mut reports = [LemmaReport::new("weighted_sobolev"), LemmaReport::new("weighted_trace"), LemmaReport::new("parabolic_sobolev")];
    let conds = [e.sobolev_conditions(), e.trace_conditions(), e.parabolic_conditions()];
    let mut eps_ok = true;
    for m in &corpus.members {
        let s = Sampled::new(m, grid)?;
        let ml = MemberLogs::new(&s, grid);
        let f = Functionals::new(&ml, &e);
        let lhs_vol = ln_volume_lhs(&ml, &e);
        let lhs_tr = ln_trace_lhs(&ml, &e);
        for (i, rep) in reports.iter_mut().enumerate() {
            if let Err(reason) = &conds[i] {
                rep.skipped.push((m.id, reason.clone()));
                continue;
            }
            if i == 2 {
                let (l, r) = parabolic_sides(&ml, m, &e, k.c7);
                rep.record(m.id, l, r);
                continue;
            }
            let mut rhs = Vec::new();
            for &eps in &EPSILONS {
                let (terms, lhs) = if i == 0 {
                    (damped_sobolev_terms(&f, &e, eps), lhs_vol)
                } else {
                    (damped_trace_terms(&f, &e, k.trace, eps), lhs_tr)
                };
                let r = ln_rhs(&terms, k.c3_c4);
                rep.record(m.id, lhs, r);
                rhs.push(r);
            }
            let lo = rhs.iter().cloned().fold(f64::INFINITY, f64::min);
            eps_ok &= log_add_exp(rhs[0], rhs[2]) >= 2f64.ln() + lo - 1e-12 * lo.abs();
        }
    }
    Ok(CompositeReport {
        corpus_seed: corpus.seed,
        corpus_hash: corpus.hash(),
        alpha: e.alpha,
        lemmas: reports.to_vec(),
        eps_tradeoff_ok: eps_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::ExponentParams;
    use crate::fields::FieldExpr;
    use crate::inequality::corpus::TimeProfile;

    fn bundle() -> ExponentBundle {
        ExponentBundle::compute(&ExponentParams::default_point(40.0)).unwrap()
    }

    fn constant_member(c: f64) -> Member {
        Member {
            id: 0,
            family: "constant",
            u: FieldExpr::constant(c),
            phi: FieldExpr::constant(1.0),
            w: FieldExpr::constant(1.0),
            omega: FieldExpr::constant(1.0),
            time: TimeProfile::Decay { rate: 0.0 },
        }
    }

    #[test]
    fn min_constant_inverts_rhs() {
        let terms = [RhsTerm::fixed(0.0), RhsTerm { ln_coef: 1.0, c_power: 2.0 }];
        let c = min_constant(&terms, 3.0);
        assert!((ln_rhs(&terms, c) - 3.0).abs() < 1e-10);
        assert_eq!(min_constant(&terms, -1.0), 0.0);
        assert_eq!(min_constant(&[RhsTerm::fixed(0.0)], 1.0), f64::INFINITY);
    }

    #[test]
    fn zero_function_has_zero_lhs() {
        let grid = Grid::new(1.0, 1.0, 8, 8).unwrap();
        let m = constant_member(0.0);
        let s = Sampled::new(&m, &grid).unwrap();
        let ml = MemberLogs::new(&s, &grid);
        let e = LemmaExponents::from_bundle(&bundle());
        assert_eq!(ln_volume_lhs(&ml, &e), f64::NEG_INFINITY);
        assert_eq!(ln_trace_lhs(&ml, &e), f64::NEG_INFINITY);
        let (l, _) = parabolic_sides(&ml, &m, &e, 1.0);
        assert_eq!(l, f64::NEG_INFINITY);
    }

    #[test]
    fn constant_function_closed_form() {
        // u ≡ c, φ = ω ≡ 1, r = 0: LHS = c^α and the min-form term contains (1+c^α)^{1+μ̂₃/α}.
        let grid = Grid::new(1.0, 1.0, 8, 8).unwrap();
        let c = 1.3;
        let m = constant_member(c);
        let s = Sampled::new(&m, &grid).unwrap();
        let ml = MemberLogs::new(&s, &grid);
        let mut e = LemmaExponents::from_bundle(&bundle());
        e.r = 0.0;
        let f = Functionals::new(&ml, &e);
        assert!((ln_volume_lhs(&ml, &e) - e.alpha * c.ln()).abs() < 1e-12);
        assert!((f.ln_j - e.alpha * c.ln()).abs() < 1e-12);
        let x = f.ln_min_form(e.alpha, e.mu_hat[1], e.mu_hat[2]);
        let closed = (1.0 + e.mu_hat[2] / e.alpha) * (c.powf(e.alpha)).ln_1p();
        assert!(x <= closed + 1e-12);
        // With c₃ = c₄ = 1 the assembled RHS dominates.
        let terms = damped_sobolev_terms(&f, &e, 1.0);
        assert!(ln_rhs(&terms, 1.0) >= ln_volume_lhs(&ml, &e));
    }

    #[test]
    fn preconditions_follow_alpha() {
        let e = LemmaExponents::from_bundle(&bundle());
        assert!(e.sobolev_conditions().is_ok());
        assert!(e.trace_conditions().is_ok());
        assert!(e.parabolic_conditions().is_ok());
        // 2(r+s−p)/r_* = 12 at the default point.
        let low = LemmaExponents { alpha: 11.0, ..e };
        assert!(low.sobolev_conditions().is_err());
        assert!(low.trace_conditions().is_err());
    }
}
