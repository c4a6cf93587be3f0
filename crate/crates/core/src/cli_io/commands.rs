//! Subcommand implementations. Each writes its report into the output
//! directory and returns the process exit code:
//! 0 success, 1 invalid input or a failed check, 2 solver failure,
//! 3 a precondition of the estimates fails.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::certify::{certify, CertifyError};
use super::config::{Resolved, RunConfig};
use super::report::{csv_table, write_text, Report};
use crate::constitutive::bounds::random_law;
use crate::constitutive::{verify_x_bounds, BoundCheckReport, Medium, SampleRanges};
use crate::estimates::ExponentBundle;
use crate::fields::{materialize, Grid};
use crate::inequality::{estimate_constants, fuzz_elementary, verify_composites, EmpiricalConstants, FunctionCorpus};
use crate::solver::{mass_balance_residual, mms_study, temporal_study, write_csv, MmsProblem, MmsReport, Solver, TemporalReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Inverse residual tolerance of the constitutive suite.
pub const INVERSE_TOL: f64 = 1e-10;

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub out: PathBuf,
}

impl Context<'_> {
    fn emit<T: Serialize>(&self, file: &str, report: &Report<'_, T>) -> i32 {
        let path = self.out.join(file);
        if let Err(e) = write_text(&path, &report.to_json()) {
            eprintln!("error: writing {}: {e}", path.display());
            return EXIT_INPUT;
        }
        if let Some(err) = &report.error {
            eprintln!("error: {}", err.message);
        }
        report.exit_code
    }

    fn fail(&self, command: &str, suite: Option<&str>, code: i32, reason: &str, message: String) -> i32 {
        let file = format!("{}.json", suite.unwrap_or(command));
        self.emit::<()>(&file, &Report::failed(command, suite, self.config, code, reason, message))
    }

    fn resolve(&self, command: &str, suite: Option<&str>) -> Result<Resolved, i32> {
        self.config.resolve().map_err(|e| self.fail(command, suite, EXIT_INPUT, "invalid_config", e.to_string()))
    }

    fn write_series(&self, file: &str, text: String) -> Result<(), i32> {
        let path = self.out.join(file);
        write_text(&path, &text).map_err(|e| {
            eprintln!("error: writing {}: {e}", path.display());
            EXIT_INPUT
        })
    }

    fn artifact_path(&self) -> PathBuf {
        match &self.config.calibration.artifact {
            Some(p) => PathBuf::from(p),
            None => self.out.join("calibration.json"),
        }
    }
}

#[derive(Debug, Serialize)]
struct SimulateResult {
    steps: usize,
    snapshots: usize,
    final_time: f64,
    mass_initial: f64,
    mass_final: f64,
    floor_injection: f64,
    max_normalized_mass_residual: f64,
}

pub fn simulate(ctx: &Context) -> i32 {
    let res = match ctx.resolve("simulate", None) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let u0 = match materialize(&res.u0, &res.grid, 0.0) {
        Ok(u) => u,
        Err(e) => return ctx.fail("simulate", None, EXIT_INPUT, "invalid_config", e.to_string()),
    };
    let run = Solver::with_forcing(res.grid.clone(), res.medium, res.solver, res.forcing, &res.partition, res.source)
        .and_then(|s| s.run(&u0));
    let traj = match run {
        Ok(t) => t,
        Err(e) => return ctx.fail("simulate", None, EXIT_SOLVER, "solver_failure", e.to_string()),
    };
    if let Err(e) = write_csv(&traj, &res.grid, &ctx.out) {
        return ctx.fail("simulate", None, EXIT_INPUT, "io", e.to_string());
    }
    let first = &traj.diagnostics[0];
    let last = traj.diagnostics.last().expect("initial diagnostics");
    let result = SimulateResult {
        steps: traj.steps.len(),
        snapshots: traj.snapshots.len(),
        final_time: traj.final_state.t,
        mass_initial: first.mass,
        mass_final: last.mass,
        floor_injection: traj.final_state.floor_injection,
        max_normalized_mass_residual: mass_balance_residual(&traj).max_normalized,
    };
    ctx.emit("simulate.json", &Report::ok("simulate", None, ctx.config, EXIT_OK, result))
}

/// Bound and inversion checks over random heterogeneous laws in the configured medium.
pub fn constitutive_suite(config: &RunConfig, medium: &Medium, seed: u64) -> Result<BoundCheckReport, String> {
    let v = &config.verify;
    let laws = v.constitutive_laws.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = BoundCheckReport::empty();
    for k in 0..laws {
        let m = Medium { law: random_law(&mut rng), ..medium.clone() };
        let count = v.constitutive_samples / laws + usize::from(k < v.constitutive_samples % laws);
        let r = verify_x_bounds(&m, &SampleRanges::default(), count, seed.wrapping_add(k as u64 + 1), config.solver.tol)
            .map_err(|e| e.to_string())?;
        total.merge(&r);
    }
    Ok(total)
}

/// Composite checks against a stored calibration.
#[derive(Debug, Serialize)]
pub struct CompositeSuite {
    pub constants: EmpiricalConstants,
    pub report: crate::inequality::CompositeReport,
}

pub fn composite_suite(config: &RunConfig, medium: &Medium, constants: EmpiricalConstants) -> Result<CompositeSuite, String> {
    let c = &config.calibration;
    let b = ExponentBundle::compute(&config.exponent_params(medium, constants.alpha)).map_err(|e| e.to_string())?;
    let corpus = FunctionCorpus::generate(c.assertion_seed, c.corpus_size);
    if corpus.hash() == constants.corpus_hash {
        return Err("the assertion corpus equals the calibration corpus; choose a different assertion_seed".into());
    }
    let grid = Grid::new(1.0, 1.0, c.grid_n, c.grid_n).map_err(|e| e.to_string())?;
    let report = verify_composites(&corpus, &b, constants.assembly(), &grid).map_err(|e| e.to_string())?;
    Ok(CompositeSuite { constants, report })
}

pub fn verify(ctx: &Context, suite: &str) -> i32 {
    let s = Some(suite);
    let file = format!("{suite}.json");
    match suite {
        "elementary" => {
            let r = fuzz_elementary(ctx.config.verify.elementary_samples, ctx.config.seed);
            let code = if r.total_violations() == 0 { EXIT_OK } else { EXIT_INPUT };
            ctx.emit(&file, &Report::ok("verify", s, ctx.config, code, r))
        }
        "constitutive" => {
            let res = match ctx.resolve("verify", s) {
                Ok(r) => r,
                Err(code) => return code,
            };
            match constitutive_suite(ctx.config, &res.medium, ctx.config.seed) {
                Ok(r) => {
                    let ok = r.violations() == 0 && r.max_inverse_residual <= INVERSE_TOL;
                    ctx.emit(&file, &Report::ok("verify", s, ctx.config, if ok { EXIT_OK } else { EXIT_INPUT }, r))
                }
                Err(m) => ctx.fail("verify", s, EXIT_INPUT, "inversion_failure", m),
            }
        }
        "composites" => {
            let res = match ctx.resolve("verify", s) {
                Ok(r) => r,
                Err(code) => return code,
            };
            let path = ctx.artifact_path();
            let constants = match load_constants(&path) {
                Ok(c) => c,
                Err(m) => {
                    let msg = format!("no usable calibration artifact at {}: {m}; run `rotflow calibrate` first", path.display());
                    return ctx.fail("verify", s, EXIT_INPUT, "missing_calibration", msg);
                }
            };
            match composite_suite(ctx.config, &res.medium, constants) {
                Ok(r) => {
                    let ok = r.report.total_violations() == 0 && r.report.eps_tradeoff_ok;
                    ctx.emit(&file, &Report::ok("verify", s, ctx.config, if ok { EXIT_OK } else { EXIT_INPUT }, r))
                }
                Err(m) => ctx.fail("verify", s, EXIT_INPUT, "composites", m),
            }
        }
        other => ctx.fail("verify", s, EXIT_INPUT, "unknown_suite", format!("unknown suite `{other}`; expected constitutive, elementary or composites")),
    }
}

fn load_constants(path: &Path) -> Result<EmpiricalConstants, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

pub fn calibrate(ctx: &Context) -> i32 {
    let res = match ctx.resolve("calibrate", None) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let c = &ctx.config.calibration;
    let b = match ExponentBundle::compute(&ctx.config.exponent_params(&res.medium, c.alpha)) {
        Ok(b) => b,
        Err(e) => return ctx.fail("calibrate", None, EXIT_PRECONDITION, "exponent_precondition", e.to_string()),
    };
    let corpus = FunctionCorpus::generate(c.calibration_seed, c.corpus_size);
    match estimate_constants(&corpus, &b, c.grid_n) {
        Ok(k) => {
            let path = ctx.artifact_path();
            let text = serde_json::to_string_pretty(&k).expect("constants serialize") + "\n";
            if let Err(e) = write_text(&path, &text) {
                return ctx.fail("calibrate", None, EXIT_INPUT, "io", format!("writing {}: {e}", path.display()));
            }
            ctx.emit("calibrate.json", &Report::ok("calibrate", None, ctx.config, EXIT_OK, k))
        }
        Err(e) => ctx.fail("calibrate", None, EXIT_INPUT, "calibration", e.to_string()),
    }
}

pub fn certify_cmd(ctx: &Context) -> i32 {
    match certify(ctx.config) {
        Ok(c) => {
            let e = &c.envelope_series;
            let rows = (0..e.times.len()).map(|k| {
                vec![e.times[k], c.norms[k], e.ln_bound[k].exp(), e.delta[k], e.m_values[k], e.m_integral[k]]
            });
            if let Err(code) = ctx.write_series("envelope.csv", csv_table(&["t", "norm", "bound", "delta", "m_alpha", "m_integral"], rows)) {
                return code;
            }
            let rows = c.fits.iter().enumerate().flat_map(|(i, f)| {
                (0..f.times.len()).map(move |k| vec![i as f64, f.times[k], f.lhs[k], f.ln_shape[k], f.ratios[k]])
            });
            if let Err(code) = ctx.write_series("cbar_fit.csv", csv_table(&["run", "t", "lhs", "ln_shape", "ratio"], rows)) {
                return code;
            }
            let code = if c.passed { EXIT_OK } else { EXIT_INPUT };
            ctx.emit("certify.json", &Report::ok("certify", None, ctx.config, code, c))
        }
        Err(e) => certify_failure(ctx, &e),
    }
}

fn certify_failure(ctx: &Context, e: &CertifyError) -> i32 {
    ctx.fail("certify", None, e.exit_code(), e.reason(), e.to_string())
}

#[derive(Debug, Serialize)]
struct MmsResult {
    spatial: MmsReport,
    temporal: TemporalReport,
}

pub fn mms(ctx: &Context) -> i32 {
    let res = match ctx.resolve("mms", None) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let m = &ctx.config.mms;
    let spatial = mms_study(&MmsProblem::standard(res.medium.clone(), m.t_end), &m.grids);
    let temporal = spatial.and_then(|s| {
        temporal_study(&MmsProblem::standard(res.medium, m.temporal_t_end), m.temporal_n, m.temporal_dt0, m.temporal_halvings)
            .map(|t| (s, t))
    });
    let (spatial, temporal) = match temporal {
        Ok(x) => x,
        Err(e) => return ctx.fail("mms", None, EXIT_SOLVER, "solver_failure", e.to_string()),
    };
    let rows = spatial.rows.iter().enumerate().map(|(i, r)| {
        let order = if i == 0 { f64::NAN } else { spatial.orders[i - 1] };
        vec![r.n as f64, r.h, r.steps as f64, r.l2_phi_error, order]
    });
    if let Err(code) = ctx.write_series("mms.csv", csv_table(&["n", "h", "steps", "l2_phi_error", "order"], rows)) {
        return code;
    }
    let rows = temporal.dts.iter().enumerate().map(|(i, &dt)| {
        let diff = temporal.differences.get(i).copied().unwrap_or(f64::NAN);
        let order = if i == 0 { f64::NAN } else { temporal.orders.get(i - 1).copied().unwrap_or(f64::NAN) };
        vec![dt, diff, order]
    });
    if let Err(code) = ctx.write_series("mms_temporal.csv", csv_table(&["dt", "difference_to_next", "order"], rows)) {
        return code;
    }
    ctx.emit("mms.json", &Report::ok("mms", None, ctx.config, EXIT_OK, MmsResult { spatial, temporal }))
}
