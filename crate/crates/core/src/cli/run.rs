use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use serde_json::{json, Map, Value};

use super::config::{CommandKind, RunConfig};
use super::output::{
    float_rows, write_csv, write_trace, Cell, ConstantsEcho, RunReport, SolverSummary, Status, Timing,
    REPORT_SCHEMA_VERSION,
};
use crate::axisym::AxisymOperator;
use crate::constants::ProblemParams;
use crate::diagnostics::{
    default_fit_window, diagnose_radial, log_slope, lower_bound_check, normal_form_potential, pohozaev_residual,
    threshold_scan, DiagnosticsReport, WeightSpec,
};
use crate::error::{Error, Result};
use crate::kernel::{KernelCache, KernelOptions};
use crate::oracle2d::{normality_residual_2d, oracle_radial_grid, total_curvature_checked, ExplicitSolution2D};
use crate::quadrature::build_radial_grid_with;
use crate::radial::{continuation_sweep, extract_normal_solution, RadialOperator, RadialSolution};

/// Result of [`run`]: the report (already written) and the process exit code.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: i32,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    artifacts: Vec<String>,
    trace: BufWriter<File>,
    details: Map<String, Value>,
    solver: Option<SolverSummary>,
    diagnostics: Option<DiagnosticsReport>,
    lambda: f64,
    cache: KernelCache,
}

impl Ctx<'_> {
    fn path(&mut self, name: &str) -> std::path::PathBuf {
        self.artifacts.push(name.to_string());
        self.cfg.out_dir.join(name)
    }

    fn detail(&mut self, key: &str, value: impl serde::Serialize) {
        self.details.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn radial_operator(&mut self) -> Result<RadialOperator> {
        let grid = self.cfg.grid.build(&self.cfg.params)?;
        RadialOperator::new(self.cfg.params, grid, &mut self.cache, &KernelOptions::default())
    }
}

fn summary(sol: &RadialSolution) -> SolverSummary {
    let volume = sol.volume();
    SolverSummary {
        iterations: sol.iterations,
        residual_sup: sol.residual_sup,
        w0: sol.w0(),
        c_v: sol.c_v,
        volume,
        volume_error: (volume - sol.params.lambda).abs() / sol.params.lambda,
    }
}

const PROFILE_HEADER: [&str; 4] = ["r", "v", "u", "density"];

/// Execute a validated configuration, writing all artifacts and `report.json`.
///
/// Only failures to create the output directory or write the report surface as
/// errors; everything else is recorded in the report with a reason code.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let start = Instant::now();
    let cache = match &cfg.cache_dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            KernelCache::with_dir(d)
        }
        None => KernelCache::new(),
    };
    let trace = BufWriter::new(File::create(cfg.out_dir.join("trace.log"))?);
    let mut ctx = Ctx {
        cfg,
        artifacts: vec!["trace.log".into()],
        trace,
        details: Map::new(),
        solver: None,
        diagnostics: None,
        lambda: cfg.params.lambda,
        cache,
    };
    log::info!("{}: n = {}, α = {}, Λ = {}", cfg.command.name(), cfg.params.n, cfg.params.alpha, cfg.params.lambda);
    let result = match cfg.command {
        CommandKind::SolveRadial | CommandKind::PohoCheck | CommandKind::Asymptotics => run_radial(&mut ctx),
        CommandKind::Sweep => run_sweep(&mut ctx),
        CommandKind::SolveAxisym => run_axisym(&mut ctx),
        CommandKind::Oracle2d => run_oracle(&mut ctx),
        CommandKind::ThresholdScan => run_scan(&mut ctx),
    };
    ctx.trace.flush()?;
    let (status, reason_code, message) = match result {
        Ok(s) => (s, None, None),
        Err(e) => {
            log::error!("{e}");
            (Status::Failed, Some(e.reason_code().to_string()), Some(e.to_string()))
        }
    };
    let consts = cfg.params.constants();
    let critical = consts.critical_lambda(cfg.params.alpha);
    let report_path = ctx.path("report.json");
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: cfg.command.name().to_string(),
        status,
        converged: matches!(status, Status::Converged | Status::Completed),
        reason_code,
        message,
        config: cfg.echo.clone(),
        constants: ConstantsEcho {
            n: cfg.params.n,
            gamma_n: consts.gamma_n,
            lambda_1: consts.lambda_1,
            critical_lambda: critical,
            lambda: ctx.lambda,
            lambda_fraction: ctx.lambda / critical,
        },
        solver: ctx.solver,
        diagnostics: ctx.diagnostics,
        details: ctx.details,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64() },
        artifacts: ctx.artifacts,
    };
    report.write(&report_path)?;
    let exit_code = if report.converged { 0 } else { 1 };
    Ok(RunOutcome { report, exit_code })
}

fn run_radial(ctx: &mut Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let op = ctx.radial_operator()?;
    ctx.detail("blowup_ceiling", op.effective_ceiling(&cfg.solver));
    let sol = op.solve(&cfg.solver, None)?;
    write_trace(&mut ctx.trace, &format!("Λ = {}", cfg.params.lambda), &sol.trace)?;
    let path = ctx.path("profile.csv");
    write_csv(&path, &PROFILE_HEADER, float_rows(&sol.profile_rows()))?;
    ctx.solver = Some(summary(&sol));
    ctx.detail("update_sup", sol.update_sup);
    if !sol.converged {
        return Ok(Status::NotConverged);
    }
    let diag = match diagnose_radial(&sol) {
        Ok(d) => d,
        Err(e) => {
            ctx.detail("diagnostics_error", e.to_string());
            return Ok(Status::Converged);
        }
    };
    match cfg.command {
        CommandKind::PohoCheck => {
            ctx.detail(
                "pohozaev",
                json!({
                    "lhs": diag.pohozaev_lhs,
                    "rhs": diag.pohozaev_rhs,
                    "relative_residual": diag.pohozaev_relative_residual,
                    "mu_term": diag.pohozaev_mu_term,
                    "identity_holds": diag.pohozaev_relative_residual < 1e-3,
                    "mu_term_positive": diag.pohozaev_mu_term > 0.0,
                }),
            );
        }
        CommandKind::Asymptotics => {
            let vn = normal_form_potential(&sol)?;
            let beta = diag.beta_predicted;
            let rows: Vec<[f64; 4]> = sol
                .grid
                .nodes
                .iter()
                .zip(sol.v.iter().zip(&vn))
                .map(|(r, (v, n))| [*r, *v, *n, -beta * r.ln()])
                .collect();
            let path = ctx.path("asymptotics.csv");
            write_csv(&path, &["r", "v", "v_normal", "lower_bound"], float_rows(&rows))?;
            ctx.detail(
                "asymptotics",
                json!({
                    "beta_estimate": diag.beta_estimate,
                    "beta_predicted": beta,
                    "relative_error": (diag.beta_estimate - beta).abs() / beta,
                    "fit_window": diag.fit_window,
                    "lower_bound_violations": diag.lower_bound_violations,
                }),
            );
        }
        _ => {}
    }
    ctx.diagnostics = Some(diag);
    Ok(Status::Converged)
}

fn run_sweep(ctx: &mut Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let lambdas = cfg.lambda_list();
    ctx.lambda = *lambdas.last().expect("validated nonempty");
    let op = ctx.radial_operator()?;
    let crit = cfg.params.constants().critical_lambda(cfg.params.alpha);
    let steps = continuation_sweep(&op, &lambdas, &cfg.solver)?;
    let mut summary_rows = Vec::new();
    let mut all_converged = true;
    for (k, step) in steps.iter().enumerate() {
        let frac = step.lambda / crit;
        match &step.result {
            Ok(sol) => {
                write_trace(&mut ctx.trace, &format!("Λ = {}", step.lambda), &sol.trace)?;
                let path = ctx.path(&format!("sweep_{k:03}.csv"));
                write_csv(&path, &PROFILE_HEADER, float_rows(&sol.profile_rows()))?;
                all_converged &= sol.converged;
                summary_rows.push(vec![
                    Cell::F(step.lambda),
                    Cell::F(frac),
                    Cell::B(sol.converged),
                    Cell::F(sol.w0()),
                    Cell::F(sol.residual_sup),
                    Cell::I(sol.iterations),
                    Cell::S(if sol.converged { String::new() } else { "max_iter".into() }),
                ]);
            }
            Err(e) => {
                all_converged = false;
                let peak = if let Error::BlowUp { peak, .. } = e { *peak } else { f64::NAN };
                summary_rows.push(vec![
                    Cell::F(step.lambda),
                    Cell::F(frac),
                    Cell::B(false),
                    Cell::F(peak),
                    Cell::F(f64::NAN),
                    Cell::I(0),
                    Cell::S(e.reason_code().into()),
                ]);
            }
        }
    }
    let path = ctx.path("summary.csv");
    write_csv(&path, &["lambda", "fraction", "converged", "w0", "residual", "iterations", "reason"], summary_rows)?;

    if let Some(last) = steps.iter().rev().find_map(|s| s.result.as_ref().ok().filter(|r| r.converged)) {
        ctx.solver = Some(summary(last));
        match diagnose_radial(last) {
            Ok(d) => ctx.diagnostics = Some(d),
            Err(e) => ctx.detail("diagnostics_error", e.to_string()),
        }
    }
    let normal = extract_normal_solution(&steps, cfg.min_peak, &KernelOptions::default())?;
    let prof = &normal.profile;
    let nf = prof.n as f64;
    let mut rows = vec![[0.0, 0.0, if prof.alpha == 0.0 { 1.0 } else if prof.alpha > 0.0 { 0.0 } else { f64::INFINITY }]];
    for (x, e) in prof.grid.nodes.iter().zip(&prof.eta) {
        rows.push([*x, *e, (nf * prof.alpha * x.ln() + nf * e).exp()]);
    }
    let path = ctx.path("normal_profile.csv");
    write_csv(&path, &["x", "eta", "density"], float_rows(&rows))?;
    ctx.detail(
        "normal",
        json!({
            "lambda_measured": normal.total_curvature,
            "critical_lambda": crit,
            "relative_gap": (normal.total_curvature - crit).abs() / crit,
            "normality_residual": normal.normality_residual,
            "c": normal.c,
            "r_k": prof.r_k,
            "source_peak": prof.source_peak,
            "test_radius": normal.test_radius,
        }),
    );
    ctx.detail("lambdas", &lambdas);
    Ok(if all_converged { Status::Converged } else { Status::NotConverged })
}

fn run_axisym(ctx: &mut Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let p = cfg.params;
    let l1 = p.constants().lambda_1;
    if !(p.lambda < l1) {
        return Err(Error::Domain(format!("axially symmetric solutions need Λ < Λ_1 = {l1}, got {}", p.lambda)));
    }
    let radial = cfg.grid.build(&p)?;
    let op = AxisymOperator::new(p, radial, &cfg.axisym, &mut ctx.cache, &KernelOptions::default())?;
    let field = op.solve(&cfg.solver, None)?;
    write_trace(&mut ctx.trace, &format!("Λ = {}", p.lambda), &field.trace)?;
    let path = ctx.path("field.csv");
    write_csv(&path, &["x1", "rho", "v", "u", "density"], float_rows(&field.field_rows()))?;
    let volume = field.volume();
    ctx.solver = Some(SolverSummary {
        iterations: field.iterations,
        residual_sup: field.residual_sup,
        w0: field.v0 + field.c_v,
        c_v: field.c_v,
        volume,
        volume_error: (volume - p.lambda).abs() / p.lambda,
    });
    let asym = field.axial_asymmetry();
    let sym_tol = 10.0 * cfg.solver.tol.max(field.residual_sup);
    ctx.detail(
        "axisym",
        json!({
            "radial_nodes": op.grid.radial.len(),
            "polar_nodes": op.grid.polar(),
            "l_max": op.grid.l_max,
            "tilt": op.tilt,
            "v_star": field.v_star,
            "axial_asymmetry": asym,
            "symmetry_tolerance": sym_tol,
            "symmetry_broken": asym > sym_tol,
            "weighted_norm": field.weighted_norm,
            "far_field_ratios": field.far_field_ratios(),
            "pohozaev_components": field.pohozaev_components(),
            "supercritical": p.lambda > p.constants().critical_lambda(p.alpha),
        }),
    );
    Ok(if field.converged { Status::Converged } else { Status::NotConverged })
}

fn run_oracle(ctx: &mut Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let alpha = cfg.params.alpha;
    let sol = ExplicitSolution2D::new(alpha, cfg.oracle.lambda_scale, cfg.oracle.zeta)?;
    let grid = match cfg.grid.r_max {
        Some(r) => {
            let p = ProblemParams::with_mu(2, alpha, sol.lambda_exact(), 0.0)?;
            build_radial_grid_with(&p, cfg.grid.nodes, r, cfg.grid.grading)?
        }
        None => oracle_radial_grid(&sol, cfg.grid.nodes)?,
    };
    let u: Vec<f64> = grid.nodes.iter().map(|r| sol.eval_u((*r, 0.0))).collect();
    let mut rows = vec![{
        let u0 = sol.eval_u((0.0, 0.0));
        let d0 = if alpha == 0.0 { (2.0 * u0).exp() } else if alpha > 0.0 { 0.0 } else { f64::INFINITY };
        [0.0, u0, u0, d0]
    }];
    for (r, x) in grid.nodes.iter().zip(&u) {
        rows.push([*r, *x, *x, sol.density((*r, 0.0))]);
    }
    let path = ctx.path("profile.csv");
    write_csv(&path, &PROFILE_HEADER, float_rows(&rows))?;

    let lambda_measured = total_curvature_checked(&sol)?;
    ctx.detail("lambda_measured", lambda_measured);
    ctx.detail("lambda_exact", sol.lambda_exact());
    ctx.detail("peaks", sol.peaks());
    if sol.is_radial() {
        ctx.detail("normality_residual", normality_residual_2d(&sol, &grid)?);
        let poho = pohozaev_residual(&u, &WeightSpec::new(alpha, 0.0)?, 2, &grid)?;
        let window = default_fit_window(&grid);
        let beta_predicted = poho.lambda_measured / cfg.params.constants().gamma_n;
        ctx.diagnostics = Some(DiagnosticsReport {
            lambda_measured: poho.lambda_measured,
            beta_estimate: log_slope(&grid.nodes, &u, window)?,
            beta_predicted,
            fit_window: window,
            pohozaev_lhs: poho.lhs,
            pohozaev_rhs: poho.rhs,
            pohozaev_residual: poho.residual,
            pohozaev_relative_residual: poho.relative_residual,
            pohozaev_mu_term: poho.mu_term,
            lower_bound_violations: lower_bound_check(&grid.nodes, &u, beta_predicted),
        });
    }
    Ok(Status::Completed)
}

fn run_scan(ctx: &mut Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let lambdas = cfg.lambda_list();
    ctx.lambda = *lambdas.last().expect("scan list is nonempty");
    let op = ctx.radial_operator()?;
    let scan = threshold_scan(&op, &lambdas, &cfg.solver)?;
    writeln!(ctx.trace, "# threshold scan, Λ_1(1+α) = {}", scan.critical_lambda)?;
    let mut rows = Vec::new();
    for r in &scan.rows {
        writeln!(ctx.trace, "{} {} {} {}", r.fraction, r.converged, r.w0_final, r.reason.as_deref().unwrap_or("-"))?;
        rows.push(vec![
            Cell::F(r.lambda),
            Cell::F(r.fraction),
            Cell::B(r.converged),
            Cell::F(r.w0_final),
            Cell::I(r.iterations),
            Cell::S(r.reason.clone().unwrap_or_default()),
        ]);
    }
    let path = ctx.path("scan.csv");
    write_csv(&path, &["lambda", "fraction", "converged", "w0_final", "iterations", "reason"], rows)?;
    ctx.detail("scan", &scan);
    Ok(Status::Completed)
}
