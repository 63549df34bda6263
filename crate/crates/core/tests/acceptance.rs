//! End-to-end acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use qcurv::cli::{parse_and_validate, run};
use qcurv::constants::{Constants, ProblemParams};
use qcurv::diagnostics::{diagnose_radial, pohozaev_residual, threshold_scan, DiagnosticsReport, WeightSpec};
use qcurv::kernel::angular::angular_log_mean;
use qcurv::kernel::{KernelCache, KernelOptions};
use qcurv::oracle2d::{normality_residual_2d, oracle_radial_grid, total_curvature_checked, ExplicitSolution2D};
use qcurv::quadrature::{build_radial_grid, default_r_max};
use qcurv::radial::{continuation_sweep, extract_normal_solution, RadialOperator, RadialSolution, SolverConfig};
use qcurv::{axisym, Error};

const M: usize = 512;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn operator(n: u32, alpha: f64, frac: f64, m: usize) -> RadialOperator {
    let crit = Constants::new(n).unwrap().critical_lambda(alpha);
    let p = ProblemParams::new(n, alpha, frac * crit).unwrap();
    let g = build_radial_grid(&p, m, default_r_max(&p)).unwrap();
    RadialOperator::new(p, g, &mut KernelCache::new(), &KernelOptions::default()).unwrap()
}

fn s3_closed(a: f64, b: f64) -> f64 {
    let f = |x: f64| if x == 0.0 { 0.0 } else { x * x * (2.0 * x.abs().ln() - 1.0) };
    (f(a + b) - f(a - b)) / (8.0 * a * b)
}

fn kernel_closed_forms() -> Outcome {
    let pts: Vec<f64> = (0..20).map(|k| 0.1 * 100f64.powf(k as f64 / 19.0)).collect();
    let (mut e2, mut e3): (f64, f64) = (0.0, 0.0);
    let mut near = 0;
    for a in &pts {
        for b in pts.iter().chain([a * 0.91, a * 0.99, a * 1.0000001, a * 1.05, a * 1.09].iter()) {
            if (a / b - 1.0).abs() < 0.1 {
                near += 1;
            }
            e2 = e2.max((angular_log_mean(*a, *b, 2).unwrap() - a.max(*b).ln()).abs());
            e3 = e3.max((angular_log_mean(*a, *b, 3).unwrap() - s3_closed(*a, *b)).abs());
        }
    }
    outcome(e2 < 1e-8 && e3 < 1e-8, format!("max |S_2 - log max| = {e2:.2e}, max |S_3 - closed| = {e3:.2e} ({near} near-diagonal pairs)"))
}

fn oracle_reproduction() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 0.5, 1.0] {
        let s = ExplicitSolution2D::radial(alpha, 1.0).unwrap();
        let tc = total_curvature_checked(&s).unwrap();
        let err = (tc - 4.0 * PI * (1.0 + alpha)).abs();
        let res = normality_residual_2d(&s, &oracle_radial_grid(&s, M).unwrap()).unwrap();
        pass &= err < 1e-6 && res < 1e-4;
        parts.push(format!("α={alpha}: |Λ-4π(1+α)| = {err:.1e}, normality {res:.1e}"));
    }
    outcome(pass, parts.join("; "))
}

fn subcritical(solutions: &mut Vec<(String, RadialSolution)>) -> Outcome {
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, alpha, frac) in [(3, 0.0, 0.5), (3, -0.5, 0.9), (4, 0.5, 0.9)] {
        let label = format!("({n},{alpha},{frac})");
        match operator(n, alpha, frac, M).solve(&cfg, None) {
            Ok(sol) => {
                let ok = sol.converged && sol.residual_sup < 1e-6;
                pass &= ok;
                parts.push(format!("{label}: residual {:.1e} in {} it", sol.residual_sup, sol.iterations));
                solutions.push((label, sol));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{label}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

/// Normal-profile total curvature and normality residual from the continuation sweep,
/// plus the total curvature extracted after each step.
fn sweep_normal(m: usize, solutions: Option<&mut Vec<(String, RadialSolution)>>) -> Result<(f64, f64, Vec<f64>), Error> {
    let op = operator(3, 0.0, 0.5, m);
    let crit = op.params.constants().critical_lambda(0.0);
    let lambdas: Vec<f64> = [0.9, 0.99, 0.999].iter().map(|f| f * crit).collect();
    let steps = continuation_sweep(&op, &lambdas, &SolverConfig::default())?;
    let normal = extract_normal_solution(&steps, 0.0, &KernelOptions::default())?;
    if let Some(out) = solutions {
        for s in &steps {
            if let Ok(sol) = &s.result {
                out.push((format!("sweep {:.3}", s.lambda / crit), sol.clone()));
            }
        }
    }
    if steps.iter().any(|s| !matches!(&s.result, Ok(r) if r.converged)) {
        return Err(Error::Diagnostic("a sweep step did not converge".into()));
    }
    let mut along = Vec::new();
    for k in 1..=steps.len() {
        along.push(extract_normal_solution(&steps[..k], 0.0, &KernelOptions::default())?.total_curvature);
    }
    Ok((normal.total_curvature, normal.normality_residual, along))
}

fn critical_value(solutions: &mut Vec<(String, RadialSolution)>, measured: &mut Vec<(usize, f64)>) -> Outcome {
    let crit = 4.0 * PI * PI;
    let mut gaps = Vec::new();
    let mut at_m = None;
    for m in [256, M] {
        let sols = if m == M { Some(&mut *solutions) } else { None };
        match sweep_normal(m, sols) {
            Ok((tc, res, along)) => {
                measured.push((m, tc));
                gaps.push(format!("m={m}: gap {:.6e}", (tc - crit).abs() / crit));
                if m == M {
                    at_m = Some((tc, res, along));
                }
            }
            Err(e) => gaps.push(format!("m={m}: {e}")),
        }
    }
    match at_m {
        Some((tc, res, along)) => {
            let gap = (tc - crit).abs() / crit;
            // the gap must shrink as the sweep approaches the threshold
            let along: Vec<f64> = along.iter().map(|t| (t - crit).abs() / crit).collect();
            let improving = along.windows(2).all(|w| w[1] < w[0]);
            let trail = along.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>().join(" > ");
            outcome(
                gap < 0.02 && res < 1e-3 && improving,
                format!(
                    "Λ_measured = {tc:.6} vs 4π² = {crit:.6}, normality {res:.2e}; gap along sweep {trail}; {}",
                    gaps.join(", ")
                ),
            )
        }
        None => outcome(false, gaps.join(", ")),
    }
}

fn slope_law(diags: &[(String, DiagnosticsReport)], count: usize) -> Outcome {
    let mut pass = diags.len() == count && count > 0;
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for (_, d) in diags {
        let rel = (d.beta_estimate - d.beta_predicted).abs() / d.beta_predicted;
        worst = worst.max(rel);
        violations += d.lower_bound_violations;
        pass &= rel < 0.05 && d.lower_bound_violations == 0;
    }
    outcome(pass, format!("{} solutions, worst |β-Λ/γ|/(Λ/γ) = {worst:.2e}, lower-bound violations {violations}", diags.len()))
}

fn pohozaev(diags: &[(String, DiagnosticsReport)]) -> Outcome {
    let mut pass = !diags.is_empty();
    let mut worst: f64 = 0.0;
    let mut min_mu = f64::INFINITY;
    for (_, d) in diags {
        worst = worst.max(d.pohozaev_relative_residual);
        min_mu = min_mu.min(d.pohozaev_mu_term);
        pass &= d.pohozaev_relative_residual < 1e-3 && d.pohozaev_mu_term > 0.0;
    }
    let mut oracle_worst: f64 = 0.0;
    for alpha in [0.0, 0.5, 1.0] {
        let s = ExplicitSolution2D::radial(alpha, 1.0).unwrap();
        let g = oracle_radial_grid(&s, M).unwrap();
        let u: Vec<f64> = g.nodes.iter().map(|r| s.eval_radial(*r)).collect();
        match pohozaev_residual(&u, &WeightSpec::new(alpha, 0.0).unwrap(), 2, &g) {
            Ok(c) => oracle_worst = oracle_worst.max(c.residual),
            Err(_) => oracle_worst = f64::INFINITY,
        }
    }
    pass &= oracle_worst < 1e-5;
    outcome(
        pass,
        format!("μ=n: worst relative residual {worst:.2e}, min μ-term {min_mu:.3e}; μ=0 oracle: worst |lhs-rhs| {oracle_worst:.2e}"),
    )
}

fn threshold() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.0, -0.5] {
        let op = operator(3, alpha, 0.5, M);
        let crit = op.params.constants().critical_lambda(alpha);
        let fracs = qcurv::diagnostics::scan_fractions(0.9, 1.1, 0.02);
        let lambdas: Vec<f64> = fracs.iter().map(|f| f * crit).collect();
        match threshold_scan(&op, &lambdas, &SolverConfig::default()) {
            Ok(scan) => {
                let within = scan.transition.map(|(a, b)| b - a <= 0.02 * crit * (1.0 + 1e-9)).unwrap_or(false);
                pass &= scan.brackets_threshold && within;
                let t = scan.transition.map(|(a, b)| format!("[{:.2}, {:.2}]", a / crit, b / crit)).unwrap_or("none".into());
                parts.push(format!("α={alpha}: transition {t} of Λ_1(1+α)"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("α={alpha}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn supercritical_axisym() -> Outcome {
    let consts = Constants::new(3).unwrap();
    let p = ProblemParams::new(3, -0.5, 0.6 * consts.lambda_1).unwrap();
    let radial = build_radial_grid(&p, 128, default_r_max(&p)).unwrap();
    let cfg = axisym::AxisymConfig { polar_nodes: 96, ..Default::default() };
    let solver = SolverConfig::default();
    match axisym::solve_axisym(&p, &radial, &cfg, &solver) {
        Ok(f) => {
            let vol_err = (f.volume() - p.lambda).abs() / p.lambda;
            let asym = f.axial_asymmetry();
            let tol = 1e-4;
            let pass = f.converged && f.residual_sup < tol && vol_err < 1e-10 && asym > 10.0 * tol;
            outcome(
                pass,
                format!(
                    "Λ/Λ_1(1+α) = {:.2}, residual {:.1e} in {} it, volume error {vol_err:.1e}, v* = {:.4}, axial asymmetry {asym:.3e}",
                    p.critical_fraction(),
                    f.residual_sup,
                    f.iterations,
                    f.v_star
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism_and_refinement(measured: &[(usize, f64)]) -> Outcome {
    let runs: [&[&str]; 7] = [
        &["solve-radial", "--lambda-frac", "0.5", "--nodes", "256"],
        &["sweep", "--nodes", "256"],
        &["solve-axisym", "--alpha", "-0.5", "--lambda-frac-l1", "0.6", "--nodes", "64", "--polar-nodes", "16"],
        &["poho-check", "--n", "4", "--alpha", "0.5", "--lambda-frac", "0.9", "--nodes", "256"],
        &["asymptotics", "--alpha", "-0.5", "--lambda-frac", "0.9", "--nodes", "256"],
        &["oracle2d", "--alpha", "0.5"],
        &["threshold-scan", "--nodes", "128", "--scan-lo", "0.9", "--scan-hi", "1.1", "--scan-step", "0.1"],
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut files = 0;
    for (k, args) in runs.iter().enumerate() {
        let mut bodies = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{k}_{rep}"));
            let argv: Vec<&str> = std::iter::once("qcurv")
                .chain(args.iter().copied())
                .chain(["--out", out.to_str().unwrap()])
                .collect();
            let cfg = parse_and_validate(argv).unwrap();
            run(&cfg).unwrap();
            bodies.push(csv_bodies(&out));
        }
        identical &= !bodies[0].is_empty() && bodies[0] == bodies[1];
        files += bodies[0].len();
    }

    let mut m2 = measured.to_vec();
    match sweep_normal(2 * M, None) {
        Ok((tc, _, _)) => m2.push((2 * M, tc)),
        Err(e) => return outcome(false, format!("refined sweep failed: {e}")),
    }
    let at = |m: usize| m2.iter().find(|x| x.0 == m).map(|x| x.1);
    let (Some(a), Some(b)) = (at(M), at(2 * M)) else {
        return outcome(false, "criterion 4 sweep missing".into());
    };
    let change = (b - a).abs() / a;
    outcome(
        identical && change < 0.005,
        format!("{files} CSV files bit-identical across repeats: {identical}; Λ_measured m={M}: {a:.6}, m={}: {b:.6}, change {:.3}%", 2 * M, 100.0 * change),
    )
}

fn main() {
    // libtest-style flags (e.g. --nocapture, filters) are accepted and ignored;
    // `--list` must print nothing for tooling that enumerates tests.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {id} [{name}]: {} ({:.0}s) {}", if o.pass { "PASS" } else { "FAIL" }, secs, o.detail);
        results.push((id, name, o, secs));
    };

    let mut solutions: Vec<(String, RadialSolution)> = Vec::new();
    let mut measured: Vec<(usize, f64)> = Vec::new();
    timed(1, "kernel closed forms", &mut kernel_closed_forms);
    timed(2, "planar oracle", &mut oracle_reproduction);
    timed(3, "subcritical existence", &mut || subcritical(&mut solutions));
    timed(4, "critical value by continuation", &mut || critical_value(&mut solutions, &mut measured));

    let converged: Vec<&(String, RadialSolution)> = solutions.iter().filter(|(_, s)| s.converged).collect();
    let diags: Vec<(String, DiagnosticsReport)> = converged
        .iter()
        .filter_map(|(l, s)| diagnose_radial(s).ok().map(|d| (l.clone(), d)))
        .collect();
    let count = converged.len();
    timed(5, "slope law and lower bound", &mut || slope_law(&diags, count));
    timed(6, "Pohozaev identity", &mut || pohozaev(&diags));
    timed(7, "threshold scan", &mut threshold);
    timed(8, "supercritical axisymmetric", &mut supercritical_axisym);
    timed(9, "determinism and refinement", &mut || determinism_and_refinement(&measured));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failed: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
