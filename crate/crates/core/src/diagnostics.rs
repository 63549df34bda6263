//! Pohozaev residuals, logarithmic slopes, the lower bound `v ≥ -β log|x|`, and
//! threshold scans.

use serde::{Deserialize, Serialize};

use crate::constants::{Constants, ProblemParams};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_radial, RadialGrid};
use crate::radial::{RadialOperator, RadialSolution, SolverConfig};

/// Curvature weight `K(y) = |y|^{nα} e^{-μ|y|²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub alpha: f64,
    pub mu: f64,
}

impl WeightSpec {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        if !(alpha > -1.0) || !(mu >= 0.0) {
            return Err(Error::Domain(format!("weight needs alpha > -1 and mu >= 0, got {alpha}, {mu}")));
        }
        Ok(Self { alpha, mu })
    }

    pub fn describe(&self, n: u32) -> String {
        format!("|y|^({}) exp(-{}|y|^2)", n as f64 * self.alpha, self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevCheck {
    pub lambda_measured: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs|`.
    pub residual: f64,
    /// `|lhs - rhs| / Λ²`.
    pub relative_residual: f64,
    /// `(4μ/n) ∫ |x|^{nα+2} e^{-μ|x|²} e^{nη}`.
    pub mu_term: f64,
}

/// Share of an integral carried by the last panel above which the tail counts as unsettled.
const TAIL_SHARE: f64 = 1e-6;

fn settled_integral(f: &[f64], grid: &RadialGrid, n: u32, what: &str) -> Result<f64> {
    let total = integrate_radial(f, grid, n)?;
    let last = grid.panels.last().map(|p| p.first).unwrap_or(0);
    let mut tail = f.to_vec();
    tail[..last].iter_mut().for_each(|x| *x = 0.0);
    let tail = integrate_radial(&tail, grid, n)?;
    if !(tail.abs() <= TAIL_SHARE * total.abs()) {
        return Err(Error::Diagnostic(format!(
            "{what} has not settled at r_max = {}: last panel carries {:.3e} of {:.6e}",
            grid.r_max, tail, total
        )));
    }
    Ok(total)
}

/// Both sides of `Λ(Λ - 2γ_n)/γ_n = 2αΛ - (4μ/n) ∫ |x|^{nα+2} e^{-μ|x|²} e^{nη}`.
pub fn pohozaev_residual(eta: &[f64], weight: &WeightSpec, n: u32, grid: &RadialGrid) -> Result<PohozaevCheck> {
    if eta.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: eta.len() });
    }
    let consts = Constants::new(n)?;
    let nf = n as f64;
    let k: Vec<f64> = grid
        .nodes
        .iter()
        .zip(eta)
        .map(|(r, e)| (nf * weight.alpha * r.ln() - weight.mu * r * r + nf * e).exp())
        .collect();
    let lambda = settled_integral(&k, grid, n, "total curvature")?;
    let second: Vec<f64> = k.iter().zip(&grid.nodes).map(|(f, r)| f * r * r).collect();
    let moment = if weight.mu > 0.0 { settled_integral(&second, grid, n, "second moment")? } else { 0.0 };
    let g = consts.gamma_n;
    let lhs = lambda * (lambda - 2.0 * g) / g;
    let mu_term = 4.0 * weight.mu / nf * moment;
    let rhs = 2.0 * weight.alpha * lambda - mu_term;
    let residual = (lhs - rhs).abs();
    Ok(PohozaevCheck {
        lambda_measured: lambda,
        lhs,
        rhs,
        residual,
        relative_residual: residual / (lambda * lambda),
        mu_term,
    })
}

/// Minimum number of nodes in a slope-fit window.
pub const MIN_FIT_NODES: usize = 8;

/// `-slope` of the least-squares line of `v` against `log r` on `[r1, r2]`.
pub fn log_slope(radii: &[f64], v: &[f64], window: (f64, f64)) -> Result<f64> {
    if radii.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: radii.len(), got: v.len() });
    }
    let (r1, r2) = window;
    let (lo, hi) = (radii.first().copied().unwrap_or(0.0), radii.last().copied().unwrap_or(0.0));
    if !(r1 > 0.0 && r1 < r2) || r1 < lo || r2 > hi {
        return Err(Error::Usage(format!("fit window [{r1}, {r2}] is not inside the grid [{lo}, {hi}]")));
    }
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(v)
        .filter(|(r, _)| **r >= r1 && **r <= r2)
        .map(|(r, y)| (r.ln(), *y))
        .collect();
    if pts.len() < MIN_FIT_NODES {
        return Err(Error::Usage(format!(
            "fit window [{r1}, {r2}] holds {} nodes, need {MIN_FIT_NODES}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

/// Default slope-fit window `[0.3 r_max, 0.8 r_max]`.
pub fn default_fit_window(grid: &RadialGrid) -> (f64, f64) {
    (0.3 * grid.r_max, 0.8 * grid.r_max)
}

/// Nodes with `r ≥ 1` where `v(r) < -β log r - 1e-3 (1 + |log r|)`.
pub fn lower_bound_check(radii: &[f64], v: &[f64], beta: f64) -> usize {
    radii
        .iter()
        .zip(v)
        .filter(|(r, _)| **r >= 1.0)
        .filter(|(r, x)| {
            let l = r.ln();
            **x < -beta * l - 1e-3 * (1.0 + l.abs())
        })
        .count()
}

/// The potential of a radial solution with the kernel `log((1+|y|)/|x-y|)`:
/// `v + (1/γ_n) ∫ log(1+|y|) ρ(y) dy`, at the grid nodes.
pub fn normal_form_potential(sol: &RadialSolution) -> Result<Vec<f64>> {
    let n = sol.params.n;
    let weighted: Vec<f64> = sol.density.iter().zip(&sol.grid.nodes).map(|(d, r)| d * r.ln_1p()).collect();
    let shift = integrate_radial(&weighted, &sol.grid, n)? / sol.params.constants().gamma_n;
    Ok(sol.v.iter().map(|v| v + shift).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub lambda_measured: f64,
    pub beta_estimate: f64,
    /// `Λ_measured / γ_n`.
    pub beta_predicted: f64,
    pub fit_window: (f64, f64),
    pub pohozaev_lhs: f64,
    pub pohozaev_rhs: f64,
    pub pohozaev_residual: f64,
    pub pohozaev_relative_residual: f64,
    pub pohozaev_mu_term: f64,
    pub lower_bound_violations: usize,
}

/// All radial diagnostics for a converged solution of the Gaussian-weighted problem.
pub fn diagnose_radial(sol: &RadialSolution) -> Result<DiagnosticsReport> {
    let p = &sol.params;
    let w = sol.w();
    let poho = pohozaev_residual(&w, &WeightSpec::new(p.alpha, p.mu)?, p.n, &sol.grid)?;
    let window = default_fit_window(&sol.grid);
    let beta = log_slope(&sol.grid.nodes, &sol.v, window)?;
    let beta_predicted = poho.lambda_measured / p.constants().gamma_n;
    let vn = normal_form_potential(sol)?;
    let violations = lower_bound_check(&sol.grid.nodes, &vn, beta_predicted);
    Ok(DiagnosticsReport {
        lambda_measured: poho.lambda_measured,
        beta_estimate: beta,
        beta_predicted,
        fit_window: window,
        pohozaev_lhs: poho.lhs,
        pohozaev_rhs: poho.rhs,
        pohozaev_residual: poho.residual,
        pohozaev_relative_residual: poho.relative_residual,
        pohozaev_mu_term: poho.mu_term,
        lower_bound_violations: violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub lambda: f64,
    /// `Λ / Λ_1(1+α)`.
    pub fraction: f64,
    pub converged: bool,
    pub w0_final: f64,
    pub iterations: usize,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub n: u32,
    pub alpha: f64,
    pub critical_lambda: f64,
    pub rows: Vec<ScanRow>,
    /// Largest converged and smallest failed Λ, when both exist.
    pub transition: Option<(f64, f64)>,
    /// Every Λ below the threshold converged, every Λ above failed, and the
    /// transition brackets the threshold.
    pub brackets_threshold: bool,
    /// The dimension lies outside the range covered by the radial bound (n ∈ {3, 4}).
    pub beyond_proposition: bool,
}

/// Solve from `v ≡ 0` at each Λ of an increasing list.
pub fn threshold_scan(op: &RadialOperator, lambdas: &[f64], config: &SolverConfig) -> Result<ThresholdScan> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Usage("scan values must be nonempty and strictly increasing".into()));
    }
    let p = op.params;
    let crit = p.constants().critical_lambda(p.alpha);
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let row = match op.with_lambda(lambda).and_then(|o| o.solve(config, None)) {
            Ok(sol) => ScanRow {
                lambda,
                fraction: lambda / crit,
                converged: sol.converged,
                w0_final: sol.w0(),
                iterations: sol.iterations,
                reason: (!sol.converged).then(|| "max_iter".to_string()),
            },
            Err(e) => ScanRow {
                lambda,
                fraction: lambda / crit,
                converged: false,
                w0_final: match &e {
                    Error::BlowUp { peak, .. } => *peak,
                    _ => f64::NAN,
                },
                iterations: 0,
                reason: Some(e.reason_code().to_string()),
            },
        };
        log::info!("scan Λ/Λ_c = {:.4}: converged = {}, w0 = {:.4}", row.fraction, row.converged, row.w0_final);
        rows.push(row);
    }
    let last_conv = rows.iter().filter(|r| r.converged).map(|r| r.lambda).fold(f64::NAN, f64::max);
    let first_fail = rows.iter().filter(|r| !r.converged).map(|r| r.lambda).fold(f64::NAN, f64::min);
    let transition = (last_conv.is_finite() && first_fail.is_finite()).then_some((last_conv, first_fail));
    let consistent = rows.iter().all(|r| if r.lambda < crit { r.converged } else { !r.converged || r.lambda == crit });
    let brackets_threshold = consistent && matches!(transition, Some((a, b)) if a < crit && crit <= b);
    Ok(ThresholdScan {
        n: p.n,
        alpha: p.alpha,
        critical_lambda: crit,
        rows,
        transition,
        brackets_threshold,
        beyond_proposition: !(p.n == 3 || p.n == 4),
    })
}

/// Evenly spaced fractions of `Λ_1(1+α)` from `lo` to `hi` inclusive.
pub fn scan_fractions(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step).round() as usize;
    (0..=k).map(|i| lo + step * i as f64).collect()
}

pub fn problem_constants(params: &ProblemParams) -> (f64, f64, f64) {
    let c = params.constants();
    (c.gamma_n, c.lambda_1, c.critical_lambda(params.alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_radial_grid_with;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Graded grid reaching far enough for the algebraic tails of the 2D profiles.
    fn far_grid(alpha: f64) -> RadialGrid {
        let p = ProblemParams::new(2, alpha, 1.0).unwrap();
        build_radial_grid_with(&p, 1024, 1e5, None).unwrap()
    }

    fn spherical_2d(alpha: f64, r: f64) -> f64 {
        (2.0 * (alpha + 1.0) / (1.0 + r.powf(2.0 * (alpha + 1.0)))).ln()
    }

    #[test]
    fn slope_of_exact_logarithm() {
        let r: Vec<f64> = (1..100).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = r.iter().map(|x| -3.0 * x.ln()).collect();
        assert_relative_eq!(log_slope(&r, &v, (2.0, 40.0)).unwrap(), 3.0, max_relative = 1e-12);
        assert!(matches!(log_slope(&r, &v, (2.0, 400.0)), Err(Error::Usage(_))));
        assert!(matches!(log_slope(&r, &v, (2.0, 2.5)), Err(Error::Usage(_))));
    }

    #[test]
    fn slope_of_two_dimensional_profile() {
        let g = far_grid(0.0);
        let v: Vec<f64> = g.nodes.iter().map(|r| spherical_2d(0.0, *r)).collect();
        let beta = log_slope(&g.nodes, &v, (10.0, 50.0)).unwrap();
        assert!((beta - 2.0).abs() < 0.02 * 2.0, "{beta}");
    }

    #[test]
    fn lower_bound_examples() {
        let r: Vec<f64> = (1..50).map(|i| 0.5 + i as f64 * 0.25).collect();
        let exact: Vec<f64> = r.iter().map(|x| -2.0 * x.ln()).collect();
        assert_eq!(lower_bound_check(&r, &exact, 2.0), 0);
        let mut bad = exact.clone();
        bad[20] -= 1.0;
        assert_eq!(lower_bound_check(&r, &bad, 2.0), 1);
        let g = far_grid(0.0);
        let u: Vec<f64> = g.nodes.iter().map(|x| spherical_2d(0.0, *x)).collect();
        assert_eq!(lower_bound_check(&g.nodes, &u, 2.0), 0);
    }

    #[test]
    fn pohozaev_equality_for_two_dimensional_profiles() {
        for alpha in [0.0, 1.0] {
            let g = far_grid(alpha);
            let eta: Vec<f64> = g.nodes.iter().map(|r| spherical_2d(alpha, *r)).collect();
            let c = pohozaev_residual(&eta, &WeightSpec::new(alpha, 0.0).unwrap(), 2, &g).unwrap();
            assert_relative_eq!(c.lambda_measured, 4.0 * PI * (1.0 + alpha), max_relative = 1e-8);
            assert!(c.residual < 1e-5, "alpha={alpha}: {c:?}");
            assert_relative_eq!(c.rhs, 2.0 * alpha * c.lambda_measured, max_relative = 1e-14);
        }
    }

    #[test]
    fn unsettled_tail_is_reported() {
        let p = ProblemParams::new(2, 0.0, 1.0).unwrap();
        let g = crate::quadrature::build_radial_grid(&p, 128, 5.0).unwrap();
        let eta: Vec<f64> = g.nodes.iter().map(|r| spherical_2d(0.0, *r)).collect();
        let out = pohozaev_residual(&eta, &WeightSpec::new(0.0, 0.0).unwrap(), 2, &g);
        assert!(matches!(out, Err(Error::Diagnostic(_))));
    }

    #[test]
    fn weight_spec_validation() {
        assert!(WeightSpec::new(-1.0, 0.0).is_err());
        assert!(WeightSpec::new(0.0, -1.0).is_err());
        assert!(WeightSpec::new(0.5, 3.0).unwrap().describe(3).contains("1.5"));
    }

    #[test]
    fn scan_fraction_grid() {
        let f = scan_fractions(0.9, 1.1, 0.02);
        assert_eq!(f.len(), 11);
        assert_relative_eq!(f[10], 1.1, max_relative = 1e-12);
    }
}
