//! Radial solutions via the Gaussian ansatz `u = v - |x|² + c`.
//!
//! `v` is a fixed point of
//! `T(v)(x) = (1/γ_n) ∫ log(1/|x-y|) |y|^{nα} e^{-n|y|²} e^{n(v(y)+c_v)} dy`,
//! where `c_v` enforces the volume constraint. Solutions are found by damped Picard
//! iteration; Λ-continuation toward `Λ_1(1+α)` then produces concentrating profiles
//! whose rescalings approach a normal solution.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::ProblemParams;
use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::kernel::{apply_into, KernelCache, KernelMatrix, KernelOptions, KernelVariant};
use crate::quadrature::{integrate_radial, RadialGrid};

/// Damped fixed-point iteration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// `w(0)` above this value is reported as blow-up.
    pub ceiling: f64,
    /// Also report blow-up once the peak width `e^{-w(0)/(1+α)}` drops below the
    /// first grid panel, where the grid can no longer represent it.
    pub resolution_guard: bool,
    /// Factor by which the damping recovers after each step that lowered the
    /// residual, capped at `damping` (1 disables recovery).
    pub recovery: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { damping: 0.5, tol: 1e-9, max_iter: 20_000, ceiling: 40.0, resolution_guard: true, recovery: 1.25 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.recovery >= 1.0) {
            return Err(Error::Config(format!("damping recovery must be >= 1, got {}", self.recovery)));
        }
        if !(self.ceiling > 0.0) {
            return Err(Error::Config(format!("blow-up ceiling must be positive, got {}", self.ceiling)));
        }
        Ok(())
    }
}

const MIN_DAMPING: f64 = 1e-3;

/// Halve the damping when the residual grew, otherwise let it recover.
pub(crate) fn adapt_damping(theta: f64, residual: f64, previous: f64, config: &SolverConfig) -> f64 {
    if residual > previous {
        (0.5 * theta).max(MIN_DAMPING)
    } else {
        (theta * config.recovery).min(config.damping)
    }
}

/// One iteration of a fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub residual: f64,
    pub c_v: f64,
    pub w0: f64,
    pub damping: f64,
}

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub grid: RadialGrid,
    /// `v` at the grid nodes.
    pub v: Vec<f64>,
    /// `v(0)`.
    pub v0: f64,
    pub c_v: f64,
    /// `u = v - r² + c_v` at the grid nodes.
    pub u: Vec<f64>,
    /// `r^{nα} e^{n u}` at the grid nodes.
    pub density: Vec<f64>,
    pub residual_sup: f64,
    pub update_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
}

impl RadialSolution {
    /// Peak `w(0) = v(0) + c_v`.
    pub fn w0(&self) -> f64 {
        self.v0 + self.c_v
    }

    /// `w = v + c_v` at the nodes.
    pub fn w(&self) -> Vec<f64> {
        self.v.iter().map(|v| v + self.c_v).collect()
    }

    /// Discrete total curvature `∫ |y|^{nα} e^{nu} dy`.
    pub fn volume(&self) -> f64 {
        integrate_radial(&self.density, &self.grid, self.params.n).unwrap_or(f64::NAN)
    }

    /// Rows of `(r, v, u, density)`, origin first.
    pub fn profile_rows(&self) -> Vec<[f64; 4]> {
        let p = &self.params;
        let dens0 = if p.alpha == 0.0 { (p.n as f64 * self.w0()).exp() } else if p.alpha > 0.0 { 0.0 } else { f64::INFINITY };
        let mut rows = vec![[0.0, self.v0, self.w0(), dens0]];
        for i in 0..self.grid.len() {
            rows.push([self.grid.nodes[i], self.v[i], self.u[i], self.density[i]]);
        }
        rows
    }
}

/// `log` of the per-node factor `|S^{n-1}| w_i r_i^{n-1} r_i^{nα} e^{-μ r_i²}`.
fn log_measure(params: &ProblemParams, grid: &RadialGrid) -> Vec<f64> {
    let n = params.n as f64;
    grid.volume_weights(params.n)
        .iter()
        .zip(&grid.nodes)
        .map(|(vw, r)| vw.ln() + n * params.alpha * r.ln() - params.mu * r * r)
        .collect()
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn check_len(v: &[f64], grid: &RadialGrid) -> Result<()> {
    if v.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: v.len() });
    }
    Ok(())
}

fn normalize_with(v: &[f64], params: &ProblemParams, logm: &[f64], grid: &RadialGrid) -> Result<f64> {
    let n = params.n as f64;
    if let Some(i) = v.iter().position(|x| x.is_nan()) {
        return Err(Error::NonFinite { index: i, radius: grid.nodes[i], value: v[i] });
    }
    let log_i = log_sum_exp(logm.iter().zip(v).map(|(l, x)| l + n * x));
    if log_i == f64::INFINITY {
        return Err(Error::BlowUp { peak: f64::INFINITY, ceiling: f64::INFINITY });
    }
    if log_i == f64::NEG_INFINITY {
        return Err(Error::Domain("weighted volume integral vanishes".into()));
    }
    Ok((params.lambda.ln() - log_i) / n)
}

/// `c_v = (1/n) log(Λ / I(v))` with `I(v) = ∫ |y|^{nα} e^{-μ|y|²} e^{nv} dy`, evaluated
/// in log space so that large `v` does not overflow.
pub fn normalize_c(v: &[f64], params: &ProblemParams, grid: &RadialGrid) -> Result<f64> {
    check_len(v, grid)?;
    normalize_with(v, params, &log_measure(params, grid), grid)
}

/// `|y|^{nα} e^{-μ|y|²} e^{n(v + c)}` at the nodes.
pub fn weighted_density(v: &[f64], c: f64, params: &ProblemParams, grid: &RadialGrid) -> Vec<f64> {
    let n = params.n as f64;
    grid.nodes
        .iter()
        .zip(v)
        .map(|(r, x)| (n * params.alpha * r.ln() - params.mu * r * r + n * (x + c)).exp())
        .collect()
}

/// One application of the radial operator, evaluated at the kernel's targets.
pub fn apply_t(v: &[f64], params: &ProblemParams, grid: &RadialGrid, kernel: &KernelMatrix) -> Result<Vec<f64>> {
    check_len(v, grid)?;
    if kernel.cols != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: kernel.cols });
    }
    let c = normalize_c(v, params, grid)?;
    let dens = weighted_density(v, c, params, grid);
    kernel.apply(&dens)
}

/// Precomputed pieces for repeated radial solves on one grid.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub params: ProblemParams,
    pub grid: RadialGrid,
    /// Targets `[0, r_1, ..., r_m]`.
    pub kernel: Arc<KernelMatrix>,
    log_measure: Vec<f64>,
    /// `log(r^{nα} e^{-μ r²})` at the nodes.
    log_weight: Vec<f64>,
}

impl RadialOperator {
    pub fn new(params: ProblemParams, grid: RadialGrid, cache: &mut KernelCache, options: &KernelOptions) -> Result<Self> {
        params.validate()?;
        let targets = origin_and_nodes(&grid);
        let mats = cache.get(&grid, &targets, params.n, 0, KernelVariant::Plain, options)?;
        let kernel = Arc::new(mats[0].clone());
        let log_measure = log_measure(&params, &grid);
        let n = params.n as f64;
        let log_weight = grid.nodes.iter().map(|r| n * params.alpha * r.ln() - params.mu * r * r).collect();
        Ok(Self { params, grid, kernel, log_measure, log_weight })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let params = self.params.with_lambda(lambda)?;
        Ok(Self { params, ..self.clone() })
    }

    /// Largest `w(0)` whose peak width `r_k` still covers the first panel.
    pub fn resolution_ceiling(&self) -> f64 {
        let r_res = self.grid.panels[0].r_end();
        (1.0 + self.params.alpha) * (1.0 / r_res).ln()
    }

    pub fn effective_ceiling(&self, config: &SolverConfig) -> f64 {
        if config.resolution_guard {
            config.ceiling.min(self.resolution_ceiling())
        } else {
            config.ceiling
        }
    }

    /// `(T(v) at the origin, T(v) at the nodes, c_v)`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<(f64, f64)> {
        check_len(v, &self.grid)?;
        let c = normalize_with(v, &self.params, &self.log_measure, &self.grid)?;
        let n = self.params.n as f64;
        let dens: Vec<f64> = self.log_weight.iter().zip(v).map(|(l, x)| (l + n * (x + c)).exp()).collect();
        let mut full = vec![0.0; self.kernel.rows];
        apply_into(&self.kernel, &dens, &mut full);
        out.copy_from_slice(&full[1..]);
        Ok((full[0], c))
    }

    /// Damped Picard iteration from `initial` (zero if absent).
    pub fn solve(&self, config: &SolverConfig, initial: Option<&[f64]>) -> Result<RadialSolution> {
        config.validate()?;
        let m = self.grid.len();
        let mut v = match initial {
            Some(v0) => {
                check_len(v0, &self.grid)?;
                v0.to_vec()
            }
            None => vec![0.0; m],
        };
        let mut tv = vec![0.0; m];
        let mut theta = config.damping;
        let mut prev_res = f64::INFINITY;
        let mut trace = Vec::new();
        let mut v0 = 0.0;
        let mut c = 0.0;
        let mut residual = f64::INFINITY;
        let mut update = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        let ceiling = self.effective_ceiling(config);
        for it in 1..=config.max_iter {
            iterations = it;
            let (t0, cv) = self.apply(&v, &mut tv)?;
            c = cv;
            residual = v.iter().zip(&tv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let w0 = t0 + c;
            trace.push(TraceRecord { iteration: it, residual, c_v: c, w0, damping: theta });
            log::trace!("iter {it}: residual {residual:.3e} c_v {c:.6} w0 {w0:.6} theta {theta}");
            if !w0.is_finite() || w0 > ceiling {
                log::debug!("blow-up after {it} iterations: w0 = {w0}");
                return Err(Error::BlowUp { peak: w0, ceiling });
            }
            v0 = t0;
            update = theta * residual;
            if residual < config.tol {
                converged = true;
                break;
            }
            if it == config.max_iter {
                break;
            }
            theta = adapt_damping(theta, residual, prev_res, config);
            prev_res = residual;
            for (a, b) in v.iter_mut().zip(&tv) {
                *a += theta * (b - *a);
            }
        }
        let n = self.params.n as f64;
        let u: Vec<f64> = v.iter().zip(&self.grid.nodes).map(|(x, r)| x - r * r + c).collect();
        let density: Vec<f64> = u
            .iter()
            .zip(&self.grid.nodes)
            .map(|(x, r)| (n * self.params.alpha * r.ln() + n * x).exp())
            .collect();
        Ok(RadialSolution {
            params: self.params,
            grid: self.grid.clone(),
            v,
            v0,
            c_v: c,
            u,
            density,
            residual_sup: residual,
            update_sup: update,
            iterations,
            converged,
            trace,
        })
    }
}

fn origin_and_nodes(grid: &RadialGrid) -> Vec<f64> {
    std::iter::once(0.0).chain(grid.nodes.iter().copied()).collect()
}

/// Solve at `params` on `grid` with a fresh kernel.
pub fn solve_fixed_point(
    params: &ProblemParams,
    grid: &RadialGrid,
    config: &SolverConfig,
    initial: Option<&[f64]>,
) -> Result<RadialSolution> {
    let op = RadialOperator::new(*params, grid.clone(), &mut KernelCache::new(), &KernelOptions::default())?;
    op.solve(config, initial)
}

/// Outcome of one continuation step.
#[derive(Debug, Clone)]
pub struct SweepStep {
    pub lambda: f64,
    pub result: std::result::Result<RadialSolution, Error>,
}

impl SweepStep {
    pub fn peak(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|s| s.w0())
    }
}

/// Solve along an increasing list of Λ values, warm-starting each step.
pub fn continuation_sweep(op: &RadialOperator, lambdas: &[f64], config: &SolverConfig) -> Result<Vec<SweepStep>> {
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Usage("continuation values must be strictly increasing".into()));
    }
    let crit = op.params.constants().critical_lambda(op.params.alpha);
    if let Some(l) = lambdas.iter().find(|l| **l >= crit) {
        return Err(Error::Usage(format!("continuation value {l} is not below the threshold {crit}")));
    }
    let mut steps = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in lambdas {
        let result = op.with_lambda(lambda).and_then(|o| o.solve(config, warm.as_deref()));
        match &result {
            Ok(sol) => {
                log::info!(
                    "sweep Λ = {lambda:.9}: converged = {}, w0 = {:.6}, residual = {:.3e}",
                    sol.converged,
                    sol.w0(),
                    sol.residual_sup
                );
                if sol.converged {
                    warm = Some(sol.v.clone());
                }
            }
            Err(e) => log::warn!("sweep Λ = {lambda:.9}: {e}"),
        }
        steps.push(SweepStep { lambda, result });
    }
    Ok(steps)
}

/// A solution zoomed into its peak: `η(x) = w(r_k x) - w(0)`, `r_k^{1+α} = e^{-w(0)}`.
#[derive(Debug, Clone)]
pub struct BlowupProfile {
    /// The solution grid scaled by `1/r_k`; `eta[i] = η(grid.nodes[i])`.
    pub grid: RadialGrid,
    pub eta: Vec<f64>,
    pub r_k: f64,
    pub source_peak: f64,
    pub alpha: f64,
    pub n: u32,
    interp: Pchip,
}

impl BlowupProfile {
    /// η at radius `x` (monotone cubic in `x`, through `η(0) = 0`).
    pub fn eta_at(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        self.interp.eval(x)
    }

    /// `∫ |x|^{nα} e^{nη} dx` over the rescaled grid.
    pub fn total_curvature(&self) -> Result<f64> {
        let n = self.n as f64;
        let f: Vec<f64> = self
            .grid
            .nodes
            .iter()
            .zip(&self.eta)
            .map(|(x, e)| (n * self.alpha * x.ln() + n * e).exp())
            .collect();
        integrate_radial(&f, &self.grid, self.n)
    }
}

pub fn rescale_blowup(solution: &RadialSolution) -> Result<BlowupProfile> {
    let w0 = solution.w0();
    if !(w0 > 0.0) {
        return Err(Error::Precondition(format!("rescaling needs w(0) > 0, got {w0}")));
    }
    let alpha = solution.params.alpha;
    let r_k = (-w0 / (1.0 + alpha)).exp();
    let grid = solution.grid.scaled(1.0 / r_k)?;
    let eta: Vec<f64> = solution.v.iter().map(|v| v - solution.v0).collect();
    let xs = origin_and_nodes(&grid);
    let ys: Vec<f64> = std::iter::once(0.0).chain(eta.iter().copied()).collect();
    let interp = Pchip::new(xs, ys)?;
    Ok(BlowupProfile { grid, eta, r_k, source_peak: w0, alpha, n: solution.params.n, interp })
}

/// The last rescaled profile of a sweep, checked against the normal-solution equation.
#[derive(Debug, Clone)]
pub struct NormalProfile {
    pub profile: BlowupProfile,
    /// Least-squares constant `c` in `η = potential + c`.
    pub c: f64,
    pub normality_residual: f64,
    pub total_curvature: f64,
    pub test_radius: f64,
}

/// Radius (in rescaled units) up to which normality is tested.
pub const NORMALITY_TEST_RADIUS: f64 = 5.0;

pub fn extract_normal_solution(steps: &[SweepStep], min_peak: f64, options: &KernelOptions) -> Result<NormalProfile> {
    let last = steps
        .iter()
        .rev()
        .find_map(|s| s.result.as_ref().ok().filter(|r| r.converged))
        .ok_or_else(|| Error::Diagnostic("sweep has no converged step".into()))?;
    if last.w0() < min_peak {
        return Err(Error::Diagnostic(format!(
            "sweep too short: final peak w(0) = {:.4} is below {min_peak}",
            last.w0()
        )));
    }
    let profile = rescale_blowup(last)?;
    let (c, residual) = normality_residual(&profile.grid, &profile.eta, 0.0, profile.n, profile.alpha, NORMALITY_TEST_RADIUS, options)?;
    let total_curvature = profile.total_curvature()?;
    Ok(NormalProfile { profile, c, normality_residual: residual, total_curvature, test_radius: NORMALITY_TEST_RADIUS })
}

/// Sup over targets `{0} ∪ {nodes ≤ test_radius}` of
/// `|f - (1/γ_n)∫ log((1+|y|)/|x-y|) |y|^{nα} e^{nf} dy - c|`, with `c` the
/// least-squares constant. `f0` is the value of `f` at the origin.
pub fn normality_residual(
    grid: &RadialGrid,
    f: &[f64],
    f0: f64,
    n: u32,
    alpha: f64,
    test_radius: f64,
    options: &KernelOptions,
) -> Result<(f64, f64)> {
    check_len(f, grid)?;
    let k = grid.nodes.partition_point(|r| *r <= test_radius);
    let targets: Vec<f64> = std::iter::once(0.0).chain(grid.nodes[..k].iter().copied()).collect();
    let mut cache = KernelCache::new();
    let a = cache.get(grid, &targets, n, 0, KernelVariant::Normal, options)?;
    let nf = n as f64;
    let dens: Vec<f64> = grid.nodes.iter().zip(f).map(|(r, x)| (nf * alpha * r.ln() + nf * x).exp()).collect();
    let pot = a[0].apply(&dens)?;
    let vals: Vec<f64> = std::iter::once(f0).chain(f[..k].iter().copied()).collect();
    let diffs: Vec<f64> = vals.iter().zip(&pot).map(|(x, p)| x - p).collect();
    let c = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let res = diffs.iter().map(|d| (d - c).abs()).fold(0.0, f64::max);
    Ok((c, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{lambda_1, Constants};
    use crate::quadrature::{build_radial_grid, default_r_max};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn setup(n: u32, alpha: f64, frac: f64, m: usize) -> RadialOperator {
        let crit = Constants::new(n).unwrap().critical_lambda(alpha);
        let p = ProblemParams::new(n, alpha, frac * crit).unwrap();
        let g = build_radial_grid(&p, m, default_r_max(&p)).unwrap();
        RadialOperator::new(p, g, &mut KernelCache::new(), &KernelOptions::default()).unwrap()
    }

    #[test]
    fn normalize_c_examples() {
        let p = ProblemParams::new(2, 0.0, 4.0 * PI).unwrap();
        let g = build_radial_grid(&p, 256, default_r_max(&p)).unwrap();
        let c = normalize_c(&vec![0.0; 256], &p, &g).unwrap();
        assert_relative_eq!(c, 0.5 * 8f64.ln(), max_relative = 1e-11);
        // I(v) = Λ gives c = 0
        let p1 = p.with_lambda(PI / 2.0).unwrap();
        assert!(normalize_c(&vec![0.0; 256], &p1, &g).unwrap().abs() < 1e-11);
        // I(v) = e³ Λ in n = 3 gives c = -1
        let p3 = ProblemParams::new(3, 0.0, 1.0).unwrap();
        let g3 = build_radial_grid(&p3, 256, default_r_max(&p3)).unwrap();
        let i0 = integrate_radial(&weighted_density(&vec![0.0; 256], 0.0, &p3, &g3), &g3, 3).unwrap();
        let shift = (3.0 - i0.ln()) / 3.0;
        let c3 = normalize_c(&vec![shift; 256], &p3, &g3).unwrap();
        assert!((c3 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_c_huge_values_do_not_overflow() {
        let p = ProblemParams::new(3, 0.0, 1.0).unwrap();
        let g = build_radial_grid(&p, 64, 4.0).unwrap();
        let c = normalize_c(&vec![500.0; 64], &p, &g).unwrap();
        assert!(c.is_finite() && c < -499.0);
        assert!(matches!(normalize_c(&vec![f64::NEG_INFINITY; 64], &p, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn volume_is_exact_after_normalisation() {
        let op = setup(3, 0.0, 0.5, 128);
        let v: Vec<f64> = op.grid.nodes.iter().map(|r| 2.0 / (1.0 + r * r)).collect();
        let c = normalize_c(&v, &op.params, &op.grid).unwrap();
        let vol = integrate_radial(&weighted_density(&v, c, &op.params, &op.grid), &op.grid, 3).unwrap();
        assert_relative_eq!(vol, op.params.lambda, max_relative = 1e-12);
    }

    #[test]
    fn operator_output_is_decreasing_with_log_far_field() {
        let op = setup(3, 0.0, 0.5, 128);
        let v: Vec<f64> = op.grid.nodes.iter().map(|r| (3.0 * r).sin()).collect();
        let mut out = vec![0.0; 128];
        let (t0, _) = op.apply(&v, &mut out).unwrap();
        assert!(out[0] <= t0 + 1e-10);
        assert!(out.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        // far from the bulk the potential is -(Λ/γ) log s + O(1/s²)
        let beta = op.params.lambda / op.params.constants().gamma_n;
        let k = op.grid.len() - 1;
        let (s1, s2) = (op.grid.nodes[k - 20], op.grid.nodes[k]);
        let slope = (out[k] - out[k - 20]) / (s2.ln() - s1.ln());
        assert!((slope + beta).abs() < 1e-2 * beta, "{slope} {beta}");
    }

    #[test]
    fn free_function_matches_operator() {
        let op = setup(3, 0.0, 0.5, 64);
        let v: Vec<f64> = op.grid.nodes.iter().map(|r| -r).collect();
        let mut out = vec![0.0; 64];
        op.apply(&v, &mut out).unwrap();
        let nodes_kernel = crate::kernel::assemble_kernel_matrix(&op.grid, &op.grid.nodes, 3, KernelVariant::Plain).unwrap();
        let direct = apply_t(&v, &op.params, &op.grid, &nodes_kernel).unwrap();
        for (a, b) in out.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn subcritical_solves_converge() {
        let cfg = SolverConfig { tol: 1e-8, ..SolverConfig::default() };
        let sol = setup(3, 0.0, 0.5, 256).solve(&cfg, None).unwrap();
        assert!(sol.converged, "residual {}", sol.residual_sup);
        assert_relative_eq!(sol.volume(), sol.params.lambda, max_relative = 1e-12);
        assert!(sol.v.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        assert!(sol.trace.len() == sol.iterations);

        let p2 = setup(2, 0.0, 0.9, 256).solve(&cfg, None).unwrap();
        assert!(p2.converged);
    }

    #[test]
    fn rescale_examples() {
        let mut sol = setup(3, 0.0, 0.5, 64).solve(&SolverConfig::default(), None).unwrap();
        sol.c_v = 10f64.ln() - sol.v0;
        let b = rescale_blowup(&sol).unwrap();
        assert_relative_eq!(b.r_k, 0.1, max_relative = 1e-14);
        assert_eq!(b.eta_at(0.0), 0.0);
        sol.c_v = -sol.v0;
        assert!(matches!(rescale_blowup(&sol), Err(Error::Precondition(_))));
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let op = setup(3, 0.0, 0.5, 64);
        let l1 = lambda_1(3).unwrap();
        let cfg = SolverConfig::default();
        assert!(continuation_sweep(&op, &[0.5 * l1, 0.4 * l1], &cfg).is_err());
        assert!(continuation_sweep(&op, &[0.5 * l1, 1.1 * l1], &cfg).is_err());
    }
}
