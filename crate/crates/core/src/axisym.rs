//! Solutions symmetric about the `x_1` axis, with the tilt term `v* x_1`.
//!
//! The fixed-point map is
//! `T(v)(x) = (1/γ_n) ∫ log((1+|y|)/|x-y|) |y|^{nα} e^{-n|y|²} e^{n(v+c_v)} dy + v* x_1`,
//! `v* = sup_{|x|≤1} e^{2(v+c_v)/(1+α)}`.
//!
//! Fields are sampled on spherical coordinates `(r, t = cos θ)`, `θ` measured from the
//! positive `x_1` axis: `r` on a graded [`RadialGrid`], `t` on Gauss–Jacobi nodes for
//! the weight `(1-t²)^{(n-3)/2}`. Potentials are computed mode by mode: the density
//! is expanded in zonal polynomials `P_L(t)`, and by the Funk–Hecke formula each
//! mode's potential is a one-dimensional integral handled by the mode kernels of
//! [`crate::kernel`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::ProblemParams;
use crate::error::{Error, Result};
use crate::kernel::angular::zonal_polynomials;
use crate::kernel::{apply_into, sphere_log_moments, AngularRule, KernelCache, KernelMatrix, KernelOptions, KernelVariant};
use crate::quadrature::gauss::gauss_jacobi;
use crate::quadrature::RadialGrid;
use crate::radial::{adapt_damping, SolverConfig, TraceRecord};

/// Average over `φ ∈ S^{n-2}` of `log|p - q|` for `p = (s_1, σ e)`, `q = (t_1, τ ω)`:
/// the cross-sectional average of the log kernel between two axially symmetric rings.
pub fn axisym_kernel_mean(p: (f64, f64), q: (f64, f64), n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("ring averages need n >= 3, got {n}")));
    }
    let (s1, sigma) = p;
    let (t1, tau) = q;
    if !(sigma >= 0.0 && tau >= 0.0) {
        return Err(Error::Domain("ring radii must be nonnegative".into()));
    }
    let d2 = (s1 - t1) * (s1 - t1);
    if sigma == 0.0 && tau == 0.0 && d2 == 0.0 {
        return Err(Error::Domain("coincident points on the axis".into()));
    }
    if n == 3 {
        let a = (d2 + (sigma - tau) * (sigma - tau)).sqrt();
        let b = (d2 + (sigma + tau) * (sigma + tau)).sqrt();
        return Ok((0.5 * (a + b)).ln());
    }
    let mut out = [0.0];
    sphere_log_moments(sigma, tau, d2, n - 1, &AngularRule::default(), &mut out)?;
    Ok(out[0])
}

/// `max e^{2(v+c_v)/(1+α)}` over samples with `|x| ≤ 1`. `samples` pairs each value
/// of `v` with `|x|`.
pub fn compute_v_star(samples: impl IntoIterator<Item = (f64, f64)>, c_v: f64, alpha: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::Domain(format!("alpha must be > -1, got {alpha}")));
    }
    let k = 2.0 / (1.0 + alpha);
    let best = samples
        .into_iter()
        .filter(|(_, r)| *r <= 1.0)
        .map(|(v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::Config("no grid point inside the unit ball".into()));
    }
    Ok((k * (best + c_v)).exp())
}

/// Product grid in `(r, t)`.
#[derive(Debug, Clone)]
pub struct AxisymGrid {
    pub radial: RadialGrid,
    /// Polar nodes `t_j = cos θ_j`, ascending and symmetric about 0.
    pub t_nodes: Vec<f64>,
    /// Gauss–Jacobi weights for `(1-t²)^{(n-3)/2}`.
    pub t_weights: Vec<f64>,
    pub l_max: usize,
}

impl AxisymGrid {
    pub fn new(radial: RadialGrid, polar_nodes: usize, l_max: usize, n: u32) -> Result<Self> {
        if polar_nodes < 4 {
            return Err(Error::Config(format!("need at least 4 polar nodes, got {polar_nodes}")));
        }
        if l_max >= polar_nodes {
            return Err(Error::Config(format!(
                "mode cutoff {l_max} must be below the polar node count {polar_nodes}"
            )));
        }
        let a = (n as f64 - 3.0) / 2.0;
        let rule = gauss_jacobi(polar_nodes, a, a);
        Ok(Self { radial, t_nodes: rule.nodes, t_weights: rule.weights, l_max })
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.t_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn polar(&self) -> usize {
        self.t_nodes.len()
    }

    /// `(x_1, ρ)` of sample `(i, j)`.
    pub fn cylindrical(&self, i: usize, j: usize) -> (f64, f64) {
        let r = self.radial.nodes[i];
        let t = self.t_nodes[j];
        (r * t, r * (1.0 - t * t).max(0.0).sqrt())
    }

    /// Volume element of each sample, `|S^{n-2}| r^{n-1} w_i τ_j`, row-major in `(i, j)`.
    pub fn volume_weights(&self, n: u32) -> Vec<f64> {
        let vw = self.radial.volume_weights(n);
        let total: f64 = self.t_weights.iter().sum();
        let mut out = Vec::with_capacity(self.len());
        for w in &vw {
            for tw in &self.t_weights {
                out.push(w * tw / total);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxisymConfig {
    pub polar_nodes: usize,
    /// Highest zonal mode kept; defaults to `polar_nodes - 1`.
    pub l_max: Option<usize>,
    /// Keep the `v* x_1` term; switching it off gives the radial problem back.
    pub tilt: bool,
}

impl Default for AxisymConfig {
    fn default() -> Self {
        Self { polar_nodes: 96, l_max: None, tilt: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisymField {
    pub params: ProblemParams,
    #[serde(skip)]
    pub grid: Option<AxisymGrid>,
    /// `v` at `(r_i, t_j)`, row-major.
    pub v: Vec<f64>,
    /// `v(0)`.
    pub v0: f64,
    pub c_v: f64,
    pub v_star: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `sup |v(x)| / (1 + |x|)` over the samples.
    pub weighted_norm: f64,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl AxisymField {
    fn grid(&self) -> &AxisymGrid {
        self.grid.as_ref().expect("field carries its grid")
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.grid().polar() + j]
    }

    /// `sup |v(x_1, ρ) - v(-x_1, ρ)|`.
    pub fn axial_asymmetry(&self) -> f64 {
        let g = self.grid();
        let nt = g.polar();
        let mut worst: f64 = 0.0;
        for i in 0..g.radial.len() {
            for j in 0..nt / 2 {
                worst = worst.max((self.at(i, j) - self.at(i, nt - 1 - j)).abs());
            }
        }
        worst
    }

    /// `|y|^{nα} e^{n(v - |y|² + c_v)}` at the samples.
    pub fn density(&self) -> Vec<f64> {
        let g = self.grid();
        let n = self.params.n as f64;
        let mut out = Vec::with_capacity(self.v.len());
        for (i, r) in g.radial.nodes.iter().enumerate() {
            for j in 0..g.polar() {
                let w = self.at(i, j) + self.c_v;
                out.push((n * self.params.alpha * r.ln() - n * r * r + n * w).exp());
            }
        }
        out
    }

    pub fn volume(&self) -> f64 {
        let g = self.grid();
        self.density().iter().zip(g.volume_weights(self.params.n)).map(|(d, w)| d * w).sum()
    }

    /// Rows `(x1, rho, v, u, density)` in sample order.
    pub fn field_rows(&self) -> Vec<[f64; 5]> {
        let g = self.grid();
        let dens = self.density();
        let mut rows = Vec::with_capacity(self.v.len());
        for i in 0..g.radial.len() {
            let r = g.radial.nodes[i];
            for j in 0..g.polar() {
                let (x1, rho) = g.cylindrical(i, j);
                let v = self.at(i, j);
                rows.push([x1, rho, v, v - r * r + self.c_v, dens[i * g.polar() + j]]);
            }
        }
        rows
    }

    /// `(v - v* x_1) / log|x|` at the two outermost samples on the positive axis.
    pub fn far_field_ratios(&self) -> [f64; 2] {
        let g = self.grid();
        let m = g.radial.len();
        let j = g.polar() - 1;
        let ratio = |i: usize| {
            let (x1, _) = g.cylindrical(i, j);
            let r = g.radial.nodes[i];
            (self.at(i, j) - self.v_star * x1) / r.ln()
        };
        [ratio(m - 2), ratio(m - 1)]
    }

    /// Terms of the tilted Pohozaev balance, reported without asserting an identity:
    /// `Λ(Λ - Λ_1)`, `(2/n) ∫ (x·∇K) e^{n(v+c_v)}`, and `∫ x_1 K e^{n(v+c_v)}`.
    pub fn pohozaev_components(&self) -> PohozaevComponents {
        let g = self.grid();
        let n = self.params.n;
        let consts = self.params.constants();
        let dens = self.density();
        let vw = g.volume_weights(n);
        let (mut lambda, mut second, mut first) = (0.0, 0.0, 0.0);
        for i in 0..g.radial.len() {
            let r = g.radial.nodes[i];
            for j in 0..g.polar() {
                let k = i * g.polar() + j;
                let m = dens[k] * vw[k];
                lambda += m;
                second += r * r * m;
                first += r * g.t_nodes[j] * m;
            }
        }
        PohozaevComponents {
            lambda_term: lambda * (lambda - consts.lambda_1),
            weight_term: 2.0 * self.params.alpha * lambda - 4.0 * second,
            tilt_moment: first,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevComponents {
    pub lambda_term: f64,
    pub weight_term: f64,
    pub tilt_moment: f64,
}

/// Precomputed mode kernels and polar tables for one grid.
#[derive(Debug, Clone)]
pub struct AxisymOperator {
    pub params: ProblemParams,
    pub grid: AxisymGrid,
    /// Mode kernels with targets `[0, r_1, ..., r_m]`.
    pub kernels: Arc<Vec<KernelMatrix>>,
    pub tilt: bool,
    /// `P_L(t_j)`, indexed `[j][L]`.
    zonal: Vec<Vec<f64>>,
    /// `Σ_j τ_j P_L(t_j)²`.
    zonal_norms: Vec<f64>,
    log_measure: Vec<f64>,
    log_weight: Vec<f64>,
}

/// The state vector stores `v(0)` first, then the samples row-major.
pub type AxisymState = Vec<f64>;

impl AxisymOperator {
    pub fn new(
        params: ProblemParams,
        radial: RadialGrid,
        config: &AxisymConfig,
        cache: &mut KernelCache,
        options: &KernelOptions,
    ) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let l_max = config.l_max.unwrap_or(config.polar_nodes.saturating_sub(1));
        let grid = AxisymGrid::new(radial, config.polar_nodes, l_max, n)?;
        let targets: Vec<f64> = std::iter::once(0.0).chain(grid.radial.nodes.iter().copied()).collect();
        let kernels = cache.get(&grid.radial, &targets, n, l_max, KernelVariant::Normal, options)?;
        let zonal: Vec<Vec<f64>> = grid
            .t_nodes
            .iter()
            .map(|t| {
                let mut p = vec![0.0; l_max + 1];
                zonal_polynomials(n, *t, &mut p);
                p
            })
            .collect();
        let zonal_norms = (0..=l_max)
            .map(|l| zonal.iter().zip(&grid.t_weights).map(|(p, w)| w * p[l] * p[l]).sum())
            .collect();
        let nf = n as f64;
        let log_measure = grid.volume_weights(n).iter().map(|w| w.ln()).collect();
        let log_weight = grid
            .radial
            .nodes
            .iter()
            .map(|r| nf * params.alpha * r.ln() - nf * r * r)
            .collect();
        Ok(Self { params, grid, kernels, tilt: config.tilt, zonal, zonal_norms, log_measure, log_weight })
    }

    pub fn state_len(&self) -> usize {
        1 + self.grid.len()
    }

    fn normalize(&self, state: &[f64]) -> Result<f64> {
        let n = self.params.n as f64;
        let nt = self.grid.polar();
        let terms = || {
            state[1..].iter().enumerate().map(move |(k, v)| self.log_measure[k] + self.log_weight[k / nt] + n * v)
        };
        let m = terms().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::INFINITY || m.is_nan() {
            return Err(Error::BlowUp { peak: m, ceiling: f64::INFINITY });
        }
        if m == f64::NEG_INFINITY {
            return Err(Error::Domain("weighted volume integral vanishes".into()));
        }
        let log_i = m + terms().map(|t| (t - m).exp()).sum::<f64>().ln();
        Ok((self.params.lambda.ln() - log_i) / n)
    }

    fn v_star(&self, state: &[f64], c: f64) -> Result<f64> {
        let nt = self.grid.polar();
        let nodes = &self.grid.radial.nodes;
        let samples = std::iter::once((state[0], 0.0))
            .chain(state[1..].iter().enumerate().map(|(k, v)| (*v, nodes[k / nt])));
        compute_v_star(samples, c, self.params.alpha)
    }

    /// Potential of the field's density (no tilt) as a state vector.
    pub fn potential_of_density(&self, density: &[f64]) -> Result<AxisymState> {
        if density.len() != self.grid.len() {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), got: density.len() });
        }
        let m = self.grid.radial.len();
        let nt = self.grid.polar();
        let modes = self.grid.l_max + 1;
        // analysis: ρ_L(r_i)
        let mut coeffs = vec![vec![0.0; m]; modes];
        for i in 0..m {
            let row = &density[i * nt..(i + 1) * nt];
            for (j, d) in row.iter().enumerate() {
                let wd = self.grid.t_weights[j] * d;
                if wd == 0.0 {
                    continue;
                }
                for (l, p) in self.zonal[j].iter().enumerate() {
                    coeffs[l][i] += wd * p;
                }
            }
        }
        let mut out = vec![0.0; 1 + m * nt];
        let mut pot = vec![0.0; m + 1];
        for l in 0..modes {
            let c = &mut coeffs[l];
            c.iter_mut().for_each(|x| *x /= self.zonal_norms[l]);
            apply_into(&self.kernels[l], c, &mut pot);
            if l == 0 {
                out[0] = pot[0];
            }
            for i in 0..m {
                let base = 1 + i * nt;
                for j in 0..nt {
                    out[base + j] += pot[i + 1] * self.zonal[j][l];
                }
            }
        }
        Ok(out)
    }

    /// One application of the map; returns `(T(v), c_v, v*)`.
    pub fn apply(&self, state: &[f64]) -> Result<(AxisymState, f64, f64)> {
        if state.len() != self.state_len() {
            return Err(Error::DimensionMismatch { expected: self.state_len(), got: state.len() });
        }
        if let Some(k) = state.iter().position(|x| x.is_nan()) {
            return Err(Error::NonFinite { index: k, radius: f64::NAN, value: f64::NAN });
        }
        let c = self.normalize(state)?;
        let n = self.params.n as f64;
        let nt = self.grid.polar();
        let density: Vec<f64> = state[1..]
            .iter()
            .enumerate()
            .map(|(k, v)| (self.log_weight[k / nt] + n * (v + c)).exp())
            .collect();
        let mut out = self.potential_of_density(&density)?;
        let v_star = if self.tilt { self.v_star(state, c)? } else { 0.0 };
        if v_star != 0.0 {
            for (i, r) in self.grid.radial.nodes.iter().enumerate() {
                for (j, t) in self.grid.t_nodes.iter().enumerate() {
                    out[1 + i * nt + j] += v_star * r * t;
                }
            }
        }
        Ok((out, c, v_star))
    }

    pub fn solve(&self, config: &SolverConfig, initial: Option<&[f64]>) -> Result<AxisymField> {
        config.validate()?;
        let len = self.state_len();
        let mut v = match initial {
            Some(s) if s.len() == len => s.to_vec(),
            Some(s) => return Err(Error::DimensionMismatch { expected: len, got: s.len() }),
            None => vec![0.0; len],
        };
        let ceiling = if config.resolution_guard {
            let r_res = self.grid.radial.panels[0].r_end();
            config.ceiling.min((1.0 + self.params.alpha) * (1.0 / r_res).ln())
        } else {
            config.ceiling
        };
        let mut theta = config.damping;
        let mut prev = f64::INFINITY;
        let mut trace = Vec::new();
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        let (mut c, mut v_star) = (0.0, 0.0);
        for it in 1..=config.max_iter {
            iterations = it;
            let (tv, cv, vs) = self.apply(&v)?;
            c = cv;
            v_star = vs;
            residual = v.iter().zip(&tv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let w0 = tv[0] + c;
            trace.push(TraceRecord { iteration: it, residual, c_v: c, w0, damping: theta });
            log::trace!("axisym iter {it}: residual {residual:.3e} c_v {c:.6} w0 {w0:.6} v* {vs:.6} theta {theta}");
            if !w0.is_finite() || w0 > ceiling {
                return Err(Error::BlowUp { peak: w0, ceiling });
            }
            if residual < config.tol {
                converged = true;
                break;
            }
            if it == config.max_iter {
                break;
            }
            theta = adapt_damping(theta, residual, prev, config);
            prev = residual;
            for (a, b) in v.iter_mut().zip(&tv) {
                *a += theta * (b - *a);
            }
        }
        let nt = self.grid.polar();
        let weighted_norm = std::iter::once(v[0].abs())
            .chain(v[1..].iter().enumerate().map(|(k, x)| x.abs() / (1.0 + self.grid.radial.nodes[k / nt])))
            .fold(0.0, f64::max);
        Ok(AxisymField {
            params: self.params,
            grid: Some(self.grid.clone()),
            v0: v[0],
            v: v[1..].to_vec(),
            c_v: c,
            v_star,
            residual_sup: residual,
            iterations,
            converged,
            weighted_norm,
            trace,
        })
    }

    /// State vector of a radial profile (`v0` at the origin, `v[i]` on every ray).
    pub fn radial_state(&self, v0: f64, v: &[f64]) -> Result<AxisymState> {
        if v.len() != self.grid.radial.len() {
            return Err(Error::DimensionMismatch { expected: self.grid.radial.len(), got: v.len() });
        }
        let nt = self.grid.polar();
        let mut s = Vec::with_capacity(self.state_len());
        s.push(v0);
        for x in v {
            s.extend(std::iter::repeat_n(*x, nt));
        }
        Ok(s)
    }
}

/// Solve with a freshly assembled operator.
pub fn solve_axisym(
    params: &ProblemParams,
    radial: &RadialGrid,
    config: &AxisymConfig,
    solver: &SolverConfig,
) -> Result<AxisymField> {
    if !(params.lambda < params.constants().lambda_1) {
        return Err(Error::Domain(format!(
            "axially symmetric solutions need Λ < Λ_1 = {}, got {}",
            params.constants().lambda_1,
            params.lambda
        )));
    }
    let op = AxisymOperator::new(*params, radial.clone(), config, &mut KernelCache::new(), &KernelOptions::default())?;
    op.solve(solver, None)
}
