//! Graded radial grids and weighted radial integration.
//!
//! A grid is a union of panels. Each panel carries a parameter interval
//! `[t_start, t_end]` and a map `r = scale · t^power`; nodes are images of
//! Gauss–Legendre nodes in `t`. The panels covering `(0, 1]` use `power = q > 1`,
//! which flattens the `r^{nα}` factor at the origin; panels on `[1, r_max]`
//! are geometric in `r`. The origin is never a node.

pub mod gauss;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::OnceLock;

use crate::constants::{sphere_area, ProblemParams};
use crate::error::{Error, Result};
use gauss::Rule;

/// Gauss–Legendre nodes per panel.
pub const PANEL_ORDER: usize = 8;

/// Relative accuracy demanded of `∫_0^1 r^{n-1+nα} dr` on the graded panels.
const CORE_MOMENT_TOL: f64 = 1e-8;

pub(crate) fn panel_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss::gauss_legendre(PANEL_ORDER))
}

/// One panel of a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub t_start: f64,
    pub t_end: f64,
    pub scale: f64,
    pub power: f64,
    /// Index of the first node of this panel in the grid.
    pub first: usize,
}

impl Panel {
    #[inline]
    pub fn radius(&self, t: f64) -> f64 {
        if self.power == 1.0 {
            self.scale * t
        } else {
            self.scale * t.powf(self.power)
        }
    }

    /// `dr/dt`.
    #[inline]
    pub fn jacobian(&self, t: f64) -> f64 {
        if self.power == 1.0 {
            self.scale
        } else {
            self.scale * self.power * t.powf(self.power - 1.0)
        }
    }

    /// Inverse map `t(r)`.
    #[inline]
    pub fn parameter(&self, r: f64) -> f64 {
        if self.power == 1.0 {
            r / self.scale
        } else {
            (r / self.scale).powf(1.0 / self.power)
        }
    }

    pub fn r_start(&self) -> f64 {
        self.radius(self.t_start)
    }

    pub fn r_end(&self) -> f64 {
        self.radius(self.t_end)
    }

    /// Parameter values of the panel's nodes.
    pub fn node_parameters(&self) -> [f64; PANEL_ORDER] {
        let rule = panel_rule();
        let half = 0.5 * (self.t_end - self.t_start);
        let mid = 0.5 * (self.t_end + self.t_start);
        let mut out = [0.0; PANEL_ORDER];
        for (o, x) in out.iter_mut().zip(&rule.nodes) {
            *o = mid + half * x;
        }
        out
    }
}

/// Graded quadrature on `(0, r_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub r_max: f64,
    pub grading_exponent: f64,
    pub panels: Vec<Panel>,
}

/// User-facing grid description, as found in run-config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nodes: usize,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub grading: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nodes: 512, r_max: None, grading: None }
    }
}

impl GridSpec {
    pub fn build(&self, params: &ProblemParams) -> Result<RadialGrid> {
        let r_max = match self.r_max {
            Some(r) => r,
            None => default_r_max(params),
        };
        build_radial_grid_with(params, self.nodes, r_max, self.grading)
    }
}

/// Smallest `R > 1` with `e^{-nR²} R^{n + n|α|} < 1e-12`.
pub fn tail_radius(params: &ProblemParams) -> f64 {
    let n = params.n as f64;
    let expo = n + n * params.alpha.abs();
    let f = |r: f64| -n * r * r + expo * r.ln() - (1e-12f64).ln();
    // f is decreasing beyond its maximum; bracket and bisect.
    let mut lo = 1.0f64.max((expo / (2.0 * n)).sqrt());
    let mut hi = lo;
    while f(hi) >= 0.0 {
        hi *= 2.0;
    }
    if f(lo) < 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Default truncation radius: the Gaussian tail radius, extended by a factor 4 so
/// that far-field diagnostics (logarithmic slopes) have room past the density bulk.
pub fn default_r_max(params: &ProblemParams) -> f64 {
    4.0 * tail_radius(params)
}

/// Default grading exponent `q = max(1, 2/(1+α))`.
pub fn default_grading(alpha: f64) -> f64 {
    (2.0 / (1.0 + alpha)).max(1.0)
}

/// Build the composite grid with `m` nodes on `(0, r_max]`.
pub fn build_radial_grid(params: &ProblemParams, m: usize, r_max: f64) -> Result<RadialGrid> {
    build_radial_grid_with(params, m, r_max, None)
}

pub fn build_radial_grid_with(
    params: &ProblemParams,
    m: usize,
    r_max: f64,
    grading: Option<f64>,
) -> Result<RadialGrid> {
    if m < 16 {
        return Err(Error::Config(format!("grid needs at least 16 nodes, got {m}")));
    }
    if m % PANEL_ORDER != 0 {
        return Err(Error::Config(format!(
            "node count {m} is not a multiple of the panel order {PANEL_ORDER}"
        )));
    }
    if !(r_max > 1.0) || !r_max.is_finite() {
        return Err(Error::Config(format!("r_max must be > 1, got {r_max}")));
    }
    let q = grading.unwrap_or_else(|| default_grading(params.alpha));
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::Config(format!("grading exponent must be >= 1, got {q}")));
    }
    let panel_count = m / PANEL_ORDER;
    let core = panel_count.div_ceil(2);
    let outer = panel_count - core;

    let mut panels = Vec::with_capacity(panel_count);
    for k in 0..core {
        panels.push(Panel {
            t_start: k as f64 / core as f64,
            t_end: (k + 1) as f64 / core as f64,
            scale: 1.0,
            power: q,
            first: 0,
        });
    }
    for k in 0..outer {
        panels.push(Panel {
            t_start: r_max.powf(k as f64 / outer as f64),
            t_end: r_max.powf((k + 1) as f64 / outer as f64),
            scale: 1.0,
            power: 1.0,
            first: 0,
        });
    }
    let grid = RadialGrid::from_panels(panels, q)?;

    // Accuracy check on the singular core moment ∫_0^1 r^{n-1+nα} dr = 1/(n+nα).
    let n = params.n as f64;
    let expo = n - 1.0 + n * params.alpha;
    let exact = 1.0 / (expo + 1.0);
    let approx: f64 = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .filter(|(r, _)| **r <= 1.0)
        .map(|(r, w)| w * r.powf(expo))
        .sum();
    let rel = ((approx - exact) / exact).abs();
    if rel > CORE_MOMENT_TOL {
        return Err(Error::Config(format!(
            "grid with m = {m}, q = {q} integrates the core moment to relative error {rel:.3e} > {CORE_MOMENT_TOL:e}"
        )));
    }
    Ok(grid)
}

impl RadialGrid {
    /// Assemble nodes and weights from a panel list.
    pub fn from_panels(mut panels: Vec<Panel>, grading_exponent: f64) -> Result<Self> {
        let rule = panel_rule();
        let mut nodes = Vec::with_capacity(panels.len() * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels.len() * PANEL_ORDER);
        for p in panels.iter_mut() {
            p.first = nodes.len();
            let half = 0.5 * (p.t_end - p.t_start);
            for (t, w) in p.node_parameters().iter().zip(&rule.weights) {
                nodes.push(p.radius(*t));
                weights.push(w * half * p.jacobian(*t));
            }
        }
        let r_max = panels.last().map(|p| p.r_end()).unwrap_or(0.0);
        let grid = Self { nodes, weights, r_max, grading_exponent, panels };
        grid.check_invariants()?;
        Ok(grid)
    }

    fn check_invariants(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Config("empty grid".into()));
        }
        if !(self.nodes[0] > 0.0) {
            return Err(Error::Config("first node must be positive".into()));
        }
        if self.nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid nodes must be strictly increasing".into()));
        }
        if self.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("grid weights must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Grid with every radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Domain(format!("scale factor must be positive, got {factor}")));
        }
        let panels = self
            .panels
            .iter()
            .map(|p| Panel { scale: p.scale * factor, ..*p })
            .collect();
        Self::from_panels(panels, self.grading_exponent)
    }

    /// Radial measure `|S^{n-1}| r_i^{n-1} w_i` of each node.
    pub fn volume_weights(&self, n: u32) -> Vec<f64> {
        let area = sphere_area(n - 1).expect("n >= 2");
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| area * r.powi(n as i32 - 1) * w)
            .collect()
    }

    /// Content hash of the node set, used to key kernel caches.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for x in self.nodes.iter().chain(&self.weights) {
            h.update(x.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Index of the panel containing radius `r`, if any.
    pub fn panel_of(&self, r: f64) -> Option<usize> {
        self.panels.iter().position(|p| r >= p.r_start() && r <= p.r_end())
    }
}

/// `∫_{R^n} f(|y|) dy ≈ |S^{n-1}| Σ w_i f(r_i) r_i^{n-1}`.
pub fn integrate_radial(f: &[f64], grid: &RadialGrid, n: u32) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: f.len() });
    }
    if n < 2 {
        return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
    }
    let area = sphere_area(n - 1)?;
    let mut acc = 0.0;
    for (i, ((fi, r), w)) in f.iter().zip(&grid.nodes).zip(&grid.weights).enumerate() {
        if !fi.is_finite() {
            return Err(Error::NonFinite { index: i, radius: *r, value: *fi });
        }
        acc += w * fi * r.powi(n as i32 - 1);
    }
    Ok(area * acc)
}
