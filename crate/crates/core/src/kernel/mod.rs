//! Nyström matrices for the logarithmic potential of radial (and zonal) densities.
//!
//! For a density `f(|y|) P_L(ŷ·e_1)` the potential at `s e_1` is
//! `(1/γ_n) ∫_0^∞ G_L(s, r) f(r) |S^{n-1}| r^{n-1} dr` with
//! `G_L(s, r) = δ_{L0}·[log(1+r)] - M_L(s, r)`, where `M_L` is the zonal average of
//! `log|s e_1 - r ω|` (see [`angular`]). The bracketed term is present only for the
//! [`KernelVariant::Normal`] kernel `log((1+|y|)/|x-y|)`.
//!
//! `G_L(s, ·)` is not smooth at `r = s`. Entries for sources on panels close to
//! a target are replaced by product-integration weights: the density is
//! interpolated on the panel by its Lagrange polynomial in the panel parameter, and
//! the kernel times each basis polynomial is integrated on sub-panels graded
//! toward the singular point.

pub mod angular;
pub mod cache;

use serde::{Deserialize, Serialize};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::quadrature::gauss::{gauss_legendre, lagrange_basis, Rule};
use crate::quadrature::{Panel, RadialGrid, PANEL_ORDER};
pub use angular::{angular_log_mean, sphere_log_moments, AngularRule};
pub use cache::KernelCache;

/// Which logarithmic kernel a matrix discretises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    /// `log((1+|y|)/|x-y|)`, the kernel of normal solutions.
    Normal,
    /// `log(1/|x-y|)`, the kernel of the Gaussian-weighted radial ansatz.
    Plain,
}

impl KernelVariant {
    fn includes_shift(self) -> bool {
        matches!(self, KernelVariant::Normal)
    }
}

/// Quadrature knobs for kernel assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Gauss–Legendre order on each angular panel.
    pub angular_order: usize,
    /// Gauss–Legendre order on each product-integration sub-panel.
    pub correction_order: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { angular_order: 20, correction_order: 12 }
    }
}

impl KernelOptions {
    /// Same rules with twice the angular nodes.
    pub fn refined(&self) -> Self {
        Self { angular_order: 2 * self.angular_order, ..*self }
    }
}

/// Dense Nyström matrix mapping density samples at grid nodes to potential values
/// at target radii.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
    pub targets: Vec<f64>,
    pub n: u32,
    pub variant: KernelVariant,
    /// Zonal mode `L` (0 for radial potentials).
    pub mode: usize,
}

impl KernelMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn apply(&self, density: &[f64]) -> Result<Vec<f64>> {
        apply_potential(self, density)
    }
}

/// Matrix–vector product of a kernel matrix with density samples.
pub fn apply_potential(a: &KernelMatrix, density: &[f64]) -> Result<Vec<f64>> {
    if density.len() != a.cols {
        return Err(Error::Usage(format!(
            "density has {} samples but the kernel expects {}",
            density.len(),
            a.cols
        )));
    }
    let mut out = vec![0.0; a.rows];
    apply_into(a, density, &mut out);
    Ok(out)
}

pub(crate) fn apply_into(a: &KernelMatrix, density: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = a.row(i).iter().zip(density).map(|(k, f)| k * f).sum();
    }
}

/// Radial (mode 0) kernel matrix with default quadrature options.
pub fn assemble_kernel_matrix(
    grid: &RadialGrid,
    targets: &[f64],
    n: u32,
    variant: KernelVariant,
) -> Result<KernelMatrix> {
    let mut mats = assemble_mode_kernels(grid, targets, n, 0, variant, &KernelOptions::default())?;
    Ok(mats.remove(0))
}

/// Kernel matrices for zonal modes `0..=l_max`.
pub fn assemble_mode_kernels(
    grid: &RadialGrid,
    targets: &[f64],
    n: u32,
    l_max: usize,
    variant: KernelVariant,
    options: &KernelOptions,
) -> Result<Vec<KernelMatrix>> {
    if let Some(bad) = targets.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::Domain(format!("target radius must be finite and nonnegative, got {bad}")));
    }
    let consts = Constants::new(n)?;
    let modes = l_max + 1;
    let rows = targets.len();
    let cols = grid.len();
    let angular = AngularRule::new(options.angular_order);
    let fine = gauss_legendre(options.correction_order);
    let scale = consts.sphere_n_minus_1 / consts.gamma_n;
    let shift = variant.includes_shift();

    let mut entries = vec![vec![0.0; rows * cols]; modes];
    let mut moments = vec![0.0; modes];
    let coef: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(r, w)| scale * r.powi(n as i32 - 1) * w)
        .collect();

    for (i, &s) in targets.iter().enumerate() {
        for (j, &r) in grid.nodes.iter().enumerate() {
            sphere_log_moments(s, r, 0.0, n, &angular, &mut moments)?;
            for (l, m) in moments.iter().enumerate() {
                let g = if l == 0 && shift { r.ln_1p() - m } else { -m };
                entries[l][i * cols + j] = coef[j] * g;
            }
        }
    }

    let mut product = vec![vec![0.0; modes]; PANEL_ORDER];
    for (i, &s) in targets.iter().enumerate() {
        for panel in &grid.panels {
            if !is_near(panel, s) {
                continue;
            }
            panel_product_integrals(panel, s, n, shift, &fine, &angular, &mut product)?;
            let rule_t = panel.node_parameters();
            for (k, t) in rule_t.iter().enumerate() {
                let j = panel.first + k;
                let r = grid.nodes[j];
                let c = scale * r.powi(n as i32 - 1) * panel.jacobian(*t);
                for l in 0..modes {
                    entries[l][i * cols + j] = c * product[k][l];
                }
            }
        }
    }

    let mats = entries
        .into_iter()
        .enumerate()
        .map(|(l, e)| KernelMatrix {
            rows,
            cols,
            entries: e,
            targets: targets.to_vec(),
            n,
            variant,
            mode: l,
        })
        .collect::<Vec<_>>();
    if let Some(bad) = mats.iter().flat_map(|m| m.entries.iter()).find(|x| !x.is_finite()) {
        return Err(Error::Diagnostic(format!("non-finite kernel entry {bad}")));
    }
    Ok(mats)
}

/// Whether the singular point `r = s` lies within one panel length of the panel,
/// measured in the panel parameter.
fn is_near(panel: &Panel, s: f64) -> bool {
    let t = panel.parameter(s);
    let h = panel.t_end - panel.t_start;
    t >= panel.t_start - h && t <= panel.t_end + h
}

/// `out[k][L] = ∫_panel G_L(s, r(t)) ℓ_k(t) dt` for the panel's Lagrange basis `ℓ_k`.
fn panel_product_integrals(
    panel: &Panel,
    s: f64,
    n: u32,
    shift: bool,
    fine: &Rule,
    angular: &AngularRule,
    out: &mut [Vec<f64>],
) -> Result<()> {
    for row in out.iter_mut() {
        row.iter_mut().for_each(|x| *x = 0.0);
    }
    let (ta, tb) = (panel.t_start, panel.t_end);
    let h = tb - ta;
    let t_star = panel.parameter(s);
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    if t_star > ta && t_star < tb {
        graded_pieces(ta, t_star, false, 0.0, h, &mut pieces);
        graded_pieces(t_star, tb, true, 0.0, h, &mut pieces);
    } else if t_star <= ta {
        graded_pieces(ta, tb, true, ta - t_star, h, &mut pieces);
    } else {
        graded_pieces(ta, tb, false, t_star - tb, h, &mut pieces);
    }

    let nodes_t = panel.node_parameters();
    let modes = out[0].len();
    let mut moments = vec![0.0; modes];
    let mut basis = [0.0; PANEL_ORDER];
    for (u, v) in pieces {
        let half = 0.5 * (v - u);
        let mid = 0.5 * (u + v);
        for (x, w) in fine.nodes.iter().zip(&fine.weights) {
            let t = mid + half * x;
            let r = panel.radius(t);
            if r <= 0.0 {
                continue;
            }
            sphere_log_moments(s, r, 0.0, n, angular, &mut moments)?;
            lagrange_basis(&nodes_t, t, &mut basis);
            let wt = w * half;
            for (k, b) in basis.iter().enumerate() {
                let row = &mut out[k];
                for l in 0..modes {
                    let g = if l == 0 && shift { r.ln_1p() - moments[0] } else { -moments[l] };
                    row[l] += wt * g * b;
                }
            }
        }
    }
    Ok(())
}

/// Split `[u, v]` into pieces graded geometrically toward `u` (`toward_start`) or `v`.
/// `gap` is the distance from that endpoint to the singular point.
fn graded_pieces(u: f64, v: f64, toward_start: bool, gap: f64, h: f64, out: &mut Vec<(f64, f64)>) {
    const RATIO: f64 = 0.25;
    let len = v - u;
    if len <= 0.0 {
        return;
    }
    let floor = (0.5 * gap).max(1e-9 * h);
    let mut d = len;
    while d * RATIO > floor {
        let e = d * RATIO;
        if toward_start {
            out.push((u + e, u + d));
        } else {
            out.push((v - d, v - e));
        }
        d = e;
    }
    if toward_start {
        out.push((u, u + d));
    } else {
        out.push((v - d, v));
    }
}
