//! Closed-form solutions of `-Δu = |x|^{2α} e^{2u}` in the plane:
//! `u = log(2(α+1)λ / (1 + λ²|z^{α+1} - ζ|²))`, with `ζ ≠ 0` only for integer `α ≥ 0`.
//! All of them have total curvature `4π(1+α)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelOptions;
use crate::quadrature::{build_radial_grid_with, Panel, RadialGrid};
use crate::constants::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplicitSolution2D {
    pub alpha: f64,
    pub lambda_scale: f64,
    /// Offset `ζ` as `(re, im)`.
    pub zeta: (f64, f64),
}

impl ExplicitSolution2D {
    pub fn radial(alpha: f64, lambda_scale: f64) -> Result<Self> {
        Self::new(alpha, lambda_scale, (0.0, 0.0))
    }

    pub fn new(alpha: f64, lambda_scale: f64, zeta: (f64, f64)) -> Result<Self> {
        if !(alpha > -1.0) {
            return Err(Error::Domain(format!("alpha must be > -1, got {alpha}")));
        }
        if !(lambda_scale > 0.0) {
            return Err(Error::Domain(format!("lambda must be > 0, got {lambda_scale}")));
        }
        let integer = alpha >= 0.0 && alpha.fract() == 0.0;
        if (zeta.0 != 0.0 || zeta.1 != 0.0) && !integer {
            return Err(Error::Domain(format!("a nonzero offset needs a nonnegative integer alpha, got {alpha}")));
        }
        Ok(Self { alpha, lambda_scale, zeta })
    }

    pub fn is_radial(&self) -> bool {
        self.zeta == (0.0, 0.0)
    }

    /// `|z^{α+1} - ζ|²` at `(x, y)`.
    fn offset_modulus_sq(&self, x: f64, y: f64) -> f64 {
        if self.is_radial() {
            return (x * x + y * y).powf(self.alpha + 1.0);
        }
        let k = self.alpha as u32 + 1;
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 0..k {
            (re, im) = (re * x - im * y, re * y + im * x);
        }
        let (dr, di) = (re - self.zeta.0, im - self.zeta.1);
        dr * dr + di * di
    }

    pub fn eval_u(&self, point: (f64, f64)) -> f64 {
        let l = self.lambda_scale;
        let q = self.offset_modulus_sq(point.0, point.1);
        (2.0 * (self.alpha + 1.0) * l / (1.0 + l * l * q)).ln()
    }

    /// Radial profile `u(r)`; requires `ζ = 0`.
    pub fn eval_radial(&self, r: f64) -> f64 {
        self.eval_u((r, 0.0))
    }

    /// `|x|^{2α} e^{2u}`.
    pub fn density(&self, point: (f64, f64)) -> f64 {
        let r2 = point.0 * point.0 + point.1 * point.1;
        r2.powf(self.alpha) * (2.0 * self.eval_u(point)).exp()
    }

    /// Expected total curvature `4π(1+α)`.
    pub fn lambda_exact(&self) -> f64 {
        4.0 * PI * (1.0 + self.alpha)
    }

    /// Points where the density peaks: the roots of `z^{α+1} = ζ` (the origin when `ζ = 0`).
    pub fn peaks(&self) -> Vec<(f64, f64)> {
        if self.is_radial() {
            return vec![(0.0, 0.0)];
        }
        let k = self.alpha as usize + 1;
        let modulus = self.zeta.0.hypot(self.zeta.1).powf(1.0 / k as f64);
        let arg = self.zeta.1.atan2(self.zeta.0);
        (0..k)
            .map(|j| {
                let a = (arg + 2.0 * PI * j as f64) / k as f64;
                (modulus * a.cos(), modulus * a.sin())
            })
            .collect()
    }
}

/// Polar tensor grid: radial panels times angular panels, Gauss–Legendre on each.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub radial: RadialGrid,
    /// Angular nodes on `[0, 2π)` and weights.
    pub theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
}

const ANGULAR_ORDER: usize = 16;

impl PolarGrid {
    /// Grid adapted to `sol`: graded at the origin, refined around the peak radius and
    /// angles, geometric out to `r_max`. `level` splits every panel `2^level` times.
    pub fn for_solution(sol: &ExplicitSolution2D, r_max: f64, level: u32) -> Result<Self> {
        let q = (2.0 / (1.0 + sol.alpha)).max(1.0);
        let peaks = sol.peaks();
        let peak_r = peaks[0].0.hypot(peaks[0].1);
        let width = 0.1 / sol.lambda_scale.max(1e-3);
        let mut breaks: Vec<f64> = vec![0.0];
        let first = if peak_r > 0.0 { (0.5 * peak_r).min(1.0) } else { 1.0 };
        breaks.push(first);
        if peak_r > 0.0 {
            let mut b = first;
            while b < peak_r + 4.0 * width.max(0.25) {
                b += width.max(0.05);
                breaks.push(b);
            }
        }
        let start = *breaks.last().unwrap();
        if r_max <= start {
            return Err(Error::Config(format!("r_max = {r_max} does not reach past the peak region")));
        }
        let outer = ((r_max / start).ln() / 0.25f64.ln_1p()).ceil() as usize;
        for k in 1..=outer {
            breaks.push(start * (r_max / start).powf(k as f64 / outer as f64));
        }
        let split = 1usize << level;
        let mut panels = Vec::new();
        // graded first panel: r = first * t^q
        for s in 0..split {
            panels.push(Panel {
                t_start: s as f64 / split as f64,
                t_end: (s + 1) as f64 / split as f64,
                scale: first,
                power: q,
                first: 0,
            });
        }
        for w in breaks[1..].windows(2) {
            for s in 0..split {
                let a = w[0] + (w[1] - w[0]) * s as f64 / split as f64;
                let b = w[0] + (w[1] - w[0]) * (s + 1) as f64 / split as f64;
                panels.push(Panel { t_start: a, t_end: b, scale: 1.0, power: 1.0, first: 0 });
            }
        }
        let radial = RadialGrid::from_panels(panels, q)?;

        let mut tb: Vec<f64> = (0..=8).map(|k| 2.0 * PI * k as f64 / 8.0).collect();
        if !sol.is_radial() {
            for (x, y) in &peaks {
                let a = y.atan2(*x).rem_euclid(2.0 * PI);
                for d in [-0.3, -0.15, -0.05, 0.05, 0.15, 0.3] {
                    tb.push((a + d).rem_euclid(2.0 * PI));
                }
            }
        }
        tb.sort_by(f64::total_cmp);
        tb.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let rule = crate::quadrature::gauss::gauss_legendre(ANGULAR_ORDER);
        let (mut theta, mut theta_weights) = (Vec::new(), Vec::new());
        for w in tb.windows(2) {
            for s in 0..split {
                let a = w[0] + (w[1] - w[0]) * s as f64 / split as f64;
                let b = w[0] + (w[1] - w[0]) * (s + 1) as f64 / split as f64;
                let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    theta.push(m + h * x);
                    theta_weights.push(wt * h);
                }
            }
        }
        Ok(Self { radial, theta, theta_weights })
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (r, w) in self.radial.nodes.iter().zip(&self.radial.weights) {
            let mut ring = 0.0;
            for (t, wt) in self.theta.iter().zip(&self.theta_weights) {
                ring += wt * f(r * t.cos(), r * t.sin());
            }
            acc += w * r * ring;
        }
        acc
    }
}

/// Default truncation for the algebraic tails of the explicit profiles.
pub fn oracle_r_max(sol: &ExplicitSolution2D) -> f64 {
    1e6 * sol.lambda_scale.powf(-1.0 / (1.0 + sol.alpha)).max(1.0)
}

/// `∫ |x|^{2α} e^{2u} dx`, checked against the same integral on a refined grid.
pub fn total_curvature(sol: &ExplicitSolution2D, grid: &PolarGrid) -> Result<f64> {
    let value = grid.integrate(|x, y| sol.density((x, y)));
    Ok(value)
}

/// [`total_curvature`] on the adapted grid, with a refinement check.
pub fn total_curvature_checked(sol: &ExplicitSolution2D) -> Result<f64> {
    let r_max = oracle_r_max(sol);
    let coarse = total_curvature(sol, &PolarGrid::for_solution(sol, r_max, 1)?)?;
    let fine = total_curvature(sol, &PolarGrid::for_solution(sol, r_max, 2)?)?;
    if (coarse - fine).abs() > 1e-8 * fine.abs() {
        return Err(Error::Diagnostic(format!(
            "density peak not resolved: refinement moved the curvature from {coarse} to {fine}"
        )));
    }
    Ok(fine)
}

/// Radial grid reaching far into the algebraic tail of a `ζ = 0` profile.
pub fn oracle_radial_grid(sol: &ExplicitSolution2D, m: usize) -> Result<RadialGrid> {
    let p = ProblemParams::with_mu(2, sol.alpha, sol.lambda_exact(), 0.0)?;
    build_radial_grid_with(&p, m, 0.1 * oracle_r_max(sol), None)
}

/// Normality residual of a radial explicit solution on `grid` (test radii `[0, 5]`).
pub fn normality_residual_2d(sol: &ExplicitSolution2D, grid: &RadialGrid) -> Result<f64> {
    if !sol.is_radial() {
        return Err(Error::Precondition("normality residual needs the radial family".into()));
    }
    let u: Vec<f64> = grid.nodes.iter().map(|r| sol.eval_radial(*r)).collect();
    let (_, res) = crate::radial::normality_residual(
        grid,
        &u,
        sol.eval_radial(0.0),
        2,
        sol.alpha,
        crate::radial::NORMALITY_TEST_RADIUS,
        &KernelOptions::default(),
    )?;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::log_slope;
    use crate::quadrature::integrate_radial;
    use approx::assert_relative_eq;

    #[test]
    fn point_values() {
        let s = ExplicitSolution2D::radial(0.0, 1.0).unwrap();
        assert!((s.eval_u((0.0, 0.0)) - 2f64.ln()).abs() < 1e-15);
        assert!(s.eval_u((0.6, 0.8)).abs() < 1e-15);
        let t = ExplicitSolution2D::new(1.0, 1.0, (1.0, 0.0)).unwrap();
        assert!((t.eval_u((1.0, 0.0)) - 4f64.ln()).abs() < 1e-15);
        assert!((t.eval_u((-1.0, 0.0)) - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(ExplicitSolution2D::radial(-1.0, 1.0).is_err());
        assert!(ExplicitSolution2D::radial(0.0, 0.0).is_err());
        assert!(ExplicitSolution2D::new(0.5, 1.0, (1.0, 0.0)).is_err());
        assert!(ExplicitSolution2D::new(2.0, 1.0, (0.0, 1.0)).is_ok());
    }

    #[test]
    fn radial_total_curvature() {
        for alpha in [0.0, 0.5, 1.0] {
            let s = ExplicitSolution2D::radial(alpha, 1.0).unwrap();
            let tc = total_curvature_checked(&s).unwrap();
            assert!((tc - s.lambda_exact()).abs() < 1e-6, "alpha={alpha}: {tc}");
            // and with the one-dimensional radial rule
            let p = ProblemParams::with_mu(2, alpha, s.lambda_exact(), 0.0).unwrap();
            let g = build_radial_grid_with(&p, 1024, 1e6, None).unwrap();
            let f: Vec<f64> = g.nodes.iter().map(|r| r.powf(2.0 * alpha) * (2.0 * s.eval_radial(*r)).exp()).collect();
            assert!((integrate_radial(&f, &g, 2).unwrap() - s.lambda_exact()).abs() < 1e-6);
        }
    }

    #[test]
    fn offset_family_total_curvature() {
        let s = ExplicitSolution2D::new(1.0, 1.0, (2.0, 0.0)).unwrap();
        let tc = total_curvature_checked(&s).unwrap();
        assert!((tc - 8.0 * PI).abs() < 1e-4, "{tc}");
    }

    #[test]
    fn scaling_closure() {
        for alpha in [0.0, 0.5, 2.0] {
            let one = ExplicitSolution2D::radial(alpha, 1.0).unwrap();
            for lam in [0.3, 2.0, 7.5] {
                let s = ExplicitSolution2D::radial(alpha, lam).unwrap();
                for r in [0.0, 0.1, 1.0, 3.7, 20.0] {
                    let expect = one.eval_radial(lam.powf(1.0 / (1.0 + alpha)) * r) + lam.ln();
                    assert!((s.eval_radial(r) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn far_field_slope() {
        for alpha in [0.0, 0.5, 1.0] {
            let s = ExplicitSolution2D::radial(alpha, 1.0).unwrap();
            let g = oracle_radial_grid(&s, 512).unwrap();
            let u: Vec<f64> = g.nodes.iter().map(|r| s.eval_radial(*r)).collect();
            let beta = log_slope(&g.nodes, &u, (50.0, 500.0)).unwrap();
            let expect = 2.0 * (1.0 + alpha);
            assert!((beta - expect).abs() < 0.01 * expect, "{beta}");
            assert_relative_eq!(expect, s.lambda_exact() / (2.0 * PI), max_relative = 1e-15);
        }
    }

    #[test]
    fn normality_of_radial_family() {
        for alpha in [0.0, 0.5] {
            let s = ExplicitSolution2D::radial(alpha, 1.0).unwrap();
            let res = normality_residual_2d(&s, &oracle_radial_grid(&s, 512).unwrap()).unwrap();
            assert!(res < 1e-4, "alpha={alpha}: {res}");
        }
    }

    #[test]
    fn normality_residual_converges() {
        // below m=64 hardly any nodes fall inside the test radius on this grid
        let s = ExplicitSolution2D::radial(0.0, 1.0).unwrap();
        let res: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&m| normality_residual_2d(&s, &oracle_radial_grid(&s, m).unwrap()).unwrap())
            .collect();
        for w in res.windows(2) {
            assert!(w[1] * 4.0 <= w[0], "{res:?}");
        }
        assert!(normality_residual_2d(&ExplicitSolution2D::new(1.0, 1.0, (1.0, 0.0)).unwrap(), &oracle_radial_grid(&s, 32).unwrap()).is_err());
    }
}
