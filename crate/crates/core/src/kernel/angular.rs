//! Spherical averages of `log|x - y|`.
//!
//! For `x = a e_1` and `y = b ω`, `ω ∈ S^{d-1}`, the average of
//! `½ log(δ² + |a e_1 - b ω|²)` against the zonal harmonic `P_L(cos θ)` reduces to
//! a single `θ`-integral with weight `sin^{d-2} θ`. When `a ≈ b` and `δ ≈ 0` the
//! integrand is (nearly) log-singular at `θ = 0`; the rule then grades panels
//! geometrically toward `θ = 0` down to the singular scale.

use std::f64::consts::PI;

use crate::constants::gamma;
use crate::error::{Error, Result};
use crate::quadrature::gauss::{gauss_legendre, Rule};

const GRADING_RATIO: f64 = 0.25;
const MIN_PANEL: f64 = 1e-14;

/// Gauss–Legendre rule used on every angular panel.
#[derive(Debug, Clone)]
pub struct AngularRule {
    rule: Rule,
}

impl AngularRule {
    pub fn new(order: usize) -> Self {
        Self { rule: gauss_legendre(order) }
    }

    pub fn order(&self) -> usize {
        self.rule.len()
    }
}

impl Default for AngularRule {
    fn default() -> Self {
        Self::new(20)
    }
}

/// Normalisation `∫_0^π sin^{d-2} θ dθ`.
pub fn zonal_norm(dim: u32) -> f64 {
    let d = dim as f64;
    PI.sqrt() * gamma((d - 1.0) / 2.0) / gamma(d / 2.0)
}

/// Zonal polynomials `P_L(t)` in dimension `dim`, normalised so that `P_L(1) = 1`
/// (Legendre for `dim = 3`, Chebyshev for `dim = 2`).
#[inline]
pub fn zonal_polynomials(dim: u32, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = t;
    let lam = (dim as f64 - 2.0) / 2.0;
    for l in 1..out.len() - 1 {
        let lf = l as f64;
        out[l + 1] = (2.0 * (lf + lam) * t * out[l] - lf * out[l - 1]) / (lf + 2.0 * lam);
    }
}

/// Averages over `S^{dim-1}` of `½ log(offset_sq + |a e_1 - b ω|²) P_L(e_1·ω)`
/// for `L = 0..out.len()`, each divided by the sphere measure.
pub fn sphere_log_moments(
    a: f64,
    b: f64,
    offset_sq: f64,
    dim: u32,
    rule: &AngularRule,
    out: &mut [f64],
) -> Result<()> {
    if dim < 2 {
        return Err(Error::Domain(format!("sphere dimension must be >= 2, got {dim}")));
    }
    if !(a >= 0.0 && b >= 0.0 && offset_sq >= 0.0) {
        return Err(Error::Domain(format!("radii must be nonnegative, got a = {a}, b = {b}")));
    }
    out.iter_mut().for_each(|o| *o = 0.0);
    let hi = a.max(b);
    let lo = a.min(b);
    if hi == 0.0 {
        if offset_sq == 0.0 {
            return Err(Error::Domain("log kernel undefined at coincident origin points".into()));
        }
        out[0] = 0.5 * offset_sq.ln();
        return Ok(());
    }
    let rho = lo / hi;
    let base = hi.ln();
    let eps_sq = offset_sq / (hi * hi) + (1.0 - rho) * (1.0 - rho);
    if rho == 0.0 {
        out[0] = base + 0.5 * eps_sq.ln();
        return Ok(());
    }
    let l_max = out.len() - 1;
    let outer_panels = ((l_max as f64 * PI / 40.0).ceil() as usize).max(2);
    let theta0 = PI / outer_panels as f64;
    let theta_s = (eps_sq / rho).sqrt();

    let mut zonal = vec![0.0; out.len()];
    let w_pow = dim as i32 - 2;
    let mut accumulate = |lo_t: f64, hi_t: f64, out: &mut [f64]| {
        let half = 0.5 * (hi_t - lo_t);
        let mid = 0.5 * (hi_t + lo_t);
        for (x, w) in rule.rule.nodes.iter().zip(&rule.rule.weights) {
            let th = mid + half * x;
            let sh = (0.5 * th).sin();
            let f = 0.5 * (eps_sq + 4.0 * rho * sh * sh).ln();
            let val = f * th.sin().powi(w_pow) * w * half;
            if out.len() == 1 {
                out[0] += val;
            } else {
                zonal_polynomials(dim, th.cos(), &mut zonal);
                for (o, p) in out.iter_mut().zip(&zonal) {
                    *o += val * p;
                }
            }
        }
    };

    for k in 1..outer_panels {
        accumulate(k as f64 * theta0, (k + 1) as f64 * theta0, out);
    }
    if theta_s >= theta0 {
        accumulate(0.0, theta0, out);
    } else {
        let floor = (0.25 * theta_s).max(MIN_PANEL);
        let mut upper = theta0;
        while upper * GRADING_RATIO > floor {
            let lower = upper * GRADING_RATIO;
            accumulate(lower, upper, out);
            upper = lower;
        }
        accumulate(0.0, upper, out);
    }

    let z = zonal_norm(dim);
    out.iter_mut().for_each(|o| *o /= z);
    out[0] += base;
    Ok(())
}

/// `S_n(a, b)`: average of `log|a e_1 - b ω|` over `ω ∈ S^{n-1}`.
pub fn angular_log_mean(a: f64, b: f64, n: u32) -> Result<f64> {
    angular_log_mean_with(a, b, n, &AngularRule::default())
}

pub fn angular_log_mean_with(a: f64, b: f64, n: u32, rule: &AngularRule) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::Domain("S_n(0, 0) is undefined".into()));
    }
    let mut out = [0.0];
    sphere_log_moments(a, b, 0.0, n, rule, &mut out)?;
    Ok(out[0])
}
