//! Dimensional constants and problem parameters.
//!
//! The fundamental solution of `(-Δ)^{n/2}` in `R^n` is `(1/γ_n) log(1/|x|)` with
//! `γ_n = (n-1)!/2 · |S^n|`, and the critical total curvature is `Λ_1 = 2γ_n`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function, Lanczos approximation (g = 7, nine terms).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Surface measure of the unit `k`-sphere embedded in `R^{k+1}`.
pub fn sphere_area(k: u32) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain(format!("sphere_area requires k >= 1, got {k}")));
    }
    let h = (k as f64 + 1.0) / 2.0;
    Ok(2.0 * PI.powf(h) / gamma(h))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `γ_n = (n-1)!/2 · |S^n|`.
pub fn gamma_n(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("gamma_n requires n >= 2, got {n}")));
    }
    Ok(factorial(n - 1) / 2.0 * sphere_area(n)?)
}

/// `Λ_1 = (n-1)! |S^n| = 2 γ_n`.
pub fn lambda_1(n: u32) -> Result<f64> {
    Ok(2.0 * gamma_n(n)?)
}

/// Constants used throughout a run in dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub n: u32,
    pub gamma_n: f64,
    pub lambda_1: f64,
    /// `|S^{n-1}|`, the radial-reduction factor.
    pub sphere_n_minus_1: f64,
    /// `|S^{n-2}|` when `n >= 3`, else 2 (the 0-sphere has two points).
    pub sphere_n_minus_2: f64,
}

impl Constants {
    pub fn new(n: u32) -> Result<Self> {
        let gamma_n = gamma_n(n)?;
        Ok(Self {
            n,
            gamma_n,
            lambda_1: 2.0 * gamma_n,
            sphere_n_minus_1: sphere_area(n - 1)?,
            sphere_n_minus_2: if n >= 3 { sphere_area(n - 2)? } else { 2.0 },
        })
    }

    /// Radial threshold `Λ_1 (1 + α)`.
    pub fn critical_lambda(&self, alpha: f64) -> f64 {
        self.lambda_1 * (1.0 + alpha)
    }
}

/// Parameters of the weighted problem `(-Δ)^{n/2} u = |x|^{nα} e^{nu}`, with
/// total curvature `Λ` and Gaussian damping exponent `μ` (the radial ansatz uses `μ = n`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ProblemParams {
    /// Validated constructor with `μ = n`.
    pub fn new(n: u32, alpha: f64, lambda: f64) -> Result<Self> {
        Self::with_mu(n, alpha, lambda, n as f64)
    }

    pub fn with_mu(n: u32, alpha: f64, lambda: f64, mu: f64) -> Result<Self> {
        let p = Self { n, alpha, lambda, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Domain(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.alpha > -1.0) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be > -1, got {}", self.alpha)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Domain(format!("mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }

    pub fn constants(&self) -> Constants {
        Constants::new(self.n).expect("validated parameters")
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::with_mu(self.n, self.alpha, lambda, self.mu)
    }

    /// `Λ / Λ_1(1+α)`.
    pub fn critical_fraction(&self) -> f64 {
        self.lambda / self.constants().critical_lambda(self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_matches_factorials_and_half_integers() {
        for k in 1..15u32 {
            assert_relative_eq!(gamma(k as f64), factorial(k - 1), max_relative = 1e-13);
        }
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(3.5), 15.0 / 8.0 * PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(0.25), 3.625_609_908_221_908_3, max_relative = 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2).unwrap(), 4.0 * PI, max_relative = 1e-14);
        // Γ(2) = 1, so |S^3| = 2π²
        assert_relative_eq!(sphere_area(3).unwrap(), 2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(4).unwrap(), 8.0 * PI * PI / 3.0, max_relative = 1e-14);
        assert!(matches!(sphere_area(0), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_n_values() {
        assert_relative_eq!(gamma_n(2).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(gamma_n(3).unwrap(), 2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(gamma_n(4).unwrap(), 8.0 * PI * PI, max_relative = 1e-14);
        assert!(gamma_n(1).is_err());
    }

    #[test]
    fn lambda_1_values() {
        assert_relative_eq!(lambda_1(2).unwrap(), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(lambda_1(3).unwrap(), 4.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(lambda_1(4).unwrap(), 16.0 * PI * PI, max_relative = 1e-14);
        for n in 2..=10 {
            assert_eq!(lambda_1(n).unwrap(), 2.0 * gamma_n(n).unwrap());
            assert!(gamma_n(n).unwrap() > 0.0);
        }
    }

    #[test]
    fn critical_lambda_in_two_dimensions() {
        let c = Constants::new(2).unwrap();
        for alpha in [0.0, 0.5, 1.0, -0.3] {
            assert_relative_eq!(c.critical_lambda(alpha), 4.0 * PI * (1.0 + alpha), max_relative = 1e-14);
        }
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(3, 0.0, 1.0).is_ok());
        assert!(ProblemParams::new(1, 0.0, 1.0).is_err());
        assert!(ProblemParams::new(3, -1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, -1.5, 1.0).is_err());
        assert!(ProblemParams::new(3, 0.0, 0.0).is_err());
        assert!(ProblemParams::new(3, 0.0, f64::NAN).is_err());
        assert!(ProblemParams::with_mu(3, 0.0, 1.0, -0.1).is_err());
        assert_eq!(ProblemParams::new(4, 0.0, 1.0).unwrap().mu, 4.0);
    }
}
