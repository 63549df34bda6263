//! Gauss–Legendre and Gauss–Jacobi rules on `[-1, 1]`.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

use crate::constants::gamma;

/// A quadrature rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[a, b]` with the affinely mapped rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Legendre polynomial `P_k(x)` and its derivative, by the three-term recurrence.
pub fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    if k == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let kf = k as f64;
    let dp = kf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `k`-point Gauss–Legendre rule, nodes ascending.
pub fn gauss_legendre(k: usize) -> Rule {
    assert!(k >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let kf = k as f64;
    for i in 0..k.div_ceil(2) {
        // Tricomi initial guess, then Newton.
        let theta = PI * (i as f64 + 0.75) / (kf + 0.5);
        let mut x = (1.0 - (kf - 1.0) / (8.0 * kf * kf * kf)) * theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(k, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k - 1 - i] = x;
        weights[k - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// `k`-point Gauss–Jacobi rule for the weight `(1-x)^a (1+x)^b`, by Golub–Welsch.
pub fn gauss_jacobi(k: usize, a: f64, b: f64) -> Rule {
    assert!(k >= 1 && a > -1.0 && b > -1.0, "invalid Gauss-Jacobi parameters");
    if a == 0.0 && b == 0.0 {
        return gauss_legendre(k);
    }
    let mut jac = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let fi = i as f64;
        let s = 2.0 * fi + a + b;
        let diag = if i == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        jac[(i, i)] = diag;
        if i + 1 < k {
            let j = fi + 1.0;
            let s1 = 2.0 * j + a + b;
            let off_sq = if i == 0 {
                // (j + a + b) cancels against (s1 - 1); written out to survive a + b = -1
                4.0 * (1.0 + a) * (1.0 + b) / (s1 * s1 * (s1 + 1.0))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))
            };
            let off = off_sq.sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let mu0 = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Lagrange basis values `L_j(x)` for the given interpolation nodes.
pub fn lagrange_basis(nodes: &[f64], x: f64, out: &mut [f64]) {
    for (j, out_j) in out.iter_mut().enumerate() {
        let mut v = 1.0;
        for (k, &xk) in nodes.iter().enumerate() {
            if k != j {
                v *= (x - xk) / (nodes[j] - xk);
            }
        }
        *out_j = v;
    }
}
