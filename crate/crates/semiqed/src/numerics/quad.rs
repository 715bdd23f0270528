//! Gaussian quadrature rules and the product rule on the unit sphere.
//!
//! Nodes and weights come from the Golub-Welsch algorithm: the rules are the
//! eigendecompositions of the Jacobi matrices of the respective orthogonal
//! polynomial families. For the smooth integrands in this crate this gives
//! machine-precision rules at modest node counts.

use ndarray::Array2;
use ndarray_linalg::Eigh;

use crate::error::{Error, Result};

/// A one-dimensional quadrature rule: paired nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn golub_welsch(diag: &[f64], offdiag: &[f64], moment0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut jac = Array2::<f64>::zeros((n, n));
    for (i, &d) in diag.iter().enumerate() {
        jac[[i, i]] = d;
    }
    for (i, &e) in offdiag.iter().enumerate() {
        jac[[i, i + 1]] = e;
        jac[[i + 1, i]] = e;
    }
    let (evals, evecs) = jac
        .eigh(ndarray_linalg::UPLO::Lower)
        .map_err(|e| Error::Linalg(format!("Golub-Welsch eigensolve: {e}")))?;
    let nodes: Vec<f64> = evals.to_vec();
    let weights: Vec<f64> = (0..n).map(|k| moment0 * evecs[[0, k]].powi(2)).collect();
    Ok((nodes, weights))
}

/// Gauss-Legendre rule on `[-1, 1]` with `n` nodes (exact for polynomials of
/// degree `2n-1`).
pub fn gauss_legendre(n: usize) -> Result<Rule1d> {
    assert!(n >= 1, "gauss_legendre: need at least one node");
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let (nodes, weights) = golub_welsch(&diag, &offdiag, 2.0)?;
    Ok(Rule1d { nodes, weights })
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Result<Rule1d> {
    let base = gauss_legendre(n)?;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Ok(Rule1d {
        nodes: base.nodes.iter().map(|&x| mid + half * x).collect(),
        weights: base.weights.iter().map(|&w| half * w).collect(),
    })
}

/// Gauss-Hermite rule for the weight `e^{-x^2}` on the real line.
pub fn gauss_hermite(n: usize) -> Result<Rule1d> {
    assert!(n >= 1, "gauss_hermite: need at least one node");
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let (nodes, weights) = golub_welsch(&diag, &offdiag, std::f64::consts::PI.sqrt())?;
    Ok(Rule1d { nodes, weights })
}

/// A quadrature grid on the unit sphere: unit vectors and weights summing to
/// `4π`.
///
/// Product rule: Gauss-Legendre in `cos θ` times the trapezoid rule in `φ`
/// (exact for trigonometric polynomials). The rule integrates spherical
/// polynomials of degree `min(2 n_theta - 1, n_phi - 1)` exactly.
#[derive(Debug, Clone)]
pub struct SphereRule {
    /// Unit vectors ω.
    pub nodes: Vec<[f64; 3]>,
    /// Weights, Σw = 4π.
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        let polar = gauss_legendre(n_theta)?;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        for (ct, wt) in polar.nodes.iter().zip(&polar.weights) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for i in 0..n_phi {
                let phi = dphi * i as f64;
                nodes.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(wt * dphi);
            }
        }
        Ok(SphereRule {
            nodes,
            weights,
            n_theta,
            n_phi,
        })
    }

    /// Largest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        (2 * self.n_theta - 1).min(self.n_phi.saturating_sub(1))
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(omega, &w)| w * f(omega))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8).unwrap();
        // ∫_{-1}^{1} x^14 dx = 2/15, degree 14 < 2*8.
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(14)), 2.0 / 15.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(13)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_on_interval() {
        let rule = gauss_legendre_on(40, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(rule.integrate(|x| x * x), 8.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            rule.integrate(|x| (-x).exp()),
            1.0 - (-2.0f64).exp(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn hermite_moments() {
        let rule = gauss_hermite(20).unwrap();
        assert_abs_diff_eq!(rule.integrate(|_| 1.0), PI.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(rule.integrate(|x| x * x), PI.sqrt() / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            rule.integrate(|x| x.cos()),
            PI.sqrt() * (-0.25f64).exp(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn sphere_rule_basics() {
        let rule = SphereRule::new(12, 24).unwrap();
        assert_abs_diff_eq!(rule.integrate(|_| 1.0), 4.0 * PI, epsilon = 1e-12);
        // ∫ ω_3^2 dμ = 4π/3, odd moments vanish.
        assert_abs_diff_eq!(rule.integrate(|o| o[2] * o[2]), 4.0 * PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rule.integrate(|o| o[0]), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.integrate(|o| o[0] * o[1]), 0.0, epsilon = 1e-13);
    }
}
