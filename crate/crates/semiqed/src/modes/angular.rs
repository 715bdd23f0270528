//! Tangent vector fields on the unit sphere: the two classical families per
//! degree `ℓ` (surface gradients of real spherical harmonics and their
//! rotations by `ω ×`), numerically orthonormalized on a quadrature grid.
//!
//! Both families span eigenspaces of the Laplacian on 1-forms; the
//! `ℓ(ℓ+1)`-style eigenvalue is carried as metadata only.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::linalg::eigh_real;
use crate::numerics::quad::SphereRule;

/// The two tangent families per degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    /// Surface gradient of a spherical harmonic.
    Gradient,
    /// `ω ×` the gradient field.
    Curl,
}

/// Identifies one angular basis field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AngularLabel {
    /// Degree `ℓ ≥ 1`.
    pub l: usize,
    /// Member within the degree-`ℓ` multiplet, `0..2ℓ+1`: member 0 is the
    /// zonal harmonic, member `2k-1`/`2k` the `cos(kφ)`/`sin(kφ)` pair.
    pub member: usize,
    pub parity: Parity,
}

impl AngularLabel {
    /// `ℓ(ℓ+1)`-indexed metadata for the 1-form Laplacian eigenvalue; the
    /// exact spectrum normalization is intentionally not certified here.
    pub fn eigenvalue_hint(&self) -> f64 {
        (self.l * (self.l + 1)) as f64
    }
}

/// One angular field: label plus sampled values on the basis grid.
#[derive(Debug, Clone)]
pub struct AngularField {
    /// Flat index in the canonical enumeration.
    pub index: usize,
    pub label: AngularLabel,
    /// Sampled values `v_n(ω) ∈ R³` at the grid nodes.
    pub values: Vec<[f64; 3]>,
}

impl AngularField {
    /// Worst tangency defect `max |ω · v(ω)|` over the grid.
    pub fn tangency_defect(&self, grid: &SphereRule) -> f64 {
        self.values
            .iter()
            .zip(&grid.nodes)
            .map(|(v, o)| (v[0] * o[0] + v[1] * o[1] + v[2] * o[2]).abs())
            .fold(0.0, f64::max)
    }
}

/// Sphere grid sizes for constructing and orthonormalizing a basis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SphereGridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphereGridSpec {
    pub fn for_degree(l_max: usize) -> Self {
        SphereGridSpec {
            n_theta: 2 * l_max + 6,
            n_phi: 4 * l_max + 12,
        }
    }
}

/// Canonical number of fields through degree `l_max`: two families of
/// `2ℓ+1` members each.
pub fn field_count(l_max: usize) -> usize {
    2 * (1..=l_max).map(|l| 2 * l + 1).sum::<usize>()
}

/// The orthonormalized angular basis.
///
/// Fields are evaluable at arbitrary points (not only grid nodes); the
/// symmetric orthonormalization computed on the grid is folded into the
/// analytic evaluation.
#[derive(Debug, Clone)]
pub struct AngularBasis {
    pub l_max: usize,
    pub grid: Arc<SphereRule>,
    pub fields: Vec<AngularField>,
    /// `field_i = Σ_j mix[(j, i)] raw_j`.
    mix: Array2<f64>,
    /// Worst Gram deviation from the identity before orthonormalization.
    pub raw_gram_defect: f64,
}

impl AngularBasis {
    pub fn build(l_max: usize, spec: SphereGridSpec) -> Result<Self> {
        assert!(l_max >= 1, "build_angular_basis: l_max must be ≥ 1");
        let grid = Arc::new(SphereRule::new(spec.n_theta, spec.n_phi)?);
        // Products of two degree-ℓ tangent fields are spherical polynomials
        // of degree at most 2ℓ + 2; the rule must integrate them exactly.
        if grid.exact_degree() < 2 * l_max + 2 {
            return Err(Error::GridResolution(format!(
                "sphere rule exact to degree {} cannot orthonormalize fields up to l_max = {} \
                 (needs degree {})",
                grid.exact_degree(),
                l_max,
                2 * l_max + 2
            )));
        }

        let labels: Vec<AngularLabel> = enumerate_labels(l_max);
        let n = labels.len();
        let raw_values: Vec<Vec<[f64; 3]>> = labels
            .iter()
            .map(|lab| grid.nodes.iter().map(|o| raw_eval(lab, o)).collect())
            .collect();

        // Gram matrix on the grid.
        let mut gram = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (k, &w) in grid.weights.iter().enumerate() {
                    let a = &raw_values[i][k];
                    let b = &raw_values[j][k];
                    acc += w * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
                }
                gram[[i, j]] = acc;
                gram[[j, i]] = acc;
            }
        }
        let mut raw_gram_defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                raw_gram_defect = raw_gram_defect.max((gram[[i, j]] - want).abs());
            }
        }
        if raw_gram_defect > 1e-3 {
            return Err(Error::GridResolution(format!(
                "raw angular Gram deviates from identity by {raw_gram_defect:.3e}; \
                 grid too coarse for l_max = {l_max}"
            )));
        }

        // Symmetric (Löwdin) orthonormalization: mix = S^{-1/2}.
        let (evals, evecs) = eigh_real(&gram)?;
        if evals.iter().any(|&l| l <= 0.0) {
            return Err(Error::GridResolution(
                "angular Gram matrix is numerically singular".into(),
            ));
        }
        let mut mix = Array2::<f64>::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += evecs[[a, k]] * evecs[[b, k]] / evals[k].sqrt();
                }
                mix[[a, b]] = acc;
            }
        }

        let fields = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| {
                let mut values = vec![[0.0; 3]; grid.nodes.len()];
                for j in 0..n {
                    let c = mix[[j, i]];
                    if c == 0.0 {
                        continue;
                    }
                    for (v, raw) in values.iter_mut().zip(&raw_values[j]) {
                        v[0] += c * raw[0];
                        v[1] += c * raw[1];
                        v[2] += c * raw[2];
                    }
                }
                AngularField {
                    index: i,
                    label,
                    values,
                }
            })
            .collect();

        Ok(AngularBasis {
            l_max,
            grid,
            fields,
            mix,
            raw_gram_defect,
        })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Evaluate field `i` at an arbitrary unit vector.
    pub fn eval(&self, i: usize, omega: &[f64; 3]) -> [f64; 3] {
        let labels = enumerate_labels(self.l_max);
        let mut out = [0.0; 3];
        for (j, lab) in labels.iter().enumerate() {
            let c = self.mix[[j, i]];
            if c.abs() < 1e-300 {
                continue;
            }
            let raw = raw_eval(lab, omega);
            out[0] += c * raw[0];
            out[1] += c * raw[1];
            out[2] += c * raw[2];
        }
        out
    }

    /// Gram matrix of the orthonormalized fields on the grid.
    pub fn gram(&self) -> Array2<f64> {
        let n = self.len();
        let mut g = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for (k, &w) in self.grid.weights.iter().enumerate() {
                    let a = &self.fields[i].values[k];
                    let b = &self.fields[j].values[k];
                    acc += w * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
                }
                g[[i, j]] = acc;
            }
        }
        g
    }
}

/// Build the orthonormalized angular fields through degree `l_max` on the
/// default grid for that degree.
pub fn build_angular_basis(l_max: usize) -> Result<Vec<AngularField>> {
    Ok(AngularBasis::build(l_max, SphereGridSpec::for_degree(l_max))?.fields)
}

/// Canonical enumeration: degrees ascending, Gradient family before Curl,
/// members ascending within each multiplet.
pub fn enumerate_labels(l_max: usize) -> Vec<AngularLabel> {
    let mut out = Vec::with_capacity(field_count(l_max));
    for l in 1..=l_max {
        for parity in [Parity::Gradient, Parity::Curl] {
            for member in 0..(2 * l + 1) {
                out.push(AngularLabel { l, member, parity });
            }
        }
    }
    out
}

/// Associated Legendre `P_l^m(x)` with the Condon-Shortley phase.
fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= l);
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2.0 * m as f64 + 1.0) * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        let llf = ll as f64;
        let mf = m as f64;
        pll = (x * (2.0 * llf - 1.0) * pmmp1 - (llf + mf - 1.0) * pmm) / (llf - mf);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Real spherical harmonic data at a point: value and angular derivatives.
struct HarmonicJet {
    d_theta: f64,
    d_phi_over_sin: f64,
}

fn harmonic_jet(l: usize, member: usize, cos_t: f64, sin_t: f64, phi: f64) -> HarmonicJet {
    let (m, use_cos) = if member == 0 {
        (0usize, true)
    } else {
        ((member + 1) / 2, member % 2 == 1)
    };
    let mf = m as f64;
    let lf = l as f64;

    // Normalization of the real harmonics: √2 enters for m > 0.
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio *= k as f64;
    }
    let mut norm = ((2.0 * lf + 1.0) / (4.0 * std::f64::consts::PI) / ratio).sqrt();
    if m > 0 {
        norm *= std::f64::consts::SQRT_2;
    }

    let p = assoc_legendre(l, m, cos_t);
    let p_prev = if l >= 1 && m <= l - 1 {
        assoc_legendre(l - 1, m, cos_t)
    } else {
        0.0
    };
    // dP_l^m(cos θ)/dθ = [l cosθ P_l^m - (l+m) P_{l-1}^m] / sinθ.
    let dp_dtheta = (lf * cos_t * p - (lf + mf) * p_prev) / sin_t;

    let (trig, dtrig) = if use_cos {
        ((mf * phi).cos(), -mf * (mf * phi).sin())
    } else {
        ((mf * phi).sin(), mf * (mf * phi).cos())
    };

    HarmonicJet {
        d_theta: norm * dp_dtheta * trig,
        // (1/sinθ) ∂_φ Y; P_l^m carries a sin^mθ factor so the ratio is
        // finite, and the quadrature grid never touches the poles.
        d_phi_over_sin: norm * p * dtrig / sin_t,
    }
}

/// Evaluate a raw (pre-orthonormalization) family member at a unit vector.
fn raw_eval(label: &AngularLabel, omega: &[f64; 3]) -> [f64; 3] {
    let cos_t = omega[2].clamp(-1.0, 1.0);
    let sin_t = (1.0 - cos_t * cos_t).max(1e-300).sqrt();
    let phi = omega[1].atan2(omega[0]);

    let jet = harmonic_jet(label.l, label.member, cos_t, sin_t, phi);
    let theta_hat = [cos_t * phi.cos(), cos_t * phi.sin(), -sin_t];
    let phi_hat = [-phi.sin(), phi.cos(), 0.0];

    let scale = 1.0 / label.eigenvalue_hint().sqrt();
    let grad = [
        scale * (jet.d_theta * theta_hat[0] + jet.d_phi_over_sin * phi_hat[0]),
        scale * (jet.d_theta * theta_hat[1] + jet.d_phi_over_sin * phi_hat[1]),
        scale * (jet.d_theta * theta_hat[2] + jet.d_phi_over_sin * phi_hat[2]),
    ];
    match label.parity {
        Parity::Gradient => grad,
        Parity::Curl => cross(omega, &grad),
    }
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn field_count_matches_multiplet_sizes() {
        // Two families with 2ℓ+1 members each: 2·(3+5) = 16 for l_max = 2.
        assert_eq!(field_count(2), 16);
        let basis = AngularBasis::build(2, SphereGridSpec::for_degree(2)).unwrap();
        assert_eq!(basis.len(), 16);
    }

    #[test]
    fn tangency_is_exact() {
        let basis = AngularBasis::build(2, SphereGridSpec::for_degree(2)).unwrap();
        for field in &basis.fields {
            assert!(field.tangency_defect(&basis.grid) < 1e-12);
        }
    }

    #[test]
    fn gram_is_identity() {
        let basis = AngularBasis::build(3, SphereGridSpec::for_degree(3)).unwrap();
        let g = basis.gram();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g[[i, j]], want, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let err = AngularBasis::build(
            3,
            SphereGridSpec {
                n_theta: 3,
                n_phi: 6,
            },
        );
        assert!(matches!(err, Err(Error::GridResolution(_))));
    }

    #[test]
    fn analytic_eval_matches_grid_samples() {
        let basis = AngularBasis::build(2, SphereGridSpec::for_degree(2)).unwrap();
        for (k, omega) in basis.grid.nodes.iter().enumerate().step_by(17) {
            for i in [0usize, 3, 9, 15] {
                let via_eval = basis.eval(i, omega);
                let sampled = basis.fields[i].values[k];
                for c in 0..3 {
                    assert_abs_diff_eq!(via_eval[c], sampled[c], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn curl_family_is_omega_cross_gradient() {
        let basis = AngularBasis::build(1, SphereGridSpec::for_degree(1)).unwrap();
        // Fields 0..3 are Gradient, 3..6 Curl with matching members.
        for k in (0..basis.grid.nodes.len()).step_by(7) {
            let omega = basis.grid.nodes[k];
            for member in 0..3 {
                let g = basis.fields[member].values[k];
                let c = basis.fields[3 + member].values[k];
                let want = cross(&omega, &g);
                for i in 0..3 {
                    assert_abs_diff_eq!(c[i], want[i], epsilon = 1e-10);
                }
            }
        }
    }
}
