//! Coupling coefficients of the field linear forms against the mode basis,
//! computed by radial × sphere quadrature.
//!
//! The integrand carries the momentum-cutoff function `χ`, a Schwartz-class
//! function vanishing in a neighborhood of the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::angular::{cross, AngularBasis};
use crate::modes::radial::{eval_radial, RadialGridSpec};
use crate::numerics::quad::{gauss_legendre_on, SphereRule};
use crate::C64;

/// Momentum cutoff descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffSpec {
    /// Identically zero; decouples the field.
    Zero,
    /// `χ(r) = exp(-1/(r - r0)) exp(-r)` for `r > r0`, zero otherwise:
    /// smooth, vanishing below `r0` and rapidly decaying.
    SmoothExp { r0: f64 },
}

impl CutoffSpec {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            CutoffSpec::Zero => 0.0,
            CutoffSpec::SmoothExp { r0 } => {
                if r <= *r0 {
                    0.0
                } else {
                    (-1.0 / (r - r0)).exp() * (-r).exp()
                }
            }
        }
    }

    /// Lower edge of the support.
    pub fn support_lower(&self) -> f64 {
        match self {
            CutoffSpec::Zero => 0.0,
            CutoffSpec::SmoothExp { r0 } => *r0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CutoffSpec::Zero)
    }

    /// The standing assumption on the cutoff: it must vanish in a
    /// neighborhood of the origin.
    pub fn validate(&self) -> Result<()> {
        match self {
            CutoffSpec::Zero => Ok(()),
            CutoffSpec::SmoothExp { r0 } => {
                if *r0 > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "cutoff must vanish in a neighborhood of 0: r0 = {r0} is not positive"
                    )))
                }
            }
        }
    }
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec::SmoothExp { r0: 0.2 }
    }
}

/// Quadrature settings for coupling integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingQuadSpec {
    pub radial: RadialGridSpec,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Node-doubling error estimates above this are reported as failures.
    pub tolerance: f64,
}

impl Default for CouplingQuadSpec {
    fn default() -> Self {
        CouplingQuadSpec {
            radial: RadialGridSpec::default(),
            n_theta: 24,
            n_phi: 48,
            tolerance: 1e-9,
        }
    }
}

const TWO_PI_POW: f64 = 15.749_609_945_722_419; // (2π)^{3/2}

/// The field integrand `B_{j,x,s}(k)` dotted against the mode `f_{mn}(k)`,
/// integrated over `R³`:
///
/// `c = ∫ B(k) · f(k) dk`, with
/// `B(k) = i χ(|k|)|k|^{1/2} (2π)^{-3/2} e^{i(s|k| - k·x)} (k ∧ e_j)/|k|`.
///
/// The real part couples to `q`, the imaginary part to `p`.
pub fn coupling_coefficient(
    radial_m: usize,
    basis: &AngularBasis,
    angular_index: usize,
    pauli_j: usize,
    position: [f64; 3],
    s: f64,
    cutoff: &CutoffSpec,
    spec: &CouplingQuadSpec,
) -> Result<C64> {
    cutoff.validate()?;
    if cutoff.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let coarse = coupling_raw(radial_m, basis, angular_index, pauli_j, position, s, cutoff, spec)?;
    let fine_spec = CouplingQuadSpec {
        radial: RadialGridSpec {
            r_max: spec.radial.r_max,
            node_count: spec.radial.node_count * 2,
        },
        n_theta: spec.n_theta * 2,
        n_phi: spec.n_phi * 2,
        tolerance: spec.tolerance,
    };
    let fine = coupling_raw(
        radial_m,
        basis,
        angular_index,
        pauli_j,
        position,
        s,
        cutoff,
        &fine_spec,
    )?;
    let estimate = (fine - coarse).norm();
    if estimate > spec.tolerance {
        return Err(Error::QuadratureNonConvergent {
            estimate,
            tolerance: spec.tolerance,
            context: format!(
                "coupling coefficient m={radial_m} n={angular_index} j={pauli_j} at {position:?}"
            ),
        });
    }
    Ok(fine)
}

/// Single-resolution tensor quadrature (no error estimate).
#[allow(clippy::too_many_arguments)]
pub fn coupling_raw(
    radial_m: usize,
    basis: &AngularBasis,
    angular_index: usize,
    pauli_j: usize,
    position: [f64; 3],
    s: f64,
    cutoff: &CutoffSpec,
    spec: &CouplingQuadSpec,
) -> Result<C64> {
    assert!(pauli_j < 3, "pauli_j is the Cartesian index 0..3");
    let sphere = SphereRule::new(spec.n_theta, spec.n_phi)?;
    let radial = gauss_legendre_on(
        spec.radial.node_count,
        cutoff.support_lower(),
        spec.radial.r_max,
    )?;

    let e_j = unit(pauli_j);
    // Angular factor per node: (ω ∧ e_j) · v_n(ω) and the phase base ω·x.
    let angular_dots: Vec<f64> = sphere
        .nodes
        .iter()
        .map(|omega| {
            let w = cross(omega, &e_j);
            let v = basis.eval(angular_index, omega);
            w[0] * v[0] + w[1] * v[1] + w[2] * v[2]
        })
        .collect();
    let omega_dot_x: Vec<f64> = sphere
        .nodes
        .iter()
        .map(|o| o[0] * position[0] + o[1] * position[1] + o[2] * position[2])
        .collect();

    let mut total = C64::new(0.0, 0.0);
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        let chi = cutoff.eval(r);
        if chi == 0.0 {
            continue;
        }
        let radial_factor = chi * r.sqrt() * eval_radial(radial_m, r) * r * r;
        if radial_factor == 0.0 {
            continue;
        }
        let mut ang = C64::new(0.0, 0.0);
        for ((&dot, &ox), &ws) in angular_dots.iter().zip(&omega_dot_x).zip(&sphere.weights) {
            // i e^{i(s r - r ω·x)}
            let phase = C64::from_polar(1.0, s * r - r * ox) * C64::i();
            ang += phase * (ws * dot);
        }
        total += ang * (wr * radial_factor);
    }
    Ok(total / TWO_PI_POW)
}

/// Factorized evaluation valid at `position = 0`: the integral splits into a
/// radial factor times an angular factor.
pub fn coupling_factorized_origin(
    radial_m: usize,
    basis: &AngularBasis,
    angular_index: usize,
    pauli_j: usize,
    s: f64,
    cutoff: &CutoffSpec,
    spec: &CouplingQuadSpec,
) -> Result<C64> {
    cutoff.validate()?;
    if cutoff.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let radial = gauss_legendre_on(
        spec.radial.node_count,
        cutoff.support_lower(),
        spec.radial.r_max,
    )?;
    let mut radial_part = C64::new(0.0, 0.0);
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        let chi = cutoff.eval(r);
        if chi == 0.0 {
            continue;
        }
        let f = chi * r.sqrt() * eval_radial(radial_m, r) * r * r;
        radial_part += C64::from_polar(1.0, s * r) * (wr * f);
    }

    let sphere = SphereRule::new(spec.n_theta, spec.n_phi)?;
    let e_j = unit(pauli_j);
    let angular_part: f64 = sphere
        .nodes
        .iter()
        .zip(&sphere.weights)
        .map(|(omega, &w)| {
            let c = cross(omega, &e_j);
            let v = basis.eval(angular_index, omega);
            w * (c[0] * v[0] + c[1] * v[1] + c[2] * v[2])
        })
        .sum();

    Ok(C64::i() * radial_part * angular_part / TWO_PI_POW)
}

fn unit(j: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[j] = 1.0;
    e
}
