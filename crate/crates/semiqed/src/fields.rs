//! Magnetic and electric field symbols and their classical identities.
//!
//! The magnetic symbol at `x` pairs the integrand
//! `B_{j,x,t}(k) = i χ(|k|) |k|^{1/2} (2π)^{-3/2} e^{i(t|k| - k·x)} (k∧e_j)/|k|`
//! against the phase-space variables; the electric symbol applies the
//! helicity `(k ∧ ·)/|k|` first and flips the sign. Both a continuum
//! representation (integrand against test functions, by quadrature) and a
//! mode-truncated representation (coefficient vectors over a `ModeModel`) are
//! supported; the commutation relation with the `ρ` kernel lives in the
//! continuum and is approached by the truncations as the mode set grows.

use crate::error::{Error, Result};
use crate::modes::angular::cross;
use crate::modes::coupling::CouplingQuadSpec;
use crate::modes::{AngularBasis, CutoffSpec, ModeIndex, ModeModel, ModelKind};
use crate::numerics::quad::{gauss_legendre_on, SphereRule};
use crate::phasespace::{FreeFlow, LinearSymbol, PhasePoint};
use crate::{C64, CVec};

const TWO_PI_CUBED: f64 = 248.05021344239853; // (2π)³
const TWO_PI_POW_3_2: f64 = 15.749609945722419; // (2π)^{3/2}

/// Which field component family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Magnetic,
    Electric,
}

/// A continuum phase-space state: transverse vector fields `(q, p)` on
/// momentum space, evaluable pointwise.
pub trait PhaseSpacePair {
    fn q(&self, k: &[f64; 3]) -> [f64; 3];
    fn p(&self, k: &[f64; 3]) -> [f64; 3];
    fn is_zero(&self) -> bool {
        false
    }
}

/// A smooth divergence-free test pair `(q, p)`:
/// `q(k) = (k ∧ u) e^{-s_u |k|²}`, `p(k) = (k ∧ v) e^{-s_v |k|²}`.
#[derive(Debug, Clone)]
pub struct GaussianTestPair {
    pub u: [f64; 3],
    pub s_u: f64,
    pub v: [f64; 3],
    pub s_v: f64,
}

impl PhaseSpacePair for GaussianTestPair {
    fn q(&self, k: &[f64; 3]) -> [f64; 3] {
        let c = cross(k, &self.u);
        let g = (-self.s_u * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2])).exp();
        [c[0] * g, c[1] * g, c[2] * g]
    }

    fn p(&self, k: &[f64; 3]) -> [f64; 3] {
        let c = cross(k, &self.v);
        let g = (-self.s_v * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2])).exp();
        [c[0] * g, c[1] * g, c[2] * g]
    }

    fn is_zero(&self) -> bool {
        self.u == [0.0; 3] && self.v == [0.0; 3]
    }
}

/// The mode expansion of a truncated phase point as a continuum pair:
/// `q(k) = Σ_i q_i f_{m_i n_i}(k)` and likewise for `p`.
pub struct ModeExpansionPair<'a> {
    pub modes: &'a [ModeIndex],
    pub basis: &'a AngularBasis,
    pub at: &'a PhasePoint,
}

impl PhaseSpacePair for ModeExpansionPair<'_> {
    fn q(&self, k: &[f64; 3]) -> [f64; 3] {
        self.expand(k, &self.at.q)
    }

    fn p(&self, k: &[f64; 3]) -> [f64; 3] {
        self.expand(k, &self.at.p)
    }
}

impl ModeExpansionPair<'_> {
    fn expand(&self, k: &[f64; 3], coords: &ndarray::Array1<f64>) -> [f64; 3] {
        let r = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let omega = [k[0] / r, k[1] / r, k[2] / r];
        let mut out = [0.0; 3];
        for (i, mode) in self.modes.iter().enumerate() {
            let c = coords[i];
            if c == 0.0 {
                continue;
            }
            let radial = crate::modes::eval_radial(mode.m, r);
            let v = self.basis.eval(mode.n, &omega);
            out[0] += c * radial * v[0];
            out[1] += c * radial * v[1];
            out[2] += c * radial * v[2];
        }
        out
    }
}

/// Pointwise helicity image `(Jq)(k) = (k ∧ q(k))/|k|` of a pair.
pub struct HelicityPair<'a> {
    inner: &'a dyn PhaseSpacePair,
}

impl<'a> HelicityPair<'a> {
    pub fn new(inner: &'a dyn PhaseSpacePair) -> Self {
        HelicityPair { inner }
    }
}

impl PhaseSpacePair for HelicityPair<'_> {
    fn q(&self, k: &[f64; 3]) -> [f64; 3] {
        let r = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let q = self.inner.q(k);
        let c = cross(k, &q);
        [c[0] / r, c[1] / r, c[2] / r]
    }

    fn p(&self, k: &[f64; 3]) -> [f64; 3] {
        let r = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let p = self.inner.p(k);
        let c = cross(k, &p);
        [c[0] / r, c[1] / r, c[2] / r]
    }
}

/// Evaluate a field symbol in the continuum representation against a test
/// pair by radial × sphere quadrature:
///
/// `B_j(x, t; q, p) = (2π)^{-3/2} ∫ χ(r) r^{1/2} [ -sin(tr - k·x) w_j·q(k)
///                    + cos(tr - k·x) w_j·p(k) ] dk`
///
/// with `w_j = (k ∧ e_j)/|k|`; the electric kind uses `-B_j` with the
/// helicity applied to the pair.
pub fn field_symbol_continuum(
    kind: FieldKind,
    j: usize,
    x: [f64; 3],
    t: f64,
    pair: &dyn PhaseSpacePair,
    cutoff: &CutoffSpec,
    quad: &CouplingQuadSpec,
) -> Result<f64> {
    assert!(j < 3, "field component index out of range");
    cutoff.validate()?;
    if cutoff.is_zero() || pair.is_zero() {
        return Ok(0.0);
    }
    let radial = gauss_legendre_on(
        quad.radial.node_count,
        cutoff.support_lower(),
        quad.radial.r_max,
    )?;
    let sphere = SphereRule::new(quad.n_theta, quad.n_phi)?;
    let e_j = unit(j);
    let sign = match kind {
        FieldKind::Magnetic => 1.0,
        FieldKind::Electric => -1.0,
    };
    let hel;
    let effective: &dyn PhaseSpacePair = match kind {
        FieldKind::Magnetic => pair,
        FieldKind::Electric => {
            hel = HelicityPair::new(pair);
            &hel
        }
    };
    let mut total = 0.0;
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        let chi = cutoff.eval(r);
        if chi == 0.0 {
            continue;
        }
        let amp = chi * r.sqrt() * r * r * wr;
        let mut ang = 0.0;
        for (omega, &ws) in sphere.nodes.iter().zip(&sphere.weights) {
            let k = [r * omega[0], r * omega[1], r * omega[2]];
            let w_j = cross(omega, &e_j);
            let (qv, pv) = (effective.q(&k), effective.p(&k));
            let phase = t * r - (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
            ang += ws
                * (-phase.sin() * dot(&w_j, &qv) + phase.cos() * dot(&w_j, &pv));
        }
        total += amp * ang;
    }
    Ok(sign * total / TWO_PI_POW_3_2)
}

/// Mode-truncated field symbol: complex coefficient vector of the field
/// integrand against the retained modes, at `t = 0`.
///
/// The real part couples to `q`, the imaginary part to `p`. The electric
/// kind applies the helicity to the integrand before projecting; moving the
/// helicity off the phase-space pair onto the integrand absorbs the sign of
/// `E = -B ∘ J` because the helicity is skew-adjoint.
pub fn field_mode_coefficients(
    kind: FieldKind,
    j: usize,
    x: [f64; 3],
    modes: &[ModeIndex],
    basis: &AngularBasis,
    cutoff: &CutoffSpec,
    quad: &CouplingQuadSpec,
) -> Result<CVec> {
    assert!(j < 3, "field component index out of range");
    cutoff.validate()?;
    let mut out = CVec::zeros(modes.len());
    if cutoff.is_zero() {
        return Ok(out);
    }
    let radial = gauss_legendre_on(
        quad.radial.node_count,
        cutoff.support_lower(),
        quad.radial.r_max,
    )?;
    let sphere = SphereRule::new(quad.n_theta, quad.n_phi)?;
    let e_j = unit(j);

    // Angular dot products per retained angular index.
    let angular_indices: Vec<usize> = modes.iter().map(|m| m.n).collect();
    let dots: Vec<Vec<f64>> = angular_indices
        .iter()
        .map(|&n| {
            sphere
                .nodes
                .iter()
                .map(|omega| {
                    let w = match kind {
                        FieldKind::Magnetic => cross(omega, &e_j),
                        FieldKind::Electric => {
                            let inner = cross(omega, &e_j);
                            cross(omega, &inner)
                        }
                    };
                    let v = basis.eval(n, omega);
                    dot(&w, &v)
                })
                .collect()
        })
        .collect();
    let omega_dot_x: Vec<f64> = sphere
        .nodes
        .iter()
        .map(|o| o[0] * x[0] + o[1] * x[1] + o[2] * x[2])
        .collect();

    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        let chi = cutoff.eval(r);
        if chi == 0.0 {
            continue;
        }
        for (idx, mode) in modes.iter().enumerate() {
            let radial_factor = chi * r.sqrt() * crate::modes::eval_radial(mode.m, r) * r * r;
            if radial_factor == 0.0 {
                continue;
            }
            let mut ang = C64::new(0.0, 0.0);
            for (node, &ws) in sphere.weights.iter().enumerate() {
                let phase = C64::from_polar(1.0, -r * omega_dot_x[node]) * C64::i();
                ang += phase * (ws * dots[idx][node]);
            }
            out[idx] += ang * (wr * radial_factor);
        }
    }
    Ok(out / TWO_PI_POW_3_2)
}

/// Field symbol over a computed `ModeModel`, evaluable at phase points with
/// the free-flow time dependence `c(t) = e^{i t W} c(0)`.
pub struct TruncatedField {
    coeffs0: CVec,
    flow: FreeFlow,
}

impl TruncatedField {
    pub fn new(
        kind: FieldKind,
        j: usize,
        x: [f64; 3],
        model: &ModeModel,
    ) -> Result<Self> {
        let ModelKind::Computed { modes, .. } = &model.kind else {
            return Err(Error::NoRotation(
                "mode-truncated fields need a computed model".into(),
            ));
        };
        let basis = model.angular_basis()?;
        let coeffs0 = field_mode_coefficients(
            kind,
            j,
            x,
            modes,
            &basis,
            &model.cutoff,
            &model.provenance.coupling_quad,
        )?;
        Ok(TruncatedField {
            coeffs0,
            flow: FreeFlow::new(&model.w)?,
        })
    }

    /// The symbol as a linear form at time `t`.
    pub fn symbol_at(&self, t: f64) -> LinearSymbol {
        LinearSymbol::from_complex(&self.flow.rotate_coefficients(t, &self.coeffs0))
    }

    pub fn eval(&self, t: f64, x_point: &PhasePoint) -> f64 {
        self.symbol_at(t).eval(x_point)
    }
}

/// `ρ(x) = (2π)^{-3} ∫ |χ(|k|)|² cos(k·x) dk`, reduced to the radial
/// integral `(2π)^{-3} 4π ∫ χ(r)² r² sinc(r|x|) dr`.
pub fn rho_eval(x: [f64; 3], cutoff: &CutoffSpec, quad: &CouplingQuadSpec) -> Result<f64> {
    cutoff.validate()?;
    if cutoff.is_zero() {
        return Ok(0.0);
    }
    let radial = gauss_legendre_on(
        quad.radial.node_count,
        cutoff.support_lower(),
        quad.radial.r_max,
    )?;
    let x_norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let sinc = |z: f64| if z.abs() < 1e-12 { 1.0 } else { z.sin() / z };
    let val = radial.integrate(|r| {
        let chi = cutoff.eval(r);
        chi * chi * r * r * sinc(r * x_norm)
    });
    Ok(4.0 * std::f64::consts::PI * val / TWO_PI_CUBED)
}

/// One truncation level of the commutator convergence study.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CommutatorRow {
    pub n_modes: usize,
    /// Truncated bracket `{E_1(x), B_2(y)}`.
    pub bracket: f64,
    /// Continuum target `-∂₃ρ(y - x)` by finite differences of `ρ`.
    pub target: f64,
    pub rel_error: f64,
    /// Worst same-kind bracket over `B-B` and `E-E` pairs.
    pub same_kind_worst: f64,
}

/// Commutator study across a sequence of growing truncations.
///
/// For Segal fields, `[A, B] = (h/i){F, G}`; the truncated bracket of the
/// `E_1(x)` and `B_2(y)` symbols must approach `-∂₃ρ(y-x)` (so that the
/// commutator is `i h ∂₃ρ(y-x)`), while same-kind brackets vanish at every
/// truncation.
pub fn commutator_check(
    x: [f64; 3],
    y: [f64; 3],
    truncations: &[Vec<ModeIndex>],
    basis: &AngularBasis,
    cutoff: &CutoffSpec,
    quad: &CouplingQuadSpec,
) -> Result<Vec<CommutatorRow>> {
    // Target -∂₃ρ(y - x) by central differences of ρ.
    let d = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
    let fd = 1e-4;
    let rho_plus = rho_eval([d[0], d[1], d[2] + fd], cutoff, quad)?;
    let rho_minus = rho_eval([d[0], d[1], d[2] - fd], cutoff, quad)?;
    let target = -(rho_plus - rho_minus) / (2.0 * fd);

    let mut rows = Vec::with_capacity(truncations.len());
    for modes in truncations {
        let e1 = field_mode_coefficients(FieldKind::Electric, 0, x, modes, basis, cutoff, quad)?;
        let b2 = field_mode_coefficients(FieldKind::Magnetic, 1, y, modes, basis, cutoff, quad)?;
        let bracket = bracket_of(&e1, &b2);

        let mut same_kind_worst = 0.0f64;
        for (ka, kb, ja, jb) in [
            (FieldKind::Magnetic, FieldKind::Magnetic, 0usize, 1usize),
            (FieldKind::Magnetic, FieldKind::Magnetic, 2, 2),
            (FieldKind::Electric, FieldKind::Electric, 0, 1),
            (FieldKind::Electric, FieldKind::Electric, 1, 1),
        ] {
            let ca = field_mode_coefficients(ka, ja, x, modes, basis, cutoff, quad)?;
            let cb = field_mode_coefficients(kb, jb, y, modes, basis, cutoff, quad)?;
            same_kind_worst = same_kind_worst.max(bracket_of(&ca, &cb).abs());
        }

        rows.push(CommutatorRow {
            n_modes: modes.len(),
            bracket,
            target,
            rel_error: (bracket - target).abs() / target.abs().max(1e-300),
            same_kind_worst,
        });
    }
    Ok(rows)
}

/// `{F, G} = (b_F, a_G) - (a_F, b_G) = Im Σ_k c^F_k conj(c^G_k)` over
/// truncated complex coefficient vectors.
fn bracket_of(cf: &CVec, cg: &CVec) -> f64 {
    cf.iter()
        .zip(cg.iter())
        .map(|(a, b)| (a * b.conj()).im)
        .sum()
}

/// Field representation for residual scans: continuum pair or a truncated
/// model at a fixed phase point.
pub enum FieldRep<'a> {
    Continuum {
        pair: &'a dyn PhaseSpacePair,
        cutoff: &'a CutoffSpec,
        quad: &'a CouplingQuadSpec,
    },
    Modes {
        model: &'a ModeModel,
        at: &'a PhasePoint,
    },
}

impl FieldRep<'_> {
    pub fn eval(&self, kind: FieldKind, j: usize, x: [f64; 3], t: f64) -> Result<f64> {
        match self {
            FieldRep::Continuum { pair, cutoff, quad } => {
                field_symbol_continuum(kind, j, x, t, *pair, cutoff, quad)
            }
            FieldRep::Modes { model, at } => {
                Ok(TruncatedField::new(kind, j, x, *model)?.eval(t, at))
            }
        }
    }
}

/// Sup-norms of the Maxwell residuals over the sample points, with central
/// differences of spacing `dx` (space) and `dt` (time).
#[derive(Debug, Clone, serde::Serialize)]
pub struct MaxwellResiduals {
    pub div_b: f64,
    pub div_e: f64,
    /// `∂_t B + rot E`.
    pub faraday: f64,
    /// `∂_t E - rot B`.
    pub ampere: f64,
}

impl MaxwellResiduals {
    pub fn worst(&self) -> f64 {
        self.div_b.max(self.div_e).max(self.faraday).max(self.ampere)
    }
}

/// Evaluate the Maxwell residuals of the field symbols on a set of
/// space-time sample points.
pub fn maxwell_residuals(
    rep: &FieldRep<'_>,
    samples: &[([f64; 3], f64)],
    dx: f64,
    dt: f64,
) -> Result<MaxwellResiduals> {
    let mut out = MaxwellResiduals {
        div_b: 0.0,
        div_e: 0.0,
        faraday: 0.0,
        ampere: 0.0,
    };
    for &(x, t) in samples {
        let shift = |x: [f64; 3], axis: usize, delta: f64| {
            let mut y = x;
            y[axis] += delta;
            y
        };
        let deriv_x = |kind: FieldKind, j: usize, axis: usize| -> Result<f64> {
            let plus = rep.eval(kind, j, shift(x, axis, dx), t)?;
            let minus = rep.eval(kind, j, shift(x, axis, -dx), t)?;
            Ok((plus - minus) / (2.0 * dx))
        };
        let deriv_t = |kind: FieldKind, j: usize| -> Result<f64> {
            let plus = rep.eval(kind, j, x, t + dt)?;
            let minus = rep.eval(kind, j, x, t - dt)?;
            Ok((plus - minus) / (2.0 * dt))
        };
        let curl = |kind: FieldKind, j: usize| -> Result<f64> {
            // (rot F)_j = ε_{jlm} ∂_l F_m.
            let (l, m) = match j {
                0 => (1, 2),
                1 => (2, 0),
                _ => (0, 1),
            };
            Ok(deriv_x(kind, m, l)? - deriv_x(kind, l, m)?)
        };

        let mut div_b = 0.0;
        let mut div_e = 0.0;
        for j in 0..3 {
            div_b += deriv_x(FieldKind::Magnetic, j, j)?;
            div_e += deriv_x(FieldKind::Electric, j, j)?;
        }
        out.div_b = out.div_b.max(div_b.abs());
        out.div_e = out.div_e.max(div_e.abs());
        for j in 0..3 {
            let faraday = deriv_t(FieldKind::Magnetic, j)? + curl(FieldKind::Electric, j)?;
            let ampere = deriv_t(FieldKind::Electric, j)? - curl(FieldKind::Magnetic, j)?;
            out.faraday = out.faraday.max(faraday.abs());
            out.ampere = out.ampere.max(ampere.abs());
        }
    }
    Ok(out)
}

fn unit(j: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[j] = 1.0;
    e
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
