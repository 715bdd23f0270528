//! Rotating-frame reduction for a single spin driven by a classical
//! rotating magnetic field.
//!
//! The time-dependent Hamiltonian `H(h, t) = H(h) + h H_spin(t)` with
//! `H_spin(t) = B₁ cos(ωt) σ₁ + B₁ sin(ωt) σ₂` is unitarily equivalent to a
//! time-independent one: conjugating by `P(t) = P_ph(t) ⊗ P_spin(t)` with
//! `P_spin(t) = diag(e^{-iωt/2}, e^{iωt/2})` and `P_ph(t)` the second
//! quantization of the mode-space rotation `e^{tΩ}` turns the drive into
//! `B₁ σ₁`, shifts `β₃` by `-ω/2`, and adds the photon angular-momentum term
//! `-i h dΓ(Ω)` coming from the time derivative of `P_ph`.
//!
//! The rotation direction and the generator term are pinned by the
//! closed-form oracles in the tests, not assumed.

use std::sync::Arc;

use ndarray::{array, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    build_hamiltonian, build_ladders, second_quantize, segal_photon, FockBasis, FockOperator,
    Propagator,
};
use crate::modes::angular::enumerate_labels;
use crate::modes::{ModeModel, ModelKind};
use crate::numerics::linalg::{expm_neg_i_hermitian, kron, spectral_norm};
use crate::numerics::rk::integrate_adaptive;
use crate::phasespace::LinearSymbol;
use crate::spin::{sigma, sigma_at, spin_identity};
use crate::{C64, CMat, CVec};

/// A classical rotating drive in the plane orthogonal to the constant field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingDrive {
    /// Drive amplitude `B₁`.
    pub b1: f64,
    /// Angular velocity `ω`.
    pub omega: f64,
    /// Constant field `β₃` (must match the model's `beta`).
    pub beta3: f64,
    /// Phase offset; the drive vector is
    /// `(B₁ cos(ωt + φ), B₁ sin(ωt + φ), 0)`.
    #[serde(default)]
    pub phase: f64,
}

impl RotatingDrive {
    pub fn field_at(&self, t: f64) -> [f64; 3] {
        let th = self.omega * t + self.phase;
        [self.b1 * th.cos(), self.b1 * th.sin(), 0.0]
    }
}

/// The spin half of the frame transform: `diag(e^{-iωt/2}, e^{iωt/2})`.
pub fn p_spin(t: f64, omega: f64) -> CMat {
    let alpha = C64::from_polar(1.0, -omega * t / 2.0);
    array![
        [alpha, C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), alpha.conj()]
    ]
}

/// Mode-space realization of the photon rotation: the orthogonal
/// representation of the rotation group on the retained modes, obtained by a
/// least-squares fit of the rotation action on the sampled angular fields.
///
/// Valid only when whole `(radial, degree, family)` multiplets are retained.
pub struct ModeRotation {
    /// Antisymmetric generator: `R_modes(t) = e^{tΩ}` represents the
    /// rotation by angle `+ωt` about the z axis.
    pub generator: Array2<f64>,
    omega: f64,
}

impl ModeRotation {
    /// Fit the rotation representation for a computed model and drive
    /// angular velocity.
    pub fn fit(model: &ModeModel, omega: f64) -> Result<Self> {
        let ModelKind::Computed { modes, l_max } = &model.kind else {
            return Err(Error::NoRotation(
                "synthetic models carry no rotation representation".into(),
            ));
        };
        let basis = model.angular_basis()?;
        let labels = enumerate_labels(*l_max);

        // Multiplet completeness: every retained (radial, ℓ, family) group
        // must contain all 2ℓ+1 members.
        let mut groups: std::collections::BTreeMap<(usize, usize, bool), Vec<usize>> =
            std::collections::BTreeMap::new();
        for idx in modes {
            let lab = labels[idx.n];
            let key = (
                idx.m,
                lab.l,
                matches!(lab.parity, crate::modes::Parity::Curl),
            );
            groups.entry(key).or_default().push(lab.member);
        }
        for ((m, l, curl), members) in &groups {
            if members.len() != 2 * l + 1 {
                return Err(Error::NoRotation(format!(
                    "incomplete multiplet (m = {m}, l = {l}, curl = {curl}): \
                     {} of {} members retained",
                    members.len(),
                    2 * l + 1
                )));
            }
        }

        let fit_at = |theta: f64| -> Array2<f64> {
            fit_rotation_matrix(modes, &basis, theta)
        };
        // Orthogonality of the fitted representation at a test angle.
        let probe = fit_at(0.7);
        let mut defect = 0.0f64;
        let j = modes.len();
        for a in 0..j {
            for b in 0..j {
                let mut acc = 0.0;
                for c in 0..j {
                    acc += probe[[c, a]] * probe[[c, b]];
                }
                defect = defect.max((acc - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        if defect > 1e-8 {
            return Err(Error::NoRotation(format!(
                "fitted rotation is not orthogonal (defect {defect:.3e}); \
                 the retained modes do not close under rotations"
            )));
        }

        // Generator by fourth-order differences of the fit; R_modes(t)
        // represents the rotation by +ωt, so Ω = ω d/dθ fit(θ)|₀.
        let delta = 1e-2;
        let d1 = fit_at(delta);
        let dm1 = fit_at(-delta);
        let d2 = fit_at(2.0 * delta);
        let dm2 = fit_at(-2.0 * delta);
        let mut gen = Array2::<f64>::zeros((j, j));
        for a in 0..j {
            for b in 0..j {
                let fd = (8.0 * (d1[[a, b]] - dm1[[a, b]]) - (d2[[a, b]] - dm2[[a, b]]))
                    / (12.0 * delta);
                gen[[a, b]] = omega * fd;
            }
        }
        // Exact antisymmetry of the generator of an orthogonal family.
        let gen = {
            let mut g = Array2::<f64>::zeros((j, j));
            for a in 0..j {
                for b in 0..j {
                    g[[a, b]] = 0.5 * (gen[[a, b]] - gen[[b, a]]);
                }
            }
            g
        };

        // The rotation must commute with the compressed frequencies.
        let comm = gen.dot(&model.w) - model.w.dot(&gen);
        let scale = model.w.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            * gen.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let comm_norm = comm.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if comm_norm > 1e-8 * scale.max(1.0) {
            return Err(Error::NoRotation(format!(
                "rotation generator does not commute with W (defect {comm_norm:.3e})"
            )));
        }

        Ok(ModeRotation {
            generator: gen,
            omega,
        })
    }

    /// `R_modes(t) = e^{tΩ}`.
    pub fn modes_at(&self, t: f64) -> Result<Array2<f64>> {
        let j = self.generator.nrows();
        let m: CMat = Array2::from_shape_fn((j, j), |(a, b)| {
            C64::new(0.0, self.generator[[a, b]])
        });
        // e^{tΩ} = e^{-i t (iΩ)} with iΩ Hermitian.
        let u = expm_neg_i_hermitian(&m, t)?;
        Ok(u.mapv(|v| v.re))
    }

    /// Second-quantized photon transform `Γ(e^{tΩ}) = e^{t dΓ(Ω)}` on a Fock
    /// basis.
    pub fn photon_transform(&self, t: f64, basis: &Arc<FockBasis>) -> Result<CMat> {
        let ladders = build_ladders(basis);
        let gen_c: CMat = self.generator.mapv(|v| C64::new(v, 0.0));
        let dg = second_quantize(&gen_c, &ladders);
        // dΓ(Ω) is anti-Hermitian: exponentiate i dΓ(Ω).
        let herm = dg.mapv(|v| C64::i() * v);
        expm_neg_i_hermitian(&herm, t)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// The full frame transform `P(t) = P_ph(t) ⊗ P_spin(t)`; the photon part is
/// absent for synthetic models.
pub struct FrameTransform {
    pub omega: f64,
    pub photon: Option<ModeRotation>,
}

impl FrameTransform {
    pub fn spin_only(omega: f64) -> Self {
        FrameTransform {
            omega,
            photon: None,
        }
    }

    pub fn for_model(model: &ModeModel, omega: f64) -> Result<Self> {
        Ok(FrameTransform {
            omega,
            photon: Some(ModeRotation::fit(model, omega)?),
        })
    }

    pub fn spin_at(&self, t: f64) -> CMat {
        p_spin(t, self.omega)
    }

    /// `P(t)` on the full Fock ⊗ spin space.
    pub fn full_at(&self, t: f64, basis: &Arc<FockBasis>) -> Result<FockOperator> {
        let rotation = self.photon.as_ref().ok_or_else(|| {
            Error::NoRotation("frame transform has no photon rotation".into())
        })?;
        let ph = rotation.photon_transform(t, basis)?;
        Ok(FockOperator::new(
            kron(&ph, &self.spin_at(t)),
            basis.clone(),
        ))
    }
}

/// Propagate the time-dependent Schrödinger equation
/// `i h ∂_t U = (H(h) + h H_spin(t)) U` on the truncated space by adaptive
/// integration of the full matrix; requires `N = 1`.
pub fn propagate_time_dependent(
    model: &ModeModel,
    drive: &RotatingDrive,
    h: f64,
    t: f64,
    basis: &Arc<FockBasis>,
    tolerance: f64,
) -> Result<FockOperator> {
    if model.n_spins() != 1 {
        return Err(Error::Config(
            "the rotating drive is defined for a single spin".into(),
        ));
    }
    let ham = build_hamiltonian(model, h, basis)?;
    let d = basis.dim();
    let sig = [
        FockOperator::from_spin(&sigma(0), basis).mat,
        FockOperator::from_spin(&sigma(1), basis).mat,
    ];
    // Constant part of -(i/h) H(h, t).
    let constant = ham.h_full.mat.mapv(|v| -C64::i() * v / h);

    let mut y0: CVec = Array1::zeros(d * d);
    for i in 0..d {
        y0[i * d + i] = C64::new(1.0, 0.0);
    }
    let rhs = |tt: f64, y: &CVec| -> CVec {
        let u = ndarray::ArrayView2::from_shape((d, d), y.as_slice().unwrap()).unwrap();
        let field = drive.field_at(tt);
        let mut gen = constant.clone();
        gen.scaled_add(C64::new(0.0, -field[0]), &sig[0]);
        gen.scaled_add(C64::new(0.0, -field[1]), &sig[1]);
        let du = gen.dot(&u);
        Array1::from_iter(du.iter().copied())
    };
    let (outputs, _) = integrate_adaptive(rhs, 0.0, &y0, &[t], tolerance, tolerance)?;
    let mat = Array2::from_shape_vec((d, d), outputs[0].to_vec())
        .map_err(|e| Error::Solver(e.to_string()))?;
    Ok(FockOperator::new(mat, basis.clone()))
}

/// The time-independent rotating-frame Hamiltonian
/// `H_TR = H₀ + h [Σ_j B_j(0) ⊗ σ_j + B₁ σ₁ + (β₃ - ω/2) σ₃] - i h dΓ(Ω)`.
pub fn rotating_frame_hamiltonian(
    model: &ModeModel,
    drive: &RotatingDrive,
    rotation: &ModeRotation,
    h: f64,
    basis: &Arc<FockBasis>,
) -> Result<FockOperator> {
    let ham = build_hamiltonian(model, h, basis)?;
    let ladders = build_ladders(basis);

    let mut mat = ham.h0.mat.clone();
    // Coupling block Σ_j Φ(c_j) ⊗ σ_j (positions validated to the origin).
    for pj in 0..3 {
        let w_vec: CVec = model.coupling.slice(ndarray::s![0, pj, ..]).to_owned();
        if w_vec.iter().all(|c| c.norm() == 0.0) {
            continue;
        }
        let field = segal_photon(&LinearSymbol::from_complex(&w_vec), h, &ladders);
        mat.scaled_add(
            C64::new(h, 0.0),
            &kron(&field, &sigma_at(1, 0, pj)),
        );
    }
    // Drive and shifted constant field.
    let spin_term = {
        let mut s = sigma(0).mapv(|v| v * C64::new(drive.b1, 0.0));
        s.scaled_add(C64::new(drive.beta3 - drive.omega / 2.0, 0.0), &sigma(2));
        s
    };
    mat.scaled_add(
        C64::new(h, 0.0),
        &kron(&Array2::eye(basis.photon_dim()), &spin_term),
    );
    // Photon angular momentum from the frame's time dependence.
    let gen_c: CMat = rotation.generator.mapv(|v| C64::new(v, 0.0));
    let dg = second_quantize(&gen_c, &ladders);
    mat.scaled_add(
        C64::new(0.0, -h),
        &kron(&dg, &spin_identity(1)),
    );
    Ok(FockOperator::new(mat, basis.clone()))
}

/// Operator-norm residual of the frame equivalence
/// `U_{H(h,t)}(t) = P(t) U_{H_TR}(t) P(0)^{-1}`.
///
/// Requires a computed model with the spin at the origin and whole
/// multiplets retained.
pub fn frame_equivalence_check(
    model: &ModeModel,
    drive: &RotatingDrive,
    h: f64,
    t: f64,
    basis: &Arc<FockBasis>,
    tolerance: f64,
) -> Result<f64> {
    if model.n_spins() != 1 {
        return Err(Error::Config("frame check needs N = 1".into()));
    }
    let pos = model.positions[0];
    if (pos[0].powi(2) + pos[1].powi(2) + pos[2].powi(2)).sqrt() > 1e-12 {
        return Err(Error::Config(
            "frame check needs the spin at the origin".into(),
        ));
    }
    if (model.beta[0].abs() + model.beta[1].abs()).max((model.beta[2] - drive.beta3).abs())
        > 1e-12
    {
        return Err(Error::Config(
            "model constant field must be (0, 0, β₃) with the drive's β₃".into(),
        ));
    }
    if drive.phase != 0.0 {
        // A phase offset is a global time shift; the shifted identity is
        // exercised separately in the tests.
        return Err(Error::Config(
            "frame check expects a zero drive phase; shift time instead".into(),
        ));
    }
    let rotation = ModeRotation::fit(model, drive.omega)?;
    let h_tr = rotating_frame_hamiltonian(model, drive, &rotation, h, basis)?;
    let u_tr = Propagator::new(&h_tr, h)?.at(t);
    let frame = FrameTransform {
        omega: drive.omega,
        photon: Some(rotation),
    };
    let p_t = frame.full_at(t, basis)?;
    let rhs = p_t.dot(&u_tr);
    let lhs = propagate_time_dependent(model, drive, h, t, basis, tolerance)?;
    Ok(spectral_norm(&lhs.sub(&rhs).mat))
}

fn fit_rotation_matrix(
    modes: &[crate::modes::ModeIndex],
    basis: &crate::modes::AngularBasis,
    theta: f64,
) -> Array2<f64> {
    let j = modes.len();
    // Distinct angular indices, fitted once.
    let mut angular: Vec<usize> = modes.iter().map(|m| m.n).collect();
    angular.sort_unstable();
    angular.dedup();
    let pos: std::collections::HashMap<usize, usize> =
        angular.iter().enumerate().map(|(i, &n)| (n, i)).collect();

    let (ct, st) = (theta.cos(), theta.sin());
    let rot = |v: &[f64; 3]| -> [f64; 3] { [ct * v[0] - st * v[1], st * v[0] + ct * v[1], v[2]] };
    let rot_inv = |v: &[f64; 3]| -> [f64; 3] {
        [ct * v[0] + st * v[1], -st * v[0] + ct * v[1], v[2]]
    };

    let na = angular.len();
    let mut rho = Array2::<f64>::zeros((na, na));
    for (col, &n_from) in angular.iter().enumerate() {
        // π(R(θ)) v_{n_from} sampled on the grid.
        let rotated: Vec<[f64; 3]> = basis
            .grid
            .nodes
            .iter()
            .map(|omega| {
                let pre = rot_inv(omega);
                let v = basis.eval(n_from, &pre);
                rot(&v)
            })
            .collect();
        for (row, &n_to) in angular.iter().enumerate() {
            let mut acc = 0.0;
            for ((w, target), sample) in basis
                .grid
                .weights
                .iter()
                .zip(&basis.fields[n_to].values)
                .zip(&rotated)
            {
                acc += w * (target[0] * sample[0] + target[1] * sample[1] + target[2] * sample[2]);
            }
            rho[[row, col]] = acc;
        }
    }

    let mut out = Array2::<f64>::zeros((j, j));
    for (a, ma) in modes.iter().enumerate() {
        for (b, mb) in modes.iter().enumerate() {
            if ma.m == mb.m {
                out[[a, b]] = rho[[pos[&ma.n], pos[&mb.n]]];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::reduced_propagator;
    use crate::modes::{build_mode_model, CouplingQuadSpec, CutoffSpec, ModeIndex, ModelConfig};
    use crate::modes::radial::RadialGridSpec;
    use crate::numerics::linalg::{hermiticity_defect, max_norm, unitarity_defect};
    use approx::assert_abs_diff_eq;

    fn frame_model(cutoff: CutoffSpec, beta3: f64) -> ModeModel {
        build_mode_model(&ModelConfig::Computed {
            modes: vec![
                ModeIndex { m: 0, n: 3 },
                ModeIndex { m: 0, n: 4 },
                ModeIndex { m: 0, n: 5 },
            ],
            cutoff,
            beta: [0.0, 0.0, beta3],
            positions: vec![[0.0; 3]],
            quad: Some(CouplingQuadSpec {
                radial: RadialGridSpec {
                    r_max: 16.0,
                    node_count: 120,
                },
                n_theta: 12,
                n_phi: 24,
                tolerance: 1e-6,
            }),
        })
        .unwrap()
    }

    #[test]
    fn p_spin_identity_at_zero() {
        let p = p_spin(0.0, 1.3);
        assert!(max_norm(&(&p - &spin_identity(1))) < 1e-15);
    }

    #[test]
    fn pauli_conjugation_identities() {
        // P⁻¹ σ₁ P has e^{iωt} in the top-right corner; σ₃ is untouched.
        let omega = 1.1;
        for &t in &[0.3, 1.0, 2.7, -0.8] {
            let p = p_spin(t, omega);
            let p_inv = p_spin(-t, omega);
            let s1t = p_inv.dot(&sigma(0)).dot(&p);
            let want = C64::from_polar(1.0, omega * t);
            assert!((s1t[[0, 1]] - want).norm() < 1e-12);
            assert!((s1t[[1, 0]] - want.conj()).norm() < 1e-12);
            let s2t = p_inv.dot(&sigma(1)).dot(&p);
            assert!((s2t[[0, 1]] - (-C64::i() * want)).norm() < 1e-12);
            let s3t = p_inv.dot(&sigma(2)).dot(&p);
            assert!(max_norm(&(&s3t - &sigma(2))) < 1e-13);
        }
    }

    #[test]
    fn rotating_frame_spin_identity() {
        // P⁻¹ (B₁cos σ₁ + B₁sin σ₂ + β₃ σ₃) P - (ω/2) σ₃
        //   = B₁ σ₁ + (β₃ - ω/2) σ₃ as exact 2×2 algebra; the (ω/2)σ₃ comes
        // from P_spin⁻¹ i∂_t P_spin.
        let omega = 0.9;
        let b1 = 0.4;
        let beta3 = 0.7;
        for &t in &[0.0, 0.5, 1.3, 2.9] {
            let p = p_spin(t, omega);
            let p_inv = p_spin(-t, omega);
            let th = omega * t;
            let mut lab = sigma(0).mapv(|v| v * C64::new(b1 * th.cos(), 0.0));
            lab.scaled_add(C64::new(b1 * th.sin(), 0.0), &sigma(1));
            lab.scaled_add(C64::new(beta3, 0.0), &sigma(2));
            let mut rotated = p_inv.dot(&lab).dot(&p);
            rotated.scaled_add(C64::new(-omega / 2.0, 0.0), &sigma(2));
            let mut want = sigma(0).mapv(|v| v * C64::new(b1, 0.0));
            want.scaled_add(C64::new(beta3 - omega / 2.0, 0.0), &sigma(2));
            assert!(max_norm(&(&rotated - &want)) < 1e-12);
        }

        // The ∂_t shift itself: P⁻¹ i (d/dt P) = (ω/2) σ₃ by analytic
        // differentiation.
        let t = 0.8;
        let eps = 1e-6;
        let dp = (&p_spin(t + eps, omega) - &p_spin(t - eps, omega)).mapv(|v| v / (2.0 * eps));
        let shift = p_spin(-t, omega).dot(&dp).mapv(|v| C64::i() * v);
        let want = sigma(2).mapv(|v| v * C64::new(omega / 2.0, 0.0));
        assert!(max_norm(&(&shift - &want)) < 1e-9);
    }

    #[test]
    fn drive_parametrization() {
        let drive = RotatingDrive {
            b1: 0.5,
            omega: 2.0,
            beta3: 1.0,
            phase: 0.0,
        };
        let f = drive.field_at(0.0);
        assert_abs_diff_eq!(f[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 0.0, epsilon = 1e-15);
        let quarter = std::f64::consts::FRAC_PI_2 / 2.0;
        let f = drive.field_at(quarter);
        assert_abs_diff_eq!(f[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], 0.5, epsilon = 1e-12);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn drive_off_matches_static_propagator() {
        let model = frame_model(CutoffSpec::default(), 0.8);
        let basis = FockBasis::new(3, 2, 1);
        let drive = RotatingDrive {
            b1: 0.0,
            omega: 1.5,
            beta3: 0.8,
            phase: 0.0,
        };
        let h = 0.3;
        let t = 1.0;
        let u_ode = propagate_time_dependent(&model, &drive, h, t, &basis, 1e-11).unwrap();
        let ham = build_hamiltonian(&model, h, &basis).unwrap();
        let u_exact = Propagator::new(&ham.h_full, h).unwrap().at(t);
        assert!(max_norm(&u_ode.sub(&u_exact).mat) < 1e-9);
        assert!(unitarity_defect(&u_ode.mat) < 1e-9);
    }

    #[test]
    fn rabi_oracle_zero_coupling() {
        // With zero coupling the spin factor is the exact rotating-frame
        // solution P_spin(t) e^{-i t (B₁σ₁ + (β₃ - ω/2)σ₃)}.
        let model = frame_model(CutoffSpec::Zero, 0.9);
        let basis = FockBasis::new(3, 2, 1);
        let drive = RotatingDrive {
            b1: 0.35,
            omega: 1.2,
            beta3: 0.9,
            phase: 0.0,
        };
        let h = 0.25;
        let t = 1.4;
        let u = propagate_time_dependent(&model, &drive, h, t, &basis, 1e-11).unwrap();

        let mut h_rot = sigma(0).mapv(|v| v * C64::new(drive.b1, 0.0));
        h_rot.scaled_add(
            C64::new(drive.beta3 - drive.omega / 2.0, 0.0),
            &sigma(2),
        );
        let spin = p_spin(t, drive.omega).dot(&expm_neg_i_hermitian(&h_rot, t).unwrap());
        let ham = build_hamiltonian(&model, h, &basis).unwrap();
        let photon = Propagator::new(&ham.h0, h).unwrap().at(t);
        let want = photon.dot(&FockOperator::from_spin(&spin, &basis));
        assert!(
            max_norm(&u.sub(&want).mat) < 1e-9,
            "deviation {}",
            max_norm(&u.sub(&want).mat)
        );
    }

    #[test]
    fn rotation_fit_is_orthogonal_and_blockwise() {
        let model = frame_model(CutoffSpec::default(), 0.8);
        let rotation = ModeRotation::fit(&model, 1.3).unwrap();
        let r = rotation.modes_at(0.9).unwrap();
        let mut defect = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = 0.0;
                for c in 0..3 {
                    acc += r[[c, a]] * r[[c, b]];
                }
                defect = defect.max((acc - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        assert!(defect < 1e-8, "orthogonality defect {defect}");
        // The zonal member (first retained mode) is invariant under
        // z-rotations.
        assert_abs_diff_eq!(r[[0, 0]], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn incomplete_multiplet_is_rejected() {
        let model = build_mode_model(&ModelConfig::Computed {
            modes: vec![ModeIndex { m: 0, n: 3 }, ModeIndex { m: 0, n: 4 }],
            cutoff: CutoffSpec::Zero,
            beta: [0.0, 0.0, 0.5],
            positions: vec![[0.0; 3]],
            quad: None,
        })
        .unwrap();
        let err = ModeRotation::fit(&model, 1.0);
        assert!(matches!(err, Err(Error::NoRotation(_))));
    }

    #[test]
    fn conjugated_interaction_is_time_independent() {
        // Σ_j Φ(R_modes(t)⁻¹ c_j) ⊗ σ_j(t) = Σ_j Φ(c_j) ⊗ σ_j at the
        // coefficient level: this pins the rotation direction.
        let model = frame_model(CutoffSpec::default(), 0.8);
        let omega = 1.1;
        let rotation = ModeRotation::fit(&model, omega).unwrap();
        for &t in &[0.4, 1.0, 2.3] {
            let r = rotation.modes_at(t).unwrap();
            let p = p_spin(t, omega);
            let p_inv = p_spin(-t, omega);
            for k in 0..3 {
                let mut conjugated = CMat::zeros((2, 2));
                let mut original = CMat::zeros((2, 2));
                for pj in 0..3 {
                    let c: CVec = model.coupling.slice(ndarray::s![0, pj, ..]).to_owned();
                    // R⁻¹ = Rᵀ applied to the coefficient vector.
                    let mut rotated = C64::new(0.0, 0.0);
                    for l in 0..3 {
                        rotated += C64::new(r[[l, k]], 0.0) * c[l];
                    }
                    let sig_t = p_inv.dot(&sigma(pj)).dot(&p);
                    conjugated = conjugated + sig_t.mapv(|v| v * rotated);
                    original = original + sigma(pj).mapv(|v| v * c[k]);
                }
                assert!(
                    max_norm(&(&conjugated - &original)) < 1e-9,
                    "telescoping fails at t = {t}, mode {k}: {:?}",
                    max_norm(&(&conjugated - &original))
                );
            }
        }
    }

    #[test]
    fn frame_equivalence_zero_coupling() {
        let model = frame_model(CutoffSpec::Zero, 0.9);
        let basis = FockBasis::new(3, 3, 1);
        let drive = RotatingDrive {
            b1: 0.4,
            omega: 1.3,
            beta3: 0.9,
            phase: 0.0,
        };
        let resid = frame_equivalence_check(&model, &drive, 0.25, 1.2, &basis, 1e-11).unwrap();
        assert!(resid < 1e-8, "zero-coupling frame residual {resid}");
    }

    #[test]
    fn frame_equivalence_full_model() {
        let model = frame_model(CutoffSpec::default(), 0.9);
        let basis = FockBasis::new(3, 3, 1);
        let drive = RotatingDrive {
            b1: 0.4,
            omega: 1.3,
            beta3: 0.9,
            phase: 0.0,
        };
        let h = 0.25;
        let t = 1.0;
        let loose = frame_equivalence_check(&model, &drive, h, t, &basis, 1e-8).unwrap();
        let tight = frame_equivalence_check(&model, &drive, h, t, &basis, 1e-11).unwrap();
        assert!(loose < 1e-6, "frame residual {loose}");
        assert!(tight <= loose * 1.01, "no improvement: {tight} vs {loose}");
    }

    #[test]
    fn frame_residual_invariant_under_time_shift() {
        // U(t₀+T, t₀) = P(t₀+T) e^{-i T H_TR / h} P(t₀)⁻¹: the drive phase
        // shift ω t₀ with the matching frame shift leaves the residual at
        // the same level.
        let model = frame_model(CutoffSpec::default(), 0.9);
        let basis = FockBasis::new(3, 3, 1);
        let omega = 1.3;
        let t0 = 0.7;
        let big_t = 0.9;
        let h = 0.25;
        let drive0 = RotatingDrive {
            b1: 0.4,
            omega,
            beta3: 0.9,
            phase: 0.0,
        };
        let base_resid =
            frame_equivalence_check(&model, &drive0, h, big_t, &basis, 1e-11).unwrap();

        let drive_shifted = RotatingDrive {
            phase: omega * t0,
            ..drive0
        };
        let rotation = ModeRotation::fit(&model, omega).unwrap();
        let h_tr = rotating_frame_hamiltonian(&model, &drive0, &rotation, h, &basis).unwrap();
        let u_tr = Propagator::new(&h_tr, h).unwrap().at(big_t);
        let frame = FrameTransform {
            omega,
            photon: Some(rotation),
        };
        let p_late = frame.full_at(t0 + big_t, &basis).unwrap();
        let p_early = frame.full_at(t0, &basis).unwrap();
        let rhs = p_late.dot(&u_tr).dot(&p_early.dagger());
        let lhs =
            propagate_time_dependent(&model, &drive_shifted, h, big_t, &basis, 1e-11).unwrap();
        let shifted_resid = spectral_norm(&lhs.sub(&rhs).mat);
        assert!(
            shifted_resid < 1e-6 && (shifted_resid - base_resid).abs() < 1e-6,
            "shifted {shifted_resid} vs base {base_resid}"
        );
    }

    #[test]
    fn frame_hamiltonian_is_hermitian() {
        let model = frame_model(CutoffSpec::default(), 0.9);
        let basis = FockBasis::new(3, 3, 1);
        let drive = RotatingDrive {
            b1: 0.4,
            omega: 1.3,
            beta3: 0.9,
            phase: 0.0,
        };
        let rotation = ModeRotation::fit(&model, drive.omega).unwrap();
        let h_tr = rotating_frame_hamiltonian(&model, &drive, &rotation, 0.25, &basis).unwrap();
        assert!(hermiticity_defect(&h_tr.mat) < 1e-12);
    }

    #[test]
    fn zero_drive_and_omega_reduces_to_plain_propagator() {
        let model = frame_model(CutoffSpec::default(), 0.9);
        let basis = FockBasis::new(3, 2, 1);
        let drive = RotatingDrive {
            b1: 0.0,
            omega: 0.0,
            beta3: 0.9,
            phase: 0.0,
        };
        let resid = frame_equivalence_check(&model, &drive, 0.3, 0.8, &basis, 1e-11).unwrap();
        assert!(resid < 1e-9, "residual {resid}");
        // Both sides equal e^{-i t H(h) / h}; sanity check against it.
        let ham = build_hamiltonian(&model, 0.3, &basis).unwrap();
        let u = Propagator::new(&ham.h_full, 0.3).unwrap().at(0.8);
        let ode = propagate_time_dependent(&model, &drive, 0.3, 0.8, &basis, 1e-11).unwrap();
        assert!(max_norm(&u.sub(&ode).mat) < 1e-9);
        let _ = reduced_propagator(&model, 0.3, 0.8, &basis).unwrap();
    }
}
