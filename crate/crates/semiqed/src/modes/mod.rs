//! Photon-mode models: basis construction, coupling tensors, compressed
//! frequency matrices and their file format.
//!
//! A [`ModeModel`] is the single input the dynamical layers consume. It is
//! either *synthetic* (frequencies and couplings stated directly) or
//! *computed* (radial × angular basis modes with couplings obtained by
//! quadrature against the field integrands).

pub mod angular;
pub mod coupling;
pub mod radial;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

pub use angular::{AngularBasis, AngularField, AngularLabel, Parity, SphereGridSpec};
pub use coupling::{coupling_coefficient, CouplingQuadSpec, CutoffSpec};
pub use radial::{eval_radial, RadialFunction, RadialGridSpec};

use crate::error::{Error, Result};
use crate::numerics::linalg::eigh_real;
use crate::numerics::quad::gauss_legendre_on;
use crate::phasespace::FreeFlow;
use crate::C64;

/// A retained mode: radial index `m` and flat angular index `n` into the
/// canonical enumeration of [`angular::enumerate_labels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: usize,
    pub n: usize,
}

/// Provenance of a computed model: every quadrature setting that went into
/// its numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub coupling_quad: CouplingQuadSpec,
    pub sphere_grid: SphereGridSpec,
    pub w_radial_nodes: usize,
    /// Worst node-doubling estimate over the coupling tensor.
    pub coupling_error_estimate: f64,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            coupling_quad: CouplingQuadSpec::default(),
            sphere_grid: SphereGridSpec::for_degree(1),
            w_radial_nodes: 300,
            coupling_error_estimate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Synthetic,
    Computed { modes: Vec<ModeIndex>, l_max: usize },
}

/// Finite photon-mode truncation with spin data.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeModel {
    pub kind: ModelKind,
    /// Compressed frequency matrix, `J × J` symmetric positive definite.
    pub w: Array2<f64>,
    /// Coupling tensor `c[λ][j][k]`, shape `(N, 3, J)`: the real part couples
    /// to `q_k`, the imaginary part to `p_k`.
    pub coupling: Array3<C64>,
    /// Constant magnetic field.
    pub beta: [f64; 3],
    /// Spin positions `a_1 .. a_N`.
    pub positions: Vec<[f64; 3]>,
    pub cutoff: CutoffSpec,
    pub provenance: Provenance,
}

impl ModeModel {
    /// Number of retained modes `J`.
    pub fn n_modes(&self) -> usize {
        self.w.nrows()
    }

    /// Number of spins `N`.
    pub fn n_spins(&self) -> usize {
        self.positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.n_modes();
        let n = self.n_spins();
        if self.w.ncols() != j {
            return Err(Error::Dimension("W is not square".into()));
        }
        if self.coupling.dim() != (n, 3, j) {
            return Err(Error::Dimension(format!(
                "coupling tensor shape {:?} does not match (N, 3, J) = ({n}, 3, {j})",
                self.coupling.dim()
            )));
        }
        if n == 0 {
            return Err(Error::Config("model needs at least one spin".into()));
        }
        let mut asym = 0.0f64;
        for a in 0..j {
            for b in 0..j {
                asym = asym.max((self.w[[a, b]] - self.w[[b, a]]).abs());
            }
        }
        if asym > 1e-12 {
            return Err(Error::Config(format!(
                "W is not symmetric (defect {asym:.3e})"
            )));
        }
        let (evals, _) = eigh_real(&self.w)?;
        if let Some(&min) = evals.iter().min_by(|a, b| a.total_cmp(b)) {
            if min <= 0.0 {
                return Err(Error::NotPositiveDefinite(min));
            }
        }
        self.cutoff.validate()?;
        if self.cutoff.is_zero() {
            let worst = self.coupling.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if worst > 0.0 {
                return Err(Error::Config(
                    "zero cutoff requires an identically zero coupling tensor".into(),
                ));
            }
        }
        Ok(())
    }

    /// Rebuild the angular basis of a computed model from its provenance.
    pub fn angular_basis(&self) -> Result<AngularBasis> {
        match &self.kind {
            ModelKind::Computed { l_max, .. } => {
                AngularBasis::build(*l_max, self.provenance.sphere_grid)
            }
            ModelKind::Synthetic => Err(Error::NoRotation(
                "synthetic models carry no angular-basis realization".into(),
            )),
        }
    }

    /// Per-mode coupling envelope `ε_k(t)`: the sup over sampled
    /// `s ∈ [-|t|, |t|]` of `Σ_λ Σ_j |c_k^{λj}(s)|` with the coefficients
    /// rotated by the model's own frequency matrix, `c(s) = e^{i s W} c`.
    ///
    /// The sup is nondecreasing in `|t|` when evaluated on nested sample
    /// grids.
    pub fn epsilon_profile(&self, t: f64, s_samples: usize) -> Result<Vec<f64>> {
        assert!(s_samples >= 2, "epsilon_profile: need at least two samples");
        let j = self.n_modes();
        let n = self.n_spins();
        let flow = FreeFlow::new(&self.w)?;
        let mut eps = vec![0.0f64; j];
        let t_abs = t.abs();
        for i in 0..s_samples {
            let s = -t_abs + 2.0 * t_abs * (i as f64) / (s_samples as f64 - 1.0);
            let mut per_mode = vec![0.0f64; j];
            for lam in 0..n {
                for pj in 0..3 {
                    let c = self.coupling.slice(ndarray::s![lam, pj, ..]).to_owned();
                    let rotated = flow.rotate_coefficients(s, &c);
                    for (k, v) in rotated.iter().enumerate() {
                        per_mode[k] += v.norm();
                    }
                }
            }
            for k in 0..j {
                eps[k] = eps[k].max(per_mode[k]);
            }
        }
        Ok(eps)
    }

    /// Rows of the coupling-decay table; labels are only available for
    /// computed models (`n` is reported 1-based).
    pub fn decay_table(&self) -> Vec<DecayRow> {
        let ModelKind::Computed { modes, .. } = &self.kind else {
            return Vec::new();
        };
        let mut rows = Vec::new();
        for lam in 0..self.n_spins() {
            for pj in 0..3 {
                for (k, idx) in modes.iter().enumerate() {
                    let c = self.coupling[[lam, pj, k]];
                    let m = idx.m as f64;
                    let n1 = (idx.n + 1) as f64;
                    rows.push(DecayRow {
                        spin: lam,
                        pauli: pj,
                        radial_m: idx.m,
                        angular_n: idx.n + 1,
                        re: c.re,
                        im: c.im,
                        abs: c.norm(),
                        weighted: m * m * n1 * n1 * c.norm(),
                    });
                }
            }
        }
        rows
    }
}

/// One row of the coupling-decay table.
#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub spin: usize,
    pub pauli: usize,
    pub radial_m: usize,
    pub angular_n: usize,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub weighted: f64,
}

/// Compress the frequency multiplication operator onto the span of the
/// retained modes: `W_kl = ∫ f_k(k) · f_l(k) |k| dk`.
///
/// The basis functions are tensor products, so the integral splits into a
/// radial factor (weight `r³ dr`) and the angular Gram factor.
pub fn compress_frequency(
    modes: &[ModeIndex],
    basis: &AngularBasis,
    grid: RadialGridSpec,
    radial_nodes: usize,
) -> Result<Array2<f64>> {
    if modes.is_empty() {
        return Err(Error::Config("compress_frequency: empty mode list".into()));
    }
    let rule = gauss_legendre_on(radial_nodes, 0.0, grid.r_max)?;
    let max_m = modes.iter().map(|i| i.m).max().unwrap();
    let radial_vals: Vec<Vec<f64>> = (0..=max_m)
        .map(|m| rule.nodes.iter().map(|&r| eval_radial(m, r)).collect())
        .collect();
    let radial_int = |a: usize, b: usize| -> f64 {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .enumerate()
            .map(|(i, (&r, &w))| w * radial_vals[a][i] * radial_vals[b][i] * r * r * r)
            .sum()
    };
    let gram = basis.gram();
    let j = modes.len();
    let mut w = Array2::zeros((j, j));
    for (a, ia) in modes.iter().enumerate() {
        for (b, ib) in modes.iter().enumerate().skip(a) {
            let val = radial_int(ia.m, ib.m) * gram[[ia.n, ib.n]];
            w[[a, b]] = val;
            w[[b, a]] = val;
        }
    }
    let (evals, _) = eigh_real(&w)?;
    if let Some(&min) = evals.iter().min_by(|x, y| x.total_cmp(y)) {
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite(min));
        }
    }
    Ok(w)
}

/// Configuration for [`build_mode_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Synthetic {
        /// Diagonal of `W`; mutually exclusive with `w`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frequencies: Option<Vec<f64>>,
        /// Full `W` as rows.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<Vec<Vec<f64>>>,
        /// `coupling[λ][j][k]` as `[re, im]` pairs.
        coupling: Vec<Vec<Vec<[f64; 2]>>>,
        beta: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positions: Option<Vec<[f64; 3]>>,
    },
    Computed {
        modes: Vec<ModeIndex>,
        cutoff: CutoffSpec,
        beta: [f64; 3],
        positions: Vec<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quad: Option<CouplingQuadSpec>,
    },
}

/// Build a fully populated model from a configuration.
///
/// Computed models take their coupling tensor from the field integrands at
/// `s = 0` and their `W` from [`compress_frequency`]; the worst node-doubling
/// error estimate over the tensor is recorded in the provenance.
pub fn build_mode_model(config: &ModelConfig) -> Result<ModeModel> {
    match config {
        ModelConfig::Synthetic {
            frequencies,
            w,
            coupling,
            beta,
            positions,
        } => {
            let w = match (frequencies, w) {
                (Some(f), None) => {
                    if f.is_empty() {
                        return Err(Error::Config("empty frequency list".into()));
                    }
                    Array2::from_diag(&ndarray::Array1::from_vec(f.clone()))
                }
                (None, Some(rows)) => {
                    let j = rows.len();
                    if rows.iter().any(|r| r.len() != j) {
                        return Err(Error::Dimension("W rows have unequal lengths".into()));
                    }
                    Array2::from_shape_fn((j, j), |(a, b)| rows[a][b])
                }
                _ => {
                    return Err(Error::Config(
                        "synthetic model needs exactly one of `frequencies` or `w`".into(),
                    ))
                }
            };
            let j = w.nrows();
            let n = coupling.len();
            if n == 0 {
                return Err(Error::Config("coupling tensor needs N ≥ 1".into()));
            }
            let mut tensor = Array3::zeros((n, 3, j));
            for (lam, per_spin) in coupling.iter().enumerate() {
                if per_spin.len() != 3 {
                    return Err(Error::Dimension(format!(
                        "coupling[{lam}] needs 3 Pauli rows, found {}",
                        per_spin.len()
                    )));
                }
                for (pj, per_j) in per_spin.iter().enumerate() {
                    if per_j.len() != j {
                        return Err(Error::Dimension(format!(
                            "coupling[{lam}][{pj}] needs J = {j} entries, found {}",
                            per_j.len()
                        )));
                    }
                    for (k, pair) in per_j.iter().enumerate() {
                        tensor[[lam, pj, k]] = C64::new(pair[0], pair[1]);
                    }
                }
            }
            let positions = positions.clone().unwrap_or_else(|| vec![[0.0; 3]; n]);
            if positions.len() != n {
                return Err(Error::Dimension(
                    "positions length does not match coupling tensor".into(),
                ));
            }
            let has_coupling = tensor.iter().any(|c| c.norm() > 0.0);
            let model = ModeModel {
                kind: ModelKind::Synthetic,
                w,
                coupling: tensor,
                beta: *beta,
                positions,
                cutoff: if has_coupling {
                    CutoffSpec::default()
                } else {
                    CutoffSpec::Zero
                },
                provenance: Provenance::default(),
            };
            model.validate()?;
            Ok(model)
        }
        ModelConfig::Computed {
            modes,
            cutoff,
            beta,
            positions,
            quad,
        } => {
            cutoff.validate()?;
            if modes.is_empty() {
                return Err(Error::Config("computed model needs modes".into()));
            }
            if positions.is_empty() {
                return Err(Error::Config("computed model needs spin positions".into()));
            }
            let quad = quad.unwrap_or_default();
            let l_max = required_l_max(modes)?;
            let sphere_grid = SphereGridSpec::for_degree(l_max);
            let basis = AngularBasis::build(l_max, sphere_grid)?;
            for idx in modes {
                if idx.n >= basis.len() {
                    return Err(Error::Config(format!(
                        "angular index {} out of range for l_max = {l_max}",
                        idx.n
                    )));
                }
            }

            let n = positions.len();
            let j = modes.len();
            let mut tensor = Array3::zeros((n, 3, j));
            let mut worst_estimate = 0.0f64;
            if !cutoff.is_zero() {
                let fine_quad = CouplingQuadSpec {
                    radial: RadialGridSpec {
                        r_max: quad.radial.r_max,
                        node_count: quad.radial.node_count * 2,
                    },
                    n_theta: quad.n_theta * 2,
                    n_phi: quad.n_phi * 2,
                    tolerance: quad.tolerance,
                };
                for (lam, pos) in positions.iter().enumerate() {
                    for pj in 0..3 {
                        for (k, idx) in modes.iter().enumerate() {
                            let coarse = coupling::coupling_raw(
                                idx.m, &basis, idx.n, pj, *pos, 0.0, cutoff, &quad,
                            )?;
                            let fine = coupling::coupling_raw(
                                idx.m, &basis, idx.n, pj, *pos, 0.0, cutoff, &fine_quad,
                            )?;
                            worst_estimate = worst_estimate.max((fine - coarse).norm());
                            tensor[[lam, pj, k]] = fine;
                        }
                    }
                }
                if worst_estimate > quad.tolerance {
                    return Err(Error::QuadratureNonConvergent {
                        estimate: worst_estimate,
                        tolerance: quad.tolerance,
                        context: "coupling tensor".into(),
                    });
                }
            }

            let w = compress_frequency(modes, &basis, quad.radial, 300)?;
            let model = ModeModel {
                kind: ModelKind::Computed {
                    modes: modes.clone(),
                    l_max,
                },
                w,
                coupling: tensor,
                beta: *beta,
                positions: positions.clone(),
                cutoff: cutoff.clone(),
                provenance: Provenance {
                    coupling_quad: quad,
                    sphere_grid,
                    w_radial_nodes: 300,
                    coupling_error_estimate: worst_estimate,
                },
            };
            model.validate()?;
            Ok(model)
        }
    }
}

fn required_l_max(modes: &[ModeIndex]) -> Result<usize> {
    let max_n = modes.iter().map(|i| i.n).max().unwrap();
    for l_max in 1..=16 {
        if max_n < angular::field_count(l_max) {
            return Ok(l_max);
        }
    }
    Err(Error::Config(format!(
        "angular index {max_n} beyond supported degree range"
    )))
}

// ----- file format ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    kind: ModelKind,
    w: WFile,
    coupling: Vec<Vec<Vec<[f64; 2]>>>,
    beta: [f64; 3],
    positions: Vec<[f64; 3]>,
    cutoff: CutoffSpec,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct WFile {
    dim: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

/// JSON formatter printing every float with 17 significant digits, enough to
/// reproduce the `f64` bit pattern on read-back.
pub struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

impl ModeModel {
    pub fn to_json(&self) -> Result<String> {
        let (n, _, j) = self.coupling.dim();
        let coupling: Vec<Vec<Vec<[f64; 2]>>> = (0..n)
            .map(|lam| {
                (0..3)
                    .map(|pj| {
                        (0..j)
                            .map(|k| {
                                let c = self.coupling[[lam, pj, k]];
                                [c.re, c.im]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let file = ModelFile {
            version: 1,
            kind: self.kind.clone(),
            w: WFile {
                dim: self.w.nrows(),
                data: self.w.iter().copied().collect(),
            },
            coupling,
            beta: self.beta,
            positions: self.positions.clone(),
            cutoff: self.cutoff.clone(),
            provenance: self.provenance.clone(),
        };
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
        file.serialize(&mut ser)?;
        Ok(String::from_utf8(out).expect("JSON output is UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<ModeModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(Error::Config(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        let j = file.w.dim;
        if file.w.data.len() != j * j {
            return Err(Error::Dimension("W data length != dim²".into()));
        }
        let w = Array2::from_shape_vec((j, j), file.w.data)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let n = file.coupling.len();
        let mut tensor = Array3::zeros((n, 3, j));
        for (lam, per_spin) in file.coupling.iter().enumerate() {
            if per_spin.len() != 3 {
                return Err(Error::Dimension("coupling spin row needs 3 entries".into()));
            }
            for (pj, per_j) in per_spin.iter().enumerate() {
                if per_j.len() != j {
                    return Err(Error::Dimension("coupling mode row length mismatch".into()));
                }
                for (k, pair) in per_j.iter().enumerate() {
                    tensor[[lam, pj, k]] = C64::new(pair[0], pair[1]);
                }
            }
        }
        let model = ModeModel {
            kind: file.kind,
            w,
            coupling: tensor,
            beta: file.beta,
            positions: file.positions,
            cutoff: file.cutoff,
            provenance: file.provenance,
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn synthetic_single_mode() -> ModeModel {
        build_mode_model(&ModelConfig::Synthetic {
            frequencies: Some(vec![1.0]),
            w: None,
            coupling: vec![vec![vec![[0.0, 0.0]], vec![[0.0, 0.0]], vec![[0.0, 0.0]]]],
            beta: [0.0, 0.0, 1.0],
            positions: None,
        })
        .unwrap()
    }

    #[test]
    fn synthetic_single_mode_is_valid() {
        let model = synthetic_single_mode();
        assert_eq!(model.n_modes(), 1);
        assert_eq!(model.n_spins(), 1);
        assert_abs_diff_eq!(model.w[[0, 0]], 1.0);
        assert!(model.cutoff.is_zero());
    }

    #[test]
    fn file_round_trip_is_byte_identical() {
        let model = synthetic_single_mode();
        let text = model.to_json().unwrap();
        let back = ModeModel::from_json(&text).unwrap();
        assert_eq!(model, back);
        assert_eq!(text, back.to_json().unwrap());
    }

    #[test]
    fn random_models_round_trip_bitwise() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for _ in 0..25 {
            let j = rng.gen_range(1..4usize);
            let n = rng.gen_range(1..3usize);
            let freqs: Vec<f64> = (0..j).map(|_| rng.gen_range(0.1..3.0)).collect();
            let coupling: Vec<Vec<Vec<[f64; 2]>>> = (0..n)
                .map(|_| {
                    (0..3)
                        .map(|_| {
                            (0..j)
                                .map(|_|
                                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
                                )
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let model = build_mode_model(&ModelConfig::Synthetic {
                frequencies: Some(freqs),
                w: None,
                coupling,
                beta: [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ],
                positions: None,
            })
            .unwrap();
            let text = model.to_json().unwrap();
            let back = ModeModel::from_json(&text).unwrap();
            assert_eq!(model, back);
            assert_eq!(text, back.to_json().unwrap());
        }
    }

    #[test]
    fn computed_model_round_trip() {
        let config = ModelConfig::Computed {
            modes: vec![ModeIndex { m: 0, n: 3 }, ModeIndex { m: 1, n: 3 }],
            cutoff: CutoffSpec::default(),
            beta: [0.0, 0.0, 0.5],
            positions: vec![[0.0; 3]],
            quad: Some(CouplingQuadSpec {
                radial: RadialGridSpec {
                    r_max: 20.0,
                    node_count: 120,
                },
                n_theta: 12,
                n_phi: 24,
                tolerance: 1e-6,
            }),
        };
        let model = build_mode_model(&config).unwrap();
        let text = model.to_json().unwrap();
        let back = ModeModel::from_json(&text).unwrap();
        assert_eq!(model, back);
        assert_eq!(text, back.to_json().unwrap());
    }

    #[test]
    fn computed_zero_cutoff_has_zero_coupling() {
        let config = ModelConfig::Computed {
            modes: vec![ModeIndex { m: 0, n: 0 }],
            cutoff: CutoffSpec::Zero,
            beta: [0.0, 0.0, 1.0],
            positions: vec![[0.0; 3]],
            quad: None,
        };
        let model = build_mode_model(&config).unwrap();
        assert!(model.coupling.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn w_is_symmetric_and_cross_checked_against_1d_quadrature() {
        // Two radial modes sharing one angular index: the off-diagonal entry
        // is ∫ u_0(r) r u_1(r) r² dr.
        let basis = AngularBasis::build(1, SphereGridSpec::for_degree(1)).unwrap();
        let modes = [ModeIndex { m: 0, n: 0 }, ModeIndex { m: 1, n: 0 }];
        let w = compress_frequency(&modes, &basis, RadialGridSpec::default(), 300).unwrap();
        let mut defect = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                defect = defect.max((w[[a, b]] - w[[b, a]]).abs());
            }
        }
        assert!(defect < 1e-12);

        let rule = gauss_legendre_on(500, 0.0, 25.0).unwrap();
        let oracle = rule.integrate(|r| eval_radial(0, r) * eval_radial(1, r) * r * r * r);
        assert_abs_diff_eq!(w[[0, 1]], oracle, epsilon = 1e-10);
    }

    #[test]
    fn malformed_configs_are_rejected() {
        let both = ModelConfig::Synthetic {
            frequencies: Some(vec![1.0]),
            w: Some(vec![vec![1.0]]),
            coupling: vec![vec![vec![[0.0, 0.0]]; 3]],
            beta: [0.0; 3],
            positions: None,
        };
        assert!(build_mode_model(&both).is_err());

        let bad_dims = ModelConfig::Synthetic {
            frequencies: Some(vec![1.0, 2.0]),
            w: None,
            coupling: vec![vec![vec![[0.0, 0.0]]; 3]],
            beta: [0.0; 3],
            positions: None,
        };
        assert!(build_mode_model(&bad_dims).is_err());

        let bad_cutoff = ModelConfig::Computed {
            modes: vec![ModeIndex { m: 0, n: 0 }],
            cutoff: CutoffSpec::SmoothExp { r0: -1.0 },
            beta: [0.0; 3],
            positions: vec![[0.0; 3]],
            quad: None,
        };
        assert!(build_mode_model(&bad_cutoff).is_err());
    }

    #[test]
    fn epsilon_profile_zero_coupling() {
        let model = synthetic_single_mode();
        let eps = model.epsilon_profile(1.0, 11).unwrap();
        assert!(eps.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn epsilon_profile_monotone_on_nested_grids() {
        let model = build_mode_model(&ModelConfig::Synthetic {
            frequencies: Some(vec![1.0, 1.7]),
            w: None,
            coupling: vec![vec![
                vec![[0.1, 0.05], [0.02, -0.01]],
                vec![[0.0, 0.2], [0.03, 0.0]],
                vec![[0.05, 0.0], [0.0, 0.04]],
            ]],
            beta: [0.0, 0.0, 1.0],
            positions: None,
        })
        .unwrap();
        // linspace(-1,1,5) is a subset of linspace(-2,2,9).
        let e1 = model.epsilon_profile(1.0, 5).unwrap();
        let e2 = model.epsilon_profile(2.0, 9).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!(a <= b, "epsilon not monotone: {a} > {b}");
        }
    }

    #[test]
    fn epsilon_decreases_in_radial_index_for_computed_model() {
        let config = ModelConfig::Computed {
            modes: vec![
                ModeIndex { m: 0, n: 3 },
                ModeIndex { m: 2, n: 3 },
                ModeIndex { m: 4, n: 3 },
            ],
            cutoff: CutoffSpec::default(),
            beta: [0.0, 0.0, 1.0],
            positions: vec![[0.0; 3]],
            quad: Some(CouplingQuadSpec {
                radial: RadialGridSpec {
                    r_max: 20.0,
                    node_count: 120,
                },
                n_theta: 12,
                n_phi: 24,
                tolerance: 1e-6,
            }),
        };
        let model = build_mode_model(&config).unwrap();
        let eps = model.epsilon_profile(1.0, 9).unwrap();
        assert!(eps[0] > eps[1] && eps[1] > eps[2], "no decay: {eps:?}");

        // Consistent with the raw coupling decay at s = 0.
        let abs: Vec<f64> = (0..3)
            .map(|k| {
                (0..3)
                    .map(|pj| model.coupling[[0, pj, k]].norm())
                    .sum::<f64>()
            })
            .collect();
        assert!(abs[0] > abs[1] && abs[1] > abs[2]);
    }
}
