//! Exact desk-scale oracle: dense operators on the truncated
//! Fock ⊗ spin Hilbert space.
//!
//! The photon sector is spanned by occupation tuples `(n_1 .. n_J)` with
//! total number `Σ n_k ≤ n_max`; the spin sector is `(C²)^{⊗N}`. Everything
//! downstream of the truncation is exact dense linear algebra: Hamiltonians,
//! propagators via Hermitian eigendecomposition, coherent states, Wick
//! symbols and commutator norms.
//!
//! Operator-norm statements are evaluated on the *interior shell*
//! `Σ n_k ≤ n_max - margin` to quarantine truncation edge effects.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::modes::ModeModel;
use crate::numerics::linalg::{dagger, eigh_hermitian, kron, spectral_norm, unitary_from_eigh};
use crate::phasespace::{LinearSymbol, PhasePoint};
use crate::spin::{constant_field_term, sigma_at, spin_identity};
use crate::{C64, CMat, CVec};

/// Default ceiling on the coherent-state truncation mass.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-6;

/// Default `|X-Y|²/(4h)` beyond which bi-symbol denominators are refused.
pub const DEFAULT_OVERLAP_LOG_THRESHOLD: f64 = 25.0;

/// Truncated Fock ⊗ spin basis.
#[derive(Debug)]
pub struct FockBasis {
    pub j_modes: usize,
    pub n_max: usize,
    pub n_spins: usize,
    tuples: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn new(j_modes: usize, n_max: usize, n_spins: usize) -> Arc<Self> {
        assert!(j_modes >= 1 && n_spins >= 1);
        let mut tuples = Vec::new();
        let mut current = vec![0u32; j_modes];
        enumerate_tuples(j_modes, n_max as u32, 0, &mut current, &mut tuples);
        let index = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Arc::new(FockBasis {
            j_modes,
            n_max,
            n_spins,
            tuples,
            index,
        })
    }

    pub fn photon_dim(&self) -> usize {
        self.tuples.len()
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.photon_dim() * self.spin_dim()
    }

    pub fn tuple(&self, i: usize) -> &[u32] {
        &self.tuples[i]
    }

    pub fn tuple_index(&self, t: &[u32]) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Flat index of `(photon, spin)`; the spin index runs fastest.
    pub fn full_index(&self, photon: usize, spin: usize) -> usize {
        photon * self.spin_dim() + spin
    }

    /// Photon indices of the interior shell `Σ n_k ≤ n_max - margin`.
    pub fn interior_photons(&self, margin: usize) -> Vec<usize> {
        let cap = self.n_max.saturating_sub(margin) as u32;
        (0..self.photon_dim())
            .filter(|&i| self.tuples[i].iter().sum::<u32>() <= cap)
            .collect()
    }

    /// Full-space indices of the interior shell (all spin components).
    pub fn interior_indices(&self, margin: usize) -> Vec<usize> {
        let spins = self.spin_dim();
        self.interior_photons(margin)
            .into_iter()
            .flat_map(|p| (0..spins).map(move |s| p * spins + s))
            .collect()
    }

    fn same(&self, other: &FockBasis) -> bool {
        self.j_modes == other.j_modes
            && self.n_max == other.n_max
            && self.n_spins == other.n_spins
    }
}

fn enumerate_tuples(
    j: usize,
    budget: u32,
    pos: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if pos == j {
        out.push(current.clone());
        return;
    }
    for n in 0..=budget {
        current[pos] = n;
        enumerate_tuples(j, budget - n, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Dense operator on the full Fock ⊗ spin space, tied to its basis.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub mat: CMat,
    pub basis: Arc<FockBasis>,
}

impl FockOperator {
    pub fn new(mat: CMat, basis: Arc<FockBasis>) -> Self {
        assert_eq!(mat.nrows(), basis.dim(), "operator does not fit the basis");
        assert_eq!(mat.ncols(), basis.dim(), "operator does not fit the basis");
        FockOperator { mat, basis }
    }

    pub fn identity(basis: &Arc<FockBasis>) -> Self {
        FockOperator::new(Array2::eye(basis.dim()), basis.clone())
    }

    /// Lift a photon-space matrix to the full space (`⊗ I_spin`).
    pub fn from_photon(mat: &CMat, basis: &Arc<FockBasis>) -> Self {
        assert_eq!(mat.nrows(), basis.photon_dim());
        FockOperator::new(kron(mat, &spin_identity(basis.n_spins)), basis.clone())
    }

    /// Lift a spin-space matrix to the full space (`I_ph ⊗ ·`).
    pub fn from_spin(mat: &CMat, basis: &Arc<FockBasis>) -> Self {
        assert_eq!(mat.nrows(), basis.spin_dim());
        FockOperator::new(
            kron(&Array2::eye(basis.photon_dim()), mat),
            basis.clone(),
        )
    }

    fn check(&self, other: &FockOperator) {
        assert!(
            self.basis.same(&other.basis),
            "FockOperator basis handles do not match"
        );
    }

    pub fn dot(&self, other: &FockOperator) -> FockOperator {
        self.check(other);
        FockOperator::new(self.mat.dot(&other.mat), self.basis.clone())
    }

    pub fn add(&self, other: &FockOperator) -> FockOperator {
        self.check(other);
        FockOperator::new(&self.mat + &other.mat, self.basis.clone())
    }

    pub fn sub(&self, other: &FockOperator) -> FockOperator {
        self.check(other);
        FockOperator::new(&self.mat - &other.mat, self.basis.clone())
    }

    pub fn scale(&self, factor: C64) -> FockOperator {
        FockOperator::new(self.mat.mapv(|v| v * factor), self.basis.clone())
    }

    pub fn dagger(&self) -> FockOperator {
        FockOperator::new(dagger(&self.mat), self.basis.clone())
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        self.check(other);
        FockOperator::new(
            self.mat.dot(&other.mat) - other.mat.dot(&self.mat),
            self.basis.clone(),
        )
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        self.mat.dot(v)
    }

    /// Spectral norm of the compression to the interior shell.
    pub fn restricted_norm(&self, margin: usize) -> f64 {
        let idx = self.basis.interior_indices(margin);
        let mut sub = Array2::zeros((idx.len(), idx.len()));
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                sub[[a, b]] = self.mat[[ia, ib]];
            }
        }
        spectral_norm(&sub)
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.mat)
    }

    /// Dump the nonzero entries as CSV rows `row,col,re,im` (17 significant
    /// digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for ((r, c), v) in self.mat.indexed_iter() {
            if v.norm() > 0.0 {
                out.push_str(&format!("{r},{c},{:.16e},{:.16e}\n", v.re, v.im));
            }
        }
        out
    }
}

/// Per-mode ladder operators on the photon space.
#[derive(Debug, Clone)]
pub struct LadderSet {
    /// Annihilators `a_k`.
    pub lower: Vec<CMat>,
    /// Creators `a_k†` (top shell maps to zero).
    pub raise: Vec<CMat>,
    pub basis: Arc<FockBasis>,
}

/// Build the ladder matrices with the total-number truncation.
pub fn build_ladders(basis: &Arc<FockBasis>) -> LadderSet {
    let p = basis.photon_dim();
    let mut lower = Vec::with_capacity(basis.j_modes);
    let mut raise = Vec::with_capacity(basis.j_modes);
    for k in 0..basis.j_modes {
        let mut a = Array2::zeros((p, p));
        for i in 0..p {
            let t = basis.tuple(i);
            if t[k] > 0 {
                let mut lowered = t.to_vec();
                lowered[k] -= 1;
                let target = basis
                    .tuple_index(&lowered)
                    .expect("lowered tuple stays below the cutoff");
                a[[target, i]] = C64::new((t[k] as f64).sqrt(), 0.0);
            }
        }
        raise.push(dagger(&a));
        lower.push(a);
    }
    LadderSet {
        lower,
        raise,
        basis: basis.clone(),
    }
}

/// Photon-space Segal quantization of a linear symbol:
/// `√(h/2) Σ_k (w_k a_k† + conj(w_k) a_k)` with `w = a + i b`.
///
/// The convention is pinned by `[Q_h(e_k), P_h(e_l)] = i h δ_{kl}` on the
/// interior shell and by the coherent-overlap cross-check.
pub fn segal_photon(symbol: &LinearSymbol, h: f64, ladders: &LadderSet) -> CMat {
    assert_eq!(symbol.dim(), ladders.basis.j_modes);
    let p = ladders.basis.photon_dim();
    let mut out = Array2::zeros((p, p));
    let scale = (h / 2.0).sqrt();
    let w = symbol.to_complex();
    for k in 0..symbol.dim() {
        if w[k].norm() == 0.0 {
            continue;
        }
        out.scaled_add(w[k] * scale, &ladders.raise[k]);
        out.scaled_add(w[k].conj() * scale, &ladders.lower[k]);
    }
    out
}

/// Full-space Segal field `Op_h(F) ⊗ I_spin`.
pub fn segal_quantize(symbol: &LinearSymbol, h: f64, ladders: &LadderSet) -> FockOperator {
    FockOperator::from_photon(&segal_photon(symbol, h, ladders), &ladders.basis)
}

/// The position/momentum fields of basis mode `k`.
pub fn position_field(k: usize, h: f64, ladders: &LadderSet) -> FockOperator {
    segal_quantize(
        &LinearSymbol::q_form(ladders.basis.j_modes, k),
        h,
        ladders,
    )
}

pub fn momentum_field(k: usize, h: f64, ladders: &LadderSet) -> FockOperator {
    segal_quantize(
        &LinearSymbol::p_form(ladders.basis.j_modes, k),
        h,
        ladders,
    )
}

/// Photon-space second quantization `dΓ(M) = Σ_kl M_kl a_k† a_l` of a
/// one-particle matrix.
pub fn second_quantize(m: &CMat, ladders: &LadderSet) -> CMat {
    let p = ladders.basis.photon_dim();
    let mut out = Array2::zeros((p, p));
    for k in 0..ladders.basis.j_modes {
        for l in 0..ladders.basis.j_modes {
            if m[[k, l]].norm() == 0.0 {
                continue;
            }
            out.scaled_add(m[[k, l]], &ladders.raise[k].dot(&ladders.lower[l]));
        }
    }
    out
}

/// The photon number operator `dΓ(I)` on the photon space.
pub fn number_operator(basis: &Arc<FockBasis>) -> CMat {
    let p = basis.photon_dim();
    let mut out = Array2::zeros((p, p));
    for i in 0..p {
        out[[i, i]] = C64::new(basis.tuple(i).iter().sum::<u32>() as f64, 0.0);
    }
    out
}

/// Assembled Hamiltonians of a model at a given `h`.
pub struct HamiltonianPair {
    /// `H_0 = h dΓ(W) ⊗ I`.
    pub h0: FockOperator,
    /// `H_int = Σ_λ Σ_j (β_j + B_j(a_λ)) ⊗ σ_j^{[λ]}`.
    pub h_int: FockOperator,
    /// `H(h) = H_0 + h H_int`.
    pub h_full: FockOperator,
}

/// Build `H_0` and `H(h)` for a model on a basis.
pub fn build_hamiltonian(
    model: &ModeModel,
    h: f64,
    basis: &Arc<FockBasis>,
) -> Result<HamiltonianPair> {
    if model.n_modes() != basis.j_modes || model.n_spins() != basis.n_spins {
        return Err(Error::Dimension(format!(
            "model (J = {}, N = {}) does not fit basis (J = {}, N = {})",
            model.n_modes(),
            model.n_spins(),
            basis.j_modes,
            basis.n_spins
        )));
    }
    let ladders = build_ladders(basis);
    let w_complex = model.w.mapv(|v| C64::new(v, 0.0));
    let h0_photon = second_quantize(&w_complex, &ladders).mapv(|v| v * h);
    let h0 = FockOperator::from_photon(&h0_photon, basis);

    let mut h_int_mat: CMat = kron(
        &Array2::eye(basis.photon_dim()),
        &constant_field_term(basis.n_spins, model.beta),
    );
    for lam in 0..model.n_spins() {
        for pj in 0..3 {
            let w_vec: CVec = model.coupling.slice(ndarray::s![lam, pj, ..]).to_owned();
            if w_vec.iter().all(|c| c.norm() == 0.0) {
                continue;
            }
            let field = segal_photon(&LinearSymbol::from_complex(&w_vec), h, &ladders);
            h_int_mat = h_int_mat + kron(&field, &sigma_at(basis.n_spins, lam, pj));
        }
    }
    let h_int = FockOperator::new(h_int_mat, basis.clone());
    let h_full = h0.add(&h_int.scale(C64::new(h, 0.0)));
    Ok(HamiltonianPair { h0, h_int, h_full })
}

/// Cached Hermitian eigendecomposition generating `e^{-i t H / h}` cheaply in
/// `t`.
pub struct Propagator {
    evals: Array1<f64>,
    evecs: CMat,
    h: f64,
    basis: Arc<FockBasis>,
}

impl Propagator {
    pub fn new(op: &FockOperator, h: f64) -> Result<Self> {
        let (evals, evecs) = eigh_hermitian(&op.mat)?;
        Ok(Propagator {
            evals,
            evecs,
            h,
            basis: op.basis.clone(),
        })
    }

    /// `e^{-i t H / h}`.
    pub fn at(&self, t: f64) -> FockOperator {
        FockOperator::new(
            unitary_from_eigh(&self.evals, &self.evecs, t / self.h),
            self.basis.clone(),
        )
    }
}

/// Both propagators of a model, exposing the reduced (interaction-picture)
/// propagator `U_red(t) = e^{+i t H_0 / h} e^{-i t H(h) / h}`.
pub struct ReducedPropagator {
    pub free: Propagator,
    pub full: Propagator,
}

impl ReducedPropagator {
    pub fn build(model: &ModeModel, h: f64, basis: &Arc<FockBasis>) -> Result<Self> {
        let ham = build_hamiltonian(model, h, basis)?;
        Ok(ReducedPropagator {
            free: Propagator::new(&ham.h0, h)?,
            full: Propagator::new(&ham.h_full, h)?,
        })
    }

    pub fn at(&self, t: f64) -> FockOperator {
        self.free.at(-t).dot(&self.full.at(t))
    }
}

/// Convenience wrapper building the reduced propagator at a single time.
pub fn reduced_propagator(
    model: &ModeModel,
    h: f64,
    t: f64,
    basis: &Arc<FockBasis>,
) -> Result<FockOperator> {
    Ok(ReducedPropagator::build(model, h, basis)?.at(t))
}

/// Truncated coherent state on the photon space.
#[derive(Debug, Clone)]
pub struct CoherentVector {
    /// Amplitudes over the occupation tuples.
    pub amps: CVec,
    /// Probability mass lost to the truncation.
    pub tail: f64,
    pub basis: Arc<FockBasis>,
}

impl CoherentVector {
    pub fn ensure_tail(&self, threshold: f64) -> Result<()> {
        if self.tail > threshold {
            Err(Error::TruncationTail {
                tail: self.tail,
                threshold,
            })
        } else {
            Ok(())
        }
    }

    /// Truncated squared norm `1 - tail`.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensor with a spin vector into the full space.
    pub fn with_spin(&self, spin: &CVec) -> CVec {
        let s = self.basis.spin_dim();
        assert_eq!(spin.len(), s);
        let mut out = Array1::zeros(self.basis.dim());
        for (i, &a) in self.amps.iter().enumerate() {
            for (j, &b) in spin.iter().enumerate() {
                out[i * s + j] = a * b;
            }
        }
        out
    }
}

/// Coherent state `Ψ_{X,h}` with amplitudes
/// `∏_k e^{-|α_k|²/2} α_k^{n_k} / √(n_k!)`, `α_k = (q_k + i p_k)/√(2h)`.
pub fn coherent_vector(x: &PhasePoint, h: f64, basis: &Arc<FockBasis>) -> CoherentVector {
    assert!(h > 0.0, "coherent_vector: h must be positive");
    assert_eq!(x.dim(), basis.j_modes, "phase point does not fit basis");
    let alphas: Vec<C64> = x.z().iter().map(|&z| z / (2.0 * h).sqrt()).collect();
    let prefactor = (-alphas.iter().map(|a| a.norm_sqr()).sum::<f64>() / 2.0).exp();
    let mut amps = Array1::zeros(basis.photon_dim());
    for i in 0..basis.photon_dim() {
        let t = basis.tuple(i);
        let mut amp = C64::new(prefactor, 0.0);
        for (k, &n) in t.iter().enumerate() {
            let mut pow = C64::new(1.0, 0.0);
            let mut fact = 1.0f64;
            for step in 0..n {
                pow *= alphas[k];
                fact *= (step + 1) as f64;
            }
            amp *= pow / fact.sqrt();
        }
        amps[i] = amp;
    }
    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    CoherentVector {
        amps,
        tail: (1.0 - norm_sq).max(0.0),
        basis: basis.clone(),
    }
}

/// Wick symbol of an operator at `X`: the spin-block matrix with entries
/// `⟨A (Ψ_X ⊗ e_s), Ψ_X ⊗ e_{s'}⟩`, normalized by the truncated squared norm.
pub fn wick_symbol(a: &FockOperator, x: &PhasePoint, h: f64) -> Result<CMat> {
    let cv = coherent_vector(x, h, &a.basis);
    cv.ensure_tail(DEFAULT_TAIL_THRESHOLD)?;
    Ok(spin_block(a, &cv, &cv) / C64::new(cv.norm_sq(), 0.0))
}

/// Bi-symbol `⟨A (Ψ_X ⊗ e_s), Ψ_Y ⊗ e_{s'}⟩ / ⟨Ψ_X, Ψ_Y⟩` with the truncated
/// overlap in the denominator.
pub fn bisymbol(a: &FockOperator, x: &PhasePoint, y: &PhasePoint, h: f64) -> Result<CMat> {
    let exponent = x.dist_sq(y) / (4.0 * h);
    if exponent > DEFAULT_OVERLAP_LOG_THRESHOLD {
        return Err(Error::OverlapUnderflow {
            exponent,
            threshold: DEFAULT_OVERLAP_LOG_THRESHOLD,
        });
    }
    let cx = coherent_vector(x, h, &a.basis);
    let cy = coherent_vector(y, h, &a.basis);
    cx.ensure_tail(DEFAULT_TAIL_THRESHOLD)?;
    cy.ensure_tail(DEFAULT_TAIL_THRESHOLD)?;
    let denom: C64 = cx
        .amps
        .iter()
        .zip(cy.amps.iter())
        .map(|(&ax, &ay)| ax * ay.conj())
        .sum();
    Ok(spin_block(a, &cx, &cy) / denom)
}

/// Spin-block matrix `M[s', s] = ⟨A (Ψ_X ⊗ e_s), Ψ_Y ⊗ e_{s'}⟩`.
fn spin_block(a: &FockOperator, cx: &CoherentVector, cy: &CoherentVector) -> CMat {
    let s_dim = a.basis.spin_dim();
    let p_dim = a.basis.photon_dim();
    let mut out = Array2::zeros((s_dim, s_dim));
    for s in 0..s_dim {
        let mut spin_vec: CVec = Array1::zeros(s_dim);
        spin_vec[s] = C64::new(1.0, 0.0);
        let v = cx.with_spin(&spin_vec);
        let av = a.apply(&v);
        for sp in 0..s_dim {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..p_dim {
                acc += av[i * s_dim + sp] * cy.amps[i].conj();
            }
            out[[sp, s]] = acc;
        }
    }
    out
}

/// Residual of `Op(F ∘ χ_t) = e^{i t H_ph / h} Op(F) e^{-i t H_ph / h}` on
/// the interior shell, for a linear symbol `F`.
pub fn gamma_conjugation_check(
    symbol: &LinearSymbol,
    t: f64,
    model: &ModeModel,
    h: f64,
    basis: &Arc<FockBasis>,
    margin: usize,
) -> Result<f64> {
    let ladders = build_ladders(basis);
    let flow = crate::phasespace::FreeFlow::new(&model.w)?;
    let composed = symbol.compose_flow(&flow, t);
    let lhs = segal_quantize(&composed, h, &ladders);

    // e^{±i t H_ph / h} = e^{±i t dΓ(W)}: independent of h.
    let w_complex = model.w.mapv(|v| C64::new(v, 0.0));
    let dgw = FockOperator::from_photon(&second_quantize(&w_complex, &ladders), basis);
    let prop = Propagator::new(&dgw, 1.0)?;
    let rhs = prop.at(-t).dot(&segal_quantize(symbol, h, &ladders)).dot(&prop.at(t));

    Ok(lhs.sub(&rhs).restricted_norm(margin))
}

/// One row of the Beals commutator table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BealsRow {
    pub mode: usize,
    pub q_norm: f64,
    pub p_norm: f64,
    /// `h |t| ε_k(t)`.
    pub bound: f64,
    pub q_ratio: f64,
    pub p_ratio: f64,
}

/// Interior-shell norms of `[Q_h(e_k) ⊗ I, U_red(t)]` and
/// `[P_h(e_k) ⊗ I, U_red(t)]` against the envelope bound `h |t| ε_k(t)`.
pub fn beals_commutator_norms(
    model: &ModeModel,
    h: f64,
    t: f64,
    basis: &Arc<FockBasis>,
    margin: usize,
    s_samples: usize,
) -> Result<Vec<BealsRow>> {
    let ladders = build_ladders(basis);
    let u_red = reduced_propagator(model, h, t, basis)?;
    let eps = model.epsilon_profile(t, s_samples)?;
    let mut rows = Vec::with_capacity(basis.j_modes);
    for k in 0..basis.j_modes {
        let q = position_field(k, h, &ladders);
        let p = momentum_field(k, h, &ladders);
        let q_norm = q.commutator(&u_red).restricted_norm(margin);
        let p_norm = p.commutator(&u_red).restricted_norm(margin);
        let bound = h * t.abs() * eps[k];
        let safe = bound.max(f64::MIN_POSITIVE);
        rows.push(BealsRow {
            mode: k,
            q_norm,
            p_norm,
            bound,
            q_ratio: q_norm / safe,
            p_ratio: p_norm / safe,
        });
    }
    Ok(rows)
}

/// Exact truncated transition amplitude
/// `⟨e^{-i t H(h) / h} (Ψ_X ⊗ a), Ψ_Y ⊗ b⟩`.
///
/// At zero coupling its modulus is the free Gaussian
/// `e^{-|X - χ_{-t} Y|² / 4h}` times the spin factor.
pub fn transition_amplitude(
    model: &ModeModel,
    h: f64,
    t: f64,
    x: &PhasePoint,
    y: &PhasePoint,
    spin_a: &CVec,
    spin_b: &CVec,
    basis: &Arc<FockBasis>,
) -> Result<C64> {
    let cx = coherent_vector(x, h, basis);
    let cy = coherent_vector(y, h, basis);
    cx.ensure_tail(DEFAULT_TAIL_THRESHOLD)?;
    cy.ensure_tail(DEFAULT_TAIL_THRESHOLD)?;
    let ham = build_hamiltonian(model, h, basis)?;
    let u = Propagator::new(&ham.h_full, h)?.at(t);
    let va = cx.with_spin(spin_a);
    let vb = cy.with_spin(spin_b);
    let uva = u.apply(&va);
    Ok(uva
        .iter()
        .zip(vb.iter())
        .map(|(&u, &w)| u * w.conj())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{build_mode_model, ModelConfig};
    use crate::numerics::linalg::{hermiticity_defect, max_norm, unitarity_defect};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn zero_coupling_model(beta3: f64) -> ModeModel {
        build_mode_model(&ModelConfig::Synthetic {
            frequencies: Some(vec![1.0]),
            w: None,
            coupling: vec![vec![vec![[0.0, 0.0]], vec![[0.0, 0.0]], vec![[0.0, 0.0]]]],
            beta: [0.0, 0.0, beta3],
            positions: None,
        })
        .unwrap()
    }

    fn coupled_model(strength: f64) -> ModeModel {
        build_mode_model(&ModelConfig::Synthetic {
            frequencies: Some(vec![1.0]),
            w: None,
            coupling: vec![vec![
                vec![[strength, 0.0]],
                vec![[0.0, strength * 0.7]],
                vec![[0.0, 0.0]],
            ]],
            beta: [0.0, 0.0, 0.8],
            positions: None,
        })
        .unwrap()
    }

    #[test]
    fn basis_counts() {
        let basis = FockBasis::new(3, 8, 2);
        // C(11, 3) = 165 tuples, spin dimension 4.
        assert_eq!(basis.photon_dim(), 165);
        assert_eq!(basis.dim(), 660);
        for i in 0..basis.photon_dim() {
            assert_eq!(basis.tuple_index(basis.tuple(i)), Some(i));
        }
    }

    #[test]
    fn ladder_matrix_elements() {
        // J = 1, n_max = 2: a has entries √1 at (0←1) and √2 at (1←2).
        let basis = FockBasis::new(1, 2, 1);
        let ladders = build_ladders(&basis);
        let a = &ladders.lower[0];
        let i0 = basis.tuple_index(&[0]).unwrap();
        let i1 = basis.tuple_index(&[1]).unwrap();
        let i2 = basis.tuple_index(&[2]).unwrap();
        assert_abs_diff_eq!(a[[i0, i1]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[[i1, i2]].re, 2.0f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.iter().filter(|v| v.norm() > 0.0).count(), 2);

        // Number operator diagonal 0, 1, 2.
        let n = ladders.raise[0].dot(&ladders.lower[0]);
        assert_abs_diff_eq!(n[[i0, i0]].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n[[i1, i1]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n[[i2, i2]].re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn ccr_on_interior_shell() {
        let basis = FockBasis::new(2, 6, 1);
        let ladders = build_ladders(&basis);
        // [a_k, a_l†] = δ_kl below the top shell.
        let interior = basis.interior_photons(1);
        for k in 0..2 {
            for l in 0..2 {
                let comm = ladders.lower[k].dot(&ladders.raise[l])
                    - ladders.raise[l].dot(&ladders.lower[k]);
                let want = if k == l { 1.0 } else { 0.0 };
                for &i in &interior {
                    assert_abs_diff_eq!(comm[[i, i]].re, want, epsilon = 1e-14);
                }
            }
        }
        // [Q_h(e_k), P_h(e_l)] = i h δ_kl on the interior shell.
        let h = 0.3;
        for k in 0..2 {
            for l in 0..2 {
                let q = position_field(k, h, &ladders);
                let p = momentum_field(l, h, &ladders);
                let comm = q.commutator(&p);
                let want = if k == l { h } else { 0.0 };
                for &i in &basis.interior_indices(1) {
                    assert_abs_diff_eq!(comm.mat[[i, i]].im, want, epsilon = 1e-12);
                    assert_abs_diff_eq!(comm.mat[[i, i]].re, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn segal_zero_symbol() {
        let basis = FockBasis::new(1, 3, 1);
        let ladders = build_ladders(&basis);
        let zero = LinearSymbol::new(array![0.0], array![0.0]);
        let op = segal_quantize(&zero, 0.2, &ladders);
        assert_eq!(max_norm(&op.mat), 0.0);
    }

    #[test]
    fn wick_symbol_of_position_field_is_q() {
        let basis = FockBasis::new(1, 14, 1);
        let ladders = build_ladders(&basis);
        let h = 0.25;
        let x = PhasePoint::new(array![0.4], array![-0.3]);
        let q_op = position_field(0, h, &ladders);
        let sym = wick_symbol(&q_op, &x, h).unwrap();
        assert_abs_diff_eq!(sym[[0, 0]].re, 0.4, epsilon = 1e-10);
        assert_abs_diff_eq!(sym[[1, 1]].re, 0.4, epsilon = 1e-10);
        assert_abs_diff_eq!(sym[[0, 1]].norm(), 0.0, epsilon = 1e-12);

        let p_op = momentum_field(0, h, &ladders);
        let sym = wick_symbol(&p_op, &x, h).unwrap();
        assert_abs_diff_eq!(sym[[0, 0]].re, -0.3, epsilon = 1e-10);
    }

    #[test]
    fn wick_symbol_of_number_hamiltonian() {
        // dΓ(W) with W = [ω] has Wick symbol ω |z|² / 2h.
        let basis = FockBasis::new(1, 16, 1);
        let ladders = build_ladders(&basis);
        let omega = 1.3;
        let dg = FockOperator::from_photon(
            &second_quantize(&array![[C64::new(omega, 0.0)]], &ladders),
            &basis,
        );
        let h = 0.2;
        let x = PhasePoint::new(array![0.5], array![0.2]);
        let sym = wick_symbol(&dg, &x, h).unwrap();
        let want = omega * x.norm_sq() / (2.0 * h);
        assert_abs_diff_eq!(sym[[0, 0]].re, want, epsilon = 1e-8);
    }

    #[test]
    fn coherent_vacuum_and_overlap() {
        let basis = FockBasis::new(2, 10, 1);
        let cv = coherent_vector(&PhasePoint::zero(2), 0.1, &basis);
        assert_abs_diff_eq!(cv.norm_sq(), 1.0, epsilon = 1e-15);
        assert_eq!(cv.tail, 0.0);
        let vac = basis.tuple_index(&[0, 0]).unwrap();
        assert_abs_diff_eq!(cv.amps[vac].re, 1.0, epsilon = 1e-15);

        // ⟨Ψ_X, Ψ_Y⟩ matches the phase-space overlap formula; this pins the
        // overlap phase convention.
        let h = 0.3;
        let x = PhasePoint::new(array![0.3, -0.2], array![0.1, 0.4]);
        let y = PhasePoint::new(array![-0.1, 0.2], array![0.5, 0.0]);
        let cx = coherent_vector(&x, h, &basis);
        let cy = coherent_vector(&y, h, &basis);
        let fock_overlap: C64 = cx
            .amps
            .iter()
            .zip(cy.amps.iter())
            .map(|(&a, &b)| a * b.conj())
            .sum();
        let formula = crate::phasespace::coherent_overlap(&x, &y, h);
        assert!(
            (fock_overlap - formula).norm() < 1e-8,
            "fock {fock_overlap} vs formula {formula}"
        );
    }

    #[test]
    fn coherent_is_ladder_eigenvector() {
        let basis = FockBasis::new(1, 18, 1);
        let h = 0.2;
        let x = PhasePoint::new(array![0.4], array![0.3]);
        let cv = coherent_vector(&x, h, &basis);
        let ladders = build_ladders(&basis);
        let alpha = C64::new(0.4, 0.3) / (2.0 * h).sqrt();
        let av = ladders.lower[0].dot(&cv.amps);
        let resid: f64 = av
            .iter()
            .zip(cv.amps.iter())
            .map(|(&a, &c)| (a - alpha * c).norm_sqr())
            .sum::<f64>()
            .sqrt();
        // The truncated ladder misses exactly the top shell: the residual is
        // |α| √(top-shell mass).
        let top_mass: f64 = (0..basis.photon_dim())
            .filter(|&i| basis.tuple(i).iter().sum::<u32>() == basis.n_max as u32)
            .map(|i| cv.amps[i].norm_sqr())
            .sum();
        let expected = alpha.norm() * top_mass.sqrt();
        assert!(
            resid <= 1.01 * expected + 1e-14,
            "residual {resid} vs truncation level {expected}"
        );
    }

    #[test]
    fn hamiltonian_spectrum_zero_coupling() {
        // H(h) spectrum is { h ω n ± h β₃ }.
        let model = zero_coupling_model(0.7);
        let h = 0.3;
        let basis = FockBasis::new(1, 4, 1);
        let ham = build_hamiltonian(&model, h, &basis).unwrap();
        assert!(hermiticity_defect(&ham.h_full.mat) < 1e-12);
        let (evals, _) = eigh_hermitian(&ham.h_full.mat).unwrap();
        let mut want: Vec<f64> = (0..=4)
            .flat_map(|n| {
                [
                    h * 1.0 * n as f64 + h * 0.7,
                    h * 1.0 * n as f64 - h * 0.7,
                ]
            })
            .collect();
        want.sort_by(f64::total_cmp);
        for (got, want) in evals.iter().zip(&want) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn interaction_block_rescales_as_sqrt_h() {
        // H(h) - H_0 = h H_int where H_int depends on h only through the √h
        // in the Segal fields.
        let model = coupled_model(0.4);
        let basis = FockBasis::new(1, 5, 1);
        let (h1, h2) = (0.2, 0.05);
        let ham1 = build_hamiltonian(&model, h1, &basis).unwrap();
        let ham2 = build_hamiltonian(&model, h2, &basis).unwrap();
        let beta_part = FockOperator::from_spin(&constant_field_term(1, model.beta), &basis);
        let c1 = ham1.h_int.sub(&beta_part).scale(C64::new(1.0 / h1.sqrt(), 0.0));
        let c2 = ham2.h_int.sub(&beta_part).scale(C64::new(1.0 / h2.sqrt(), 0.0));
        assert!(max_norm(&c1.sub(&c2).mat) < 1e-12);
    }

    #[test]
    fn propagator_group_law_and_unitarity() {
        let model = coupled_model(0.3);
        let h = 0.2;
        let basis = FockBasis::new(1, 6, 1);
        let ham = build_hamiltonian(&model, h, &basis).unwrap();
        let prop = Propagator::new(&ham.h_full, h).unwrap();
        let u1 = prop.at(0.0);
        assert!(max_norm(&u1.sub(&FockOperator::identity(&basis)).mat) < 1e-12);
        let u_sum = prop.at(0.7).dot(&prop.at(0.5));
        let u_direct = prop.at(1.2);
        assert!(max_norm(&u_sum.sub(&u_direct).mat) < 1e-10);
        assert!(unitarity_defect(&prop.at(2.0).mat) < 1e-10);
    }

    #[test]
    fn energy_is_conserved() {
        let model = coupled_model(0.3);
        let h = 0.2;
        let basis = FockBasis::new(1, 8, 1);
        let ham = build_hamiltonian(&model, h, &basis).unwrap();
        let prop = Propagator::new(&ham.h_full, h).unwrap();
        let x = PhasePoint::new(array![0.3], array![0.1]);
        let psi = coherent_vector(&x, h, &basis).with_spin(&array![
            C64::new(0.8, 0.0),
            C64::new(0.0, 0.6)
        ]);
        let e0: C64 = ham
            .h_full
            .apply(&psi)
            .iter()
            .zip(psi.iter())
            .map(|(&a, &b)| a * b.conj())
            .sum();
        let psi_t = prop.at(1.7).apply(&psi);
        let e1: C64 = ham
            .h_full
            .apply(&psi_t)
            .iter()
            .zip(psi_t.iter())
            .map(|(&a, &b)| a * b.conj())
            .sum();
        assert!((e1 - e0).norm() / e0.norm() < 1e-9);
    }

    #[test]
    fn number_commutes_with_free_hamiltonian() {
        let model = coupled_model(0.3);
        let basis = FockBasis::new(1, 6, 1);
        let ham = build_hamiltonian(&model, 0.2, &basis).unwrap();
        let n_op = FockOperator::from_photon(&number_operator(&basis), &basis);
        let comm = ham.h0.commutator(&n_op);
        assert_eq!(max_norm(&comm.mat), 0.0);
    }

    #[test]
    fn free_propagation_transports_coherent_states() {
        // e^{-i t H_0 / h} Ψ_X = Ψ_{χ_t X} up to truncation tails; with this
        // ladder convention the global phase is exactly 1.
        let model = zero_coupling_model(0.0);
        let h = 0.15;
        let basis = FockBasis::new(1, 14, 1);
        let ham = build_hamiltonian(&model, h, &basis).unwrap();
        let prop = Propagator::new(&ham.h0, h).unwrap();
        let flow = crate::phasespace::FreeFlow::new(&model.w).unwrap();
        let x = PhasePoint::new(array![0.4], array![-0.2]);
        let t = 0.9;
        let spin = array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let moved = prop.at(t).apply(&coherent_vector(&x, h, &basis).with_spin(&spin));
        let cv_t = coherent_vector(&flow.apply(t, &x), h, &basis);
        let target = cv_t.with_spin(&spin);
        let overlap: C64 = moved
            .iter()
            .zip(target.iter())
            .map(|(&a, &b)| a * b.conj())
            .sum();
        assert!(
            overlap.norm() >= 1.0 - 10.0 * cv_t.tail - 1e-12,
            "modulus {}",
            overlap.norm()
        );
        // Measured relative phase (documented, not asserted by the theory):
        // zero for this convention.
        assert!(overlap.im.abs() < 1e-10);
        assert!((overlap.re - 1.0).abs() < 10.0 * cv_t.tail + 1e-10);
    }

    #[test]
    fn reduced_propagator_trivial_cases() {
        let model = zero_coupling_model(0.0);
        let h = 0.2;
        let basis = FockBasis::new(1, 6, 1);
        let u = reduced_propagator(&model, h, 1.3, &basis).unwrap();
        assert!(max_norm(&u.sub(&FockOperator::identity(&basis)).mat) < 1e-10);

        // β ≠ 0: U_red = I_photon ⊗ exp(-i t β·σ).
        let model = zero_coupling_model(0.9);
        let t = 0.8;
        let u = reduced_propagator(&model, h, t, &basis).unwrap();
        let spin_rot = crate::numerics::linalg::expm_neg_i_hermitian(
            &constant_field_term(1, [0.0, 0.0, 0.9]),
            t,
        )
        .unwrap();
        let want = FockOperator::from_spin(&spin_rot, &basis);
        assert!(max_norm(&u.sub(&want).mat) < 1e-10);
    }

    #[test]
    fn two_spin_reduced_propagator_is_pure_spin_rotation() {
        let model = build_mode_model(&ModelConfig::Synthetic {
            frequencies: Some(vec![1.0]),
            w: None,
            coupling: vec![
                vec![vec![[0.0, 0.0]], vec![[0.0, 0.0]], vec![[0.0, 0.0]]],
                vec![vec![[0.0, 0.0]], vec![[0.0, 0.0]], vec![[0.0, 0.0]]],
            ],
            beta: [0.3, 0.0, 0.6],
            positions: None,
        })
        .unwrap();
        let h = 0.2;
        let t = 0.9;
        let basis = FockBasis::new(1, 5, 2);
        let u = reduced_propagator(&model, h, t, &basis).unwrap();
        let spin_rot = crate::numerics::linalg::expm_neg_i_hermitian(
            &constant_field_term(2, [0.3, 0.0, 0.6]),
            t,
        )
        .unwrap();
        let want = FockOperator::from_spin(&spin_rot, &basis);
        assert!(max_norm(&u.sub(&want).mat) < 1e-10);
    }

    #[test]
    fn reduced_propagator_satisfies_interaction_ode() {
        // i h d/dt U_red = h H_int^free(t) U_red, checked at a midpoint by
        // central differences; the residual shrinks quadratically in Δt.
        let model = coupled_model(0.35);
        let h = 0.25;
        let basis = FockBasis::new(1, 8, 1);
        let red = ReducedPropagator::build(&model, h, &basis).unwrap();
        let ham = build_hamiltonian(&model, h, &basis).unwrap();
        let t = 0.6;
        let mut errs = Vec::new();
        let dts = [0.02, 0.01, 0.005];
        for &dt in &dts {
            let du = red
                .at(t + dt)
                .sub(&red.at(t - dt))
                .scale(C64::new(1.0 / (2.0 * dt), 0.0));
            // H_int^free(t) = e^{i t H_0 / h} H_int e^{-i t H_0 / h}.
            let h_free = red.free.at(-t).dot(&ham.h_int).dot(&red.free.at(t));
            let want = h_free.dot(&red.at(t)).scale(C64::new(0.0, -1.0));
            errs.push(max_norm(&du.sub(&want).mat));
        }
        assert!(errs[2] < errs[0]);
        let hs: Vec<f64> = dts.to_vec();
        let (slope, _, _) = crate::numerics::fit::loglog_slope(&hs, &errs);
        assert!((1.7..=2.3).contains(&slope), "FD residual slope {slope}");
    }

    #[test]
    fn two_spin_coupled_wick_symbol_tracks_expansion() {
        // Coupled N = 2 model: the Wick symbol of the exact reduced
        // propagator follows the order-1 partial sum with the heat
        // correction, with the error dropping by ~4 when h halves.
        let model = build_mode_model(&ModelConfig::Synthetic {
            frequencies: Some(vec![1.0]),
            w: None,
            coupling: vec![
                vec![vec![[0.25, 0.0]], vec![[0.0, 0.15]], vec![[0.0, 0.0]]],
                vec![vec![[0.0, 0.2]], vec![[0.1, 0.0]], vec![[0.0, 0.0]]],
            ],
            beta: [0.0, 0.2, 0.7],
            positions: None,
        })
        .unwrap();
        let t = 0.8;
        let x = PhasePoint::new(ndarray::array![0.2], ndarray::array![-0.1]);
        let basis = FockBasis::new(1, 12, 2);
        let opts = crate::hierarchy::SolveOptions {
            tolerance: 1e-11,
            output_steps: 8,
        };
        let hier = crate::hierarchy::solve_hierarchy(&model, &x, t, 1, &opts).unwrap();
        let last = hier.last();
        let g0 = &last.g0.value;
        let g1 = &last.g1.as_ref().unwrap().value;
        let lap = last.g0.laplacian().unwrap();
        let err_at = |h: f64| -> f64 {
            let u = reduced_propagator(&model, h, t, &basis).unwrap();
            let wick = wick_symbol(&u, &x, h).unwrap();
            let mut order1 = g0.clone();
            order1.scaled_add(C64::new(h, 0.0), g1);
            order1.scaled_add(C64::new(h / 4.0, 0.0), &lap);
            max_norm(&(&wick - &order1))
        };
        let e_coarse = err_at(0.2);
        let e_fine = err_at(0.1);
        assert!(e_coarse < 1e-3, "order-1 error too large: {e_coarse}");
        let ratio = e_coarse / e_fine;
        assert!(
            (3.0..=5.5).contains(&ratio),
            "halving h scaled the error by {ratio}, expected ≈ 4"
        );
    }

    #[test]
    fn wick_and_bisymbol_basics() {
        let basis = FockBasis::new(1, 12, 1);
        let h = 0.2;
        let eye = FockOperator::identity(&basis);
        let x = PhasePoint::new(array![0.3], array![0.2]);
        let y = PhasePoint::new(array![0.1], array![-0.2]);
        let wick = wick_symbol(&eye, &x, h).unwrap();
        assert!(max_norm(&(&wick - &spin_identity(1))) < 1e-10);
        let bi = bisymbol(&eye, &x, &y, h).unwrap();
        assert!(max_norm(&(&bi - &spin_identity(1))) < 1e-10);

        // X = Y reduces the bi-symbol to the Wick symbol.
        let ladders = build_ladders(&basis);
        let op = position_field(0, h, &ladders);
        let bi = bisymbol(&op, &x, &x, h).unwrap();
        let wick = wick_symbol(&op, &x, h).unwrap();
        assert!(max_norm(&(&bi - &wick)) < 1e-12);
    }

    #[test]
    fn bisymbol_of_linear_form_is_holomorphic_extension() {
        // For A = Op(q-form), the bi-symbol at (X, Y) is the extension of the
        // symbol evaluated at ((q+ip)/2 + (q'-ip')/2): linear symbols are
        // heat-invariant.
        let basis = FockBasis::new(1, 16, 1);
        let h = 0.2;
        let ladders = build_ladders(&basis);
        let op = position_field(0, h, &ladders);
        let x = PhasePoint::new(array![0.3], array![0.2]);
        let y = PhasePoint::new(array![0.5], array![-0.1]);
        let bi = bisymbol(&op, &x, &y, h).unwrap();
        let zx = C64::new(x.q[0], x.p[0]);
        let zy_bar = C64::new(y.q[0], -y.p[0]);
        let want = (zx + zy_bar) / 2.0;
        assert!(
            (bi[[0, 0]] - want).norm() < 1e-9,
            "bisymbol {} vs {}",
            bi[[0, 0]],
            want
        );
    }

    #[test]
    fn bisymbol_denominator_guard() {
        let basis = FockBasis::new(1, 6, 1);
        let eye = FockOperator::identity(&basis);
        let x = PhasePoint::new(array![8.0], array![0.0]);
        let y = PhasePoint::new(array![-8.0], array![0.0]);
        let err = bisymbol(&eye, &x, &y, 0.05);
        assert!(matches!(err, Err(Error::OverlapUnderflow { .. })));
    }

    #[test]
    fn gamma_conjugation_residuals() {
        let model = coupled_model(0.0);
        let h = 0.3;
        let basis = FockBasis::new(1, 8, 1);
        let f = LinearSymbol::q_form(1, 0);
        let r0 = gamma_conjugation_check(&f, 0.0, &model, h, &basis, 2).unwrap();
        assert!(r0 < 1e-13);
        // Quarter period of the diagonal mode.
        let t = std::f64::consts::FRAC_PI_2;
        let r = gamma_conjugation_check(&f, t, &model, h, &basis, 2).unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn beals_zero_coupling_is_exactly_zero() {
        let model = zero_coupling_model(0.9);
        let basis = FockBasis::new(1, 6, 1);
        let rows = beals_commutator_norms(&model, 0.2, 1.0, &basis, 2, 9).unwrap();
        for row in rows {
            assert!(row.q_norm < 1e-12);
            assert!(row.p_norm < 1e-12);
            assert_eq!(row.bound, 0.0);
        }
    }

    #[test]
    fn operator_csv_dump() {
        let basis = FockBasis::new(1, 1, 1);
        let ladders = build_ladders(&basis);
        let q = position_field(0, 0.5, &ladders);
        let csv = q.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("row,col,re,im"));
        // √(h/2) on the two photon transitions, for both spin components.
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("0,2,5.0000000000000000e-1,0.0000000000000000e0"));
    }

    #[test]
    fn transition_amplitude_trivial_cases() {
        let model = zero_coupling_model(0.6);
        let h = 0.15;
        let basis = FockBasis::new(1, 14, 1);
        let x = PhasePoint::new(array![0.3], array![0.1]);
        let up = array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let amp =
            transition_amplitude(&model, h, 0.0, &x, &x, &up, &up, &basis).unwrap();
        let cv = coherent_vector(&x, h, &basis);
        assert!((amp.norm() - 1.0).abs() <= cv.tail + 1e-12);

        // Zero coupling: |amplitude| = e^{-|X - χ_{-t} Y|² / 4h} for a
        // σ₃-eigenvector spin state.
        let flow = crate::phasespace::FreeFlow::new(&model.w).unwrap();
        let y = PhasePoint::new(array![0.1], array![-0.3]);
        let t = 0.7;
        let amp = transition_amplitude(&model, h, t, &x, &y, &up, &up, &basis).unwrap();
        let d2 = x.dist_sq(&flow.apply(-t, &y));
        let want = (-d2 / (4.0 * h)).exp();
        let tails = coherent_vector(&y, h, &basis).tail + cv.tail;
        assert!(
            (amp.norm() - want).abs() <= 10.0 * tails + 1e-10,
            "modulus {} vs {}",
            amp.norm(),
            want
        );
    }
}
