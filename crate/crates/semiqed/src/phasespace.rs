//! Finite-dimensional phase-space layer.
//!
//! A phase point `X = (q, p)` lives in `R^J × R^J` for a `J`-mode truncation;
//! the complex view `z = q + i p` identifies the phase space with `C^J`. The
//! free photon flow is the rotation `z ↦ e^{-i t W} z` generated by the
//! compressed frequency matrix `W`, the coherent overlap is the Gaussian
//! kernel `exp(-|X-Y|²/4h + iσ(X,Y)/2h)`, and the heat operator with variance
//! `h/2` maps Weyl symbols to Wick symbols.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::numerics::linalg::eigh_real;
use crate::numerics::quad::gauss_hermite;
use crate::{C64, CMat, CVec};

/// A point `X = (q, p)` of the truncated phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Array1<f64>,
    pub p: Array1<f64>,
}

impl PhasePoint {
    pub fn new(q: Array1<f64>, p: Array1<f64>) -> Self {
        assert_eq!(q.len(), p.len(), "PhasePoint: q and p dimensions differ");
        PhasePoint { q, p }
    }

    pub fn zero(dim: usize) -> Self {
        PhasePoint {
            q: Array1::zeros(dim),
            p: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Complex view `z = q + i p`.
    pub fn z(&self) -> CVec {
        Array1::from_iter(
            self.q
                .iter()
                .zip(&self.p)
                .map(|(&q, &p)| C64::new(q, p)),
        )
    }

    pub fn from_z(z: &CVec) -> Self {
        PhasePoint {
            q: z.mapv(|v| v.re),
            p: z.mapv(|v| v.im),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum::<f64>() + self.p.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn dist_sq(&self, other: &PhasePoint) -> f64 {
        let dq = &self.q - &other.q;
        let dp = &self.p - &other.p;
        dq.iter().map(|v| v * v).sum::<f64>() + dp.iter().map(|v| v * v).sum::<f64>()
    }

    /// Coordinate access treating `(q, p)` as one flat vector of length `2J`
    /// (all of `q` first).
    pub fn coord(&self, a: usize) -> f64 {
        let j = self.dim();
        if a < j {
            self.q[a]
        } else {
            self.p[a - j]
        }
    }

    pub fn coord_mut(&mut self, a: usize) -> &mut f64 {
        let j = self.dim();
        if a < j {
            &mut self.q[a]
        } else {
            &mut self.p[a - j]
        }
    }
}

/// Symplectic form `σ(X, Y) = (p_X, q_Y) - (q_X, p_Y)`.
pub fn symplectic_form(x: &PhasePoint, y: &PhasePoint) -> f64 {
    x.p.dot(&y.q) - x.q.dot(&y.p)
}

/// A real-linear scalar symbol `F(q, p) = (a, q) + (b, p) + c`.
#[derive(Debug, Clone)]
pub struct LinearSymbol {
    pub a: Array1<f64>,
    pub b: Array1<f64>,
    pub constant: f64,
}

impl LinearSymbol {
    pub fn new(a: Array1<f64>, b: Array1<f64>) -> Self {
        assert_eq!(a.len(), b.len(), "LinearSymbol: coefficient lengths differ");
        LinearSymbol { a, b, constant: 0.0 }
    }

    /// The coordinate form `q_k`.
    pub fn q_form(dim: usize, k: usize) -> Self {
        let mut a = Array1::zeros(dim);
        a[k] = 1.0;
        LinearSymbol::new(a, Array1::zeros(dim))
    }

    /// The coordinate form `p_k`.
    pub fn p_form(dim: usize, k: usize) -> Self {
        let mut b = Array1::zeros(dim);
        b[k] = 1.0;
        LinearSymbol::new(Array1::zeros(dim), b)
    }

    /// Build from a complex coefficient vector `w = a + i b`.
    pub fn from_complex(w: &CVec) -> Self {
        LinearSymbol::new(w.mapv(|v| v.re), w.mapv(|v| v.im))
    }

    /// Complex coefficient vector `w = a + i b`.
    pub fn to_complex(&self) -> CVec {
        Array1::from_iter(self.a.iter().zip(&self.b).map(|(&a, &b)| C64::new(a, b)))
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, x: &PhasePoint) -> f64 {
        self.a.dot(&x.q) + self.b.dot(&x.p) + self.constant
    }

    /// Push-forward along the free flow: `F ∘ χ_t` has coefficients
    /// `e^{i t W} w` in the complex view.
    pub fn compose_flow(&self, flow: &FreeFlow, t: f64) -> Self {
        let w = flow.rotate_coefficients(t, &self.to_complex());
        let mut out = LinearSymbol::from_complex(&w);
        out.constant = self.constant;
        out
    }
}

/// Poisson bracket of two linear symbols: `{F, G} = (b_F, a_G) - (a_F, b_G)`.
///
/// Constants drop out; the result is the constant controlling the commutator
/// `[Op(F), Op(G)] = (h/i) {F, G}` of the corresponding Segal fields.
pub fn poisson_bracket_linear(f: &LinearSymbol, g: &LinearSymbol) -> f64 {
    f.b.dot(&g.a) - f.a.dot(&g.b)
}

/// A matrix-valued affine symbol `H(q,p) = C + Σ_k (A_k q_k + B_k p_k)`.
///
/// This is the shape of the interaction symbol at a fixed time: `A_k`, `B_k`
/// and `C` act on the spin space.
#[derive(Debug, Clone)]
pub struct MatrixLinearSymbol {
    pub q_coeffs: Vec<CMat>,
    pub p_coeffs: Vec<CMat>,
    pub constant: CMat,
}

impl MatrixLinearSymbol {
    pub fn dim(&self) -> usize {
        self.q_coeffs.len()
    }

    pub fn spin_dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, x: &PhasePoint) -> CMat {
        let mut out = self.constant.clone();
        for (k, m) in self.q_coeffs.iter().enumerate() {
            out.scaled_add(C64::new(x.q[k], 0.0), m);
        }
        for (k, m) in self.p_coeffs.iter().enumerate() {
            out.scaled_add(C64::new(x.p[k], 0.0), m);
        }
        out
    }
}

/// Value and phase-space derivatives of a matrix-valued symbol at a point.
///
/// `d1[a]` is the derivative along flat coordinate `a` (`q` first, then `p`);
/// `d2[a][b]`, when present, is the symmetric second-derivative array.
#[derive(Debug, Clone)]
pub struct MatrixJet {
    pub base: PhasePoint,
    pub value: CMat,
    pub d1: Vec<CMat>,
    pub d2: Option<Vec<Vec<CMat>>>,
}

impl MatrixJet {
    pub fn order(&self) -> usize {
        if self.d2.is_some() {
            2
        } else if !self.d1.is_empty() {
            1
        } else {
            0
        }
    }

    /// Laplacian `Σ_k (∂²_{q_k q_k} + ∂²_{p_k p_k})` of the symbol; requires a
    /// second-order jet.
    pub fn laplacian(&self) -> Result<CMat> {
        let d2 = self
            .d2
            .as_ref()
            .ok_or_else(|| Error::JetOrder("laplacian needs a second-order jet".into()))?;
        let n = self.d1.len();
        let mut out: CMat = Array2::zeros(self.value.raw_dim());
        for a in 0..n {
            out += &d2[a][a];
        }
        Ok(out)
    }

    /// Worst asymmetry `|∂_a∂_b - ∂_b∂_a|` over the stored second
    /// derivatives (a Schwarz-symmetry diagnostic; the transport solver keeps
    /// the array symmetric by construction).
    pub fn schwarz_defect(&self) -> f64 {
        let Some(d2) = self.d2.as_ref() else {
            return 0.0;
        };
        let n = self.d1.len();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                let diff = &d2[a][b] - &d2[b][a];
                worst = worst.max(diff.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

/// Matricial Poisson bracket of an affine symbol against a jet:
/// `{H, G} = Σ_k (∂_{p_k} H)(∂_{q_k} G) - (∂_{q_k} H)(∂_{p_k} G)`,
/// with the `H` factors multiplying from the left.
pub fn poisson_bracket_linear_vs_jet(h: &MatrixLinearSymbol, g: &MatrixJet) -> Result<CMat> {
    let j = h.dim();
    if g.d1.len() != 2 * j {
        return Err(Error::JetOrder(format!(
            "bracket needs first derivatives in all 2J = {} coordinates, jet has {}",
            2 * j,
            g.d1.len()
        )));
    }
    let mut out: CMat = Array2::zeros(g.value.raw_dim());
    for k in 0..j {
        out += &h.p_coeffs[k].dot(&g.d1[k]);
        out -= &h.q_coeffs[k].dot(&g.d1[j + k]);
    }
    Ok(out)
}

/// The free photon flow `χ_t` generated by a symmetric positive definite
/// frequency matrix `W`: in the complex view, `z ↦ e^{-i t W} z`.
#[derive(Debug, Clone)]
pub struct FreeFlow {
    evals: Array1<f64>,
    evecs: Array2<f64>,
}

impl FreeFlow {
    pub fn new(w: &Array2<f64>) -> Result<Self> {
        let (evals, evecs) = eigh_real(w)?;
        Ok(FreeFlow { evals, evecs })
    }

    pub fn dim(&self) -> usize {
        self.evals.len()
    }

    /// `e^{-i t W} z` applied to the complex view of a phase point.
    pub fn apply(&self, t: f64, x: &PhasePoint) -> PhasePoint {
        let z = self.rotate_vector(-t, &x.z());
        PhasePoint::from_z(&z)
    }

    /// Multiply a complex vector by `e^{i s W}`.
    pub fn rotate_vector(&self, s: f64, z: &CVec) -> CVec {
        // V diag(e^{i s λ}) Vᵀ z
        let vt_z: CVec = {
            let mut out = Array1::zeros(self.dim());
            for (i, mut_row) in self.evecs.columns().into_iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &v) in mut_row.iter().enumerate() {
                    acc += z[k] * v;
                }
                out[i] = acc;
            }
            out
        };
        let phased: CVec = Array1::from_iter(
            vt_z.iter()
                .zip(&self.evals)
                .map(|(&c, &l)| c * C64::from_polar(1.0, s * l)),
        );
        let mut out: CVec = Array1::zeros(self.dim());
        for k in 0..self.dim() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..self.dim() {
                acc += C64::new(self.evecs[[k, i]], 0.0) * phased[i];
            }
            out[k] = acc;
        }
        out
    }

    /// Coefficient rotation for symbols: `F ∘ χ_t` has coefficients
    /// `e^{+i t W} w` when `F` has complex coefficients `w`.
    pub fn rotate_coefficients(&self, t: f64, w: &CVec) -> CVec {
        self.rotate_vector(t, w)
    }
}

/// Coherent-state overlap `⟨Ψ_X, Ψ_Y⟩ = exp(-|X-Y|²/4h + iσ(X,Y)/2h)`.
pub fn coherent_overlap(x: &PhasePoint, y: &PhasePoint, h: f64) -> C64 {
    assert!(h > 0.0, "coherent_overlap: h must be positive");
    let modulus_exp = -x.dist_sq(y) / (4.0 * h);
    let phase = symplectic_form(x, y) / (2.0 * h);
    C64::from_polar(modulus_exp.exp(), phase)
}

/// How to evaluate the heat operator `H_{h/2}`.
#[derive(Debug, Clone)]
pub enum HeatMethod {
    /// Tensor Gauss-Hermite expectation over all `2J` coordinates; capped at
    /// `2J ≤ 8`.
    TensorGaussHermite { nodes_per_axis: usize },
    /// `F(X) + (h/4) ΔF(X)`, exact to `O(h²)`; needs a second-order jet.
    TaylorLaplacian,
}

/// Heat-operator specification: the Gaussian variance is `h/2` per
/// coordinate, fixed by the Wick/Weyl correspondence.
#[derive(Debug, Clone)]
pub struct HeatSpec {
    pub method: HeatMethod,
}

impl Default for HeatSpec {
    fn default() -> Self {
        HeatSpec {
            method: HeatMethod::TensorGaussHermite { nodes_per_axis: 20 },
        }
    }
}

/// Input to [`heat_apply`]: either a symbol evaluator or a jet.
pub enum HeatInput<'a> {
    Evaluator(&'a dyn Fn(&PhasePoint) -> CMat),
    Jet(&'a MatrixJet),
}

/// Apply the heat operator `H_{h/2}` to a matrix symbol at `X`:
/// `(H_{h/2}F)(X) = E[F(X + G)]` with `G` centered Gaussian of variance `h/2`
/// per coordinate.
pub fn heat_apply(input: HeatInput<'_>, x: &PhasePoint, spec: &HeatSpec, h: f64) -> Result<CMat> {
    assert!(h > 0.0, "heat_apply: h must be positive");
    match (&spec.method, input) {
        (HeatMethod::TensorGaussHermite { nodes_per_axis }, HeatInput::Evaluator(f)) => {
            let dim = 2 * x.dim();
            if dim > 8 {
                return Err(Error::QuadratureDimension(dim));
            }
            let rule = gauss_hermite(*nodes_per_axis)?;
            let sigma = (h / 2.0).sqrt();
            let scale = std::f64::consts::PI.sqrt().powi(dim as i32);
            let mut acc: Option<CMat> = None;
            let mut idx = vec![0usize; dim];
            loop {
                let mut point = x.clone();
                let mut weight = 1.0;
                for (axis, &i) in idx.iter().enumerate() {
                    // Gaussian expectation: x = σ √2 u with weight w/√π per axis.
                    *point.coord_mut(axis) += sigma * std::f64::consts::SQRT_2 * rule.nodes[i];
                    weight *= rule.weights[i];
                }
                let term = f(&point).mapv(|v| v * C64::new(weight / scale, 0.0));
                acc = Some(match acc {
                    None => term,
                    Some(mut a) => {
                        a += &term;
                        a
                    }
                });
                // Advance the tensor index.
                let mut axis = 0;
                loop {
                    if axis == dim {
                        return Ok(acc.unwrap());
                    }
                    idx[axis] += 1;
                    if idx[axis] < rule.nodes.len() {
                        break;
                    }
                    idx[axis] = 0;
                    axis += 1;
                }
            }
        }
        (HeatMethod::TaylorLaplacian, HeatInput::Jet(jet)) => {
            let lap = jet.laplacian()?;
            let mut out = jet.value.clone();
            out.scaled_add(C64::new(h / 4.0, 0.0), &lap);
            Ok(out)
        }
        (HeatMethod::TaylorLaplacian, HeatInput::Evaluator(_)) => Err(Error::JetOrder(
            "Taylor-Laplacian heat method needs a jet of order ≥ 2".into(),
        )),
        (HeatMethod::TensorGaussHermite { .. }, HeatInput::Jet(_)) => Err(Error::JetOrder(
            "tensor quadrature needs a symbol evaluator; jets carry no off-grid values".into(),
        )),
    }
}
