//! The semiclassical transport hierarchy for the reduced-propagator symbol.
//!
//! At a frozen phase point `X` the symbol coefficients solve
//!
//! ```text
//! g_0' = -i H(t, X) g_0,                        g_0(0) = I
//! g_j' = -i H(t, X) g_j - ½ {H(t,·), g_{j-1}},  g_j(0) = 0
//! ```
//!
//! with `H(t, X)` the interaction symbol (a matrix-valued affine function of
//! `X`) and `{·,·}` the matricial Poisson bracket with the `H` factors on the
//! left. Phase-space derivatives of the `g_j` are transported alongside as
//! variational equations on a shared adaptive grid; the nested-integral
//! representations serve as cross-check oracles in the tests.

use ndarray::{s, Array1, ArrayView2, ArrayViewMut2};

use crate::error::{Error, Result};
use crate::modes::ModeModel;
use crate::numerics::linalg::{dagger, max_norm};
use crate::numerics::rk::{integrate_adaptive, SolverStats};
use crate::phasespace::{FreeFlow, MatrixJet, MatrixLinearSymbol, PhasePoint};
use crate::spin::{constant_field_term, sigma_at};
use crate::{C64, CMat, CVec};

/// Time-dependent interaction symbol of a model: the coefficients of the
/// affine symbol rotate as `c(t) = e^{i t W} c`.
pub struct InteractionSymbol {
    flow: FreeFlow,
    coupling: ndarray::Array3<C64>,
    constant: CMat,
    spin_ops: Vec<Vec<CMat>>,
    n_modes: usize,
}

impl InteractionSymbol {
    pub fn new(model: &ModeModel) -> Result<Self> {
        let n = model.n_spins();
        let spin_ops = (0..n)
            .map(|lam| (0..3).map(|j| sigma_at(n, lam, j)).collect())
            .collect();
        Ok(InteractionSymbol {
            flow: FreeFlow::new(&model.w)?,
            coupling: model.coupling.clone(),
            constant: constant_field_term(n, model.beta),
            spin_ops,
            n_modes: model.n_modes(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn spin_dim(&self) -> usize {
        self.constant.nrows()
    }

    /// The affine symbol at time `t`: constant matrix plus coefficient
    /// matrices `A_k(t)` (for `q_k`) and `B_k(t)` (for `p_k`).
    pub fn coefficients_at(&self, t: f64) -> MatrixLinearSymbol {
        let s_dim = self.spin_dim();
        let mut q_coeffs = vec![CMat::zeros((s_dim, s_dim)); self.n_modes];
        let mut p_coeffs = vec![CMat::zeros((s_dim, s_dim)); self.n_modes];
        let (n, _, _) = self.coupling.dim();
        for lam in 0..n {
            for j in 0..3 {
                let c0: CVec = self.coupling.slice(s![lam, j, ..]).to_owned();
                if c0.iter().all(|v| v.norm() == 0.0) {
                    continue;
                }
                let ct = self.flow.rotate_coefficients(t, &c0);
                for k in 0..self.n_modes {
                    if ct[k].re != 0.0 {
                        q_coeffs[k].scaled_add(C64::new(ct[k].re, 0.0), &self.spin_ops[lam][j]);
                    }
                    if ct[k].im != 0.0 {
                        p_coeffs[k].scaled_add(C64::new(ct[k].im, 0.0), &self.spin_ops[lam][j]);
                    }
                }
            }
        }
        MatrixLinearSymbol {
            q_coeffs,
            p_coeffs,
            constant: self.constant.clone(),
        }
    }

    /// The Hermitian symbol value `Σ_λ Σ_j (β_j + B_j^free(a_λ, t, X)) σ_j^{[λ]}`.
    pub fn eval(&self, t: f64, x: &PhasePoint) -> CMat {
        assert_eq!(x.dim(), self.n_modes, "phase point does not fit the model");
        self.coefficients_at(t).eval(x)
    }
}

/// Convenience wrapper for a single symbol evaluation.
pub fn interaction_symbol(model: &ModeModel, t: f64, x: &PhasePoint) -> Result<CMat> {
    Ok(InteractionSymbol::new(model)?.eval(t, x))
}

/// Solver options for the hierarchy.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Absolute and relative tolerance of the adaptive integrator.
    pub tolerance: f64,
    /// Number of uniform output intervals on `[0, t_final]` (even).
    pub output_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-10,
            output_steps: 200,
        }
    }
}

/// Jets of the symbol coefficients at one stored time.
#[derive(Debug, Clone)]
pub struct HierarchySnapshot {
    pub t: f64,
    /// `g_0` with first derivatives, and second derivatives from order 1 on.
    pub g0: MatrixJet,
    /// `g_1` with first derivatives at order 2.
    pub g1: Option<MatrixJet>,
    pub g2: Option<MatrixJet>,
}

impl HierarchySnapshot {
    pub fn g_value(&self, order: usize) -> Option<&CMat> {
        match order {
            0 => Some(&self.g0.value),
            1 => self.g1.as_ref().map(|j| &j.value),
            2 => self.g2.as_ref().map(|j| &j.value),
            _ => None,
        }
    }
}

/// Result of a hierarchy solve at one phase point.
pub struct HierarchyResult {
    pub order: usize,
    pub base: PhasePoint,
    pub times: Vec<f64>,
    pub snapshots: Vec<HierarchySnapshot>,
    pub stats: SolverStats,
    /// Max over stored times of `‖g_0† g_0 - I‖`.
    pub unitarity_drift: f64,
    pub tolerance: f64,
}

impl HierarchyResult {
    pub fn last(&self) -> &HierarchySnapshot {
        self.snapshots.last().expect("hierarchy stores t = 0")
    }

    /// Partial sum `S_m(t, X, h) = Σ_{j≤m} g_j(t, X) h^j` at every stored
    /// time.
    pub fn partial_sum(&self, h: f64) -> Vec<(f64, CMat)> {
        self.snapshots
            .iter()
            .map(|snap| {
                let mut acc = snap.g0.value.clone();
                if let Some(g1) = &snap.g1 {
                    acc.scaled_add(C64::new(h, 0.0), &g1.value);
                }
                if let Some(g2) = &snap.g2 {
                    acc.scaled_add(C64::new(h * h, 0.0), &g2.value);
                }
                (snap.t, acc)
            })
            .collect()
    }
}

// Flat layout of the matrix system inside the integrator state.
struct Layout {
    spin_dim: usize,
    two_j: usize,
    order: usize,
}

impl Layout {
    fn tri_count(&self) -> usize {
        self.two_j * (self.two_j + 1) / 2
    }

    fn tri(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        lo * self.two_j - lo * (lo + 1) / 2 + hi
    }

    fn mat_count(&self) -> usize {
        match self.order {
            0 => 1 + self.two_j,
            1 => 1 + self.two_j + self.tri_count() + 1,
            2 => 1 + self.two_j + self.tri_count() + 1 + self.two_j + 1,
            _ => unreachable!(),
        }
    }

    fn slot_g0(&self) -> usize {
        0
    }

    fn slot_d1_g0(&self, a: usize) -> usize {
        1 + a
    }

    fn slot_d2_g0(&self, a: usize, b: usize) -> usize {
        1 + self.two_j + self.tri(a, b)
    }

    fn slot_g1(&self) -> usize {
        1 + self.two_j + self.tri_count()
    }

    fn slot_d1_g1(&self, a: usize) -> usize {
        self.slot_g1() + 1 + a
    }

    fn slot_g2(&self) -> usize {
        self.slot_g1() + 1 + self.two_j
    }

    fn view<'a>(&self, y: &'a CVec, slot: usize) -> ArrayView2<'a, C64> {
        let m = self.spin_dim * self.spin_dim;
        ArrayView2::from_shape(
            (self.spin_dim, self.spin_dim),
            &y.as_slice().unwrap()[slot * m..(slot + 1) * m],
        )
        .unwrap()
    }

    fn view_mut<'a>(&self, y: &'a mut CVec, slot: usize) -> ArrayViewMut2<'a, C64> {
        let m = self.spin_dim * self.spin_dim;
        ArrayViewMut2::from_shape(
            (self.spin_dim, self.spin_dim),
            &mut y.as_slice_mut().unwrap()[slot * m..(slot + 1) * m],
        )
        .unwrap()
    }

    fn extract(&self, y: &CVec, slot: usize) -> CMat {
        self.view(y, slot).to_owned()
    }
}

/// Solve the bare `g_0` equation (with first-derivative jets) at one phase
/// point.
pub fn solve_g0(
    model: &ModeModel,
    x: &PhasePoint,
    t_final: f64,
    options: &SolveOptions,
) -> Result<HierarchyResult> {
    solve_hierarchy(model, x, t_final, 0, options)
}

/// Solve the coupled transport system with derivative jets up to expansion
/// order `m ≤ 2`.
pub fn solve_hierarchy(
    model: &ModeModel,
    x: &PhasePoint,
    t_final: f64,
    order: usize,
    options: &SolveOptions,
) -> Result<HierarchyResult> {
    if order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    if x.dim() != model.n_modes() {
        return Err(Error::Dimension(
            "phase point dimension does not match the model".into(),
        ));
    }
    let symbol = InteractionSymbol::new(model)?;
    let s_dim = symbol.spin_dim();
    let j = symbol.n_modes();
    let layout = Layout {
        spin_dim: s_dim,
        two_j: 2 * j,
        order,
    };

    let m = s_dim * s_dim;
    let mut y0: CVec = Array1::zeros(layout.mat_count() * m);
    {
        let mut g0 = layout.view_mut(&mut y0, layout.slot_g0());
        for d in 0..s_dim {
            g0[[d, d]] = C64::new(1.0, 0.0);
        }
    }

    let base = x.clone();
    let rhs = |t: f64, y: &CVec| -> CVec {
        let coeffs = symbol.coefficients_at(t);
        let h_mat = coeffs.eval(&base);
        let coeff_at = |a: usize| -> &CMat {
            if a < j {
                &coeffs.q_coeffs[a]
            } else {
                &coeffs.p_coeffs[a - j]
            }
        };
        let mut dy: CVec = Array1::zeros(y.len());
        let minus_i = -C64::i();

        let g0 = layout.view(y, layout.slot_g0());
        write(
            &layout,
            &mut dy,
            layout.slot_g0(),
            &h_mat.dot(&g0).mapv(|v| minus_i * v),
        );

        for a in 0..layout.two_j {
            let d1 = layout.view(y, layout.slot_d1_g0(a));
            let mut out = coeff_at(a).dot(&g0);
            out += &h_mat.dot(&d1);
            write(
                &layout,
                &mut dy,
                layout.slot_d1_g0(a),
                &out.mapv(|v| minus_i * v),
            );
        }

        if order >= 1 {
            for a in 0..layout.two_j {
                for b in a..layout.two_j {
                    let d2 = layout.view(y, layout.slot_d2_g0(a, b));
                    let d1a = layout.view(y, layout.slot_d1_g0(a));
                    let d1b = layout.view(y, layout.slot_d1_g0(b));
                    let mut out = coeff_at(a).dot(&d1b);
                    out += &coeff_at(b).dot(&d1a);
                    out += &h_mat.dot(&d2);
                    write(
                        &layout,
                        &mut dy,
                        layout.slot_d2_g0(a, b),
                        &out.mapv(|v| minus_i * v),
                    );
                }
            }
            let g1 = layout.view(y, layout.slot_g1());
            let mut out = h_mat.dot(&g1).mapv(|v| minus_i * v);
            out.scaled_add(
                C64::new(-0.5, 0.0),
                &bracket_with_d1(&coeffs, &layout, y, |a| layout.slot_d1_g0(a), j),
            );
            write(&layout, &mut dy, layout.slot_g1(), &out);
        }

        if order >= 2 {
            let g1 = layout.view(y, layout.slot_g1());
            for a in 0..layout.two_j {
                let d1g1 = layout.view(y, layout.slot_d1_g1(a));
                let mut lin = coeff_at(a).dot(&g1);
                lin += &h_mat.dot(&d1g1);
                let mut out = lin.mapv(|v| minus_i * v);
                // ∂_a of the bracket source: the symbol coefficients are
                // constant in phase space, so only second derivatives of g_0
                // enter.
                let mut br = CMat::zeros((s_dim, s_dim));
                for k in 0..j {
                    br += &coeffs.p_coeffs[k].dot(&layout.view(y, layout.slot_d2_g0(k, a)));
                    br -= &coeffs.q_coeffs[k].dot(&layout.view(y, layout.slot_d2_g0(j + k, a)));
                }
                out.scaled_add(C64::new(-0.5, 0.0), &br);
                write(&layout, &mut dy, layout.slot_d1_g1(a), &out);
            }
            let g2 = layout.view(y, layout.slot_g2());
            let mut out = h_mat.dot(&g2).mapv(|v| minus_i * v);
            out.scaled_add(
                C64::new(-0.5, 0.0),
                &bracket_with_d1(&coeffs, &layout, y, |a| layout.slot_d1_g1(a), j),
            );
            write(&layout, &mut dy, layout.slot_g2(), &out);
        }

        dy
    };

    let steps = options.output_steps.max(2);
    let times: Vec<f64> = (0..=steps)
        .map(|i| t_final * i as f64 / steps as f64)
        .collect();
    let (outputs, stats) =
        integrate_adaptive(rhs, 0.0, &y0, &times, options.tolerance, options.tolerance)?;

    let mut snapshots = Vec::with_capacity(outputs.len());
    let mut drift = 0.0f64;
    for (&t, y) in times.iter().zip(&outputs) {
        let g0_value = layout.extract(y, layout.slot_g0());
        let defect = {
            let gram = dagger(&g0_value).dot(&g0_value);
            let mut worst = 0.0f64;
            for a in 0..s_dim {
                for b in 0..s_dim {
                    let want = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((gram[[a, b]] - C64::new(want, 0.0)).norm());
                }
            }
            worst
        };
        drift = drift.max(defect);

        let d1: Vec<CMat> = (0..layout.two_j)
            .map(|a| layout.extract(y, layout.slot_d1_g0(a)))
            .collect();
        let d2 = (order >= 1).then(|| {
            (0..layout.two_j)
                .map(|a| {
                    (0..layout.two_j)
                        .map(|b| layout.extract(y, layout.slot_d2_g0(a, b)))
                        .collect()
                })
                .collect::<Vec<Vec<CMat>>>()
        });
        let g0 = MatrixJet {
            base: base.clone(),
            value: g0_value,
            d1,
            d2,
        };
        let g1 = (order >= 1).then(|| MatrixJet {
            base: base.clone(),
            value: layout.extract(y, layout.slot_g1()),
            d1: if order >= 2 {
                (0..layout.two_j)
                    .map(|a| layout.extract(y, layout.slot_d1_g1(a)))
                    .collect()
            } else {
                Vec::new()
            },
            d2: None,
        });
        let g2 = (order >= 2).then(|| MatrixJet {
            base: base.clone(),
            value: layout.extract(y, layout.slot_g2()),
            d1: Vec::new(),
            d2: None,
        });
        snapshots.push(HierarchySnapshot { t, g0, g1, g2 });
    }

    Ok(HierarchyResult {
        order,
        base,
        times,
        snapshots,
        stats,
        unitarity_drift: drift,
        tolerance: options.tolerance,
    })
}

fn write(layout: &Layout, dy: &mut CVec, slot: usize, value: &CMat) {
    let mut view = layout.view_mut(dy, slot);
    view.assign(value);
}

/// `Σ_k B_k D[q_k] - A_k D[p_k]` where `D` selects first-derivative slots.
fn bracket_with_d1(
    coeffs: &MatrixLinearSymbol,
    layout: &Layout,
    y: &CVec,
    slot: impl Fn(usize) -> usize,
    j: usize,
) -> CMat {
    let s_dim = layout.spin_dim;
    let mut out = CMat::zeros((s_dim, s_dim));
    for k in 0..j {
        out += &coeffs.p_coeffs[k].dot(&layout.view(y, slot(k)));
        out -= &coeffs.q_coeffs[k].dot(&layout.view(y, slot(j + k)));
    }
    out
}

/// Residual of the cocycle identity
/// `g_0(t, X) g_0(s, X)† = g_0(t - s, χ_s X)` in the max norm.
pub fn cocycle_residual(
    model: &ModeModel,
    t: f64,
    s: f64,
    x: &PhasePoint,
    options: &SolveOptions,
) -> Result<f64> {
    let flow = FreeFlow::new(&model.w)?;
    let gt = solve_g0(model, x, t, options)?;
    let gs = solve_g0(model, x, s, options)?;
    let lhs = gt.last().g0.value.dot(&dagger(&gs.last().g0.value));
    let moved = flow.apply(s, x);
    let rhs = solve_g0(model, &moved, t - s, options)?;
    Ok(max_norm(&(&lhs - &rhs.last().g0.value)))
}

/// One row of the derivative-bound table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundRow {
    pub t: f64,
    pub g_order: usize,
    pub deriv_order: usize,
    pub coords: Vec<usize>,
    pub norm: f64,
    /// Product `∏ |t| ε` at `K = 1`.
    pub envelope: f64,
    /// Smallest `K` making this row satisfy `norm ≤ K^ord · envelope`.
    pub required_k: f64,
}

/// Derivative bounds against the envelope `∏ (K |t| ε_k(t))^{α+β}`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DerivativeBoundReport {
    pub rows: Vec<BoundRow>,
    /// Smallest `K` making every bound hold.
    pub fitted_k: f64,
}

/// Tabulate stored derivative norms against the coupling envelope and fit
/// the smallest admissible constant `K`.
pub fn derivative_bound_report(
    result: &HierarchyResult,
    model: &ModeModel,
    s_samples: usize,
) -> Result<DerivativeBoundReport> {
    let j = model.n_modes();
    let mut rows = Vec::new();
    let mut fitted: f64 = 0.0;
    for snap in &result.snapshots {
        let t = snap.t;
        if t == 0.0 {
            continue;
        }
        let eps = model.epsilon_profile(t, s_samples)?;
        let env1 = |a: usize| t.abs() * eps[a % j];
        let mut push = |g_order: usize,
                        deriv_order: usize,
                        coords: Vec<usize>,
                        norm: f64,
                        envelope: f64| {
            let required_k = if norm == 0.0 {
                0.0
            } else if envelope == 0.0 {
                f64::INFINITY
            } else {
                (norm / envelope).powf(1.0 / deriv_order as f64)
            };
            fitted = fitted.max(required_k);
            rows.push(BoundRow {
                t,
                g_order,
                deriv_order,
                coords,
                norm,
                envelope,
                required_k,
            });
        };
        for (a, d) in snap.g0.d1.iter().enumerate() {
            push(0, 1, vec![a], max_norm(d), env1(a));
        }
        if let Some(d2) = &snap.g0.d2 {
            for a in 0..2 * j {
                for b in a..2 * j {
                    push(0, 2, vec![a, b], max_norm(&d2[a][b]), env1(a) * env1(b));
                }
            }
        }
        if let Some(g1) = &snap.g1 {
            for (a, d) in g1.d1.iter().enumerate() {
                push(1, 1, vec![a], max_norm(d), env1(a));
            }
        }
    }
    Ok(DerivativeBoundReport {
        rows,
        fitted_k: fitted,
    })
}
