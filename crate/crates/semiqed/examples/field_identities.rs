//! Field-symbol identities: Maxwell residuals of the free fields, the ρ
//! kernel, and the E-B commutation relation approached by growing
//! truncations.

use semiqed::fields::{
    commutator_check, maxwell_residuals, rho_eval, FieldRep, GaussianTestPair,
};
use semiqed::modes::radial::RadialGridSpec;
use semiqed::modes::{AngularBasis, CouplingQuadSpec, CutoffSpec, ModeIndex, SphereGridSpec};
use semiqed::numerics::fit::loglog_slope;

fn main() {
    let cutoff = CutoffSpec::default();
    let quad = CouplingQuadSpec {
        radial: RadialGridSpec {
            r_max: 16.0,
            node_count: 150,
        },
        n_theta: 20,
        n_phi: 40,
        tolerance: 1e-8,
    };

    println!("ρ(x) kernel:");
    for &x in &[[0.0; 3], [0.0, 0.0, 0.4], [0.3, 0.3, 0.3]] {
        println!("  ρ({x:?}) = {:+.6e}", rho_eval(x, &cutoff, &quad).unwrap());
    }

    let pair = GaussianTestPair {
        u: [0.4, -0.2, 0.7],
        s_u: 0.8,
        v: [-0.3, 0.5, 0.1],
        s_v: 1.1,
    };
    let rep = FieldRep::Continuum {
        pair: &pair,
        cutoff: &cutoff,
        quad: &quad,
    };
    let samples = [([0.3, -0.1, 0.2], 0.5)];
    println!("\nMaxwell residuals under grid halving:");
    let steps = [0.08, 0.04, 0.02];
    let mut worsts = Vec::new();
    for &dd in &steps {
        let res = maxwell_residuals(&rep, &samples, dd, dd).unwrap();
        println!(
            "  Δ = {dd:5.3}: div B {:.2e}, div E {:.2e}, ∂tB + rot E {:.2e}, ∂tE - rot B {:.2e}",
            res.div_b, res.div_e, res.faraday, res.ampere
        );
        worsts.push(res.worst());
    }
    let (order, _, _) = loglog_slope(&steps, &worsts);
    println!("  observed convergence order: {order:.3}");

    println!("\n[E₁(x), B₂(y)] against i h ∂₃ρ(y - x) over growing truncations:");
    let basis = AngularBasis::build(3, SphereGridSpec::for_degree(3)).unwrap();
    let trunc = |m_max: usize, l_max: usize| -> Vec<ModeIndex> {
        (0..=m_max)
            .flat_map(|m| {
                (0..semiqed::modes::angular::field_count(l_max)).map(move |n| ModeIndex { m, n })
            })
            .collect()
    };
    let rows = commutator_check(
        [0.0; 3],
        [0.0, 0.0, 0.4],
        &[trunc(1, 1), trunc(3, 2), trunc(6, 3)],
        &basis,
        &cutoff,
        &quad,
    )
    .unwrap();
    for r in &rows {
        println!(
            "  J = {:3}: bracket {:+.5e}, target {:+.5e}, rel. error {:.4}, same-kind {:.1e}",
            r.n_modes, r.bracket, r.target, r.rel_error, r.same_kind_worst
        );
    }
}
