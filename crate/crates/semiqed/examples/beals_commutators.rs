//! Commutator norms of position/momentum fields with the reduced propagator
//! against the coupling envelope h|t|ε_k(t), on the interior shell.

use semiqed::fock::{beals_commutator_norms, FockBasis};
use semiqed::modes::{build_mode_model, ModelConfig};
use semiqed::numerics::fit::loglog_slope;

fn main() {
    let model = build_mode_model(&ModelConfig::Synthetic {
        frequencies: Some(vec![1.0, 1.6]),
        w: None,
        coupling: vec![vec![
            vec![[0.25, 0.0], [0.1, -0.05]],
            vec![[0.0, 0.2], [0.05, 0.1]],
            vec![[0.1, 0.1], [0.0, 0.0]],
        ]],
        beta: [0.2, 0.0, 0.7],
        positions: None,
    })
    .unwrap();
    let h = 0.2;
    let t = 1.0;
    let basis = FockBasis::new(2, 8, 1);
    let rows = beals_commutator_norms(&model, h, t, &basis, 2, 9).unwrap();
    println!("interior-shell commutator norms at t = {t}, h = {h}:");
    println!("  mode     ‖[Q,U]‖       ‖[P,U]‖       h|t|ε_k     ratios");
    for r in &rows {
        println!(
            "  {:4}   {:.4e}   {:.4e}   {:.4e}   {:.3} / {:.3}",
            r.mode, r.q_norm, r.p_norm, r.bound, r.q_ratio, r.p_ratio
        );
    }

    // Shell error by raising the photon cutoff.
    let big = FockBasis::new(2, 10, 1);
    let rows_big = beals_commutator_norms(&model, h, t, &big, 2, 9).unwrap();
    let shell = rows
        .iter()
        .zip(&rows_big)
        .map(|(a, b)| ((a.q_norm - b.q_norm).abs() / a.bound).max((a.p_norm - b.p_norm).abs() / a.bound))
        .fold(0.0f64, f64::max);
    println!("shell error from cutoff doubling: {shell:.2e}");

    let ts = [0.1, 0.2, 0.4];
    let norms: Vec<f64> = ts
        .iter()
        .map(|&tt| {
            beals_commutator_norms(&model, h, tt, &basis, 2, 9)
                .unwrap()
                .iter()
                .map(|r| r.q_norm.max(r.p_norm))
                .fold(0.0f64, f64::max)
        })
        .collect();
    let (slope, _, _) = loglog_slope(&ts, &norms);
    println!("small-time scaling exponent of the norms: {slope:.3} (linear = 1)");
}
