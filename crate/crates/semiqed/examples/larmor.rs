//! Zero-coupling control case: the order-zero symbol is exactly the Larmor
//! precession and the exact reduced propagator is trivial on photons.

use ndarray::array;
use semiqed::fock::{reduced_propagator, FockBasis, FockOperator};
use semiqed::hierarchy::{solve_g0, SolveOptions};
use semiqed::modes::{build_mode_model, ModelConfig};
use semiqed::numerics::linalg::max_norm;
use semiqed::phasespace::PhasePoint;
use semiqed::C64;

fn main() {
    let beta3 = 0.9;
    let model = build_mode_model(&ModelConfig::Synthetic {
        frequencies: Some(vec![1.0]),
        w: None,
        coupling: vec![vec![vec![[0.0, 0.0]], vec![[0.0, 0.0]], vec![[0.0, 0.0]]]],
        beta: [0.0, 0.0, beta3],
        positions: None,
    })
    .unwrap();
    let x = PhasePoint::new(array![0.2], array![-0.1]);
    let t = 2.0;
    let result = solve_g0(&model, &x, t, &SolveOptions::default()).unwrap();

    println!("g_0(t) against diag(e^(-i β₃ t), e^(i β₃ t)):");
    for snap in result.snapshots.iter().step_by(50) {
        let oracle = array![
            [C64::from_polar(1.0, -beta3 * snap.t), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::from_polar(1.0, beta3 * snap.t)]
        ];
        println!(
            "  t = {:4.2}: deviation {:.2e}",
            snap.t,
            max_norm(&(&snap.g0.value - &oracle))
        );
    }
    println!("unitarity drift over the trajectory: {:.2e}", result.unitarity_drift);

    let basis = FockBasis::new(1, 6, 1);
    let h = 0.2;
    let u = reduced_propagator(&model, h, t, &basis).unwrap();
    let want = FockOperator::from_spin(&result.last().g0.value, &basis);
    println!(
        "exact oracle: ‖U_red(t) - I ⊗ g₀(t)‖_max = {:.2e}",
        max_norm(&u.sub(&want).mat)
    );
}
