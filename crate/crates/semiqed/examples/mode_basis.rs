//! Build the photon-mode basis: Laguerre radial functions, tangent fields on
//! the sphere, coupling coefficients and the compressed frequency matrix.

use semiqed::modes::radial::{radial_gram, RadialFunction, RadialGridSpec};
use semiqed::modes::{
    build_mode_model, AngularBasis, CouplingQuadSpec, CutoffSpec, ModeIndex, ModelConfig,
    SphereGridSpec,
};

fn main() {
    // Radial functions: normalization and eigen-relation residuals.
    println!("radial basis u_m(r) = C_m e^(-r²/2) L_m^(1/2)(r²):");
    for m in 0..4 {
        let f = RadialFunction::new(m, RadialGridSpec::default());
        println!(
            "  m = {m}: |norm - 1| = {:.2e}, eigen-residual (4000 pts) = {:.2e}",
            f.norm_residual().unwrap(),
            f.eigen_residual(4000)
        );
    }
    let gram = radial_gram(6, RadialGridSpec::default()).unwrap();
    let mut worst = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[[i, j]] - want).abs());
        }
    }
    println!("  radial Gram defect over m ≤ 5: {worst:.2e}");

    // Angular tangent fields.
    let basis = AngularBasis::build(2, SphereGridSpec::for_degree(2)).unwrap();
    println!(
        "\nangular basis: {} fields through degree 2, raw Gram defect {:.2e}",
        basis.len(),
        basis.raw_gram_defect
    );
    let tangency = basis
        .fields
        .iter()
        .map(|f| f.tangency_defect(&basis.grid))
        .fold(0.0f64, f64::max);
    println!("  worst tangency defect: {tangency:.2e}");

    // A computed model with its coupling-decay table.
    let model = build_mode_model(&ModelConfig::Computed {
        modes: (0..3)
            .flat_map(|m| (3..6).map(move |n| ModeIndex { m, n }))
            .collect(),
        cutoff: CutoffSpec::default(),
        beta: [0.0, 0.0, 0.9],
        positions: vec![[0.0; 3]],
        quad: Some(CouplingQuadSpec::default()),
    })
    .unwrap();
    println!(
        "\ncomputed model: J = {}, coupling quadrature estimate {:.2e}",
        model.n_modes(),
        model.provenance.coupling_error_estimate
    );
    println!("  W diagonal: {:?}", (0..3).map(|k| model.w[[k, k]]).collect::<Vec<_>>());
    println!("\n  decay table (m, n, |c|, m²n²|c|):");
    for row in model.decay_table() {
        if row.abs > 1e-12 {
            println!(
                "    m={} n={}  |c| = {:.4e}  weighted = {:.4e}",
                row.radial_m, row.angular_n, row.abs, row.weighted
            );
        }
    }

    let eps = model.epsilon_profile(1.0, 9).unwrap();
    println!("\n  coupling envelope ε_k(1): {eps:?}");
}
