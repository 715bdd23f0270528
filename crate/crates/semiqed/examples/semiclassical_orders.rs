//! Semiclassical convergence of the reduced-propagator symbol: the Wick
//! symbol of the exact propagator against the transport partial sums, with
//! the order-h heat correction h/4 Δg₀.

use ndarray::array;
use semiqed::fock::{wick_symbol, FockBasis, ReducedPropagator};
use semiqed::hierarchy::{solve_hierarchy, SolveOptions};
use semiqed::modes::{build_mode_model, ModelConfig};
use semiqed::numerics::fit::loglog_slope;
use semiqed::numerics::linalg::max_norm;
use semiqed::phasespace::PhasePoint;
use semiqed::C64;

fn main() {
    let model = build_mode_model(&ModelConfig::Synthetic {
        frequencies: Some(vec![1.0]),
        w: None,
        coupling: vec![vec![vec![[0.3, 0.0]], vec![[0.0, 0.21]], vec![[0.0, 0.0]]]],
        beta: [0.0, 0.0, 0.8],
        positions: None,
    })
    .unwrap();
    let t = 1.0;
    let points = [
        PhasePoint::new(array![0.20], array![0.10]),
        PhasePoint::new(array![-0.15], array![0.20]),
        PhasePoint::new(array![0.00], array![-0.25]),
        PhasePoint::new(array![0.25], array![0.00]),
        PhasePoint::new(array![-0.10], array![-0.10]),
    ];
    let basis = FockBasis::new(1, 14, 1);
    let opts = SolveOptions {
        tolerance: 1e-11,
        output_steps: 8,
    };
    let expansions: Vec<_> = points
        .iter()
        .map(|x| {
            let r = solve_hierarchy(&model, x, t, 1, &opts).unwrap();
            let last = r.last();
            (
                last.g0.value.clone(),
                last.g1.as_ref().unwrap().value.clone(),
                last.g0.laplacian().unwrap(),
            )
        })
        .collect();

    let hs = [0.4, 0.2, 0.1, 0.05];
    let mut err0 = Vec::new();
    let mut err1 = Vec::new();
    println!("      h     ‖wick - g₀‖   ‖wick - g₀ - h(g₁ + Δg₀/4)‖");
    for &h in &hs {
        let red = ReducedPropagator::build(&model, h, &basis).unwrap();
        let u = red.at(t);
        let mut e0: f64 = 0.0;
        let mut e1: f64 = 0.0;
        for (x, (g0, g1, lap)) in points.iter().zip(&expansions) {
            let wick = wick_symbol(&u, x, h).unwrap();
            e0 = e0.max(max_norm(&(&wick - g0)));
            let mut order1 = g0.clone();
            order1.scaled_add(C64::new(h, 0.0), g1);
            order1.scaled_add(C64::new(h / 4.0, 0.0), lap);
            e1 = e1.max(max_norm(&(&wick - &order1)));
        }
        println!("  {h:5.2}     {e0:.4e}        {e1:.4e}");
        err0.push(e0);
        err1.push(e1);
    }
    let (s0, _, r0) = loglog_slope(&hs, &err0);
    let (s1, _, r1) = loglog_slope(&hs, &err1);
    println!("\norder-0 slope: {s0:.3} (r² = {r0:.5}), expected within [0.8, 1.2]");
    println!("order-1 slope: {s1:.3} (r² = {r1:.5}), expected within [1.7, 2.3]");
}
