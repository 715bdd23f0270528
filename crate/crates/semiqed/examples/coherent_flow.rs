//! The classical layer: free flow, coherent overlaps and the heat operator
//! that turns Weyl symbols into Wick symbols.

use ndarray::array;
use semiqed::phasespace::{
    coherent_overlap, heat_apply, symplectic_form, FreeFlow, HeatInput, HeatSpec, PhasePoint,
};
use semiqed::C64;

fn main() {
    let w = array![[1.0, 0.15], [0.15, 1.4]];
    let flow = FreeFlow::new(&w).unwrap();
    let x = PhasePoint::new(array![0.5, -0.2], array![0.1, 0.3]);
    let y = PhasePoint::new(array![-0.1, 0.4], array![0.2, 0.0]);

    println!("free flow χ_t generated by W = {w:?}");
    for &t in &[0.5, 1.0, 2.0] {
        let xt = flow.apply(t, &x);
        println!(
            "  t = {t}: |χ_t X|² - |X|² = {:+.2e},  σ(χ_t X, χ_t Y) - σ(X, Y) = {:+.2e}",
            xt.norm_sq() - x.norm_sq(),
            symplectic_form(&flow.apply(t, &x), &flow.apply(t, &y)) - symplectic_form(&x, &y)
        );
    }

    let h = 0.2;
    let o = coherent_overlap(&x, &y, h);
    println!("\ncoherent overlap at h = {h}:");
    println!("  ⟨Ψ_X, Ψ_Y⟩ = {o}");
    println!(
        "  |⟨Ψ_X, Ψ_Y⟩| = {:.6e} = exp(-|X-Y|²/4h) = {:.6e}",
        o.norm(),
        (-x.dist_sq(&y) / (4.0 * h)).exp()
    );

    // Heat operator H_{h/2}: Gauss-Hermite expectation vs the Taylor form.
    let f = |pt: &PhasePoint| {
        array![[C64::new((pt.q[0] + 2.0 * pt.p[1]).cos(), 0.0)]]
    };
    let spec = HeatSpec::default();
    println!("\nheat operator on cos(q₁ + 2p₂):");
    for &h in &[0.4, 0.1, 0.025] {
        let smoothed = heat_apply(HeatInput::Evaluator(&f), &x, &spec, h).unwrap();
        let exact = (-5.0 * h / 4.0f64).exp() * (x.q[0] + 2.0 * x.p[1]).cos();
        println!(
            "  h = {h:5.3}: quadrature {:+.8e}, closed form {:+.8e}",
            smoothed[[0, 0]].re,
            exact
        );
    }
}
