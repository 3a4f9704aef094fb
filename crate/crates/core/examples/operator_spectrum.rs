//! Paneitz multipliers on the round 5-sphere and on S⁴×S¹ compared with
//! their closed forms.

use qflow::manifold::{sphere_multiplier, CircleSymbol};
use qflow::{CirclePreset, DiscreteManifold, ScalarField};

fn main() -> qflow::Result<()> {
    let sphere = DiscreteManifold::sphere_axisym(5, 64)?;
    let mut worst: f64 = 0.0;
    for k in 0..=32 {
        let b = sphere.basis_function(k).expect("spectral");
        let measured = sphere.quadratic_form(&b)? / sphere.inner(&b, &b)?;
        let exact = sphere_multiplier(5, k);
        worst = worst.max((measured - exact).abs() / exact);
        if k < 4 {
            println!("S5 k={k}: {measured:.10} (closed form {exact:.10})");
        }
    }
    println!("S5 worst relative error for k <= 32: {worst:.3e}");
    let p1 = sphere.apply_p(&ScalarField::constant(64, 1.0))?;
    println!("S5 P(1) = {:.15} (105/16 = {})", p1[0], 105.0 / 16.0);

    let length = 2.0 * std::f64::consts::PI;
    let prod = DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, length, 32)?;
    let symbol = CircleSymbol::new(prod.coeffs(), &prod.background(), length);
    for m in 0..3 {
        println!("S4xS1 harmonic {m}: P-hat = {}", symbol.at_harmonic(m));
    }
    println!(
        "inverse positivity defect: {:.3e}",
        prod.inverse_positivity_defect()?
    );
    Ok(())
}
