//! The constrained flow against its time-rescaled unconstrained form.

use qflow::flow::modified_flow_crosscheck;
use qflow::{CirclePreset, DiscreteManifold, ScalarField};

fn main() -> qflow::Result<()> {
    let man =
        DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, std::f64::consts::PI, 32)?;
    let s = man.node_coordinates();
    let u0 = ScalarField::from_fn(&s, |s| 1.0 + 0.03 * (2.0 * s).cos());
    let f = ScalarField::from_fn(&s, |s| 1.0 + 0.3 * (2.0 * s).cos());
    let r = modified_flow_crosscheck(&man, &f, &u0, 1.0, 1e-4)?;
    println!("steps {}, s(1) = {:.6}", r.steps, r.s_final);
    println!(
        "alpha(u0) = {:.6}, start scale c = {:.6}",
        r.alpha0, r.scale
    );
    println!("sup-relative deviation {:.3e}", r.max_deviation);
    println!("alpha relation error {:.3e}", r.alpha_relation);
    Ok(())
}
