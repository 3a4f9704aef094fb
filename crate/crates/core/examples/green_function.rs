//! Green's function of the Paneitz operator at the north pole of S⁵ and its
//! singular-plus-constant expansion.

use qflow::bubble::{green_mass, GreenOptions};
use qflow::DiscreteManifold;

fn main() -> qflow::Result<()> {
    let man = DiscreteManifold::sphere_axisym(5, 256)?;
    let g = green_mass(&man, 0.0, &GreenOptions::default())?;
    let c_n = man.coeffs().c_n;
    println!("c_5            = {c_n:.8e}");
    println!(
        "singular coeff = {:.8e} (ratio {:.6})",
        g.singular_coeff,
        g.singular_coeff / c_n
    );
    println!("mass beta      = {:.6e}", g.mass_beta);
    println!(
        "fit residual   = {:.3e} (threshold {:.1e})",
        g.fit_residual, g.threshold
    );
    println!("antipode beta  = {:.6}", g.antipode_beta);
    println!("min G          = {:.6e}", g.min_green);
    for (lo, hi) in [(0.225, 0.675), (0.275, 0.825)] {
        let opts = GreenOptions {
            r_min: lo,
            r_max: hi,
            ..GreenOptions::default()
        };
        let h = green_mass(&man, 0.0, &opts)?;
        println!(
            "window [{lo}, {hi}]: coeff {:.8e}, beta {:.6e}",
            h.singular_coeff, h.mass_beta
        );
    }
    Ok(())
}
