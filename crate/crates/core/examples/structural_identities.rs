//! Rate identities along a computed trajectory and their second-order
//! convergence as the step is halved.

use std::f64::consts::PI;

use qflow::flow::{check_structural_identities, run, FlowParams};
use qflow::{CirclePreset, DiscreteManifold, ScalarField};

fn main() -> qflow::Result<()> {
    let man = DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, PI, 32)?;
    let u0 = ScalarField::from_fn(&man.node_coordinates(), |s| 1.0 + 0.03 * (2.0 * s).cos());
    let f = ScalarField::constant(32, 1.0);
    for dt in [2e-3, 1e-3, 5e-4] {
        let params = FlowParams {
            dt,
            t_max: 1.0,
            tol_f2: f64::MIN_POSITIVE,
            tol_residual: f64::MIN_POSITIVE,
            ..FlowParams::default()
        };
        let (records, _) = run(&man, &f, &u0, &params)?;
        let r = check_structural_identities(&man, &records)?;
        println!(
            "dt {dt:.0e}: alpha rate {:.3e}, dissipation integral {:.3e}, energy rate {:.3e}",
            r.alpha_rate, r.dissipation_integral, r.energy_rate
        );
    }
    Ok(())
}
