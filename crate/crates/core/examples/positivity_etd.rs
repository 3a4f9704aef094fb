//! Exponential stepping keeps P u non-negative: min P u decays at most like
//! e^{-t} along a run started close to the cone boundary.

use qflow::flow::{monitor, step_etd, FlowState};
use qflow::{CirclePreset, DiscreteManifold};

fn main() -> qflow::Result<()> {
    let man =
        DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, std::f64::consts::PI, 32)?;
    let f = qflow::ScalarField::constant(32, 1.0);
    // u0 = P⁻¹ of a bump whose minimum is small
    let s = man.node_coordinates();
    let w0 = qflow::ScalarField::from_fn(&s, |s| (1.0 + (2.0 * s).cos()).powi(2) + 0.01);
    let mut state = FlowState::new(&man, man.solve_p(&w0)?)?;
    let dt = 0.01;
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..100 {
        let prev = state.w.min();
        state = step_etd(&man, &f, &state, dt)?;
        worst = worst.min(state.w.min() - (-dt).exp() * prev);
    }
    let rec = monitor(&man, &f, &state)?;
    println!(
        "after 100 steps: min u = {:.6e}, min P u = {:.6e}",
        rec.min_u, rec.min_pu
    );
    println!("smallest min_Pu - e^(-dt) prev: {worst:.3e}");
    Ok(())
}
