//! Constrained flow with f ≡ 1 on S⁴×S¹ (circle length π) from a perturbed
//! constant, converging to a constant Q-curvature metric.

use qflow::flow::{energy_drift, run, FlowParams};
use qflow::{CirclePreset, DiscreteManifold, ScalarField};

fn main() -> qflow::Result<()> {
    let man =
        DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, std::f64::consts::PI, 32)?;
    let s = man.node_coordinates();
    let u0 = ScalarField::from_fn(&s, |s| 1.0 + 0.03 * (2.0 * s).cos());
    let f = ScalarField::constant(32, 1.0);
    let (records, report) = run(&man, &f, &u0, &FlowParams::default())?;
    let first = records.first().expect("initial record");
    let last = records.last().expect("final record");
    println!(
        "converged {} at t = {:.2} after {} steps",
        report.converged, report.t_final, report.steps
    );
    println!("E_f: {:.12} -> {:.12}", first.e_f, last.e_f);
    println!("alpha: {:.12} -> {:.12}", first.alpha, last.alpha);
    println!(
        "F2 = {:.3e}, residual = {:.3e}",
        report.f2_final, report.residual_inf_final
    );
    let u = &report.u_limit;
    println!(
        "limit oscillation (max-min)/max = {:.3e}",
        (u.max() - u.min()) / u.max()
    );
    let c = man.coeffs();
    let q = man
        .apply_p(u)?
        .zip_map(u, |p, v| p / (c.half_nm4() * v.powf(c.q_exp)));
    println!(
        "Q in [{:.10}, {:.10}], alpha {:.10}",
        q.min(),
        q.max(),
        last.alpha
    );
    println!(
        "energy drift {:.3e}, l2 mass {:.6}",
        energy_drift(&records),
        report.l2_mass
    );
    Ok(())
}
