//! A six-node background given as a matrix file: load, check and flow.

use qflow::flow::{run, FlowParams};
use qflow::manifold::MatrixData;
use qflow::{DiscreteManifold, ScalarField};

fn main() -> qflow::Result<()> {
    // W P = P W symmetric with constant row sums 1/2 · Q0 for n = 5, Q0 = 2
    let weights = vec![1.0; 6];
    let mut p = vec![0.0; 36];
    for i in 0..6 {
        let j = (i + 1) % 6;
        p[i * 6 + i] += 3.0;
        p[j * 6 + j] += 3.0;
        p[i * 6 + j] -= 3.0;
        p[j * 6 + i] -= 3.0;
        p[i * 6 + i] += 1.0 / 6.0;
    }
    let data = MatrixData {
        n: 5,
        weights,
        p,
        r0: Some(20.0),
        ric_dir: Some(4.0),
        q0: Some(1.0 / 3.0),
    };
    let path = std::env::temp_dir().join("qflow_ring6.txt");
    std::fs::write(&path, data.to_text()).map_err(|e| qflow::Error::io(&path, e))?;
    let man = DiscreteManifold::load_matrix(&path)?;
    println!(
        "loaded {} nodes, constant identity {}",
        man.node_count(),
        man.satisfies_constant_identity()
    );

    let u0 = ScalarField::new(vec![1.0, 1.02, 0.99, 1.01, 0.98, 1.0])?;
    let f = ScalarField::constant(6, 1.0);
    let (_, rep) = run(&man, &f, &u0, &FlowParams::default())?;
    println!(
        "converged {} at t = {:.2}, residual {:.2e}",
        rep.converged, rep.t_final, rep.residual_inf_final
    );
    println!("limit {:?}", rep.u_limit.values());
    Ok(())
}
