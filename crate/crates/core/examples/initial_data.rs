//! Corrected-bubble initial data on S⁴×S¹ with a certified energy margin
//! below the sphere threshold, and the same construction on S⁵ where no
//! margin exists.

use std::f64::consts::PI;

use qflow::bubble::{
    certify, initial_data_candidate, write_certificates_csv, BubbleParams, CandidateOptions,
};
use qflow::{CirclePreset, DiscreteManifold, ScalarField};

fn main() -> qflow::Result<()> {
    let length = 2.0 * PI;
    let man = DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, length, 256)?;
    let f = ScalarField::constant(man.node_count(), 1.0);
    let delta = length / 8.0;
    let params = BubbleParams::new(0.0, delta / 8.0, delta)?;
    let (u0, cert) = initial_data_candidate(&man, &f, &params, &CandidateOptions::default())?;
    println!("S4xS1: u0 in [{:.4e}, {:.4e}]", u0.min(), u0.max());
    write_certificates_csv(std::io::stdout().lock(), &[cert]).expect("stdout");

    let sphere = DiscreteManifold::sphere_axisym(5, 256)?;
    let one = ScalarField::constant(256, 1.0);
    let mut certs = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        certs.push(certify(
            &sphere,
            &one,
            &BubbleParams::new(0.0, eps, 0.4)?,
            &CandidateOptions::default(),
        )?);
    }
    println!("S5:");
    write_certificates_csv(std::io::stdout().lock(), &certs).expect("stdout");
    for c in &certs {
        println!(
            "eps {}: predicted mass correction {:?}",
            c.eps, c.mass_correction
        );
    }
    match initial_data_candidate(
        &sphere,
        &one,
        &BubbleParams::new(0.0, 0.05, 0.4)?,
        &CandidateOptions::default(),
    ) {
        Err(e) => println!("S5 rejected: {e}"),
        Ok(_) => println!("S5 unexpectedly certified"),
    }
    Ok(())
}
