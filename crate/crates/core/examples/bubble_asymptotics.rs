//! Energy of concentrating bubbles on the round 5-sphere against the sphere
//! threshold, plus the log-log slopes of the power integrals.

use qflow::bubble::{power_integral_slopes, sphere_quotient_asymptotic, write_asymptotics_csv};
use qflow::DiscreteManifold;

fn main() -> qflow::Result<()> {
    let man = DiscreteManifold::sphere_axisym(5, 256)?;
    let eps = [0.2, 0.1, 0.05];
    let rows = sphere_quotient_asymptotic(&man, 0.0, &eps, 0.4)?;
    write_asymptotics_csv(std::io::stdout().lock(), &rows).expect("stdout");

    let slopes = power_integral_slopes(&man, 0.0, &eps, 0.4)?;
    for j in 0..3 {
        let expected = slopes.expected[j].map_or("none".to_string(), |e| format!("{e}"));
        println!(
            "exponent {:.4}: slope {:.4} (expected {expected})",
            slopes.exponents[j], slopes.measured[j]
        );
    }
    Ok(())
}
