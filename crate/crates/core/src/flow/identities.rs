//! Identities satisfied along exact trajectories, used to audit computed ones.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::DiscreteManifold;
use crate::paneitz::{forcing, require_positive};

use super::{alpha_of, stage_positive, step_rk4, FlowState, MonitorRecord};

/// Relative errors of the three rate identities over a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuralReport {
    /// Centered `α_t` against `-(2n/(n-4)) (α/E₀) F₂`.
    pub alpha_rate: f64,
    /// Trapezoidal `∫ F₂ dt` against `((n-4)/(2n)) E₀ (log α(0) - log α(T))`.
    pub dissipation_integral: f64,
    /// Centered `dE_f/dt` against `-2 f_mass^{(4-n)/n} F₂`.
    pub energy_rate: f64,
}

fn ratio(err: f64, scale: f64) -> f64 {
    if err == 0.0 {
        0.0
    } else {
        err / scale
    }
}

/// Checks the rate identities on a trajectory recorded at a uniform cadence.
///
/// Pointwise errors are normalized by the largest magnitude the exact
/// formula attains along the trajectory, but never by less than the
/// roundoff floor of the finite differences, so that a stationary
/// trajectory reports zero rather than noise over noise.
pub fn check_structural_identities(
    man: &DiscreteManifold,
    records: &[MonitorRecord],
) -> Result<StructuralReport> {
    if records.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "structural identities need at least 3 records, got {}",
            records.len()
        )));
    }
    let step = records[1].t - records[0].t;
    if !(step > 0.0)
        || records
            .windows(2)
            .any(|p| ((p[1].t - p[0].t) - step).abs() > 1e-9 * step)
    {
        return Err(Error::InvalidParameter(
            "records are not uniformly spaced in time".into(),
        ));
    }
    let c = man.coeffs();
    let n = c.nf();
    let e0 = records[0].e;

    let alpha_formula = |r: &MonitorRecord| -(2.0 * n / (n - 4.0)) * (r.alpha / e0) * r.f2;
    let ef_formula = |r: &MonitorRecord| -2.0 * r.f_mass.powf((4.0 - n) / n) * r.f2;
    let mut a_err: f64 = 0.0;
    let mut a_scale: f64 = 0.0;
    let mut e_err: f64 = 0.0;
    let mut e_scale: f64 = 0.0;
    for k in 0..records.len() {
        a_scale = a_scale.max(alpha_formula(&records[k]).abs());
        e_scale = e_scale.max(ef_formula(&records[k]).abs());
        if k == 0 || k + 1 == records.len() {
            continue;
        }
        let (p, r, q) = (&records[k - 1], &records[k], &records[k + 1]);
        let da = (q.alpha - p.alpha) / (2.0 * step);
        let de = (q.e_f - p.e_f) / (2.0 * step);
        a_err = a_err.max((da - alpha_formula(r)).abs());
        e_err = e_err.max((de - ef_formula(r)).abs());
    }

    let integral: f64 = records
        .windows(2)
        .map(|p| 0.5 * step * (p[0].f2 + p[1].f2))
        .sum();
    let last = records.last().expect("non-empty");
    let closed = (n - 4.0) / (2.0 * n) * e0 * (records[0].alpha.ln() - last.alpha.ln());
    let d_err = (integral - closed).abs();

    let floor = 100.0 * f64::EPSILON;
    let alpha_max = records.iter().map(|r| r.alpha.abs()).fold(0.0, f64::max);
    let ef_max = records.iter().map(|r| r.e_f.abs()).fold(0.0, f64::max);
    Ok(StructuralReport {
        alpha_rate: ratio(a_err, a_scale.max(floor * alpha_max / step)),
        dissipation_integral: ratio(
            d_err,
            integral.abs().max(closed.abs()).max(floor * e0.abs()),
        ),
        energy_rate: ratio(e_err, e_scale.max(floor * ef_max / step)),
    })
}

/// Comparison of the flow with its time-rescaled, unconstrained form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrosscheckReport {
    /// `max_t ‖u(t) - e^{s-t} ũ(s(t))‖_∞ / ‖u(t)‖_∞`
    pub max_deviation: f64,
    /// `max_t |α(t) - μ e^{-(8/(n-4))(s-t)}| / α(t)`
    pub alpha_relation: f64,
    /// `α(0)` of the unscaled data, the value `μ(0)` takes when `ũ(0) = u₀`.
    pub alpha0: f64,
    /// Factor `c` with `ũ(0) = c u₀` and `μ(0) = 1`.
    pub scale: f64,
    /// `s(T)`
    pub s_final: f64,
    pub steps: usize,
}

/// Integrates the constrained flow and, independently, the unconstrained flow
///
/// ```text
/// ∂ũ/∂s = -ũ + (n-4)/2 · P⁻¹(f ũ^{(n+4)/(n-4)})
/// ```
///
/// in the rescaled time `s(t)` with `ds/dt = μ = α(ũ)`, both by RK4 with the
/// same step, and compares the transported solution `e^{s-t} ũ(s)` with
/// `c u(t)` after every step on `[0, t_end]`.
///
/// The scale direction of the `ũ` flow is unstable and `s(t)` reaches
/// infinity in finite `t` unless `ũ(0)` sits at the right scale, so the
/// modified flow starts from `c u₀` with `c = α(u₀)^{(n-4)/8}`, which makes
/// `μ(0) = 1`. The constrained flow is invariant under `u ↦ c u`, so `c u(t)`
/// is the constrained solution from `c u₀` and satisfies
/// `α(c u) = μ e^{-(8/(n-4))(s-t)}`.
pub fn modified_flow_crosscheck(
    man: &DiscreteManifold,
    f: &ScalarField,
    u0: &ScalarField,
    t_end: f64,
    dt: f64,
) -> Result<CrosscheckReport> {
    man.check_field(u0)?;
    man.check_field(f)?;
    require_positive("u0", u0)?;
    require_positive("f", f)?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidParameter(
            "dt must be positive and t_end non-negative".into(),
        ));
    }
    let c = man.coeffs();
    let kappa = 8.0 / (n_minus_4(man));

    // (ũ, s) as one system in t
    let field = |v: &ScalarField| -> Result<(ScalarField, f64)> {
        let mu = alpha_of(man, f, v)?;
        let g = man.solve_p(&forcing(man, v, f, 1.0))?.axpy(-1.0, v);
        Ok((g.scaled(mu), mu))
    };

    let mut orig = FlowState::new(man, u0.clone())?;
    let alpha0 = alpha_of(man, f, u0)?;
    let scale = alpha0.powf(1.0 / kappa);
    let mut tilde = u0.scaled(scale);
    let mut s = 0.0;
    let total = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut max_dev: f64 = 0.0;
    let mut max_alpha: f64 = 0.0;
    let half = c.half_nm4();
    for k in 1..=total {
        let t0 = (k - 1) as f64 * dt;
        orig = step_rk4(man, f, &orig, dt)?;
        let t = k as f64 * dt;

        let (k1, m1) = field(&tilde)?;
        let v2 = tilde.axpy(0.5 * dt, &k1);
        stage_positive(&v2, t0, dt)?;
        let (k2, m2) = field(&v2)?;
        let v3 = tilde.axpy(0.5 * dt, &k2);
        stage_positive(&v3, t0, dt)?;
        let (k3, m3) = field(&v3)?;
        let v4 = tilde.axpy(dt, &k3);
        stage_positive(&v4, t0, dt)?;
        let (k4, m4) = field(&v4)?;
        for i in 0..tilde.len() {
            tilde[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s += dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
        stage_positive(&tilde, t, dt)?;

        let transported = tilde.scaled((s - t).exp());
        let scaled = orig.u.scaled(scale);
        max_dev = max_dev.max(transported.sup_rel_diff(&scaled));
        let alpha = man.quadratic_form(&scaled)?
            / (half * man.inner(f, &scaled.map(|v| v.powf(c.p_crit)))?);
        let mu = alpha_of(man, f, &tilde)?;
        let predicted = mu * (-kappa * (s - t)).exp();
        max_alpha = max_alpha.max((alpha - predicted).abs() / alpha);
    }
    Ok(CrosscheckReport {
        max_deviation: max_dev,
        alpha_relation: max_alpha,
        alpha0,
        scale,
        s_final: s,
        steps: total,
    })
}

fn n_minus_4(man: &DiscreteManifold) -> f64 {
    man.coeffs().nf() - 4.0
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::flow::{run, FlowParams};
    use crate::manifold::CirclePreset;

    fn record(t: f64) -> MonitorRecord {
        MonitorRecord {
            t,
            e: 2.0,
            e_f: 1.5,
            alpha: 3.0,
            f2: 0.0,
            h: 0.0,
            conf_volume: 1.0,
            f_mass: 1.0,
            min_u: 1.0,
            max_u: 1.0,
            min_pu: 1.0,
            q_min: 1.0,
            residual_inf: 0.0,
            constraint_defect: 0.0,
        }
    }

    #[test]
    fn stationary_trajectory_has_zero_errors() {
        let man = DiscreteManifold::sphere_axisym(5, 8).unwrap();
        let recs: Vec<_> = (0..5).map(|k| record(0.1 * k as f64)).collect();
        let r = check_structural_identities(&man, &recs).unwrap();
        assert_eq!(r.alpha_rate, 0.0);
        assert_eq!(r.dissipation_integral, 0.0);
        assert_eq!(r.energy_rate, 0.0);
        assert!(check_structural_identities(&man, &recs[..2]).is_err());
        let mut uneven = recs.clone();
        uneven[2].t = 0.25;
        assert!(check_structural_identities(&man, &uneven).is_err());
    }

    #[test]
    fn short_run_satisfies_identities() {
        let man = DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, PI, 32).unwrap();
        let s = man.node_coordinates();
        let u0 = ScalarField::from_fn(&s, |s| 1.0 + 0.03 * (2.0 * s).cos());
        let f = u0.map(|_| 1.0);
        let params = FlowParams {
            t_max: 1.0,
            ..FlowParams::default()
        };
        let (recs, _) = run(&man, &f, &u0, &params).unwrap();
        let r = check_structural_identities(&man, &recs).unwrap();
        assert!(
            r.alpha_rate < 1e-3 && r.dissipation_integral < 1e-3 && r.energy_rate < 1e-3,
            "{r:?}"
        );
    }

    #[test]
    fn modified_flow_starts_at_alpha() {
        let man =
            DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, 2.0 * PI, 16).unwrap();
        let one = ScalarField::constant(16, 1.0);
        let r = modified_flow_crosscheck(&man, &one, &one, 0.0, 0.1).unwrap();
        assert!((r.alpha0 - 25.0 / 8.0).abs() < 1e-12);
        assert_eq!(r.s_final, 0.0);
        assert_eq!(r.max_deviation, 0.0);
        let r = modified_flow_crosscheck(&man, &one, &one, 0.5, 0.01).unwrap();
        assert!(r.max_deviation < 1e-12 && r.alpha_relation < 1e-12, "{r:?}");
    }
}
