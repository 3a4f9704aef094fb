//! Time integration of the nonlocal Q-curvature flow
//!
//! ```text
//! ∂u/∂t = -u + (n-4)/2 · P⁻¹(α f u^{(n+4)/(n-4)}),   α = (2/(n-4)) E[u] / ∫ f u^{2n/(n-4)},
//! ```
//!
//! with monitoring of every conserved and monotone quantity, convergence
//! detection and certification of the limit.

mod export;
mod identities;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::DiscreteManifold;
use crate::paneitz::{forcing, report_with, require_positive};

pub use export::{write_trajectory_csv, TRAJECTORY_HEADER};
pub use identities::{
    check_structural_identities, modified_flow_crosscheck, CrosscheckReport, StructuralReport,
};

/// Time stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    /// Classical four-stage Runge–Kutta, `α` recomputed at every stage.
    Rk4,
    /// First-order exponential scheme in `w = P u`, preserving `w >= 0`.
    Etd,
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "etd" => Ok(Integrator::Etd),
            _ => Err(Error::Parse(format!(
                "unknown integrator `{s}` (expected rk4 or etd)"
            ))),
        }
    }
}

/// Parameters of a flow run.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowParams {
    pub integrator: Integrator,
    pub dt: f64,
    pub t_max: f64,
    pub tol_f2: f64,
    pub tol_residual: f64,
    /// Steps between monitor records.
    pub record_every: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            integrator: Integrator::Rk4,
            dt: 1e-3,
            t_max: 100.0,
            tol_f2: 1e-10,
            tol_residual: 1e-8,
            record_every: 10,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("tol_F2", self.tol_f2),
            ("tol_residual", self.tol_residual),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidParameter("t_max must be non-negative".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Time, conformal factor and its Paneitz image.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub u: ScalarField,
    /// `P u`
    pub w: ScalarField,
}

impl FlowState {
    pub fn new(man: &DiscreteManifold, u: ScalarField) -> Result<Self> {
        let w = man.apply_p(&u)?;
        Ok(FlowState { t: 0.0, u, w })
    }
}

/// One time slice of the monitored quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    pub e: f64,
    pub e_f: f64,
    pub alpha: f64,
    pub f2: f64,
    /// `2√F₂ - 2 log(1 + √F₂)`
    pub h: f64,
    pub conf_volume: f64,
    pub f_mass: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_pu: f64,
    pub q_min: f64,
    /// `‖P u - (n-4)/2 · α f u^{(n+4)/(n-4)}‖_∞`
    pub residual_inf: f64,
    /// `|⟨u, P φ⟩| / E`, zero in exact arithmetic.
    pub constraint_defect: f64,
}

impl MonitorRecord {
    fn meets(&self, params: &FlowParams) -> bool {
        self.f2 <= params.tol_f2 && self.residual_inf <= params.tol_residual
    }
}

/// Outcome of [`run`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub t_final: f64,
    pub f2_final: f64,
    pub residual_inf_final: f64,
    pub alpha_final: f64,
    /// `∫ u² dμ` of the final state.
    pub l2_mass: f64,
    pub u_limit: ScalarField,
    pub steps: usize,
    /// The initial data had `P u₀` vanishing somewhere (boundary of the cone).
    pub started_on_cone_boundary: bool,
}

/// Extremal pointwise quantities of a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityMonitors {
    pub min_u: f64,
    pub min_pu: f64,
    /// Minimum of `Q = (2/(n-4)) u^{-(n+4)/(n-4)} P u`.
    pub q_min: f64,
    /// Background `R₀ >= 0` and `Q > 0` everywhere. Only a proxy: the scalar
    /// curvature of the evolving metric is not computed on reduced geometries.
    pub scalar_curvature_proxy: bool,
}

pub fn positivity_monitors(man: &DiscreteManifold, state: &FlowState) -> PositivityMonitors {
    let c = man.coeffs();
    let scale = 1.0 / c.half_nm4();
    let q = c.q_exp;
    let q_min = state
        .u
        .iter()
        .zip(&state.w)
        .map(|(u, w)| scale * w * u.powf(-q))
        .fold(f64::INFINITY, f64::min);
    PositivityMonitors {
        min_u: state.u.min(),
        min_pu: state.w.min(),
        q_min,
        scalar_curvature_proxy: man.background().r0 >= 0.0 && q_min > 0.0,
    }
}

/// Flow velocity `φ` at `u`, with `α` recomputed from `u`.
pub fn rhs(man: &DiscreteManifold, u: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    man.check_field(u)?;
    man.check_field(f)?;
    require_positive("u", u)?;
    require_positive("f", f)?;
    velocity(man, f, u)
}

/// `α` of `u` from the non-negative quadratic form.
fn alpha_of(man: &DiscreteManifold, f: &ScalarField, u: &ScalarField) -> Result<f64> {
    let c = man.coeffs();
    let e = man.quadratic_form(u)?;
    let f_mass: f64 = man
        .weights()
        .iter()
        .zip(f.iter().zip(u))
        .map(|(w, (f, u))| w * f * u.powf(c.p_crit))
        .sum();
    Ok(e / (c.half_nm4() * f_mass))
}

fn velocity(man: &DiscreteManifold, f: &ScalarField, u: &ScalarField) -> Result<ScalarField> {
    let alpha = alpha_of(man, f, u)?;
    Ok(man.solve_p(&forcing(man, u, f, alpha))?.axpy(-1.0, u))
}

fn stage_positive(u: &ScalarField, t: f64, dt: f64) -> Result<()> {
    let (index, value) = u.argmin();
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::PositivityLoss {
            t,
            index,
            value,
            suggested_dt: dt / 2.0,
        })
    }
}

/// One classical Runge–Kutta step.
pub fn step_rk4(
    man: &DiscreteManifold,
    f: &ScalarField,
    state: &FlowState,
    dt: f64,
) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let u = &state.u;
    let k1 = velocity(man, f, u)?;
    let u2 = u.axpy(0.5 * dt, &k1);
    stage_positive(&u2, state.t, dt)?;
    let k2 = velocity(man, f, &u2)?;
    let u3 = u.axpy(0.5 * dt, &k2);
    stage_positive(&u3, state.t, dt)?;
    let k3 = velocity(man, f, &u3)?;
    let u4 = u.axpy(dt, &k3);
    stage_positive(&u4, state.t, dt)?;
    let k4 = velocity(man, f, &u4)?;
    let mut next = u.clone();
    for i in 0..next.len() {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    stage_positive(&next, state.t + dt, dt)?;
    let w = man.apply_p(&next)?;
    Ok(FlowState {
        t: state.t + dt,
        u: next,
        w,
    })
}

/// One exponential step in `w = P u`:
/// `w ← e^{-dt} w + (1 - e^{-dt}) (n-4)/2 · α f u^{(n+4)/(n-4)}`, then `u = P⁻¹ w`.
pub fn step_etd(
    man: &DiscreteManifold,
    f: &ScalarField,
    state: &FlowState,
    dt: f64,
) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let scale = state.w.sup_norm();
    let (index, value) = state.w.argmin();
    if value < -1e-12 * scale {
        return Err(Error::Positivity {
            what: "P u",
            index,
            value,
        });
    }
    let alpha = alpha_of(man, f, &state.u)?;
    let g = forcing(man, &state.u, f, alpha);
    let decay = (-dt).exp();
    let gain = -(-dt).exp_m1();
    let w = state.w.zip_map(&g, |w, g| decay * w + gain * g);
    let u = man.solve_p(&w)?;
    stage_positive(&u, state.t + dt, dt)?;
    Ok(FlowState {
        t: state.t + dt,
        u,
        w,
    })
}

pub fn step(
    man: &DiscreteManifold,
    f: &ScalarField,
    state: &FlowState,
    params: &FlowParams,
) -> Result<FlowState> {
    match params.integrator {
        Integrator::Rk4 => step_rk4(man, f, state, params.dt),
        Integrator::Etd => step_etd(man, f, state, params.dt),
    }
}

/// All monitored quantities of a state.
pub fn monitor(
    man: &DiscreteManifold,
    f: &ScalarField,
    state: &FlowState,
) -> Result<MonitorRecord> {
    let report = report_with(man, &state.u, f, &state.w)?;
    let g = forcing(man, &state.u, f, report.alpha);
    let phi = man.solve_p(&g)?.axpy(-1.0, &state.u);
    let f2 = man.quadratic_form(&phi)?;
    let root = f2.sqrt();
    let residual_inf = state.w.zip_map(&g, |w, g| w - g).sup_norm();
    let defect = man.inner(&state.w, &phi)?.abs() / report.e;
    let pos = positivity_monitors(man, state);
    Ok(MonitorRecord {
        t: state.t,
        e: report.e,
        e_f: report.e_f,
        alpha: report.alpha,
        f2,
        h: 2.0 * root - 2.0 * root.ln_1p(),
        conf_volume: report.conf_volume,
        f_mass: report.f_mass,
        min_u: pos.min_u,
        max_u: state.u.max(),
        min_pu: pos.min_pu,
        q_min: pos.q_min,
        residual_inf,
        constraint_defect: defect,
    })
}

/// Relative slack allowed for increases of `E_f` between records before a
/// run is declared divergent.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Integrates from `u0` until convergence or `t_max`.
///
/// Convergence means `F₂ <= tol_F2` and `residual_inf <= tol_residual` on
/// three consecutive records; data that already meets both tolerances at
/// `t = 0` is reported converged immediately.
pub fn run(
    man: &DiscreteManifold,
    f: &ScalarField,
    u0: &ScalarField,
    params: &FlowParams,
) -> Result<(Vec<MonitorRecord>, ConvergenceReport)> {
    params.validate()?;
    man.check_field(u0)?;
    man.check_field(f)?;
    require_positive("u0", u0)?;
    require_positive("f", f)?;
    let mut state = FlowState::new(man, u0.clone())?;
    let scale = state.w.sup_norm();
    let (index, value) = state.w.argmin();
    if value < -1e-12 * scale {
        return Err(Error::Positivity {
            what: "P u0",
            index,
            value,
        });
    }
    let on_boundary = value <= 1e-12 * scale;

    let first = monitor(man, f, &state)?;
    let e_f0 = first.e_f.abs();
    let mut records = vec![first];
    let mut converged = first.meets(params);
    let mut streak = usize::from(converged);
    let total = (params.t_max / params.dt - 1e-9).ceil().max(0.0) as usize;
    let mut steps = 0;
    while !converged && steps < total {
        let mut next = step(man, f, &state, params)?;
        steps += 1;
        next.t = steps as f64 * params.dt;
        state = next;
        if steps % params.record_every != 0 && steps != total {
            continue;
        }
        let rec = monitor(man, f, &state)?;
        let prev = records.last().expect("initial record");
        if rec.e_f > prev.e_f + 10.0 * MONOTONE_SLACK * e_f0 {
            return Err(Error::Divergence {
                t: rec.t,
                before: prev.e_f,
                after: rec.e_f,
            });
        }
        streak = if rec.meets(params) { streak + 1 } else { 0 };
        converged = streak >= 3;
        records.push(rec);
    }

    let last = *records.last().expect("initial record");
    let l2_mass = man.inner(&state.u, &state.u)?;
    Ok((
        records,
        ConvergenceReport {
            converged: converged && last.min_u > 0.0,
            t_final: state.t,
            f2_final: last.f2,
            residual_inf_final: last.residual_inf,
            alpha_final: last.alpha,
            l2_mass,
            u_limit: state.u,
            steps,
            started_on_cone_boundary: on_boundary,
        },
    ))
}

/// Largest increase of `key` between consecutive records, relative to its
/// initial magnitude; non-positive for a non-increasing sequence.
pub fn max_relative_increase(
    records: &[MonitorRecord],
    key: impl Fn(&MonitorRecord) -> f64,
) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let scale = key(first).abs().max(f64::MIN_POSITIVE);
    records
        .windows(2)
        .map(|p| (key(&p[1]) - key(&p[0])) / scale)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max |E(t) - E(0)| / E(0)` over the records.
pub fn energy_drift(records: &[MonitorRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    records
        .iter()
        .map(|r| (r.e - first.e).abs() / first.e)
        .fold(0.0, f64::max)
}
