//! Concentrating test functions, their energy asymptotics, the Green's
//! function expansion at the concentration point, and low-energy initial data.
//!
//! Bubbles live on charts where the distance to the concentration point is
//! exact: geodesic polar coordinates around a pole of the sphere, and the
//! arc-length chart of the circle factor of a product.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::{DiscreteManifold, ManifoldKind};
use crate::paneitz::{quotient, report_with, EnergyReport};

/// Smooth cutoff equal to 1 on `r <= δ` and 0 on `r >= 2δ`, with a quintic
/// smoothstep in `(r - δ)/δ` between (continuous second derivative).
pub fn cutoff(delta: f64, r: f64) -> f64 {
    let t = ((r - delta) / delta).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Concentration point, scale and cutoff radius of a bubble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleParams {
    /// Chart coordinate of the concentration point: `θ ∈ {0, π}` on the
    /// sphere, the arc length `s` on a circle product.
    pub center: f64,
    pub eps: f64,
    pub delta: f64,
}

impl BubbleParams {
    pub fn new(center: f64, eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0) || !(delta > eps) {
            return Err(Error::InvalidParameter(format!(
                "bubble needs 0 < eps < delta, got eps = {eps}, delta = {delta}"
            )));
        }
        Ok(BubbleParams { center, eps, delta })
    }

    /// Distances from the center, after checking that `B_{2δ}` fits the chart.
    fn distances(&self, man: &DiscreteManifold) -> Result<Vec<f64>> {
        let reach = match man.kind() {
            ManifoldKind::SphereAxisym => PI,
            ManifoldKind::EinsteinCircleProduct => man.circle_length().expect("circle") / 2.0,
            ManifoldKind::MatrixLoaded => return Err(Error::UnsupportedKind("bubbles")),
        };
        if 2.0 * self.delta > reach {
            return Err(Error::InvalidParameter(format!(
                "cutoff support 2δ = {} exceeds the chart radius {reach}",
                2.0 * self.delta
            )));
        }
        man.distances_from(self.center)
    }
}

/// `u_ε = χ_δ(d) (ε² + d²)^{-(n-4)/2}`.
pub fn standard_bubble(man: &DiscreteManifold, params: &BubbleParams) -> Result<ScalarField> {
    let d = params.distances(man)?;
    let e = -man.coeffs().half_nm4();
    let eps2 = params.eps * params.eps;
    Ok(ScalarField::from_vec(
        d.iter()
            .map(|&r| cutoff(params.delta, r) * (eps2 + r * r).powf(e))
            .collect(),
    ))
}

/// `B_n ε⁴ χ_δ(d) (ε² + d²)^{-(n+4)/2}`, the model right side whose preimage is `û_ε`.
pub fn bubble_source(man: &DiscreteManifold, params: &BubbleParams) -> Result<ScalarField> {
    let d = params.distances(man)?;
    let c = man.coeffs();
    let e = -(c.nf() + 4.0) / 2.0;
    let eps2 = params.eps * params.eps;
    let k = c.big_b * eps2 * eps2;
    Ok(ScalarField::from_vec(
        d.iter()
            .map(|&r| k * cutoff(params.delta, r) * (eps2 + r * r).powf(e))
            .collect(),
    ))
}

/// Standard bubble, its corrected version and their difference.
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleFamily {
    pub params: BubbleParams,
    pub u_eps: ScalarField,
    /// `P⁻¹` of [`bubble_source`].
    pub u_hat: ScalarField,
    /// `û_ε - u_ε`
    pub v_eps: ScalarField,
    pub source: ScalarField,
    /// Energies of `û_ε` against `f`; volumes use `|û_ε|`.
    pub report: EnergyReport,
    /// Smallest nodal value of `û_ε`; positive in the continuum.
    pub min_u_hat: f64,
}

pub fn corrected_bubble(
    man: &DiscreteManifold,
    f: &ScalarField,
    params: &BubbleParams,
) -> Result<BubbleFamily> {
    man.check_field(f)?;
    let u_eps = standard_bubble(man, params)?;
    let source = bubble_source(man, params)?;
    let u_hat = man.solve_p(&source)?;
    let v_eps = u_hat.axpy(-1.0, &u_eps);
    // P û_ε is the source itself
    let report = report_with(man, &u_hat, f, &source)?;
    Ok(BubbleFamily {
        params: *params,
        min_u_hat: u_hat.min(),
        u_eps,
        u_hat,
        v_eps,
        source,
        report,
    })
}

/// Ratio `max |v_ε| / max shape` over `B_δ`, where the shape is
/// `log(1/(ε² + d²))` for `n = 8` and `(ε² + d²)^{(8-n)/2}` for `n >= 9`.
/// `None` below dimension 8, where `v_ε` stays bounded.
pub fn correction_coefficient(
    man: &DiscreteManifold,
    family: &BubbleFamily,
) -> Result<Option<f64>> {
    let n = man.dimension();
    if n < 8 {
        return Ok(None);
    }
    let p = family.params;
    let d = p.distances(man)?;
    let eps2 = p.eps * p.eps;
    let shape = |r: f64| {
        let s = eps2 + r * r;
        if n == 8 {
            (1.0 / s).ln().abs().max(1.0)
        } else {
            s.powf((8.0 - n as f64) / 2.0)
        }
    };
    let mut v_max: f64 = 0.0;
    let mut s_max: f64 = 0.0;
    for (r, v) in d.iter().zip(&family.v_eps) {
        if *r <= p.delta {
            v_max = v_max.max(v.abs());
            s_max = s_max.max(shape(*r));
        }
    }
    Ok(Some(v_max / s_max))
}

/// One row of the bubble energy table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticRow {
    pub eps: f64,
    /// `B_n ε⁴ (∫ u_ε^{2n/(n-4)})^{4/n}`
    pub value: f64,
    /// Quotient of the constant function, `q(Sⁿ)` on the round sphere.
    pub reference: f64,
    /// `(value - reference) / reference`
    pub rel_gap: f64,
}

/// Energy asymptotics of standard bubbles at a pole of the round sphere,
/// computed concurrently and returned in the order of `eps_list`.
pub fn sphere_quotient_asymptotic(
    man: &DiscreteManifold,
    center: f64,
    eps_list: &[f64],
    delta: f64,
) -> Result<Vec<AsymptoticRow>> {
    if man.kind() != ManifoldKind::SphereAxisym {
        return Err(Error::UnsupportedKind("sphere bubble asymptotics"));
    }
    let c = man.coeffs();
    let reference = quotient(man, &ScalarField::constant(man.node_count(), 1.0))?;
    eps_list
        .par_iter()
        .map(|&eps| {
            if eps >= delta {
                return Err(Error::InvalidParameter(format!(
                    "eps = {eps} must be smaller than delta = {delta}"
                )));
            }
            let u = standard_bubble(man, &BubbleParams::new(center, eps, delta)?)?;
            let integral = man.integrate(&u.map(|v| v.powf(c.p_crit)))?;
            let value = c.big_b * eps.powi(4) * integral.powf(4.0 / c.nf());
            Ok(AsymptoticRow {
                eps,
                value,
                reference,
                rel_gap: (value - reference) / reference,
            })
        })
        .collect()
}

pub const ASYMPTOTICS_HEADER: &str = "eps,value,reference,rel_gap";

pub fn write_asymptotics_csv(mut out: impl Write, rows: &[AsymptoticRow]) -> std::io::Result<()> {
    writeln!(out, "{ASYMPTOTICS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            r.eps, r.value, r.reference, r.rel_gap
        )?;
    }
    Ok(())
}

/// Log-log slopes in `ε` of `∫ u_ε^{2n/(n-4)}`, `∫ u_ε^{(n+4)/(n-4)}` and `∫ u_ε^{8/(n-4)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSlopes {
    pub eps: Vec<f64>,
    pub exponents: [f64; 3],
    /// One row of three integrals per `ε`.
    pub integrals: Vec<[f64; 3]>,
    pub measured: [f64; 3],
    /// Leading-order slopes `-n`, `-4`, `n-8`. The last integral has a
    /// power law only for `n < 8`: it grows like `|log ε|` at `n = 8` and
    /// stays bounded above.
    pub expected: [Option<f64>; 3],
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn power_integral_slopes(
    man: &DiscreteManifold,
    center: f64,
    eps_list: &[f64],
    delta: f64,
) -> Result<PowerSlopes> {
    if eps_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "slopes need at least two eps values".into(),
        ));
    }
    let c = man.coeffs();
    let n = c.nf();
    let exponents = [c.p_crit, c.q_exp, 8.0 / (n - 4.0)];
    let integrals: Vec<[f64; 3]> = eps_list
        .par_iter()
        .map(|&eps| {
            let u = standard_bubble(man, &BubbleParams::new(center, eps, delta)?)?;
            let mut row = [0.0; 3];
            for (slot, e) in row.iter_mut().zip(exponents) {
                *slot = man.integrate(&u.map(|v| v.powf(e)))?;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut measured = [0.0; 3];
    for (j, m) in measured.iter_mut().enumerate() {
        let y: Vec<f64> = integrals.iter().map(|r| r[j]).collect();
        *m = log_log_slope(eps_list, &y);
    }
    Ok(PowerSlopes {
        eps: eps_list.to_vec(),
        exponents,
        integrals,
        measured,
        expected: [Some(-n), Some(-4.0), (c.n < 8).then_some(n - 8.0)],
    })
}

/// Annulus and acceptance threshold of the Green's function fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenOptions {
    pub r_min: f64,
    pub r_max: f64,
    /// Largest accepted root-mean-square fit residual relative to the
    /// root-mean-square of the Green's function on the annulus.
    pub threshold: f64,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions {
            r_min: 0.25,
            r_max: 0.75,
            threshold: 1e-2,
        }
    }
}

/// Green's function at a pole and its fitted expansion `a d^{4-n} + c_n β`.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenExpansion {
    pub green: ScalarField,
    /// Fitted `a`, approximating `c_n`.
    pub singular_coeff: f64,
    /// Fitted constant divided by `c_n`.
    pub mass_beta: f64,
    pub fit_residual: f64,
    pub threshold: f64,
    pub window: (f64, f64),
    /// `G(antipode)/c_n - π^{4-n}`, from the band-limited interpolant.
    pub antipode_beta: f64,
    /// Smallest nodal value of the Green's function.
    pub min_green: f64,
}

/// Solves `P G = δ_{x₀}` with a smoothed point mass at a pole of the sphere
/// and fits `G ≈ a d^{4-n} + b` on an annulus by least squares.
pub fn green_mass(
    man: &DiscreteManifold,
    center: f64,
    opts: &GreenOptions,
) -> Result<GreenExpansion> {
    if man.kind() != ManifoldKind::SphereAxisym {
        // the reduced circle kind only carries masses spread over a slice
        return Err(Error::UnsupportedKind(
            "Green's function expansion at a point",
        ));
    }
    if !(0.0 < opts.r_min && opts.r_min < opts.r_max && opts.r_max < PI) {
        return Err(Error::InvalidParameter(format!(
            "fit annulus [{}, {}] must satisfy 0 < r_min < r_max < π",
            opts.r_min, opts.r_max
        )));
    }
    let c = man.coeffs();
    let green = man.solve_p(&man.smoothed_point_mass(center)?)?;
    let d = man.distances_from(center)?;
    let e = 4.0 - c.nf();

    let (mut s11, mut s12, mut s22, mut b1, mut b2, mut gg) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut points = 0;
    for (r, g) in d.iter().zip(&green) {
        if *r < opts.r_min || *r > opts.r_max {
            continue;
        }
        let x = r.powf(e);
        s11 += x * x;
        s12 += x;
        s22 += 1.0;
        b1 += x * g;
        b2 += g;
        gg += g * g;
        points += 1;
    }
    if points < 3 {
        return Err(Error::InvalidParameter(format!(
            "fit annulus holds only {points} nodes; widen it or refine"
        )));
    }
    let det = s11 * s22 - s12 * s12;
    let a = (b1 * s22 - b2 * s12) / det;
    let b = (s11 * b2 - s12 * b1) / det;
    let mut res = 0.0;
    for (r, g) in d.iter().zip(&green) {
        if *r >= opts.r_min && *r <= opts.r_max {
            let fit = a * r.powf(e) + b;
            res += (g - fit) * (g - fit);
        }
    }
    let fit_residual = (res / gg).sqrt();
    if fit_residual > opts.threshold {
        return Err(Error::FitResidual {
            residual: fit_residual,
            threshold: opts.threshold,
        });
    }
    let antipode = if center.abs() < 1e-12 { PI } else { 0.0 };
    let g_far = man.interpolate(&green, antipode)?;
    Ok(GreenExpansion {
        min_green: green.min(),
        green,
        singular_coeff: a,
        mass_beta: b / c.c_n,
        fit_residual,
        threshold: opts.threshold,
        window: (opts.r_min, opts.r_max),
        antipode_beta: g_far / c.c_n - PI.powf(e),
    })
}

/// Checks run on the data before a certificate is issued.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateOptions {
    /// Largest relative oscillation of `f` over `B_{2δ}` accepted for `n >= 6`.
    pub flatness_threshold: f64,
    /// For `n >= 6`, the caller asserts that `f` has the required vanishing
    /// derivatives at the concentration point.
    pub vanishing_order_declared: bool,
}

impl Default for CandidateOptions {
    fn default() -> Self {
        CandidateOptions {
            flatness_threshold: 1e-2,
            vanishing_order_declared: false,
        }
    }
}

/// Energy certificate of a bubble initial datum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub eps: f64,
    pub e_f: f64,
    /// `q(Sⁿ) / (max f)^{(n-4)/n}`
    pub threshold: f64,
    /// `threshold - E_f`
    pub margin: f64,
    pub min_u0: f64,
    /// Smallest value of `P u₀`, which is the non-negative bubble source.
    pub min_pu0: f64,
    /// `-β ∫u_ε^{(n+4)/(n-4)} / ∫u_ε^{2n/(n-4)}` with `β` from [`green_mass`],
    /// on the sphere only.
    pub mass_correction: Option<f64>,
}

pub const CERTIFICATES_HEADER: &str = "eps,E_f,threshold,margin,min_u0,min_Pu0";

pub fn write_certificates_csv(mut out: impl Write, certs: &[Certificate]) -> std::io::Result<()> {
    writeln!(out, "{CERTIFICATES_HEADER}")?;
    for c in certs {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.eps, c.e_f, c.threshold, c.margin, c.min_u0, c.min_pu0
        )?;
    }
    Ok(())
}

/// Evaluates the corrected bubble as initial data and certifies that its
/// normalized energy lies below the sphere threshold.
///
/// Returns the certificate alongside `û_ε` when the margin is positive and
/// `û_ε` is positive; otherwise fails with [`Error::MarginNotPositive`].
pub fn initial_data_candidate(
    man: &DiscreteManifold,
    f: &ScalarField,
    params: &BubbleParams,
    opts: &CandidateOptions,
) -> Result<(ScalarField, Certificate)> {
    let cert = certify(man, f, params, opts)?;
    let u0 = corrected_bubble(man, f, params)?.u_hat;
    if !(cert.margin > 0.0) {
        return Err(Error::MarginNotPositive {
            margin: cert.margin,
            reason: format!(
                "E_f = {:.10e} is not below the threshold {:.10e} at eps = {}",
                cert.e_f, cert.threshold, cert.eps
            ),
        });
    }
    if !(cert.min_u0 > 0.0) {
        return Err(Error::MarginNotPositive {
            margin: cert.margin,
            reason: format!("corrected bubble is not positive (min {:e})", cert.min_u0),
        });
    }
    Ok((u0, cert))
}

/// The certificate of [`initial_data_candidate`] without the acceptance decision.
pub fn certify(
    man: &DiscreteManifold,
    f: &ScalarField,
    params: &BubbleParams,
    opts: &CandidateOptions,
) -> Result<Certificate> {
    man.check_field(f)?;
    let c = man.coeffs();
    let d = params.distances(man)?;
    let (argmax, f_max) = f.argmax();
    if d[argmax] > params.delta {
        return Err(Error::InvalidParameter(format!(
            "the maximum of f lies at distance {} from the concentration point, beyond delta",
            d[argmax]
        )));
    }
    if c.n >= 6 {
        if !opts.vanishing_order_declared {
            return Err(Error::InvalidParameter(
                "for n >= 6 the vanishing-order conditions on f must be declared".into(),
            ));
        }
        let near: Vec<f64> = d
            .iter()
            .zip(f)
            .filter(|(r, _)| **r <= 2.0 * params.delta)
            .map(|(_, v)| *v)
            .collect();
        let lo = near.iter().copied().fold(f64::INFINITY, f64::min);
        let osc = (f_max - lo) / f_max;
        if osc > opts.flatness_threshold {
            return Err(Error::InvalidParameter(format!(
                "f oscillates by {osc:e} over the bubble support (threshold {:e})",
                opts.flatness_threshold
            )));
        }
    }
    let family = corrected_bubble(man, f, params)?;
    let q_sphere = c.sphere_sobolev_constant();
    let threshold = q_sphere / f_max.powf(c.vol_exp());
    let mass_correction = if man.kind() == ManifoldKind::SphereAxisym {
        green_mass(man, params.center, &GreenOptions::default())
            .ok()
            .map(|g| {
                let up = man
                    .integrate(&family.u_eps.map(|v| v.powf(c.p_crit)))
                    .unwrap_or(f64::NAN);
                let uq = man
                    .integrate(&family.u_eps.map(|v| v.powf(c.q_exp)))
                    .unwrap_or(f64::NAN);
                -g.mass_beta * uq / up
            })
    } else {
        None
    };
    Ok(Certificate {
        eps: params.eps,
        e_f: family.report.e_f,
        threshold,
        margin: threshold - family.report.e_f,
        min_u0: family.min_u_hat,
        min_pu0: family.source.min(),
        mass_correction,
    })
}
