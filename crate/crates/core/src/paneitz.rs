//! Application and inversion of the discrete Paneitz operator, and the
//! energy functionals built on it.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::{DiscreteManifold, Operator};

/// Integral quantities of a positive conformal factor `u` against a positive
/// prescribed function `f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    /// `∫ u P u`
    pub e: f64,
    /// `∫ u^{2n/(n-4)}`
    pub conf_volume: f64,
    /// `∫ f u^{2n/(n-4)}`
    pub f_mass: f64,
    /// `E / f_mass^{(n-4)/n}`
    pub e_f: f64,
    /// `(2/(n-4)) E / f_mass`
    pub alpha: f64,
    /// `E / conf_volume^{(n-4)/n}`
    pub quotient_f: f64,
}

impl DiscreteManifold {
    /// `P u`.
    pub fn apply_p(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check_field(u)?;
        Ok(ScalarField::from_vec(match self.operator() {
            Operator::Spectral {
                synthesis,
                multipliers,
            } => {
                let mean = self.mean(u.values());
                let mut c = self.analysis(synthesis, u.values(), mean);
                for (c, l) in c.iter_mut().zip(multipliers) {
                    *c *= l;
                }
                let out = synthesis * c;
                let m0 = multipliers[0] * mean;
                out.iter().map(|v| v + m0).collect()
            }
            Operator::Dense { matrix, .. } => (matrix * DVector::from_column_slice(u.values()))
                .iter()
                .copied()
                .collect(),
        }))
    }

    /// `P⁻¹ rhs`: division by the multipliers for the spectral kinds, a
    /// Cholesky solve of `(W P) x = W rhs` for matrices.
    pub fn solve_p(&self, rhs: &ScalarField) -> Result<ScalarField> {
        self.check_field(rhs)?;
        Ok(ScalarField::from_vec(match self.operator() {
            Operator::Spectral {
                synthesis,
                multipliers,
            } => {
                let mean = self.mean(rhs.values());
                let mut c = self.analysis(synthesis, rhs.values(), mean);
                for (c, l) in c.iter_mut().zip(multipliers) {
                    *c /= l;
                }
                let out = synthesis * c;
                let m0 = mean / multipliers[0];
                out.iter().map(|v| v + m0).collect()
            }
            Operator::Dense { form, .. } => {
                let b = DVector::from_iterator(
                    rhs.len(),
                    rhs.iter().zip(self.weights()).map(|(r, w)| r * w),
                );
                form.solve(&b).iter().copied().collect()
            }
        }))
    }

    /// `⟨h, P h⟩`, evaluated so that it is non-negative by construction.
    pub fn quadratic_form(&self, h: &ScalarField) -> Result<f64> {
        self.check_field(h)?;
        Ok(match self.operator() {
            Operator::Spectral {
                synthesis,
                multipliers,
            } => {
                let mean = self.mean(h.values());
                let c = self.analysis(synthesis, h.values(), mean);
                let tail: f64 = c
                    .iter()
                    .zip(multipliers)
                    .skip(1)
                    .map(|(c, l)| l * c * c)
                    .sum();
                multipliers[0] * (mean * mean * self.volume() + c[0] * c[0]) + tail
            }
            Operator::Dense { form, .. } => {
                let lt = form.l().transpose() * DVector::from_column_slice(h.values());
                lt.norm_squared()
            }
        })
    }

    /// Coefficients of `h - mean` in the orthonormal basis.
    fn analysis(&self, synthesis: &nalgebra::DMatrix<f64>, h: &[f64], mean: f64) -> DVector<f64> {
        let wh = DVector::from_iterator(
            h.len(),
            h.iter().zip(self.weights()).map(|(v, w)| w * (v - mean)),
        );
        synthesis.tr_mul(&wh)
    }

    /// Smallest entry of `P⁻¹ δ_i` over all node point masses, for the
    /// matrix kind, or of the point mass at each end of the chart otherwise.
    /// Negative values mean the discrete inverse is not positivity preserving.
    pub fn inverse_positivity_defect(&self) -> Result<f64> {
        let centers: Vec<f64> = match self.kind() {
            crate::manifold::ManifoldKind::MatrixLoaded => {
                (0..self.node_count()).map(|i| i as f64).collect()
            }
            crate::manifold::ManifoldKind::SphereAxisym => vec![0.0, std::f64::consts::PI],
            crate::manifold::ManifoldKind::EinsteinCircleProduct => vec![0.0],
        };
        let mut worst = f64::INFINITY;
        for c in centers {
            let g = self.solve_p(&self.point_mass(c)?)?;
            worst = worst.min(g.min());
        }
        Ok(worst)
    }
}

pub(crate) fn require_positive(what: &'static str, h: &ScalarField) -> Result<()> {
    match h.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(Error::Positivity {
            what,
            index,
            value: h[index],
        }),
        None => Ok(()),
    }
}

/// `|u|^q` nodewise.
pub(crate) fn power(u: &ScalarField, q: f64) -> ScalarField {
    u.map(|v| v.abs().powf(q))
}

/// Assembles an [`EnergyReport`] given a precomputed `P u`.
pub(crate) fn report_with(
    man: &DiscreteManifold,
    u: &ScalarField,
    f: &ScalarField,
    pu: &ScalarField,
) -> Result<EnergyReport> {
    let c = man.coeffs();
    let up = power(u, c.p_crit);
    let e = man.inner(u, pu)?;
    let conf_volume = man.integrate(&up)?;
    let f_mass = man.inner(f, &up)?;
    Ok(EnergyReport {
        e,
        conf_volume,
        f_mass,
        e_f: e / f_mass.powf(c.vol_exp()),
        alpha: e / (c.half_nm4() * f_mass),
        quotient_f: e / conf_volume.powf(c.vol_exp()),
    })
}

/// Energy, volumes, normalized energy and constraint factor of `u` against `f`.
pub fn energy_report(
    man: &DiscreteManifold,
    u: &ScalarField,
    f: &ScalarField,
) -> Result<EnergyReport> {
    man.check_field(u)?;
    man.check_field(f)?;
    require_positive("u", u)?;
    require_positive("f", f)?;
    let pu = man.apply_p(u)?;
    report_with(man, u, f, &pu)
}

/// The constraint factor `α = (2/(n-4)) E / ∫ f u^{2n/(n-4)}`.
pub fn constraint_alpha(man: &DiscreteManifold, u: &ScalarField, f: &ScalarField) -> Result<f64> {
    Ok(energy_report(man, u, f)?.alpha)
}

/// `(n-4)/2 · α f u^{(n+4)/(n-4)}`, the right side whose preimage drives the flow.
pub(crate) fn forcing(
    man: &DiscreteManifold,
    u: &ScalarField,
    f: &ScalarField,
    alpha: f64,
) -> ScalarField {
    let c = man.coeffs();
    let k = c.half_nm4() * alpha;
    let q = c.q_exp;
    f.zip_map(u, |f, u| k * f * u.powf(q))
}

/// Velocity `φ = -u + (n-4)/2 · P⁻¹(α f u^{(n+4)/(n-4)})` of the flow.
pub fn velocity_potential(
    man: &DiscreteManifold,
    u: &ScalarField,
    f: &ScalarField,
    alpha: f64,
) -> Result<ScalarField> {
    man.check_field(u)?;
    man.check_field(f)?;
    require_positive("u", u)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let g = man.solve_p(&forcing(man, u, f, alpha))?;
    Ok(g.axpy(-1.0, u))
}

/// Dissipation `F₂ = ⟨φ, P φ⟩` of the flow velocity.
pub fn f2(man: &DiscreteManifold, u: &ScalarField, f: &ScalarField, alpha: f64) -> Result<f64> {
    let phi = velocity_potential(man, u, f, alpha)?;
    man.quadratic_form(&phi)
}

/// `⟨u, P u⟩ / ‖u‖_{2n/(n-4)}²`, defined for any nonzero `u`.
pub fn quotient(man: &DiscreteManifold, u: &ScalarField) -> Result<f64> {
    let c = man.coeffs();
    let e = man.quadratic_form(u)?;
    let norm = man.lp_norm(u, c.p_crit)?;
    if norm == 0.0 {
        return Err(Error::InvalidParameter(
            "quotient of the zero function".into(),
        ));
    }
    Ok(e / (norm * norm))
}

/// Minimum of the quotient over `trials`: an upper bound on the
/// Paneitz–Sobolev constant of the manifold.
pub fn quotient_min_estimate(man: &DiscreteManifold, trials: &[ScalarField]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::InvalidParameter("no trial functions given".into()));
    }
    trials
        .iter()
        .map(|u| quotient(man, u))
        .try_fold(f64::INFINITY, |m, q| Ok(m.min(q?)))
}
