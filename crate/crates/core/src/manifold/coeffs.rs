//! Dimension-dependent constants of the Paneitz operator and the bubble analysis.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `Γ(m/2)` for a positive integer `m`, by the half-integer recurrence.
pub fn gamma_half(m: usize) -> f64 {
    assert!(m > 0, "gamma_half needs m >= 1");
    let mut k = m;
    let mut acc = 1.0;
    while k > 2 {
        k -= 2;
        acc *= k as f64 / 2.0;
    }
    if k == 1 {
        acc * PI.sqrt()
    } else {
        acc
    }
}

/// Surface measure of the unit `m`-sphere, `2 π^{(m+1)/2} / Γ((m+1)/2)`.
pub fn sphere_volume(m: usize) -> f64 {
    2.0 * PI.powf((m as f64 + 1.0) / 2.0) / gamma_half(m + 1)
}

/// Coefficients of the Paneitz operator and the critical exponents in dimension `n`.
///
/// `b_pb` is the Ricci coefficient of the operator; `big_b` is the constant
/// `n(n-4)(n²-4)` normalizing the bubble equation. Both appear under the same
/// letter in the literature.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTable {
    pub n: usize,
    pub a_n: f64,
    pub b_pb: f64,
    pub big_b: f64,
    pub c_n: f64,
    pub omega: f64,
    /// `2n/(n-4)`
    pub p_crit: f64,
    /// `(n+4)/(n-4)`
    pub q_exp: f64,
}

impl CoeffTable {
    pub fn new(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::Dimension(n));
        }
        let nf = n as f64;
        let omega = sphere_volume(n - 1);
        Ok(CoeffTable {
            n,
            a_n: ((nf - 2.0).powi(2) + 4.0) / (2.0 * (nf - 1.0) * (nf - 2.0)),
            b_pb: -4.0 / (nf - 2.0),
            big_b: nf * (nf - 4.0) * (nf * nf - 4.0),
            c_n: 1.0 / (2.0 * (nf - 2.0) * (nf - 4.0) * omega),
            omega,
            p_crit: 2.0 * nf / (nf - 4.0),
            q_exp: (nf + 4.0) / (nf - 4.0),
        })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `(n-4)/2`, the zeroth-order coefficient of the operator.
    pub fn half_nm4(&self) -> f64 {
        (self.nf() - 4.0) / 2.0
    }

    /// `(n-4)/n`, the exponent on the volume term of the quotients.
    pub fn vol_exp(&self) -> f64 {
        (self.nf() - 4.0) / self.nf()
    }

    /// Q-curvature of a metric with constant scalar curvature `r` and
    /// `|Ric|² = ric_sq` (derivative term dropped).
    pub fn q_curvature(&self, r: f64, ric_sq: f64) -> f64 {
        let n = self.nf();
        let c2 = (n.powi(3) - 4.0 * n * n + 16.0 * n - 16.0)
            / (8.0 * (n - 1.0).powi(2) * (n - 2.0).powi(2));
        c2 * r * r - 2.0 / (n - 2.0).powi(2) * ric_sq
    }

    /// Background Q-curvature of the round unit sphere, `n(n²-4)/8`.
    pub fn sphere_q0(&self) -> f64 {
        let n = self.nf();
        n * (n * n - 4.0) / 8.0
    }

    /// Paneitz–Sobolev constant of the round sphere, the quotient of the constant function.
    pub fn sphere_sobolev_constant(&self) -> f64 {
        let vol = sphere_volume(self.n);
        self.half_nm4() * self.sphere_q0() * vol.powf(4.0 / self.nf())
    }
}
