//! Discretized background manifolds `(Mⁿ, g₀)` carrying a quadrature rule
//! and a symmetric positive Paneitz operator.
//!
//! Three kinds are supported:
//!
//! * the round sphere restricted to axisymmetric (zonal) functions, with
//!   Gauss–Gegenbauer nodes in `cos θ` and the operator diagonal on zonal
//!   harmonics;
//! * a product `N^{n-1} × S¹_L` of an Einstein manifold with a circle,
//!   restricted to functions of the circle coordinate, with a trigonometric
//!   basis on a uniform grid;
//! * an arbitrary operator loaded from a file as a dense matrix.
//!
//! In the first two cases the operator is stored as a synthesis matrix `V`
//! whose columns are an orthonormal basis sampled at the nodes, plus the
//! multiplier of each basis function. The constant mode is split off before
//! the transform so that `P(1)` and `P⁻¹(c)` are exact to rounding.

mod coeffs;
mod matrix_file;
pub mod quadrature;

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub use coeffs::{gamma_half, sphere_volume, CoeffTable};
pub use matrix_file::MatrixData;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use quadrature::{gauss_nodes, GegenbauerFamily};

/// Which discretization a [`DiscreteManifold`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManifoldKind {
    SphereAxisym,
    EinsteinCircleProduct,
    MatrixLoaded,
}

/// Constant curvature data of the background metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Background {
    /// Scalar curvature `R₀`.
    pub r0: f64,
    /// Ricci curvature along the direction the functions vary in.
    pub ric_dir: f64,
    /// Background Q-curvature `Q₀`.
    pub q0: f64,
}

/// Constants describing an Einstein cross-section `N^{n-1}` for a circle product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CirclePreset {
    /// Unit `S⁴ × S¹`: `n = 5`, `R₀ = 12`, `Ric(∂s, ∂s) = 0`, `Q₀ = 25/8`.
    S4xS1,
    Custom {
        n: usize,
        r0: f64,
        ric_dir: f64,
        q0: f64,
        cross_volume: f64,
    },
}

impl CirclePreset {
    fn resolve(self) -> Result<(CoeffTable, Background, f64)> {
        match self {
            CirclePreset::S4xS1 => {
                let coeffs = CoeffTable::new(5)?;
                // unit S⁴: Ric = 3g, R = 12, |Ric|² = 36
                let q0 = coeffs.q_curvature(12.0, 36.0);
                Ok((
                    coeffs,
                    Background {
                        r0: 12.0,
                        ric_dir: 0.0,
                        q0,
                    },
                    sphere_volume(4),
                ))
            }
            CirclePreset::Custom {
                n,
                r0,
                ric_dir,
                q0,
                cross_volume,
            } => {
                if !(cross_volume > 0.0) {
                    return Err(Error::InvalidParameter(
                        "cross-sectional volume must be positive".into(),
                    ));
                }
                Ok((
                    CoeffTable::new(n)?,
                    Background { r0, ric_dir, q0 },
                    cross_volume,
                ))
            }
        }
    }
}

/// Node coordinates, used for distances and point evaluation.
#[derive(Clone, Debug)]
pub(crate) enum Coordinates {
    /// Polar angle `θ` of each node; the north pole is `θ = 0`.
    Sphere {
        theta: Vec<f64>,
        family: GegenbauerFamily,
    },
    /// Arc length `s ∈ [0, L)` of each node.
    Circle {
        s: Vec<f64>,
        length: f64,
    },
    Indexed,
}

#[derive(Clone, Debug)]
pub(crate) enum Operator {
    Spectral {
        /// `V[(i, m)]` = basis function `m` at node `i`, orthonormal in the weighted product.
        synthesis: DMatrix<f64>,
        multipliers: Vec<f64>,
    },
    Dense {
        matrix: DMatrix<f64>,
        /// Factor of the symmetric form `W P`.
        form: Cholesky<f64, Dyn>,
    },
}

/// A symmetry-reduced discretization of a closed manifold `(Mⁿ, g₀)`.
///
/// Immutable after construction; share it freely between threads.
#[derive(Clone, Debug)]
pub struct DiscreteManifold {
    coeffs: CoeffTable,
    kind: ManifoldKind,
    weights: Vec<f64>,
    background: Background,
    coords: Coordinates,
    op: Operator,
    constant_identity: bool,
}

impl DiscreteManifold {
    /// Round `Sⁿ` restricted to zonal functions, with `count` Gauss nodes and
    /// zonal harmonics of degree `0 .. count`.
    pub fn sphere_axisym(n: usize, count: usize) -> Result<Self> {
        let coeffs = CoeffTable::new(n)?;
        if count < 4 {
            return Err(Error::InvalidParameter(format!(
                "sphere discretization needs at least 4 nodes, got {count}"
            )));
        }
        let nf = n as f64;
        let family = GegenbauerFamily::for_dimension(n);
        let (x, w) = gauss_nodes(&family, count);
        let omega = coeffs.omega;
        let weights: Vec<f64> = w.iter().map(|w| omega * w).collect();
        let scale = 1.0 / omega.sqrt();
        let mut synthesis = DMatrix::zeros(count, count);
        for (i, &xi) in x.iter().enumerate() {
            for (m, p) in family.eval(count, xi).into_iter().enumerate() {
                synthesis[(i, m)] = p * scale;
            }
        }
        let multipliers = (0..count).map(|k| sphere_multiplier(n, k)).collect();
        let theta = x.iter().map(|x| x.clamp(-1.0, 1.0).acos()).collect();
        Ok(DiscreteManifold {
            background: Background {
                r0: nf * (nf - 1.0),
                ric_dir: nf - 1.0,
                q0: coeffs.sphere_q0(),
            },
            coeffs,
            kind: ManifoldKind::SphereAxisym,
            weights,
            coords: Coordinates::Sphere { theta, family },
            op: Operator::Spectral {
                synthesis,
                multipliers,
            },
            constant_identity: true,
        })
    }

    /// `N^{n-1} × S¹_L` restricted to functions of the circle coordinate, on
    /// `count` uniformly spaced nodes.
    pub fn einstein_circle_product(
        preset: CirclePreset,
        length: f64,
        count: usize,
    ) -> Result<Self> {
        let (coeffs, background, cross_volume) = preset.resolve()?;
        if !(length > 0.0) {
            return Err(Error::InvalidParameter(
                "circle length must be positive".into(),
            ));
        }
        if count < 4 {
            return Err(Error::InvalidParameter(format!(
                "circle discretization needs at least 4 nodes, got {count}"
            )));
        }
        let symbol = CircleSymbol::new(&coeffs, &background, length);
        symbol.check_coercive(count)?;

        let h = length / count as f64;
        let s: Vec<f64> = (0..count).map(|j| j as f64 * h).collect();
        let volume = cross_volume * length;
        let weights = vec![cross_volume * h; count];
        let mut synthesis = DMatrix::zeros(count, count);
        let mut multipliers = Vec::with_capacity(count);
        for (m, (harmonic, phase)) in circle_modes(count).into_iter().enumerate() {
            multipliers.push(symbol.at_harmonic(harmonic));
            for (i, &si) in s.iter().enumerate() {
                synthesis[(i, m)] = circle_basis(harmonic, phase, count, length, volume, si);
            }
        }
        Ok(DiscreteManifold {
            coeffs,
            kind: ManifoldKind::EinsteinCircleProduct,
            weights,
            background,
            coords: Coordinates::Circle { s, length },
            op: Operator::Spectral {
                synthesis,
                multipliers,
            },
            constant_identity: true,
        })
    }

    /// Reads a dense operator from a text file; see [`MatrixData`] for the format.
    pub fn load_matrix(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_matrix_data(MatrixData::read(path)?)
    }

    /// Validates and factors an explicit operator.
    ///
    /// The matrix is the nodal operator `P`; it must be self-adjoint in the
    /// weighted inner product, i.e. `W P` symmetric, and positive definite.
    pub fn from_matrix_data(data: MatrixData) -> Result<Self> {
        let coeffs = CoeffTable::new(data.n)?;
        let size = data.weights.len();
        data.check_shape()?;
        if let Some((index, &value)) = data.weights.iter().enumerate().find(|(_, &w)| !(w > 0.0)) {
            return Err(Error::NonPositiveWeight { index, value });
        }
        let matrix = DMatrix::from_row_slice(size, size, &data.p);
        let defect = data.self_adjoint_defect();
        if defect > 1e-10 {
            return Err(Error::Asymmetric { defect });
        }
        let form = DMatrix::from_fn(size, size, |i, j| {
            0.5 * (data.weights[i] * matrix[(i, j)] + data.weights[j] * matrix[(j, i)])
        });
        let form = Cholesky::new(form).ok_or_else(|| {
            Error::NotPositiveDefinite(
                "Cholesky factorization of W·P hit a non-positive pivot".into(),
            )
        })?;

        let p_one: Vec<f64> = (0..size).map(|i| matrix.row(i).sum()).collect();
        let scale = p_one.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let spread = p_one
            .iter()
            .fold(0.0_f64, |m, v| m.max((v - p_one[0]).abs()));
        let constant_identity = spread <= 1e-8 * scale;
        let q0 = match data.q0 {
            Some(q0) => {
                let target = coeffs.half_nm4() * q0;
                let defect = p_one.iter().fold(0.0_f64, |m, v| m.max((v - target).abs()));
                if defect > 1e-8 * scale.max(target.abs()) {
                    return Err(Error::ConstantIdentity { defect });
                }
                q0
            }
            None => {
                let total: f64 = data.weights.iter().sum();
                let mean: f64 = p_one
                    .iter()
                    .zip(&data.weights)
                    .map(|(p, w)| p * w)
                    .sum::<f64>()
                    / total;
                mean / coeffs.half_nm4()
            }
        };
        Ok(DiscreteManifold {
            coeffs,
            kind: ManifoldKind::MatrixLoaded,
            background: Background {
                r0: data.r0.unwrap_or(1.0),
                ric_dir: data.ric_dir.unwrap_or(0.0),
                q0,
            },
            weights: data.weights,
            coords: Coordinates::Indexed,
            op: Operator::Dense { matrix, form },
            constant_identity,
        })
    }

    pub fn coeffs(&self) -> &CoeffTable {
        &self.coeffs
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.n
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn background(&self) -> Background {
        self.background
    }

    /// Whether `P(1)` is a constant multiple of `1`; always true for the
    /// symmetric kinds, and checked on load for matrices.
    pub fn satisfies_constant_identity(&self) -> bool {
        self.constant_identity
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Node coordinate: `θ` on the sphere, `s` on the circle, the index otherwise.
    pub fn node_coordinates(&self) -> Vec<f64> {
        match &self.coords {
            Coordinates::Sphere { theta, .. } => theta.clone(),
            Coordinates::Circle { s, .. } => s.clone(),
            Coordinates::Indexed => (0..self.node_count()).map(|i| i as f64).collect(),
        }
    }

    /// Circle length for the product kind.
    pub fn circle_length(&self) -> Option<f64> {
        match self.coords {
            Coordinates::Circle { length, .. } => Some(length),
            _ => None,
        }
    }

    /// Spectral multipliers, one per basis function, for the symmetric kinds.
    pub fn multipliers(&self) -> Option<&[f64]> {
        match &self.op {
            Operator::Spectral { multipliers, .. } => Some(multipliers),
            Operator::Dense { .. } => None,
        }
    }

    /// Basis function `m` of the spectral kinds sampled at the nodes. On the
    /// sphere this is the normalized zonal harmonic of degree `m`.
    pub fn basis_function(&self, m: usize) -> Option<ScalarField> {
        match &self.op {
            Operator::Spectral { synthesis, .. } if m < synthesis.ncols() => Some(
                ScalarField::from_vec(synthesis.column(m).iter().copied().collect()),
            ),
            _ => None,
        }
    }

    pub(crate) fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn check_field(&self, h: &ScalarField) -> Result<()> {
        if h.len() != self.node_count() {
            return Err(Error::LengthMismatch {
                expected: self.node_count(),
                got: h.len(),
            });
        }
        Ok(())
    }

    /// `∫ h dμ_{g₀}` by quadrature.
    pub fn integrate(&self, h: &ScalarField) -> Result<f64> {
        self.check_field(h)?;
        Ok(self.weights.iter().zip(h).map(|(w, v)| w * v).sum())
    }

    /// Weighted `L²` inner product `∫ a b dμ_{g₀}`.
    pub fn inner(&self, a: &ScalarField, b: &ScalarField) -> Result<f64> {
        self.check_field(a)?;
        self.check_field(b)?;
        Ok(self
            .weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum())
    }

    /// `(∫ |h|^p dμ)^{1/p}` for `p >= 1`.
    pub fn lp_norm(&self, h: &ScalarField, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "L^p norm needs p >= 1, got {p}"
            )));
        }
        self.check_field(h)?;
        let s: f64 = self
            .weights
            .iter()
            .zip(h)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// Weighted mean `∫ h / vol`.
    pub(crate) fn mean(&self, h: &[f64]) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().zip(h).map(|(w, v)| w * v).sum::<f64>() / total
    }

    /// Distance of every node from `center`, in the exact chart of the kind.
    pub fn distances_from(&self, center: f64) -> Result<Vec<f64>> {
        match &self.coords {
            Coordinates::Sphere { theta, .. } => {
                if center.abs() < 1e-12 {
                    Ok(theta.clone())
                } else if (center - PI).abs() < 1e-12 {
                    Ok(theta.iter().map(|t| PI - t).collect())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "zonal functions can only concentrate at a pole (θ = 0 or π), got θ = {center}"
                    )))
                }
            }
            Coordinates::Circle { s, length } => Ok(s
                .iter()
                .map(|&si| {
                    let d = (si - center).rem_euclid(*length);
                    d.min(length - d)
                })
                .collect()),
            Coordinates::Indexed => Err(Error::UnsupportedKind("distances on a matrix manifold")),
        }
    }

    /// Basis functions of the spectral kinds evaluated at a coordinate, and
    /// the relative frequency in `[0, 1)` of each.
    fn basis_at(&self, coordinate: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let count = self.node_count();
        match &self.coords {
            Coordinates::Sphere { family, .. } => {
                let scale = 1.0 / self.coeffs.omega.sqrt();
                let values = family
                    .eval(count, coordinate.cos())
                    .into_iter()
                    .map(|p| p * scale)
                    .collect();
                let freq = (0..count).map(|k| k as f64 / count as f64).collect();
                Ok((values, freq))
            }
            Coordinates::Circle { length, .. } => {
                let volume = self.volume();
                let nyquist = (count / 2) as f64 + 1.0;
                Ok(circle_modes(count)
                    .into_iter()
                    .map(|(h, ph)| {
                        let v = circle_basis(h, ph, count, *length, volume, coordinate);
                        (v, h as f64 / nyquist)
                    })
                    .unzip())
            }
            Coordinates::Indexed => Err(Error::UnsupportedKind("evaluation between nodes")),
        }
    }

    /// Value at an arbitrary coordinate of the band-limited interpolant of `h`.
    pub fn interpolate(&self, h: &ScalarField, coordinate: f64) -> Result<f64> {
        self.check_field(h)?;
        let (basis, _) = self.basis_at(coordinate)?;
        let Operator::Spectral { synthesis, .. } = &self.op else {
            return Err(Error::UnsupportedKind("evaluation between nodes"));
        };
        let wh = DVector::from_iterator(h.len(), h.iter().zip(&self.weights).map(|(v, w)| v * w));
        let coeffs = synthesis.tr_mul(&wh);
        Ok(coeffs.iter().zip(&basis).map(|(c, b)| c * b).sum())
    }

    /// Discrete unit point mass at `center`: the projection of `δ_{center}`
    /// onto the basis for the spectral kinds, `e_i / w_i` at node `i` for
    /// matrices (`center` is then the node index).
    pub fn point_mass(&self, center: f64) -> Result<ScalarField> {
        self.filtered_point_mass(center, |_| 1.0)
    }

    /// Point mass with the exponential filter `exp(-36 η⁸)` applied to the
    /// relative frequency `η` of each mode. Its preimage under `P` converges
    /// pointwise away from the center, where the sharp projection of a
    /// Green's function oscillates at the truncation scale.
    pub fn smoothed_point_mass(&self, center: f64) -> Result<ScalarField> {
        self.filtered_point_mass(center, |eta| (-36.0 * eta.powi(8)).exp())
    }

    fn filtered_point_mass(&self, center: f64, filter: impl Fn(f64) -> f64) -> Result<ScalarField> {
        let count = self.node_count();
        match &self.op {
            Operator::Dense { .. } => {
                let i = center.round();
                if i < 0.0 || i as usize >= count || (center - i).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "point mass location {center} is not a node index"
                    )));
                }
                let mut v = ScalarField::zeros(count);
                v[i as usize] = 1.0 / self.weights[i as usize];
                Ok(v)
            }
            Operator::Spectral { synthesis, .. } => {
                if let Coordinates::Sphere { .. } = self.coords {
                    self.distances_from(center)?;
                }
                let (basis, freq) = self.basis_at(center)?;
                let at_center: Vec<f64> = basis
                    .iter()
                    .zip(&freq)
                    .map(|(b, e)| b * filter(*e))
                    .collect();
                let values = synthesis * DVector::from_vec(at_center);
                Ok(ScalarField::from_vec(values.iter().copied().collect()))
            }
        }
    }
}

/// Multiplier of the sphere operator on degree-`k` zonal harmonics,
/// `(λ̂ + n(n-2)/4)(λ̂ + (n-4)(n+2)/4)` with `λ̂ = k(k+n-1)`.
pub fn sphere_multiplier(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let lap = kf * (kf + nf - 1.0);
    (lap + nf * (nf - 2.0) / 4.0) * (lap + (nf - 4.0) * (nf + 2.0) / 4.0)
}

/// `P̂(k) = k⁴ + (a_n R₀ + b Ric_dir) k² + (n-4)/2 Q₀` for `k = 2π m / L`.
#[derive(Clone, Copy, Debug)]
pub struct CircleSymbol {
    pub second_order: f64,
    pub zeroth_order: f64,
    pub length: f64,
}

impl CircleSymbol {
    pub fn new(coeffs: &CoeffTable, bg: &Background, length: f64) -> Self {
        CircleSymbol {
            second_order: coeffs.a_n * bg.r0 + coeffs.b_pb * bg.ric_dir,
            zeroth_order: coeffs.half_nm4() * bg.q0,
            length,
        }
    }

    pub fn at_wavenumber(&self, k: f64) -> f64 {
        let k2 = k * k;
        k2 * k2 + self.second_order * k2 + self.zeroth_order
    }

    pub fn at_harmonic(&self, m: usize) -> f64 {
        self.at_wavenumber(2.0 * PI * m as f64 / self.length)
    }

    fn check_coercive(&self, count: usize) -> Result<()> {
        // the symbol is smallest near k² = -A/2 when A < 0
        let dip = if self.second_order < 0.0 {
            ((-self.second_order / 2.0).sqrt() * self.length / (2.0 * PI)).ceil() as usize + 1
        } else {
            0
        };
        for m in 0..=(count / 2).max(dip) {
            let v = self.at_harmonic(m);
            if !(v > 0.0) {
                return Err(Error::NotCoercive {
                    mode: 2.0 * PI * m as f64 / self.length,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Phase {
    Cos,
    Sin,
}

/// `(harmonic, phase)` of each real trigonometric basis function on `count` nodes.
fn circle_modes(count: usize) -> Vec<(usize, Phase)> {
    let mut modes = vec![(0, Phase::Cos)];
    for m in 1..count.div_ceil(2) {
        modes.push((m, Phase::Cos));
        modes.push((m, Phase::Sin));
    }
    if count.is_multiple_of(2) {
        modes.push((count / 2, Phase::Cos));
    }
    modes
}

fn circle_basis(
    harmonic: usize,
    phase: Phase,
    count: usize,
    length: f64,
    volume: f64,
    s: f64,
) -> f64 {
    let arg = 2.0 * PI * harmonic as f64 * s / length;
    let edge = harmonic == 0 || 2 * harmonic == count;
    let amp = if edge {
        (1.0 / volume).sqrt()
    } else {
        (2.0 / volume).sqrt()
    };
    match phase {
        Phase::Cos => amp * arg.cos(),
        Phase::Sin => amp * arg.sin(),
    }
}
