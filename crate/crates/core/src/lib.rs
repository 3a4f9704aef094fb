//! Nonlocal Q-curvature flow on symmetry-reduced manifolds.
//!
//! The crate discretizes the Paneitz operator on three kinds of background
//! ([`DiscreteManifold`]): axisymmetric functions on the round sphere, functions
//! of the circle coordinate on an Einstein product `N × S¹`, and arbitrary
//! self-adjoint matrices loaded from a file. On top of it sit
//!
//! - [`paneitz`]: energies, the constraint multiplier `α` and the velocity potential,
//! - [`flow`]: the constrained flow `u_t = -u + α (n-4)/2 P⁻¹(f u^{(n+4)/(n-4)})`,
//!   its monitors, structural identities and convergence certification,
//! - [`bubble`]: concentrating test functions, Green's function expansions and
//!   low-energy initial data,
//! - [`cli`]: the configuration-driven runner behind the `qflow` binary.
//!
//! ```
//! use qflow::{CirclePreset, DiscreteManifold, ScalarField};
//!
//! let man = DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, std::f64::consts::PI, 16)?;
//! let p1 = man.apply_p(&ScalarField::constant(16, 1.0))?;
//! assert!((p1[0] - 1.5625).abs() < 1e-12);
//! # Ok::<(), qflow::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubble;
pub mod cli;
pub mod error;
pub mod field;
pub mod flow;
pub mod manifold;
pub mod paneitz;

pub use bubble::{BubbleFamily, BubbleParams, Certificate, GreenExpansion};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use flow::{ConvergenceReport, FlowParams, FlowState, Integrator, MonitorRecord};
pub use manifold::{CirclePreset, CoeffTable, DiscreteManifold, ManifoldKind};
pub use paneitz::EnergyReport;
