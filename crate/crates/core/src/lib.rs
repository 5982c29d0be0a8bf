//! Numerical toolkit for three-dimensional conformal geometry.
//!
//! The crate evaluates curvature and conformal tensors (Riemann, Ricci,
//! Schouten, Cotton and its Hodge dual) of a user-specified Riemannian
//! 3-metric, integrates the third-order conformal geodesic ODE, drives null
//! geodesics of the Fefferman metric on the bundle of normalized null
//! coframes, and evaluates the total-torsion / Kropina functionals on the
//! orthonormal frame bundle together with their variational behaviour.
//!
//! Everything is organized around [`chart::MetricChart`]: a single coordinate
//! box with a metric given either with analytic first and second derivatives
//! or differentiated by central differences. All operations are pure
//! functions of their inputs and safe to call concurrently.

pub mod chart;
pub mod conformal;
pub mod curve;
pub mod fefferman;
pub mod frame;
pub mod geom;
pub mod linalg;
pub mod registry;
pub mod tensor;
pub mod torsion;

pub use chart::{ChartError, DerivativeMode, MetricChart, ScalarField};
pub use curve::{CurveState, DiscreteCurve};
pub use linalg::{CVec3, Mat3, Vec3};
