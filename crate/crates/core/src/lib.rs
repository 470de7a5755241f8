//! Two-species Lotka–Volterra toolkit.
//!
//! The crate covers the full analysis chain for a pair of interacting
//! economic (or ecological) stocks observed at annual resolution:
//!
//! * [`params`]: the three equivalent parameterisations of the model
//!   (ratio regression, Leslie discrete map, continuous ODE), the transforms
//!   between them and the sign-based interaction taxonomy.
//! * [`fitting`]: zero-intercept ratio regression on a [`fitting::TimeSeries`],
//!   one-step and free-running predictions, MAPE.
//! * [`dynamics`]: equilibria, Jacobian, eigenvalues, stability class,
//!   phase-plane sign fields and RK4 trajectories.
//! * [`sensitivity`]: Saltelli design on a Sobol' sequence and first/total
//!   order variance-based indices of the interior equilibrium.
//!
//! Everything here is a pure function over plain values.

// NaN has to fail the domain checks, hence `!(v > 0.0)` style comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod lowdisc;
pub mod params;
pub mod sensitivity;

pub use error::{Error, Result};
pub use params::{ContinuousParams, DiscreteParams, Interaction, InteractionKind, RegressionCoeffs, Species};
