//! Funnel-based output tracking for an underactuated two-link manipulator
//! whose end-effector output has unstable internal dynamics.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: plant equations, output map, high-frequency gain.
//! - [`bif`]: Byrnes–Isidori coordinates and the internal dynamics.
//! - [`linid`]: linearization, eigen-split and the auxiliary output.
//! - [`reference`]: transition reference and the bounded auxiliary reference.
//! - [`funnel`]: funnel functions, error/gain cascade, observer, control laws.
//! - [`sim`]: closed-loop integration, scenarios, CSV output, sweeps.
//!
//! [`checks`] bundles the numerical invariant suite used by `funnel-sim check`.
//! Batch work is spread over rayon when the `parallel` feature is enabled.

// Validation uses `!(x > 0.0)` so that NaN is rejected together with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bif;
pub mod checks;
pub mod error;
pub mod exec;
pub mod funnel;
pub mod linid;
pub mod model;
pub mod ode;
pub mod quad;
pub mod reference;
pub mod sim;

pub use error::{Error, IntegrationFailure, Result};
pub use funnel::{CascadeOutput, FunnelSpec, ObserverGains, ObserverState};
pub use linid::LinData;
pub use model::{ManipulatorParams, PlantState};
pub use reference::{NewRefConfig, NewReference, TransitionRef};
pub use sim::{Mode, ScenarioConfig, Summary, Trajectory};
