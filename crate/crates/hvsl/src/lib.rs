//! Conservative semi-Lagrangian solver for a 1D-2V hybrid plasma model:
//! kinetic ions coupled to massless, quasi-neutral electrons through a
//! generalized Ohm's law.
//!
//! The time integrator splits the dynamics into two sub-flows:
//!
//! * `pvb` — velocity-space dynamics coupled to the out-of-plane magnetic
//!   field `B3(x)` and the electron pressure `p(x)`, advanced with a
//!   Picard-iterated modified implicit midpoint rule.  The distribution
//!   function is updated by a short sequence of one-dimensional advections
//!   (constant shifts plus a shear-split velocity rotation), so no
//!   multi-dimensional interpolation is ever performed.
//! * `xv` — free spatial streaming, a batch of one-dimensional advections
//!   in `x`.
//!
//! Both sub-flows conserve the discrete mass, momentum, and (for the
//! pressure-equation electron closure) total energy up to iteration
//! tolerance and round-off.  First-order Lie and second-order Strang
//! compositions are provided, together with conservation, reversibility,
//! and dispersion diagnostics.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exact_split;
pub mod grid;
pub mod integrator;
pub mod interp;
pub mod output;
pub mod state;
pub mod substeps;

mod reduce;

pub use config::{ElectronClosure, RunConfig, SchemeKind};
pub use error::SimError;
pub use grid::PhaseGrid;
pub use state::{Distribution, FieldState, Moments};
