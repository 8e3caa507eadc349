//! Time integration of the coupled `(g, H, f)` flow.

mod homogeneous;
mod rhs;
mod state;
mod step;
mod trajectory;
mod verify;

pub use homogeneous::{integrate_reduced, HomogeneousState};
pub use rhs::{grf_rhs, Tangent};
pub use state::{GeomState, Slice};
pub use step::{dt_max, evolve, evolve_partial, flow_step, C_CFL};
pub use trajectory::FlowTrajectory;
pub use verify::{verify_scalar_evolution, verify_volume_identity, FlowCheck};
