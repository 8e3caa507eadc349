//! Densities, continuity equations, Benamou–Brenier paths, Wasserstein
//! oracles and backward heat flow along a trajectory.

mod density;
mod descent;
mod elliptic;
pub(crate) mod frame;
mod heat;
mod path;
mod simplex;
mod verify;
mod wasserstein;

pub use density::{Density, MASS_TOL, RHO_FLOOR};
pub(crate) use density::{masses_to_rho, rho_to_masses};
pub use descent::{DescentOptions, MAX_DESCENT_ITER, TOL_GEO};
pub(crate) use descent::descend;
pub use elliptic::{continuity_solve, solve_weighted, SolveStats, Spectral, TOL_ELL};
pub use heat::{backward_heat_evolve, heat_density_residual, HeatSeries, TrajectorySlices, C_HEAT};
pub(crate) use heat::{heat_steps, substeps};
pub use path::{bb_minimize, energy_e, verify_static_derivative, BbOutcome, MeasurePath, StaticDerivativeCheck};
pub use simplex::transport_cost;
pub use verify::{
    frozen_family, heat_family, verify_energy_derivative, wasserstein_monotonicity, EnergyDerivativeReport,
    EnergyDerivativeRow, MonotoneSeries, PathFamily, FAMILY_STEPS,
};
pub(crate) use verify::{centered_derivative, centered_derivative_field};
pub use wasserstein::{circle_w2, graph_distances, wasserstein_oracle, LP_CAP};
