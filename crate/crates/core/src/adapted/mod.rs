//! Transport cost adapted to the flow: paths whose continuity equation
//! carries the curvature source `R^{H,f}ρ`, their geodesics, entropy
//! convexity, and monotonicity of the cost and of `F` along backward heat
//! flows.

mod cost;
mod entropy;
mod path;

pub use cost::{
    run_cost_monotonicity, run_f_monotonicity, verify_cost_variation, CostMonotonicity, CostSchedule,
    CostVariationReport, CostVariationRow, EndpointFamily, FMonotonicity, ENDPOINT_STEPS, MONO_RTOL, TOL_MONO,
};
pub use entropy::{
    entropy_report, ConvexityRow, CostReport, EntropyRow, IdentityRow, TransportRow, CONVEXITY_FLOOR, CONVEXITY_RTOL,
};
pub use path::{
    adapted_continuity_solve, cost_c0, default_window, energy_e0, geodesic_solve, shooting_check, AdaptedPath,
    GeodesicOutcome, ShootingCheck, WINDOW_FRACTION,
};
