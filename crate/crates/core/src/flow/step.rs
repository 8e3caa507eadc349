use crate::error::{GrfError, Result};
use crate::field::{PolyformField, ScalarField, SymTensorField};
use crate::forms::Convention;
use crate::geometry::{closedness_residual, TOL_CLOSED};

use super::{grf_rhs, FlowTrajectory, GeomState, Tangent};

/// Default safety factor against the parabolic time scale.
pub const C_CFL: f64 = 0.2;

/// `C_CFL · min_x (h_min² λ_min(g(x)))`.
pub fn dt_max(s: &GeomState) -> f64 {
    let h = s.mesh().min_spacing();
    C_CFL * h * h * s.g.min_eigenvalue()
}

fn combine(
    s: &GeomState,
    ks: &[&Tangent],
    coeffs: &[f64],
) -> Result<(SymTensorField, PolyformField, ScalarField)> {
    let mut dg = SymTensorField::zeros(*s.mesh());
    let mut dh = PolyformField::zeros(*s.mesh());
    let mut df = ScalarField::zeros(*s.mesh());
    for (k, &c) in ks.iter().zip(coeffs) {
        dg = dg.add_scaled(&k.dg, c)?;
        dh = dh.add_scaled(&k.dh, c)?;
        df = df.add_scaled(&k.df, c)?;
    }
    Ok((dg, dh, df))
}

/// One classical RK4 step. Rejects `dt > dt_max(s)` and re-checks SPD and
/// closedness of the result.
pub fn flow_step(conv: Convention, s: &GeomState, dt: f64) -> Result<GeomState> {
    if !(dt >= 0.0) {
        return Err(GrfError::InvalidArgument(format!("negative time step {dt}")));
    }
    let limit = dt_max(s);
    if dt > limit * (1.0 + 1e-12) {
        return Err(GrfError::Cfl { dt, dt_max: limit });
    }
    if dt == 0.0 {
        return Ok(s.clone());
    }
    let k1 = grf_rhs(conv, s)?;
    let s2 = s.offset(&k1.dg, &k1.dh, &k1.df, 0.5 * dt)?;
    let k2 = grf_rhs(conv, &s2)?;
    let s3 = s.offset(&k2.dg, &k2.dh, &k2.df, 0.5 * dt)?;
    let k3 = grf_rhs(conv, &s3)?;
    let s4 = s.offset(&k3.dg, &k3.dh, &k3.df, dt)?;
    let k4 = grf_rhs(conv, &s4)?;
    let (dg, dh, df) = combine(s, &[&k1, &k2, &k3, &k4], &[1.0, 2.0, 2.0, 1.0])?;
    let mut next = s.offset(&dg, &dh, &df, dt / 6.0)?;
    next.t = s.t + dt;
    let residual = closedness_residual(&next.h);
    if residual > TOL_CLOSED {
        return Err(GrfError::NotClosed { residual });
    }
    Ok(next)
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if horizon == 0.0 {
        return Ok(0);
    }
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(GrfError::InvalidArgument(format!("horizon {horizon} and step {dt} must be positive")));
    }
    let n = (horizon / dt).round();
    if (n * dt - horizon).abs() > 1e-9 * horizon {
        return Err(GrfError::InvalidArgument(format!("horizon {horizon} is not a multiple of dt {dt}")));
    }
    Ok(n as usize)
}

/// Integrates to `t0 + horizon`; on failure returns the trajectory recorded
/// so far together with the error.
pub fn evolve_partial(
    conv: Convention,
    s0: &GeomState,
    horizon: f64,
    dt: f64,
) -> (FlowTrajectory, Option<GrfError>) {
    let mut snaps = vec![s0.clone()];
    let n = match step_count(horizon, dt) {
        Ok(n) => n,
        Err(e) => return (FlowTrajectory::from_parts(conv, dt, snaps), Some(e)),
    };
    let mut cur = s0.clone();
    for j in 1..=n {
        match flow_step(conv, &cur, dt) {
            Ok(mut next) => {
                // Accumulating `t + dt` would drift; pin times to the grid.
                next.t = s0.t + j as f64 * dt;
                snaps.push(next.clone());
                cur = next;
            }
            Err(e) => return (FlowTrajectory::from_parts(conv, dt, snaps), Some(e)),
        }
    }
    (FlowTrajectory::from_parts(conv, dt, snaps), None)
}

pub fn evolve(conv: Convention, s0: &GeomState, horizon: f64, dt: f64) -> Result<FlowTrajectory> {
    match evolve_partial(conv, s0, horizon, dt) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}
