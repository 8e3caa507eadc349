//! Cost variation along shifted windows, cost monotonicity for backward
//! heat endpoints, and monotonicity of `F = ∫(|∇log ρ|² + R^{H,f}) dμ`.
//!
//! Endpoint measures are tabulated on a uniform time grid that subdivides
//! the trajectory intervals; windows and shifts are whole numbers of grid
//! steps, so every endpoint is a grid sample.

use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::field::ScalarField;
use crate::par;
use crate::transport::frame::phi_at_node;
use crate::transport::{
    backward_heat_evolve, centered_derivative_field, heat_steps, masses_to_rho, substeps, Density, DescentOptions,
    MonotoneSeries, TrajectorySlices, FAMILY_STEPS,
};

use super::entropy::ricci_action;
use super::path::{adapted_continuity_solve, geodesic_from_masses, window_frame, GeodesicOutcome};

/// Absolute floor of the monotonicity tolerance.
pub const TOL_MONO: f64 = 1e-6;
/// Relative discretization-error allowance of monotone series.
pub const MONO_RTOL: f64 = 1e-3;

fn mono_tolerance(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| (MONO_RTOL * v.abs()).max(TOL_MONO)).collect()
}

/// Two endpoint measures tabulated as masses on a uniform time grid.
#[derive(Debug, Clone)]
pub struct EndpointFamily {
    /// Increasing, uniformly spaced times.
    pub times: Vec<f64>,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    /// Whether both follow the backward heat flow.
    pub heat: bool,
}

fn grid_steps(slices: &TrajectorySlices, j_start: usize, j_end: usize, min_steps: usize) -> Result<usize> {
    if j_end <= j_start || j_end >= slices.trajectory().len() {
        return Err(GrfError::InvalidArgument(format!("bad snapshot range {j_start}..{j_end}")));
    }
    Ok(substeps(slices, j_start, j_end)?.max(min_steps).max(1))
}

impl EndpointFamily {
    /// Backward heat flows of `mu1_end` and `mu2_end` (densities at snapshot
    /// `j_end`) down to snapshot `j_start`, with at least `min_steps` steps
    /// per trajectory interval.
    pub fn heat(
        slices: &TrajectorySlices,
        mu1_end: &Density,
        mu2_end: &Density,
        j_end: usize,
        j_start: usize,
        min_steps: usize,
    ) -> Result<Self> {
        let n = grid_steps(slices, j_start, j_end, min_steps)?;
        let end = slices.snapshot(j_end)?;
        let ends = [mu1_end.masses(&end), mu2_end.masses(&end)];
        let runs: Vec<Result<(Vec<f64>, Vec<Vec<f64>>)>> =
            par::map_jobs(&ends, |m| heat_steps(slices, m, j_end, j_start, n));
        let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let (_, second) = runs.pop().expect("two runs");
        let (times, first) = runs.pop().expect("two runs");
        Ok(EndpointFamily { times, first, second, heat: true })
    }

    /// The densities `mu1`, `mu2` (relative to snapshot `j_start`) held fixed
    /// and renormalized to unit mass under every slice of the grid.
    pub fn frozen(
        slices: &TrajectorySlices,
        mu1: &Density,
        mu2: &Density,
        j_end: usize,
        j_start: usize,
        min_steps: usize,
    ) -> Result<Self> {
        let n = grid_steps(slices, j_start, j_end, min_steps)?;
        let traj = slices.trajectory();
        let (t0, t1) = (traj.snapshot(j_start).t, traj.snapshot(j_end).t);
        let count = (j_end - j_start) * n;
        let times: Vec<f64> =
            (0..=count).map(|q| if q == count { t1 } else { t0 + (t1 - t0) * q as f64 / count as f64 }).collect();
        let tab = |mu: &Density| -> Result<Vec<Vec<f64>>> {
            times
                .iter()
                .map(|&t| {
                    let s = slices.at(t)?;
                    let m = mu.masses(&s);
                    let tot = par::pairwise_sum(&m);
                    Ok(m.into_iter().map(|v| v / tot).collect())
                })
                .collect()
        };
        let first = tab(mu1)?;
        let second = tab(mu2)?;
        Ok(EndpointFamily { times, first, second, heat: false })
    }

    /// Grid step.
    pub fn step(&self) -> f64 {
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    /// Number of grid steps closest to `len`, at least one.
    pub fn steps_for(&self, len: f64) -> usize {
        ((len / self.step()).round() as usize).max(1)
    }
}

/// Shifted windows `[t′ + u, t″ + u]` on an endpoint grid: window `i` starts
/// at grid index `start + i·stride` and spans `window` grid steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostSchedule {
    pub start: usize,
    pub window: usize,
    pub stride: usize,
    pub points: usize,
    /// Path intervals per window.
    pub intervals: usize,
}

impl CostSchedule {
    fn check(&self, family: &EndpointFamily) -> Result<()> {
        if self.window == 0 || self.stride == 0 || self.points == 0 || self.intervals < 2 {
            return Err(GrfError::InvalidArgument(format!("degenerate schedule {self:?}")));
        }
        let last = self.start + (self.points - 1) * self.stride + self.window;
        if last >= family.times.len() {
            return Err(GrfError::InvalidArgument(format!(
                "schedule reaches grid index {last}, family has {}",
                family.times.len()
            )));
        }
        Ok(())
    }

    fn first_index(&self, i: usize) -> usize {
        self.start + i * self.stride
    }

    /// Shifts `u` relative to the first window.
    pub fn shifts(&self, family: &EndpointFamily) -> Vec<f64> {
        (0..self.points).map(|i| family.times[self.first_index(i)] - family.times[self.start]).collect()
    }
}

/// Geodesics of every window of the schedule, solved independently.
fn solve_schedule(
    slices: &TrajectorySlices,
    family: &EndpointFamily,
    schedule: &CostSchedule,
    opts: DescentOptions,
) -> Result<Vec<GeodesicOutcome>> {
    schedule.check(family)?;
    let idx: Vec<usize> = (0..schedule.points).collect();
    let out: Vec<Result<GeodesicOutcome>> = par::map_jobs(&idx, |&i| {
        let a = schedule.first_index(i);
        let b = a + schedule.window;
        let (t0, t1) = (family.times[a], family.times[b]);
        let frame = window_frame(slices, t0, t1, schedule.intervals)?;
        geodesic_from_masses(frame, t0, t1, &family.first[a], &family.second[b], opts)
    });
    out.into_iter().collect()
}

/// One shift of the cost-variation comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostVariationRow {
    pub u: f64,
    pub cost: f64,
    /// Centered `d/du` of the cost.
    pub lhs: f64,
    /// `∫∫ |Rc^{H,f−φ}|² dμ dt`.
    pub bulk: f64,
    /// `[∫ φ(∂_uρ − R^{H,f}ρ + Δ_fρ) e^{-f}dV]` from `t′` to `t″`.
    pub boundary: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostVariationReport {
    pub u: Vec<f64>,
    pub costs: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rows: Vec<CostVariationRow>,
    pub converged: bool,
}

impl CostVariationReport {
    pub fn max_boundary(&self) -> f64 {
        self.rows.iter().fold(0.0_f64, |m, r| m.max(r.boundary.abs()))
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().fold(0.0_f64, |m, r| m.max(r.residual.abs()))
    }

    /// Largest `|lhs|` or `|rhs|`, the scale of the residual.
    pub fn scale(&self) -> f64 {
        self.rows.iter().fold(0.0_f64, |m, r| m.max(r.lhs.abs()).max(r.rhs.abs()))
    }
}

/// `∫ φ (∂_u m − A_t ρ)` at one end of a window: in mass form the boundary
/// integrand `∂_uρ − R^{H,f}ρ + Δ_fρ` becomes `∂_u m − A_t ρ`.
fn boundary_term(
    outcome: &GeodesicOutcome,
    series: &[Vec<f64>],
    index: usize,
    node: usize,
    du: f64,
) -> Result<f64> {
    let path = &outcome.path;
    let views: Vec<&[f64]> = series.iter().map(|v| v.as_slice()).collect();
    let dm = centered_derivative_field(&views, index, du).ok_or_else(|| {
        GrfError::InvalidArgument(format!("endpoint grid index {index} has no centered neighbours"))
    })?;
    let slice = path.node_slice(node);
    let rho = masses_to_rho(&path.masses()[node], &slice.w, slice.mesh().cell_volume());
    let a = slice.op.apply_a(&rho);
    let phi = phi_at_node(path.phi_mids(), node);
    Ok(par::sum_by(phi.len(), |i| phi[i] * (dm[i] - a[i])))
}

/// `d/du E₀` over shifted windows against `∫∫|Rc^{H,f−φ}|²dμdt` plus the
/// boundary terms, at every shift with two neighbours on each side (one
/// where only one exists).
pub fn verify_cost_variation(
    slices: &TrajectorySlices,
    family: &EndpointFamily,
    schedule: &CostSchedule,
    opts: DescentOptions,
) -> Result<CostVariationReport> {
    if schedule.points < 3 {
        return Err(GrfError::InvalidArgument("cost variation needs at least 3 shifts".into()));
    }
    let outcomes = solve_schedule(slices, family, schedule, opts)?;
    let u = schedule.shifts(family);
    let costs: Vec<f64> = outcomes.iter().map(|o| o.energy).collect();
    let du = family.step() * schedule.stride as f64;
    let grid = family.step();
    let mut rows = Vec::new();
    for i in 0..schedule.points {
        let Some(lhs) = crate::transport::centered_derivative(&costs, i, du) else {
            continue;
        };
        let o = &outcomes[i];
        let a = schedule.first_index(i);
        let b = a + schedule.window;
        let bulk = ricci_action(&o.path);
        let end = boundary_term(o, &family.second, b, o.path.intervals(), grid)?;
        let start = boundary_term(o, &family.first, a, 0, grid)?;
        let boundary = end - start;
        let rhs = bulk + boundary;
        rows.push(CostVariationRow { u: u[i], cost: costs[i], lhs, bulk, boundary, rhs, residual: lhs - rhs });
    }
    Ok(CostVariationReport {
        u,
        costs,
        residuals: outcomes.iter().map(|o| o.residual).collect(),
        rows,
        converged: outcomes.iter().all(|o| o.converged),
    })
}

/// `u ↦ C₀` over a schedule, with the bulk term `∫∫|Rc^{H,f−φ}|²dμdt` of
/// each minimizer as a positivity cross-check of the slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMonotonicity {
    pub series: MonotoneSeries,
    pub bulk: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl CostMonotonicity {
    pub fn pass(&self) -> bool {
        self.converged && self.series.nondecreasing
    }
}

pub fn run_cost_monotonicity(
    slices: &TrajectorySlices,
    family: &EndpointFamily,
    schedule: &CostSchedule,
    opts: DescentOptions,
) -> Result<CostMonotonicity> {
    if schedule.points < 5 {
        return Err(GrfError::InvalidArgument("cost monotonicity needs at least 5 shifts".into()));
    }
    let outcomes = solve_schedule(slices, family, schedule, opts)?;
    let values: Vec<f64> = outcomes.iter().map(|o| o.energy).collect();
    let tolerance = mono_tolerance(&values);
    let jobs: Vec<&GeodesicOutcome> = outcomes.iter().collect();
    let bulk = par::map_jobs(&jobs, |o| ricci_action(&o.path));
    Ok(CostMonotonicity {
        series: MonotoneSeries::new(schedule.shifts(family), values, tolerance),
        bulk,
        residuals: outcomes.iter().map(|o| o.residual).collect(),
        converged: outcomes.iter().all(|o| o.converged),
    })
}

/// `F(t)` along a backward heat flow and the residual of `∇φ = ∇log ρ`,
/// where `φ` solves the adapted continuity equation for the heat flow's
/// `∂_tρ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FMonotonicity {
    pub series: MonotoneSeries,
    /// `‖∇(φ − log ρ)‖ / ‖∇log ρ‖` in `L²(μ)` at each time (absolute when
    /// `ρ` is constant).
    pub identity_residual: Vec<f64>,
    pub mass_deviation: Vec<f64>,
}

/// `F` and the identity residual on one slice, for masses `m`.
fn f_functional(slice: &crate::flow::Slice, m: &[f64]) -> Result<(f64, f64)> {
    let mesh = *slice.mesh();
    let n = mesh.len();
    let dv = mesh.cell_volume();
    let rho = masses_to_rho(m, &slice.w, dv);
    let log_rho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let op = slice.op.with_coeff(&rho)?;
    let f = op.quadratic_form(&log_rho) + par::dot(&slice.r_hf, m);
    // Backward heat flow in mass form: ∂_t m = A ρ, so ∂_tρ = Aρ/(wΔV) + Rρ.
    let a = slice.op.apply_a(&rho);
    let drho: Vec<f64> = par::map_collect(n, |i| a[i] / (slice.w[i] * dv) + slice.r_hf[i] * rho[i]);
    let (phi, _) = adapted_continuity_solve(
        &ScalarField::from_vec(mesh, rho.clone())?,
        &ScalarField::from_vec(mesh, drho)?,
        slice,
    )?;
    let diff: Vec<f64> = par::map_collect(n, |i| phi.get(i) - log_rho[i]);
    let num = op.quadratic_form(&diff).max(0.0);
    let den = op.quadratic_form(&log_rho);
    let residual = if den > 1e-300 { (num / den).sqrt() } else { num.sqrt() };
    Ok((f, residual))
}

/// `F(t)` at every snapshot between `t_start` and `t_end` for the backward
/// heat flow of `mu_end`.
pub fn run_f_monotonicity(slices: &TrajectorySlices, mu_end: &Density, t_end: f64, t_start: f64) -> Result<FMonotonicity> {
    let heat = backward_heat_evolve(mu_end, slices, t_end, t_start)?;
    let j0 = {
        let traj = slices.trajectory();
        ((t_start - traj.t_start()) / traj.dt()).round() as usize
    };
    let ks: Vec<usize> = (0..heat.times.len()).collect();
    let out: Vec<Result<(f64, f64)>> = par::map_jobs(&ks, |&k| f_functional(&*slices.snapshot(j0 + k)?, &heat.masses[k]));
    let out = out.into_iter().collect::<Result<Vec<_>>>()?;
    let (values, identity_residual): (Vec<f64>, Vec<f64>) = out.into_iter().unzip();
    let tolerance = mono_tolerance(&values);
    Ok(FMonotonicity {
        series: MonotoneSeries::new(heat.times.clone(), values, tolerance),
        identity_residual,
        mass_deviation: heat.mass_deviation,
    })
}

/// Default number of grid steps per trajectory interval for endpoint
/// families.
pub const ENDPOINT_STEPS: usize = FAMILY_STEPS;
