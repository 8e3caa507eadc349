use std::sync::Arc;

use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::field::ScalarField;
use crate::flow::Slice;
use crate::mesh::MeshSpec;
use crate::par;
use crate::transport::frame::PathFrame;
use crate::transport::{
    continuity_solve, descend, masses_to_rho, rho_to_masses, Density, DescentOptions, SolveStats, TrajectorySlices,
    RHO_FLOOR,
};

/// Window length relative to the parabolic time scale `L²/(4π²)` of the
/// longest axis.
pub const WINDOW_FRACTION: f64 = 0.02;

const FIXED_POINT_TOL: f64 = 1e-14;
const FIXED_POINT_ITER: usize = 200;

/// Default window length `t″ − t′` on `mesh`.
pub fn default_window(mesh: &MeshSpec) -> f64 {
    let l = mesh.lengths().iter().fold(0.0_f64, |a, &b| a.max(b));
    WINDOW_FRACTION * l * l / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
}

/// Path of measures over a time window `[t′, t″]` of a trajectory, split
/// into equal intervals. Node `j` sits at `t′ + jΔ` and carries masses
/// against that slice; potentials live at interval midpoints.
#[derive(Debug, Clone)]
pub struct AdaptedPath {
    t_start: f64,
    t_end: f64,
    frame: PathFrame,
    masses: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    stats: Vec<SolveStats>,
}

pub(crate) fn window_frame(slices: &TrajectorySlices, t_start: f64, t_end: f64, m: usize) -> Result<PathFrame> {
    let traj = slices.trajectory();
    if !(t_start < t_end) {
        return Err(GrfError::InvalidArgument(format!("need t′ < t″, got {t_start} and {t_end}")));
    }
    let slack = 1e-12 * (1.0 + traj.t_end().abs());
    if t_start < traj.t_start() - slack || t_end > traj.t_end() + slack {
        return Err(GrfError::InvalidArgument(format!(
            "window [{t_start}, {t_end}] outside trajectory [{}, {}]",
            traj.t_start(),
            traj.t_end()
        )));
    }
    if m == 0 {
        return Err(GrfError::InvalidArgument("path needs at least one interval".into()));
    }
    let step = (t_end - t_start) / m as f64;
    let node_t = |j: usize| if j == m { t_end } else { t_start + j as f64 * step };
    let nodes = (0..=m).map(|j| slices.at(node_t(j))).collect::<Result<Vec<_>>>()?;
    let mids = (0..m).map(|k| slices.at(t_start + (k as f64 + 0.5) * step)).collect::<Result<Vec<_>>>()?;
    Ok(PathFrame { nodes, mids, step, adapted: true })
}

impl AdaptedPath {
    pub(crate) fn from_masses(t_start: f64, t_end: f64, frame: PathFrame, masses: Vec<Vec<f64>>) -> Result<Self> {
        let pot = frame.solve(&masses)?;
        Ok(AdaptedPath { t_start, t_end, frame, masses, phi: pot.phi, stats: pot.stats })
    }

    /// Path through the given densities, one per node, each relative to
    /// `e^{-f}dV` of its own time.
    pub fn from_densities(slices: &TrajectorySlices, t_start: f64, t_end: f64, rhos: &[ScalarField]) -> Result<Self> {
        if rhos.len() < 2 {
            return Err(GrfError::InvalidArgument("path needs at least two nodes".into()));
        }
        let frame = window_frame(slices, t_start, t_end, rhos.len() - 1)?;
        let dv = frame.dv();
        let masses = rhos
            .iter()
            .zip(&frame.nodes)
            .map(|(r, s)| {
                s.mesh().check_same(r.mesh())?;
                Ok(rho_to_masses(r.values(), &s.w, dv))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_masses(t_start, t_end, frame, masses)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn intervals(&self) -> usize {
        self.phi.len()
    }

    /// Time step `Δ` between nodes.
    pub fn step(&self) -> f64 {
        self.frame.step
    }

    /// Node times.
    pub fn t_grid(&self) -> Vec<f64> {
        self.frame.nodes.iter().map(|s| s.t).collect()
    }

    /// Interval midpoint times.
    pub fn mid_times(&self) -> Vec<f64> {
        self.frame.mids.iter().map(|s| s.t).collect()
    }

    pub fn node_slice(&self, j: usize) -> &Slice {
        &self.frame.nodes[j]
    }

    pub fn node_slices(&self) -> &[Arc<Slice>] {
        &self.frame.nodes
    }

    pub fn mid_slice(&self, k: usize) -> &Slice {
        &self.frame.mids[k]
    }

    pub fn masses(&self) -> &[Vec<f64>] {
        &self.masses
    }

    pub fn density(&self, j: usize) -> Result<Density> {
        Density::from_masses(&self.masses[j], &self.frame.nodes[j])
    }

    /// Potential on interval `k`, mean zero against that slice's weight.
    pub fn phi_mid(&self, k: usize) -> &[f64] {
        &self.phi[k]
    }

    pub fn phi_mids(&self) -> &[Vec<f64>] {
        &self.phi
    }

    pub fn solve_stats(&self) -> &[SolveStats] {
        &self.stats
    }

    pub(crate) fn frame(&self) -> &PathFrame {
        &self.frame
    }

    /// Mass-projected defect of `∂_tφ + ½|∇φ|² − ½R^{H,f}` at interior
    /// nodes, maximized over nodes.
    pub fn geodesic_residual(&self) -> f64 {
        if self.intervals() < 2 {
            return 0.0;
        }
        self.frame.gradient(&self.masses, &self.phi).1
    }
}

/// `E₀ = ½ ∫∫ (|∇φ|² + R^{H,f}) dμ dt`: midpoint rule for the kinetic part,
/// trapezoidal rule for the curvature part.
pub fn energy_e0(path: &AdaptedPath) -> Result<f64> {
    path.frame.energy(&path.masses, &path.phi)
}

/// Potential of `∂_tρ = −div_f(ρ∇φ) + R^{H,f}ρ` on one slice.
pub fn adapted_continuity_solve(rho: &ScalarField, drho_dt: &ScalarField, slice: &Slice) -> Result<(ScalarField, SolveStats)> {
    slice.mesh().check_same(drho_dt.mesh())?;
    slice.mesh().check_same(rho.mesh())?;
    let sigma = ScalarField::from_vec(
        *slice.mesh(),
        par::map_collect(rho.values().len(), |i| drho_dt.get(i) - slice.r_hf[i] * rho.get(i)),
    )?;
    continuity_solve(rho, &sigma, slice)
}

#[derive(Debug, Clone)]
pub struct GeodesicOutcome {
    pub path: AdaptedPath,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `E₀` over paths from `mu_start` (a density at `t_start`) to
/// `mu_end` (at `t_end`) on `m` intervals, starting from linear
/// interpolation of the masses. Non-convergence is reported, not raised.
pub fn geodesic_solve(
    mu_start: &Density,
    mu_end: &Density,
    slices: &TrajectorySlices,
    t_start: f64,
    t_end: f64,
    m: usize,
    opts: DescentOptions,
) -> Result<GeodesicOutcome> {
    let frame = window_frame(slices, t_start, t_end, m)?;
    let m0 = mu_start.masses(&frame.nodes[0]);
    let m1 = mu_end.masses(&frame.nodes[m]);
    geodesic_from_masses(frame, t_start, t_end, &m0, &m1, opts)
}

pub(crate) fn geodesic_from_masses(
    frame: PathFrame,
    t_start: f64,
    t_end: f64,
    m0: &[f64],
    m1: &[f64],
    opts: DescentOptions,
) -> Result<GeodesicOutcome> {
    let init = frame.linear_masses(m0, m1);
    let out = descend(&frame, init, opts)?;
    let path = AdaptedPath { t_start, t_end, frame, masses: out.masses, phi: out.pot.phi, stats: out.pot.stats };
    Ok(GeodesicOutcome {
        path,
        energy: out.energy,
        residual: out.residual,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// `C₀ = inf E₀` between `mu_start` at `t_start` and `mu_end` at `t_end`;
/// a descent that does not converge is an error.
pub fn cost_c0(
    mu_start: &Density,
    mu_end: &Density,
    slices: &TrajectorySlices,
    t_start: f64,
    t_end: f64,
    m: usize,
    opts: DescentOptions,
) -> Result<f64> {
    let out = geodesic_solve(mu_start, mu_end, slices, t_start, t_end, m, opts)?;
    if !out.converged {
        return Err(GrfError::NotConverged {
            what: "adapted geodesic".into(),
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    Ok(out.energy)
}

/// Forward integration of the discrete geodesic system from the first node
/// and first potential of a path, compared with the path itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingCheck {
    pub energy_descent: f64,
    pub energy_shooting: f64,
    /// `|E_shoot − E_descent| / |E_descent|`.
    pub relative_gap: f64,
    /// `Σ|m_shoot − m| / Σ m` at the final node.
    pub endpoint_mismatch: f64,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn fixed_point<F>(what: &str, init: Vec<f64>, mut map: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut cur = init;
    for _ in 0..FIXED_POINT_ITER {
        let next = map(&cur)?;
        let diff = max_abs_diff(&next, &cur);
        let scale = par::max_abs(&next).max(1e-300);
        cur = next;
        if diff <= FIXED_POINT_TOL * scale {
            return Ok(cur);
        }
    }
    let residual = max_abs_diff(&map(&cur)?, &cur);
    Err(GrfError::NotConverged { what: what.into(), iterations: FIXED_POINT_ITER, residual })
}

/// Integrates `φ_{k+½} = φ_{k−½} − Δ(¼(e_{k−½} + e_{k+½}) − ½R_k)` and
/// `m_{k+1} = m_k + Δ A_{ρ̄} φ_{k+½}` forward; each implicit step is solved
/// by fixed-point iteration.
pub(crate) fn shoot(frame: &PathFrame, m0: &[f64], phi_half: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let m = frame.intervals();
    let dt = frame.step;
    let dv = frame.dv();
    let mut masses = vec![m0.to_vec()];
    let mut phis: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let phi = if k == 0 {
            phi_half.to_vec()
        } else {
            let prev = &phis[k - 1];
            let e_prev = frame.grad_sq_at(k - 1, prev);
            let r = &frame.nodes[k].r_hf;
            fixed_point("shooting potential step", prev.clone(), |cur| {
                let e = frame.grad_sq_at(k, cur);
                Ok(par::map_collect(cur.len(), |i| prev[i] - dt * (0.25 * (e_prev[i] + e[i]) - 0.5 * r[i])))
            })?
        };
        let mk = masses[k].clone();
        let slice = &frame.mids[k];
        let next = fixed_point("shooting mass step", mk.clone(), |cur| {
            let mbar: Vec<f64> = par::map_collect(cur.len(), |i| 0.5 * (mk[i] + cur[i]));
            let rho = masses_to_rho(&mbar, &slice.w, dv);
            if let Some(node) = rho.iter().position(|v| !(*v >= RHO_FLOOR)) {
                return Err(GrfError::BelowFloor { node, value: rho[node], t: slice.t });
            }
            let a = slice.op.with_coeff(&rho)?.apply_a(&phi);
            Ok(par::map_collect(cur.len(), |i| mk[i] + dt * a[i]))
        })?;
        masses.push(next);
        phis.push(phi);
    }
    Ok((masses, phis))
}

/// Cross-validates a descended path against the shooting integrator.
pub fn shooting_check(path: &AdaptedPath) -> Result<ShootingCheck> {
    let frame = &path.frame;
    let (masses, phis) = shoot(frame, &path.masses[0], &path.phi[0])?;
    let energy_descent = energy_e0(path)?;
    let energy_shooting = frame.energy(&masses, &phis)?;
    let last = masses.len() - 1;
    let mismatch = par::sum_by(masses[last].len(), |i| (masses[last][i] - path.masses[last][i]).abs())
        / par::pairwise_sum(&path.masses[last]);
    Ok(ShootingCheck {
        energy_descent,
        energy_shooting,
        relative_gap: (energy_shooting - energy_descent).abs() / energy_descent.abs().max(1e-300),
        endpoint_mismatch: mismatch,
    })
}
