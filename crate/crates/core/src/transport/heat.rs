//! Backward (conjugate) heat flow of measures along a trajectory.
//!
//! For masses `m = ρ w ΔV` the flow reads `∂_t m = A_t ρ`, with `A_t` the
//! weighted operator of the slice at time `t`; it is integrated in reversed
//! time `τ = t_end − t`, where it is dissipative. Column sums of `A_t`
//! vanish, so total mass is conserved to rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::flow::{FlowTrajectory, Slice};
use crate::geometry::weighted_laplacian_nodal;
use crate::par;

use super::density::{check_floor, masses_to_rho, Density};

/// Stability constant of the reversed-time RK4 steps, relative to
/// `h_min² λ_min(g)`.
pub const C_HEAT: f64 = 0.2;

/// Lazily built slices of a trajectory, shared between solvers.
pub struct TrajectorySlices<'a> {
    traj: &'a FlowTrajectory,
    cache: Mutex<HashMap<u64, Arc<Slice>>>,
}

impl<'a> TrajectorySlices<'a> {
    pub fn new(traj: &'a FlowTrajectory) -> Self {
        TrajectorySlices { traj, cache: Mutex::new(HashMap::new()) }
    }

    pub fn trajectory(&self) -> &FlowTrajectory {
        self.traj
    }

    /// Slice at time `t`; snapshots are used directly, other times are
    /// linearly interpolated.
    pub fn at(&self, t: f64) -> Result<Arc<Slice>> {
        let key = t.to_bits();
        if let Some(s) = self.cache.lock().expect("slice cache").get(&key) {
            return Ok(s.clone());
        }
        let state = self.traj.interpolate(t)?;
        let slice = Arc::new(state.slice(self.traj.convention())?);
        self.cache.lock().expect("slice cache").insert(key, slice.clone());
        Ok(slice)
    }

    /// Slice of snapshot `j`.
    pub fn snapshot(&self, j: usize) -> Result<Arc<Slice>> {
        self.at(self.traj.snapshot(j).t)
    }
}

/// Densities of a backward heat flow at the snapshot times of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct HeatSeries {
    /// Increasing snapshot times.
    pub times: Vec<f64>,
    #[serde(skip)]
    pub masses: Vec<Vec<f64>>,
    /// `|∫ρ e^{-f}dV − 1|` at each time.
    pub mass_deviation: Vec<f64>,
    pub substeps: usize,
}

impl HeatSeries {
    pub fn density(&self, k: usize, slice: &Slice) -> Result<Density> {
        Density::from_masses(&self.masses[k], slice)
    }
}

fn snapshot_index(traj: &FlowTrajectory, t: f64) -> Result<usize> {
    let x = if traj.dt() > 0.0 { (t - traj.t_start()) / traj.dt() } else { 0.0 };
    let j = x.round();
    if (x - j).abs() > 1e-9 || j < 0.0 || j as usize >= traj.len() {
        return Err(GrfError::InvalidArgument(format!("t = {t} is not a snapshot time")));
    }
    Ok(j as usize)
}

/// Number of RK4 substeps per trajectory interval.
pub(crate) fn substeps(slices: &TrajectorySlices, j0: usize, j1: usize) -> Result<usize> {
    let traj = slices.trajectory();
    let mesh = *traj.snapshot(0).mesh();
    let h = mesh.min_spacing();
    let mut lam = f64::INFINITY;
    for j in j0..=j1 {
        lam = lam.min(traj.snapshot(j).g.min_eigenvalue());
    }
    let dt_max = C_HEAT * h * h * lam;
    Ok(((traj.dt() / dt_max).ceil() as usize).max(1))
}

fn heat_rate(slice: &Slice, m: &[f64]) -> Vec<f64> {
    let rho = masses_to_rho(m, &slice.w, slice.mesh().cell_volume());
    // dm/dτ = −A ρ
    slice.op.apply_a(&rho).into_iter().map(|v| -v).collect()
}

/// Evolves masses given at snapshot `j_end` back to snapshot `j_start` with
/// `nsub` RK4 steps per trajectory interval. Returns the masses at every
/// step in increasing time, `(j_end − j_start)·nsub + 1` entries, together
/// with their times.
pub(crate) fn heat_steps(
    slices: &TrajectorySlices,
    m_end: &[f64],
    j_end: usize,
    j_start: usize,
    nsub: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let traj = slices.trajectory();
    let mut out = vec![m_end.to_vec()];
    let mut times = vec![traj.snapshot(j_end).t];
    let mut m = m_end.to_vec();
    for j in (j_start..j_end).rev() {
        let t_hi = traj.snapshot(j + 1).t;
        let t_lo = traj.snapshot(j).t;
        let dtau = (t_hi - t_lo) / nsub as f64;
        for q in 0..nsub {
            let (t0, th, t1) = step_times(t_hi, t_lo, dtau, q, nsub);
            let (s0, sh, s1) = (slices.at(t0)?, slices.at(th)?, slices.at(t1)?);
            let k1 = heat_rate(&s0, &m);
            let y2: Vec<f64> = par::map_collect(m.len(), |i| m[i] + 0.5 * dtau * k1[i]);
            let k2 = heat_rate(&sh, &y2);
            let y3: Vec<f64> = par::map_collect(m.len(), |i| m[i] + 0.5 * dtau * k2[i]);
            let k3 = heat_rate(&sh, &y3);
            let y4: Vec<f64> = par::map_collect(m.len(), |i| m[i] + dtau * k3[i]);
            let k4 = heat_rate(&s1, &y4);
            m = par::map_collect(m.len(), |i| m[i] + dtau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            let rho = masses_to_rho(&m, &s1.w, s1.mesh().cell_volume());
            check_floor(&rho, t1)?;
            out.push(m.clone());
            times.push(t1);
        }
    }
    out.reverse();
    times.reverse();
    Ok((times, out))
}

/// Start, half-step and end times of reversed step `q` on `[t_lo, t_hi]`;
/// the interval ends are used exactly.
pub(crate) fn step_times(t_hi: f64, t_lo: f64, dtau: f64, q: usize, nsub: usize) -> (f64, f64, f64) {
    let t0 = if q == 0 { t_hi } else { t_hi - q as f64 * dtau };
    let th = t_hi - (q as f64 + 0.5) * dtau;
    let t1 = if q + 1 == nsub { t_lo } else { t_hi - (q + 1) as f64 * dtau };
    (t0, th, t1)
}

/// Masses at every snapshot from `j_start` to `j_end` (increasing time).
pub(crate) fn heat_masses(slices: &TrajectorySlices, m_end: &[f64], j_end: usize, j_start: usize, nsub: usize) -> Result<Vec<Vec<f64>>> {
    let (_, all) = heat_steps(slices, m_end, j_end, j_start, nsub)?;
    Ok(all.into_iter().step_by(nsub).collect())
}

/// Backward heat flow of `mu_end` (a density at snapshot time `t_end`) down
/// to `t_start`, reported at every snapshot time.
pub fn backward_heat_evolve(mu_end: &Density, slices: &TrajectorySlices, t_end: f64, t_start: f64) -> Result<HeatSeries> {
    let traj = slices.trajectory();
    if !(t_start < t_end) {
        return Err(GrfError::InvalidArgument(format!("need t_start < t_end, got {t_start} and {t_end}")));
    }
    let j_end = snapshot_index(traj, t_end)?;
    let j_start = snapshot_index(traj, t_start)?;
    let end_slice = slices.snapshot(j_end)?;
    let nsub = substeps(slices, j_start, j_end)?;
    let masses = heat_masses(slices, &mu_end.masses(&end_slice), j_end, j_start, nsub)?;
    let total0 = par::pairwise_sum(&masses[masses.len() - 1]);
    let times: Vec<f64> = (j_start..=j_end).map(|j| traj.snapshot(j).t).collect();
    let mass_deviation = masses.iter().map(|m| (par::pairwise_sum(m) - total0).abs()).collect();
    Ok(HeatSeries { times, masses, mass_deviation, substeps: nsub })
}

/// Max-norm of `∂_tρ + Δ_fρ − R^{H,f}ρ` at interior snapshot times, with
/// centered differences in `t` and the nodal weighted Laplacian.
pub fn heat_density_residual(series: &HeatSeries, slices: &TrajectorySlices, j_start: usize) -> Result<Vec<f64>> {
    let n = series.times.len();
    let rho: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let s = slices.snapshot(j_start + k)?;
            Ok(masses_to_rho(&series.masses[k], &s.w, s.mesh().cell_volume()))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 1..n.saturating_sub(1) {
        let s = slices.snapshot(j_start + k)?;
        let dt = series.times[k + 1] - series.times[k - 1];
        let lap = weighted_laplacian_nodal(&s.geo, s.f.values(), &rho[k]);
        let res: Vec<f64> =
            (0..rho[k].len()).map(|i| (rho[k + 1][i] - rho[k - 1][i]) / dt + lap[i] - s.r_hf[i] * rho[k][i]).collect();
        out.push(par::max_abs(&res));
    }
    Ok(out)
}
