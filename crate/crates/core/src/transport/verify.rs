//! Time-derivative of the transport energy along a flow, and monotonicity
//! of Wasserstein distances between backward heat flows.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::flow::Slice;
use crate::geometry::{gradient, h_squared_field, hessian};
use crate::linalg::{bilinear, sym_inner};
use crate::par;

use super::density::{masses_to_rho, Density};
use super::frame::phi_at_node;
use super::heat::{backward_heat_evolve, heat_steps, step_times, substeps, TrajectorySlices};
use super::path::{energy_e, MeasurePath};
use super::wasserstein::wasserstein_oracle;

/// Minimum number of time steps per trajectory interval in a path family.
pub const FAMILY_STEPS: usize = 32;

/// Two-parameter family of node masses `m[t][s][x]` on a uniform time grid
/// that subdivides the trajectory intervals between two snapshots.
#[derive(Debug, Clone)]
pub struct PathFamily {
    /// Increasing, uniformly spaced times.
    pub times: Vec<f64>,
    pub masses: Vec<Vec<Vec<f64>>>,
    /// Time indices at the midpoints of the trajectory intervals, where the
    /// interpolated background is smooth across the derivative stencil.
    pub rows: Vec<usize>,
}

fn family_steps(slices: &TrajectorySlices, j_start: usize, j_end: usize) -> Result<usize> {
    let n = substeps(slices, j_start, j_end)?.max(FAMILY_STEPS);
    Ok(n + n % 2)
}

fn family_times(slices: &TrajectorySlices, j_end: usize, j_start: usize, n: usize) -> Vec<f64> {
    let traj = slices.trajectory();
    let mut times = vec![traj.snapshot(j_end).t];
    for j in (j_start..j_end).rev() {
        let (hi, lo) = (traj.snapshot(j + 1).t, traj.snapshot(j).t);
        let dtau = (hi - lo) / n as f64;
        for q in 0..n {
            times.push(step_times(hi, lo, dtau, q, n).2);
        }
    }
    times.reverse();
    times
}

fn check_window(j_end: usize, j_start: usize) -> Result<()> {
    if j_end <= j_start {
        return Err(GrfError::InvalidArgument(format!("need j_start < j_end, got {j_start} and {j_end}")));
    }
    Ok(())
}

/// Every node of `path` (a path at snapshot `j_end`) flowed backwards by
/// the conjugate heat equation down to snapshot `j_start`.
pub fn heat_family(slices: &TrajectorySlices, path: &MeasurePath, j_end: usize, j_start: usize) -> Result<PathFamily> {
    check_window(j_end, j_start)?;
    let n = family_steps(slices, j_start, j_end)?;
    let per_s: Vec<Result<(Vec<f64>, Vec<Vec<f64>>)>> =
        par::map_jobs(path.masses(), |m| heat_steps(slices, m, j_end, j_start, n));
    let per_s: Vec<(Vec<f64>, Vec<Vec<f64>>)> = per_s.into_iter().collect::<Result<_>>()?;
    let times = per_s[0].0.clone();
    let masses = (0..times.len()).map(|q| per_s.iter().map(|s| s.1[q].clone()).collect()).collect();
    let rows = (0..j_end - j_start).map(|k| k * n + n / 2).collect();
    Ok(PathFamily { times, masses, rows })
}

/// The densities of `path` held fixed in time and renormalized to unit
/// mass under each slice: a family whose endpoints do not follow the heat
/// flow.
pub fn frozen_family(slices: &TrajectorySlices, path: &MeasurePath, j_end: usize, j_start: usize) -> Result<PathFamily> {
    check_window(j_end, j_start)?;
    let n = family_steps(slices, j_start, j_end)?;
    let times = family_times(slices, j_end, j_start, n);
    let end = path.slice();
    let dv = end.mesh().cell_volume();
    let rhos: Vec<Vec<f64>> = path.masses().iter().map(|m| masses_to_rho(m, &end.w, dv)).collect();
    let masses = times
        .iter()
        .map(|&t| {
            let s = slices.at(t)?;
            Ok(rhos
                .iter()
                .map(|r| {
                    let m: Vec<f64> = r.iter().zip(&s.w).map(|(a, b)| a * b * dv).collect();
                    let tot = par::pairwise_sum(&m);
                    m.into_iter().map(|v| v / tot).collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows = (0..j_end - j_start).map(|k| k * n + n / 2).collect();
    Ok(PathFamily { times, masses, rows })
}

/// Centered derivative of a uniformly sampled series at index `j`: fourth
/// order where two neighbours exist on each side, second order otherwise.
pub(crate) fn centered_derivative(v: &[f64], j: usize, dt: f64) -> Option<f64> {
    let n = v.len();
    if j >= 2 && j + 2 < n {
        Some((-v[j + 2] + 8.0 * v[j + 1] - 8.0 * v[j - 1] + v[j - 2]) / (12.0 * dt))
    } else if j >= 1 && j + 1 < n {
        Some((v[j + 1] - v[j - 1]) / (2.0 * dt))
    } else {
        None
    }
}

pub(crate) fn centered_derivative_field(v: &[&[f64]], j: usize, dt: f64) -> Option<Vec<f64>> {
    let n = v.len();
    if j >= 2 && j + 2 < n {
        Some(
            (0..v[j].len())
                .map(|i| (-v[j + 2][i] + 8.0 * v[j + 1][i] - 8.0 * v[j - 1][i] + v[j - 2][i]) / (12.0 * dt))
                .collect(),
        )
    } else if j >= 1 && j + 1 < n {
        Some((0..v[j].len()).map(|i| (v[j + 1][i] - v[j - 1][i]) / (2.0 * dt)).collect())
    } else {
        None
    }
}

/// One time of the energy-derivative comparison. Every integral is against
/// `e^{-f}dV` of that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyDerivativeRow {
    pub t: f64,
    pub energy: f64,
    /// Centered `dE/dt`.
    pub lhs: f64,
    /// `[∫φ(∂_tρ + Δ_fρ − Rρ)]_{s=0}^{1}`.
    pub boundary: f64,
    /// `∫∫|∇²φ|²ρ`.
    pub hessian: f64,
    /// `¼∫∫H²(∇φ,∇φ)ρ`.
    pub h_squared: f64,
    /// `−∫∫(∂_sφ + ½|∇φ|²)(∂_tρ + Δ_fρ − Rρ)`.
    pub transport: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyDerivativeReport {
    pub rows: Vec<EnergyDerivativeRow>,
}

impl EnergyDerivativeReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }

    pub fn max_boundary(&self) -> f64 {
        self.rows.iter().map(|r| r.boundary.abs()).fold(0.0, f64::max)
    }

    pub fn min_lhs(&self) -> f64 {
        self.rows.iter().map(|r| r.lhs).fold(f64::INFINITY, f64::min)
    }

    /// Largest term magnitude, for relative reporting.
    pub fn scale(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.lhs.abs().max(r.hessian.abs()).max(r.h_squared.abs()).max(r.transport.abs()))
            .fold(0.0, f64::max)
    }
}

/// Compares the centered time derivative of `E(t)` along `family` with the
/// right-hand side assembled term by term, at every row of the family. In
/// measure form the defect `∂_tρ + Δ_fρ − R^{H,f}ρ` is `(∂_t m − A_t ρ)/(w ΔV)`.
pub fn verify_energy_derivative(slices: &TrajectorySlices, family: &PathFamily) -> Result<EnergyDerivativeReport> {
    let nt = family.times.len();
    if nt < 5 || family.rows.iter().any(|&r| r < 2 || r + 2 >= nt) {
        return Err(GrfError::TooFewSnapshots { needed: 5, got: nt });
    }
    let dt = (family.times[nt - 1] - family.times[0]) / (nt - 1) as f64;
    let mut idx: Vec<usize> = family.rows.iter().flat_map(|&r| r - 2..=r + 2).collect();
    idx.sort_unstable();
    idx.dedup();
    let paths: Vec<Result<MeasurePath>> = par::map_jobs(&idx, |&q| {
        MeasurePath::from_masses(slices.at(family.times[q])?, family.masses[q].clone())
    });
    let paths: Vec<MeasurePath> = paths.into_iter().collect::<Result<_>>()?;
    let at = |q: usize| idx.binary_search(&q).expect("stencil index");
    let mut rows = Vec::new();
    for &q in &family.rows {
        let local: Vec<f64> = (q - 2..=q + 2).map(|p| energy_e(&paths[at(p)])).collect::<Result<_>>()?;
        let lhs = centered_derivative(&local, 2, dt).expect("five-point stencil");
        let slice = slices.at(family.times[q])?;
        let path = &paths[at(q)];
        let m = path.intervals();
        let ds = 1.0 / m as f64;
        let dv = slice.mesh().cell_volume();
        // Defect at each path node.
        let defect: Vec<Vec<f64>> = (0..=m)
            .map(|k| {
                let series: Vec<&[f64]> = (q - 2..=q + 2).map(|p| family.masses[p][k].as_slice()).collect();
                let dm = centered_derivative_field(&series, 2, dt).expect("five-point stencil");
                let rho = masses_to_rho(&family.masses[q][k], &slice.w, dv);
                let arho = slice.op.apply_a(&rho);
                dm.iter().zip(&arho).map(|(a, b)| a - b).collect()
            })
            .collect();
        let phi0 = phi_at_node(path.phi_mids(), 0);
        let phim = phi_at_node(path.phi_mids(), m);
        let boundary = par::dot(&phim, &defect[m]) - par::dot(&phi0, &defect[0]);
        let terms = bulk_terms(&slice, path, &defect)?;
        let (hess, h2, transport) = (terms.0 * ds, terms.1 * ds, terms.2 * ds);
        let rhs = boundary + hess + h2 + transport;
        rows.push(EnergyDerivativeRow {
            t: family.times[q],
            energy: local[2],
            lhs,
            boundary,
            hessian: hess,
            h_squared: h2,
            transport,
            rhs,
            residual: lhs - rhs,
        });
    }
    Ok(EnergyDerivativeReport { rows })
}

/// Sums over interval midpoints of the three bulk integrands (without the
/// factor `Δs`).
fn bulk_terms(slice: &Arc<Slice>, path: &MeasurePath, defect: &[Vec<f64>]) -> Result<(f64, f64, f64)> {
    let geo = &slice.geo;
    let mesh = *slice.mesh();
    let d = mesh.dim();
    let m = path.intervals();
    let ds = 1.0 / m as f64;
    let phi = path.phi_mids();
    let h2 = h_squared_field(slice.conv, geo, &slice.h);
    let frame = path.frame();
    let e = frame.grad_sq(phi);
    let ks: Vec<usize> = (0..m).collect();
    let parts: Vec<(f64, f64, f64)> = par::map_jobs(&ks, |&k| {
        let mbar: Vec<f64> = (0..mesh.len()).map(|i| 0.5 * (path.masses()[k][i] + path.masses()[k + 1][i])).collect();
        let dphi: Vec<f64> = if m < 3 {
            vec![0.0; mesh.len()]
        } else if k == 0 {
            (0..mesh.len()).map(|i| (-3.0 * phi[0][i] + 4.0 * phi[1][i] - phi[2][i]) / (2.0 * ds)).collect()
        } else if k == m - 1 {
            (0..mesh.len()).map(|i| (3.0 * phi[m - 1][i] - 4.0 * phi[m - 2][i] + phi[m - 3][i]) / (2.0 * ds)).collect()
        } else {
            (0..mesh.len()).map(|i| (phi[k + 1][i] - phi[k - 1][i]) / (2.0 * ds)).collect()
        };
        let grad = gradient(geo, &phi[k]);
        let hess = hessian(geo, &phi[k]);
        let hs = par::sum_by(mesh.len(), |i| sym_inner(geo.ginv(i), hess.at(i), hess.at(i), d) * mbar[i]);
        let hh = par::sum_by(mesh.len(), |i| 0.25 * bilinear(h2.at(i), &grad[i], &grad[i], d) * mbar[i]);
        let tr = -par::sum_by(mesh.len(), |i| {
            (dphi[i] + 0.5 * e[k][i]) * 0.5 * (defect[k][i] + defect[k + 1][i])
        });
        (hs, hh, tr)
    });
    let mut out = (0.0, 0.0, 0.0);
    for p in parts {
        out.0 += p.0;
        out.1 += p.1;
        out.2 += p.2;
    }
    Ok(out)
}

/// Nondecreasing check with per-step tolerances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneSeries {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// Allowed drop between consecutive samples.
    pub tolerance: Vec<f64>,
    /// Largest `values[k] − values[k+1] − tolerance[k]` (negative when all
    /// steps pass).
    pub worst_excess: f64,
    pub nondecreasing: bool,
}

impl MonotoneSeries {
    pub fn new(x: Vec<f64>, values: Vec<f64>, tolerance: Vec<f64>) -> Self {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..values.len().saturating_sub(1) {
            worst = worst.max(values[k] - values[k + 1] - tolerance[k]);
        }
        let nondecreasing = values.len() < 2 || worst <= 0.0;
        MonotoneSeries { x, values, tolerance, worst_excess: worst, nondecreasing }
    }
}

/// `W_t(μ¹_t, μ²_t)` for two backward heat flows from `t_end` to `t_start`,
/// sampled every `every` snapshots; tolerance `max(1e-3·W, 1e-12)` per step.
pub fn wasserstein_monotonicity(
    slices: &TrajectorySlices,
    mu1_end: &Density,
    mu2_end: &Density,
    t_end: f64,
    t_start: f64,
    every: usize,
) -> Result<MonotoneSeries> {
    let a = backward_heat_evolve(mu1_end, slices, t_end, t_start)?;
    let b = backward_heat_evolve(mu2_end, slices, t_end, t_start)?;
    let n = a.times.len();
    let step = every.max(1);
    let mut picks: Vec<usize> = (0..n).step_by(step).collect();
    if *picks.last().unwrap() != n - 1 {
        picks.push(n - 1);
    }
    let j0 = {
        let traj = slices.trajectory();
        ((t_start - traj.t_start()) / traj.dt()).round() as usize
    };
    let vals: Vec<Result<f64>> = par::map_jobs(&picks, |&k| {
        let s = slices.snapshot(j0 + k)?;
        wasserstein_oracle(&a.density(k, &s)?, &b.density(k, &s)?, &s)
    });
    let values: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    let x: Vec<f64> = picks.iter().map(|&k| a.times[k]).collect();
    let tolerance = values.iter().map(|w| (1e-3 * w).max(1e-12)).collect();
    Ok(MonotoneSeries::new(x, values, tolerance))
}
