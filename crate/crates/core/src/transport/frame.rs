//! Shared discretization of static and adapted transport paths.
//!
//! A path on `M` intervals stores node masses `m_0..m_M` and one potential
//! per interval, located at the interval midpoint. The discrete continuity
//! equation is
//!
//! `(m_{k+1} − m_k) / Δ = A_{ρ̄} φ_{k+½}`,  `ρ̄ = ½(m_k + m_{k+1}) / (w ΔV)`,
//!
//! with `A_c` the weighted operator of the midpoint slice with coefficient
//! `c`. The energy is `Σ_k ½ Δ φᵀ A_{ρ̄} φ`, plus the trapezoidal
//! `½ ∫ R^{H,f} dμ dt` in the adapted case. The curvature source of the
//! adapted continuity equation cancels against the volume change once the
//! equation is written for masses.

use std::sync::Arc;

use crate::error::{GrfError, Result};
use crate::flow::Slice;
use crate::par;

use super::density::{masses_to_rho, RHO_FLOOR};
use super::elliptic::{solve_weighted, SolveStats, Spectral, TOL_ELL};

#[derive(Debug, Clone)]
pub(crate) struct PathFrame {
    pub nodes: Vec<Arc<Slice>>,
    pub mids: Vec<Arc<Slice>>,
    pub step: f64,
    pub adapted: bool,
}

/// Potentials of one mass sequence.
#[derive(Debug, Clone)]
pub(crate) struct Potentials {
    pub phi: Vec<Vec<f64>>,
    pub stats: Vec<SolveStats>,
}

impl PathFrame {
    pub fn intervals(&self) -> usize {
        self.mids.len()
    }

    pub fn dv(&self) -> f64 {
        self.nodes[0].mesh().cell_volume()
    }

    /// Midpoint coefficient `ρ̄` of interval `k`.
    pub fn rho_mid(&self, masses: &[Vec<f64>], k: usize) -> Vec<f64> {
        let mbar: Vec<f64> = par::map_collect(masses[k].len(), |i| 0.5 * (masses[k][i] + masses[k + 1][i]));
        masses_to_rho(&mbar, &self.mids[k].w, self.dv())
    }

    pub fn rho_node(&self, masses: &[Vec<f64>], j: usize) -> Vec<f64> {
        masses_to_rho(&masses[j], &self.nodes[j].w, self.dv())
    }

    /// Whether every interior node density stays at or above the floor.
    pub fn admissible(&self, masses: &[Vec<f64>]) -> bool {
        (0..masses.len()).all(|j| {
            let w = &self.nodes[j].w;
            let dv = self.dv();
            masses[j].iter().zip(w).all(|(m, wi)| *m >= RHO_FLOOR * wi * dv)
        })
    }

    pub fn solve(&self, masses: &[Vec<f64>]) -> Result<Potentials> {
        if masses.len() != self.intervals() + 1 {
            return Err(GrfError::ShapeMismatch("path masses vs grid".into()));
        }
        let ks: Vec<usize> = (0..self.intervals()).collect();
        let out: Vec<Result<(Vec<f64>, SolveStats)>> = par::map_jobs(&ks, |&k| {
            let c = self.rho_mid(masses, k);
            if let Some(node) = c.iter().position(|v| !(*v >= RHO_FLOOR)) {
                return Err(GrfError::BelowFloor { node, value: c[node], t: self.mids[k].t });
            }
            let op = self.mids[k].op.with_coeff(&c)?;
            let b: Vec<f64> = par::map_collect(c.len(), |i| (masses[k + 1][i] - masses[k][i]) / self.step);
            solve_weighted(&op, &b, &Spectral::of(&op), TOL_ELL)
        });
        let mut phi = Vec::with_capacity(ks.len());
        let mut stats = Vec::with_capacity(ks.len());
        for r in out {
            let (p, s) = r?;
            phi.push(p);
            stats.push(s);
        }
        Ok(Potentials { phi, stats })
    }

    /// Kinetic part `φᵀ A_{ρ̄} φ` of each interval.
    pub fn kinetic(&self, masses: &[Vec<f64>], phi: &[Vec<f64>]) -> Result<Vec<f64>> {
        let ks: Vec<usize> = (0..self.intervals()).collect();
        let out: Vec<Result<f64>> = par::map_jobs(&ks, |&k| {
            // 2φᵀb − φᵀAφ equals φᵀAφ at the exact solution and is second
            // order in the solver error.
            let op = self.mids[k].op.with_coeff(&self.rho_mid(masses, k))?;
            let b: Vec<f64> = masses[k + 1].iter().zip(&masses[k]).map(|(a, c)| (a - c) / self.step).collect();
            Ok(2.0 * par::dot(&phi[k], &b) - op.quadratic_form(&phi[k]))
        });
        out.into_iter().collect()
    }

    /// `Σ_x R_j m_j` at every node.
    pub fn curvature_mass(&self, masses: &[Vec<f64>]) -> Vec<f64> {
        (0..masses.len()).map(|j| par::dot(&self.nodes[j].r_hf, &masses[j])).collect()
    }

    pub fn energy(&self, masses: &[Vec<f64>], phi: &[Vec<f64>]) -> Result<f64> {
        let kin = self.kinetic(masses, phi)?;
        let mut e = 0.5 * self.step * kin.iter().sum::<f64>();
        if self.adapted {
            let rm = self.curvature_mass(masses);
            let last = rm.len() - 1;
            let trap: f64 = rm.iter().enumerate().map(|(j, v)| if j == 0 || j == last { 0.5 * v } else { *v }).sum();
            e += 0.5 * self.step * trap;
        }
        Ok(e)
    }

    /// `e_k ≈ |∇φ_{k+½}|²` per node, the discrete derivative of the kinetic
    /// term with respect to the coefficient.
    pub fn grad_sq(&self, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let ks: Vec<usize> = (0..self.intervals()).collect();
        par::map_jobs(&ks, |&k| self.grad_sq_at(k, &phi[k]))
    }

    /// `|∇φ|²` per node for a potential on interval `k`.
    pub fn grad_sq_at(&self, k: usize, phi: &[f64]) -> Vec<f64> {
        let ed = self.mids[k].op.energy_density(phi);
        let w = &self.mids[k].w;
        ed.iter().zip(w).map(|(e, wi)| e / wi).collect()
    }

    /// Hamilton–Jacobi defect at interior node `j`:
    /// `(φ_{j+½} − φ_{j−½})/Δ + ½ avg|∇φ|² − ½ R_j` (last term adapted only).
    pub fn hj_defect(&self, phi: &[Vec<f64>], e: &[Vec<f64>], j: usize) -> Vec<f64> {
        let r = &self.nodes[j].r_hf;
        par::map_collect(phi[j].len(), |i| {
            let mut v = (phi[j][i] - phi[j - 1][i]) / self.step + 0.25 * (e[j - 1][i] + e[j][i]);
            if self.adapted {
                v -= 0.5 * r[i];
            }
            v
        })
    }

    /// Gradient of the energy with respect to the interior masses, projected
    /// onto mass-preserving directions, and the stationarity residual
    /// `max_j ‖r_j − ⟨r_j⟩‖_{L²(μ_j)}` of the defect `r_j`. Adapted paths
    /// report the defect in the rescaled time `s = (t − t')/τ`, a factor `τ²`.
    pub fn gradient(&self, masses: &[Vec<f64>], phi: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let e = self.grad_sq(phi);
        let mut grad = Vec::with_capacity(self.intervals().saturating_sub(1));
        let mut res: f64 = 0.0;
        for j in 1..self.intervals() {
            let r = self.hj_defect(phi, &e, j);
            let m = &masses[j];
            let mt = par::pairwise_sum(m);
            let mean = par::dot(m, &r) / mt;
            let var = par::sum_by(r.len(), |i| m[i] * (r[i] - mean) * (r[i] - mean)) / mt;
            res = res.max(var.sqrt());
            let mut g: Vec<f64> = r.iter().map(|v| -self.step * v).collect();
            zero_sum(&mut g);
            grad.push(g);
        }
        if self.adapted {
            let tau = self.step * self.intervals() as f64;
            res *= tau * tau;
        }
        (grad, res)
    }

    /// `Δ T⁻¹ ⊗ A_ref`: inverse of the kinetic Hessian at a uniform density,
    /// with `T = tridiag(−1, 2, −1)` coupling interior nodes.
    pub fn precondition(&self, v: &[Vec<f64>], reference: &Spectral) -> Vec<Vec<f64>> {
        let nint = v.len();
        if nint == 0 {
            return vec![];
        }
        let av: Vec<Vec<f64>> = par::map_jobs(v, |x| reference.apply(x));
        let n = av[0].len();
        let mut out = vec![vec![0.0; n]; nint];
        // Thomas algorithm, one node at a time; T is the same for every node.
        let mut cp = vec![0.0; nint];
        let mut denom = vec![0.0; nint];
        for j in 0..nint {
            let d = if j == 0 { 2.0 } else { 2.0 + cp[j - 1] };
            denom[j] = d;
            cp[j] = -1.0 / d;
        }
        for i in 0..n {
            let mut dp = vec![0.0; nint];
            for j in 0..nint {
                let prev = if j == 0 { 0.0 } else { dp[j - 1] };
                dp[j] = (av[j][i] + prev) / denom[j];
            }
            let mut y = dp[nint - 1];
            out[nint - 1][i] = y;
            for j in (0..nint - 1).rev() {
                y = dp[j] - cp[j] * y;
                out[j][i] = y;
            }
        }
        for o in out.iter_mut() {
            for x in o.iter_mut() {
                *x *= self.step;
            }
            zero_sum(o);
        }
        out
    }

    /// Spectral reference operator at the uniform density of the middle slice.
    pub fn reference(&self) -> Spectral {
        let mid = &self.mids[self.intervals() / 2];
        let rho_ref = 1.0 / mid.weighted_volume();
        let kappa: Vec<f64> = mid.op.mean_face_coeff().iter().map(|k| k * rho_ref).collect();
        Spectral::new(*mid.mesh(), &kappa)
    }

    /// Linear interpolation of the endpoint masses.
    pub fn linear_masses(&self, m0: &[f64], m1: &[f64]) -> Vec<Vec<f64>> {
        let n = self.intervals();
        (0..=n)
            .map(|j| {
                let th = j as f64 / n as f64;
                m0.iter().zip(m1).map(|(a, b)| (1.0 - th) * a + th * b).collect()
            })
            .collect()
    }
}

pub(crate) fn zero_sum(v: &mut [f64]) {
    let mean = par::pairwise_sum(v) / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Potential extrapolated from the two nearest midpoints to node `j`.
pub(crate) fn phi_at_node(phi: &[Vec<f64>], j: usize) -> Vec<f64> {
    let m = phi.len();
    if m == 1 {
        return phi[0].clone();
    }
    let comb = |a: &[f64], b: &[f64], ca: f64, cb: f64| a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect();
    if j == 0 {
        comb(&phi[0], &phi[1], 1.5, -0.5)
    } else if j == m {
        comb(&phi[m - 1], &phi[m - 2], 1.5, -0.5)
    } else {
        comb(&phi[j - 1], &phi[j], 0.5, 0.5)
    }
}
