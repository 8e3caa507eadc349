use std::sync::Arc;

use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::field::ScalarField;
use crate::flow::Slice;
use crate::par;

use super::density::{rho_to_masses, Density};
use super::descent::{descend, DescentOptions};
use super::elliptic::SolveStats;
use super::frame::{phi_at_node, PathFrame};

/// Path `s ↦ μ(s)` on a fixed time slice, `s ∈ [0, 1]` split into `m`
/// equal intervals; potentials live at interval midpoints.
#[derive(Debug, Clone)]
pub struct MeasurePath {
    slice: Arc<Slice>,
    masses: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    stats: Vec<SolveStats>,
}

impl MeasurePath {
    pub(crate) fn frame_for(slice: &Arc<Slice>, m: usize) -> PathFrame {
        PathFrame { nodes: vec![slice.clone(); m + 1], mids: vec![slice.clone(); m], step: 1.0 / m as f64, adapted: false }
    }

    pub(crate) fn from_masses(slice: Arc<Slice>, masses: Vec<Vec<f64>>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(GrfError::InvalidArgument("path needs at least two nodes".into()));
        }
        let frame = Self::frame_for(&slice, masses.len() - 1);
        let pot = frame.solve(&masses)?;
        Ok(MeasurePath { slice, masses, phi: pot.phi, stats: pot.stats })
    }

    /// Solves the continuity equation between consecutive densities.
    pub fn from_densities(slice: Arc<Slice>, rhos: &[ScalarField]) -> Result<Self> {
        let dv = slice.mesh().cell_volume();
        let masses = rhos
            .iter()
            .map(|r| {
                slice.mesh().check_same(r.mesh())?;
                Ok(rho_to_masses(r.values(), &slice.w, dv))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_masses(slice, masses)
    }

    pub fn slice(&self) -> &Slice {
        &self.slice
    }

    pub fn intervals(&self) -> usize {
        self.phi.len()
    }

    /// Parameter values of the nodes.
    pub fn s_grid(&self) -> Vec<f64> {
        let m = self.intervals();
        (0..=m).map(|j| j as f64 / m as f64).collect()
    }

    pub fn density(&self, j: usize) -> Result<Density> {
        Density::from_masses(&self.masses[j], &self.slice)
    }

    pub fn masses(&self) -> &[Vec<f64>] {
        &self.masses
    }

    /// Potential on interval `k` (at `s = (k + ½)/m`).
    pub fn phi_mid(&self, k: usize) -> &[f64] {
        &self.phi[k]
    }

    pub fn phi_mids(&self) -> &[Vec<f64>] {
        &self.phi
    }

    /// Potential at node `j`: average of the adjacent midpoints, linear
    /// extrapolation at the ends.
    pub fn phi_node(&self, j: usize) -> Vec<f64> {
        phi_at_node(&self.phi, j)
    }

    pub fn solve_stats(&self) -> &[SolveStats] {
        &self.stats
    }

    pub(crate) fn frame(&self) -> PathFrame {
        Self::frame_for(&self.slice, self.intervals())
    }

    /// Stationarity residual of the Benamou–Brenier first variation.
    pub fn bb_residual(&self) -> f64 {
        self.frame().gradient(&self.masses, &self.phi).1
    }
}

/// `E = ½ ∫₀¹ ∫ |∇φ|² dμ ds` with midpoint quadrature in `s`.
pub fn energy_e(path: &MeasurePath) -> Result<f64> {
    path.frame().energy(&path.masses, &path.phi)
}

#[derive(Debug, Clone)]
pub struct BbOutcome {
    pub path: MeasurePath,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Benamou–Brenier minimization between `mu0` and `mu1` on `m` intervals,
/// starting from linear interpolation of the masses.
pub fn bb_minimize(mu0: &Density, mu1: &Density, slice: Arc<Slice>, m: usize, opts: DescentOptions) -> Result<BbOutcome> {
    if m < 2 {
        return Err(GrfError::InvalidArgument(format!("need at least 2 intervals, got {m}")));
    }
    let frame = MeasurePath::frame_for(&slice, m);
    let init = frame.linear_masses(&mu0.masses(&slice), &mu1.masses(&slice));
    let out = descend(&frame, init, opts)?;
    let path = MeasurePath { slice, masses: out.masses, phi: out.pot.phi, stats: out.pot.stats };
    Ok(BbOutcome { path, energy: out.energy, residual: out.residual, iterations: out.iterations, converged: out.converged })
}

/// Terms of the static-derivative identity at one interior node `s_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticDerivativeCheck {
    pub s: f64,
    /// Centered `d/ds ∫⟨∇φ,∇ρ⟩ e^{-f}dV`.
    pub lhs: f64,
    pub transport_term: f64,
    pub hessian_term: f64,
    pub ricci_term: f64,
    pub residual: f64,
}

/// `d/ds ∫⟨∇φ,∇ρ⟩ e^{-f}dV = ∫[−(∂_sφ + ½|∇φ|²)Δ_fρ + |∇²φ|²ρ + Rc^f(∇φ,∇φ)ρ] e^{-f}dV`
/// along a static path, at every interior node.
pub fn verify_static_derivative(path: &MeasurePath) -> Result<Vec<StaticDerivativeCheck>> {
    use crate::geometry::{gradient, hessian, Curvature};
    use crate::linalg::{bilinear, sym_inner};

    let slice = &path.slice;
    let geo = &slice.geo;
    let mesh = *slice.mesh();
    let d = mesh.dim();
    let dv = mesh.cell_volume();
    let m = path.intervals();
    let ds = 1.0 / m as f64;
    let frame = path.frame();
    // Φ_k = φᵀ A₁ ρ̄ at the midpoints.
    let phi_dot: Vec<f64> = (0..m)
        .map(|k| {
            let rho = frame.rho_mid(&path.masses, k);
            par::dot(&path.phi[k], &slice.op.apply_a(&rho))
        })
        .collect();
    let curv = Curvature::of(geo);
    let hf = hessian(geo, slice.f.values());
    let rcf: Vec<_> = (0..mesh.len())
        .map(|i| {
            let mut t = *curv.rc.at(i);
            let h = hf.at(i);
            for a in 0..d {
                for b in 0..d {
                    t[a][b] += h[a][b];
                }
            }
            t
        })
        .collect();
    let e = frame.grad_sq(&path.phi);
    let mut out = Vec::new();
    for j in 1..m {
        let rho = frame.rho_node(&path.masses, j);
        let phi = phi_at_node(&path.phi, j);
        let lap_f: Vec<f64> = slice.op.apply_l(&rho);
        let grad = gradient(geo, &phi);
        let hess = hessian(geo, &phi);
        let w = &slice.w;
        let transport = -par::sum_by(mesh.len(), |i| {
            let dsphi = (path.phi[j][i] - path.phi[j - 1][i]) / ds;
            let half_g2 = 0.25 * (e[j - 1][i] + e[j][i]);
            (dsphi + half_g2) * lap_f[i] * w[i]
        }) * dv;
        let hess_t = par::sum_by(mesh.len(), |i| {
            let gi = geo.ginv(i);
            sym_inner(gi, hess.at(i), hess.at(i), d) * rho[i] * w[i]
        }) * dv;
        let ricci_t = par::sum_by(mesh.len(), |i| bilinear(&rcf[i], &grad[i], &grad[i], d) * rho[i] * w[i]) * dv;
        let lhs = (phi_dot[j] - phi_dot[j - 1]) / ds;
        out.push(StaticDerivativeCheck {
            s: j as f64 * ds,
            lhs,
            transport_term: transport,
            hessian_term: hess_t,
            ricci_term: ricci_t,
            residual: lhs - (transport + hess_t + ricci_t),
        });
    }
    Ok(out)
}
