use crate::error::{GrfError, Result};
use crate::geometry::{laplacian_nodal, grad_dot, ricci_hf_geo, scalar_hf_geo, Curvature};
use crate::par;

use super::FlowTrajectory;

/// Residual time series of an evolution identity, evaluated at interior
/// snapshots with centered time differences.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowCheck {
    pub times: Vec<f64>,
    /// Max-norm of the pointwise residual at each interior time.
    pub residuals: Vec<f64>,
    /// Max-norm of the largest term at each time, for relative reporting.
    pub scales: Vec<f64>,
}

impl FlowCheck {
    pub fn max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_scale(&self) -> f64 {
        self.scales.iter().copied().fold(0.0, f64::max)
    }
}

fn need_three(traj: &FlowTrajectory) -> Result<()> {
    if traj.len() < 3 {
        return Err(GrfError::TooFewSnapshots { needed: 3, got: traj.len() });
    }
    Ok(())
}

/// `∂_t(e^{-f}√det g) + R^{H,f} e^{-f}√det g` per node.
pub fn verify_volume_identity(traj: &FlowTrajectory) -> Result<FlowCheck> {
    need_three(traj)?;
    let conv = traj.convention();
    let slices: Vec<_> = par::map_jobs(traj.snapshots(), |s| s.slice(conv));
    let slices: Vec<_> = slices.into_iter().collect::<Result<_>>()?;
    let dt = traj.dt();
    let mut out = FlowCheck { times: vec![], residuals: vec![], scales: vec![] };
    for j in 1..traj.len() - 1 {
        let (a, b, c) = (&slices[j - 1], &slices[j], &slices[j + 1]);
        let res: Vec<f64> = (0..b.w.len()).map(|i| (c.w[i] - a.w[i]) / (2.0 * dt) + b.r_hf[i] * b.w[i]).collect();
        let scale: Vec<f64> = (0..b.w.len()).map(|i| b.r_hf[i] * b.w[i]).collect();
        out.times.push(traj.snapshot(j).t);
        out.residuals.push(par::max_abs(&res));
        out.scales.push(par::max_abs(&scale));
    }
    Ok(out)
}

/// `∂_t R^{H,f} − Δ_f R^{H,f} − 2|Rc^{H,f}|²` per node.
pub fn verify_scalar_evolution(traj: &FlowTrajectory) -> Result<FlowCheck> {
    need_three(traj)?;
    let conv = traj.convention();
    let data: Vec<(Vec<f64>, Vec<f64>)> = par::map_jobs(traj.snapshots(), |s| {
        let geo = s.geometry();
        let curv = Curvature::of(&geo);
        let r = scalar_hf_geo(conv, &geo, &curv, &s.h, s.f.values());
        let rc2 = ricci_hf_geo(conv, &geo, &curv, &s.h, s.f.values()).norm_sq(conv, &geo);
        let lap = laplacian_nodal(&geo, &r);
        let gd = grad_dot(&geo, s.f.values(), &r);
        let rhs: Vec<f64> = (0..r.len()).map(|i| lap[i] - gd[i] + 2.0 * rc2[i]).collect();
        (r, rhs)
    });
    let dt = traj.dt();
    let mut out = FlowCheck { times: vec![], residuals: vec![], scales: vec![] };
    for j in 1..traj.len() - 1 {
        let (ra, rc) = (&data[j - 1].0, &data[j + 1].0);
        let rhs = &data[j].1;
        let res: Vec<f64> = (0..rhs.len()).map(|i| (rc[i] - ra[i]) / (2.0 * dt) - rhs[i]).collect();
        out.times.push(traj.snapshot(j).t);
        out.residuals.push(par::max_abs(&res));
        out.scales.push(par::max_abs(rhs));
    }
    Ok(out)
}
